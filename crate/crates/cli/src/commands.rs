use std::fs::File;
use std::path::Path;

use interfero::correlation::{correlation_dataset, haar_ensemble, rmt_prediction, summary, MomentSummary, SummaryRecord};
use interfero::interference::{
    gram_from_wave_packets, hom_dip_curve, transition_probability, transition_probability_partial, WavePacketTrain,
    PARTIAL_MAX_N,
};
use interfero::rng::derive_seed;
use interfero::sampling::{
    classify, enumerate_distribution, estimate_correlations_with_errors, sample_distinguishable_direct, sample_exact,
    SampleBatch,
};
use interfero::suppression::{certify_law, port_subsets, CertificationRecord};
use interfero::tensor::{
    balanced_beamsplitter, fourier_unitary, haar_random_unitary, identity_unitary, read_unitary, unitary_to_json,
    ModePermutation, UnitaryMatrix,
};
use interfero::ParticleClass;
use serde_json::{json, Map, Value};

use crate::args::{parse_grid, parse_ports, Kind, OutputArgs, Setup};
use crate::output::{emit, ports, pretty, Format, Table};
use crate::CliError;

fn finish(text: String, out: &OutputArgs) -> Result<(), CliError> {
    emit(&text, out.out.as_deref())
}

fn summary_cells(s: &MomentSummary) -> Vec<Value> {
    vec![json!(s.m1), json!(s.m2), json!(s.nm), json!(s.cv)]
}

/// The unitary and input ports described by `setup`.
fn resolve(setup: &Setup) -> Result<(UnitaryMatrix, Vec<usize>), CliError> {
    check_tolerance("--tol-unitary", setup.tol_unitary)?;
    let u = match &setup.unitary {
        Some(path) => {
            let u = read_unitary(path, setup.tol_unitary)?;
            if let Some(m) = setup.modes {
                if m != u.modes() {
                    return Err(CliError::Usage(format!("--modes {m} disagrees with the {}-mode unitary file", u.modes())));
                }
            }
            u
        }
        None => {
            let m = setup.modes.ok_or_else(|| CliError::Usage("--modes (or --unitary) is required".into()))?;
            haar_random_unitary(m, setup.seed)?
        }
    };
    Ok((u, resolve_inputs(setup)?))
}

fn resolve_inputs(setup: &Setup) -> Result<Vec<usize>, CliError> {
    match (&setup.inputs, setup.particles) {
        (Some(spec), n) => {
            let inputs = parse_ports(spec)?;
            if let Some(n) = n.filter(|&n| n != inputs.len()) {
                return Err(CliError::Usage(format!("--particles {n} disagrees with {} input ports", inputs.len())));
            }
            Ok(inputs)
        }
        (None, Some(n)) if n >= 1 => Ok((1..=n).collect()),
        _ => Err(CliError::Usage("give --particles or --inputs".into())),
    }
}

pub fn hom(grid: &str, out: &OutputArgs) -> Result<(), CliError> {
    let grid = parse_grid(grid)?;
    let b = hom_dip_curve(&grid, ParticleClass::Boson)?;
    let f = hom_dip_curve(&grid, ParticleClass::Fermion)?;
    let mut t = Table::new(&["dw_dt", "p_boson", "p_fermion"]);
    for k in 0..grid.len() {
        t.push(vec![json!(grid[k]), json!(b[k]), json!(f[k])]);
    }
    finish(t.render(out.format.unwrap_or(Format::Csv)), out)
}

/// First ports, last ports and an evenly strided set.
fn default_output_sets(m: usize, n: usize) -> Vec<Vec<usize>> {
    let stride = (m / n).max(1);
    let mut sets = vec![(1..=n).collect(), (m - n + 1..=m).collect(), (0..n).map(|k| 1 + k * stride).collect::<Vec<_>>()];
    sets.sort();
    sets.dedup();
    sets
}

pub fn dist_scan(setup: &Setup, grid: &str, outputs: &[String], out: &OutputArgs) -> Result<(), CliError> {
    let grid = parse_grid(grid)?;
    let (u, inputs) = resolve(setup)?;
    let (m, n) = (u.modes(), inputs.len());
    if n > PARTIAL_MAX_N {
        return Err(CliError::Usage(format!("dist-scan handles at most {PARTIAL_MAX_N} particles, got {n}")));
    }
    if n > m {
        return Err(CliError::Usage(format!("{n} particles do not fit in {m} modes")));
    }
    let sets = if outputs.is_empty() {
        default_output_sets(m, n)
    } else {
        outputs.iter().map(|s| parse_ports(s)).collect::<Result<Vec<_>, _>>()?
    };
    let dist: Vec<f64> = sets
        .iter()
        .map(|o| transition_probability(&u, &inputs, o, ParticleClass::Distinguishable))
        .collect::<Result<_, _>>()?;
    let mut t = Table::new(&["dw_dt", "outputs", "p_boson", "p_fermion", "p_distinguishable"]);
    for &x in &grid {
        let train = WavePacketTrain {
            arrival_times: (0..n).map(|j| j as f64 * x).collect(),
            central_frequency: 0.0,
            bandwidth: 1.0,
        };
        let gram = gram_from_wave_packets(&train)?;
        for (o, pd) in sets.iter().zip(&dist) {
            let pb = transition_probability_partial(&u, &inputs, o, &gram, ParticleClass::Boson)?;
            let pf = transition_probability_partial(&u, &inputs, o, &gram, ParticleClass::Fermion)?;
            t.push(vec![json!(x), ports(o), json!(pb), json!(pf), json!(pd)]);
        }
    }
    finish(t.render(out.format.unwrap_or(Format::Csv)), out)
}

pub fn scatter(setup: &Setup, trials: usize, classes: &[ParticleClass], out: &OutputArgs) -> Result<(), CliError> {
    if setup.unitary.is_some() {
        return Err(CliError::Usage("scatter draws its own unitaries; --unitary is not accepted".into()));
    }
    let m = setup.modes.ok_or_else(|| CliError::Usage("--modes is required".into()))?;
    let inputs = resolve_inputs(setup)?;
    let classes = if classes.is_empty() { ParticleClass::ALL.to_vec() } else { classes.to_vec() };
    let rows = haar_ensemble(m, &inputs, &classes, trials, setup.seed)?;
    let mut t = Table::new(&["source", "trial", "class", "m1", "m2", "NM", "CV"]);
    for (trial, row) in rows.iter().enumerate() {
        for (class, s) in classes.iter().zip(row) {
            let mut cells = vec![json!("haar"), json!(trial), json!(class.name())];
            cells.extend(summary_cells(s));
            t.push(cells);
        }
    }
    for class in &classes {
        let p = rmt_prediction(m, inputs.len(), *class)?;
        let mut cells = vec![json!("rmt"), Value::Null, json!(class.name())];
        cells.extend(summary_cells(&p.summary));
        t.push(cells);
    }
    finish(t.render(out.format.unwrap_or(Format::Csv)), out)
}

fn check_tolerance(flag: &str, tol: f64) -> Result<(), CliError> {
    if tol.is_finite() && tol >= 0.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{flag} must be a finite value >= 0, got {tol}")))
    }
}

fn largest_port(text: &str) -> usize {
    text.split(|c: char| !c.is_ascii_digit())
        .filter_map(|t| t.parse::<usize>().ok())
        .max()
        .unwrap_or(0)
}

pub fn suppress(
    permutation: &str,
    modes: Option<usize>,
    inputs: &str,
    class: ParticleClass,
    extended: bool,
    tol: f64,
    out: &OutputArgs,
) -> Result<(), CliError> {
    check_tolerance("--tol-suppression", tol)?;
    let inputs = parse_ports(inputs)?;
    let m = modes.unwrap_or_else(|| largest_port(permutation).max(inputs.iter().copied().max().unwrap_or(0)));
    let perm = ModePermutation::parse_cycles(permutation, m)?;
    let mut records = Vec::new();
    for outputs in port_subsets(m, inputs.len()) {
        let cert = certify_law(&perm, &inputs, &outputs, class, extended, tol)?;
        records.push((CertificationRecord::new(&perm, &inputs, &outputs, &cert), cert.passed()));
    }
    let flagged = records.iter().filter(|(r, _)| r.predicted).count();
    let failed = records.iter().filter(|(_, ok)| !ok).count();
    let text = match out.format.unwrap_or(Format::Json) {
        Format::Json => {
            let list: Vec<Value> = records.iter().map(|(r, _)| serde_json::to_value(r).expect("records serialize")).collect();
            pretty(&Value::Array(list))
        }
        Format::Csv => {
            let mut t = Table::new(&["permutation", "inputs", "outputs", "law", "predicted", "probability"]);
            for (r, _) in &records {
                t.push(vec![
                    json!(r.permutation),
                    ports(&r.inputs),
                    ports(&r.outputs),
                    serde_json::to_value(r.law).expect("laws serialize"),
                    json!(r.predicted),
                    json!(r.probability),
                ]);
            }
            t.render(Format::Csv)
        }
    };
    finish(text, out)?;
    eprintln!("{} events, {flagged} predicted suppressed, {failed} failed certification", records.len());
    if failed > 0 {
        return Err(CliError::Certification(format!("{failed} predicted-suppressed events have non-zero probability")));
    }
    Ok(())
}

/// Samples from the exact distribution; distinguishable particles are routed directly.
fn draw(u: &UnitaryMatrix, inputs: &[usize], class: ParticleClass, seed: u64, count: usize) -> Result<SampleBatch, CliError> {
    Ok(match class {
        ParticleClass::Distinguishable => sample_distinguishable_direct(u, inputs, seed, count)?,
        _ => sample_exact(&enumerate_distribution(u, inputs, class, None)?, seed, count)?,
    })
}

pub fn validate(
    samples: Option<&Path>,
    exact: bool,
    setup: &Setup,
    class: Option<ParticleClass>,
    count: usize,
    out: &OutputArgs,
) -> Result<(), CliError> {
    let mut report = Map::new();
    let (m, n, s, errors) = if let Some(path) = samples {
        let file = File::open(path).map_err(|e| CliError::io(path, e))?;
        let batch = SampleBatch::read_csv(file, None)?;
        let est = estimate_correlations_with_errors(&batch)?;
        report.insert("source".into(), json!("file"));
        (batch.m, batch.n, summary(&est.dataset), Some((est.count, est.standard_errors)))
    } else {
        let (u, inputs) = resolve(setup)?;
        let class = class.unwrap_or(ParticleClass::Boson);
        report.insert("class".into(), json!(class.name()));
        if exact {
            report.insert("source".into(), json!("exact"));
            (u.modes(), inputs.len(), summary(&correlation_dataset(&u, &inputs, class, None)?), None)
        } else {
            let batch = draw(&u, &inputs, class, derive_seed(setup.seed, 1), count)?;
            let est = estimate_correlations_with_errors(&batch)?;
            report.insert("source".into(), json!("generated"));
            (batch.m, batch.n, summary(&est.dataset), Some((est.count, est.standard_errors)))
        }
    };
    let verdict = classify(&s, m, n)?;
    report.insert("m".into(), json!(m));
    report.insert("n".into(), json!(n));
    report.insert("label".into(), json!(verdict.label.name()));
    report.insert("tie".into(), json!(verdict.tie));
    let distances: Map<String, Value> = verdict.distances.iter().map(|(c, d)| (c.name().to_string(), json!(d))).collect();
    report.insert("distances".into(), Value::Object(distances));
    report.insert("m1".into(), json!(s.m1));
    report.insert("m2".into(), json!(s.m2));
    report.insert("NM".into(), json!(s.nm));
    report.insert("CV".into(), json!(s.cv));
    match errors {
        Some((count, se)) => {
            let mean = se.iter().sum::<f64>() / se.len() as f64;
            let max = se.iter().copied().fold(0.0, f64::max);
            report.insert("samples".into(), json!(count));
            report.insert("standard_error_mean".into(), json!(mean));
            report.insert("standard_error_max".into(), json!(max));
        }
        None => {
            report.insert("samples".into(), Value::Null);
        }
    }
    let text = match out.format.unwrap_or(Format::Json) {
        Format::Json => pretty(&Value::Object(report)),
        Format::Csv => {
            let mut t = Table::new(&["key", "value"]);
            for (k, v) in report {
                match v {
                    Value::Object(inner) => {
                        for (k2, v2) in inner {
                            t.push(vec![json!(format!("{k}.{k2}")), v2]);
                        }
                    }
                    v => t.push(vec![json!(k), v]),
                }
            }
            t.render(Format::Csv)
        }
    };
    finish(text, out)
}

pub fn unitary(modes: usize, kind: Kind, seed: u64, out: Option<&Path>) -> Result<(), CliError> {
    let u = match kind {
        Kind::Haar => haar_random_unitary(modes, seed)?,
        Kind::Fourier => fourier_unitary(modes)?,
        Kind::Identity => identity_unitary(modes)?,
        Kind::Beamsplitter if modes == 2 => balanced_beamsplitter(),
        Kind::Beamsplitter => return Err(CliError::Usage("the beamsplitter has 2 modes".into())),
    };
    let mut text = unitary_to_json(&u);
    text.push('\n');
    emit(&text, out)
}

pub fn corr(setup: &Setup, class: ParticleClass, summary_only: bool, out: &OutputArgs) -> Result<(), CliError> {
    let (u, inputs) = resolve(setup)?;
    let d = correlation_dataset(&u, &inputs, class, None)?;
    let text = if summary_only {
        pretty(&serde_json::to_value(SummaryRecord::of(&d)).expect("records serialize"))
    } else {
        match out.format.unwrap_or(Format::Csv) {
            Format::Csv => {
                let mut buf = Vec::new();
                d.write_csv(&mut buf)?;
                String::from_utf8(buf).expect("csv is utf-8")
            }
            Format::Json => {
                let list: Vec<Value> = d.pairs().map(|(a, b, v)| json!({"o1": a, "o2": b, "value": v})).collect();
                pretty(&Value::Array(list))
            }
        }
    };
    finish(text, out)
}

pub fn sample(setup: &Setup, class: ParticleClass, count: usize, out: &OutputArgs) -> Result<(), CliError> {
    let (u, inputs) = resolve(setup)?;
    let batch = draw(&u, &inputs, class, derive_seed(setup.seed, 1), count)?;
    let text = match out.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut buf = Vec::new();
            batch.write_csv(&mut buf)?;
            String::from_utf8(buf).expect("csv is utf-8")
        }
        Format::Json => {
            let rows: Vec<Value> = batch.samples.iter().map(|s| json!(s.counts())).collect();
            pretty(&json!({"m": batch.m, "n": batch.n, "seed": setup.seed, "class": class.name(), "samples": rows}))
        }
    };
    finish(text, out)
}

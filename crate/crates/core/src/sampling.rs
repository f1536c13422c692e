//! Exact output distributions, seeded samplers, correlation estimates from
//! samples and classification against the random-matrix predictions.

use std::io::{Read, Write};

use rand::Rng as _;
use rayon::prelude::*;

use crate::correlation::{pair_count, rmt_prediction, CorrelationDataset, MomentSummary};
use crate::error::{Error, Result};
use crate::interference::{transition_probability, transition_probability_partial, GramMatrix, ParticleClass};
use crate::matrix_functions::OccupationVector;
use crate::rng;
use crate::tensor::{distinct_ports, UnitaryMatrix};

/// Largest number of output patterns [`enumerate_distribution`] will visit.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;
/// Samples drawn per random substream.
const SAMPLE_BLOCK: usize = 4096;
const MASS_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct OutputDistribution {
    pub m: usize,
    pub n: usize,
    pub class: ParticleClass,
    pub gram: Option<GramMatrix>,
    /// Ordered by the sorted port list, so `(2,0)` precedes `(1,1)` precedes `(0,2)`.
    pub entries: Vec<(OccupationVector, f64)>,
    pub total_mass: f64,
}

impl OutputDistribution {
    pub fn probability(&self, occupation: &OccupationVector) -> Option<f64> {
        self.entries.iter().find(|(o, _)| o == occupation).map(|(_, p)| *p)
    }

    pub fn is_normalized(&self) -> bool {
        (self.total_mass - 1.0).abs() <= MASS_TOL
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r.saturating_mul(n - i) / (i + 1);
    }
    r
}

/// Nondecreasing (`repeat`) or increasing port lists of length `n`, in
/// lexicographic order.
fn port_lists(m: usize, n: usize, repeat: bool) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, n: usize, repeat: bool, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for p in start..=m {
            cur.push(p);
            rec(if repeat { p } else { p + 1 }, m, n, repeat, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(1, m, n, repeat, &mut Vec::with_capacity(n), &mut out);
    out
}

/// Every output pattern with its exact probability. With `gram`, only
/// collision-free patterns are visited and `total_mass` may fall short of 1.
pub fn enumerate_distribution(
    u: &UnitaryMatrix,
    inputs: &[usize],
    class: ParticleClass,
    gram: Option<&GramMatrix>,
) -> Result<OutputDistribution> {
    if class == ParticleClass::ThermalBoson {
        return Err(Error::UnsupportedClass { class, operation: "enumerate_distribution" });
    }
    let m = u.modes();
    let n = distinct_ports(inputs, m)?.len();
    let repeat = gram.is_none() && class != ParticleClass::Fermion;
    let (mm, nn) = (m as u128, n as u128);
    let count = if repeat { binomial(mm + nn - 1, nn) } else if n > m { 0 } else { binomial(mm, nn) };
    if count > ENUMERATION_LIMIT {
        return Err(Error::SizeLimit(format!("{count} output patterns exceed the limit of {ENUMERATION_LIMIT}")));
    }
    let lists = port_lists(m, n, repeat);
    let probs = lists
        .par_iter()
        .map(|outs| match gram {
            Some(g) => transition_probability_partial(u, inputs, outs, g, class),
            None => transition_probability(u, inputs, outs, class),
        })
        .collect::<Result<Vec<f64>>>()?;
    let total_mass: f64 = probs.iter().sum();
    if gram.is_none() && (total_mass - 1.0).abs() > MASS_TOL {
        return Err(Error::Numerical(format!("{class} distribution has total mass {total_mass}")));
    }
    let entries = lists
        .iter()
        .zip(probs)
        .map(|(outs, p)| Ok((OccupationVector::from_ports(outs, m)?, p)))
        .collect::<Result<Vec<_>>>()?;
    Ok(OutputDistribution { m, n, class, gram: gram.cloned(), entries, total_mass })
}

/// Occupation patterns drawn from one source.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    /// `None` when read from a file.
    pub seed: Option<u64>,
    pub m: usize,
    pub n: usize,
    pub samples: Vec<OccupationVector>,
}

impl SampleBatch {
    pub fn new(seed: Option<u64>, m: usize, n: usize, samples: Vec<OccupationVector>) -> Result<Self> {
        for s in &samples {
            if s.modes() != m {
                return Err(Error::LengthMismatch { expected: m, found: s.modes() });
            }
            if s.particles() != n {
                return Err(Error::InvalidParameter(format!("sample has {} particles, expected {n}", s.particles())));
            }
        }
        Ok(Self { seed, m, n, samples })
    }

    pub fn count(&self) -> usize {
        self.samples.len()
    }

    /// One row per sample, `m` comma-separated counts, no header.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        for s in &self.samples {
            w.write_record(s.counts().iter().map(|c| c.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads rows of counts; `n` defaults to the first row's total.
    pub fn read_csv<R: Read>(reader: R, n: Option<usize>) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
        let mut samples = Vec::new();
        for rec in r.deserialize() {
            let counts: Vec<usize> = rec?;
            samples.push(OccupationVector::new(counts)?);
        }
        let first = samples.first().ok_or_else(|| Error::InvalidParameter("sample file is empty".into()))?;
        let m = first.modes();
        let n = n.unwrap_or(first.particles());
        Self::new(None, m, n, samples)
    }
}

/// Draws `count` patterns in blocks, block `b` using substream `b` of `seed`.
fn blocked_draws<F>(seed: u64, count: usize, draw: F) -> Vec<OccupationVector>
where
    F: Fn(&mut rng::Rng) -> OccupationVector + Sync,
{
    let blocks = count.div_ceil(SAMPLE_BLOCK);
    let chunks: Vec<Vec<OccupationVector>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut r = rng::substream(seed, b as u64);
            let len = SAMPLE_BLOCK.min(count - b * SAMPLE_BLOCK);
            (0..len).map(|_| draw(&mut r)).collect()
        })
        .collect();
    chunks.into_iter().flatten().collect()
}

/// First index whose cumulative weight exceeds `x`.
fn search(cdf: &[f64], x: f64) -> usize {
    cdf.partition_point(|&c| c <= x).min(cdf.len() - 1)
}

/// Inverse-CDF sampling from an enumerated, normalized distribution.
pub fn sample_exact(dist: &OutputDistribution, seed: u64, count: usize) -> Result<SampleBatch> {
    if !dist.is_normalized() {
        return Err(Error::InvalidParameter(format!(
            "cannot sample an unnormalized distribution (total mass {})",
            dist.total_mass
        )));
    }
    let mut acc = 0.0;
    let cdf: Vec<f64> = dist.entries.iter().map(|(_, p)| {
        acc += p;
        acc
    }).collect();
    let total = acc;
    let samples = blocked_draws(seed, count, |r| {
        let x = r.random::<f64>() * total;
        dist.entries[search(&cdf, x)].0.clone()
    });
    SampleBatch::new(Some(seed), dist.m, dist.n, samples)
}

/// Distinguishable particles routed one at a time: the particle entering
/// `i_j` leaves through `k` with probability `|U_{k i_j}|^2`.
pub fn sample_distinguishable_direct(u: &UnitaryMatrix, inputs: &[usize], seed: u64, count: usize) -> Result<SampleBatch> {
    let m = u.modes();
    let cols = distinct_ports(inputs, m)?;
    let cdfs: Vec<Vec<f64>> = cols
        .iter()
        .map(|&c| {
            let mut acc = 0.0;
            (0..m).map(|k| {
                acc += u.at(k, c).norm_sqr();
                acc
            }).collect()
        })
        .collect();
    let samples = blocked_draws(seed, count, |r| {
        let mut counts = vec![0; m];
        for cdf in &cdfs {
            let x = r.random::<f64>() * cdf[m - 1];
            counts[search(cdf, x)] += 1;
        }
        OccupationVector::new(counts).expect("m >= 1")
    });
    SampleBatch::new(Some(seed), m, cols.len(), samples)
}

/// Plug-in correlation estimates with their standard errors.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationEstimate {
    pub dataset: CorrelationDataset,
    /// Same pair order as the dataset values.
    pub standard_errors: Vec<f64>,
    pub count: usize,
}

pub fn estimate_correlations(batch: &SampleBatch) -> Result<CorrelationDataset> {
    Ok(estimate_correlations_with_errors(batch)?.dataset)
}

/// `C_hat = mean(n_a n_b) - mean(n_a) mean(n_b)`, biased by `O(1/count)`.
/// The standard error is that of the mean of the centered products.
pub fn estimate_correlations_with_errors(batch: &SampleBatch) -> Result<CorrelationEstimate> {
    let count = batch.count();
    if count < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 samples to estimate correlations, got {count}")));
    }
    let m = batch.m;
    let cols: Vec<Vec<f64>> =
        (0..m).map(|k| batch.samples.iter().map(|s| s.counts()[k] as f64).collect()).collect();
    let means: Vec<f64> = cols.iter().map(|c| c.iter().sum::<f64>() / count as f64).collect();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|a| (a + 1..m).map(move |b| (a, b))).collect();
    let stats: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let (x, y) = (&cols[a], &cols[b]);
            let (mx, my) = (means[a], means[b]);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for i in 0..count {
                let z = (x[i] - mx) * (y[i] - my);
                sum += z;
                sum_sq += z * z;
            }
            let c = sum / count as f64;
            let var = (sum_sq / count as f64 - c * c).max(0.0) * count as f64 / (count - 1) as f64;
            (c, (var / count as f64).sqrt())
        })
        .collect();
    debug_assert_eq!(stats.len(), pair_count(m));
    let (values, standard_errors) = stats.into_iter().unzip();
    let dataset = CorrelationDataset::new(m, batch.n, None, None, values)?;
    Ok(CorrelationEstimate { dataset, standard_errors, count })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub label: ParticleClass,
    /// Distance to each prediction with a defined CV, in the fixed class order.
    pub distances: Vec<(ParticleClass, f64)>,
    /// True when another class is exactly as close as the label.
    pub tie: bool,
}

/// Nearest point in the `(NM, CV)` plane; the first candidate wins ties.
pub fn classify_point(nm: f64, cv: f64, candidates: &[(ParticleClass, f64, f64)]) -> Result<Classification> {
    let distances: Vec<(ParticleClass, f64)> =
        candidates.iter().map(|&(c, pn, pc)| (c, (nm - pn).hypot(cv - pc))).collect();
    let &(label, best) = distances
        .iter()
        .fold(None, |acc: Option<&(ParticleClass, f64)>, d| match acc {
            Some(a) if a.1 <= d.1 => Some(a),
            _ => Some(d),
        })
        .ok_or_else(|| Error::InvalidParameter("no prediction to compare against".into()))?;
    let tie = distances.iter().filter(|d| d.1 == best).count() > 1;
    Ok(Classification { label, distances, tie })
}

/// Label of the random-matrix prediction closest to `summary`.
pub fn classify(summary: &MomentSummary, m: usize, n: usize) -> Result<Classification> {
    let cv = summary
        .cv
        .ok_or_else(|| Error::InvalidParameter("coefficient of variation is undefined (m1 = 0); cannot classify".into()))?;
    let mut candidates = Vec::new();
    for class in ParticleClass::ALL {
        let p = rmt_prediction(m, n, class)?;
        if let Some(pcv) = p.summary.cv {
            candidates.push((class, p.summary.nm, pcv));
        }
    }
    classify_point(summary.nm, cv, &candidates)
}

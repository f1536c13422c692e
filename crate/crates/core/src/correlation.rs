//! Two-point correlations `C_{o1 o2} = <n_o1 n_o2> - <n_o1><n_o2>`, their
//! moments, and random-matrix predictions for Haar-random interferometers.

use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interference::{GramMatrix, ParticleClass};
use crate::rng;
use crate::tensor::{distinct_ports, haar_random_unitary, port_index, UnitaryMatrix};

/// Below this `|m1|` the coefficient of variation is reported as undefined.
pub const CV_UNDEFINED_BELOW: f64 = 1e-14;

/// The two pieces every pair correlation is built from:
/// `direct = sum_k |a_k|^2 |b_k|^2` and
/// `exchange = sum_{k != l} a_k b_l conj(a_l) conj(b_k)` (optionally weighted),
/// with `a`, `b` the rows of `U` for the two outputs restricted to the inputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairTerms {
    pub direct: f64,
    pub exchange: f64,
}

impl PairTerms {
    /// Combines the terms for `class`; `exchange` carries any overlap weighting.
    pub fn combine(self, class: ParticleClass) -> f64 {
        match class {
            ParticleClass::Boson => -self.direct + self.exchange,
            ParticleClass::ThermalBoson => self.direct + self.exchange,
            ParticleClass::Fermion => -self.direct - self.exchange,
            ParticleClass::Distinguishable => -self.direct,
        }
    }
}

fn pair_terms(u: &UnitaryMatrix, cols: &[usize], r1: usize, r2: usize, weights: Option<&[Vec<f64>]>) -> Result<PairTerms> {
    let a: Vec<Complex64> = cols.iter().map(|&c| u.at(r1, c)).collect();
    let b: Vec<Complex64> = cols.iter().map(|&c| u.at(r2, c)).collect();
    let direct = a.iter().zip(&b).map(|(x, y)| x.norm_sqr() * y.norm_sqr()).sum();
    let mut exchange = Complex64::new(0.0, 0.0);
    for k in 0..a.len() {
        for l in 0..a.len() {
            if k == l {
                continue;
            }
            let term = a[k] * b[l] * a[l].conj() * b[k].conj();
            exchange += match weights {
                Some(w) => term * w[k][l],
                None => term,
            };
        }
    }
    if exchange.im.abs() > 1e-10 {
        return Err(Error::Numerical(format!("pair correlation has imaginary part {}", exchange.im)));
    }
    Ok(PairTerms { direct, exchange: exchange.re })
}

fn check_pair(u: &UnitaryMatrix, o1: usize, o2: usize) -> Result<(usize, usize)> {
    if o1 == o2 {
        return Err(Error::InvalidParameter(format!("correlation needs two different outputs, got {o1} twice")));
    }
    Ok((port_index(o1, u.modes())?, port_index(o2, u.modes())?))
}

pub fn correlation_pair(u: &UnitaryMatrix, inputs: &[usize], o1: usize, o2: usize, class: ParticleClass) -> Result<f64> {
    let (r1, r2) = check_pair(u, o1, o2)?;
    let cols = distinct_ports(inputs, u.modes())?;
    Ok(pair_terms(u, &cols, r1, r2, None)?.combine(class))
}

/// Pair correlation of partially distinguishable particles: the exchange
/// term of pair `(k, l)` is weighted by `|S_kl|^2`.
pub fn correlation_pair_partial(
    u: &UnitaryMatrix,
    inputs: &[usize],
    o1: usize,
    o2: usize,
    gram: &GramMatrix,
    class: ParticleClass,
) -> Result<f64> {
    check_partial_class(class)?;
    let (r1, r2) = check_pair(u, o1, o2)?;
    let cols = distinct_ports(inputs, u.modes())?;
    if gram.n() != cols.len() {
        return Err(Error::LengthMismatch { expected: cols.len(), found: gram.n() });
    }
    let w = gram.squared_moduli();
    Ok(pair_terms(u, &cols, r1, r2, Some(&w))?.combine(class))
}

fn check_partial_class(class: ParticleClass) -> Result<()> {
    match class {
        ParticleClass::Boson | ParticleClass::Fermion => Ok(()),
        _ => Err(Error::UnsupportedClass { class, operation: "partial distinguishability" }),
    }
}

/// All unordered-pair correlations of one interferometer.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationDataset {
    m: usize,
    n: usize,
    /// `None` for datasets estimated from samples.
    class: Option<ParticleClass>,
    gram: Option<GramMatrix>,
    /// Row-major over `o1 < o2`.
    values: Vec<f64>,
}

pub fn pair_count(m: usize) -> usize {
    m * m.saturating_sub(1) / 2
}

impl CorrelationDataset {
    pub fn new(
        m: usize,
        n: usize,
        class: Option<ParticleClass>,
        gram: Option<GramMatrix>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidDimension(format!("correlations need m >= 2, got {m}")));
        }
        if n == 0 {
            return Err(Error::InvalidDimension("correlations need n >= 1".into()));
        }
        if values.len() != pair_count(m) {
            return Err(Error::LengthMismatch { expected: pair_count(m), found: values.len() });
        }
        if let Some(g) = &gram {
            if g.n() != n {
                return Err(Error::LengthMismatch { expected: n, found: g.n() });
            }
        }
        if gram.is_none() {
            let bad = match class {
                Some(ParticleClass::Fermion) => values.iter().find(|&&v| v > 1e-12),
                Some(ParticleClass::ThermalBoson) => values.iter().find(|&&v| v < -1e-12),
                _ => None,
            };
            if let Some(v) = bad {
                return Err(Error::Numerical(format!("{} correlation {v} has the wrong sign", class.unwrap())));
            }
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite correlation {v}")));
        }
        Ok(Self { m, n, class, gram, values })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn class(&self) -> Option<ParticleClass> {
        self.class
    }

    pub fn gram(&self) -> Option<&GramMatrix> {
        self.gram.as_ref()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `(o1, o2, C)` with 1-based `o1 < o2`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        pair_list(self.m).into_iter().zip(&self.values).map(|((a, b), &v)| (a, b, v))
    }

    /// `C_{o1 o2}` in either order.
    pub fn get(&self, o1: usize, o2: usize) -> Option<f64> {
        let (a, b) = if o1 < o2 { (o1, o2) } else { (o2, o1) };
        if a == 0 || a == b || b > self.m {
            return None;
        }
        Some(self.values[pair_position(self.m, a, b)])
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["o1", "o2", "value"])?;
        for (a, b, v) in self.pairs() {
            w.write_record([a.to_string(), b.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `o1,o2,value` rows in any order; `m` is the largest port seen.
    pub fn read_csv<R: Read>(reader: R, n: usize) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut rows = Vec::new();
        for rec in r.deserialize() {
            let (o1, o2, v): (usize, usize, f64) = rec?;
            if o1 == 0 || o1 == o2 {
                return Err(Error::Parse(format!("bad pair ({o1}, {o2})")));
            }
            rows.push((o1.min(o2), o1.max(o2), v));
        }
        let m = rows.iter().map(|r| r.1).max().unwrap_or(0);
        if rows.len() != pair_count(m) {
            return Err(Error::LengthMismatch { expected: pair_count(m), found: rows.len() });
        }
        let mut values = vec![f64::NAN; rows.len()];
        for (a, b, v) in rows {
            let k = pair_position(m, a, b);
            if !values[k].is_nan() {
                return Err(Error::Parse(format!("pair ({a}, {b}) listed twice")));
            }
            values[k] = v;
        }
        Self::new(m, n, None, None, values)
    }
}

fn pair_list(m: usize) -> Vec<(usize, usize)> {
    (1..=m).flat_map(|a| (a + 1..=m).map(move |b| (a, b))).collect()
}

fn pair_position(m: usize, a: usize, b: usize) -> usize {
    // pairs before row a, then offset within the row
    let before = (a - 1) * m - (a - 1) * a / 2;
    before + (b - a - 1)
}

/// The dataset for `class`; with `gram`, the partially distinguishable
/// boson or fermion dataset.
pub fn correlation_dataset(
    u: &UnitaryMatrix,
    inputs: &[usize],
    class: ParticleClass,
    gram: Option<&GramMatrix>,
) -> Result<CorrelationDataset> {
    let m = u.modes();
    let cols = distinct_ports(inputs, m)?;
    let weights = match gram {
        Some(g) => {
            check_partial_class(class)?;
            if g.n() != cols.len() {
                return Err(Error::LengthMismatch { expected: cols.len(), found: g.n() });
            }
            Some(g.squared_moduli())
        }
        None => None,
    };
    let values = pair_list(m)
        .par_iter()
        .map(|&(a, b)| Ok(pair_terms(u, &cols, a - 1, b - 1, weights.as_deref())?.combine(class)))
        .collect::<Result<Vec<f64>>>()?;
    CorrelationDataset::new(m, cols.len(), Some(class), gram.cloned(), values)
}

/// Datasets for several classes sharing one pass over the pairs.
pub fn correlation_datasets(
    u: &UnitaryMatrix,
    inputs: &[usize],
    classes: &[ParticleClass],
) -> Result<Vec<CorrelationDataset>> {
    let m = u.modes();
    let cols = distinct_ports(inputs, m)?;
    let terms = pair_list(m)
        .par_iter()
        .map(|&(a, b)| pair_terms(u, &cols, a - 1, b - 1, None))
        .collect::<Result<Vec<_>>>()?;
    classes
        .iter()
        .map(|&c| {
            let values = terms.iter().map(|t| t.combine(c)).collect();
            CorrelationDataset::new(m, cols.len(), Some(c), None, values)
        })
        .collect()
}

/// Mean of `C^q` over unordered pairs.
pub fn moments(d: &CorrelationDataset, q: u32) -> Result<f64> {
    if q == 0 {
        return Err(Error::InvalidParameter("moment order must be >= 1".into()));
    }
    if d.values.is_empty() {
        return Err(Error::InvalidParameter("empty dataset".into()));
    }
    Ok(d.values.iter().map(|v| v.powi(q as i32)).sum::<f64>() / d.values.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentSummary {
    pub m1: f64,
    pub m2: f64,
    pub nm: f64,
    /// `None` when `|m1| < 1e-14`.
    pub cv: Option<f64>,
}

impl MomentSummary {
    pub fn from_moments(m: usize, n: usize, m1: f64, m2: f64) -> Self {
        let nm = m1 * (m * m) as f64 / n as f64;
        let cv = (m1.abs() >= CV_UNDEFINED_BELOW).then(|| (m2 - m1 * m1).max(0.0).sqrt() / m1);
        Self { m1, m2, nm, cv }
    }
}

pub fn summary(d: &CorrelationDataset) -> MomentSummary {
    let m1 = moments(d, 1).expect("datasets are never empty");
    let m2 = moments(d, 2).expect("datasets are never empty");
    MomentSummary::from_moments(d.m, d.n, m1, m2)
}

/// The summary JSON record `{m, n, class, m1, m2, NM, CV}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub m: usize,
    pub n: usize,
    pub class: Option<ParticleClass>,
    pub m1: f64,
    pub m2: f64,
    #[serde(rename = "NM")]
    pub nm: f64,
    #[serde(rename = "CV")]
    pub cv: Option<f64>,
}

impl SummaryRecord {
    pub fn new(m: usize, n: usize, class: Option<ParticleClass>, s: &MomentSummary) -> Self {
        Self { m, n, class, m1: s.m1, m2: s.m2, nm: s.nm, cv: s.cv }
    }

    pub fn of(d: &CorrelationDataset) -> Self {
        Self::new(d.m, d.n, d.class, &summary(d))
    }
}

/// Weingarten values for `m` modes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weingarten {
    pub v11: f64,
    pub v2: f64,
}

pub fn weingarten(m: usize) -> Weingarten {
    let m = m as f64;
    Weingarten { v11: 1.0 / (m * m - 1.0), v2: -1.0 / (m * (m * m - 1.0)) }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RmtPrediction {
    pub class: ParticleClass,
    pub m: usize,
    pub n: usize,
    pub summary: MomentSummary,
    pub weingarten: Weingarten,
}

fn check_rmt(m: usize, n: usize) -> Result<(f64, f64)> {
    if m < 2 {
        return Err(Error::InvalidDimension(format!("random-matrix moments need m >= 2, got {m}")));
    }
    if n == 0 || n > m {
        return Err(Error::InvalidParameter(format!("random-matrix moments need 1 <= n <= m, got n = {n}, m = {m}")));
    }
    Ok((m as f64, n as f64))
}

/// Haar average of `m1`.
pub fn rmt_first_moment(m: usize, n: usize, class: ParticleClass) -> Result<f64> {
    let (m, n) = check_rmt(m, n)?;
    let q = m * (m * m - 1.0);
    Ok(match class {
        ParticleClass::Boson => -n * (m + n - 2.0) / q,
        ParticleClass::ThermalBoson => n * (m - n) / q,
        ParticleClass::Distinguishable => -n / (m * (m + 1.0)),
        ParticleClass::Fermion => -n * (m - n) / q,
    })
}

/// Haar average of `m2`.
pub fn rmt_second_moment(m: usize, n: usize, class: ParticleClass) -> Result<f64> {
    let (m, n) = check_rmt(m, n)?;
    let den = m * m * (m + 2.0) * (m + 3.0) * (m * m - 1.0);
    let num = match class {
        ParticleClass::Boson => {
            2.0 * n * (m * m * n + m * m + 9.0 * m * n - 11.0 * m + n.powi(3) - 2.0 * n * n + 5.0 * n - 4.0)
        }
        ParticleClass::ThermalBoson | ParticleClass::Fermion => 2.0 * n * (n + 1.0) * (m - n) * (m - n + 1.0),
        ParticleClass::Distinguishable => {
            n * (m * m * n + 3.0 * m * m + m * n - 5.0 * m + 2.0 * n - 2.0)
        }
    };
    Ok(num / den)
}

pub fn rmt_prediction(m: usize, n: usize, class: ParticleClass) -> Result<RmtPrediction> {
    let m1 = rmt_first_moment(m, n, class)?;
    let m2 = rmt_second_moment(m, n, class)?;
    Ok(RmtPrediction { class, m, n, summary: MomentSummary::from_moments(m, n, m1, m2), weingarten: weingarten(m) })
}

/// The overlap sums `A, B, C, D` of `w = |S|^2` entering the partial
/// second moment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverlapSums {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

pub fn overlap_sums(gram: &GramMatrix) -> OverlapSums {
    let w = gram.squared_moduli();
    let n = gram.n();
    let (mut a, mut b, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..n {
        for l in 0..n {
            if k == l {
                continue;
            }
            c += w[k][l] * w[k][l];
            d += w[k][l];
            for l2 in 0..n {
                if l2 != k && l2 != l {
                    b += w[k][l] * w[k][l2];
                }
            }
        }
    }
    for k1 in 0..n {
        for l1 in 0..n {
            if l1 == k1 {
                continue;
            }
            for k2 in 0..n {
                if k2 == k1 || k2 == l1 {
                    continue;
                }
                for l2 in 0..n {
                    if l2 != k1 && l2 != l1 && l2 != k2 {
                        a += w[k1][l1] * w[k2][l2];
                    }
                }
            }
        }
    }
    OverlapSums { a, b, c, d }
}

fn partial_sign(class: ParticleClass) -> Result<f64> {
    check_partial_class(class)?;
    Ok(if class == ParticleClass::Boson { 1.0 } else { -1.0 })
}

/// Haar average of `m1` for partially distinguishable particles.
pub fn rmt_first_moment_partial(m: usize, gram: &GramMatrix, class: ParticleClass) -> Result<f64> {
    let s = partial_sign(class)?;
    let (m, n) = check_rmt(m, gram.n())?;
    let d = overlap_sums_d(gram);
    Ok(-n / (m * (m + 1.0)) - s * d / (m * (m * m - 1.0)))
}

fn overlap_sums_d(gram: &GramMatrix) -> f64 {
    let w = gram.squared_moduli();
    (0..gram.n()).flat_map(|k| (0..gram.n()).filter(move |&l| l != k).map(move |l| (k, l))).map(|(k, l)| w[k][l]).sum()
}

/// Haar average of `m2` for partially distinguishable particles.
pub fn rmt_second_moment_partial(m: usize, gram: &GramMatrix, class: ParticleClass) -> Result<f64> {
    let s = partial_sign(class)?;
    let (m, n) = check_rmt(m, gram.n())?;
    let OverlapSums { a, b, c, d } = overlap_sums(gram);
    let num = 2.0 * a - 2.0 * b * (m - 5.0)
        + c * (10.0 + m + m * m)
        + s * 2.0 * d * (2.0 + 6.0 * m - n + m * n)
        + (m - 2.0) * (1.0 + 3.0 * m) * n
        + 2.0 * n * n
        + m * n * n
        + m * m * n * n;
    let den = (m - 1.0) * m * m * (m + 1.0) * (m + 2.0) * (m + 3.0);
    Ok(num / den)
}

pub fn rmt_prediction_partial(m: usize, gram: &GramMatrix, class: ParticleClass) -> Result<RmtPrediction> {
    let m1 = rmt_first_moment_partial(m, gram, class)?;
    let m2 = rmt_second_moment_partial(m, gram, class)?;
    Ok(RmtPrediction {
        class,
        m,
        n: gram.n(),
        summary: MomentSummary::from_moments(m, gram.n(), m1, m2),
        weingarten: weingarten(m),
    })
}

/// `m1` of one interferometer without building the dataset.
pub fn exact_first_moment(u: &UnitaryMatrix, inputs: &[usize], class: ParticleClass) -> Result<f64> {
    let m = u.modes();
    if m < 2 {
        return Err(Error::InvalidDimension(format!("correlations need m >= 2, got {m}")));
    }
    let cols = distinct_ports(inputs, m)?;
    let n = cols.len() as f64;
    let mut s2 = 0.0;
    let mut s4 = 0.0;
    for o in 0..m {
        let mut row = 0.0;
        for &c in &cols {
            let p = u.at(o, c).norm_sqr();
            row += p;
            s4 += p * p;
        }
        s2 += row * row;
    }
    let k = 1.0 / (m as f64 * (m as f64 - 1.0));
    Ok(match class {
        ParticleClass::Boson => (-n - s2 + 2.0 * s4) * k,
        ParticleClass::ThermalBoson => (n - s2) * k,
        ParticleClass::Fermion => (-n + s2) * k,
        ParticleClass::Distinguishable => (-n + s4) * k,
    })
}

/// Closed-form moments of the Fourier interferometer with inputs `1..=n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourierMoments {
    pub m1_boson: f64,
    pub m1_thermal: f64,
    pub m1_fermion: f64,
    pub m1_distinguishable: f64,
    /// Only available for `m >= 2n - 1`.
    pub m2_boson: Option<f64>,
}

impl FourierMoments {
    pub fn m1(&self, class: ParticleClass) -> f64 {
        match class {
            ParticleClass::Boson => self.m1_boson,
            ParticleClass::ThermalBoson => self.m1_thermal,
            ParticleClass::Fermion => self.m1_fermion,
            ParticleClass::Distinguishable => self.m1_distinguishable,
        }
    }
}

pub fn fourier_moments(m: usize, n: usize) -> Result<FourierMoments> {
    let (mf, nf) = check_rmt(m, n)?;
    let m2 = mf * mf;
    let m4 = m2 * m2;
    let x = nf * (nf - 1.0) / (m2 * (mf - 1.0));
    let m2_boson = (m + 1 >= 2 * n).then(|| {
        let zero_sums = (2.0 * nf - 1.0) * (nf - 1.0) * nf / 3.0;
        nf * nf / m4 + 2.0 * nf * nf * (nf - 1.0) / (m4 * (mf - 1.0)) + zero_sums / m4
            - (nf - 1.0) * nf * (nf * (3.0 * nf - 5.0) + 1.0) / (3.0 * m4 * (mf - 1.0))
    });
    Ok(FourierMoments {
        m1_boson: -nf / m2 - x,
        m1_thermal: nf / m2 - x,
        m1_fermion: -nf / m2 + x,
        m1_distinguishable: -nf / m2,
        m2_boson,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Visibility {
    pub nm: Option<f64>,
    pub cv: Option<f64>,
}

fn contrast(a: f64, b: f64) -> Option<f64> {
    let den = (a + b).abs();
    (den > 0.0).then(|| (a - b).abs() / den)
}

/// `|x_ind - x_dist| / |x_ind + x_dist|` for NM and CV.
pub fn visibility(ind: &MomentSummary, dist: &MomentSummary) -> Visibility {
    Visibility {
        nm: contrast(ind.nm, dist.nm),
        cv: match (ind.cv, dist.cv) {
            (Some(a), Some(b)) => contrast(a, b),
            _ => None,
        },
    }
}

/// Summaries over `trials` Haar unitaries; trial `t` uses the unitary seeded
/// by substream `t` of `seed`. Returns one row per trial, one entry per class.
pub fn haar_ensemble(
    m: usize,
    inputs: &[usize],
    classes: &[ParticleClass],
    trials: usize,
    seed: u64,
) -> Result<Vec<Vec<MomentSummary>>> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let u = haar_random_unitary(m, rng::derive_seed(seed, t as u64))?;
            Ok(correlation_datasets(&u, inputs, classes)?.iter().map(summary).collect())
        })
        .collect()
}

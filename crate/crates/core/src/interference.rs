//! Transition probabilities for bosons, fermions and distinguishable
//! particles, and for partially distinguishable bosons/fermions described by
//! a Gram matrix of internal states.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix_functions::{determinant, occupation_normalization, permanent, OccupationVector};
use crate::tensor::{any_ports, balanced_beamsplitter, distinct_ports, sub_by_index, CMatrix, UnitaryMatrix};

/// Slack allowed outside `[0, 1]` before a probability counts as broken.
pub const PROBABILITY_SLACK: f64 = 1e-12;
/// Largest `n` accepted by [`transition_probability_partial`].
pub const PARTIAL_MAX_N: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ParticleClass {
    #[serde(rename = "boson")]
    Boson,
    #[serde(rename = "fermion")]
    Fermion,
    #[serde(rename = "distinguishable")]
    Distinguishable,
    /// Thermal bosons only exist for correlation statistics.
    #[serde(rename = "thermal")]
    ThermalBoson,
}

impl ParticleClass {
    pub const ALL: [ParticleClass; 4] =
        [ParticleClass::Boson, ParticleClass::ThermalBoson, ParticleClass::Fermion, ParticleClass::Distinguishable];

    pub fn name(self) -> &'static str {
        match self {
            ParticleClass::Boson => "boson",
            ParticleClass::Fermion => "fermion",
            ParticleClass::Distinguishable => "distinguishable",
            ParticleClass::ThermalBoson => "thermal",
        }
    }
}

impl fmt::Display for ParticleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParticleClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "boson" | "b" => Ok(ParticleClass::Boson),
            "fermion" | "f" => Ok(ParticleClass::Fermion),
            "dist" | "distinguishable" | "d" => Ok(ParticleClass::Distinguishable),
            "thermal" | "t" => Ok(ParticleClass::ThermalBoson),
            other => Err(Error::Parse(format!("unknown particle class {other:?}"))),
        }
    }
}

/// Overlaps `S_kl = <psi_k|psi_l>` of the particles' internal states.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    entries: CMatrix,
}

impl GramMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        let n = entries.nrows();
        if n != entries.ncols() {
            return Err(Error::NotSquare { rows: n, cols: entries.ncols() });
        }
        for k in 0..n {
            if (entries[(k, k)] - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
                return Err(Error::InvalidGram(format!("diagonal entry {} is {}, expected 1", k + 1, entries[(k, k)])));
            }
            for l in 0..n {
                let s = entries[(k, l)];
                if (s - entries[(l, k)].conj()).norm() > 1e-12 {
                    return Err(Error::InvalidGram(format!("not Hermitian at ({}, {})", k + 1, l + 1)));
                }
                if s.norm() > 1.0 + 1e-12 {
                    return Err(Error::InvalidGram(format!("|S_{},{}| = {} exceeds 1", k + 1, l + 1, s.norm())));
                }
            }
        }
        if !cholesky_succeeds(&entries, 1e-10) {
            return Err(Error::InvalidGram("not positive semi-definite".into()));
        }
        Ok(Self { entries })
    }

    /// Fully indistinguishable particles.
    pub fn all_ones(n: usize) -> Self {
        Self { entries: CMatrix::from_element(n, n, Complex64::new(1.0, 0.0)) }
    }

    /// Fully distinguishable particles.
    pub fn identity(n: usize) -> Self {
        Self { entries: CMatrix::identity(n, n) }
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub(crate) fn at(&self, k: usize, l: usize) -> Complex64 {
        self.entries[(k, l)]
    }

    /// Elementwise `|S_kl|^2`.
    pub fn squared_moduli(&self) -> Vec<Vec<f64>> {
        let n = self.n();
        (0..n).map(|k| (0..n).map(|l| self.entries[(k, l)].norm_sqr()).collect()).collect()
    }
}

/// Hermitian Cholesky of `a + shift * 1`; false on a non-positive pivot.
/// Written out because the generic complex factorization takes square roots
/// of negative pivots instead of failing.
fn cholesky_succeeds(a: &CMatrix, shift: f64) -> bool {
    let n = a.nrows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re + shift;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        l[(j, j)] = Complex64::new(d, 0.0);
        for i in j + 1..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = v / d;
        }
    }
    true
}

/// Gaussian wave packets arriving at times `tau_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WavePacketTrain {
    pub arrival_times: Vec<f64>,
    pub central_frequency: f64,
    pub bandwidth: f64,
}

/// `|U_kj|^2`.
pub fn single_particle_prob(u: &UnitaryMatrix, input: usize, output: usize) -> Result<f64> {
    Ok(u.entry(output, input)?.norm_sqr())
}

pub(crate) fn clamp_probability(p: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else if p < 0.0 && p >= -PROBABILITY_SLACK {
        Ok(0.0)
    } else if p > 1.0 && p <= 1.0 + PROBABILITY_SLACK {
        Ok(1.0)
    } else {
        Err(Error::Numerical(format!("probability {p} outside [0, 1]")))
    }
}

fn first_repeat(ports: &[usize]) -> Option<usize> {
    let mut sorted = ports.to_vec();
    sorted.sort_unstable();
    sorted.windows(2).find(|w| w[0] == w[1]).map(|w| w[0])
}

/// Probability of detecting the particles injected at `inputs` in the
/// output ports `outputs` (order irrelevant, repeats allowed).
pub fn transition_probability(
    u: &UnitaryMatrix,
    inputs: &[usize],
    outputs: &[usize],
    class: ParticleClass,
) -> Result<f64> {
    if class == ParticleClass::ThermalBoson {
        return Err(Error::UnsupportedClass { class, operation: "transition_probability" });
    }
    if outputs.len() != inputs.len() {
        return Err(Error::LengthMismatch { expected: inputs.len(), found: outputs.len() });
    }
    let cols = distinct_ports(inputs, u.modes())?;
    let rows = any_ports(outputs, u.modes())?;
    if class == ParticleClass::Fermion && first_repeat(outputs).is_some() {
        return Ok(0.0);
    }
    let sub = sub_by_index(u, &rows, &cols);
    let norm = occupation_normalization(&OccupationVector::from_ports(outputs, u.modes())?) as f64;
    let p = match class {
        ParticleClass::Boson => permanent(&sub)?.norm_sqr() / norm,
        ParticleClass::Fermion => determinant(&sub)?.norm_sqr(),
        ParticleClass::Distinguishable => {
            let weights = sub.map(|z| Complex64::new(z.norm_sqr(), 0.0));
            permanent(&weights)?.re / norm
        }
        ParticleClass::ThermalBoson => unreachable!(),
    };
    clamp_probability(p)
}

/// Transition probability of partially distinguishable particles with
/// internal-state overlaps `gram`, for distinct outputs.
///
/// The double sum over permutation pairs is regrouped by the relative
/// permutation `rho`: every term with the same `rho` shares the overlap
/// weight `prod_j S[rho(j), j]`, and the remaining sum over the other
/// permutation is the permanent of `M_kj = U_{o_k i_j} conj(U_{o_k i_rho(j)})`.
pub fn transition_probability_partial(
    u: &UnitaryMatrix,
    inputs: &[usize],
    outputs: &[usize],
    gram: &GramMatrix,
    class: ParticleClass,
) -> Result<f64> {
    if !matches!(class, ParticleClass::Boson | ParticleClass::Fermion) {
        return Err(Error::UnsupportedClass { class, operation: "transition_probability_partial" });
    }
    let n = inputs.len();
    if outputs.len() != n {
        return Err(Error::LengthMismatch { expected: n, found: outputs.len() });
    }
    if gram.n() != n {
        return Err(Error::LengthMismatch { expected: n, found: gram.n() });
    }
    if n > PARTIAL_MAX_N {
        return Err(Error::SizeLimit(format!(
            "partial distinguishability is limited to n <= {PARTIAL_MAX_N}, got {n}"
        )));
    }
    let cols = distinct_ports(inputs, u.modes())?;
    let rows = any_ports(outputs, u.modes())?;
    if let Some(p) = first_repeat(outputs) {
        return Err(Error::RepeatedOutput(p));
    }
    let sub = sub_by_index(u, &rows, &cols);

    let mut rhos = Vec::new();
    let mut rho: Vec<usize> = (0..n).collect();
    loop {
        rhos.push(rho.clone());
        if !crate::tensor::next_permutation(&mut rho) {
            break;
        }
    }
    let terms: Vec<Result<Complex64>> = rhos
        .par_iter()
        .map(|rho| {
            let w = (0..n).fold(Complex64::new(1.0, 0.0), |acc, j| acc * gram.at(rho[j], j));
            if w == Complex64::new(0.0, 0.0) {
                return Ok(w);
            }
            let m = CMatrix::from_fn(n, n, |k, j| sub[(k, j)] * sub[(k, rho[j])].conj());
            let signed = if class == ParticleClass::Fermion && permutation_parity(rho) < 0 { -w } else { w };
            Ok(signed * permanent(&m)?)
        })
        .collect();
    let mut total = Complex64::new(0.0, 0.0);
    for t in terms {
        total += t?;
    }
    if total.im.abs() > 1e-10 {
        return Err(Error::Numerical(format!("partial-distinguishability sum has imaginary part {}", total.im)));
    }
    clamp_probability(total.re)
}

/// `+1` or `-1` for a 0-based permutation given by its images.
pub(crate) fn permutation_parity(images: &[usize]) -> i8 {
    let mut seen = vec![false; images.len()];
    let mut sign = 1;
    for start in 0..images.len() {
        let mut len = 0;
        let mut k = start;
        while !seen[k] {
            seen[k] = true;
            k = images[k];
            len += 1;
        }
        if len > 0 && len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

/// `S_jk = exp(-dw^2 (t_j - t_k)^2 / 2) exp(i w0 (t_j - t_k))`.
pub fn gram_from_wave_packets(train: &WavePacketTrain) -> Result<GramMatrix> {
    if !(train.bandwidth > 0.0) || !train.bandwidth.is_finite() {
        return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {}", train.bandwidth)));
    }
    if train.arrival_times.is_empty() {
        return Err(Error::InvalidParameter("wave-packet train needs at least one packet".into()));
    }
    let t = &train.arrival_times;
    let dw = train.bandwidth;
    let entries = CMatrix::from_fn(t.len(), t.len(), |j, k| {
        let d = t[j] - t[k];
        Complex64::from_polar((-0.5 * dw * dw * d * d).exp(), train.central_frequency * d)
    });
    GramMatrix::new(entries)
}

/// Coincidence probability of two particles on the balanced beamsplitter as a
/// function of `x = dw * dtau`.
pub fn hom_dip_curve(grid: &[f64], class: ParticleClass) -> Result<Vec<f64>> {
    if !matches!(class, ParticleClass::Boson | ParticleClass::Fermion) {
        return Err(Error::UnsupportedClass { class, operation: "hom_dip_curve" });
    }
    let bs = balanced_beamsplitter();
    grid.iter()
        .map(|&x| {
            let train = WavePacketTrain { arrival_times: vec![0.0, x], central_frequency: 0.0, bandwidth: 1.0 };
            let gram = gram_from_wave_packets(&train)?;
            transition_probability_partial(&bs, &[1, 2], &[1, 2], &gram, class)
        })
        .collect()
}

/// Mean particle number in output `o`, `sum_k |U_{o i_k}|^2`.
pub fn expected_number(u: &UnitaryMatrix, inputs: &[usize], output: usize) -> Result<f64> {
    let cols = distinct_ports(inputs, u.modes())?;
    let row = u.port_index(output)?;
    Ok(cols.iter().map(|&c| u.at(row, c).norm_sqr()).sum())
}

//! Suppression laws for interferometers built from the eigenvectors of a
//! mode permutation.
//!
//! For a permutation `pi` with eigen-decomposition `P = A^dag D A` the
//! interferometer is `U = A`. When the input state is invariant under `pi`,
//! output events whose eigenvalue product violates the symmetry have zero
//! probability.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interference::{permutation_parity, transition_probability, ParticleClass};
use crate::tensor::{distinct_ports, CMatrix, ModePermutation, UnitaryMatrix};

pub const SUPPRESSION_TOL: f64 = 1e-8;
/// Probability below which a predicted suppression counts as confirmed.
pub const CERTIFY_TOL: f64 = 1e-10;

/// Result of [`input_symmetry`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InputSymmetry {
    pub symmetric: bool,
    /// Parity of the permutation induced on the occupied ports; `None` when
    /// the inputs are not symmetric.
    pub sign: Option<i8>,
}

/// Checks whether `pi` maps the input ports onto themselves.
pub fn input_symmetry(perm: &ModePermutation, inputs: &[usize]) -> Result<InputSymmetry> {
    let idx = distinct_ports(inputs, perm.modes())?;
    match induced_permutation(perm, &idx) {
        Some(tau) => Ok(InputSymmetry { symmetric: true, sign: Some(permutation_parity(&tau)) }),
        None => Ok(InputSymmetry { symmetric: false, sign: None }),
    }
}

/// `tau(k) = position of pi(i_k)` in the (0-based) input list.
fn induced_permutation(perm: &ModePermutation, idx: &[usize]) -> Option<Vec<usize>> {
    let image = perm.image0();
    idx.iter().map(|&i| idx.iter().position(|&j| j == image[i])).collect()
}

/// Eigenvectors of a permutation matrix, stored as the rows of `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenSystem {
    /// Row `k` is the conjugate of the `k`-th eigenvector, so `A^dag D A = P`
    /// and `A P = D A`.
    pub a: UnitaryMatrix,
    /// `lambdas[k]` belongs to row (output port) `k + 1`.
    pub lambdas: Vec<Complex64>,
    /// Length of the cycle each eigenvalue came from.
    pub cycle_lengths: Vec<usize>,
}

impl EigenSystem {
    /// Max-norm of `A^dag D A - P`.
    pub fn reconstruction_residual(&self, perm: &ModePermutation) -> f64 {
        let m = self.lambdas.len();
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.lambdas.clone()));
        let rebuilt = self.a.matrix().adjoint() * d * self.a.matrix();
        let p = crate::tensor::permutation_unitary(perm);
        let mut worst = 0.0f64;
        for r in 0..m {
            for c in 0..m {
                worst = worst.max((rebuilt[(r, c)] - p.matrix()[(r, c)]).norm());
            }
        }
        worst
    }
}

fn root_of_unity(r: usize, len: usize) -> Complex64 {
    // exact values at the quarter turns keep products clean
    match (4 * r % len == 0).then_some(4 * r / len % 4) {
        Some(0) => Complex64::new(1.0, 0.0),
        Some(1) => Complex64::new(0.0, -1.0),
        Some(2) => Complex64::new(-1.0, 0.0),
        Some(3) => Complex64::new(0.0, 1.0),
        _ => Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * r as f64 / len as f64),
    }
}

/// Canonical eigensystem: cycles by smallest element, `r` ascending inside
/// each cycle, with `v_{c_s} = exp(2 pi i r s / L)/sqrt(L)` and
/// `lambda = exp(-2 pi i r / L)`.
pub fn eigensystem(perm: &ModePermutation) -> EigenSystem {
    let m = perm.modes();
    let mut a = CMatrix::zeros(m, m);
    let mut lambdas = Vec::with_capacity(m);
    let mut cycle_lengths = Vec::with_capacity(m);
    let mut row = 0;
    for cycle in perm.cycles() {
        let len = cycle.len();
        let norm = 1.0 / (len as f64).sqrt();
        for r in 0..len {
            for (s, &port) in cycle.iter().enumerate() {
                // conj(exp(2 pi i r s / L)) = lambda^s
                a[(row, port - 1)] = root_of_unity(r * s % len, len) * norm;
            }
            lambdas.push(root_of_unity(r, len));
            cycle_lengths.push(len);
            row += 1;
        }
    }
    EigenSystem {
        a: UnitaryMatrix::new(a).expect("cycle Fourier blocks are unitary"),
        lambdas,
        cycle_lengths,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Law {
    #[serde(rename = "bosonic")]
    Bosonic,
    #[serde(rename = "fermionic")]
    Fermionic,
    #[serde(rename = "extended-fermionic")]
    ExtendedFermionic,
}

impl Law {
    pub fn name(self) -> &'static str {
        match self {
            Law::Bosonic => "bosonic",
            Law::Fermionic => "fermionic",
            Law::ExtendedFermionic => "extended-fermionic",
        }
    }

    pub fn class(self) -> ParticleClass {
        match self {
            Law::Bosonic => ParticleClass::Boson,
            Law::Fermionic | Law::ExtendedFermionic => ParticleClass::Fermion,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Witness {
    /// `prod_j lambda_{o_j}` and the value it must equal to escape the law.
    Product { product: Complex64, expected: Complex64 },
    /// The output eigenvalues against the spectrum of `P` restricted to the
    /// occupied inputs.
    Multisets { outputs: Vec<Complex64>, restricted: Vec<Complex64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuppressionVerdict {
    pub suppressed: bool,
    pub law: Law,
    pub witness: Witness,
    pub tolerance_used: f64,
}

struct Prepared {
    system: EigenSystem,
    tau: Vec<usize>,
    outputs: Vec<usize>,
}

fn prepare(perm: &ModePermutation, inputs: &[usize], outputs: &[usize]) -> Result<Prepared> {
    let m = perm.modes();
    if outputs.len() != inputs.len() {
        return Err(Error::LengthMismatch { expected: inputs.len(), found: outputs.len() });
    }
    let idx = distinct_ports(inputs, m)?;
    let out = distinct_ports(outputs, m).map_err(|e| match e {
        Error::DuplicateInput(p) => Error::RepeatedOutput(p),
        other => other,
    })?;
    let tau = induced_permutation(perm, &idx).ok_or(Error::AsymmetricInput)?;
    Ok(Prepared { system: eigensystem(perm), tau, outputs: out })
}

pub fn predict_suppressed(
    perm: &ModePermutation,
    inputs: &[usize],
    outputs: &[usize],
    class: ParticleClass,
) -> Result<SuppressionVerdict> {
    predict_suppressed_with_tolerance(perm, inputs, outputs, class, SUPPRESSION_TOL)
}

/// Bosons: flagged iff `|prod lambda_o - 1| > tol`. Fermions: flagged iff
/// `|prod lambda_o - sign| > tol` with the sign of the induced input permutation.
pub fn predict_suppressed_with_tolerance(
    perm: &ModePermutation,
    inputs: &[usize],
    outputs: &[usize],
    class: ParticleClass,
    tol: f64,
) -> Result<SuppressionVerdict> {
    let law = match class {
        ParticleClass::Boson => Law::Bosonic,
        ParticleClass::Fermion => Law::Fermionic,
        _ => return Err(Error::UnsupportedClass { class, operation: "predict_suppressed" }),
    };
    let prep = prepare(perm, inputs, outputs)?;
    let product = prep.outputs.iter().fold(Complex64::new(1.0, 0.0), |p, &o| p * prep.system.lambdas[o]);
    let expected = match law {
        Law::Bosonic => Complex64::new(1.0, 0.0),
        _ => Complex64::new(permutation_parity(&prep.tau) as f64, 0.0),
    };
    Ok(SuppressionVerdict {
        suppressed: (product - expected).norm() > tol,
        law,
        witness: Witness::Product { product, expected },
        tolerance_used: tol,
    })
}

pub fn predict_suppressed_extended(
    perm: &ModePermutation,
    inputs: &[usize],
    outputs: &[usize],
) -> Result<SuppressionVerdict> {
    predict_suppressed_extended_with_tolerance(perm, inputs, outputs, SUPPRESSION_TOL)
}

/// Fermions: flagged iff the eigenvalues attached to the outputs differ, as
/// a multiset, from the spectrum of `P` restricted to the occupied inputs.
///
/// The restriction is the permutation matrix of the induced permutation, so
/// its spectrum is all `L`-th roots of unity for each induced cycle of length
/// `L`. If `A_sub` were invertible, `A_sub Q A_sub^-1 = D_sub` would force
/// the two spectra to agree.
pub fn predict_suppressed_extended_with_tolerance(
    perm: &ModePermutation,
    inputs: &[usize],
    outputs: &[usize],
    tol: f64,
) -> Result<SuppressionVerdict> {
    let prep = prepare(perm, inputs, outputs)?;
    let outs: Vec<Complex64> = prep.outputs.iter().map(|&o| prep.system.lambdas[o]).collect();
    let tau_perm = if prep.tau.is_empty() {
        Vec::new()
    } else {
        let images: Vec<usize> = prep.tau.iter().map(|&t| t + 1).collect();
        ModePermutation::from_images(&images)?.cycles()
    };
    let restricted: Vec<Complex64> = tau_perm
        .iter()
        .flat_map(|c| (0..c.len()).map(move |r| root_of_unity(r, c.len())))
        .collect();
    let suppressed = !multisets_match(&outs, &restricted, tol);
    Ok(SuppressionVerdict {
        suppressed,
        law: Law::ExtendedFermionic,
        witness: Witness::Multisets { outputs: outs, restricted },
        tolerance_used: tol,
    })
}

/// Greedy nearest-partner matching; true iff every pair lies within `tol`.
pub fn multisets_match(a: &[Complex64], b: &[Complex64], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    for x in a {
        let best = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1));
        match best {
            Some((k, d)) if d <= tol => used[k] = true,
            _ => return false,
        }
    }
    true
}

/// A law verdict checked against the exact probability on `U = A`.
#[derive(Clone, Debug, PartialEq)]
pub struct Certification {
    pub verdict: SuppressionVerdict,
    pub probability: f64,
}

impl Certification {
    /// The law is one-sided: only a flagged event with non-zero probability fails.
    pub fn passed(&self) -> bool {
        !self.verdict.suppressed || self.probability < CERTIFY_TOL
    }
}

pub fn certify(
    perm: &ModePermutation,
    inputs: &[usize],
    outputs: &[usize],
    class: ParticleClass,
) -> Result<Certification> {
    certify_law(perm, inputs, outputs, class, false, SUPPRESSION_TOL)
}

/// Certifies the plain law for `class`, or the extended fermionic law when
/// `extended` is set (which requires `class == Fermion`).
pub fn certify_law(
    perm: &ModePermutation,
    inputs: &[usize],
    outputs: &[usize],
    class: ParticleClass,
    extended: bool,
    tol: f64,
) -> Result<Certification> {
    let verdict = if extended {
        if class != ParticleClass::Fermion {
            return Err(Error::UnsupportedClass { class, operation: "extended suppression law" });
        }
        predict_suppressed_extended_with_tolerance(perm, inputs, outputs, tol)?
    } else {
        predict_suppressed_with_tolerance(perm, inputs, outputs, class, tol)?
    };
    let system = eigensystem(perm);
    let probability = transition_probability(&system.a, inputs, outputs, class)?;
    Ok(Certification { verdict, probability })
}

/// One line of a certification report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationRecord {
    pub permutation: String,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    pub law: Law,
    pub predicted: bool,
    pub probability: f64,
}

impl CertificationRecord {
    pub fn new(perm: &ModePermutation, inputs: &[usize], outputs: &[usize], cert: &Certification) -> Self {
        Self {
            permutation: perm.to_string(),
            inputs: inputs.to_vec(),
            outputs: outputs.to_vec(),
            law: cert.verdict.law,
            predicted: cert.verdict.suppressed,
            probability: cert.probability,
        }
    }
}

/// All `k`-subsets of `1..=m` in lexicographic order.
pub fn port_subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn rec(start: usize, m: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for p in start..=m {
            if m - p + 1 < k - current.len() {
                break;
            }
            current.push(p);
            rec(p + 1, m, k, current, out);
            current.pop();
        }
    }
    rec(1, m, k, &mut current, &mut out);
    out
}

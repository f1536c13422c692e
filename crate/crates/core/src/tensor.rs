//! Interferometer matrices.
//!
//! Port indices are 1-based everywhere in the public API; the backing
//! `nalgebra` matrices are 0-based and row index = output port, column
//! index = input port.

use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub type CMatrix = DMatrix<Complex64>;

/// Max-norm tolerance on `U^dag U - 1` accepted at construction.
pub const UNITARITY_TOL: f64 = 1e-10;

/// Largest entry of `|M^dag M - 1|`.
pub fn unitarity_residual(matrix: &CMatrix) -> f64 {
    let product = matrix.adjoint() * matrix;
    let n = product.nrows();
    let mut worst = 0.0f64;
    for c in 0..n {
        for r in 0..n {
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((product[(r, c)] - target).norm());
        }
    }
    worst
}

/// An `m x m` unitary, the single-particle description of an interferometer.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix {
    inner: CMatrix,
}

impl UnitaryMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, UNITARITY_TOL)
    }

    pub fn with_tolerance(matrix: CMatrix, tol: f64) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::NotSquare { rows: matrix.nrows(), cols: matrix.ncols() });
        }
        if matrix.nrows() == 0 {
            return Err(Error::InvalidDimension("unitary needs at least one mode".into()));
        }
        let residual = unitarity_residual(&matrix);
        if !(residual <= tol) {
            return Err(Error::NotUnitary { residual, tol });
        }
        Ok(Self { inner: matrix })
    }

    pub fn modes(&self) -> usize {
        self.inner.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.inner
    }

    pub fn into_matrix(self) -> CMatrix {
        self.inner
    }

    /// `U_{output, input}` with 1-based ports.
    pub fn entry(&self, output: usize, input: usize) -> Result<Complex64> {
        let r = self.port_index(output)?;
        let c = self.port_index(input)?;
        Ok(self.inner[(r, c)])
    }

    pub(crate) fn at(&self, row: usize, col: usize) -> Complex64 {
        self.inner[(row, col)]
    }

    pub fn residual(&self) -> f64 {
        unitarity_residual(&self.inner)
    }

    pub fn adjoint(&self) -> UnitaryMatrix {
        UnitaryMatrix { inner: self.inner.adjoint() }
    }

    /// Converts a 1-based port to a 0-based index after range checking.
    pub fn port_index(&self, port: usize) -> Result<usize> {
        port_index(port, self.modes())
    }
}

pub(crate) fn port_index(port: usize, modes: usize) -> Result<usize> {
    if port == 0 || port > modes {
        Err(Error::PortOutOfRange { port, modes })
    } else {
        Ok(port - 1)
    }
}

/// Validates a list of distinct 1-based input ports and returns 0-based indices.
pub(crate) fn distinct_ports(ports: &[usize], modes: usize) -> Result<Vec<usize>> {
    let mut seen = vec![false; modes];
    ports
        .iter()
        .map(|&p| {
            let i = port_index(p, modes)?;
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::DuplicateInput(p));
            }
            Ok(i)
        })
        .collect()
}

/// Validates 1-based ports that may repeat.
pub(crate) fn any_ports(ports: &[usize], modes: usize) -> Result<Vec<usize>> {
    ports.iter().map(|&p| port_index(p, modes)).collect()
}

/// Haar-random unitary from a Ginibre matrix.
///
/// The QR factor is multiplied column-wise by the phases of the diagonal of
/// `R`, which makes the triangular factor positive and the result exactly
/// Haar distributed.
pub fn haar_random_unitary(modes: usize, seed: u64) -> Result<UnitaryMatrix> {
    if modes == 0 {
        return Err(Error::InvalidDimension("haar_random_unitary needs m >= 1".into()));
    }
    let mut rng = rng::from_seed(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    // Column-major fill order is part of the reproducibility contract.
    let ginibre = CMatrix::from_fn(modes, modes, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re * scale, im * scale)
    });
    let qr = ginibre.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..modes {
        let d = r[(j, j)];
        let norm = d.norm();
        let phase = if norm > 0.0 { d / norm } else { Complex64::new(1.0, 0.0) };
        for i in 0..modes {
            q[(i, j)] *= phase;
        }
    }
    UnitaryMatrix::new(q)
}

/// Discrete Fourier interferometer, `F_{oj} = exp(2 pi i (o-1)(j-1)/m)/sqrt(m)`.
pub fn fourier_unitary(modes: usize) -> Result<UnitaryMatrix> {
    if modes == 0 {
        return Err(Error::InvalidDimension("fourier_unitary needs m >= 1".into()));
    }
    let norm = 1.0 / (modes as f64).sqrt();
    let matrix = CMatrix::from_fn(modes, modes, |o, j| {
        // reduce the exponent first so large m keeps full accuracy
        let k = (o * j) % modes;
        let angle = 2.0 * std::f64::consts::PI * k as f64 / modes as f64;
        Complex64::from_polar(norm, angle)
    });
    UnitaryMatrix::new(matrix)
}

/// The balanced beamsplitter `(1/sqrt 2) [[1, 1], [-1, 1]]`.
pub fn balanced_beamsplitter() -> UnitaryMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let matrix = CMatrix::from_row_slice(
        2,
        2,
        &[Complex64::new(s, 0.0), Complex64::new(s, 0.0), Complex64::new(-s, 0.0), Complex64::new(s, 0.0)],
    );
    UnitaryMatrix { inner: matrix }
}

pub fn identity_unitary(modes: usize) -> Result<UnitaryMatrix> {
    if modes == 0 {
        return Err(Error::InvalidDimension("identity needs m >= 1".into()));
    }
    Ok(UnitaryMatrix { inner: CMatrix::identity(modes, modes) })
}

/// A permutation `pi` of the modes `1..=m`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModePermutation {
    // 0-based images
    image: Vec<usize>,
}

impl ModePermutation {
    pub fn identity(modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidDimension("permutation needs m >= 1".into()));
        }
        Ok(Self { image: (0..modes).collect() })
    }

    /// From the 1-based image list `[pi(1), ..., pi(m)]`.
    pub fn from_images(images: &[usize]) -> Result<Self> {
        let m = images.len();
        if m == 0 {
            return Err(Error::InvalidDimension("permutation needs m >= 1".into()));
        }
        let mut seen = vec![false; m];
        let mut image = Vec::with_capacity(m);
        for &p in images {
            if p == 0 || p > m {
                return Err(Error::InvalidPermutation(format!("image {p} outside 1..={m}")));
            }
            if std::mem::replace(&mut seen[p - 1], true) {
                return Err(Error::InvalidPermutation(format!("image {p} repeated")));
            }
            image.push(p - 1);
        }
        Ok(Self { image })
    }

    /// From disjoint 1-based cycles; each cycle `[c0, c1, ...]` maps `c0 -> c1 -> ... -> c0`.
    pub fn from_cycles(modes: usize, cycles: &[Vec<usize>]) -> Result<Self> {
        let mut perm = Self::identity(modes)?;
        let mut used = vec![false; modes];
        for cycle in cycles {
            for &p in cycle {
                let i = port_index(p, modes)
                    .map_err(|_| Error::InvalidPermutation(format!("element {p} outside 1..={modes}")))?;
                if std::mem::replace(&mut used[i], true) {
                    return Err(Error::InvalidPermutation(format!("element {p} appears in more than one place")));
                }
            }
            for (s, &p) in cycle.iter().enumerate() {
                let next = cycle[(s + 1) % cycle.len()];
                perm.image[p - 1] = next - 1;
            }
        }
        Ok(perm)
    }

    /// Parses cycle notation such as `"(1 2)(3 4)"`; `"()"` or `""` is the identity.
    pub fn parse_cycles(spec: &str, modes: usize) -> Result<Self> {
        let mut cycles = Vec::new();
        let mut rest = spec.trim();
        while !rest.is_empty() {
            let open = rest
                .strip_prefix('(')
                .ok_or_else(|| Error::Parse(format!("expected '(' in permutation {spec:?}")))?;
            let close = open
                .find(')')
                .ok_or_else(|| Error::Parse(format!("unclosed cycle in permutation {spec:?}")))?;
            let body = &open[..close];
            let cycle = body
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<usize>().map_err(|_| Error::Parse(format!("bad port {t:?} in permutation"))))
                .collect::<Result<Vec<_>>>()?;
            if !cycle.is_empty() {
                cycles.push(cycle);
            }
            rest = open[close + 1..].trim_start();
        }
        Self::from_cycles(modes, &cycles)
    }

    pub fn modes(&self) -> usize {
        self.image.len()
    }

    /// `pi(k)` for a 1-based `k`.
    pub fn apply(&self, k: usize) -> Result<usize> {
        Ok(self.image[port_index(k, self.modes())?] + 1)
    }

    pub(crate) fn image0(&self) -> &[usize] {
        &self.image
    }

    /// 1-based image list.
    pub fn images(&self) -> Vec<usize> {
        self.image.iter().map(|&i| i + 1).collect()
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.modes()];
        for (k, &v) in self.image.iter().enumerate() {
            inv[v] = k;
        }
        Self { image: inv }
    }

    /// Cycles (fixed points included), each starting at its smallest element,
    /// ordered by that element. 1-based.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.modes()];
        let mut out = Vec::new();
        for start in 0..self.modes() {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut k = start;
            while !seen[k] {
                seen[k] = true;
                cycle.push(k + 1);
                k = self.image[k];
            }
            out.push(cycle);
        }
        out
    }

    /// Parity, `(-1)^(m - #cycles)`.
    pub fn sign(&self) -> i8 {
        if (self.modes() - self.cycles().len()) % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// All permutations of `m` modes in lexicographic order of their image lists.
    pub fn all(modes: usize) -> Vec<ModePermutation> {
        let mut out = Vec::new();
        let mut current: Vec<usize> = (0..modes).collect();
        loop {
            out.push(Self { image: current.clone() });
            if !next_permutation(&mut current) {
                break;
            }
        }
        out
    }
}

impl fmt::Display for ModePermutation {
    /// Cycle notation without fixed points; the identity prints as `()`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut any = false;
        for cycle in self.cycles().into_iter().filter(|c| c.len() > 1) {
            any = true;
            let body: Vec<String> = cycle.iter().map(|p| p.to_string()).collect();
            write!(f, "({})", body.join(" "))?;
        }
        if !any {
            write!(f, "()")?;
        }
        Ok(())
    }
}

/// Advances `v` to the next lexicographic permutation; false after the last.
pub(crate) fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// `(P_pi)_{kj} = 1` iff `k = pi(j)`, so that `P_pi e_j = e_{pi(j)}`.
pub fn permutation_unitary(perm: &ModePermutation) -> UnitaryMatrix {
    let m = perm.modes();
    let mut matrix = CMatrix::zeros(m, m);
    for (j, &k) in perm.image.iter().enumerate() {
        matrix[(k, j)] = Complex64::new(1.0, 0.0);
    }
    UnitaryMatrix { inner: matrix }
}

/// The `n x n` block of `U` linking occupied inputs to detected outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct SubMatrix {
    /// 1-based output ports, one per row; may repeat.
    pub rows: Vec<usize>,
    /// 1-based distinct input ports, one per column.
    pub cols: Vec<usize>,
    /// `entries[(j, k)] = U_{o_j i_k}`.
    pub entries: CMatrix,
}

pub fn submatrix(u: &UnitaryMatrix, outputs: &[usize], inputs: &[usize]) -> Result<SubMatrix> {
    if outputs.len() != inputs.len() {
        return Err(Error::LengthMismatch { expected: inputs.len(), found: outputs.len() });
    }
    let cols = distinct_ports(inputs, u.modes())?;
    let rows = any_ports(outputs, u.modes())?;
    let entries = sub_by_index(u, &rows, &cols);
    Ok(SubMatrix { rows: outputs.to_vec(), cols: inputs.to_vec(), entries })
}

/// Submatrix from already validated 0-based indices.
pub(crate) fn sub_by_index(u: &UnitaryMatrix, rows: &[usize], cols: &[usize]) -> CMatrix {
    CMatrix::from_fn(rows.len(), cols.len(), |j, k| u.at(rows[j], cols[k]))
}

#[derive(Serialize, Deserialize)]
struct UnitaryJson {
    m: usize,
    rows: Vec<Vec<[f64; 2]>>,
}

/// Serializes to `{"m": <int>, "rows": [[[re, im], ...], ...]}` (row-major).
pub fn unitary_to_json(u: &UnitaryMatrix) -> String {
    let m = u.modes();
    let rows = (0..m)
        .map(|r| (0..m).map(|c| [u.at(r, c).re, u.at(r, c).im]).collect())
        .collect();
    serde_json::to_string(&UnitaryJson { m, rows }).expect("plain numeric JSON cannot fail to serialize")
}

pub fn unitary_from_json(text: &str) -> Result<UnitaryMatrix> {
    unitary_from_json_with_tolerance(text, UNITARITY_TOL)
}

pub fn unitary_from_json_with_tolerance(text: &str, tol: f64) -> Result<UnitaryMatrix> {
    let parsed: UnitaryJson = serde_json::from_str(text)?;
    if parsed.rows.len() != parsed.m {
        return Err(Error::LengthMismatch { expected: parsed.m, found: parsed.rows.len() });
    }
    let mut data = Vec::with_capacity(parsed.m * parsed.m);
    for row in &parsed.rows {
        if row.len() != parsed.m {
            return Err(Error::LengthMismatch { expected: parsed.m, found: row.len() });
        }
        data.extend(row.iter().map(|[re, im]| Complex64::new(*re, *im)));
    }
    UnitaryMatrix::with_tolerance(CMatrix::from_row_slice(parsed.m, parsed.m, &data), tol)
}

pub fn read_unitary(path: impl AsRef<Path>, tol: f64) -> Result<UnitaryMatrix> {
    let text = std::fs::read_to_string(path)?;
    unitary_from_json_with_tolerance(&text, tol)
}

pub fn write_unitary(path: impl AsRef<Path>, u: &UnitaryMatrix) -> Result<()> {
    std::fs::write(path, unitary_to_json(u))?;
    Ok(())
}

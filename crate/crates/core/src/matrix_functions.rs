//! Permanents, determinants and occupation factors.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::{port_index, CMatrix};

/// Below this size the Ryser loop runs on the calling thread.
const PARALLEL_MIN_N: usize = 14;
/// Fixed number of Gray-code ranges; independent of the thread pool so that
/// the reduction order, and therefore the result, never changes.
const RYSER_CHUNKS: u64 = 256;

const NAIVE_MAX_N: usize = 9;

fn check_square(a: &CMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    Ok(a.nrows())
}

/// Permanent by Ryser's formula, visiting column subsets in Gray-code order
/// so each step updates the row sums by a single column.
pub fn permanent(a: &CMatrix) -> Result<Complex64> {
    let n = check_square(a)?;
    match n {
        0 => return Ok(Complex64::new(1.0, 0.0)),
        1 => return Ok(a[(0, 0)]),
        2 => return Ok(a[(0, 0)] * a[(1, 1)] + a[(0, 1)] * a[(1, 0)]),
        _ => {}
    }
    let total: u64 = 1 << n;
    let sum = if n < PARALLEL_MIN_N {
        ryser_range(a, 1, total)
    } else {
        let step = total.div_ceil(RYSER_CHUNKS);
        let parts: Vec<Complex64> = (0..RYSER_CHUNKS)
            .into_par_iter()
            .map(|c| {
                let lo = (c * step).max(1);
                let hi = ((c + 1) * step).min(total);
                if lo >= hi {
                    Complex64::new(0.0, 0.0)
                } else {
                    ryser_range(a, lo, hi)
                }
            })
            .collect();
        parts.into_iter().sum()
    };
    // Ryser carries (-1)^n overall
    Ok(if n % 2 == 0 { sum } else { -sum })
}

/// Signed sum over Gray-code steps `k` in `[lo, hi)`, `lo >= 1`.
fn ryser_range(a: &CMatrix, lo: u64, hi: u64) -> Complex64 {
    let n = a.nrows();
    let mut rows = vec![Complex64::new(0.0, 0.0); n];
    let start = (lo - 1) ^ ((lo - 1) >> 1);
    for j in 0..n {
        if start >> j & 1 == 1 {
            for (i, r) in rows.iter_mut().enumerate() {
                *r += a[(i, j)];
            }
        }
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for k in lo..hi {
        let gray = k ^ (k >> 1);
        let j = k.trailing_zeros() as usize;
        if gray >> j & 1 == 1 {
            for (i, r) in rows.iter_mut().enumerate() {
                *r += a[(i, j)];
            }
        } else {
            for (i, r) in rows.iter_mut().enumerate() {
                *r -= a[(i, j)];
            }
        }
        let prod = rows.iter().fold(Complex64::new(1.0, 0.0), |p, r| p * r);
        if gray.count_ones() % 2 == 0 {
            acc += prod;
        } else {
            acc -= prod;
        }
    }
    acc
}

/// Permanent as the plain sum over all `n!` permutations. Test oracle only.
pub fn permanent_naive(a: &CMatrix) -> Result<Complex64> {
    let n = check_square(a)?;
    if n > NAIVE_MAX_N {
        return Err(Error::SizeLimit(format!("permanent_naive is limited to n <= {NAIVE_MAX_N}, got {n}")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = Complex64::new(0.0, 0.0);
    loop {
        total += perm.iter().enumerate().fold(Complex64::new(1.0, 0.0), |p, (k, &s)| p * a[(k, s)]);
        if !crate::tensor::next_permutation(&mut perm) {
            break;
        }
    }
    Ok(total)
}

/// Determinant by LU factorization with partial pivoting.
pub fn determinant(a: &CMatrix) -> Result<Complex64> {
    let n = check_square(a)?;
    let mut lu = a.clone();
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let mut pivot = col;
        let mut best = lu[(col, col)].norm();
        for r in col + 1..n {
            let v = lu[(r, col)].norm();
            if v > best {
                best = v;
                pivot = r;
            }
        }
        if best == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        if pivot != col {
            lu.swap_rows(pivot, col);
            det = -det;
        }
        let p = lu[(col, col)];
        det *= p;
        for r in col + 1..n {
            let f = lu[(r, col)] / p;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for c in col + 1..n {
                let v = lu[(col, c)];
                lu[(r, c)] -= f * v;
            }
        }
    }
    Ok(det)
}

/// Mode occupation numbers `M_k` of a detection pattern.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupationVector {
    counts: Vec<usize>,
}

impl OccupationVector {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidDimension("occupation vector needs m >= 1".into()));
        }
        Ok(Self { counts })
    }

    /// Counts how often each 1-based port appears in `ports`.
    pub fn from_ports(ports: &[usize], modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidDimension("occupation vector needs m >= 1".into()));
        }
        let mut counts = vec![0; modes];
        for &p in ports {
            counts[port_index(p, modes)?] += 1;
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn modes(&self) -> usize {
        self.counts.len()
    }

    pub fn particles(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Ascending 1-based port list with multiplicities.
    pub fn ports(&self) -> Vec<usize> {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(k, &c)| std::iter::repeat_n(k + 1, c))
            .collect()
    }
}

fn factorial(k: usize) -> u128 {
    (1..=k as u128).product()
}

/// `prod_k M_k!`, the permanent of `I_{jk} = delta(o_j, o_k)`.
pub fn occupation_normalization(occupation: &OccupationVector) -> u128 {
    occupation.counts.iter().map(|&c| factorial(c)).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand_distr::{Distribution, StandardNormal};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(n: usize, seed: u64) -> CMatrix {
        let mut r = rng::from_seed(seed);
        CMatrix::from_fn(n, n, |_, _| {
            let re: f64 = StandardNormal.sample(&mut r);
            let im: f64 = StandardNormal.sample(&mut r);
            c(re, im)
        })
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn permanent_small_cases() {
        let (a, b, cc, d) = (c(1.0, 2.0), c(-0.5, 0.3), c(2.0, -1.0), c(0.7, 0.1));
        let m = CMatrix::from_row_slice(2, 2, &[a, b, cc, d]);
        assert!((permanent(&m).unwrap() - (a * d + b * cc)).norm() < 1e-15);
        assert!((permanent_naive(&m).unwrap() - (a * d + b * cc)).norm() < 1e-15);
        assert_eq!(permanent(&CMatrix::identity(3, 3)).unwrap(), c(1.0, 0.0));
        assert_eq!(permanent_naive(&CMatrix::identity(4, 4)).unwrap(), c(1.0, 0.0));
        assert!((permanent(&CMatrix::from_element(3, 3, c(1.0, 0.0))).unwrap() - c(6.0, 0.0)).norm() < 1e-12);
        assert_eq!(permanent(&CMatrix::zeros(0, 0)).unwrap(), c(1.0, 0.0));
        assert!(matches!(permanent(&CMatrix::zeros(2, 3)), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn all_ones_permanent_is_factorial() {
        for n in 1..=10 {
            let p = permanent(&CMatrix::from_element(n, n, c(1.0, 0.0))).unwrap();
            let f = factorial(n) as f64;
            assert!((p.re - f).abs() / f < 1e-12 && p.im == 0.0, "n={n}");
        }
    }

    #[test]
    fn ryser_matches_naive_6x6() {
        let a = random_matrix(6, 11);
        assert!(rel(permanent(&a).unwrap(), permanent_naive(&a).unwrap()) < 1e-10);
    }

    #[test]
    fn naive_guard() {
        assert!(matches!(permanent_naive(&CMatrix::identity(10, 10)), Err(Error::SizeLimit(_))));
    }

    #[test]
    fn parallel_path_agrees_with_serial_expansion() {
        // n = 14 takes the chunked path; expand along the first row with the
        // serial path on each 13x13 minor
        let a = random_matrix(14, 3);
        let mut want = c(0.0, 0.0);
        for j in 0..14 {
            let minor = a.clone().remove_row(0).remove_column(j);
            want += a[(0, j)] * permanent(&minor).unwrap();
        }
        let got = permanent(&a).unwrap();
        assert!(rel(got, want) < 1e-10, "{got} vs {want}");
        assert_eq!(got, permanent(&a).unwrap());
    }

    #[test]
    fn determinant_cases() {
        let (a, b, cc, d) = (c(1.0, 2.0), c(-0.5, 0.3), c(2.0, -1.0), c(0.7, 0.1));
        let m = CMatrix::from_row_slice(2, 2, &[a, b, cc, d]);
        assert!((determinant(&m).unwrap() - (a * d - b * cc)).norm() < 1e-14);
        assert!((determinant(&CMatrix::identity(5, 5)).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        let mut r = random_matrix(4, 2);
        let row = r.row(0).into_owned();
        r.set_row(2, &row);
        assert!(determinant(&r).unwrap().norm() < 1e-12);
        assert_eq!(determinant(&CMatrix::zeros(0, 0)).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn determinant_matches_nalgebra() {
        for seed in 0..20 {
            let a = random_matrix(5, seed);
            assert!(rel(determinant(&a).unwrap(), a.clone().determinant()) < 1e-10);
        }
    }

    #[test]
    fn occupation_examples() {
        let n = |v: Vec<usize>| occupation_normalization(&OccupationVector::new(v).unwrap());
        assert_eq!(n(vec![1, 1, 0]), 1);
        assert_eq!(n(vec![2, 0]), 2);
        assert_eq!(n(vec![3, 1, 2]), 12);
        let occ = OccupationVector::from_ports(&[3, 1, 3], 4).unwrap();
        assert_eq!(occ.counts(), &[1, 0, 2, 0]);
        assert_eq!(occ.ports(), vec![1, 3, 3]);
        assert_eq!(occ.particles(), 3);
        assert!(OccupationVector::from_ports(&[5], 4).is_err());
    }
}

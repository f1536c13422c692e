//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use interfero::suppression::*;
use interfero::tensor::{CMatrix, ModePermutation, UnitaryMatrix};
use interfero::ParticleClass;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for k in 0..used.len() {
            if !used[k] {
                used[k] = true;
                cur.push(k);
                rec(cur, used, out);
                cur.pop();
                used[k] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Sign by counting inversions.
pub fn sign(p: &[usize]) -> f64 {
    let mut inv = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 { 1.0 } else { -1.0 }
}

fn u(u: &UnitaryMatrix, o: usize, i: usize) -> Complex64 {
    u.entry(o, i).unwrap()
}

/// `sum_{s, s'} prod_k U_{o_k i_s(k)} conj(U_{o_k i_s'(k)}) / prod M!` (bosons, sign-weighted for fermions).
pub fn double_sum_probability(un: &UnitaryMatrix, inputs: &[usize], outputs: &[usize], fermion: bool) -> f64 {
    let n = inputs.len();
    let perms = permutations(n);
    let mut total = c(0.0, 0.0);
    for s in &perms {
        for t in &perms {
            let mut term = c(1.0, 0.0);
            for k in 0..n {
                term *= u(un, outputs[k], inputs[s[k]]) * u(un, outputs[k], inputs[t[k]]).conj();
            }
            if fermion {
                term *= sign(s) * sign(t);
            }
            total += term;
        }
    }
    let mut norm = 1.0;
    let mut sorted = outputs.to_vec();
    sorted.sort();
    let mut run = 1;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
            norm *= run as f64;
        } else {
            run = 1;
        }
    }
    total.re / norm
}

/// Partial distinguishability through explicit internal states: particle `k`
/// carries `psi[k]` in a `d`-dimensional internal space; detectors resolve
/// the port but not the internal state, so probabilities of all internal
/// labels are summed.
pub fn internal_state_probability(
    un: &UnitaryMatrix,
    inputs: &[usize],
    outputs: &[usize],
    psi: &[Vec<Complex64>],
    fermion: bool,
) -> f64 {
    let n = inputs.len();
    let d = psi[0].len();
    let perms = permutations(n);
    let mut labels = vec![0usize; n];
    let mut total = 0.0;
    loop {
        let mut amp = c(0.0, 0.0);
        for s in &perms {
            let mut term = c(1.0, 0.0);
            for j in 0..n {
                let k = s[j];
                term *= u(un, outputs[j], inputs[k]) * psi[k][labels[j]];
            }
            amp += if fermion { term * sign(s) } else { term };
        }
        total += amp.norm_sqr();
        let mut pos = 0;
        loop {
            if pos == n {
                return total;
            }
            labels[pos] += 1;
            if labels[pos] < d {
                break;
            }
            labels[pos] = 0;
            pos += 1;
        }
    }
}

/// `S_kl = <psi_k|psi_l>`.
pub fn gram_of(psi: &[Vec<Complex64>]) -> CMatrix {
    let n = psi.len();
    CMatrix::from_fn(n, n, |k, l| {
        if k == l {
            c(1.0, 0.0)
        } else {
            psi[k].iter().zip(&psi[l]).map(|(a, b)| a.conj() * b).sum()
        }
    })
}

/// Random unit vectors in `C^d`.
pub fn random_states(n: usize, d: usize, seed: u64) -> Vec<Vec<Complex64>> {
    let mut r = ChaCha20Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let v: Vec<Complex64> = (0..d).map(|_| c(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5)).collect();
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v.into_iter().map(|z| z / norm).collect()
        })
        .collect()
}

/// `sum_{s,s'} sgn prod_k S[s'(k), s(k)] U_{o_k i_s(k)} conj(U_{o_k i_s'(k)})`.
pub fn partial_double_sum(un: &UnitaryMatrix, inputs: &[usize], outputs: &[usize], s: &CMatrix, fermion: bool) -> f64 {
    let n = inputs.len();
    let perms = permutations(n);
    let mut total = c(0.0, 0.0);
    for p in &perms {
        for q in &perms {
            let mut term = c(1.0, 0.0);
            for k in 0..n {
                term *= s[(q[k], p[k])] * u(un, outputs[k], inputs[p[k]]) * u(un, outputs[k], inputs[q[k]]).conj();
            }
            if fermion {
                term *= sign(p) * sign(q);
            }
            total += term;
        }
    }
    total.re
}

/// `<n_a n_b> - <n_a><n_b>` from an explicit list of (occupation, probability).
pub fn correlation_from_distribution(entries: &[(Vec<usize>, f64)], a: usize, b: usize) -> f64 {
    let mut nab = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (occ, p) in entries {
        let (x, y) = (occ[a - 1] as f64, occ[b - 1] as f64);
        nab += p * x * y;
        na += p * x;
        nb += p * y;
    }
    nab - na * nb
}

pub fn random_complex_matrix(n: usize, seed: u64) -> CMatrix {
    let mut r = ChaCha20Rng::seed_from_u64(seed);
    CMatrix::from_fn(n, n, |_, _| c(2.0 * r.random::<f64>() - 1.0, 2.0 * r.random::<f64>() - 1.0))
}

pub const INDISTINGUISHABLE: [ParticleClass; 2] = [ParticleClass::Boson, ParticleClass::Fermion];

/// Input sets mapped onto themselves by `p`, `1 <= n <= 4`.
pub fn symmetric_inputs(p: &ModePermutation) -> Vec<Vec<usize>> {
    let m = p.modes();
    (1..=4.min(m))
        .flat_map(|n| port_subsets(m, n))
        .filter(|s| input_symmetry(p, s).unwrap().symmetric)
        .collect()
}

#[derive(Default, Debug)]
pub struct Tally {
    pub events: usize,
    /// bosonic, fermionic, extended
    pub flagged: [usize; 3],
    pub violations: usize,
    pub superset_breaks: usize,
}

/// Exhaustive suppression-law check over every permutation of `m` modes,
/// every symmetric input set with up to 4 particles and every distinct-output event.
pub fn sweep(m: usize) -> Tally {
    let mut t = Tally::default();
    for p in ModePermutation::all(m) {
        let a = eigensystem(&p).a;
        for inputs in symmetric_inputs(&p) {
            for outputs in port_subsets(m, inputs.len()) {
                t.events += 1;
                let b = predict_suppressed(&p, &inputs, &outputs, ParticleClass::Boson).unwrap();
                let f = predict_suppressed(&p, &inputs, &outputs, ParticleClass::Fermion).unwrap();
                let e = predict_suppressed_extended(&p, &inputs, &outputs).unwrap();
                let pb = interfero::interference::transition_probability(&a, &inputs, &outputs, ParticleClass::Boson).unwrap();
                let pf = interfero::interference::transition_probability(&a, &inputs, &outputs, ParticleClass::Fermion).unwrap();
                for (k, (flag, prob)) in [(b.suppressed, pb), (f.suppressed, pf), (e.suppressed, pf)].into_iter().enumerate() {
                    if flag {
                        t.flagged[k] += 1;
                        if prob >= CERTIFY_TOL {
                            t.violations += 1;
                        }
                    }
                }
                if f.suppressed && !e.suppressed {
                    t.superset_breaks += 1;
                }
            }
        }
    }
    t
}


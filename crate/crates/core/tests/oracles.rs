mod common;

use common::*;
use interfero::correlation::*;
use interfero::interference::*;
use interfero::sampling::{enumerate_distribution, estimate_correlations_with_errors, sample_distinguishable_direct, sample_exact};
use interfero::suppression::port_subsets;
use interfero::tensor::{fourier_unitary, haar_random_unitary};
use interfero::ParticleClass;

#[test]
fn boson_probability_matches_double_sum_with_collisions() {
    for seed in 0..10 {
        let u = haar_random_unitary(4, seed).unwrap();
        for outs in [[1, 1, 2, 3], [2, 2, 2, 4], [1, 2, 3, 4], [4, 4, 1, 1]] {
            let want = double_sum_probability(&u, &[1, 2, 3, 4], &outs, false);
            let got = transition_probability(&u, &[1, 2, 3, 4], &outs, ParticleClass::Boson).unwrap();
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
        let want = double_sum_probability(&u, &[1, 3, 4], &[1, 2, 4], true);
        let got = transition_probability(&u, &[1, 3, 4], &[1, 2, 4], ParticleClass::Fermion).unwrap();
        assert!((got - want).abs() < 1e-10);
    }
}

#[test]
fn partial_probability_matches_internal_states() {
    for seed in 0..12 {
        let n = 2 + (seed as usize % 3);
        let m = n + 2;
        let u = haar_random_unitary(m, 100 + seed).unwrap();
        let psi = random_states(n, 2, seed);
        let s = gram_of(&psi);
        let gram = GramMatrix::new(s.clone()).unwrap();
        let inputs: Vec<usize> = (1..=n).collect();
        for outs in port_subsets(m, n).into_iter().take(6) {
            for class in INDISTINGUISHABLE {
                let fermion = class == ParticleClass::Fermion;
                let want = internal_state_probability(&u, &inputs, &outs, &psi, fermion);
                let direct = partial_double_sum(&u, &inputs, &outs, &s, fermion);
                let got = transition_probability_partial(&u, &inputs, &outs, &gram, class).unwrap();
                assert!((got - want).abs() < 1e-10, "{class} seed {seed}: {got} vs {want}");
                assert!((direct - want).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn partial_limits_match_pure_classes() {
    for seed in 0..8 {
        let u = haar_random_unitary(5, seed).unwrap();
        let inputs = [1, 2, 4];
        for outs in port_subsets(5, 3) {
            for class in INDISTINGUISHABLE {
                let ones = transition_probability_partial(&u, &inputs, &outs, &GramMatrix::all_ones(3), class).unwrap();
                let pure = transition_probability(&u, &inputs, &outs, class).unwrap();
                assert!((ones - pure).abs() < 1e-12);
                let id = transition_probability_partial(&u, &inputs, &outs, &GramMatrix::identity(3), class).unwrap();
                let dist = transition_probability(&u, &inputs, &outs, ParticleClass::Distinguishable).unwrap();
                assert!((id - dist).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn hom_curve_matches_closed_form() {
    let grid: Vec<f64> = (0..50).map(|k| k as f64 * 0.06).collect();
    let b = hom_dip_curve(&grid, ParticleClass::Boson).unwrap();
    let f = hom_dip_curve(&grid, ParticleClass::Fermion).unwrap();
    for (k, x) in grid.iter().enumerate() {
        let e = (-x * x).exp();
        assert!((b[k] - 0.5 * (1.0 - e)).abs() < 1e-12);
        assert!((f[k] - 0.5 * (1.0 + e)).abs() < 1e-12);
    }
}

#[test]
fn distributions_are_normalized() {
    for seed in 0..20 {
        let m = 2 + seed as usize % 5;
        let n = 1 + seed as usize % 3;
        let n = n.min(m);
        let u = haar_random_unitary(m, seed).unwrap();
        let inputs: Vec<usize> = (1..=n).collect();
        for class in [ParticleClass::Boson, ParticleClass::Fermion, ParticleClass::Distinguishable] {
            let d = enumerate_distribution(&u, &inputs, class, None).unwrap();
            assert!((d.total_mass - 1.0).abs() < 1e-9);
            assert!(d.entries.iter().all(|e| e.1 >= 0.0));
        }
    }
}

#[test]
fn input_order_does_not_change_probabilities() {
    let u = haar_random_unitary(5, 77).unwrap();
    for outs in [[1, 2, 5], [3, 3, 4], [2, 2, 2]] {
        for class in [ParticleClass::Boson, ParticleClass::Fermion, ParticleClass::Distinguishable] {
            let a = transition_probability(&u, &[1, 3, 4], &outs, class).unwrap();
            let b = transition_probability(&u, &[4, 1, 3], &outs, class).unwrap();
            let c = transition_probability(&u, &[1, 3, 4], &[outs[2], outs[0], outs[1]], class).unwrap();
            assert!((a - b).abs() < 1e-12 && (a - c).abs() < 1e-12);
        }
    }
}

fn enumerated(u: &interfero::tensor::UnitaryMatrix, inputs: &[usize], class: ParticleClass) -> Vec<(Vec<usize>, f64)> {
    enumerate_distribution(u, inputs, class, None)
        .unwrap()
        .entries
        .into_iter()
        .map(|(o, p)| (o.counts().to_vec(), p))
        .collect()
}

#[test]
fn closed_form_correlations_match_number_operators() {
    for seed in 0..12 {
        let m = 2 + seed as usize % 4;
        let n = (1 + seed as usize % 3).min(m);
        let u = haar_random_unitary(m, 500 + seed).unwrap();
        let inputs: Vec<usize> = (1..=n).collect();
        for class in [ParticleClass::Boson, ParticleClass::Fermion, ParticleClass::Distinguishable] {
            let dist = enumerated(&u, &inputs, class);
            let data = correlation_dataset(&u, &inputs, class, None).unwrap();
            for (a, b, v) in data.pairs() {
                let want = correlation_from_distribution(&dist, a, b);
                assert!((v - want).abs() < 1e-10, "{class} m={m} n={n} ({a},{b}): {v} vs {want}");
            }
        }
        let f = correlation_dataset(&u, &inputs, ParticleClass::Fermion, None).unwrap();
        let t = correlation_dataset(&u, &inputs, ParticleClass::ThermalBoson, None).unwrap();
        for (x, y) in f.values().iter().zip(t.values()) {
            assert_eq!(*x, -*y);
        }
    }
}

#[test]
fn partial_correlations_match_distribution() {
    // bunched events are outside the partial engine, so take them from the
    // explicit two-particle internal-state model
    let u = haar_random_unitary(4, 9).unwrap();
    let psi = random_states(2, 2, 4);
    let gram = GramMatrix::new(gram_of(&psi)).unwrap();
    let inputs = [1, 3];
    for class in INDISTINGUISHABLE {
        let fermion = class == ParticleClass::Fermion;
        let mut entries = Vec::new();
        for a in 1..=4 {
            for b in a..=4 {
                let p = if a == b {
                    bunched_probability(&u, &inputs, a, &psi, fermion)
                } else {
                    transition_probability_partial(&u, &inputs, &[a, b], &gram, class).unwrap()
                };
                let mut occ = vec![0; 4];
                occ[a - 1] += 1;
                occ[b - 1] += 1;
                entries.push((occ, p));
            }
        }
        let mass: f64 = entries.iter().map(|e| e.1).sum();
        assert!((mass - 1.0).abs() < 1e-10, "{mass}");
        let data = correlation_dataset(&u, &inputs, class, Some(&gram)).unwrap();
        for (a, b, v) in data.pairs() {
            let want = correlation_from_distribution(&entries, a, b);
            assert!((v - want).abs() < 1e-10, "{class} ({a},{b}) {v} vs {want}");
        }
    }
}

/// Probability that both of two particles leave through port `o`.
fn bunched_probability(
    u: &interfero::tensor::UnitaryMatrix,
    inputs: &[usize],
    o: usize,
    psi: &[Vec<num_complex::Complex64>],
    fermion: bool,
) -> f64 {
    let d = psi[0].len();
    let s = if fermion { -1.0 } else { 1.0 };
    let a = u.entry(o, inputs[0]).unwrap();
    let b = u.entry(o, inputs[1]).unwrap();
    let mut total = 0.0;
    for x in 0..d {
        for y in x..d {
            // creation operators for internal modes x and y of port o
            let amp = a * b * (psi[0][x] * psi[1][y] + s * psi[0][y] * psi[1][x]);
            total += if x == y { amp.norm_sqr() / 2.0 } else { amp.norm_sqr() };
        }
    }
    total
}

#[test]
fn fermion_correlation_closed_form() {
    for seed in 0..10 {
        let u = haar_random_unitary(7, seed).unwrap();
        let inputs = [2, 3, 6];
        let d = correlation_dataset(&u, &inputs, ParticleClass::Fermion, None).unwrap();
        for (a, b, v) in d.pairs() {
            let s: num_complex::Complex64 =
                inputs.iter().map(|&k| u.entry(b, k).unwrap() * u.entry(a, k).unwrap().conj()).sum();
            assert!((v + s.norm_sqr()).abs() < 1e-12);
        }
    }
}

#[test]
fn exact_first_moments_match_datasets() {
    for seed in 0..100 {
        let m = 2 + seed as usize % 9;
        let n = (1 + seed as usize % 4).min(m);
        let u = haar_random_unitary(m, 1000 + seed).unwrap();
        let inputs: Vec<usize> = (1..=n).collect();
        for class in ParticleClass::ALL {
            let d = correlation_dataset(&u, &inputs, class, None).unwrap();
            let brute = moments(&d, 1).unwrap();
            let exact = exact_first_moment(&u, &inputs, class).unwrap();
            assert!((brute - exact).abs() < 1e-10, "{class}: {brute} vs {exact}");
        }
    }
}

#[test]
fn fourier_closed_forms_match_numerics() {
    for m in 4..=8 {
        let f = fourier_unitary(m).unwrap();
        for n in 1..=4.min(m) {
            let inputs: Vec<usize> = (1..=n).collect();
            let closed = fourier_moments(m, n).unwrap();
            for class in ParticleClass::ALL {
                let d = correlation_dataset(&f, &inputs, class, None).unwrap();
                assert!((moments(&d, 1).unwrap() - closed.m1(class)).abs() < 1e-10, "m={m} n={n} {class}");
            }
            if let Some(m2) = closed.m2_boson {
                let d = correlation_dataset(&f, &inputs, ParticleClass::Boson, None).unwrap();
                assert!((moments(&d, 2).unwrap() - m2).abs() < 1e-10, "m2 m={m} n={n}");
            } else {
                assert!(m + 1 < 2 * n);
            }
        }
    }
}

#[test]
fn direct_sampler_marginals_converge() {
    let u = haar_random_unitary(5, 21).unwrap();
    let inputs = [1, 2, 5];
    let count = 100_000;
    let batch = sample_distinguishable_direct(&u, &inputs, 4, count).unwrap();
    for o in 1..=5 {
        let xs: Vec<f64> = batch.samples.iter().map(|s| s.counts()[o - 1] as f64).collect();
        let mean = xs.iter().sum::<f64>() / count as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
        let want = expected_number(&u, &inputs, o).unwrap();
        assert!((mean - want).abs() < 5.0 * (var / count as f64).sqrt());
    }
}

#[test]
fn two_samplers_agree_by_chi_square() {
    let u = haar_random_unitary(3, 5).unwrap();
    let inputs = [1, 2];
    let exact = enumerate_distribution(&u, &inputs, ParticleClass::Distinguishable, None).unwrap();
    let count = 50_000;
    let batch = sample_distinguishable_direct(&u, &inputs, 6, count).unwrap();
    let mut chi2 = 0.0;
    for (occ, p) in &exact.entries {
        let observed = batch.samples.iter().filter(|s| *s == occ).count() as f64;
        let expected = p * count as f64;
        chi2 += (observed - expected).powi(2) / expected;
    }
    // 6 cells, 5 degrees of freedom; 20.5 is the 0.999 quantile
    assert!(chi2 < 20.5, "chi2 = {chi2}");
    // the exact sampler passes the same test
    let batch = sample_exact(&exact, 6, count).unwrap();
    let chi2: f64 = exact
        .entries
        .iter()
        .map(|(occ, p)| {
            let o = batch.samples.iter().filter(|s| *s == occ).count() as f64;
            (o - p * count as f64).powi(2) / (p * count as f64)
        })
        .sum();
    assert!(chi2 < 20.5, "chi2 = {chi2}");
}

#[test]
fn estimator_errors_shrink_with_count() {
    let u = haar_random_unitary(4, 13).unwrap();
    let small = estimate_correlations_with_errors(&sample_distinguishable_direct(&u, &[1, 2], 1, 20_000).unwrap()).unwrap();
    let large = estimate_correlations_with_errors(&sample_distinguishable_direct(&u, &[1, 2], 1, 80_000).unwrap()).unwrap();
    for (s, l) in small.standard_errors.iter().zip(&large.standard_errors) {
        let ratio = s / l;
        assert!((ratio - 2.0).abs() < 0.3, "ratio {ratio}");
    }
}

#[test]
fn gram_oracle_matches_wave_packets() {
    let train = WavePacketTrain { arrival_times: vec![0.0, 0.3, 1.1], central_frequency: 2.0, bandwidth: 1.5 };
    let g = gram_from_wave_packets(&train).unwrap();
    for j in 0..3 {
        for k in 0..3 {
            let d: f64 = train.arrival_times[j] - train.arrival_times[k];
            assert!((g.entries()[(j, k)].norm_sqr() - (-(1.5 * d).powi(2)).exp()).abs() < 1e-14);
        }
    }
}

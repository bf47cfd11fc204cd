// SPDX-License-Identifier: MIT OR Apache-2.0

//! Monte-Carlo checks of distributional facts the pipeline relies on.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use seqar_core::mc_harness::{run_cell, PipelineConfig};
use seqar_core::model_sim::{generate_trajectory, NoiseSpec, SignalKind, SignalSpec};
use seqar_core::seq_estimator::{build_regression, compute_partition, preliminary_estimate, GammaGating};

fn constant(c: f64) -> SignalSpec {
    SignalSpec { kind: SignalKind::Tabulated { values: vec![c, c] }, a: 0.0, b: 1.0, stability_eps: 0.1, lipschitz_l: 1.0 }
}

#[test]
fn stationary_variance_for_constant_coefficient() {
    // Var y = 1 / (1 - 0.25) after burn-in.
    let traj = generate_trajectory(&constant(0.5), &NoiseSpec::gaussian(), 400_000, 9).unwrap();
    let tail = &traj.y[1_000..];
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let var = tail.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / tail.len() as f64;
    assert!((var - 4.0 / 3.0).abs() < 0.03, "variance {var}");
}

#[test]
fn noise_draws_have_unit_variance_and_known_kurtosis() {
    for (noise, fourth) in [
        (NoiseSpec::gaussian(), 3.0),
        (NoiseSpec::uniform(), 1.8),
        // Scaled Beta(3/2, 3/2) on [-2, 2]: 16 * 3 / ((2a + 1)(2a + 3)).
        (NoiseSpec::bounded_symmetric(2.0), 2.0),
    ] {
        let sampler = noise.sampler().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let draws = 1_000_000;
        let (mut m1, mut m2, mut m4) = (0.0, 0.0, 0.0);
        for _ in 0..draws {
            let x = sampler.sample(&mut rng);
            m1 += x;
            m2 += x * x;
            m4 += x * x * x * x;
        }
        let n = draws as f64;
        assert!((m1 / n).abs() < 5e-3, "{}: mean {}", noise.label(), m1 / n);
        assert!((m2 / n - 1.0).abs() < 5e-3, "{}: variance {}", noise.label(), m2 / n);
        assert!((m4 / n - fourth).abs() < 0.05 * fourth, "{}: fourth moment {}", noise.label(), m4 / n);
    }
}

#[test]
fn sequential_estimate_is_centered_for_zero_signal() {
    let n = 2_000;
    let part = compute_partition(n, 0.0, 1.0, 0.5).unwrap();
    let mut sum = 0.0;
    let mut count = 0.0;
    for seed in 0..200 {
        let traj = generate_trajectory(&constant(0.0), &NoiseSpec::gaussian(), n, seed).unwrap();
        let reg = build_regression(&traj, &part, GammaGating::PerPoint);
        for p in &reg.points {
            sum += p.s_star;
            count += 1.0;
        }
    }
    // Each ratio has variance about 1/H ~ 1/37.
    let mean = sum / count;
    assert!(mean.abs() < 4.0 * (1.0 / 37.0_f64 / count).sqrt(), "mean {mean}");
}

#[test]
fn preliminary_estimate_concentrates() {
    let traj = generate_trajectory(&constant(0.6), &NoiseSpec::uniform(), 100_000, 5).unwrap();
    let est = preliminary_estimate(&traj.y, 1_000, 90_000);
    assert!((est - 0.6).abs() < 0.01, "estimate {est}");
}

#[test]
fn small_sample_risk_regime() {
    let cell = run_cell(&SignalSpec::s1(), &NoiseSpec::gaussian(), 200, 40, 8, &PipelineConfig::default()).unwrap();
    assert_eq!(cell.d, 15);
    assert!(cell.risk > 0.0 && cell.risk < cell.signal_norm_sq, "risk {}", cell.risk);
    assert!((cell.relative_risk - cell.risk / 0.125).abs() < 1e-3);
    assert!(cell.mean_selected_error >= 0.0 && cell.mean_oracle_error <= cell.mean_selected_error + 1e-12);
}

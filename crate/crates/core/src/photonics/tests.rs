use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use super::*;
use crate::cv::states::{gaussian, ground, two_peak};
use crate::cv::{conditional_brackets, momentum_amplitudes, weak_char_fn};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn small_grid() -> Grid {
    Grid::new(128, 24.0).unwrap()
}

#[test]
fn prepare_examples() {
    let g = small_grid();
    let s = prepare_photon(&ground(&g).unwrap(), horizontal()).unwrap();
    assert!((s.norm_sq() - 1.0).abs() < 1e-12);
    let s = prepare_photon(&two_peak(&g, 4.0, 1.0, 0.3).unwrap(), diagonal()).unwrap();
    assert!((s.norm_sq() - 1.0).abs() < 1e-12);
    let bad = [c(1.0, 0.0), c(0.5, 0.0)];
    assert!(matches!(prepare_photon(&ground(&g).unwrap(), bad), Err(Error::NormViolation { .. })));
}

#[test]
fn rotation_examples() {
    let g = small_grid();
    let w = two_peak(&g, 3.0, 0.8, 1.1).unwrap();
    let s = prepare_photon(&w, diagonal()).unwrap();
    let same = slm_weak_rotation(&s, &SlmSetting::new(g.k(70), 0.4, 0.0).unwrap());
    assert_eq!(same, s);

    let rotated = slm_weak_rotation(&s, &SlmSetting::new(g.k(70), 0.4, 0.3).unwrap());
    assert!((rotated.norm_sq() - 1.0).abs() < 1e-12);

    // uniform amplitude, k = 0, φ = π/2: every point rotates by ε
    let flat = WaveFunction::from_fn(g, |_| c(1.0, 0.0)).unwrap();
    let eps = 0.02;
    let r = slm_weak_rotation(&prepare_photon(&flat, horizontal()).unwrap(), &SlmSetting::new(0.0, FRAC_PI_2, eps).unwrap());
    let (h, v) = r.components();
    let a = flat.samples()[0];
    assert!(h.iter().all(|z| (z - a * eps.cos()).norm() < 1e-15));
    assert!(v.iter().all(|z| (z - a * eps.sin()).norm() < 1e-15));

    // two points where sin(kx + φ) = ±1 rotate in opposite directions
    // k Δx = π with Δx = 4 dx
    let k = g.k(g.points() / 2 + g.points() / 8);
    let (i1, i2) = (g.points() / 2, g.points() / 2 + 4);
    let set = SlmSetting::new(k, FRAC_PI_2, 0.1).unwrap();
    let mut samples = vec![c(0.0, 0.0); g.points()];
    samples[i1] = c(1.0, 0.0);
    samples[i2] = c(0.0, 1.0);
    let two = WaveFunction::normalized(g, samples).unwrap();
    let r = slm_weak_rotation(&prepare_photon(&two, horizontal()).unwrap(), &set);
    let (t1, t2) = (set.angle(g.x(i1)), set.angle(g.x(i2)));
    assert!((t1 - 0.1).abs() < 1e-12 && (t2 + 0.1).abs() < 1e-12);
    let (h, v) = r.components();
    for (i, t) in [(i1, t1), (i2, t2)] {
        let a = two.samples()[i];
        assert!((h[i] - a * t.cos()).norm() < 1e-15);
        assert!((v[i] - a * t.sin()).norm() < 1e-15);
    }
}

#[test]
fn propagation_examples() {
    let g = small_grid();
    let w = gaussian(&g, 0.5, 0.3, 1.1).unwrap();
    let set = SlmSetting::new(0.0, 0.0, 0.0).unwrap();
    let p = setting_probabilities(&w, MeasurementOrder::XThenP, &set, Analyzer::HorizontalVertical).unwrap();
    let tilde = momentum_amplitudes(&g, w.samples());
    for (m, z) in tilde.iter().enumerate() {
        assert!((p.plus[m] - g.dp() * z.norm_sqr()).abs() < 1e-14);
        assert_eq!(p.minus[m], 0.0);
    }

    for order in [MeasurementOrder::XThenP, MeasurementOrder::PThenX] {
        for an in [Analyzer::HorizontalVertical, Analyzer::Diagonal, Analyzer::Circular] {
            let set = SlmSetting::new(g.k(67), 0.7, 0.2).unwrap();
            let p = setting_probabilities(&w, order, &set, an).unwrap();
            assert!((p.total() - 1.0).abs() < 1e-10);
        }
    }
    let s = prepare_photon(&w, horizontal()).unwrap();
    assert!(matches!(
        propagate_and_analyze(&s, MeasurementOrder::PThenX, Analyzer::Diagonal),
        Err(Error::PlaneMismatch { .. })
    ));
}

#[test]
fn crossed_signal_is_quadratic_in_coupling() {
    let g = small_grid();
    let w = ground(&g).unwrap();
    let signal = |eps: f64| {
        let set = SlmSetting::new(g.k(66), 0.3, eps).unwrap();
        setting_probabilities(&w, MeasurementOrder::XThenP, &set, Analyzer::HorizontalVertical)
            .unwrap()
            .minus
            .iter()
            .sum::<f64>()
    };
    let eps = [0.01f64, 0.02, 0.04];
    let logs: Vec<(f64, f64)> = eps.iter().map(|&e| (e.ln(), signal(e).ln())).collect();
    let n = logs.len() as f64;
    let (mx, my) = (logs.iter().map(|l| l.0).sum::<f64>() / n, logs.iter().map(|l| l.1).sum::<f64>() / n);
    let slope = logs.iter().map(|l| (l.0 - mx) * (l.1 - my)).sum::<f64>()
        / logs.iter().map(|l| (l.0 - mx).powi(2)).sum::<f64>();
    assert!((slope - 2.0).abs() < 0.01, "slope {slope}");
}

fn analytic_probs(
    w: &WaveFunction,
    order: MeasurementOrder,
    k: f64,
    eps: f64,
) -> BTreeMap<(Quadrature, Analyzer), AnalyzerProbabilities> {
    let mut out = BTreeMap::new();
    for q in Quadrature::ALL {
        for an in [Analyzer::Diagonal, Analyzer::Circular] {
            let set = SlmSetting::new(k, q.phase(), eps).unwrap();
            out.insert((q, an), setting_probabilities(w, order, &set, an).unwrap());
        }
    }
    out
}

#[test]
fn zero_frequency_is_calibrated_to_one() {
    let g = small_grid();
    let w = gaussian(&g, 0.2, -0.4, 0.9).unwrap();
    for eps in [0.01, 0.1, 0.3] {
        let probs = analytic_probs(&w, MeasurementOrder::XThenP, 0.0, eps);
        for px in [60, 64, 70] {
            let z = estimate_weak_char_analytic(&probs, eps, px, 1e-12).unwrap();
            assert!((z - c(1.0, 0.0)).norm() < 1e-12, "{z}");
        }
    }
}

#[test]
fn analytic_estimate_converges_to_weak_value() {
    let g = small_grid();
    let w = gaussian(&g, 0.3, 0.2, 1.0).unwrap();
    let px = g.momentum_index(g.p(66)).unwrap();
    let ks = [g.k(63), g.k(65), g.k(68)];
    let oracle = weak_char_fn(&w, g.p(px), &ks).unwrap();
    let mut prev = vec![f64::INFINITY; ks.len()];
    for eps in [0.2, 0.1, 0.05, 0.025] {
        for (i, &k) in ks.iter().enumerate() {
            let z = estimate_weak_char_analytic(&analytic_probs(&w, MeasurementOrder::XThenP, k, eps), eps, px, 1e-12)
                .unwrap();
            let err = (z - oracle.values[i]).norm();
            assert!(err < prev[i], "eps={eps} k={k} err={err} prev={}", prev[i]);
            // leading bias is quadratic in ε
            assert!(err < 2.0 * eps * eps);
            prev[i] = err;
        }
    }
}

#[test]
fn missing_and_thin_settings_are_reported() {
    let g = small_grid();
    let w = ground(&g).unwrap();
    let mut hists = BTreeMap::new();
    for q in Quadrature::ALL {
        for an in [Analyzer::Diagonal, Analyzer::Circular] {
            let set = SlmSetting::new(g.k(66), q.phase(), 0.05).unwrap();
            let p = setting_probabilities(&w, MeasurementOrder::XThenP, &set, an).unwrap();
            hists.insert((q, an), sample_shots(&p.cells(), 100_000, 3).unwrap());
        }
    }
    assert!(estimate_weak_char(&hists, 0.05, 64, 100).is_ok());
    assert!(matches!(estimate_weak_char(&hists, 0.05, 0, 100), Err(Error::InsufficientCounts { pixel: 0, .. })));
    hists.remove(&(Quadrature::Sin, Analyzer::Circular));
    match estimate_weak_char(&hists, 0.05, 64, 100) {
        Err(Error::MissingSetting { setting }) => assert_eq!(setting, "sin/circular"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn standardized_residuals_are_sound() {
    let g = small_grid();
    let w = gaussian(&g, 0.4, 0.0, 1.0).unwrap();
    let (eps, k, px) = (0.05, g.k(66), 64);
    let probs = analytic_probs(&w, MeasurementOrder::XThenP, k, eps);
    let expected = estimate_weak_char_analytic(&probs, eps, px, 1e-12).unwrap();
    let mut residuals = Vec::new();
    for seed in 0..100u64 {
        let hists: BTreeMap<_, _> = probs
            .iter()
            .enumerate()
            .map(|(i, (key, p))| (*key, sample_shots_stream(&p.cells(), 200_000, seed, i as u64, 1).unwrap()))
            .collect();
        let e = estimate_weak_char(&hists, eps, px, 100).unwrap();
        residuals.push((e.value.re - expected.re) / e.se_re);
        residuals.push((e.value.im - expected.im) / e.se_im);
    }
    let n = residuals.len() as f64;
    let mean = residuals.iter().sum::<f64>() / n;
    let var = residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!(mean.abs() < 0.2, "mean {mean}");
    assert!((0.5..=2.0).contains(&var), "variance {var}");
}

#[test]
fn reversed_order_is_dual_to_forward_order_on_the_fourier_state() {
    let g = small_grid();
    let w = gaussian(&g, 0.7, -0.5, 1.2).unwrap();
    let conj = g.conjugate();
    let fourier = WaveFunction::new(conj, momentum_amplitudes(&g, w.samples())).unwrap();
    let n = g.points();
    let (params, _) = sweep_parameters(&g, MeasurementOrder::PThenX);
    for &j in &[60usize, 64, 71] {
        let lambda = params[j];
        for (q, an) in [(Quadrature::Cos, Analyzer::Diagonal), (Quadrature::Sin, Analyzer::Circular)] {
            let set = SlmSetting::new(lambda, q.phase(), 0.1).unwrap();
            let rev = setting_probabilities(&w, MeasurementOrder::PThenX, &set, an).unwrap();
            let fwd = setting_probabilities(&fourier, MeasurementOrder::XThenP, &set, an).unwrap();
            for px in 0..n {
                let dual = (n - px) % n;
                assert!((rev.plus[px] - fwd.plus[dual]).abs() < 1e-9);
                assert!((rev.minus[px] - fwd.minus[dual]).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn analytic_pipeline_matches_oracle() {
    let g = Grid::new(128, 24.0).unwrap();
    let w = gaussian(&g, 0.4, 0.3, 1.0).unwrap();
    for order in [MeasurementOrder::XThenP, MeasurementOrder::PThenX] {
        let mut cfg = ExperimentConfig::new(order, 1e-3);
        cfg.pixels = Some(vec![60, 64, 67]);
        cfg.joint = true;
        let r = run_reconstruction(&w, &cfg).unwrap();
        for (px, q) in r.diagnostics.reconstructed.iter().zip(&r.conditionals) {
            let oracle = conditional_brackets(&w, order, *px).unwrap();
            let err = q.values.max_abs_diff(&oracle.values).unwrap();
            assert!(err < 1e-6, "{order:?} pixel {px}: {err}");
            assert_eq!(q.axes, oracle.axes);
            assert!(q.normalization_error() < 1e-9);
        }
    }
}

#[test]
fn monte_carlo_pipeline_within_error_bars() {
    let g = Grid::new(64, 16.0).unwrap();
    let w = gaussian(&g, 0.3, 0.0, 1.0).unwrap();
    let mut cfg = ExperimentConfig::new(MeasurementOrder::XThenP, 0.05);
    cfg.shots = Some(1_000_000);
    cfg.seed = 11;
    cfg.shards = 4;
    cfg.joint = true;
    let r = run_reconstruction(&w, &cfg).unwrap();
    assert!(!r.diagnostics.reconstructed.is_empty());
    let mut checked = 0;
    let mut outside = 0;
    for ((px, q), se) in r.diagnostics.reconstructed.iter().zip(&r.conditionals).zip(&r.conditional_se) {
        let oracle = conditional_brackets(&w, cfg.order, *px).unwrap();
        for i in 0..g.points() {
            let o = oracle.get(&[i]);
            if o.norm() >= 3.0 * se {
                checked += 1;
                if (q.get(&[i]) - o).norm() > 5.0 * se {
                    outside += 1;
                }
            }
        }
    }
    assert!(checked > 100);
    assert!((outside as f64) <= 0.01 * checked as f64, "{outside}/{checked}");
    let joint = r.joint.as_ref().unwrap();
    // the total is the rate-weighted Ẑ(0), whose shot noise is a few 1e-3 at this budget
    assert!((joint.total() - c(1.0, 0.0)).norm() < 0.05 + r.diagnostics.skipped_mass);

    let again = run_reconstruction(&w, &cfg).unwrap();
    assert_eq!(again, r);
}

#[test]
fn explicit_pixels_must_have_enough_counts() {
    let g = Grid::new(64, 16.0).unwrap();
    let w = ground(&g).unwrap();
    let mut cfg = ExperimentConfig::new(MeasurementOrder::XThenP, 0.05);
    cfg.shots = Some(10_000);
    cfg.pixels = Some(vec![0]);
    assert!(matches!(run_reconstruction(&w, &cfg), Err(Error::InsufficientCounts { pixel: 0, .. })));
    cfg.shots = None;
    assert!(matches!(run_reconstruction(&w, &cfg), Err(Error::PostSelectionTooWeak { .. })));
}

fn ccr_run(w: &WaveFunction, eps: f64, shots: Option<u64>, seed: u64) -> CcrEstimate {
    let runs: Vec<ExperimentResult> = [MeasurementOrder::XThenP, MeasurementOrder::PThenX]
        .into_iter()
        .map(|order| {
            let mut cfg = ExperimentConfig::new(order, eps);
            cfg.shots = shots;
            cfg.seed = seed;
            cfg.shards = 4;
            cfg.joint = true;
            run_reconstruction(w, &cfg).unwrap()
        })
        .collect();
    ccr_from_experiments(&runs[0], &runs[1]).unwrap()
}

#[test]
fn end_to_end_commutator_witness() {
    let g = Grid::new(64, 16.0).unwrap();
    let w = gaussian(&g, 0.3, -0.2, 1.0).unwrap();
    let exact = ccr_run(&w, 1e-3, None, 0);
    assert!((exact.witness - c(0.0, 1.0)).norm() < 1e-5, "{:?}", exact.witness);
    assert_eq!(exact.se, 0.0);

    let est = ccr_run(&w, 0.05, Some(10_000_000), 21);
    let dev = (est.witness - c(0.0, 1.0)).norm();
    assert!(est.se > 0.0 && est.se < 0.05, "se {}", est.se);
    assert!(dev < 5.0 * est.se, "witness {} se {}", est.witness, est.se);
}

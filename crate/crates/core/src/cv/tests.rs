use super::states::{gaussian, ground, hermite, random_smooth, squeezed, Mode};
use super::*;
use crate::random::seeded;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Direct O(N²) evaluation of the momentum amplitudes, independent of the FFT path.
fn direct_momentum(grid: &Grid, psi: &[Complex64]) -> Vec<Complex64> {
    let pref = grid.dx() / (2.0 * PI * grid.hbar()).sqrt();
    grid.ps()
        .iter()
        .map(|&p| {
            grid.xs()
                .iter()
                .zip(psi)
                .map(|(&x, z)| Complex64::from_polar(1.0, -p * x / grid.hbar()) * z)
                .sum::<Complex64>()
                * pref
        })
        .collect()
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn fft_matches_direct_sum() {
    let g = Grid::new(256, 24.0).unwrap();
    let mut rng = seeded(31);
    let w = random_smooth(&g, &mut rng).unwrap();
    let fast = momentum_amplitudes(&g, w.samples());
    let slow = direct_momentum(&g, w.samples());
    assert!(max_diff(&fast, &slow) < 1e-12);

    let g = Grid::with_hbar(64, 10.0, 0.5).unwrap();
    let w = gaussian(&g, 0.3, -0.4, 0.8).unwrap();
    assert!(max_diff(&momentum_amplitudes(&g, w.samples()), &direct_momentum(&g, w.samples())) < 1e-12);
}

#[test]
fn gaussian_is_self_fourier() {
    let g = Grid::new(512, 40.0).unwrap();
    let w = ground(&g).unwrap();
    let m = to_momentum(&w).unwrap();
    assert!((m.norm_sq() - 1.0).abs() < 1e-9);
    for (p, z) in g.ps().iter().zip(m.samples()) {
        let e = PI.powf(-0.25) * (-p * p / 2.0).exp();
        assert!((z - c(e, 0.0)).norm() < 1e-8);
    }
    let back = to_position(&m).unwrap();
    assert!(max_diff(back.samples(), w.samples()) < 1e-12);
    assert!(matches!(to_position(&w), Err(Error::PlaneMismatch { .. })));
}

#[test]
fn constant_maps_to_zero_frequency() {
    let g = Grid::new(64, 8.0).unwrap();
    let w = WaveFunction::from_fn(g, |_| c(1.0, 0.0)).unwrap();
    let m = to_momentum(&w).unwrap();
    let peak = g.momentum_index(0.0).unwrap();
    for (i, z) in m.samples().iter().enumerate() {
        if i == peak {
            assert!(z.norm() > 1.0);
        } else {
            assert!(z.norm() < 1e-12);
        }
    }
}

#[test]
fn double_transform_flips_parity() {
    let g = Grid::new(128, 20.0).unwrap();
    let mut rng = seeded(32);
    let w = random_smooth(&g, &mut rng).unwrap();
    let once = momentum_amplitudes(&g, w.samples());
    let twice = momentum_amplitudes(&g.conjugate(), &once);
    let n = g.points();
    for k in 0..n {
        assert!((twice[k] - w.samples()[(n - k) % n]).norm() < 1e-8);
    }
}

#[test]
fn weak_char_fn_examples() {
    let g = Grid::default();
    let w = ground(&g).unwrap();
    let z = weak_char_fn(&w, 0.0, &g.ks()).unwrap();
    assert!((z.at_zero().unwrap() - c(1.0, 0.0)).norm() < 1e-15);
    for (k, v) in z.parameters.iter().zip(&z.values) {
        // ratio of Gaussian momentum amplitudes; wrapped tails vanish in double precision
        let e = (-k * k / 2.0).exp();
        assert!((v - c(e, 0.0)).norm() < 1e-8, "k={k}");
    }
    assert!(matches!(weak_char_fn(&w, 0.0, &[0.37]), Err(Error::OffGridParameter { .. })));
    assert!(matches!(weak_char_fn(&w, 0.1, &[0.0]), Err(Error::OffGridParameter { .. })));
    assert!(matches!(weak_char_fn(&w, g.p(1), &[0.0]), Err(Error::PostSelectionTooWeak { .. })));

    // momentum-narrow packet: the shifted amplitude collapses after one grid step
    let narrow = gaussian(&g, 0.0, 0.0, 8.0).unwrap();
    let z = weak_char_fn(&narrow, 0.0, &[0.0, g.dk(), 2.0 * g.dk(), 4.0 * g.dk()]).unwrap();
    assert!(z.values[1].norm() < 0.95 && z.values[3].norm() < z.values[2].norm());
}

#[test]
fn zero_parameter_always_gives_one() {
    let g = Grid::new(256, 32.0).unwrap();
    let mut rng = seeded(33);
    for _ in 0..10 {
        let w = random_smooth(&g, &mut rng).unwrap();
        let tilde = momentum_amplitudes(&g, w.samples());
        let m = (0..g.points()).max_by(|&a, &b| tilde[a].norm().total_cmp(&tilde[b].norm())).unwrap();
        let z = weak_char_fn(&w, g.p(m), &[0.0, g.k(3)]).unwrap();
        assert!((z.values[0] - c(1.0, 0.0)).norm() < 1e-9);
    }
}

/// `<p|x><x|ψ>/<p|ψ>` evaluated directly on the grid.
fn bracket_q(w: &WaveFunction, m: usize) -> Vec<Complex64> {
    let g = w.grid();
    let tilde = direct_momentum(g, w.samples());
    let p = g.p(m);
    let norm = 1.0 / (2.0 * PI * g.hbar()).sqrt();
    g.xs()
        .iter()
        .zip(w.samples())
        .map(|(&x, z)| Complex64::from_polar(norm, -p * x / g.hbar()) * z / tilde[m])
        .collect()
}

#[test]
fn conditional_matches_bracket_formula() {
    let g = Grid::new(256, 32.0).unwrap();
    let w = ground(&g).unwrap();
    let z = weak_char_fn(&w, 0.0, &g.ks()).unwrap();
    let q = conditional_pseudo_cv(&z).unwrap();
    let oracle = bracket_q(&w, g.momentum_index(0.0).unwrap());
    assert!(max_diff(q.values.data(), &oracle) < 1e-7);
    assert!(q.normalization_error() < 1e-8);

    let mut rng = seeded(34);
    for _ in 0..50 {
        let w = random_smooth(&g, &mut rng).unwrap();
        let tilde = momentum_amplitudes(&g, w.samples());
        let m = (0..g.points()).max_by(|&a, &b| tilde[a].norm().total_cmp(&tilde[b].norm())).unwrap();
        let z = weak_char_fn(&w, g.p(m), &g.ks()).unwrap();
        let q = conditional_pseudo_cv(&z).unwrap();
        assert!(q.normalization_error() < 1e-8);
        let oracle = bracket_q(&w, m);
        let scale = oracle.iter().map(|v| v.norm()).fold(1.0, f64::max);
        assert!(max_diff(q.values.data(), &oracle) < 1e-7 * scale);
    }
}

#[test]
fn position_narrow_packet_concentrates() {
    let g = Grid::new(256, 32.0).unwrap();
    let x0 = g.x(150);
    let w = gaussian(&g, x0, 0.0, 0.15).unwrap();
    let z = weak_char_fn(&w, 0.0, &g.ks()).unwrap();
    let q = conditional_pseudo_cv(&z).unwrap();
    let peak = (0..g.points()).max_by(|&a, &b| q.get(&[a]).norm().total_cmp(&q.get(&[b]).norm())).unwrap();
    assert_eq!(peak, 150);
}

#[test]
fn incomplete_sampling_is_rejected() {
    let g = Grid::new(64, 16.0).unwrap();
    let w = ground(&g).unwrap();
    let ks = g.ks();
    let z = weak_char_fn(&w, 0.0, &ks[..63]).unwrap();
    assert!(matches!(conditional_pseudo_cv(&z), Err(Error::IncompleteSampling { expected: 64, found: 63 })));
    let mut dup = ks.clone();
    dup[5] = dup[4];
    let z = weak_char_fn(&w, 0.0, &dup).unwrap();
    assert!(matches!(conditional_pseudo_cv(&z), Err(Error::IncompleteSampling { .. })));
}

#[test]
fn general_post_selection_reduces_to_momentum_case() {
    let g = Grid::new(128, 20.0).unwrap();
    let mut rng = seeded(35);
    let w = random_smooth(&g, &mut rng).unwrap();
    let tilde = momentum_amplitudes(&g, w.samples());
    let m = (0..g.points()).max_by(|&a, &b| tilde[a].norm().total_cmp(&tilde[b].norm())).unwrap();
    let p = g.p(m);
    let plane = WaveFunction::from_fn(g, |x| Complex64::from_polar(1.0, p * x)).unwrap();
    let ks: Vec<f64> = (0..g.points()).step_by(7).map(|j| g.k(j)).collect();
    let general = weak_char_fn_general(&w, &plane, &ks, 1e-10).unwrap();
    let special = weak_char_fn(&w, p, &ks).unwrap();
    assert!(max_diff(&general.values, &special.values) < 1e-10);
}

#[test]
fn joint_gaussian_closed_form_and_marginals() {
    let g = Grid::new(128, 20.0).unwrap();
    let w = ground(&g).unwrap();
    let k = joint_kd_cv(&w, MeasurementOrder::XThenP).unwrap();
    assert!(k.normalization_error() < 1e-7);
    let n = g.points();
    let pref = (2.0 * PI).powf(-0.5) / PI.sqrt();
    for (ix, &x) in g.xs().iter().enumerate() {
        for (ip, &p) in g.ps().iter().enumerate() {
            let e = Complex64::from_polar(pref * (-x * x / 2.0 - p * p / 2.0).exp(), -p * x);
            assert!((k.get(&[ix, ip]) - e).norm() < 1e-7);
        }
    }
    for ix in 0..n {
        let marginal: Complex64 = (0..n).map(|ip| k.get(&[ix, ip])).sum::<Complex64>() * g.dp();
        assert!((marginal - c(w.samples()[ix].norm_sqr(), 0.0)).norm() < 1e-7);
    }
    let kt = joint_kd_cv(&w, MeasurementOrder::PThenX).unwrap();
    assert_eq!(kt.values, k.values.conj());
    assert_eq!(kt.ordering, OrderingTag::Conjugate);
}

#[test]
fn joint_first_moment_matches_position_mean() {
    let g = Grid::new(128, 20.0).unwrap();
    let w = gaussian(&g, 1.3, 0.7, 0.9).unwrap();
    let k = joint_kd_cv(&w, MeasurementOrder::XThenP).unwrap();
    let n = g.points();
    let xs = g.xs();
    let mean_k: Complex64 = (0..n)
        .flat_map(|ix| (0..n).map(move |ip| (ix, ip)))
        .map(|(ix, ip)| k.get(&[ix, ip]) * xs[ix])
        .sum::<Complex64>()
        * k.cell_measure;
    let mean: f64 = xs.iter().zip(w.samples()).map(|(x, z)| x * z.norm_sqr()).sum::<f64>() * g.dx();
    assert!((mean_k.re - mean).abs() < 1e-7);
    assert!(mean_k.im.abs() < 1e-9);
    assert!((mean - 1.3).abs() < 1e-9);
}

#[test]
fn ccr_witness_examples() {
    let g = Grid::default();
    let cases = [
        (ground(&g).unwrap(), 1e-6),
        (hermite(&g, Mode { order: 1, ..Mode::ground() }).unwrap(), 1e-6),
        (squeezed(&g, 0.5, 0.8, -0.6).unwrap(), 1e-5),
    ];
    for (w, tol) in cases {
        let v = ccr_witness(&w).unwrap();
        assert!((v - c(0.0, 1.0)).norm() < tol, "{v}");
        let k = joint_kd_cv(&w, MeasurementOrder::XThenP).unwrap();
        assert!((ccr_from_joint(&k).unwrap() - v).norm() < 1e-12);
    }
    let g2 = Grid::with_hbar(1024, 40.0, 0.5).unwrap();
    let v = ccr_witness(&ground(&g2).unwrap()).unwrap();
    assert!((v - c(0.0, 0.5)).norm() < 1e-6);
}

#[test]
fn joint_from_char_fns_matches_bracket_joint() {
    let g = Grid::new(128, 24.0).unwrap();
    let w = gaussian(&g, 0.6, -0.4, 1.1).unwrap();
    for order in [MeasurementOrder::XThenP, MeasurementOrder::PThenX] {
        // a zero floor keeps every pixel with nonzero amplitude; the weighting cancels
        // the small denominators
        let (k, _) = joint_from_char_fns(&w, order, 0.0).unwrap();
        let oracle = joint_kd_cv(&w, order).unwrap();
        assert_eq!(k.axes, oracle.axes);
        let err = k.max_abs_diff(&oracle).unwrap();
        assert!(err < 1e-9, "{order:?}: {err}");

        let (k, skipped) = joint_from_char_fns(&w, order, 1e-12).unwrap();
        assert!(!skipped.is_empty());
        assert!((k.total() - c(1.0, 0.0)).norm() < 1e-9);
    }
}

#[test]
fn conditional_from_char_fn_matches_brackets_in_both_orders() {
    let g = Grid::new(128, 24.0).unwrap();
    let w = gaussian(&g, -0.5, 0.7, 0.9).unwrap();
    for order in [MeasurementOrder::XThenP, MeasurementOrder::PThenX] {
        for px in [0usize, 50, 64, 77] {
            let oracle = conditional_brackets(&w, order, px).unwrap();
            let q = match conditional_from_char_fn(&w, order, px, 1e-12) {
                Ok(q) => q,
                Err(Error::PostSelectionTooWeak { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            assert_eq!(q.axes, oracle.axes);
            assert_eq!(q.coords, oracle.coords);
            assert_eq!(q.conditioning, oracle.conditioning);
            assert!(q.max_abs_diff(&oracle).unwrap() < 1e-8, "{order:?} {px}");
        }
    }
}

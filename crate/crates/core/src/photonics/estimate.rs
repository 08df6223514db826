use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use num_complex::Complex64;
use rayon::prelude::*;

use super::sampling::{sample_shots_stream, ShotHistogram};
use super::{detect, fourier_lens, modulated_photon, Analyzer, AnalyzerProbabilities, SlmSetting};
use crate::cv::{conditional_pseudo_cv, CharFnSample, Grid, MeasurementOrder, WaveFunction};
use crate::distribution::{Conditioning, OrderingTag, PseudoDistribution};
use crate::error::{Error, Result};
use crate::tensor::ComplexTensor;

/// Minimum post-selected photons per setting for a pixel to be estimated.
pub const DEFAULT_COUNT_FLOOR: u64 = 100;
/// Minimum post-selection probability per setting in analytic mode.
pub const DEFAULT_PROBABILITY_FLOOR: f64 = 1e-10;

/// Which quadrature of `e^{ikx}` a modulator phase measures: `sin(kx + π/2) = cos(kx)`
/// and `sin(kx + 0) = sin(kx)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Quadrature {
    Cos,
    Sin,
}

impl Quadrature {
    pub const ALL: [Quadrature; 2] = [Quadrature::Cos, Quadrature::Sin];

    pub fn phase(self) -> f64 {
        match self {
            Quadrature::Cos => FRAC_PI_2,
            Quadrature::Sin => 0.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Quadrature::Cos => "cos",
            Quadrature::Sin => "sin",
        }
    }
}

const READOUT: [Analyzer; 2] = [Analyzer::Diagonal, Analyzer::Circular];

/// Conditioned polarization asymmetries `(n+ - n-)/(n+ + n-)` at one pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Asymmetries {
    pub cos_diagonal: f64,
    pub cos_circular: f64,
    pub sin_diagonal: f64,
    pub sin_circular: f64,
}

impl Asymmetries {
    /// `Z = W_cos + i W_sin` with `W = (a_diag + i a_circ) / sin(2ε)`.
    ///
    /// For an exact rotation by `ε` the diagonal asymmetry is `sin(2ε)`, so this
    /// calibration makes `Z(0) = 1` exactly.
    pub fn weak_char(&self, epsilon: f64) -> Complex64 {
        let s = (2.0 * epsilon).sin();
        Complex64::new(self.cos_diagonal - self.sin_circular, self.cos_circular + self.sin_diagonal) / s
    }
}

/// Estimated `Z(k)` at one pixel with standard errors of its real and imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakEstimate {
    pub value: Complex64,
    pub se_re: f64,
    pub se_im: f64,
    /// Smallest post-selected count among the four settings.
    pub min_counts: u64,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < FRAC_PI_4) {
        return Err(Error::InvalidArgument(format!("coupling epsilon = {epsilon} must lie in (0, π/4)")));
    }
    Ok(())
}

fn setting_name(q: Quadrature, a: Analyzer) -> String {
    format!("{}/{}", q.as_str(), a.as_str())
}

/// Counts-based estimate of `Z(k)` at `pixel` from the four `(quadrature, analyzer)`
/// histograms of one `k`. The variance of each asymmetry is `(1 - a²)/n`.
pub fn estimate_weak_char(
    hists: &BTreeMap<(Quadrature, Analyzer), ShotHistogram>,
    epsilon: f64,
    pixel: usize,
    floor: u64,
) -> Result<WeakEstimate> {
    check_epsilon(epsilon)?;
    let mut a = [[0.0; 2]; 2];
    let mut var = [[0.0; 2]; 2];
    let mut min_counts = u64::MAX;
    for (qi, &q) in Quadrature::ALL.iter().enumerate() {
        for (ai, &an) in READOUT.iter().enumerate() {
            let h = hists.get(&(q, an)).ok_or_else(|| Error::MissingSetting { setting: setting_name(q, an) })?;
            if pixel >= h.pixels() {
                return Err(Error::InvalidArgument(format!("pixel {pixel} outside 0..{}", h.pixels())));
            }
            let (plus, minus) = (h.plus(pixel), h.minus(pixel));
            let n = plus + minus;
            min_counts = min_counts.min(n);
            if n < floor || n == 0 {
                return Err(Error::InsufficientCounts { pixel, counts: n, floor });
            }
            let asym = (plus as f64 - minus as f64) / n as f64;
            a[qi][ai] = asym;
            var[qi][ai] = (1.0 - asym * asym) / n as f64;
        }
    }
    let asym = Asymmetries { cos_diagonal: a[0][0], cos_circular: a[0][1], sin_diagonal: a[1][0], sin_circular: a[1][1] };
    let s = (2.0 * epsilon).sin();
    Ok(WeakEstimate {
        value: asym.weak_char(epsilon),
        se_re: (var[0][0] + var[1][1]).sqrt() / s,
        se_im: (var[0][1] + var[1][0]).sqrt() / s,
        min_counts,
    })
}

/// Infinite-statistics asymmetries from Born probabilities.
pub fn analytic_asymmetries(
    probs: &BTreeMap<(Quadrature, Analyzer), AnalyzerProbabilities>,
    pixel: usize,
    floor: f64,
) -> Result<Asymmetries> {
    let mut a = [[0.0; 2]; 2];
    for (qi, &q) in Quadrature::ALL.iter().enumerate() {
        for (ai, &an) in READOUT.iter().enumerate() {
            let p = probs.get(&(q, an)).ok_or_else(|| Error::MissingSetting { setting: setting_name(q, an) })?;
            if pixel >= p.plus.len() {
                return Err(Error::InvalidArgument(format!("pixel {pixel} outside 0..{}", p.plus.len())));
            }
            let total = p.plus[pixel] + p.minus[pixel];
            if !(total > floor) {
                return Err(Error::PostSelectionTooWeak { probability: total, floor });
            }
            a[qi][ai] = (p.plus[pixel] - p.minus[pixel]) / total;
        }
    }
    Ok(Asymmetries { cos_diagonal: a[0][0], cos_circular: a[0][1], sin_diagonal: a[1][0], sin_circular: a[1][1] })
}

pub fn estimate_weak_char_analytic(
    probs: &BTreeMap<(Quadrature, Analyzer), AnalyzerProbabilities>,
    epsilon: f64,
    pixel: usize,
    floor: f64,
) -> Result<Complex64> {
    check_epsilon(epsilon)?;
    Ok(analytic_asymmetries(probs, pixel, floor)?.weak_char(epsilon))
}

/// Modulator frequencies swept for a measurement order, and the grid on which
/// they form the conjugate lattice. For `PThenX` the modulator acts on momentum,
/// so the sweep lives on the conjugate grid.
pub fn sweep_parameters(grid: &Grid, order: MeasurementOrder) -> (Vec<f64>, Grid) {
    let g = match order {
        MeasurementOrder::XThenP => *grid,
        MeasurementOrder::PThenX => grid.conjugate(),
    };
    (g.ks(), g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub order: MeasurementOrder,
    pub epsilon: f64,
    /// Photons per `(k, quadrature, analyzer)` setting; `None` uses exact probabilities.
    pub shots: Option<u64>,
    pub seed: u64,
    pub shards: usize,
    pub count_floor: u64,
    pub probability_floor: f64,
    /// Post-selected pixels to reconstruct; `None` takes every pixel that passes the floor.
    pub pixels: Option<Vec<usize>>,
    /// Also weight the conditionals by measured post-selection frequencies.
    pub joint: bool,
    /// Return the raw camera histograms alongside the estimates.
    pub keep_histograms: bool,
}

impl ExperimentConfig {
    pub fn new(order: MeasurementOrder, epsilon: f64) -> Self {
        Self {
            order,
            epsilon,
            shots: None,
            seed: 0,
            shards: 1,
            count_floor: DEFAULT_COUNT_FLOOR,
            probability_floor: DEFAULT_PROBABILITY_FLOOR,
            pixels: None,
            joint: false,
            keep_histograms: false,
        }
    }
}

/// Estimated characteristic function at one post-selected pixel over the full sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelCharFn {
    pub pixel: usize,
    pub values: Vec<Complex64>,
    pub se_re: Vec<f64>,
    pub se_im: Vec<f64>,
}

/// Camera counts of one `(k, quadrature, analyzer)` setting.
#[derive(Debug, Clone, PartialEq)]
pub struct SettingHistogram {
    pub sweep_index: usize,
    pub parameter: f64,
    pub quadrature: Quadrature,
    pub analyzer: Analyzer,
    pub histogram: ShotHistogram,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentDiagnostics {
    pub parameters: Vec<f64>,
    /// Fraction of photons landing on each pixel, averaged over all settings.
    pub postselection_rates: Vec<f64>,
    pub reconstructed: Vec<usize>,
    pub skipped: Vec<usize>,
    /// Post-selection mass of the skipped pixels.
    pub skipped_mass: f64,
    /// Per-`k` root-mean-square standard error `|δZ|` over reconstructed pixels.
    pub char_fn_se: Vec<f64>,
    pub undetected: u64,
    pub total_shots: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    /// Conditional pseudo-distributions in pixel order of `diagnostics.reconstructed`.
    pub conditionals: Vec<PseudoDistribution>,
    /// Combined standard error `sqrt(SE_re² + SE_im²)` of each conditional, uniform over
    /// the reconstructed axis because every `Z(k)` contributes with unit modulus.
    pub conditional_se: Vec<f64>,
    pub char_fns: Vec<PixelCharFn>,
    pub joint: Option<PseudoDistribution>,
    pub diagnostics: ExperimentDiagnostics,
    /// Raw counts in sweep order, filled only when `keep_histograms` is set.
    pub histograms: Vec<SettingHistogram>,
}

// Per-k estimates for every pixel.
struct KColumn {
    values: Vec<Option<(Complex64, f64, f64)>>,
    // smallest post-selected count (or probability) among the settings, per pixel
    worst: Vec<f64>,
    detected: Vec<f64>,
    undetected: u64,
    kept: Vec<SettingHistogram>,
}

fn measure_column(
    w: &WaveFunction,
    cfg: &ExperimentConfig,
    j: usize,
    k: f64,
) -> Result<KColumn> {
    let n = w.grid().points();
    let mut hists = BTreeMap::new();
    let mut probs = BTreeMap::new();
    for (qi, &q) in Quadrature::ALL.iter().enumerate() {
        let set = SlmSetting::new(k, q.phase(), cfg.epsilon)?;
        let out = fourier_lens(&modulated_photon(w, cfg.order, &set)?);
        for (ai, &an) in READOUT.iter().enumerate() {
            let p = detect(&out, an);
            if let Some(shots) = cfg.shots {
                let stream = ((j * 2 + qi) * 2 + ai) as u64;
                hists.insert((q, an), sample_shots_stream(&p.cells(), shots, cfg.seed, stream, cfg.shards)?);
            }
            probs.insert((q, an), p);
        }
    }
    let mut col = KColumn {
        values: Vec::with_capacity(n),
        worst: Vec::with_capacity(n),
        detected: vec![0.0; n],
        undetected: 0,
        kept: Vec::new(),
    };
    if cfg.shots.is_some() {
        for h in hists.values() {
            for (px, d) in col.detected.iter_mut().enumerate() {
                *d += (h.plus(px) + h.minus(px)) as f64;
            }
            col.undetected += h.undetected;
        }
        if cfg.keep_histograms {
            col.kept = hists
                .iter()
                .map(|(&(quadrature, analyzer), h)| SettingHistogram {
                    sweep_index: j,
                    parameter: k,
                    quadrature,
                    analyzer,
                    histogram: h.clone(),
                })
                .collect();
        }
        for px in 0..n {
            match estimate_weak_char(&hists, cfg.epsilon, px, cfg.count_floor) {
                Ok(e) => {
                    col.values.push(Some((e.value, e.se_re, e.se_im)));
                    col.worst.push(e.min_counts as f64);
                }
                Err(_) => {
                    col.values.push(None);
                    col.worst.push(
                        hists.values().map(|h| h.plus(px) + h.minus(px)).min().unwrap_or(0) as f64,
                    );
                }
            }
        }
    } else {
        for p in probs.values() {
            for (px, d) in col.detected.iter_mut().enumerate() {
                *d += p.plus[px] + p.minus[px];
            }
        }
        for px in 0..n {
            let worst = probs.values().map(|p| p.plus[px] + p.minus[px]).fold(f64::INFINITY, f64::min);
            col.worst.push(worst);
            col.values.push(
                estimate_weak_char_analytic(&probs, cfg.epsilon, px, cfg.probability_floor)
                    .ok()
                    .map(|z| (z, 0.0, 0.0)),
            );
        }
    }
    Ok(col)
}

/// Full k-sweep: simulate every setting, estimate `Z(k)` per post-selected pixel,
/// inverse-transform to conditional pseudo-distributions and optionally weight
/// them into the joint distribution.
pub fn run_reconstruction(w: &WaveFunction, cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    check_epsilon(cfg.epsilon)?;
    if cfg.shots == Some(0) {
        return Err(Error::InvalidArgument("shots per setting must be positive".into()));
    }
    let grid = *w.grid();
    let n = grid.points();
    let (params, sweep_grid) = sweep_parameters(&grid, cfg.order);

    let mut columns = params
        .par_iter()
        .enumerate()
        .map(|(j, &k)| measure_column(w, cfg, j, k))
        .collect::<Result<Vec<_>>>()?;

    let settings = (params.len() * 4) as f64;
    let total_shots = cfg.shots.map_or(0, |s| s * params.len() as u64 * 4);
    let norm = cfg.shots.map_or(settings, |s| s as f64 * settings);
    let rates: Vec<f64> = (0..n).map(|px| columns.iter().map(|c| c.detected[px]).sum::<f64>() / norm).collect();
    let undetected = columns.iter().map(|c| c.undetected).sum();

    let usable = |px: usize| columns.iter().all(|c| c.values[px].is_some());
    let candidates: Vec<usize> = match &cfg.pixels {
        Some(list) => {
            for &px in list {
                if px >= n {
                    return Err(Error::InvalidArgument(format!("pixel {px} outside 0..{n}")));
                }
                if !usable(px) {
                    let worst = columns.iter().map(|c| c.worst[px]).fold(f64::INFINITY, f64::min);
                    return Err(match cfg.shots {
                        Some(_) => Error::InsufficientCounts { pixel: px, counts: worst as u64, floor: cfg.count_floor },
                        None => Error::PostSelectionTooWeak { probability: worst, floor: cfg.probability_floor },
                    });
                }
            }
            list.clone()
        }
        None => (0..n).collect(),
    };
    let (reconstructed, skipped): (Vec<usize>, Vec<usize>) = candidates.into_iter().partition(|&px| usable(px));
    let skipped_mass = skipped.iter().map(|&px| rates[px]).sum();

    let (cond_axis, cond_value, out_axis, out_coords): (&str, fn(&Grid, usize) -> f64, &str, Vec<f64>) =
        match cfg.order {
            MeasurementOrder::XThenP => ("p", |g, i| g.p(i), "x", grid.xs()),
            MeasurementOrder::PThenX => ("x", |g, i| g.x(i), "p", grid.ps()),
        };

    let mut conditionals = Vec::with_capacity(reconstructed.len());
    let mut conditional_se = Vec::with_capacity(reconstructed.len());
    let mut char_fns = Vec::with_capacity(reconstructed.len());
    for &px in &reconstructed {
        let (values, (se_re, se_im)): (Vec<Complex64>, (Vec<f64>, Vec<f64>)) = columns
            .iter()
            .map(|c| {
                let (z, a, b) = c.values[px].unwrap_or_default();
                (z, (a, b))
            })
            .unzip();
        let conditioning = Conditioning { axis: cond_axis.into(), outcome: px, value: cond_value(&grid, px) };
        let sample = CharFnSample {
            grid: sweep_grid,
            parameters: params.clone(),
            values: values.clone(),
            conditioning: Some(conditioning.clone()),
        };
        let mut q = conditional_pseudo_cv(&sample)?;
        q.axes = vec![out_axis.into()];
        q.coords = vec![out_coords.clone()];
        q.conditioning = Some(conditioning);
        let var: f64 = se_re.iter().zip(&se_im).map(|(a, b)| a * a + b * b).sum();
        conditional_se.push(var.sqrt() / sweep_grid.length());
        conditionals.push(q);
        char_fns.push(PixelCharFn { pixel: px, values, se_re, se_im });
    }

    let char_fn_se = (0..params.len())
        .map(|j| {
            if char_fns.is_empty() {
                return 0.0;
            }
            let s: f64 = char_fns.iter().map(|c| c.se_re[j].powi(2) + c.se_im[j].powi(2)).sum();
            (s / char_fns.len() as f64).sqrt()
        })
        .collect();

    let histograms = columns.iter_mut().flat_map(|c| std::mem::take(&mut c.kept)).collect();
    let joint = if cfg.joint { Some(weight_joint(&grid, cfg.order, &reconstructed, &conditionals, &rates)?) } else { None };

    Ok(ExperimentResult {
        conditionals,
        conditional_se,
        char_fns,
        joint,
        diagnostics: ExperimentDiagnostics {
            parameters: params,
            postselection_rates: rates,
            reconstructed,
            skipped,
            skipped_mass,
            char_fn_se,
            undetected,
            total_shots,
        },
        histograms,
    })
}

/// `K(x, p) = q(x|p) P(p) / dp` (or `K̃(x, p) = q̃(p|x) P(x) / dx`) on the `(x, p)` grid.
fn weight_joint(
    grid: &Grid,
    order: MeasurementOrder,
    pixels: &[usize],
    conditionals: &[PseudoDistribution],
    rates: &[f64],
) -> Result<PseudoDistribution> {
    let n = grid.points();
    let mut t = ComplexTensor::zeros(vec![n, n]);
    for (&px, q) in pixels.iter().zip(conditionals) {
        for i in 0..n {
            let v = q.get(&[i]);
            match order {
                MeasurementOrder::XThenP => t.set(&[i, px], v * (rates[px] / grid.dp())),
                MeasurementOrder::PThenX => t.set(&[px, i], v * (rates[px] / grid.dx())),
            }
        }
    }
    let ordering = match order {
        MeasurementOrder::XThenP => OrderingTag::Standard,
        MeasurementOrder::PThenX => OrderingTag::Conjugate,
    };
    Ok(PseudoDistribution::new(t, vec!["x".into(), "p".into()], vec![grid.xs(), grid.ps()], ordering)?
        .with_cell_measure(grid.dx() * grid.dp()))
}

/// Commutator witness from two measured joints and its statistical error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcrEstimate {
    /// `<xp>_{K̃} - <xp>_K`, ideally `iħ`.
    pub witness: Complex64,
    /// Root-mean-square `|δ witness|` propagated from the per-`k` standard errors.
    pub se: f64,
}

/// Combines an `XThenP` and a `PThenX` run (both with `joint` set) into
/// `dx dp ΣΣ x p (K̃ - K)`.
///
/// Each pixel contributes `coord · rate · Σ_j c_j Z_j` with
/// `c_j = (1/N) Σ_n y_n e^{-i k_j y_n}`, the first moment of the inverse transform,
/// so the error propagates linearly from the `Z` standard errors. Fluctuations of
/// the post-selection rates are neglected.
pub fn ccr_from_experiments(forward: &ExperimentResult, reversed: &ExperimentResult) -> Result<CcrEstimate> {
    let k = forward
        .joint
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("x-then-p run has no joint estimate".into()))?;
    let kt = reversed
        .joint
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("p-then-x run has no joint estimate".into()))?;
    if k.ordering != OrderingTag::Standard || kt.ordering != OrderingTag::Conjugate {
        return Err(Error::OrderingTagMismatch { left: k.ordering.to_string(), right: kt.ordering.to_string() });
    }
    if k.shape() != kt.shape() {
        return Err(Error::ShapeMismatch { left: k.shape().to_vec(), right: kt.shape().to_vec() });
    }
    let witness = first_product_moment(kt) - first_product_moment(k);
    let se = (moment_variance(forward) + moment_variance(reversed)).sqrt();
    Ok(CcrEstimate { witness, se })
}

fn first_product_moment(k: &PseudoDistribution) -> Complex64 {
    let (xs, ps) = (&k.coords[0], &k.coords[1]);
    let np = ps.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for (ix, &x) in xs.iter().enumerate() {
        let row = &k.values.data()[ix * np..(ix + 1) * np];
        acc += row.iter().zip(ps).map(|(v, &p)| v * p).sum::<Complex64>() * x;
    }
    acc * k.cell_measure
}

fn moment_variance(r: &ExperimentResult) -> f64 {
    let Some(first) = r.conditionals.first() else {
        return 0.0;
    };
    let ys = &first.coords[0];
    let n = ys.len() as f64;
    let weights: Vec<f64> = r
        .diagnostics
        .parameters
        .iter()
        .map(|&k| {
            let c: Complex64 = ys.iter().map(|&y| Complex64::from_polar(y, -k * y)).sum();
            (c / n).norm_sqr()
        })
        .collect();
    r.conditionals
        .iter()
        .zip(&r.char_fns)
        .map(|(q, z)| {
            let coord = q.conditioning.as_ref().map_or(0.0, |c| c.value);
            let rate = r.diagnostics.postselection_rates[z.pixel];
            let s: f64 = weights.iter().zip(z.se_re.iter().zip(&z.se_im)).map(|(w, (a, b))| w * (a * a + b * b)).sum();
            (coord * rate).powi(2) * s
        })
        .sum()
}

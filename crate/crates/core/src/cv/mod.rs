//! Continuous-variable phase space on a uniform periodic grid.
//!
//! Conventions: `<x|p> = e^{ipx/ħ} / sqrt(2πħ)`, so the momentum amplitude is
//! `ψ̃(p_m) = dx / sqrt(2πħ) Σ_n e^{-i p_m x_n/ħ} ψ(x_n)`. Every discrete
//! identity below (momentum shifts, inverse transforms, normalization) holds
//! exactly on the grid because shifts are periodic and sampling stays on the
//! conjugate lattice.

mod grid;
pub mod states;

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

pub use grid::{Grid, DEFAULT_LENGTH, DEFAULT_POINTS, MIN_POINTS};

use crate::distribution::{Conditioning, OrderingTag, PseudoDistribution};
use crate::error::{Error, Result};
use crate::oracle::DEFAULT_POSTSELECTION_FLOOR;
use crate::tensor::ComplexTensor;

/// Tolerance on `Σ|ψ|² · spacing = 1`.
pub const NORM_TOL: f64 = 1e-9;
/// Amplitude near the grid edges above which wraparound artifacts are warned about.
pub const EDGE_WARN: f64 = 1e-8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Which variable the samples are a function of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    Position,
    Momentum,
}

impl Representation {
    pub fn as_str(self) -> &'static str {
        match self {
            Representation::Position => "position",
            Representation::Momentum => "momentum",
        }
    }
}

/// Normalized wavefunction samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: Grid,
    samples: Vec<Complex64>,
    representation: Representation,
}

impl WaveFunction {
    /// Position-space samples, which must satisfy `dx Σ|ψ|² = 1` within `1e-9`.
    pub fn new(grid: Grid, samples: Vec<Complex64>) -> Result<Self> {
        Self::with_representation(grid, samples, Representation::Position)
    }

    pub fn with_representation(
        grid: Grid,
        samples: Vec<Complex64>,
        representation: Representation,
    ) -> Result<Self> {
        if samples.len() != grid.points() {
            return Err(Error::DimensionMismatch { expected: grid.points(), found: samples.len() });
        }
        let w = Self { grid, samples, representation };
        let norm_sq = w.norm_sq();
        if !((norm_sq - 1.0).abs() <= NORM_TOL) {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(w)
    }

    /// Position-space samples rescaled to unit norm.
    pub fn normalized(grid: Grid, mut samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.points() {
            return Err(Error::DimensionMismatch { expected: grid.points(), found: samples.len() });
        }
        let norm_sq = grid.dx() * samples.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if !(norm_sq > 0.0 && norm_sq.is_finite()) {
            return Err(Error::NotNormalized { norm_sq });
        }
        let s = norm_sq.sqrt();
        samples.iter_mut().for_each(|z| *z /= s);
        Ok(Self { grid, samples, representation: Representation::Position })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        Self::normalized(grid, grid.xs().into_iter().map(f).collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    /// Sample spacing of the current representation.
    pub fn spacing(&self) -> f64 {
        match self.representation {
            Representation::Position => self.grid.dx(),
            Representation::Momentum => self.grid.dp(),
        }
    }

    /// Coordinates of the current representation.
    pub fn coords(&self) -> Vec<f64> {
        match self.representation {
            Representation::Position => self.grid.xs(),
            Representation::Momentum => self.grid.ps(),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.spacing() * self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    /// Largest amplitude within the outer `N/32` samples on either side.
    pub fn edge_amplitude(&self) -> f64 {
        let n = self.samples.len();
        let band = (n / 32).max(1);
        self.samples[..band]
            .iter()
            .chain(&self.samples[n - band..])
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    fn require(&self, representation: Representation) -> Result<()> {
        if self.representation != representation {
            return Err(Error::PlaneMismatch {
                expected: representation.as_str(),
                found: self.representation.as_str(),
            });
        }
        Ok(())
    }
}

fn fft(data: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let plan = if inverse {
        planner.plan_fft_inverse(data.len())
    } else {
        planner.plan_fft_forward(data.len())
    };
    plan.process(data);
}

fn alternate_sign(k: usize) -> f64 {
    if k % 2 == 0 { 1.0 } else { -1.0 }
}

/// `ψ̃_m = dx/sqrt(2πħ) Σ_n e^{-i p_m x_n/ħ} ψ_n`.
///
/// With `p_m x_n/ħ = -π(m - N/2) + 2π(m - N/2)n/N` the sum is an FFT of
/// `(-1)^n ψ_n`, followed by the phase `(-1)^{m - N/2}`.
pub fn momentum_amplitudes(grid: &Grid, position: &[Complex64]) -> Vec<Complex64> {
    let n = grid.points();
    let mut buf: Vec<Complex64> = position.iter().enumerate().map(|(k, z)| z * alternate_sign(k)).collect();
    fft(&mut buf, false);
    let pref = grid.dx() / (2.0 * PI * grid.hbar()).sqrt();
    buf.iter_mut()
        .enumerate()
        .for_each(|(m, z)| *z *= pref * alternate_sign(m + n / 2));
    buf
}

/// `ψ_n = dp/sqrt(2πħ) Σ_m e^{i p_m x_n/ħ} ψ̃_m`, the exact inverse of [`momentum_amplitudes`].
pub fn position_amplitudes(grid: &Grid, momentum: &[Complex64]) -> Vec<Complex64> {
    let n = grid.points();
    let mut buf: Vec<Complex64> =
        momentum.iter().enumerate().map(|(m, z)| z * alternate_sign(m + n / 2)).collect();
    fft(&mut buf, true);
    let pref = grid.dp() / (2.0 * PI * grid.hbar()).sqrt();
    buf.iter_mut().enumerate().for_each(|(k, z)| *z *= pref * alternate_sign(k));
    buf
}

pub fn to_momentum(w: &WaveFunction) -> Result<WaveFunction> {
    w.require(Representation::Position)?;
    Ok(WaveFunction {
        grid: w.grid,
        samples: momentum_amplitudes(&w.grid, &w.samples),
        representation: Representation::Momentum,
    })
}

pub fn to_position(w: &WaveFunction) -> Result<WaveFunction> {
    w.require(Representation::Momentum)?;
    Ok(WaveFunction {
        grid: w.grid,
        samples: position_amplitudes(&w.grid, &w.samples),
        representation: Representation::Position,
    })
}

/// Samples of a characteristic function, with the post-selection they are conditioned on.
#[derive(Debug, Clone, PartialEq)]
pub struct CharFnSample {
    pub grid: Grid,
    pub parameters: Vec<f64>,
    pub values: Vec<Complex64>,
    pub conditioning: Option<Conditioning>,
}

impl CharFnSample {
    /// Value at `k = 0`, if sampled.
    pub fn at_zero(&self) -> Option<Complex64> {
        self.parameters.iter().position(|&k| k == 0.0).map(|i| self.values[i])
    }
}

/// Weak characteristic function `Z(k) = <p - ħk|ψ> / <p|ψ>` for a momentum
/// post-selection, i.e. the weak value of `e^{ikx}`.
///
/// Shifts that leave the momentum grid wrap around periodically, which is exact
/// for the discrete transform.
pub fn weak_char_fn(w: &WaveFunction, post_p: f64, k_values: &[f64]) -> Result<CharFnSample> {
    weak_char_fn_with_floor(w, post_p, k_values, DEFAULT_POSTSELECTION_FLOOR)
}

pub fn weak_char_fn_with_floor(
    w: &WaveFunction,
    post_p: f64,
    k_values: &[f64],
    floor: f64,
) -> Result<CharFnSample> {
    w.require(Representation::Position)?;
    let grid = w.grid;
    let m = grid.momentum_index(post_p)?;
    let shifts = k_values.iter().map(|&k| grid.wavenumber_shift(k)).collect::<Result<Vec<_>>>()?;
    let tilde = momentum_amplitudes(&grid, &w.samples);
    let reference = tilde[m];
    let probability = reference.norm_sqr() * grid.dp();
    if !(probability > floor) {
        return Err(Error::PostSelectionTooWeak { probability, floor });
    }
    warn_edges(&tilde, "momentum");
    let n = grid.points() as i64;
    let values = shifts
        .iter()
        .map(|&s| tilde[(m as i64 - s).rem_euclid(n) as usize] / reference)
        .collect();
    Ok(CharFnSample {
        grid,
        parameters: k_values.to_vec(),
        values,
        conditioning: Some(Conditioning { axis: "p".into(), outcome: m, value: grid.p(m) }),
    })
}

/// Weak characteristic function for an arbitrary post-selected state,
/// `Z(k) = <φ|e^{ikx}|ψ> / <φ|ψ>`, evaluated by grid inner products.
///
/// Experimental: no sampling protocol is known for general `φ`, and `k` is not
/// restricted to the conjugate grid.
pub fn weak_char_fn_general(
    w: &WaveFunction,
    phi: &WaveFunction,
    k_values: &[f64],
    floor: f64,
) -> Result<CharFnSample> {
    w.require(Representation::Position)?;
    phi.require(Representation::Position)?;
    if w.grid != phi.grid {
        return Err(Error::InvalidGrid { reason: "pre- and post-selected states use different grids".into() });
    }
    let grid = w.grid;
    let xs = grid.xs();
    let dx = grid.dx();
    let overlap: Complex64 = w.samples.iter().zip(&phi.samples).map(|(a, b)| b.conj() * a).sum::<Complex64>() * dx;
    if !(overlap.norm() > floor) {
        return Err(Error::PostSelectionTooWeak { probability: overlap.norm_sqr(), floor });
    }
    let values = k_values
        .iter()
        .map(|&k| {
            let s: Complex64 = xs
                .iter()
                .zip(w.samples.iter().zip(&phi.samples))
                .map(|(&x, (a, b))| b.conj() * Complex64::from_polar(1.0, k * x) * a)
                .sum();
            s * dx / overlap
        })
        .collect();
    Ok(CharFnSample { grid, parameters: k_values.to_vec(), values, conditioning: None })
}

/// Weak values of the position projectors, `q(x_n) = (1/L) Σ_j e^{-i k_j x_n} Z(k_j)`.
///
/// `Z` must cover every wavenumber of the conjugate grid exactly once. The result
/// equals `<p|x><x|ψ>/<p|ψ>` on the grid and has `dx Σ q = Z(0)`.
pub fn conditional_pseudo_cv(z: &CharFnSample) -> Result<PseudoDistribution> {
    let grid = z.grid;
    let n = grid.points();
    let mut slots: Vec<Option<Complex64>> = vec![None; n];
    for (&k, &v) in z.parameters.iter().zip(&z.values) {
        let s = grid.wavenumber_shift(k)?;
        let j = s.rem_euclid(n as i64) as usize;
        // e^{-i k_s x_n} = (-1)^s e^{-2πi s n / N}
        slots[j] = Some(v * alternate_sign(s.unsigned_abs() as usize));
    }
    let found = slots.iter().filter(|s| s.is_some()).count();
    if found != n || z.parameters.len() != n {
        return Err(Error::IncompleteSampling { expected: n, found });
    }
    let mut buf: Vec<Complex64> = slots.into_iter().map(|s| s.unwrap_or(ZERO)).collect();
    fft(&mut buf, false);
    let inv_l = 1.0 / grid.length();
    buf.iter_mut().for_each(|q| *q *= inv_l);
    let mut dist = PseudoDistribution::new(
        ComplexTensor::from_vec(buf),
        vec!["x".into()],
        vec![grid.xs()],
        OrderingTag::Standard,
    )?
    .with_cell_measure(grid.dx());
    dist.conditioning = z.conditioning.clone();
    Ok(dist)
}

/// Conditional distribution evaluated directly from brackets: for `XThenP`,
/// `<p_m|x><x|ψ>/<p_m|ψ>` over `x`; for `PThenX`, `<x_m|p><p|ψ>/<x_m|ψ>` over `p`.
pub fn conditional_brackets(w: &WaveFunction, order: MeasurementOrder, index: usize) -> Result<PseudoDistribution> {
    w.require(Representation::Position)?;
    let grid = w.grid;
    if index >= grid.points() {
        return Err(Error::InvalidArgument(format!("grid index {index} outside 0..{}", grid.points())));
    }
    let tilde = momentum_amplitudes(&grid, &w.samples);
    let hbar = grid.hbar();
    let norm = 1.0 / (2.0 * PI * hbar).sqrt();
    let (values, axis, coords, measure, conditioning) = match order {
        MeasurementOrder::XThenP => {
            let p = grid.p(index);
            let v = grid
                .xs()
                .iter()
                .zip(&w.samples)
                .map(|(&x, z)| Complex64::from_polar(norm, -p * x / hbar) * z / tilde[index])
                .collect();
            (v, "x", grid.xs(), grid.dx(), Conditioning { axis: "p".into(), outcome: index, value: p })
        }
        MeasurementOrder::PThenX => {
            let x = grid.x(index);
            let v = grid
                .ps()
                .iter()
                .zip(&tilde)
                .map(|(&p, z)| Complex64::from_polar(norm, p * x / hbar) * z / w.samples[index])
                .collect();
            (v, "p", grid.ps(), grid.dp(), Conditioning { axis: "x".into(), outcome: index, value: x })
        }
    };
    Ok(PseudoDistribution::new(ComplexTensor::from_vec(values), vec![axis.into()], vec![coords], OrderingTag::Standard)?
        .with_cell_measure(measure)
        .with_conditioning(conditioning))
}

/// Order in which position and momentum are (weakly, then strongly) measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementOrder {
    /// `K(x,p) = <p|x><x|ψ><ψ|p>`, the standard Kirkwood-Dirac distribution.
    XThenP,
    /// `K̃(x,p) = <x|p><p|ψ><ψ|x>`, its reversed-order counterpart.
    PThenX,
}

/// Joint distribution over the `(x, p)` grid with cell measure `dx dp`.
///
/// `PThenX` is built from the conjugated brackets of `XThenP`, so the two are
/// exact elementwise conjugates.
pub fn joint_kd_cv(w: &WaveFunction, order: MeasurementOrder) -> Result<PseudoDistribution> {
    w.require(Representation::Position)?;
    let grid = w.grid;
    let n = grid.points();
    let tilde = momentum_amplitudes(&grid, &w.samples);
    let xs = grid.xs();
    let ps = grid.ps();
    let hbar = grid.hbar();
    let norm = 1.0 / (2.0 * PI * hbar).sqrt();
    let mut data = Vec::with_capacity(n * n);
    for (ix, &x) in xs.iter().enumerate() {
        let psi = w.samples[ix];
        for (ip, &p) in ps.iter().enumerate() {
            let bracket = Complex64::from_polar(norm, -p * x / hbar);
            let tp = tilde[ip].conj();
            let k = match order {
                MeasurementOrder::XThenP => bracket * psi * tp,
                MeasurementOrder::PThenX => bracket.conj() * psi.conj() * tp.conj(),
            };
            data.push(k);
        }
    }
    let ordering = match order {
        MeasurementOrder::XThenP => OrderingTag::Standard,
        MeasurementOrder::PThenX => OrderingTag::Conjugate,
    };
    Ok(PseudoDistribution::new(
        ComplexTensor::new(vec![n, n], data)?,
        vec!["x".into(), "p".into()],
        vec![xs, ps],
        ordering,
    )?
    .with_cell_measure(grid.dx() * grid.dp()))
}

/// Conditional distribution at one post-selected pixel, reconstructed from the
/// weak characteristic function over the full conjugate sweep. Same axes and
/// conditioning as [`conditional_brackets`].
///
/// `PThenX` runs the `XThenP` machinery on the Fourier-transformed state, whose
/// conjugate-grid momentum `(N - n) mod N` is position pixel `n`.
pub fn conditional_from_char_fn(
    w: &WaveFunction,
    order: MeasurementOrder,
    pixel: usize,
    floor: f64,
) -> Result<PseudoDistribution> {
    w.require(Representation::Position)?;
    let grid = w.grid;
    let n = grid.points();
    if pixel >= n {
        return Err(Error::InvalidArgument(format!("grid index {pixel} outside 0..{n}")));
    }
    match order {
        MeasurementOrder::XThenP => conditional_pseudo_cv(&weak_char_fn_with_floor(w, grid.p(pixel), &grid.ks(), floor)?),
        MeasurementOrder::PThenX => {
            let conj = grid.conjugate();
            let fourier = WaveFunction::new(conj, momentum_amplitudes(&grid, &w.samples))?;
            let z = weak_char_fn_with_floor(&fourier, conj.p((n - pixel) % n), &conj.ks(), floor)?;
            let mut q = conditional_pseudo_cv(&z)?;
            q.axes = vec!["p".into()];
            q.coords = vec![grid.ps()];
            q.conditioning = Some(Conditioning { axis: "x".into(), outcome: pixel, value: grid.x(pixel) });
            Ok(q)
        }
    }
}

/// Joint distribution assembled from [`conditional_from_char_fn`] at every pixel,
/// weighted by the exact post-selection density. Pixels whose probability is
/// below `floor` are left at zero and returned as skipped.
pub fn joint_from_char_fns(
    w: &WaveFunction,
    order: MeasurementOrder,
    floor: f64,
) -> Result<(PseudoDistribution, Vec<usize>)> {
    w.require(Representation::Position)?;
    let grid = w.grid;
    let n = grid.points();
    let density: Vec<f64> = match order {
        MeasurementOrder::XThenP => momentum_amplitudes(&grid, &w.samples).iter().map(|z| z.norm_sqr()).collect(),
        MeasurementOrder::PThenX => w.samples.iter().map(|z| z.norm_sqr()).collect(),
    };
    let mut t = ComplexTensor::zeros(vec![n, n]);
    let mut skipped = Vec::new();
    for (px, &rho) in density.iter().enumerate() {
        let q = match conditional_from_char_fn(w, order, px, floor) {
            Ok(q) => q,
            Err(Error::PostSelectionTooWeak { .. }) => {
                skipped.push(px);
                continue;
            }
            Err(e) => return Err(e),
        };
        for i in 0..n {
            let v = q.get(&[i]) * rho;
            match order {
                MeasurementOrder::XThenP => t.set(&[i, px], v),
                MeasurementOrder::PThenX => t.set(&[px, i], v),
            }
        }
    }
    let ordering = match order {
        MeasurementOrder::XThenP => OrderingTag::Standard,
        MeasurementOrder::PThenX => OrderingTag::Conjugate,
    };
    let dist = PseudoDistribution::new(t, vec!["x".into(), "p".into()], vec![grid.xs(), grid.ps()], ordering)?
        .with_cell_measure(grid.dx() * grid.dp());
    Ok((dist, skipped))
}

/// `<xp>_{K̃} - <xp>_K = dx dp ΣΣ x p 2i Im K̃(x,p)`, which should equal `iħ`
/// for any state resolved by the grid.
pub fn ccr_witness(w: &WaveFunction) -> Result<Complex64> {
    let kt = joint_kd_cv(w, MeasurementOrder::PThenX)?;
    ccr_from_joint(&kt)
}

/// CCR witness from an already tabulated `K̃` (`Conjugate` tag) or `K` (`Standard` tag).
pub fn ccr_from_joint(k: &PseudoDistribution) -> Result<Complex64> {
    if k.values.rank() != 2 {
        return Err(Error::InvalidArgument("CCR witness needs an (x, p) distribution".into()));
    }
    let sign = match k.ordering {
        OrderingTag::Conjugate => 1.0,
        OrderingTag::Standard => -1.0,
    };
    let (xs, ps) = (&k.coords[0], &k.coords[1]);
    let np = ps.len();
    let mut acc = 0.0;
    for (ix, &x) in xs.iter().enumerate() {
        let row = &k.values.data()[ix * np..(ix + 1) * np];
        let inner: f64 = row.iter().zip(ps).map(|(v, &p)| p * v.im).sum();
        acc += x * inner;
    }
    Ok(Complex64::new(0.0, 2.0 * sign * acc * k.cell_measure))
}

fn warn_edges(samples: &[Complex64], what: &str) {
    let n = samples.len();
    let band = (n / 32).max(1);
    let edge = samples[..band].iter().chain(&samples[n - band..]).map(|z| z.norm()).fold(0.0, f64::max);
    if edge > EDGE_WARN {
        log::warn!("{what} amplitude {edge:e} near the grid edge; periodic wraparound may distort results");
    }
}

#[cfg(test)]
mod tests;

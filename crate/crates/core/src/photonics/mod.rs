//! Shot-level simulation of the single-photon weak-measurement experiment.
//!
//! A photon with transverse amplitude `ψ` and horizontal polarization passes a
//! spatial light modulator that rotates its polarization by `ε sin(k x + φ)`,
//! a Fourier lens that maps transverse momentum onto camera pixels, and a
//! polarizer. The polarization is the weak-measurement meter: for post-selected
//! pixel `p`, the diagonal asymmetry reads out the real part and the circular
//! asymmetry the imaginary part of the weak value of `sin(k x + φ)`. Two phases
//! (`φ = π/2` and `φ = 0`) give the cosine and sine quadratures of `e^{ikx}`.
//!
//! In the reversed arrangement a first lens maps to momentum space, the modulator
//! acts on `p`, and a second lens images back onto position pixels.

mod estimate;
mod sampling;

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

pub use estimate::{
    analytic_asymmetries, ccr_from_experiments, estimate_weak_char, estimate_weak_char_analytic, run_reconstruction,
    sweep_parameters, Asymmetries, CcrEstimate, ExperimentConfig, ExperimentDiagnostics, ExperimentResult,
    PixelCharFn, Quadrature, SettingHistogram, WeakEstimate, DEFAULT_COUNT_FLOOR, DEFAULT_PROBABILITY_FLOOR,
};
pub use sampling::{sample_shots, sample_shots_stream, ShotHistogram, MAX_SHARDS};

use crate::cv::{momentum_amplitudes, position_amplitudes, Grid, MeasurementOrder, Representation, WaveFunction};
use crate::error::{Error, Result};

/// Tolerance on the joint spatial-polarization norm.
pub const PHOTON_NORM_TOL: f64 = 1e-9;

/// Polarization Jones vector `(H, V)`.
pub type Polarization = [Complex64; 2];

pub fn horizontal() -> Polarization {
    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
}

pub fn diagonal() -> Polarization {
    [Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(FRAC_1_SQRT_2, 0.0)]
}

/// Spatial amplitudes of the H and V components in one plane of the optical system.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonState {
    grid: Grid,
    plane: Representation,
    h: Vec<Complex64>,
    v: Vec<Complex64>,
}

impl PhotonState {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn plane(&self) -> Representation {
        self.plane
    }

    pub fn components(&self) -> (&[Complex64], &[Complex64]) {
        (&self.h, &self.v)
    }

    fn spacing(&self) -> f64 {
        match self.plane {
            Representation::Position => self.grid.dx(),
            Representation::Momentum => self.grid.dp(),
        }
    }

    /// Coordinates of the current plane's samples.
    pub fn coords(&self) -> Vec<f64> {
        match self.plane {
            Representation::Position => self.grid.xs(),
            Representation::Momentum => self.grid.ps(),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.spacing() * self.h.iter().chain(&self.v).map(|z| z.norm_sqr()).sum::<f64>()
    }

    fn require(&self, plane: Representation) -> Result<()> {
        if self.plane != plane {
            return Err(Error::PlaneMismatch { expected: plane.as_str(), found: self.plane.as_str() });
        }
        Ok(())
    }
}

/// Product of a spatial wavefunction (in whichever plane it is given) and a polarization.
pub fn prepare_photon(w: &WaveFunction, pol: Polarization) -> Result<PhotonState> {
    let pol_norm = pol[0].norm_sqr() + pol[1].norm_sqr();
    if (pol_norm - 1.0).abs() > PHOTON_NORM_TOL {
        return Err(Error::NormViolation { norm_sq: pol_norm });
    }
    let spatial = w.norm_sq();
    if (spatial - 1.0).abs() > PHOTON_NORM_TOL {
        return Err(Error::NormViolation { norm_sq: spatial });
    }
    Ok(PhotonState {
        grid: *w.grid(),
        plane: w.representation(),
        h: w.samples().iter().map(|z| z * pol[0]).collect(),
        v: w.samples().iter().map(|z| z * pol[1]).collect(),
    })
}

/// One modulator configuration: rotation angle `epsilon * sin(k c + phase)` at
/// coordinate `c` of the plane the modulator sits in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlmSetting {
    pub k: f64,
    pub phase: f64,
    pub epsilon: f64,
}

impl SlmSetting {
    pub fn new(k: f64, phase: f64, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) || !k.is_finite() || !phase.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "modulator setting needs finite k, phase and epsilon >= 0 (got {k}, {phase}, {epsilon})"
            )));
        }
        Ok(Self { k, phase, epsilon })
    }

    pub fn angle(&self, c: f64) -> f64 {
        self.epsilon * (self.k * c + self.phase).sin()
    }
}

/// Exact pointwise polarization rotation by `θ(c) = ε sin(k c + φ)`.
pub fn slm_weak_rotation(s: &PhotonState, set: &SlmSetting) -> PhotonState {
    let coords = s.coords();
    let mut h = Vec::with_capacity(coords.len());
    let mut v = Vec::with_capacity(coords.len());
    for ((&c, &a), &b) in coords.iter().zip(&s.h).zip(&s.v) {
        let (sin, cos) = set.angle(c).sin_cos();
        h.push(a * cos - b * sin);
        v.push(a * sin + b * cos);
    }
    PhotonState { grid: s.grid, plane: s.plane, h, v }
}

/// Fourier lens: position plane to momentum plane, or back.
pub fn fourier_lens(s: &PhotonState) -> PhotonState {
    let (plane, f): (_, fn(&Grid, &[Complex64]) -> Vec<Complex64>) = match s.plane {
        Representation::Position => (Representation::Momentum, momentum_amplitudes),
        Representation::Momentum => (Representation::Position, position_amplitudes),
    };
    PhotonState { grid: s.grid, plane, h: f(&s.grid, &s.h), v: f(&s.grid, &s.v) }
}

/// Polarizer orientation in front of the camera.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Analyzer {
    /// `+` = H, `-` = V.
    HorizontalVertical,
    /// `+` = D = (H+V)/√2, `-` = A = (H-V)/√2.
    Diagonal,
    /// `+` = R = (H+iV)/√2, `-` = L = (H-iV)/√2.
    Circular,
}

impl Analyzer {
    pub fn as_str(self) -> &'static str {
        match self {
            Analyzer::HorizontalVertical => "hv",
            Analyzer::Diagonal => "diagonal",
            Analyzer::Circular => "circular",
        }
    }

    /// Projections `(<+|Ψ>, <-|Ψ>)` of a Jones vector.
    pub fn project(self, h: Complex64, v: Complex64) -> (Complex64, Complex64) {
        let r = FRAC_1_SQRT_2;
        match self {
            Analyzer::HorizontalVertical => (h, v),
            Analyzer::Diagonal => ((h + v) * r, (h - v) * r),
            Analyzer::Circular => {
                let iv = v * Complex64::i();
                ((h - iv) * r, (h + iv) * r)
            }
        }
    }
}

/// Born probabilities of each camera pixel for the two analyzer outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzerProbabilities {
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

impl AnalyzerProbabilities {
    pub fn total(&self) -> f64 {
        self.plus.iter().chain(&self.minus).sum()
    }

    /// Interleaved `(pixel, +), (pixel, -)` cells, the layout used by [`ShotHistogram`].
    pub fn cells(&self) -> Vec<f64> {
        self.plus.iter().zip(&self.minus).flat_map(|(&a, &b)| [a, b]).collect()
    }
}

/// Probabilities on the camera for a photon already in the detection plane.
pub fn detect(s: &PhotonState, analyzer: Analyzer) -> AnalyzerProbabilities {
    let w = s.spacing();
    let (plus, minus) = s
        .h
        .iter()
        .zip(&s.v)
        .map(|(&h, &v)| {
            let (a, b) = analyzer.project(h, v);
            (w * a.norm_sqr(), w * b.norm_sqr())
        })
        .unzip();
    AnalyzerProbabilities { plus, minus }
}

/// Final lens and polarizer. `XThenP` expects the modulated photon in the position
/// plane and detects momentum; `PThenX` expects the momentum plane and detects
/// position (the second lens of the 4f arrangement).
pub fn propagate_and_analyze(
    s: &PhotonState,
    order: MeasurementOrder,
    analyzer: Analyzer,
) -> Result<AnalyzerProbabilities> {
    let expected = modulation_plane(order);
    s.require(expected)?;
    Ok(detect(&fourier_lens(s), analyzer))
}

/// Plane in which the modulator acts for a given measurement order.
pub fn modulation_plane(order: MeasurementOrder) -> Representation {
    match order {
        MeasurementOrder::XThenP => Representation::Position,
        MeasurementOrder::PThenX => Representation::Momentum,
    }
}

/// Modulated photon just before the final lens: horizontal input, an initial lens
/// for `PThenX`, then the modulator.
pub fn modulated_photon(w: &WaveFunction, order: MeasurementOrder, set: &SlmSetting) -> Result<PhotonState> {
    if w.representation() != Representation::Position {
        return Err(Error::PlaneMismatch { expected: "position", found: w.representation().as_str() });
    }
    let mut s = prepare_photon(w, horizontal())?;
    if order == MeasurementOrder::PThenX {
        s = fourier_lens(&s);
    }
    Ok(slm_weak_rotation(&s, set))
}

/// Camera probabilities for one complete setting.
pub fn setting_probabilities(
    w: &WaveFunction,
    order: MeasurementOrder,
    set: &SlmSetting,
    analyzer: Analyzer,
) -> Result<AnalyzerProbabilities> {
    propagate_and_analyze(&modulated_photon(w, order, set)?, order, analyzer)
}

#[cfg(test)]
mod tests;

//! Standard test wavefunctions, all in natural units of the grid's `ħ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use super::{Grid, WaveFunction};
use crate::error::Result;

/// Normalized Hermite function `(2^n n! sqrt(π))^{-1/2} H_n(u) e^{-u²/2}` via the
/// stable three-term recurrence.
pub fn hermite_function(n: usize, u: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-u * u / 2.0).exp();
    for k in 0..n {
        let next = (2.0 / (k + 1) as f64).sqrt() * u * cur - (k as f64 / (k + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Parameters of a displaced, boosted, rescaled Hermite-Gauss mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub order: usize,
    pub x0: f64,
    pub p0: f64,
    pub width: f64,
}

impl Mode {
    pub fn ground() -> Self {
        Self { order: 0, x0: 0.0, p0: 0.0, width: 1.0 }
    }

    pub fn amplitude(&self, x: f64, hbar: f64) -> Complex64 {
        let u = (x - self.x0) / self.width;
        Complex64::from_polar(hermite_function(self.order, u) / self.width.sqrt(), self.p0 * x / hbar)
    }
}

/// `(πσ²)^{-1/4} e^{-(x-x0)²/(2σ²)} e^{i p0 x/ħ}`.
pub fn gaussian(grid: &Grid, x0: f64, p0: f64, width: f64) -> Result<WaveFunction> {
    hermite(grid, Mode { order: 0, x0, p0, width })
}

pub fn ground(grid: &Grid) -> Result<WaveFunction> {
    hermite(grid, Mode::ground())
}

pub fn hermite(grid: &Grid, mode: Mode) -> Result<WaveFunction> {
    let hbar = grid.hbar();
    WaveFunction::from_fn(*grid, |x| mode.amplitude(x, hbar))
}

/// Squeezed vacuum-shaped Gaussian of width `e^{-r}`, displaced to `(x0, p0)`.
pub fn squeezed(grid: &Grid, r: f64, x0: f64, p0: f64) -> Result<WaveFunction> {
    gaussian(grid, x0, p0, (-r).exp())
}

/// Equal superposition of two Gaussians at `±separation/2` with relative phase.
pub fn two_peak(grid: &Grid, separation: f64, width: f64, phase: f64) -> Result<WaveFunction> {
    let hbar = grid.hbar();
    let left = Mode { order: 0, x0: -separation / 2.0, p0: 0.0, width };
    let right = Mode { order: 0, x0: separation / 2.0, p0: 0.0, width };
    let rel = Complex64::from_polar(1.0, phase);
    WaveFunction::from_fn(*grid, |x| left.amplitude(x, hbar) + rel * right.amplitude(x, hbar))
}

/// Random superposition of up to four Hermite functions, displaced by up to 2,
/// boosted by up to 2 and rescaled to a width in `[0.7, 1.4]`. Comfortably
/// resolved by the default grid.
pub fn random_smooth<R: Rng + ?Sized>(grid: &Grid, rng: &mut R) -> Result<WaveFunction> {
    let hbar = grid.hbar();
    let x0 = rng.random_range(-2.0..2.0);
    let p0 = rng.random_range(-2.0..2.0);
    let width = rng.random_range(0.7..1.4);
    let terms = rng.random_range(1..=4usize);
    let coeffs: Vec<(Mode, Complex64)> = (0..terms)
        .map(|order| {
            let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            (Mode { order, x0, p0, width }, c)
        })
        .collect();
    WaveFunction::from_fn(*grid, |x| coeffs.iter().map(|(m, c)| c * m.amplitude(x, hbar)).sum())
}

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const DEFAULT_POINTS: usize = 1024;
pub const DEFAULT_LENGTH: f64 = 40.0;
pub const MIN_POINTS: usize = 16;

/// Uniform periodic grid `x_n = -L/2 + n dx`, `dx = L/N`, with the conjugate
/// momentum grid `p_m = (m - N/2) dp`, `dp = 2πħ/L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    points: usize,
    length: f64,
    hbar: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Self { points: DEFAULT_POINTS, length: DEFAULT_LENGTH, hbar: 1.0 }
    }
}

impl Grid {
    pub fn new(points: usize, length: f64) -> Result<Self> {
        Self::with_hbar(points, length, 1.0)
    }

    pub fn with_hbar(points: usize, length: f64, hbar: f64) -> Result<Self> {
        if points < MIN_POINTS || !points.is_power_of_two() {
            return Err(Error::InvalidGrid {
                reason: format!("N = {points} must be a power of two and at least {MIN_POINTS}"),
            });
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid { reason: format!("L = {length} must be positive") });
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidGrid { reason: format!("hbar = {hbar} must be positive") });
        }
        Ok(Self { points, length, hbar })
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn dx(&self) -> f64 {
        self.length / self.points as f64
    }

    pub fn dp(&self) -> f64 {
        2.0 * PI * self.hbar / self.length
    }

    /// Spacing of the wavenumbers `k` conjugate to `x` (`2π/L`).
    pub fn dk(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn x(&self, n: usize) -> f64 {
        -self.length / 2.0 + n as f64 * self.dx()
    }

    pub fn p(&self, m: usize) -> f64 {
        (m as f64 - (self.points / 2) as f64) * self.dp()
    }

    /// Wavenumber `k_j = (j - N/2) 2π/L`.
    pub fn k(&self, j: usize) -> f64 {
        (j as f64 - (self.points / 2) as f64) * self.dk()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.points).map(|n| self.x(n)).collect()
    }

    pub fn ps(&self) -> Vec<f64> {
        (0..self.points).map(|m| self.p(m)).collect()
    }

    pub fn ks(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.k(j)).collect()
    }

    /// Grid whose positions are this grid's momenta (`L' = N dp`), so that
    /// Fourier transforms can be chained.
    pub fn conjugate(&self) -> Self {
        Self { points: self.points, length: self.points as f64 * self.dp(), hbar: self.hbar }
    }

    /// Index of a momentum lying on the grid.
    pub fn momentum_index(&self, p: f64) -> Result<usize> {
        let s = on_lattice(p, self.dp())?;
        self.wrap(s + (self.points / 2) as i64)
    }

    /// Index of a position lying on the grid.
    pub fn position_index(&self, x: f64) -> Result<usize> {
        let s = on_lattice(x + self.length / 2.0, self.dx())?;
        self.wrap(s)
    }

    /// Integer momentum shift `s` with `ħk = s dp` for a wavenumber on the conjugate grid.
    pub fn wavenumber_shift(&self, k: f64) -> Result<i64> {
        on_lattice(k, self.dk())
    }

    fn wrap(&self, s: i64) -> Result<usize> {
        if s < 0 || s >= self.points as i64 {
            return Err(Error::InvalidArgument(format!("grid index {s} outside 0..{}", self.points)));
        }
        Ok(s as usize)
    }
}

/// `value / spacing` as an integer, provided it is one to within `1e-9`.
fn on_lattice(value: f64, spacing: f64) -> Result<i64> {
    let t = value / spacing;
    let r = t.round();
    if !value.is_finite() || (t - r).abs() > 1e-9 {
        return Err(Error::OffGridParameter { value, spacing });
    }
    Ok(r as i64)
}

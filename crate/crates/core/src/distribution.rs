use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::ComplexTensor;

/// Which complex-conjugation convention a Kirkwood-Dirac array follows.
///
/// `Standard` is `K_{i,j} = <b_j|a_i><a_i|rho|b_j>` (first axis measured first, weakly).
/// `Conjugate` is its complex conjugate, which is also the bracket chain
/// `<psi|o_{i_1}><o_{i_1}|o_{i_2}>...<o_{i_N}|psi>` produced by ordered
/// characteristic functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderingTag {
    Standard,
    Conjugate,
}

impl OrderingTag {
    pub fn flipped(self) -> Self {
        match self {
            OrderingTag::Standard => OrderingTag::Conjugate,
            OrderingTag::Conjugate => OrderingTag::Standard,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OrderingTag::Standard => "standard",
            OrderingTag::Conjugate => "conjugate",
        }
    }
}

impl fmt::Display for OrderingTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The post-selected outcome a conditional distribution is normalized on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conditioning {
    /// Label of the post-selected observable.
    pub axis: String,
    /// Outcome index (eigenvalue position or grid index).
    pub outcome: usize,
    /// Eigenvalue or grid coordinate of the outcome.
    pub value: f64,
}

/// A complex pseudo-distribution over the eigenvalue labels of one or more observables.
///
/// `cell_measure` is the volume element: `1` for discrete outcomes, `dx` or `dx·dp`
/// for grids, so that `Σ values · cell_measure = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoDistribution {
    pub values: ComplexTensor,
    pub axes: Vec<String>,
    pub coords: Vec<Vec<f64>>,
    pub conditioning: Option<Conditioning>,
    pub ordering: OrderingTag,
    pub cell_measure: f64,
}

impl PseudoDistribution {
    pub fn new(
        values: ComplexTensor,
        axes: Vec<String>,
        coords: Vec<Vec<f64>>,
        ordering: OrderingTag,
    ) -> Result<Self> {
        if axes.len() != values.rank() || coords.len() != values.rank() {
            return Err(Error::InvalidArgument(format!(
                "rank {} tensor needs {} axis labels and coordinate lists",
                values.rank(),
                values.rank()
            )));
        }
        for (c, &n) in coords.iter().zip(values.shape()) {
            if c.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: c.len() });
            }
        }
        Ok(Self { values, axes, coords, conditioning: None, ordering, cell_measure: 1.0 })
    }

    pub fn with_conditioning(mut self, conditioning: Conditioning) -> Self {
        self.conditioning = Some(conditioning);
        self
    }

    pub fn with_cell_measure(mut self, measure: f64) -> Self {
        self.cell_measure = measure;
        self
    }

    pub fn shape(&self) -> &[usize] {
        self.values.shape()
    }

    pub fn get(&self, idx: &[usize]) -> Complex64 {
        self.values.get(idx)
    }

    /// `Σ values · cell_measure`.
    pub fn total(&self) -> Complex64 {
        self.values.sum() * self.cell_measure
    }

    pub fn normalization_error(&self) -> f64 {
        (self.total() - Complex64::new(1.0, 0.0)).norm()
    }

    /// Complex conjugate, with the ordering tag flipped accordingly.
    pub fn conj(&self) -> Self {
        Self { values: self.values.conj(), ordering: self.ordering.flipped(), ..self.clone() }
    }

    /// Returns a copy rescaled to unit total.
    pub fn renormalized(&self) -> Self {
        let t = self.total();
        Self { values: self.values.map(|z| z / t), ..self.clone() }
    }

    /// Maximum elementwise deviation; refuses to compare arrays of different shape
    /// or conjugation convention.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                left: self.shape().to_vec(),
                right: other.shape().to_vec(),
            });
        }
        if self.ordering != other.ordering {
            return Err(Error::OrderingTagMismatch {
                left: self.ordering.to_string(),
                right: other.ordering.to_string(),
            });
        }
        self.values.max_abs_diff(&other.values)
    }

    /// Whether some entry leaves the classical range `[0, 1]` (negative, above one, or non-real).
    pub fn is_nonclassical(&self, tol: f64) -> bool {
        self.values
            .data()
            .iter()
            .any(|z| z.im.abs() > tol || z.re < -tol || z.re > 1.0 + tol)
    }
}

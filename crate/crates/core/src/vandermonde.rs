//! Vandermonde systems over observable eigenvalues.
//!
//! Row `n` of the matrix holds the `n`-th powers of the nodes, so `V · q` maps a
//! distribution over eigenvalues to its moment vector. The inverse is assembled
//! from Lagrange interpolating polynomials in `O(d²)` operations: row `i` of
//! `V⁻¹` holds the monomial coefficients of `L_i(x) = Π_{m≠i} (x - a_m)/(a_i - a_m)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quantum::{min_gap_and_range, ComplexMatrix};

/// Largest supported number of nodes.
pub const MAX_NODES: usize = 32;
/// Relative node gap below which nodes are considered coincident.
pub const NODE_REL_GAP: f64 = 1e-9;
/// Condition estimate above which a warning is logged.
pub const CONDITION_WARN: f64 = 1e12;

/// Vandermonde matrix with entries `V[n][i] = nodes[i]^n`. Node order is preserved.
#[derive(Debug, Clone, PartialEq)]
pub struct VandermondeMatrix {
    nodes: Vec<f64>,
}

impl VandermondeMatrix {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn entry(&self, power: usize, node: usize) -> f64 {
        self.nodes[node].powi(power as i32)
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        self.powers(self.dim())
    }

    /// `rows × d` matrix of powers `0..rows`, for under- or over-determined moment sets.
    pub fn powers(&self, rows: usize) -> DMatrix<f64> {
        DMatrix::from_fn(rows, self.dim(), |n, i| self.entry(n, i))
    }
}

pub fn build_vandermonde(nodes: &[f64]) -> Result<VandermondeMatrix> {
    if nodes.is_empty() {
        return Err(Error::Empty { what: "Vandermonde nodes" });
    }
    if nodes.len() > MAX_NODES {
        return Err(Error::TooManyNodes { d: nodes.len(), max: MAX_NODES });
    }
    if nodes.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite Vandermonde node".into()));
    }
    if nodes.len() > 1 {
        let (gap, range) = min_gap_and_range(nodes);
        let threshold = NODE_REL_GAP * range;
        if gap <= threshold {
            return Err(Error::DegenerateNodes { gap, threshold });
        }
    }
    Ok(VandermondeMatrix { nodes: nodes.to_vec() })
}

/// `Π_{i<j} (a_j - a_i)`.
pub fn vandermonde_determinant(v: &VandermondeMatrix) -> f64 {
    let a = &v.nodes;
    let mut det = 1.0;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            det *= a[j] - a[i];
        }
    }
    det
}

/// Exact inverse via Lagrange coefficients.
pub fn invert_vandermonde(v: &VandermondeMatrix) -> DMatrix<f64> {
    let (inv, _) = invert_vandermonde_counted(v);
    let cond = condition_estimate(v, &inv);
    if cond > CONDITION_WARN {
        log::warn!(
            "Vandermonde system with {} nodes is ill-conditioned (estimate {cond:e})",
            v.dim()
        );
    }
    inv
}

/// Inverse together with the number of floating-point multiply/add/divide operations used.
pub fn invert_vandermonde_counted(v: &VandermondeMatrix) -> (DMatrix<f64>, u64) {
    let a = &v.nodes;
    let d = a.len();
    let mut ops = 0u64;

    // master polynomial P(x) = Π (x - a_m), coefficients in increasing degree
    let mut master = vec![0.0; d + 1];
    master[0] = 1.0;
    for (m, &am) in a.iter().enumerate() {
        for k in (1..=m + 1).rev() {
            master[k] = master[k - 1] - am * master[k];
            ops += 2;
        }
        master[0] *= -am;
        ops += 1;
    }

    let mut inv = DMatrix::zeros(d, d);
    let mut quotient = vec![0.0; d];
    for (i, &ai) in a.iter().enumerate() {
        // P(x) / (x - a_i) by synthetic division from the leading coefficient down
        quotient[d - 1] = master[d];
        for k in (1..d).rev() {
            quotient[k - 1] = master[k] + ai * quotient[k];
            ops += 2;
        }
        let mut denom = 1.0;
        for (m, &am) in a.iter().enumerate() {
            if m != i {
                denom *= ai - am;
                ops += 2;
            }
        }
        for n in 0..d {
            inv[(i, n)] = quotient[n] / denom;
            ops += 1;
        }
    }
    (inv, ops)
}

/// Infinity-norm condition number `‖V‖∞ ‖V⁻¹‖∞` given an already computed inverse.
pub fn condition_estimate(v: &VandermondeMatrix, inverse: &DMatrix<f64>) -> f64 {
    let row_norm = |m: &DMatrix<f64>| {
        m.row_iter()
            .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    row_norm(&v.to_matrix()) * row_norm(inverse)
}

/// Evaluates a polynomial given by increasing-degree coefficients (Horner).
pub fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Minimum-norm least-squares solution of `M x = rhs` via the SVD pseudo-inverse.
pub fn solve_least_squares(m: &ComplexMatrix, rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Err(Error::Empty { what: "least-squares system" });
    }
    if rhs.len() != r {
        return Err(Error::DimensionMismatch { expected: r, found: rhs.len() });
    }
    let svd = m.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let eps = sigma_max * (r.max(c) as f64) * f64::EPSILON;
    let b = DVector::from_column_slice(rhs);
    let x = svd
        .solve(&b, eps)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(x.iter().cloned().collect())
}

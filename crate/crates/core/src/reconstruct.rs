//! Pseudo-distributions from measured moments and correlation functions.
//!
//! Each observable axis is inverted with the Lagrange-form inverse Vandermonde
//! matrix of its eigenvalues. Before inversion the eigenvalues are mapped
//! affinely onto `[-1, 1]` and the moments transformed to match, which keeps
//! the Vandermonde systems well scaled without changing the result.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::distribution::{OrderingTag, PseudoDistribution};
use crate::error::{Error, Result};
use crate::moments::{CorrelationMatrix, MomentVector};
use crate::oracle::TENSOR_SIZE_CAP;
use crate::quantum::{check_dim, ComplexMatrix, ObservableSpec};
use crate::tensor::ComplexTensor;
use crate::vandermonde::{build_vandermonde, condition_estimate, invert_vandermonde, solve_least_squares};

/// Tolerance on the zeroth moment, which is 1 by definition.
pub const ZEROTH_MOMENT_TOL: f64 = 1e-9;
/// Normalization deviation above which a reconstruction is logged as suspicious.
pub const NORMALIZATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ReconstructOptions {
    /// Rescale the output to unit total. Meant for shot-noise data; off by default
    /// so measurement bias stays visible.
    pub renormalize: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionReport {
    /// `|Σ Q - 1|` before any renormalization.
    pub normalization_error: f64,
    /// Largest infinity-norm condition estimate among the rescaled Vandermonde systems.
    pub condition: f64,
    pub least_squares: bool,
    pub renormalized: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub distribution: PseudoDistribution,
    pub report: ReconstructionReport,
}

/// Affine map of the eigenvalues onto `[-1, 1]`: `a' = (a - center) / scale`.
#[derive(Debug, Clone, Copy)]
struct Rescale {
    center: f64,
    scale: f64,
}

impl Rescale {
    fn for_nodes(nodes: &[f64]) -> Self {
        let lo = nodes.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = nodes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let scale = (hi - lo) / 2.0;
        if scale > 0.0 {
            Self { center: (hi + lo) / 2.0, scale }
        } else {
            Self { center: lo, scale: 1.0 }
        }
    }

    fn nodes(&self, nodes: &[f64]) -> Vec<f64> {
        nodes.iter().map(|a| (a - self.center) / self.scale).collect()
    }

    /// Lower-triangular `T` with `<A'^n> = Σ_k T[n][k] <A^k>`, from the binomial
    /// expansion of `((A - c)/s)^n`.
    fn moment_transform(&self, orders: usize) -> DMatrix<f64> {
        let mut t = DMatrix::zeros(orders, orders);
        if orders == 0 {
            return t;
        }
        t[(0, 0)] = 1.0;
        // row n+1 = (row n shifted up one power - c * row n) / s
        for n in 1..orders {
            for k in 0..=n {
                let up = if k > 0 { t[(n - 1, k - 1)] } else { 0.0 };
                t[(n, k)] = (up - self.center * t[(n - 1, k)]) / self.scale;
            }
        }
        t
    }
}

/// Per-axis map from raw moments to pseudo-probabilities, `V'^{-1} T`, and its
/// condition estimate.
fn axis_inverse(obs: &ObservableSpec) -> Result<(DMatrix<f64>, f64)> {
    let rs = Rescale::for_nodes(obs.eigenvalues());
    let v = build_vandermonde(&rs.nodes(obs.eigenvalues()))?;
    let inv = invert_vandermonde(&v);
    let cond = condition_estimate(&v, &inv);
    Ok((inv * rs.moment_transform(obs.dim()), cond))
}

fn check_zeroth(value: Complex64) -> Result<()> {
    if (value - Complex64::new(1.0, 0.0)).norm() > ZEROTH_MOMENT_TOL {
        return Err(Error::InvalidArgument(format!(
            "zeroth moment must be 1, got {value}"
        )));
    }
    Ok(())
}

fn finish(
    distribution: PseudoDistribution,
    condition: f64,
    least_squares: bool,
    options: &ReconstructOptions,
) -> Reconstruction {
    let normalization_error = distribution.normalization_error();
    if normalization_error > NORMALIZATION_TOL {
        log::warn!("reconstructed distribution sums to {} (off by {normalization_error:e})", distribution.total());
    }
    let distribution = if options.renormalize { distribution.renormalized() } else { distribution };
    Reconstruction {
        distribution,
        report: ReconstructionReport {
            normalization_error,
            condition,
            least_squares,
            renormalized: options.renormalize,
        },
    }
}

/// `Q = V^{-1} A` for a conditioned moment ladder; the result is `K_{i|j}` with the
/// `Standard` ordering tag.
pub fn conditional_from_moments(a: &ObservableSpec, mv: &MomentVector) -> Result<PseudoDistribution> {
    conditional_from_moments_with(a, mv, &ReconstructOptions::default()).map(|r| r.distribution)
}

/// As [`conditional_from_moments`]; ladders with other than `d` entries are solved
/// in the minimum-norm least-squares sense.
pub fn conditional_from_moments_with(
    a: &ObservableSpec,
    mv: &MomentVector,
    options: &ReconstructOptions,
) -> Result<Reconstruction> {
    let d = a.dim();
    let orders = mv.len();
    if orders == 0 {
        return Err(Error::Empty { what: "moment vector" });
    }
    check_zeroth(mv.values[0])?;
    let rs = Rescale::for_nodes(a.eigenvalues());
    let nodes = rs.nodes(a.eigenvalues());
    let v = build_vandermonde(&nodes)?;
    let t = rs.moment_transform(orders);
    let moments: Vec<Complex64> = (0..orders)
        .map(|n| (0..=n).map(|k| mv.values[k] * t[(n, k)]).sum())
        .collect();

    let (values, condition, least_squares) = if orders == d {
        let inv = invert_vandermonde(&v);
        let cond = condition_estimate(&v, &inv);
        let q = (0..d).map(|i| (0..d).map(|n| moments[n] * inv[(i, n)]).sum()).collect();
        (q, cond, false)
    } else {
        let m = v.powers(orders).map(|x| Complex64::new(x, 0.0));
        let sv = m.map(|z| z.re).singular_values();
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        (solve_least_squares(&m, &moments)?, smax / smin, true)
    };

    let dist = PseudoDistribution::new(
        ComplexTensor::from_vec(values),
        vec!["A".to_string()],
        vec![a.eigenvalues().to_vec()],
        OrderingTag::Standard,
    )?;
    Ok(finish(dist, condition, least_squares, options))
}

/// `Q = V^{-1} C (W^{-1})^T`, the complex conjugate of the Kirkwood-Dirac
/// distribution (`Conjugate` ordering tag).
pub fn joint_from_correlations(
    a: &ObservableSpec,
    b: &ObservableSpec,
    c: &CorrelationMatrix,
) -> Result<PseudoDistribution> {
    joint_from_correlations_with(a, b, c, &ReconstructOptions::default()).map(|r| r.distribution)
}

pub fn joint_from_correlations_with(
    a: &ObservableSpec,
    b: &ObservableSpec,
    c: &CorrelationMatrix,
    options: &ReconstructOptions,
) -> Result<Reconstruction> {
    check_dim(a.dim(), c.values.nrows())?;
    check_dim(b.dim(), c.values.ncols())?;
    let tensor = ComplexTensor::from_matrix(&c.values);
    let mut out = contract_all(&tensor, &[a, b])?;
    out.distribution.axes = vec![c.left.clone(), c.right.clone()];
    let condition = out.condition;
    Ok(finish(out.distribution, condition, false, options))
}

/// Per-axis Vandermonde inversion of an N-point correlation tensor
/// `C_{m_1..m_N} = <O_1^{m_1} ... O_N^{m_N}>`; the result is the bracket chain
/// `<psi|o_{i_1}><o_{i_1}|o_{i_2}> ... <o_{i_N}|psi>` (`Conjugate` tag).
pub fn npoint_from_correlations(
    observables: &[ObservableSpec],
    c: &ComplexTensor,
) -> Result<PseudoDistribution> {
    npoint_from_correlations_with(observables, c, &ReconstructOptions::default()).map(|r| r.distribution)
}

pub fn npoint_from_correlations_with(
    observables: &[ObservableSpec],
    c: &ComplexTensor,
    options: &ReconstructOptions,
) -> Result<Reconstruction> {
    if observables.is_empty() {
        return Err(Error::Empty { what: "observable list" });
    }
    if c.rank() != observables.len() {
        return Err(Error::DimensionMismatch { expected: observables.len(), found: c.rank() });
    }
    if c.len() > TENSOR_SIZE_CAP {
        return Err(Error::SizeCap { size: c.len(), cap: TENSOR_SIZE_CAP });
    }
    let refs: Vec<&ObservableSpec> = observables.iter().collect();
    let out = contract_all(c, &refs)?;
    Ok(finish(out.distribution, out.condition, false, options))
}

struct Contracted {
    distribution: PseudoDistribution,
    condition: f64,
}

fn contract_all(c: &ComplexTensor, observables: &[&ObservableSpec]) -> Result<Contracted> {
    let origin = vec![0; c.rank()];
    if !c.is_empty() {
        check_zeroth(c.get(&origin))?;
    }
    let mut t = c.clone();
    let mut condition = 0.0f64;
    for (axis, obs) in observables.iter().enumerate() {
        check_dim(obs.dim(), c.shape()[axis])?;
        let (m, cond) = axis_inverse(obs)?;
        condition = condition.max(cond);
        t = t.contract_axis(axis, &m)?;
    }
    let axes = (1..=observables.len()).map(|k| format!("O{k}")).collect();
    let coords = observables.iter().map(|o| o.eigenvalues().to_vec()).collect();
    let distribution = PseudoDistribution::new(t, axes, coords, OrderingTag::Conjugate)?;
    Ok(Contracted { distribution, condition })
}

/// Convenience for callers holding a plain matrix of correlations.
pub fn joint_from_matrix(
    a: &ObservableSpec,
    b: &ObservableSpec,
    c: &ComplexMatrix,
) -> Result<PseudoDistribution> {
    joint_from_correlations(a, b, &CorrelationMatrix::new(c.clone()))
}

//! Complex linear-algebra domain types shared by every other module: pure and
//! mixed states, non-degenerate observables, and the Born-rule utilities.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Tolerance for normalization, hermiticity and unitarity invariants.
pub const INVARIANT_TOL: f64 = 1e-12;
/// Smallest admissible eigenvalue of a density matrix.
pub const PSD_TOL: f64 = 1e-10;
/// Relative gap (in units of the spectral range) below which eigenvalues count as degenerate.
pub const DEGENERACY_REL_GAP: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A normalized pure state in a fixed orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    amplitudes: ComplexVector,
}

impl QuantumState {
    /// Wraps amplitudes that must already be normalized to within `1e-12`.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::Empty { what: "state amplitudes" });
        }
        let v = ComplexVector::from_vec(amplitudes);
        let norm_sq = v.norm_squared();
        if (norm_sq - 1.0).abs() > INVARIANT_TOL {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(Self { amplitudes: v })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::Empty { what: "state amplitudes" });
        }
        let mut v = ComplexVector::from_vec(amplitudes);
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm_sq: norm * norm });
        }
        v.unscale_mut(norm);
        Ok(Self { amplitudes: v })
    }

    /// Computational basis state `|k>`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::DimensionMismatch { expected: dim, found: k + 1 });
        }
        let mut v = ComplexVector::zeros(dim);
        v[k] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes: v })
    }

    /// The `i`-th eigenvector of `obs` as a state.
    pub fn eigenstate(obs: &ObservableSpec, i: usize) -> Self {
        Self { amplitudes: obs.eigenvector(i) }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    /// `<self|other>`.
    pub fn overlap(&self, other: &QuantumState) -> Result<Complex64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix { matrix: &self.amplitudes * self.amplitudes.adjoint() }
    }
}

/// A mixed state: Hermitian, unit trace, positive semi-definite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, INVARIANT_TOL)
    }

    /// Validates hermiticity and trace at `tol`; positivity is always checked at `-1e-10`
    /// (or `-tol` if looser).
    pub fn with_tolerance(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        let d = matrix.nrows();
        if d == 0 {
            return Err(Error::Empty { what: "density matrix" });
        }
        if matrix.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: matrix.ncols() });
        }
        let deviation = hermiticity_deviation(&matrix);
        if deviation > tol {
            return Err(Error::NotHermitian { deviation });
        }
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > tol || trace.im.abs() > tol {
            return Err(Error::InvalidTrace { trace: trace.re });
        }
        let herm = hermitian_part(&matrix);
        let eig = herm.symmetric_eigenvalues();
        let min_eigenvalue = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eigenvalue < -PSD_TOL.max(tol) {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        Ok(Self { matrix })
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty { what: "density matrix" });
        }
        let m = ComplexMatrix::identity(dim, dim) / Complex64::new(dim as f64, 0.0);
        Ok(Self { matrix: m })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

/// Anything that can act as the state in a Born-rule bracket.
pub trait StateRef {
    fn dim(&self) -> usize;

    /// `<bra| rho |ket>`.
    fn sandwich(&self, bra: &ComplexVector, ket: &ComplexVector) -> Complex64;

    /// `Tr(M rho)`; unchecked dimensions.
    fn trace_with(&self, m: &ComplexMatrix) -> Complex64;

    /// The state as a density matrix.
    fn density(&self) -> ComplexMatrix;
}

impl StateRef for QuantumState {
    fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    fn sandwich(&self, bra: &ComplexVector, ket: &ComplexVector) -> Complex64 {
        bra.dotc(&self.amplitudes) * self.amplitudes.dotc(ket)
    }

    fn trace_with(&self, m: &ComplexMatrix) -> Complex64 {
        self.amplitudes.dotc(&(m * &self.amplitudes))
    }

    fn density(&self) -> ComplexMatrix {
        &self.amplitudes * self.amplitudes.adjoint()
    }
}

impl StateRef for DensityMatrix {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn sandwich(&self, bra: &ComplexVector, ket: &ComplexVector) -> Complex64 {
        bra.dotc(&(&self.matrix * ket))
    }

    fn trace_with(&self, m: &ComplexMatrix) -> Complex64 {
        let d = self.dim();
        let mut acc = ZERO;
        for i in 0..d {
            for k in 0..d {
                acc += m[(i, k)] * self.matrix[(k, i)];
            }
        }
        acc
    }

    fn density(&self) -> ComplexMatrix {
        self.matrix.clone()
    }
}

/// A non-degenerate Hermitian observable given by its spectral decomposition.
/// Column `i` of the eigenvector matrix is the eigenvector for `eigenvalues[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSpec {
    eigenvalues: Vec<f64>,
    eigenvectors: ComplexMatrix,
}

impl ObservableSpec {
    pub fn new(eigenvalues: Vec<f64>, eigenvectors: ComplexMatrix) -> Result<Self> {
        let d = eigenvalues.len();
        if d == 0 {
            return Err(Error::Empty { what: "observable spectrum" });
        }
        if eigenvectors.nrows() != d || eigenvectors.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: eigenvectors.nrows() });
        }
        if eigenvalues.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidArgument("non-finite eigenvalue".into()));
        }
        let deviation = unitarity_deviation(&eigenvectors);
        if deviation > INVARIANT_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        check_nondegenerate(&eigenvalues)?;
        Ok(Self { eigenvalues, eigenvectors })
    }

    /// Observable diagonal in the computational basis.
    pub fn diagonal(eigenvalues: Vec<f64>) -> Result<Self> {
        let d = eigenvalues.len();
        Self::new(eigenvalues, ComplexMatrix::identity(d, d))
    }

    /// Diagonalizes a Hermitian matrix. Eigenpairs are accurate to about `1e-10`;
    /// prefer [`ObservableSpec::new`] when the decomposition is known analytically.
    pub fn from_hermitian(matrix: &ComplexMatrix) -> Result<Self> {
        let d = matrix.nrows();
        if d == 0 {
            return Err(Error::Empty { what: "observable matrix" });
        }
        if matrix.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, found: matrix.ncols() });
        }
        let deviation = hermiticity_deviation(matrix);
        if deviation > 1e-10 {
            return Err(Error::NotHermitian { deviation });
        }
        let eig = hermitian_part(matrix).symmetric_eigen();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vecs = ComplexMatrix::zeros(d, d);
        for (col, &i) in order.iter().enumerate() {
            vecs.set_column(col, &eig.eigenvectors.column(i));
        }
        Self::new(eigenvalues, vecs)
    }

    pub fn pauli_z() -> Self {
        Self::diagonal(vec![1.0, -1.0]).expect("valid")
    }

    pub fn pauli_x() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = ComplexMatrix::from_row_slice(
            2,
            2,
            &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)],
        );
        Self::new(vec![1.0, -1.0], v).expect("valid")
    }

    pub fn pauli_y() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = ComplexMatrix::from_row_slice(
            2,
            2,
            &[c(s, 0.0), c(s, 0.0), c(0.0, s), c(0.0, -s)],
        );
        Self::new(vec![1.0, -1.0], v).expect("valid")
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, i: usize) -> ComplexVector {
        self.eigenvectors.column(i).into_owned()
    }

    /// Dense matrix `sum_i a_i |a_i><a_i|`.
    pub fn matrix(&self) -> ComplexMatrix {
        self.spectral_function(|a| Complex64::new(a, 0.0))
    }

    /// `sum_i f(a_i) |a_i><a_i|`.
    pub fn spectral_function(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let d = self.dim();
        let mut scaled = self.eigenvectors.clone();
        for (i, &a) in self.eigenvalues.iter().enumerate() {
            let fa = f(a);
            for r in 0..d {
                scaled[(r, i)] *= fa;
            }
        }
        scaled * self.eigenvectors.adjoint()
    }
}

/// `A^n = sum_i a_i^n |a_i><a_i|`.
pub fn observable_power(obs: &ObservableSpec, n: u32) -> ComplexMatrix {
    obs.spectral_function(|a| Complex64::new(a.powi(n as i32), 0.0))
}

/// Overlap matrix `<a_i|b_j>` and the cells whose magnitude falls below a threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct IncompatibilityReport {
    pub overlaps: ComplexMatrix,
    pub threshold: f64,
    /// Zero-based `(i, j)` pairs with `|<a_i|b_j>| < threshold`.
    pub violations: Vec<(usize, usize)>,
}

impl IncompatibilityReport {
    pub fn is_fully_incompatible(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn check_incompatibility(
    a: &ObservableSpec,
    b: &ObservableSpec,
    threshold: f64,
) -> Result<IncompatibilityReport> {
    check_dim(a.dim(), b.dim())?;
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument("incompatibility threshold must be positive".into()));
    }
    let overlaps = a.eigenvectors.adjoint() * &b.eigenvectors;
    let d = a.dim();
    let mut violations = Vec::new();
    for i in 0..d {
        for j in 0..d {
            if overlaps[(i, j)].norm() < threshold {
                violations.push((i, j));
            }
        }
    }
    Ok(IncompatibilityReport { overlaps, threshold, violations })
}

/// Born-rule expectation `<psi|M|psi>` or `Tr(M rho)`.
pub fn expectation<S: StateRef + ?Sized>(state: &S, m: &ComplexMatrix) -> Result<Complex64> {
    check_dim(state.dim(), m.nrows())?;
    check_dim(state.dim(), m.ncols())?;
    Ok(state.trace_with(m))
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `max |M - M^dagger|`.
pub fn hermiticity_deviation(m: &ComplexMatrix) -> f64 {
    let d = m.nrows();
    let mut dev = 0.0f64;
    for i in 0..d {
        for j in i..d {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// `max |U^dagger U - I|`.
pub fn unitarity_deviation(u: &ComplexMatrix) -> f64 {
    let d = u.ncols();
    let g = u.adjoint() * u;
    let mut dev = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((g[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    dev
}

fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

fn check_nondegenerate(eigenvalues: &[f64]) -> Result<()> {
    if eigenvalues.len() < 2 {
        return Ok(());
    }
    let (gap, range) = min_gap_and_range(eigenvalues);
    let threshold = DEGENERACY_REL_GAP * range;
    if gap <= threshold {
        return Err(Error::DegenerateSpectrum { gap, threshold });
    }
    Ok(())
}

/// Minimum pairwise gap and spectral range of a node set.
pub(crate) fn min_gap_and_range(values: &[f64]) -> (f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let range = sorted[sorted.len() - 1] - sorted[0];
    let gap = sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    (gap, range)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_mat_close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) {
        assert_eq!(a.shape(), b.shape());
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).norm() <= tol, "{a} vs {b}");
        }
    }

    #[test]
    fn zeroth_power_is_identity() {
        let obs = ObservableSpec::pauli_x();
        assert_mat_close(&observable_power(&obs, 0), &ComplexMatrix::identity(2, 2), 1e-15);
    }

    #[test]
    fn pauli_z_squared_is_identity() {
        let z = ObservableSpec::pauli_z();
        assert_mat_close(&observable_power(&z, 2), &ComplexMatrix::identity(2, 2), 1e-15);
    }

    #[test]
    fn spin_one_cube() {
        let obs = ObservableSpec::diagonal(vec![-1.0, 0.0, 1.0]).unwrap();
        let expected = ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![
            c(-1.0, 0.0),
            c(0.0, 0.0),
            c(1.0, 0.0),
        ]));
        assert_mat_close(&observable_power(&obs, 3), &expected, 1e-15);
    }

    #[test]
    fn mutually_unbiased_qubit_bases() {
        let r = check_incompatibility(&ObservableSpec::pauli_z(), &ObservableSpec::pauli_x(), 1e-8)
            .unwrap();
        assert!(r.is_fully_incompatible());
        for o in r.overlaps.iter() {
            assert!((o.norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        }
    }

    #[test]
    fn identical_bases_violate() {
        let z = ObservableSpec::pauli_z();
        let r = check_incompatibility(&z, &z, 1e-8).unwrap();
        assert_eq!(r.violations, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn tiny_rotation_flags_violation() {
        let t = 1e-12f64;
        let u = ComplexMatrix::from_row_slice(
            2,
            2,
            &[c(t.cos(), 0.0), c(-t.sin(), 0.0), c(t.sin(), 0.0), c(t.cos(), 0.0)],
        );
        let b = ObservableSpec::new(vec![1.0, -1.0], u).unwrap();
        let r = check_incompatibility(&ObservableSpec::pauli_z(), &b, 1e-8).unwrap();
        assert_eq!(r.violations, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn incompatibility_dimension_mismatch() {
        let a = ObservableSpec::diagonal(vec![0.0, 1.0, 2.0]).unwrap();
        let err = check_incompatibility(&a, &ObservableSpec::pauli_z(), 1e-8).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn expectation_examples() {
        let zero = QuantumState::basis(2, 0).unwrap();
        let id = ComplexMatrix::identity(2, 2);
        assert!((expectation(&zero, &id).unwrap() - c(1.0, 0.0)).norm() < 1e-15);

        let plus = QuantumState::normalized(vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let z = ObservableSpec::pauli_z().matrix();
        assert!(expectation(&plus, &z).unwrap().norm() < 1e-15);

        let zx = &z * ObservableSpec::pauli_x().matrix();
        assert!(expectation(&zero, &zx).unwrap().norm() < 1e-15);

        let bad = ComplexMatrix::identity(3, 3);
        assert!(matches!(
            expectation(&zero, &bad),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn degenerate_spectrum_is_rejected() {
        let err = ObservableSpec::diagonal(vec![1.0, 1.0, -1.0]).unwrap_err();
        assert!(matches!(err, Error::DegenerateSpectrum { .. }));
        assert!(err.to_string().contains("tilt"));
        let err = ObservableSpec::diagonal(vec![0.0, 1e-12, 1.0]).unwrap_err();
        assert!(matches!(err, Error::DegenerateSpectrum { .. }));
        assert!(ObservableSpec::diagonal(vec![0.0, 1e-6, 1.0]).is_ok());
    }

    #[test]
    fn non_unitary_basis_is_rejected() {
        let m = ComplexMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.1, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(ObservableSpec::new(vec![1.0, 0.0], m), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn state_validation() {
        assert!(matches!(
            QuantumState::new(vec![c(1.0, 0.0), c(1.0, 0.0)]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(QuantumState::new(vec![]).is_err());
        let m = ComplexMatrix::from_row_slice(2, 2, &[c(1.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotPositive { .. })));
        let m = ComplexMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.0), c(0.2, 0.0), c(0.5, 0.0)]);
        assert!(matches!(DensityMatrix::new(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn hermitian_constructor_recovers_pauli_y() {
        let y = ObservableSpec::pauli_y();
        let rebuilt = ObservableSpec::from_hermitian(&y.matrix()).unwrap();
        assert_eq!(rebuilt.eigenvalues().len(), 2);
        assert!((rebuilt.eigenvalues()[0] + 1.0).abs() < 1e-10);
        assert_mat_close(&rebuilt.matrix(), &y.matrix(), 1e-10);
    }
}

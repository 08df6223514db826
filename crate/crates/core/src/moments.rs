//! Measurable quantities predicted by quantum mechanics: weak values, conditioned
//! moment ladders, ordered correlation functions and characteristic functions.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::oracle::TENSOR_SIZE_CAP;
use crate::quantum::{
    check_dim, expectation, observable_power, ComplexMatrix, ComplexVector, ObservableSpec,
    QuantumState, StateRef,
};
use crate::tensor::ComplexTensor;

/// Conditioned averages `<A^k>` for `k = 0..len`, with labels for the pre- and
/// post-selected states.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentVector {
    pub values: Vec<Complex64>,
    pub preselection: String,
    pub postselection: String,
}

impl MomentVector {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self { values, preselection: "psi".into(), postselection: "phi".into() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `C_{n,m} = <A^n B^m>` with `A` powers to the left.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub values: ComplexMatrix,
    pub left: String,
    pub right: String,
}

impl CorrelationMatrix {
    pub fn new(values: ComplexMatrix) -> Self {
        Self { values, left: "A".into(), right: "B".into() }
    }

    /// Operator-ordering record, e.g. `A^n B^m`.
    pub fn ordering(&self) -> String {
        format!("{}^n {}^m", self.left, self.right)
    }
}

/// `<phi|C|psi> / <phi|psi>`.
pub fn weak_value(
    c: &ComplexMatrix,
    psi: &QuantumState,
    phi: &QuantumState,
    floor: f64,
) -> Result<Complex64> {
    check_dim(psi.dim(), phi.dim())?;
    check_dim(psi.dim(), c.nrows())?;
    check_dim(psi.dim(), c.ncols())?;
    let overlap = phi.amplitudes().dotc(psi.amplitudes());
    if !(overlap.norm() > floor) {
        return Err(Error::PostSelectionTooWeak { probability: overlap.norm_sqr(), floor });
    }
    Ok(phi.amplitudes().dotc(&(c * psi.amplitudes())) / overlap)
}

/// Moments `<A^k>^psi_phi` for `k = 0..d`.
pub fn moment_vector(
    a: &ObservableSpec,
    psi: &QuantumState,
    phi: &QuantumState,
    floor: f64,
) -> Result<MomentVector> {
    moment_vector_orders(a, psi, phi, a.dim(), floor)
}

/// Moments `<A^k>^psi_phi` for `k = 0..orders`.
pub fn moment_vector_orders(
    a: &ObservableSpec,
    psi: &QuantumState,
    phi: &QuantumState,
    orders: usize,
    floor: f64,
) -> Result<MomentVector> {
    let values = (0..orders)
        .map(|k| weak_value(&observable_power(a, k as u32), psi, phi, floor))
        .collect::<Result<Vec<_>>>()?;
    Ok(MomentVector::new(values))
}

pub fn correlation_matrix<S: StateRef + ?Sized>(
    a: &ObservableSpec,
    b: &ObservableSpec,
    state: &S,
) -> Result<CorrelationMatrix> {
    check_dim(a.dim(), b.dim())?;
    check_dim(a.dim(), state.dim())?;
    let d = a.dim();
    let apow: Vec<_> = (0..d).map(|n| observable_power(a, n as u32)).collect();
    let bpow: Vec<_> = (0..d).map(|m| observable_power(b, m as u32)).collect();
    let values = ComplexMatrix::from_fn(d, d, |n, m| state.trace_with(&(&apow[n] * &bpow[m])));
    Ok(CorrelationMatrix::new(values))
}

/// `<A^n B^m>` assembled from the Hermitian observables `S = A^n B^m + B^m A^n` and
/// `D = i(A^n B^m - B^m A^n)`: `(<S> - i<D>)/2`.
pub fn correlator_hermitian_parts<S: StateRef + ?Sized>(
    a_pow: &ComplexMatrix,
    b_pow: &ComplexMatrix,
    state: &S,
) -> Result<Complex64> {
    check_dim(a_pow.nrows(), b_pow.nrows())?;
    let ab = a_pow * b_pow;
    let ba = b_pow * a_pow;
    let s = &ab + &ba;
    let d = (&ab - &ba) * Complex64::i();
    // both are Hermitian, so only the real parts are measurable
    let s_avg = expectation(state, &s)?.re;
    let d_avg = expectation(state, &d)?.re;
    Ok(Complex64::new(s_avg, -d_avg) * 0.5)
}

/// `C_{m_1..m_N} = <psi| O_1^{m_1} ... O_N^{m_N} |psi>`, each index in `0..d`.
pub fn correlation_tensor(observables: &[ObservableSpec], psi: &QuantumState) -> Result<ComplexTensor> {
    let n = observables.len();
    if n == 0 {
        return Err(Error::Empty { what: "observable list" });
    }
    let d = psi.dim();
    for o in observables {
        check_dim(d, o.dim())?;
    }
    let size = d.checked_pow(n as u32).unwrap_or(usize::MAX);
    if size > TENSOR_SIZE_CAP {
        return Err(Error::SizeCap { size, cap: TENSOR_SIZE_CAP });
    }
    let powers: Vec<Vec<ComplexMatrix>> = observables
        .iter()
        .map(|o| (0..d).map(|m| observable_power(o, m as u32)).collect())
        .collect();
    let mut out = ComplexTensor::zeros(vec![d; n]);
    let mut idx = vec![0usize; n];
    fill_correlations(&powers, psi.amplitudes(), n, psi.amplitudes(), &mut idx, &mut out);
    Ok(out)
}

// Builds O_k^{m_k} ... O_N^{m_N} |psi> from the right so shared suffixes are reused.
fn fill_correlations(
    powers: &[Vec<ComplexMatrix>],
    psi: &ComplexVector,
    level: usize,
    ket: &ComplexVector,
    idx: &mut [usize],
    out: &mut ComplexTensor,
) {
    if level == 0 {
        out.set(idx, psi.dotc(ket));
        return;
    }
    let k = level - 1;
    for (m, p) in powers[k].iter().enumerate() {
        idx[k] = m;
        let next = p * ket;
        fill_correlations(powers, psi, k, &next, idx, out);
    }
}

/// `Z(lambda, chi) = Tr(e^{i lambda A} e^{i chi B} rho)`.
pub fn char_fn_discrete<S: StateRef + ?Sized>(
    a: &ObservableSpec,
    b: &ObservableSpec,
    state: &S,
    lambda: f64,
    chi: f64,
) -> Result<Complex64> {
    check_dim(a.dim(), b.dim())?;
    check_dim(a.dim(), state.dim())?;
    let ea = a.spectral_function(|x| Complex64::from_polar(1.0, lambda * x));
    let eb = b.spectral_function(|x| Complex64::from_polar(1.0, chi * x));
    Ok(state.trace_with(&(ea * eb)))
}

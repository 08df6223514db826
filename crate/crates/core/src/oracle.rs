//! Ground-truth Kirkwood-Dirac quantities evaluated directly from states.
//!
//! Index convention: the first index runs over eigenvalues of `A`, the second over
//! eigenvalues of `B`, and `K_{i,j} = <b_j|a_i><a_i|rho|b_j>`.

use num_complex::Complex64;

use crate::distribution::{Conditioning, OrderingTag, PseudoDistribution};
use crate::error::{Error, Result};
use crate::quantum::{
    check_dim, check_incompatibility, ComplexMatrix, DensityMatrix, ObservableSpec, QuantumState,
    StateRef,
};
use crate::tensor::ComplexTensor;

/// Default post-selection floor.
pub const DEFAULT_POSTSELECTION_FLOOR: f64 = 1e-10;
/// Overlaps below this magnitude make the dual frame undefined.
pub const FRAME_OVERLAP_FLOOR: f64 = 1e-12;
/// Largest tensor produced by N-point quantities.
pub const TENSOR_SIZE_CAP: usize = 1_000_000;

/// Primary frame `F_{i,j} = |a_i><a_i|b_j><b_j|` and dual frame
/// `G_{i,j} = |a_i><b_j| / <b_j|a_i>`, stored row-major in `(i, j)`.
#[derive(Debug, Clone)]
pub struct Frames {
    dim: usize,
    primary: Vec<ComplexMatrix>,
    dual: Vec<ComplexMatrix>,
}

impl Frames {
    pub fn primary(&self, i: usize, j: usize) -> &ComplexMatrix {
        &self.primary[i * self.dim + j]
    }

    pub fn dual(&self, i: usize, j: usize) -> &ComplexMatrix {
        &self.dual[i * self.dim + j]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

fn require_incompatible(a: &ObservableSpec, b: &ObservableSpec) -> Result<ComplexMatrix> {
    let report = check_incompatibility(a, b, FRAME_OVERLAP_FLOOR)?;
    if let Some(&(i, j)) = report.violations.first() {
        return Err(Error::IncompatibilityViolated { i, j, overlap: report.overlaps[(i, j)].norm() });
    }
    Ok(report.overlaps)
}

pub fn frames(a: &ObservableSpec, b: &ObservableSpec) -> Result<Frames> {
    let overlaps = require_incompatible(a, b)?;
    let d = a.dim();
    let mut primary = Vec::with_capacity(d * d);
    let mut dual = Vec::with_capacity(d * d);
    for i in 0..d {
        let ai = a.eigenvector(i);
        for j in 0..d {
            let outer = &ai * b.eigenvector(j).adjoint();
            let ab = overlaps[(i, j)];
            primary.push(&outer * ab);
            dual.push(&outer / ab.conj());
        }
    }
    Ok(Frames { dim: d, primary, dual })
}

fn eigen_axes(a: &ObservableSpec, b: &ObservableSpec) -> (Vec<String>, Vec<Vec<f64>>) {
    (
        vec!["A".to_string(), "B".to_string()],
        vec![a.eigenvalues().to_vec(), b.eigenvalues().to_vec()],
    )
}

/// `K_{i,j} = <b_j|a_i><a_i|rho|b_j>` for a pure or mixed state.
pub fn kd_joint<S: StateRef + ?Sized>(
    state: &S,
    a: &ObservableSpec,
    b: &ObservableSpec,
) -> Result<PseudoDistribution> {
    check_dim(a.dim(), b.dim())?;
    check_dim(a.dim(), state.dim())?;
    let d = a.dim();
    let overlaps = a.eigenvectors().adjoint() * b.eigenvectors();
    let avecs: Vec<_> = (0..d).map(|i| a.eigenvector(i)).collect();
    let bvecs: Vec<_> = (0..d).map(|j| b.eigenvector(j)).collect();
    let values = ComplexTensor::from_fn(vec![d, d], |ix| {
        let (i, j) = (ix[0], ix[1]);
        overlaps[(i, j)].conj() * state.sandwich(&avecs[i], &bvecs[j])
    });
    let (axes, coords) = eigen_axes(a, b);
    PseudoDistribution::new(values, axes, coords, OrderingTag::Standard)
}

/// `K_{i|j} = K_{i,j} / <b_j|rho|b_j>`, the weak value of `|a_i><a_i|` post-selected on `b_j`.
pub fn kd_conditional<S: StateRef + ?Sized>(
    state: &S,
    a: &ObservableSpec,
    b: &ObservableSpec,
    j: usize,
    floor: f64,
) -> Result<PseudoDistribution> {
    check_dim(a.dim(), b.dim())?;
    check_dim(a.dim(), state.dim())?;
    let d = a.dim();
    if j >= d {
        return Err(Error::InvalidArgument(format!("post-selection index {j} out of range 0..{d}")));
    }
    let bj = b.eigenvector(j);
    let probability = state.sandwich(&bj, &bj).re;
    if !(probability > floor) {
        return Err(Error::PostSelectionTooWeak { probability, floor });
    }
    let values: Vec<Complex64> = (0..d)
        .map(|i| {
            let ai = a.eigenvector(i);
            bj.dotc(&ai) * state.sandwich(&ai, &bj) / probability
        })
        .collect();
    PseudoDistribution::new(
        ComplexTensor::from_vec(values),
        vec!["A".to_string()],
        vec![a.eigenvalues().to_vec()],
        OrderingTag::Standard,
    )
    .map(|p| {
        p.with_conditioning(Conditioning { axis: "B".into(), outcome: j, value: b.eigenvalues()[j] })
    })
}

/// Bracket chain `<psi|o_{i_1}><o_{i_1}|o_{i_2}> ... <o_{i_N}|psi>`.
///
/// For two observables this is the complex conjugate of [`kd_joint`], hence the
/// `Conjugate` ordering tag.
pub fn kd_npoint(psi: &QuantumState, observables: &[ObservableSpec]) -> Result<PseudoDistribution> {
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
    // <psi|o1_i> and <oN_i|psi>
    let first: Vec<Complex64> =
        (observables[0].eigenvectors().adjoint() * psi.amplitudes()).iter().map(|z| z.conj()).collect();
    let last = observables[n - 1].eigenvectors().adjoint() * psi.amplitudes();
    let links: Vec<ComplexMatrix> = observables
        .windows(2)
        .map(|w| w[0].eigenvectors().adjoint() * w[1].eigenvectors())
        .collect();
    let values = ComplexTensor::from_fn(vec![d; n], |ix| {
        let mut acc = first[ix[0]];
        for (k, link) in links.iter().enumerate() {
            acc *= link[(ix[k], ix[k + 1])];
        }
        acc * last[ix[n - 1]]
    });
    let axes = (1..=n).map(|k| format!("O{k}")).collect();
    let coords = observables.iter().map(|o| o.eigenvalues().to_vec()).collect();
    PseudoDistribution::new(values, axes, coords, OrderingTag::Conjugate)
}

/// `rho = Σ K_{i,j} G_{i,j}` without validating the result.
pub fn reconstruct_operator(
    k: &PseudoDistribution,
    a: &ObservableSpec,
    b: &ObservableSpec,
) -> Result<ComplexMatrix> {
    let d = a.dim();
    if k.shape() != [d, d] {
        return Err(Error::ShapeMismatch { left: k.shape().to_vec(), right: vec![d, d] });
    }
    let k = match k.ordering {
        OrderingTag::Standard => k.clone(),
        OrderingTag::Conjugate => k.conj(),
    };
    let fr = frames(a, b)?;
    let mut rho = ComplexMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            rho += fr.dual(i, j) * k.get(&[i, j]);
        }
    }
    Ok(rho)
}

/// Informationally complete inversion; the result is validated at `1e-9`.
pub fn reconstruct_state(
    k: &PseudoDistribution,
    a: &ObservableSpec,
    b: &ObservableSpec,
) -> Result<DensityMatrix> {
    DensityMatrix::with_tolerance(reconstruct_operator(k, a, b)?, 1e-9)
}

/// Born marginals of a joint distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Largest discarded imaginary part; should be at round-off level.
    pub max_imag: f64,
}

pub fn kd_marginals(k: &PseudoDistribution) -> Result<Marginals> {
    if k.conditioning.is_some() || k.values.rank() != 2 {
        return Err(Error::InvalidArgument(
            "marginals need an unconditioned two-axis distribution".into(),
        ));
    }
    let (r, c) = (k.shape()[0], k.shape()[1]);
    let w = k.cell_measure;
    let mut max_imag = 0.0f64;
    let a = (0..r)
        .map(|i| {
            let s: Complex64 = (0..c).map(|j| k.get(&[i, j])).sum::<Complex64>() * w;
            max_imag = max_imag.max(s.im.abs());
            s.re
        })
        .collect();
    let b = (0..c)
        .map(|j| {
            let s: Complex64 = (0..r).map(|i| k.get(&[i, j])).sum::<Complex64>() * w;
            max_imag = max_imag.max(s.im.abs());
            s.re
        })
        .collect();
    Ok(Marginals { a, b, max_imag })
}

/// `T_{i,j}(X) = <a_i|X|b_j> / <a_i|b_j>`.
pub fn observable_transform(
    x: &ComplexMatrix,
    a: &ObservableSpec,
    b: &ObservableSpec,
) -> Result<ComplexMatrix> {
    let overlaps = require_incompatible(a, b)?;
    check_dim(a.dim(), x.nrows())?;
    let sandwich = a.eigenvectors().adjoint() * x * b.eigenvectors();
    Ok(sandwich.component_div(&overlaps))
}

/// Quasi-probabilistic average `Σ conj(T_{i,j}) K_{i,j}`, equal to `Tr(X rho)` for Hermitian `X`.
pub fn kd_average(t: &ComplexMatrix, k: &PseudoDistribution) -> Result<Complex64> {
    let (r, c) = t.shape();
    if k.shape() != [r, c] {
        return Err(Error::ShapeMismatch { left: k.shape().to_vec(), right: vec![r, c] });
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..r {
        for j in 0..c {
            acc += t[(i, j)].conj() * k.get(&[i, j]);
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{c, expectation};
    use crate::random::{random_density, random_hermitian, random_observable, random_state, seeded};

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn z() -> ObservableSpec {
        ObservableSpec::pauli_z()
    }
    fn x() -> ObservableSpec {
        ObservableSpec::pauli_x()
    }

    #[test]
    fn frame_duality() {
        let fr = frames(&z(), &x()).unwrap();
        let tr = |m: ComplexMatrix| m.trace();
        assert!(close(tr(fr.primary(0, 0) * fr.dual(0, 0).adjoint()), c(1.0, 0.0), 1e-15));
        assert!(close(tr(fr.primary(0, 0) * fr.dual(0, 1).adjoint()), c(0.0, 0.0), 1e-15));
        let expected = ComplexMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!((fr.primary(0, 0) - expected).norm() < 1e-15);
    }

    #[test]
    fn frame_duality_random() {
        let mut rng = seeded(5);
        for d in 2..=4 {
            let a = random_observable(d, &mut rng);
            let b = random_observable(d, &mut rng);
            let fr = frames(&a, &b).unwrap();
            for i in 0..d {
                for j in 0..d {
                    for i2 in 0..d {
                        for j2 in 0..d {
                            let t = (fr.primary(i, j) * fr.dual(i2, j2).adjoint()).trace();
                            let e = if i == i2 && j == j2 { 1.0 } else { 0.0 };
                            assert!(close(t, c(e, 0.0), 1e-10));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn frames_need_incompatibility() {
        assert!(matches!(frames(&z(), &z()), Err(Error::IncompatibilityViolated { .. })));
    }

    #[test]
    fn kd_joint_examples() {
        let mixed = DensityMatrix::maximally_mixed(2).unwrap();
        let k = kd_joint(&mixed, &z(), &x()).unwrap();
        assert!(k.values.data().iter().all(|&v| close(v, c(0.25, 0.0), 1e-15)));

        let zero = QuantumState::basis(2, 0).unwrap();
        let k = kd_joint(&zero, &z(), &x()).unwrap();
        let expected = [c(0.5, 0.0), c(0.5, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        for (v, e) in k.values.data().iter().zip(expected) {
            assert!(close(*v, e, 1e-15));
        }
    }

    #[test]
    fn kd_joint_complex_entries_match_brackets() {
        let ph = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        let psi = QuantumState::normalized(vec![c(1.0, 0.0), ph]).unwrap();
        let k = kd_joint(&psi, &z(), &x()).unwrap();
        // brute-force bracket products with explicit vectors
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]];
        let b = [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]];
        let p = [c(s, 0.0), ph * s];
        let ip = |u: &[Complex64; 2], v: &[Complex64; 2]| u[0].conj() * v[0] + u[1].conj() * v[1];
        let mut any_imag = false;
        for i in 0..2 {
            for j in 0..2 {
                let expected = ip(&b[j], &a[i]) * ip(&a[i], &p) * ip(&p, &b[j]);
                assert!(close(k.get(&[i, j]), expected, 1e-15));
                any_imag |= expected.im.abs() > 0.1;
            }
        }
        assert!(any_imag);
    }

    #[test]
    fn kd_conditional_examples() {
        let mut rng = seeded(1);
        let b = random_observable(3, &mut rng);
        let a = random_observable(3, &mut rng);
        for k in 0..3 {
            let psi = QuantumState::eigenstate(&a, k);
            for j in 0..3 {
                let q = kd_conditional(&psi, &a, &b, j, DEFAULT_POSTSELECTION_FLOOR).unwrap();
                for i in 0..3 {
                    let e = if i == k { 1.0 } else { 0.0 };
                    assert!(close(q.get(&[i]), c(e, 0.0), 1e-12));
                }
            }
        }

        // |+x>, post-selected on |+y>: weak value of sigma_z is i
        let plus_x = QuantumState::normalized(vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let y = ObservableSpec::pauli_y();
        let q = kd_conditional(&plus_x, &z(), &y, 0, DEFAULT_POSTSELECTION_FLOOR).unwrap();
        assert!(close(q.get(&[0]), c(0.5, 0.5), 1e-15));
        assert!(close(q.get(&[1]), c(0.5, -0.5), 1e-15));

        for j in 0..3 {
            let psi = QuantumState::eigenstate(&b, j);
            let q = kd_conditional(&psi, &a, &b, j, DEFAULT_POSTSELECTION_FLOOR).unwrap();
            for i in 0..3 {
                let born = b.eigenvector(j).dotc(&a.eigenvector(i)).norm_sqr();
                assert!(close(q.get(&[i]), c(born, 0.0), 1e-12));
            }
        }
    }

    #[test]
    fn kd_conditional_rejects_weak_postselection() {
        let zero = QuantumState::basis(2, 0).unwrap();
        let err = kd_conditional(&zero, &x(), &z(), 1, DEFAULT_POSTSELECTION_FLOOR).unwrap_err();
        assert!(matches!(err, Error::PostSelectionTooWeak { .. }));
    }

    #[test]
    fn conditional_times_probability_is_joint_slice() {
        let mut rng = seeded(9);
        for d in 2..=5 {
            let a = random_observable(d, &mut rng);
            let b = random_observable(d, &mut rng);
            let rho = random_density(d, &mut rng);
            let k = kd_joint(&rho, &a, &b).unwrap();
            for j in 0..d {
                let bj = b.eigenvector(j);
                let p = rho.sandwich(&bj, &bj).re;
                let q = kd_conditional(&rho, &a, &b, j, DEFAULT_POSTSELECTION_FLOOR).unwrap();
                assert!((q.total() - c(1.0, 0.0)).norm() < 1e-10);
                for i in 0..d {
                    assert!(close(q.get(&[i]) * p, k.get(&[i, j]), 1e-10));
                }
            }
            // pure-state closed form
            let psi = random_state(d, &mut rng);
            for j in 0..d {
                let q = kd_conditional(&psi, &a, &b, j, DEFAULT_POSTSELECTION_FLOOR).unwrap();
                let bj = b.eigenvector(j);
                for i in 0..d {
                    let ai = a.eigenvector(i);
                    let e = bj.dotc(&ai) * ai.dotc(psi.amplitudes()) / bj.dotc(psi.amplitudes());
                    assert!(close(q.get(&[i]), e, 1e-10));
                }
            }
        }
    }

    #[test]
    fn npoint_examples() {
        let mut rng = seeded(21);
        let psi = random_state(3, &mut rng);
        let o = random_observable(3, &mut rng);
        let k1 = kd_npoint(&psi, std::slice::from_ref(&o)).unwrap();
        for i in 0..3 {
            let born = o.eigenvector(i).dotc(psi.amplitudes()).norm_sqr();
            assert!(close(k1.get(&[i]), c(born, 0.0), 1e-14));
        }

        let a = random_observable(3, &mut rng);
        let b = random_observable(3, &mut rng);
        let k2 = kd_npoint(&psi, &[a.clone(), b.clone()]).unwrap();
        let kj = kd_joint(&psi, &a, &b).unwrap();
        assert!(k2.max_abs_diff(&kj.conj()).unwrap() < 1e-14);

        // (z, x, z) on |0>: only chains starting and ending in |0> survive, each 1/2
        let zero = QuantumState::basis(2, 0).unwrap();
        let k3 = kd_npoint(&zero, &[z(), x(), z()]).unwrap();
        let mut expected = ComplexTensor::zeros(vec![2, 2, 2]);
        expected.set(&[0, 0, 0], c(0.5, 0.0));
        expected.set(&[0, 1, 0], c(0.5, 0.0));
        assert!(k3.values.max_abs_diff(&expected).unwrap() < 1e-15);
        assert!((k3.total() - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn npoint_size_cap() {
        let psi = QuantumState::basis(10, 0).unwrap();
        let obs = vec![ObservableSpec::diagonal((0..10).map(|i| i as f64).collect()).unwrap(); 7];
        assert!(matches!(kd_npoint(&psi, &obs), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn state_reconstruction_examples() {
        let zero = QuantumState::basis(2, 0).unwrap();
        let k = kd_joint(&zero, &z(), &x()).unwrap();
        let rho = reconstruct_state(&k, &z(), &x()).unwrap();
        assert!((rho.matrix() - zero.to_density().matrix()).norm() < 1e-15);

        let uniform = PseudoDistribution::new(
            ComplexTensor::from_fn(vec![2, 2], |_| c(0.25, 0.0)),
            vec!["A".into(), "B".into()],
            vec![vec![1.0, -1.0], vec![1.0, -1.0]],
            OrderingTag::Standard,
        )
        .unwrap();
        let rho = reconstruct_state(&uniform, &z(), &x()).unwrap();
        assert!((rho.matrix() - DensityMatrix::maximally_mixed(2).unwrap().matrix()).norm() < 1e-15);
    }

    #[test]
    fn state_reconstruction_round_trip() {
        let mut rng = seeded(77);
        for d in 2..=4 {
            for _ in 0..100 {
                let a = random_observable(d, &mut rng);
                let b = random_observable(d, &mut rng);
                let rho = random_density(d, &mut rng);
                let k = kd_joint(&rho, &a, &b).unwrap();
                let back = reconstruct_state(&k, &a, &b).unwrap();
                let err = (back.matrix() - rho.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
                assert!(err < 1e-10, "d={d} err={err}");
            }
        }
    }

    #[test]
    fn marginal_examples() {
        let zero = QuantumState::basis(2, 0).unwrap();
        let m = kd_marginals(&kd_joint(&zero, &z(), &x()).unwrap()).unwrap();
        assert!((m.a[0] - 1.0).abs() < 1e-15 && m.a[1].abs() < 1e-15);
        assert!((m.b[0] - 0.5).abs() < 1e-15 && (m.b[1] - 0.5).abs() < 1e-15);

        let mixed = DensityMatrix::maximally_mixed(2).unwrap();
        let m = kd_marginals(&kd_joint(&mixed, &z(), &x()).unwrap()).unwrap();
        assert!(m.a.iter().chain(&m.b).all(|p| (p - 0.5).abs() < 1e-15));

        let mut rng = seeded(4);
        let psi = random_state(4, &mut rng);
        let a = random_observable(4, &mut rng);
        let b = random_observable(4, &mut rng);
        let m = kd_marginals(&kd_joint(&psi, &a, &b).unwrap()).unwrap();
        assert!(m.max_imag < 1e-10);
        for i in 0..4 {
            assert!((m.a[i] - a.eigenvector(i).dotc(psi.amplitudes()).norm_sqr()).abs() < 1e-10);
            assert!((m.b[i] - b.eigenvector(i).dotc(psi.amplitudes()).norm_sqr()).abs() < 1e-10);
        }
    }

    #[test]
    fn expectation_identity_and_unit_disc() {
        let mut rng = seeded(31);
        for d in 2..=5 {
            let a = random_observable(d, &mut rng);
            let b = random_observable(d, &mut rng);
            let rho = random_density(d, &mut rng);
            let k = kd_joint(&rho, &a, &b).unwrap();
            assert!(k.values.data().iter().all(|z| z.norm() <= 1.0));
            let xm = random_hermitian(d, &mut rng);
            let t = observable_transform(&xm, &a, &b).unwrap();
            let lhs = expectation(&rho, &xm).unwrap();
            assert!(close(lhs, kd_average(&t, &k).unwrap(), 1e-9));
        }
    }
}

//! Seeded generators for random states, unitaries and observables.
//!
//! Every generator takes the RNG explicitly; use [`seeded`] to build one from a `u64`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::quantum::{ComplexMatrix, DensityMatrix, ObservableSpec, QuantumState};

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    DMatrix::from_fn(rows, cols, |_, _| gaussian_c64(rng))
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the phases of
/// `R`'s diagonal folded back into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let qr = ginibre(d, d, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn random_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> QuantumState {
    let amps = (0..d).map(|_| gaussian_c64(rng)).collect();
    QuantumState::normalized(amps).expect("gaussian vector is nonzero")
}

/// Full-rank random density matrix `G G^dagger / Tr(G G^dagger)`.
pub fn random_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
    let g = ginibre(d, d, rng);
    let m = &g * g.adjoint();
    let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let tr = m.trace();
    DensityMatrix::new(m / tr).expect("Ginibre construction is a valid state")
}

pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(d, d, rng);
    (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Well-separated random spectrum: jittered equispaced nodes, randomly scaled and shifted.
pub fn random_spectrum<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    if d == 1 {
        return vec![rng.random_range(-2.0..2.0)];
    }
    let scale: f64 = rng.random_range(0.5..3.0);
    let shift: f64 = rng.random_range(-2.0..2.0);
    let spacing = 2.0 / (d - 1) as f64;
    let mut nodes: Vec<f64> = (0..d)
        .map(|i| -1.0 + i as f64 * spacing + rng.random_range(-0.3..0.3) * spacing)
        .map(|x| scale * x + shift)
        .collect();
    // random labelling order: node order follows the observable, not magnitude
    for i in (1..d).rev() {
        let j = rng.random_range(0..=i);
        nodes.swap(i, j);
    }
    nodes
}

/// Observable with a random spectrum and a Haar-random eigenbasis.
pub fn random_observable<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ObservableSpec {
    let eig = random_spectrum(d, rng);
    let u = haar_unitary(d, rng);
    ObservableSpec::new(eig, u).expect("random observable is valid")
}

/// Observable with Chebyshev-node eigenvalues on `[-1, 1]` and a Haar-random eigenbasis.
pub fn chebyshev_observable<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ObservableSpec {
    let u = haar_unitary(d, rng);
    ObservableSpec::new(chebyshev_nodes(d), u).expect("chebyshev observable is valid")
}

/// Chebyshev points of the first kind on `[-1, 1]`.
pub fn chebyshev_nodes(d: usize) -> Vec<f64> {
    (0..d)
        .map(|k| (std::f64::consts::PI * (2 * k + 1) as f64 / (2 * d) as f64).cos())
        .collect()
}

/// Unit-spaced nodes centred on zero, like the spectrum of a spin component.
pub fn unit_spaced_nodes(d: usize) -> Vec<f64> {
    let centre = (d as f64 - 1.0) / 2.0;
    (0..d).map(|i| i as f64 - centre).collect()
}

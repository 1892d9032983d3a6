//! Seeded samplers for states, local unitaries, filters and directions.
//! Used by the search routines and by the property tests.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{kron3, spectral_2x2_psd, ComplexMatrix, Vec3, C64};
use crate::state::{DensityMatrix, DIM};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent generator for stream `index` derived from `seed`.
pub fn rng_stream(seed: u64, index: u64) -> SeededRng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Uniformly distributed point on the unit sphere.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    loop {
        let v = [normal(rng), normal(rng), normal(rng)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-12 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(normal(rng), normal(rng))
}

/// Haar-random 2×2 unitary (normalized Gaussian columns, Gram-Schmidt).
pub fn unitary_2x2<R: Rng + ?Sized>(rng: &mut R) -> ComplexMatrix {
    let a = [complex_gaussian(rng), complex_gaussian(rng)];
    let na = (a[0].norm_sqr() + a[1].norm_sqr()).sqrt();
    let u0 = [a[0] / na, a[1] / na];
    // Orthogonal complement of u0, times a random phase.
    let phase = C64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU);
    let u1 = [-u0[1].conj() * phase, u0[0].conj() * phase];
    ComplexMatrix::from_row_major(2, 2, vec![u0[0], u1[0], u0[1], u1[1]])
}

pub fn local_unitary<R: Rng + ?Sized>(rng: &mut R) -> ComplexMatrix {
    kron3(&unitary_2x2(rng), &unitary_2x2(rng), &unitary_2x2(rng))
}

pub fn pure_state_vector<R: Rng + ?Sized>(rng: &mut R) -> Vec<C64> {
    (0..DIM).map(|_| complex_gaussian(rng)).collect()
}

/// A random pure state mixed with random diagonal noise.
pub fn state<R: Rng + ?Sized>(rng: &mut R) -> DensityMatrix {
    let pure = DensityMatrix::pure(&pure_state_vector(rng)).expect("nonzero vector");
    let weights: Vec<f64> = (0..DIM).map(|_| rng.random::<f64>()).collect();
    let total: f64 = weights.iter().sum();
    let noise = ComplexMatrix::from_real_diag(&weights.iter().map(|w| w / total).collect::<Vec<_>>());
    let q = rng.random::<f64>();
    let m = &pure.matrix().scale_real(q) + &noise.scale_real(1.0 - q);
    DensityMatrix::new_repaired(m.hermitian_part()).expect("convex mixture is a state")
}

/// Random positive definite 2×2 operator `U·diag(s₁, s₂)·U†` with
/// eigenvalues spread over a few orders of magnitude.
pub fn psd_filter<R: Rng + ?Sized>(rng: &mut R) -> ComplexMatrix {
    let u = unitary_2x2(rng);
    let s1 = 10f64.powf(rng.random_range(-1.5..1.5));
    let s2 = 10f64.powf(rng.random_range(-1.5..1.5));
    let f = &(&u * &ComplexMatrix::from_real_diag(&[s1, s2])) * &u.adjoint();
    let f = f.hermitian_part();
    debug_assert!(spectral_2x2_psd(&f).is_ok());
    f
}

/// Haar-random 3×3 rotation.
pub fn rotation_3x3<R: Rng + ?Sized>(rng: &mut R) -> [Vec3; 3] {
    let a = unit_vector(rng);
    let mut b = unit_vector(rng);
    let d = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    for i in 0..3 {
        b[i] -= d * a[i];
    }
    let nb = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
    b.iter_mut().for_each(|x| *x /= nb);
    let c = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    [a, b, c]
}

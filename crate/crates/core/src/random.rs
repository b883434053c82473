//! Seeded random states and operators for property checks.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::fock::{DensityMatrix, FockOperator, FockSpace};
use crate::linalg;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_gaussian<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Ginibre matrix with i.i.d. complex Gaussian entries.
pub fn ginibre<R: Rng>(dim: usize, rng: &mut R) -> Array2<C64> {
    Array2::from_shape_simple_fn((dim, dim), || complex_gaussian(rng))
}

/// Random density matrix `GG†/tr(GG†)` supported on the levels `0..support`.
pub fn random_density<R: Rng>(space: FockSpace, support: usize, rng: &mut R) -> DensityMatrix {
    let n = space.n_max();
    let k = support.clamp(1, n);
    let g = ginibre(k, rng);
    let small = g.dot(&linalg::dagger(&g));
    let tr = linalg::trace(&small).re;
    let mut mat = Array2::zeros((n, n));
    for i in 0..k {
        for j in 0..k {
            mat[[i, j]] = small[[i, j]] / tr;
        }
    }
    linalg::hermitize(&mut mat);
    DensityMatrix::from_parts(space, mat)
}

/// Random Hermitian operator with Gaussian entries.
pub fn random_hermitian<R: Rng>(space: FockSpace, rng: &mut R) -> FockOperator {
    let g = ginibre(space.n_max(), rng);
    let mut h = &g + &linalg::dagger(&g);
    h.mapv_inplace(|z| z * 0.5);
    linalg::hermitize(&mut h);
    FockOperator::from_parts(space, h)
}

/// Random unitary `exp(iH)` for a Gaussian Hermitian `H`.
pub fn random_unitary<R: Rng>(space: FockSpace, rng: &mut R) -> FockOperator {
    let h = random_hermitian(space, rng);
    let (vals, vecs) = linalg::eigh(h.matrix()).expect("Hermitian eigendecomposition");
    let phases = vals.mapv(|v| C64::from_polar(1.0, v));
    let scaled = &vecs * &phases.insert_axis(ndarray::Axis(0));
    FockOperator::from_parts(space, scaled.dot(&linalg::dagger(&vecs)))
}

/// Random 2x2 density matrix (mixed, full rank almost surely).
pub fn random_qubit<R: Rng>(rng: &mut R) -> Array2<C64> {
    let g = ginibre(2, rng);
    let mut m = g.dot(&linalg::dagger(&g));
    let tr = linalg::trace(&m).re;
    m.mapv_inplace(|z| z / tr);
    linalg::hermitize(&mut m);
    m
}

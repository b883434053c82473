//! Real coordinates for Hermitian operators and matrix representations of
//! superoperators in those coordinates.
//!
//! The orthonormal basis (trace inner product) of the `n x n` Hermitian
//! matrices is indexed by `k = i·n + j`:
//!
//! - `i == j`: `|i⟩⟨i|`, coordinate `X_ii`;
//! - `i < j`: `(|i⟩⟨j| + |j⟩⟨i|)/√2`, coordinate `√2 Re X_ij`;
//! - `i > j`: `i(|j⟩⟨i| − |i⟩⟨j|)/√2`, coordinate `√2 Im X_ji`.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::fock::FockSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HermitianCoords {
    n: usize,
}

impl HermitianCoords {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n * self.n
    }

    /// Coordinates of the Hermitian part of `x`.
    pub fn to_coords(&self, x: &Array2<C64>) -> Array1<f64> {
        let n = self.n;
        let mut c = Array1::zeros(n * n);
        for i in 0..n {
            c[i * n + i] = x[[i, i]].re;
            for j in (i + 1)..n {
                let z = 0.5 * (x[[i, j]] + x[[j, i]].conj());
                c[i * n + j] = SQRT_2 * z.re;
                c[j * n + i] = SQRT_2 * z.im;
            }
        }
        c
    }

    pub fn from_coords(&self, c: &Array1<f64>) -> Array2<C64> {
        let n = self.n;
        let mut x = Array2::zeros((n, n));
        for i in 0..n {
            x[[i, i]] = C64::new(c[i * n + i], 0.0);
            for j in (i + 1)..n {
                let z = C64::new(c[i * n + j], c[j * n + i]) / SQRT_2;
                x[[i, j]] = z;
                x[[j, i]] = z.conj();
            }
        }
        x
    }

    pub fn basis_element(&self, k: usize) -> Array2<C64> {
        let mut c = Array1::zeros(self.dim());
        c[k] = 1.0;
        self.from_coords(&c)
    }
}

/// Real `n² x n²` matrix of a Hermiticity-preserving superoperator.
#[derive(Debug, Clone)]
pub struct VectorizedLiouvillian {
    space: FockSpace,
    matrix: Array2<f64>,
}

impl VectorizedLiouvillian {
    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn coords(&self) -> HermitianCoords {
        HermitianCoords::new(self.space.n_max())
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<f64> {
        self.matrix
    }

    pub fn apply(&self, x: &Array2<C64>) -> Result<Array2<C64>> {
        let n = self.space.n_max();
        if x.dim() != (n, n) {
            return Err(Error::ShapeMismatch {
                expected: n,
                rows: x.nrows(),
                cols: x.ncols(),
            });
        }
        let c = self.coords();
        Ok(c.from_coords(&self.matrix.dot(&c.to_coords(x))))
    }

    /// `‖vec(I)ᵀ M‖`: zero for trace-preserving generators.
    pub fn trace_defect(&self) -> f64 {
        let c = self.coords();
        let id = c.to_coords(&Array2::eye(self.space.n_max()));
        let r = id.dot(&self.matrix);
        r.dot(&r).sqrt()
    }
}

/// Matrix whose `k`-th column holds the coordinates of `f(E_k)`.
pub fn vectorize_generator<F>(space: FockSpace, f: F) -> VectorizedLiouvillian
where
    F: Fn(&Array2<C64>) -> Array2<C64> + Sync,
{
    let c = HermitianCoords::new(space.n_max());
    let d = c.dim();
    let columns: Vec<Array1<f64>> = (0..d)
        .into_par_iter()
        .map(|k| c.to_coords(&f(&c.basis_element(k))))
        .collect();
    let mut matrix = Array2::zeros((d, d));
    for (k, col) in columns.into_iter().enumerate() {
        matrix.column_mut(k).assign(&col);
    }
    VectorizedLiouvillian { space, matrix }
}

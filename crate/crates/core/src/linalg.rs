//! Dense linear-algebra helpers shared by the simulation and reduction code.
//!
//! Complex matrices are small (n_max x n_max) and handled with plain `ndarray`
//! products. Real superoperator matrices are large (n_max^2 square) but become
//! block diagonal under a permutation whenever the generator respects a
//! symmetry (photon-number parity, complex conjugation), so the spectral
//! routines here decompose them into independent blocks before calling LAPACK.

use ndarray::{self as nd, Array1, Array2, ShapeBuilder};
use ndarray_linalg::{Eigh, EigVals, SVD, UPLO};
use num_complex::Complex64 as C64;

use crate::error::Result;

pub fn dagger(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

pub fn trace(m: &Array2<C64>) -> C64 {
    m.diag().sum()
}

pub fn commutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    a.dot(b) - b.dot(a)
}

/// Replace `m` by `(m + m†)/2`.
pub fn hermitize(m: &mut Array2<C64>) {
    let n = m.nrows();
    for i in 0..n {
        m[[i, i]] = C64::new(m[[i, i]].re, 0.0);
        for j in (i + 1)..n {
            let avg = (m[[i, j]] + m[[j, i]].conj()) * 0.5;
            m[[i, j]] = avg;
            m[[j, i]] = avg.conj();
        }
    }
}

/// Largest elementwise deviation from Hermiticity, `max |m_ij - conj(m_ji)|`.
pub fn hermiticity_defect(m: &Array2<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    worst
}

pub fn frobenius(m: &Array2<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn frobenius_real(m: &Array2<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(m: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    // ndarray-linalg hands row-major complex input to LAPACK as its transpose
    // and returns conjugated eigenvectors; a column-major copy avoids that.
    let mut f = Array2::zeros(m.dim().f());
    f.assign(m);
    Ok(f.eigh(UPLO::Lower)?)
}

pub fn eigvalsh(m: &Array2<C64>) -> Result<Array1<f64>> {
    let (vals, _) = eigh(m)?;
    Ok(vals)
}

/// Relative eigenvalue floor used by [`psd_sqrt`].
pub const PSD_CLIP: f64 = 1e-12;

/// Square root of a positive-semidefinite Hermitian matrix. Eigenvalues below
/// `PSD_CLIP` times the largest one are roundoff and are set to zero before
/// taking the root; otherwise their square roots would leak `~1e-8` noise.
pub fn psd_sqrt(m: &Array2<C64>) -> Result<Array2<C64>> {
    let (vals, vecs) = eigh(m)?;
    let floor = PSD_CLIP * vals.iter().fold(0.0_f64, |a, &v| a.max(v));
    let roots = vals.mapv(|v| C64::new(if v > floor { v.sqrt() } else { 0.0 }, 0.0));
    let scaled = &vecs * &roots.insert_axis(nd::Axis(0));
    Ok(scaled.dot(&dagger(&vecs)))
}

/// Connected components of the sparsity graph of a square matrix, where `i`
/// and `j` are linked whenever `|m_ij|` or `|m_ji|` exceeds `threshold`.
/// Components are returned with ascending indices, ordered by smallest member.
pub fn coupled_blocks(m: &Array2<f64>, threshold: f64) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();

    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }

    for i in 0..n {
        for j in 0..n {
            if i != j && m[[i, j]].abs() > threshold {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    groups
}

fn block_threshold(m: &Array2<f64>) -> f64 {
    let scale = m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    1e-15 * scale
}

fn submatrix(m: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    Array2::from_shape_fn((idx.len(), idx.len()), |(a, b)| m[[idx[a], idx[b]]])
}

/// Eigenvalues of a general real square matrix, computed block by block.
pub fn eigenvalues(m: &Array2<f64>) -> Result<Vec<C64>> {
    let mut out = Vec::with_capacity(m.nrows());
    for block in coupled_blocks(m, block_threshold(m)) {
        let sub = submatrix(m, &block);
        out.extend(sub.eigvals()?.iter().copied());
    }
    Ok(out)
}

/// Largest real part over the spectrum.
pub fn spectral_abscissa(m: &Array2<f64>) -> Result<f64> {
    Ok(eigenvalues(m)?
        .iter()
        .fold(f64::NEG_INFINITY, |acc, z| acc.max(z.re)))
}

/// Left kernel of a real square matrix computed from its singular value
/// decomposition.
#[derive(Debug, Clone)]
pub struct LeftKernel {
    /// Orthonormal kernel basis, one vector per column.
    pub basis: Array2<f64>,
    /// Every singular value of the matrix, ascending.
    pub singular_values: Vec<f64>,
    /// Number of singular values below the relative threshold.
    pub numerical_dim: usize,
}

impl LeftKernel {
    /// Ratio between the first singular value outside the kernel and the
    /// largest one inside it.
    pub fn gap_ratio(&self, dim: usize) -> f64 {
        if dim == 0 || dim >= self.singular_values.len() {
            return f64::INFINITY;
        }
        let inside = self.singular_values[dim - 1];
        let outside = self.singular_values[dim];
        if inside == 0.0 {
            f64::INFINITY
        } else {
            outside / inside
        }
    }
}

/// Vectors `p` with `pᵀ m = 0`: the `dim` left singular vectors attached to the
/// smallest singular values. `numerical_dim` counts singular values at or
/// below `rel_tol * σ_max`; the caller decides whether it must equal `dim`.
pub fn left_kernel(m: &Array2<f64>, dim: usize, rel_tol: f64) -> Result<LeftKernel> {
    let n = m.nrows();
    let mut candidates: Vec<(f64, Array1<f64>)> = Vec::with_capacity(n);
    for block in coupled_blocks(m, block_threshold(m)) {
        let sub = submatrix(m, &block);
        let (u, sigma, _) = sub.svd(true, false)?;
        let u = u.expect("left singular vectors requested");
        for (k, &s) in sigma.iter().enumerate() {
            let mut v = Array1::zeros(n);
            for (a, &row) in block.iter().enumerate() {
                v[row] = u[[a, k]];
            }
            candidates.push((s, v));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let sigma_max = candidates.last().map_or(0.0, |c| c.0);
    let numerical_dim = candidates
        .iter()
        .filter(|c| c.0 <= rel_tol * sigma_max)
        .count();
    let take = dim.min(n);
    let mut basis = Array2::zeros((n, take));
    for (k, (_, v)) in candidates.iter().take(take).enumerate() {
        basis.column_mut(k).assign(v);
    }
    Ok(LeftKernel {
        basis,
        singular_values: candidates.iter().map(|c| c.0).collect(),
        numerical_dim,
    })
}

/// Sum of singular values.
pub fn nuclear_norm(m: &Array2<C64>) -> Result<f64> {
    let mut f = Array2::zeros(m.dim().f());
    f.assign(m);
    let (_, sigma, _) = f.svd(false, false)?;
    Ok(sigma.sum())
}

/// 2-norm condition number from the singular values.
pub fn condition_number(m: &Array2<f64>) -> Result<f64> {
    let (_, sigma, _) = m.svd(false, false)?;
    let max = sigma.iter().fold(0.0_f64, |a, &b| a.max(b));
    let min = sigma.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    Ok(if min == 0.0 { f64::INFINITY } else { max / min })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn blocks_follow_sparsity() {
        let m = array![
            [1.0, 0.0, 2.0, 0.0],
            [0.0, 3.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 5.0, 0.0, 1.0],
        ];
        let blocks = coupled_blocks(&m, 0.0);
        assert_eq!(blocks, vec![vec![0, 2], vec![1, 3]]);
    }

    #[test]
    fn left_kernel_of_block_matrix() {
        // rows sum to zero in the first block, second block is invertible
        let m = array![
            [-1.0, 0.0, 1.0],
            [0.0, 2.0, 0.0],
            [1.0, 0.0, -1.0],
        ];
        let k = left_kernel(&m, 1, 1e-10).unwrap();
        assert_eq!(k.numerical_dim, 1);
        let p = k.basis.column(0);
        let residual = p.dot(&m);
        assert!(residual.iter().all(|x| x.abs() < 1e-14));
        assert!((p[0] - p[2]).abs() < 1e-14 && p[1].abs() < 1e-14);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let m = array![
            [C64::new(2.0, 0.0), C64::new(0.5, 0.5)],
            [C64::new(0.5, -0.5), C64::new(1.0, 0.0)],
        ];
        let r = psd_sqrt(&m).unwrap();
        let back = r.dot(&r);
        assert!(frobenius(&(back - &m)) < 1e-13);
    }

    #[test]
    fn eigh_vectors_satisfy_eigen_equation() {
        let m = array![
            [C64::new(2.0, 0.0), C64::new(0.5, 0.5), C64::new(0.0, -1.0)],
            [C64::new(0.5, -0.5), C64::new(1.0, 0.0), C64::new(0.3, 0.2)],
            [C64::new(0.0, 1.0), C64::new(0.3, -0.2), C64::new(-1.0, 0.0)],
        ];
        let (vals, vecs) = eigh(&m).unwrap();
        for k in 0..3 {
            let v = vecs.column(k);
            let r = m.dot(&v) - v.mapv(|z| z * vals[k]);
            assert!(r.iter().all(|z| z.norm() < 1e-13));
        }
    }

    #[test]
    fn hermitize_is_projection() {
        let mut m = array![
            [C64::new(1.0, 0.3), C64::new(2.0, 1.0)],
            [C64::new(0.0, 0.0), C64::new(-1.0, 0.0)],
        ];
        hermitize(&mut m);
        assert!(hermiticity_defect(&m) == 0.0);
        assert_eq!(m[[0, 1]], C64::new(1.0, 0.5));
    }
}

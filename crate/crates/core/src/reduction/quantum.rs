//! The reduction applied to `dρ/dt = κ𝔏_L(ρ) + ε𝔏_a(ρ)`.
//!
//! Slow coordinates are the components along the four normalized slow-basis
//! operators of the cat subspace; fast coordinates span their orthogonal
//! complement among Hermitian operators. The complement is built from four
//! Householder reflections. Each slow operator lives in a single
//! parity/real-imaginary sector of the vectorized generator, so the
//! reflections do not mix sectors and the transformed matrices stay block
//! diagonal, which keeps the spectral computations cheap.

use ndarray::{s, Array1, Array2};
use num_complex::Complex64 as C64;
use serde::Serialize;

use super::vectorize::{vectorize_generator, HermitianCoords};
use super::{conserved_functionals, reduce_direct, reduce_dual, BlockSystem, HURWITZ_MARGIN};
use crate::cat_qubit::{slow_basis, CatBasis, SlowGenerator};
use crate::error::{Error, Result};
use crate::fock::{annihilation, identity_op, parity_op, FockOperator, FockSpace};
use crate::lindblad::{cat_model, Jump, LindbladModel};
use crate::linalg;

/// Orthogonal change of coordinates `y = Fx` whose first `m` components are
/// the projections of `x` on `m` given orthonormal vectors.
#[derive(Debug, Clone)]
pub struct Frame {
    dim: usize,
    /// `(v, 2/vᵀv)` for each reflection, applied in order.
    reflections: Vec<(Array1<f64>, f64)>,
    /// `order[a]` is the reflected coordinate that becomes coordinate `a`.
    order: Vec<usize>,
    signs: Vec<f64>,
}

impl Frame {
    pub const ORTHONORMAL_TOL: f64 = 1e-10;

    pub fn new(slow: &[Array1<f64>]) -> Result<Self> {
        let m = slow.len();
        let dim = slow.first().map_or(0, |v| v.len());
        if m == 0 || m >= dim {
            return Err(Error::InvalidInput(format!(
                "need 0 < m < dim slow vectors, got {m} of length {dim}"
            )));
        }
        for (a, u) in slow.iter().enumerate() {
            if u.len() != dim {
                return Err(Error::InvalidInput("slow vectors differ in length".into()));
            }
            for (b, v) in slow.iter().enumerate() {
                let want = if a == b { 1.0 } else { 0.0 };
                if (u.dot(v) - want).abs() > Self::ORTHONORMAL_TOL {
                    return Err(Error::InvalidInput("slow vectors are not orthonormal".into()));
                }
            }
        }

        let mut pending: Vec<Array1<f64>> = slow.to_vec();
        let mut reflections = Vec::with_capacity(m);
        let mut pivots: Vec<usize> = Vec::with_capacity(m);
        let mut pivot_signs = Vec::with_capacity(m);
        for k in 0..m {
            let mut u = pending[k].clone();
            for &p in &pivots {
                u[p] = 0.0;
            }
            let j = (0..dim)
                .filter(|i| !pivots.contains(i))
                .max_by(|&a, &b| u[a].abs().total_cmp(&u[b].abs()))
                .expect("dim > m");
            let sigma = if u[j] >= 0.0 { 1.0 } else { -1.0 };
            // H u = −σ e_j for v = u + σ e_j
            let mut v = u;
            v[j] += sigma;
            let beta = 2.0 / v.dot(&v);
            for w in pending.iter_mut().skip(k + 1) {
                let c = beta * v.dot(w);
                w.scaled_add(-c, &v);
            }
            reflections.push((v, beta));
            pivots.push(j);
            pivot_signs.push(-sigma);
        }

        let mut order = pivots.clone();
        order.extend((0..dim).filter(|i| !pivots.contains(i)));
        let mut signs = vec![1.0; dim];
        signs[..m].copy_from_slice(&pivot_signs);
        Ok(Self {
            dim,
            reflections,
            order,
            signs,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn m(&self) -> usize {
        self.reflections.len()
    }

    pub fn to_frame(&self, x: &Array1<f64>) -> Array1<f64> {
        let mut y = x.clone();
        for (v, beta) in &self.reflections {
            let c = beta * v.dot(&y);
            y.scaled_add(-c, v);
        }
        Array1::from_shape_fn(self.dim, |a| self.signs[a] * y[self.order[a]])
    }

    pub fn from_frame(&self, y: &Array1<f64>) -> Array1<f64> {
        let mut x = Array1::zeros(self.dim);
        for a in 0..self.dim {
            x[self.order[a]] = self.signs[a] * y[a];
        }
        for (v, beta) in self.reflections.iter().rev() {
            let c = beta * v.dot(&x);
            x.scaled_add(-c, v);
        }
        x
    }

    /// `F M Fᵀ`.
    pub fn transform_matrix(&self, m: &Array2<f64>) -> Array2<f64> {
        let mut w = m.clone();
        for (v, beta) in &self.reflections {
            // left: w ← w − β v (vᵀw)
            let row = v.dot(&w);
            for (i, &vi) in v.iter().enumerate() {
                if vi != 0.0 {
                    w.row_mut(i).scaled_add(-beta * vi, &row);
                }
            }
            // right: w ← w − β (w v) vᵀ
            let col = w.dot(v);
            for (j, &vj) in v.iter().enumerate() {
                if vj != 0.0 {
                    w.column_mut(j).scaled_add(-beta * vj, &col);
                }
            }
        }
        Array2::from_shape_fn((self.dim, self.dim), |(a, b)| {
            self.signs[a] * self.signs[b] * w[[self.order[a], self.order[b]]]
        })
    }
}

/// The quantum system written as a [`BlockSystem`] in a slow/fast frame.
#[derive(Debug, Clone)]
pub struct QuantumBlockSystem {
    pub system: BlockSystem,
    pub frame: Frame,
    pub coords: HermitianCoords,
    pub basis: CatBasis,
    pub kappa: f64,
    /// Vectorized `κ𝔏_L` in frame coordinates, slow columns included.
    pub nominal: Array2<f64>,
    /// Frobenius norm of the slow columns of `nominal`; zero when the cat
    /// subspace is exactly stationary.
    pub slow_column_residual: f64,
    /// `−max Re λ(A₂)`.
    pub spectral_gap: f64,
}

fn jump_only(space: FockSpace, op: FockOperator) -> Result<LindbladModel> {
    LindbladModel::new(space, FockOperator::zeros(space), vec![Jump { rate: 1.0, op }])
}

pub fn quantum_block_system(space: FockSpace, alpha: f64, kappa: f64, epsilon: f64) -> Result<QuantumBlockSystem> {
    let basis = CatBasis::new(space, alpha)?;
    let nominal_model = cat_model(space, alpha, kappa, 0.0)?;
    let loss = jump_only(space, annihilation(space))?;
    let a_vec = vectorize_generator(space, |x| nominal_model.apply(x));
    let b_vec = vectorize_generator(space, |x| loss.apply(x));

    let coords = HermitianCoords::new(space.n_max());
    let slow: Vec<Array1<f64>> = slow_basis(&basis)
        .iter()
        .map(|op| coords.to_coords(op.matrix()))
        .collect();
    let frame = Frame::new(&slow)?;
    let a = frame.transform_matrix(a_vec.matrix());
    let b = frame.transform_matrix(b_vec.matrix());
    let m = slow.len();

    let slow_column_residual = linalg::frobenius_real(&a.slice(s![.., ..m]).to_owned());
    let system = BlockSystem::unchecked(
        a.slice(s![..m, m..]).to_owned(),
        a.slice(s![m.., m..]).to_owned(),
        b.slice(s![..m, ..m]).to_owned(),
        b.slice(s![..m, m..]).to_owned(),
        b.slice(s![m.., m..]).to_owned(),
        b.slice(s![m.., ..m]).to_owned(),
        epsilon,
    )?;
    let spectral_gap = system.spectral_gap()?;
    if !(spectral_gap > HURWITZ_MARGIN) {
        return Err(Error::NotHurwitz(-spectral_gap));
    }
    Ok(QuantumBlockSystem {
        system,
        frame,
        coords,
        basis,
        kappa,
        nominal: a,
        slow_column_residual,
        spectral_gap,
    })
}

impl QuantumBlockSystem {
    /// Frame coordinates of a Hermitian operator.
    pub fn to_frame(&self, x: &Array2<C64>) -> Array1<f64> {
        self.frame.to_frame(&self.coords.to_coords(x))
    }

    pub fn from_frame(&self, y: &Array1<f64>) -> Array2<C64> {
        self.coords.from_coords(&self.frame.from_frame(y))
    }

    /// The cat-qubit slow generator `εα²𝔏_X` in slow coordinates.
    pub fn expected_generator(&self) -> Result<Array2<f64>> {
        let g = SlowGenerator::new(self.basis.alpha(), self.system.epsilon)?;
        let ops = slow_basis(&self.basis);
        let m = ops.len();
        let mut out = Array2::zeros((m, m));
        for (k, sk) in ops.iter().enumerate() {
            let q = self.basis.compress_matrix(sk.matrix());
            let image = self.basis.embed_matrix(&g.apply(&q));
            for (j, sj) in ops.iter().enumerate() {
                out[[j, k]] = linalg::trace(&sj.matrix().dot(&image)).re;
            }
        }
        Ok(out)
    }
}

/// Diagnostics of the quantum reduction.
#[derive(Debug, Clone, Serialize)]
pub struct QuantumReduction {
    pub n_max: usize,
    pub alpha: f64,
    pub kappa: f64,
    pub epsilon: f64,
    pub kernel_dim: usize,
    /// Five smallest singular values of the vectorized nominal generator.
    pub smallest_singular_values: Vec<f64>,
    pub gap_ratio: f64,
    pub gram_determinant: f64,
    pub p1_condition: f64,
    #[serde(with = "super::as_rows")]
    pub q_dual: Array2<f64>,
    #[serde(with = "super::as_rows")]
    pub q_direct: Array2<f64>,
    pub q_dual_norm: f64,
    pub q_direct_norm: f64,
    #[serde(with = "super::as_rows")]
    pub generator: Array2<f64>,
    #[serde(with = "super::as_rows")]
    pub expected_generator: Array2<f64>,
    /// `‖ε(B₀+Q) − εα²𝔏_X‖_F` with the dual `Q`.
    pub generator_error: f64,
    /// `‖B₀ − α²𝔏_X‖_F`.
    pub b0_error: f64,
    /// `max_k ‖[P_c, ξ_k]‖_F` over the unit-norm kernel elements.
    pub commutator_max: f64,
    /// Distance of the normalized identity and parity from the kernel span.
    pub identity_residual: f64,
    pub parity_residual: f64,
    pub spectral_gap: f64,
    pub slow_column_residual: f64,
    pub fast_condition: f64,
    /// Kernel elements as operators (unit Frobenius norm), for drift checks.
    #[serde(skip)]
    pub invariants: Vec<Array2<C64>>,
}

pub fn reduce_quantum(q: &QuantumBlockSystem) -> Result<QuantumReduction> {
    let sys = &q.system;
    let m = sys.m();
    let set = conserved_functionals(&q.nominal, m)?;
    let dual = reduce_dual(sys, &set)?;
    let direct = reduce_direct(sys)?;
    let expected = q.expected_generator()?;

    let pc = q.basis.projector();
    let invariants: Vec<Array2<C64>> = set
        .functionals
        .iter()
        .map(|f| q.from_frame(&f.concat()))
        .collect();
    let commutator_max = invariants
        .iter()
        .map(|xi| linalg::frobenius(&linalg::commutator(pc.matrix(), xi)))
        .fold(0.0, f64::max);

    let span_residual = |op: &FockOperator| {
        let v = q.to_frame(op.matrix());
        let v = &v / v.dot(&v).sqrt();
        let mut r = v.clone();
        for f in &set.functionals {
            let p = f.concat();
            r.scaled_add(-p.dot(&v), &p);
        }
        r.dot(&r).sqrt()
    };
    let space = q.basis.space();
    let alpha = q.basis.alpha();
    let eps = sys.epsilon;

    Ok(QuantumReduction {
        n_max: space.n_max(),
        alpha,
        kappa: q.kappa,
        epsilon: eps,
        kernel_dim: set.kernel_dim,
        smallest_singular_values: set.singular_values.iter().take(m + 1).copied().collect(),
        gap_ratio: set.gap_ratio,
        gram_determinant: set.gram_determinant()?,
        p1_condition: linalg::condition_number(&set.p1_matrix())?,
        q_dual_norm: linalg::frobenius_real(&dual.q),
        q_direct_norm: linalg::frobenius_real(&direct.q),
        generator_error: linalg::frobenius_real(&(&dual.generator - &expected)),
        b0_error: linalg::frobenius_real(&(&sys.b0 - &(&expected / eps))),
        q_dual: dual.q,
        q_direct: direct.q,
        generator: dual.generator,
        expected_generator: expected,
        commutator_max,
        identity_residual: span_residual(&identity_op(space)),
        parity_residual: span_residual(&parity_op(space)),
        spectral_gap: q.spectral_gap,
        slow_column_residual: q.slow_column_residual,
        fast_condition: sys.fast_condition()?,
        invariants,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::rng;
    use rand::Rng;

    #[test]
    fn frame_is_orthogonal_and_exposes_slow_coordinates() {
        let mut r = rng(1);
        let dim = 9;
        // two orthonormal vectors on disjoint supports plus a generic one
        let mut u = Array1::zeros(dim);
        u[0] = 0.6;
        u[3] = 0.8;
        let mut v = Array1::zeros(dim);
        v[1] = -1.0 / 2f64.sqrt();
        v[5] = 1.0 / 2f64.sqrt();
        let frame = Frame::new(&[u.clone(), v.clone()]).unwrap();
        for _ in 0..5 {
            let x = Array1::from_shape_fn(dim, |_| r.random::<f64>() - 0.5);
            let y = frame.to_frame(&x);
            assert!((y[0] - u.dot(&x)).abs() < 1e-14);
            assert!((y[1] - v.dot(&x)).abs() < 1e-14);
            assert!((y.dot(&y) - x.dot(&x)).abs() < 1e-14);
            let back = frame.from_frame(&y);
            assert!((&back - &x).iter().all(|d| d.abs() < 1e-14));
        }
        let m = Array2::from_shape_fn((dim, dim), |(i, j)| (i * dim + j) as f64);
        let t = frame.transform_matrix(&m);
        let x = Array1::from_shape_fn(dim, |k| (k as f64).cos());
        let lhs = t.dot(&frame.to_frame(&x));
        let rhs = frame.to_frame(&m.dot(&x));
        assert!((&lhs - &rhs).iter().all(|d| d.abs() < 1e-11));
    }

    #[test]
    fn frame_rejects_non_orthonormal() {
        let u = Array1::from_vec(vec![1.0, 0.0, 0.0]);
        let v = Array1::from_vec(vec![1.0, 1.0, 0.0]);
        assert!(Frame::new(&[u, v]).is_err());
    }

    #[test]
    fn small_truncation_reduction() {
        // cat amplitudes at the truncation edge are ~1/√20! ≈ 6e-10
        let space = FockSpace::new(20).unwrap();
        let q = quantum_block_system(space, 1.0, 1.0, 0.01).unwrap();
        assert_eq!(q.system.m(), 4);
        assert_eq!(q.system.n(), 20 * 20 - 4);
        let red = reduce_quantum(&q).unwrap();
        assert_eq!(red.kernel_dim, 4);
        assert!(red.b0_error < 1e-9, "{}", red.b0_error);
        assert!(red.q_dual_norm < 1e-6, "{}", red.q_dual_norm);
        assert!(red.generator_error < 1e-7);
        assert!(red.commutator_max < 1e-7);
        assert!(red.identity_residual < 1e-7 && red.parity_residual < 1e-7);
    }
}

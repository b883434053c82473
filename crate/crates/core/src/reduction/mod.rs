//! Slow/fast reduction of linear systems
//!
//! ```text
//! dx₁/dt = A₁x₂ + ε(B₁x₂ + B₀x₁)
//! dx₂/dt = A₂x₂ + ε(B₂x₂ + B₃x₁)
//! ```
//!
//! with `A₂` Hurwitz. To first order in `ε` the slow variable follows
//! `dx₁/dt = ε(B₀ + Q)x₁` with `Q = −A₁A₂⁻¹B₃`. `Q` is obtained either by
//! inverting `A₂` ([`reduce_direct`]) or from `m` conserved functionals of the
//! nominal dynamics ([`reduce_dual`]).

mod io;
pub mod quantum;
pub mod vectorize;

pub use io::{read_block_system, write_block_system};
pub use quantum::{quantum_block_system, reduce_quantum, Frame, QuantumBlockSystem, QuantumReduction};
pub use vectorize::{vectorize_generator, HermitianCoords, VectorizedLiouvillian};

use ndarray::{concatenate, s, Array1, Array2, Axis};
use ndarray_linalg::{Factorize, ReciprocalConditionNum, Solve};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;

/// `A₂` must satisfy `max Re λ < −HURWITZ_MARGIN`.
pub const HURWITZ_MARGIN: f64 = 1e-9;
/// `reduce_direct` refuses fast blocks with a larger condition number.
pub const MAX_FAST_CONDITION: f64 = 1e12;
/// `reduce_dual` refuses functional sets whose `P₁` exceeds this condition number.
pub const MAX_FUNCTIONAL_CONDITION: f64 = 1e10;
/// Relative singular-value threshold for the numerical left kernel.
pub const KERNEL_REL_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSystem {
    pub a1: Array2<f64>,
    pub a2: Array2<f64>,
    pub b0: Array2<f64>,
    pub b1: Array2<f64>,
    pub b2: Array2<f64>,
    pub b3: Array2<f64>,
    pub epsilon: f64,
}

fn check_shape(name: &str, m: &Array2<f64>, rows: usize, cols: usize) -> Result<()> {
    if m.dim() != (rows, cols) {
        return Err(Error::InvalidInput(format!(
            "{name} is {}x{}, expected {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!("{name} has non-finite entries")));
    }
    Ok(())
}

impl BlockSystem {
    /// Validates shapes and checks that `A₂` is Hurwitz.
    pub fn new(
        a1: Array2<f64>,
        a2: Array2<f64>,
        b0: Array2<f64>,
        b1: Array2<f64>,
        b2: Array2<f64>,
        b3: Array2<f64>,
        epsilon: f64,
    ) -> Result<Self> {
        let sys = Self::unchecked(a1, a2, b0, b1, b2, b3, epsilon)?;
        let abscissa = linalg::spectral_abscissa(&sys.a2)?;
        if !(abscissa < -HURWITZ_MARGIN) {
            return Err(Error::NotHurwitz(abscissa));
        }
        Ok(sys)
    }

    /// Shape and finiteness checks only; used when the spectrum of `A₂` has
    /// already been established by other means.
    pub(crate) fn unchecked(
        a1: Array2<f64>,
        a2: Array2<f64>,
        b0: Array2<f64>,
        b1: Array2<f64>,
        b2: Array2<f64>,
        b3: Array2<f64>,
        epsilon: f64,
    ) -> Result<Self> {
        let (m, n) = a1.dim();
        if m == 0 || n == 0 {
            return Err(Error::InvalidInput("empty slow or fast block".into()));
        }
        check_shape("A1", &a1, m, n)?;
        check_shape("A2", &a2, n, n)?;
        check_shape("B0", &b0, m, m)?;
        check_shape("B1", &b1, m, n)?;
        check_shape("B2", &b2, n, n)?;
        check_shape("B3", &b3, n, m)?;
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidInput(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(Self {
            a1,
            a2,
            b0,
            b1,
            b2,
            b3,
            epsilon,
        })
    }

    pub fn m(&self) -> usize {
        self.a1.nrows()
    }

    pub fn n(&self) -> usize {
        self.a1.ncols()
    }

    /// `[[0, A₁], [0, A₂]]`.
    pub fn nominal(&self) -> Array2<f64> {
        let (m, n) = (self.m(), self.n());
        let mut a = Array2::zeros((m + n, m + n));
        a.slice_mut(s![..m, m..]).assign(&self.a1);
        a.slice_mut(s![m.., m..]).assign(&self.a2);
        a
    }

    /// `[[B₀, B₁], [B₃, B₂]]`.
    pub fn perturbation(&self) -> Array2<f64> {
        let top = concatenate![Axis(1), self.b0, self.b1];
        let bottom = concatenate![Axis(1), self.b3, self.b2];
        concatenate![Axis(0), top, bottom]
    }

    /// Full generator `A + εB`.
    pub fn full_matrix(&self) -> Array2<f64> {
        self.nominal() + self.perturbation() * self.epsilon
    }

    /// `1 / rcond₁(A₂)` from an LU factorisation.
    pub fn fast_condition(&self) -> Result<f64> {
        let rcond = self.a2.factorize()?.rcond()?;
        Ok(if rcond > 0.0 { 1.0 / rcond } else { f64::INFINITY })
    }

    /// `−max Re λ(A₂)`.
    pub fn spectral_gap(&self) -> Result<f64> {
        Ok(-linalg::spectral_abscissa(&self.a2)?)
    }

    /// `A₁A₂⁻¹` as `(A₂⁻ᵀA₁ᵀ)ᵀ`.
    fn coupling(&self) -> Result<Array2<f64>> {
        let lu = self.a2.t().to_owned().factorize()?;
        let mut out = Array2::zeros((self.m(), self.n()));
        for (k, row) in self.a1.outer_iter().enumerate() {
            out.row_mut(k).assign(&lu.solve(&row.to_owned())?);
        }
        Ok(out)
    }
}

/// Serializes matrices as arrays of rows and vectors as plain arrays.
pub(crate) mod as_rows {
    use ndarray::{Array1, Array2};
    use serde::Serializer;

    pub fn serialize<S: Serializer>(m: &Array2<f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(m.rows().into_iter().map(|r| r.to_vec()))
    }

    pub fn vector<S: Serializer>(v: &Array1<f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter())
    }
}

/// Reduced model `dx₁/dt = ε(B₀ + Q)x₁`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlowModel {
    #[serde(with = "as_rows")]
    pub q: Array2<f64>,
    #[serde(with = "as_rows")]
    pub generator: Array2<f64>,
    pub epsilon: f64,
}

impl SlowModel {
    fn new(sys: &BlockSystem, q: Array2<f64>) -> Self {
        let generator = (&sys.b0 + &q) * sys.epsilon;
        Self {
            q,
            generator,
            epsilon: sys.epsilon,
        }
    }
}

/// `Q = −A₁A₂⁻¹B₃`.
pub fn reduce_direct(sys: &BlockSystem) -> Result<SlowModel> {
    let cond = sys.fast_condition()?;
    if cond > MAX_FAST_CONDITION {
        return Err(Error::SingularFastBlock(cond));
    }
    let lu = sys.a2.factorize()?;
    let mut z = Array2::zeros((sys.n(), sys.m()));
    for (k, col) in sys.b3.columns().into_iter().enumerate() {
        z.column_mut(k).assign(&lu.solve(&col.to_owned())?);
    }
    let q = -sys.a1.dot(&z);
    Ok(SlowModel::new(sys, q))
}

/// Linear functional `p = (p₁, p₂)` with `pᵀA = 0` for the nominal `A`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConservedFunctional {
    #[serde(serialize_with = "as_rows::vector")]
    pub p1: Array1<f64>,
    #[serde(serialize_with = "as_rows::vector")]
    pub p2: Array1<f64>,
}

impl ConservedFunctional {
    pub fn concat(&self) -> Array1<f64> {
        concatenate![Axis(0), self.p1, self.p2]
    }

    /// `‖p₁ᵀA₁ + p₂ᵀA₂‖`.
    pub fn residual(&self, sys: &BlockSystem) -> f64 {
        let r = self.p1.dot(&sys.a1) + self.p2.dot(&sys.a2);
        r.dot(&r).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct FunctionalSet {
    pub functionals: Vec<ConservedFunctional>,
    /// All singular values of the nominal matrix, ascending.
    pub singular_values: Vec<f64>,
    pub kernel_dim: usize,
    pub gap_ratio: f64,
}

impl FunctionalSet {
    /// `P₁` with one functional per row.
    pub fn p1_matrix(&self) -> Array2<f64> {
        stack_rows(self.functionals.iter().map(|f| &f.p1))
    }

    pub fn p2_matrix(&self) -> Array2<f64> {
        stack_rows(self.functionals.iter().map(|f| &f.p2))
    }

    /// Determinant of the Gram matrix of the full functionals.
    pub fn gram_determinant(&self) -> Result<f64> {
        use ndarray_linalg::Determinant;
        let p = stack_rows(self.functionals.iter().map(|f| f.concat()).collect::<Vec<_>>().iter());
        Ok(p.dot(&p.t()).det()?)
    }
}

fn stack_rows<'a>(rows: impl Iterator<Item = &'a Array1<f64>>) -> Array2<f64> {
    let rows: Vec<&Array1<f64>> = rows.collect();
    let width = rows.first().map_or(0, |r| r.len());
    let mut out = Array2::zeros((rows.len(), width));
    for (k, r) in rows.iter().enumerate() {
        out.row_mut(k).assign(r);
    }
    out
}

/// `m` orthonormal left-kernel vectors of a `(m+n) x (m+n)` nominal
/// generator, split as `(p₁, p₂)`. The numerical kernel, counted at
/// [`KERNEL_REL_TOL`] relative to the largest singular value, must have
/// dimension exactly `m`.
pub fn conserved_functionals(nominal: &Array2<f64>, m: usize) -> Result<FunctionalSet> {
    let kernel = linalg::left_kernel(nominal, m, KERNEL_REL_TOL)?;
    if kernel.numerical_dim != m {
        return Err(Error::KernelDimensionMismatch {
            expected: m,
            found: kernel.numerical_dim,
        });
    }
    let functionals = kernel
        .basis
        .columns()
        .into_iter()
        .map(|p| ConservedFunctional {
            p1: p.slice(s![..m]).to_owned(),
            p2: p.slice(s![m..]).to_owned(),
        })
        .collect();
    Ok(FunctionalSet {
        functionals,
        gap_ratio: kernel.gap_ratio(m),
        kernel_dim: kernel.numerical_dim,
        singular_values: kernel.singular_values,
    })
}

/// Solves `P₁Q = P₂B₃` for `Q`.
pub fn reduce_dual(sys: &BlockSystem, set: &FunctionalSet) -> Result<SlowModel> {
    let m = sys.m();
    if set.functionals.len() != m {
        return Err(Error::KernelDimensionMismatch {
            expected: m,
            found: set.functionals.len(),
        });
    }
    let p1 = set.p1_matrix();
    let p2 = set.p2_matrix();
    if p1.dim() != (m, m) || p2.ncols() != sys.n() {
        return Err(Error::InvalidInput(
            "functional dimensions do not match the block system".into(),
        ));
    }
    let cond = linalg::condition_number(&p1)?;
    if cond > MAX_FUNCTIONAL_CONDITION {
        return Err(Error::IllConditionedFunctionals(cond));
    }
    let rhs = p2.dot(&sys.b3);
    let lu = p1.factorize()?;
    let mut q = Array2::zeros((m, m));
    for (k, col) in rhs.columns().into_iter().enumerate() {
        q.column_mut(k).assign(&lu.solve(&col.to_owned())?);
    }
    Ok(SlowModel::new(sys, q))
}

/// Blocks of the system in the variables `x̃₁ = x₁ − A₁A₂⁻¹x₂`, `x̃₂ = x₂`:
///
/// ```text
/// dx̃₁/dt = ε(slow_slow x̃₁ + slow_fast x̃₂)
/// dx̃₂/dt = A₂x̃₂ + ε(fast_slow x̃₁ + fast_fast x̃₂)
/// ```
#[derive(Debug, Clone)]
pub struct TikhonovForm {
    /// `A₁A₂⁻¹`.
    pub coupling: Array2<f64>,
    /// `B₀ − A₁A₂⁻¹B₃`.
    pub slow_slow: Array2<f64>,
    /// `B₁ + (B₀ − A₁A₂⁻¹B₃)A₁A₂⁻¹ − A₁A₂⁻¹B₂`.
    pub slow_fast: Array2<f64>,
    /// `B₃`.
    pub fast_slow: Array2<f64>,
    /// `B₂ + B₃A₁A₂⁻¹`.
    pub fast_fast: Array2<f64>,
}

impl TikhonovForm {
    pub fn new(sys: &BlockSystem) -> Result<Self> {
        let m_c = sys.coupling()?;
        let slow_slow = &sys.b0 - &m_c.dot(&sys.b3);
        let slow_fast = &sys.b1 + &slow_slow.dot(&m_c) - m_c.dot(&sys.b2);
        let fast_ff = &sys.b2 + &sys.b3.dot(&m_c);
        Ok(Self {
            slow_slow,
            slow_fast,
            fast_slow: sys.b3.clone(),
            fast_fast: fast_ff,
            coupling: m_c,
        })
    }

    /// `(x₁, x₂) ↦ (x̃₁, x̃₂)`.
    pub fn transform(&self, x: &Array1<f64>) -> Array1<f64> {
        let m = self.coupling.nrows();
        let mut out = x.clone();
        let shift = self.coupling.dot(&x.slice(s![m..]));
        out.slice_mut(s![..m]).zip_mut_with(&shift, |a, b| *a -= b);
        out
    }

    /// Generator of the transformed system for the given `A₂` and `ε`.
    pub fn matrix(&self, a2: &Array2<f64>, epsilon: f64) -> Array2<f64> {
        let top = concatenate![Axis(1), self.slow_slow, self.slow_fast] * epsilon;
        let bottom = concatenate![Axis(1), &self.fast_slow * epsilon, a2 + &(&self.fast_fast * epsilon)];
        concatenate![Axis(0), top, bottom]
    }
}

/// Classical RK4 for `dx/dt = Mx`, recording `x` every `stride` steps and at
/// the end.
pub fn integrate_linear(
    m: &Array2<f64>,
    x0: &Array1<f64>,
    dt: f64,
    t_final: f64,
    stride: usize,
) -> Result<Vec<(f64, Array1<f64>)>> {
    if !(dt > 0.0 && t_final > 0.0) || stride == 0 {
        return Err(Error::InvalidConfig(format!(
            "dt = {dt}, t_final = {t_final}, stride = {stride}"
        )));
    }
    let n_steps = (t_final / dt).round().max(1.0) as usize;
    let mut x = x0.clone();
    let mut out = vec![(0.0, x.clone())];
    for step in 1..=n_steps {
        let k1 = m.dot(&x);
        let k2 = m.dot(&(&x + &(&k1 * (0.5 * dt))));
        let k3 = m.dot(&(&x + &(&k2 * (0.5 * dt))));
        let k4 = m.dot(&(&x + &(&k3 * dt)));
        x = &x + &((k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0));
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                t: step as f64 * dt,
                step,
            });
        }
        if step % stride == 0 || step == n_steps {
            out.push((step as f64 * dt, x.clone()));
        }
    }
    Ok(out)
}

fn gaussian<R: Rng>(rows: usize, cols: usize, scale: f64, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || scale * rng.sample::<f64, _>(StandardNormal))
}

/// Random system with O(1) blocks and `A₂ = −1.5 I + G/(2√n)`, whose spectrum
/// lies near the disc of radius ½ around −1.5.
pub fn random_block_system<R: Rng>(m: usize, n: usize, epsilon: f64, rng: &mut R) -> Result<BlockSystem> {
    let sm = 1.0 / (m as f64).sqrt();
    let sn = 1.0 / (n as f64).sqrt();
    let a1 = gaussian(m, n, sn, rng);
    let a2 = gaussian(n, n, 0.5 * sn, rng) - Array2::<f64>::eye(n) * 1.5;
    let b0 = gaussian(m, m, sm, rng);
    let b1 = gaussian(m, n, sn, rng);
    let b2 = gaussian(n, n, sn, rng);
    let b3 = gaussian(n, m, sm, rng);
    BlockSystem::new(a1, a2, b0, b1, b2, b3, epsilon)
}

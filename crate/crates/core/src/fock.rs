//! States and operators of the harmonic oscillator truncated to the first
//! `n_max` Fock levels `|0⟩, …, |n_max−1⟩`.

use std::fmt;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg;

/// Truncation used by the reproduction runs.
pub const DEFAULT_N_MAX: usize = 40;

/// Tail mass above which coherent-state construction fails.
pub const TAIL_ERROR: f64 = 1e-6;
/// Tail mass above which coherent-state construction logs a warning.
pub const TAIL_WARN: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FockSpace {
    n_max: usize,
}

impl FockSpace {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 2 {
            return Err(Error::InvalidSpace(n_max));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.n_max
    }

    fn check(&self, rows: usize, cols: usize) -> Result<()> {
        if rows != self.n_max || cols != self.n_max {
            return Err(Error::ShapeMismatch {
                expected: self.n_max,
                rows,
                cols,
            });
        }
        Ok(())
    }
}

impl Default for FockSpace {
    fn default() -> Self {
        Self {
            n_max: DEFAULT_N_MAX,
        }
    }
}

/// Dense operator on a truncated Fock space.
#[derive(Clone, PartialEq)]
pub struct FockOperator {
    space: FockSpace,
    mat: Array2<C64>,
}

impl fmt::Debug for FockOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FockOperator")
            .field("n_max", &self.space.n_max)
            .finish_non_exhaustive()
    }
}

impl FockOperator {
    pub fn new(space: FockSpace, mat: Array2<C64>) -> Result<Self> {
        space.check(mat.nrows(), mat.ncols())?;
        Ok(Self { space, mat })
    }

    pub(crate) fn from_parts(space: FockSpace, mat: Array2<C64>) -> Self {
        debug_assert_eq!(mat.dim(), (space.n_max, space.n_max));
        Self { space, mat }
    }

    pub fn zeros(space: FockSpace) -> Self {
        Self::from_parts(space, Array2::zeros((space.n_max, space.n_max)))
    }

    pub fn from_diagonal(space: FockSpace, diag: impl Fn(usize) -> C64) -> Self {
        let n = space.n_max;
        Self::from_parts(
            space,
            Array2::from_shape_fn((n, n), |(i, j)| if i == j { diag(i) } else { C64::new(0.0, 0.0) }),
        )
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.mat
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.mat[[row, col]]
    }

    pub fn dagger(&self) -> Self {
        Self::from_parts(self.space, linalg::dagger(&self.mat))
    }

    /// Matrix product `self · other`. Panics if the spaces differ.
    pub fn dot(&self, other: &Self) -> Self {
        assert_eq!(self.space, other.space, "operators on different spaces");
        Self::from_parts(self.space, self.mat.dot(&other.mat))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.space, other.space, "operators on different spaces");
        Self::from_parts(self.space, &self.mat + &other.mat)
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.space, other.space, "operators on different spaces");
        Self::from_parts(self.space, &self.mat - &other.mat)
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::from_parts(self.space, self.mat.mapv(|z| z * c))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.dot(other).sub(&other.dot(self))
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.mat)
    }

    pub fn frobenius_norm(&self) -> f64 {
        linalg::frobenius(&self.mat)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        linalg::hermiticity_defect(&self.mat) <= tol
    }

    pub fn apply(&self, ket: &Ket) -> Ket {
        assert_eq!(self.space, ket.space, "operator and ket on different spaces");
        Ket {
            space: self.space,
            amps: self.mat.dot(&ket.amps),
        }
    }

    /// Frobenius norm of the leading `size x size` block.
    pub fn block_norm(&self, size: usize) -> f64 {
        let size = size.min(self.space.n_max);
        let mut acc = 0.0;
        for i in 0..size {
            for j in 0..size {
                acc += self.mat[[i, j]].norm_sqr();
            }
        }
        acc.sqrt()
    }
}

/// Pure state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    space: FockSpace,
    amps: Array1<C64>,
}

impl Ket {
    pub fn new(space: FockSpace, amps: Array1<C64>) -> Result<Self> {
        if amps.len() != space.n_max {
            return Err(Error::ShapeMismatch {
                expected: space.n_max,
                rows: amps.len(),
                cols: 1,
            });
        }
        Ok(Self { space, amps })
    }

    /// Fock basis state `|n⟩`.
    pub fn basis(space: FockSpace, n: usize) -> Result<Self> {
        if n >= space.n_max {
            return Err(Error::InvalidState(format!(
                "Fock level {n} is outside the truncation n_max = {}",
                space.n_max
            )));
        }
        let mut amps = Array1::zeros(space.n_max);
        amps[n] = C64::new(1.0, 0.0);
        Ok(Self { space, amps })
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn amplitudes(&self) -> &Array1<C64> {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Ok(Self {
            space: self.space,
            amps: self.amps.mapv(|z| z / norm),
        })
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Ket) -> C64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn add(&self, other: &Ket) -> Ket {
        Ket {
            space: self.space,
            amps: &self.amps + &other.amps,
        }
    }

    pub fn scale(&self, c: C64) -> Ket {
        Ket {
            space: self.space,
            amps: self.amps.mapv(|z| z * c),
        }
    }

    /// `|self⟩⟨other|`
    pub fn outer(&self, other: &Ket) -> FockOperator {
        let n = self.space.n_max;
        FockOperator::from_parts(
            self.space,
            Array2::from_shape_fn((n, n), |(i, j)| self.amps[i] * other.amps[j].conj()),
        )
    }

    pub fn projector(&self) -> FockOperator {
        self.outer(self)
    }

    /// `|ψ⟩⟨ψ|` for the normalized ket.
    pub fn density(&self) -> Result<DensityMatrix> {
        let unit = self.normalized()?;
        let mut mat = unit.projector().mat;
        linalg::hermitize(&mut mat);
        Ok(DensityMatrix {
            space: self.space,
            mat,
        })
    }
}

/// Hermitian, positive-semidefinite, unit-trace operator.
#[derive(Clone, PartialEq)]
pub struct DensityMatrix {
    space: FockSpace,
    mat: Array2<C64>,
}

impl fmt::Debug for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityMatrix")
            .field("n_max", &self.space.n_max)
            .field("trace", &self.trace())
            .finish_non_exhaustive()
    }
}

impl DensityMatrix {
    pub const HERMITIAN_TOL: f64 = 1e-12;
    pub const TRACE_TOL: f64 = 1e-10;
    pub const PSD_TOL: f64 = 1e-9;

    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(space: FockSpace, mat: Array2<C64>) -> Result<Self> {
        space.check(mat.nrows(), mat.ncols())?;
        let defect = linalg::hermiticity_defect(&mat);
        if defect > Self::HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (defect {defect:.3e})"
            )));
        }
        let tr = linalg::trace(&mat);
        if (tr.re - 1.0).abs() > Self::TRACE_TOL || tr.im.abs() > Self::TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min_eig = linalg::eigvalsh(&mat)?[0];
        if min_eig < -Self::PSD_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        let mut mat = mat;
        linalg::hermitize(&mut mat);
        Ok(Self { space, mat })
    }

    /// Hermitizes and rescales to unit trace before validating positivity.
    pub fn normalized(space: FockSpace, mut mat: Array2<C64>) -> Result<Self> {
        space.check(mat.nrows(), mat.ncols())?;
        linalg::hermitize(&mut mat);
        let tr = linalg::trace(&mat).re;
        if !(tr > 0.0 && tr.is_finite()) {
            return Err(Error::InvalidState(format!("trace {tr} cannot be normalized")));
        }
        mat.mapv_inplace(|z| z / tr);
        Self::new(space, mat)
    }

    pub(crate) fn from_parts(space: FockSpace, mat: Array2<C64>) -> Self {
        Self { space, mat }
    }

    pub fn fock(space: FockSpace, n: usize) -> Result<Self> {
        Ket::basis(space, n)?.density()
    }

    pub fn vacuum(space: FockSpace) -> Self {
        let mut mat = Array2::zeros((space.n_max, space.n_max));
        mat[[0, 0]] = C64::new(1.0, 0.0);
        Self { space, mat }
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn to_operator(&self) -> FockOperator {
        FockOperator::from_parts(self.space, self.mat.clone())
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.mat).re
    }

    /// `Re tr(ρ O)`
    pub fn expectation(&self, op: &FockOperator) -> f64 {
        assert_eq!(self.space, op.space, "state and operator on different spaces");
        let n = self.space.n_max;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (self.mat[[i, j]] * op.mat[[j, i]]).re;
            }
        }
        acc
    }

    pub fn population(&self, n: usize) -> f64 {
        self.mat[[n, n]].re
    }

    pub fn eigenvalues(&self) -> Result<Array1<f64>> {
        linalg::eigvalsh(&self.mat)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }
}

pub fn annihilation(space: FockSpace) -> FockOperator {
    let n = space.n_max;
    let mut mat = Array2::zeros((n, n));
    for k in 1..n {
        mat[[k - 1, k]] = C64::new((k as f64).sqrt(), 0.0);
    }
    FockOperator::from_parts(space, mat)
}

pub fn creation(space: FockSpace) -> FockOperator {
    annihilation(space).dagger()
}

pub fn number_op(space: FockSpace) -> FockOperator {
    FockOperator::from_diagonal(space, |n| C64::new(n as f64, 0.0))
}

pub fn identity_op(space: FockSpace) -> FockOperator {
    FockOperator::from_diagonal(space, |_| C64::new(1.0, 0.0))
}

/// Photon-number parity `(−1)^{a†a}`.
pub fn parity_op(space: FockSpace) -> FockOperator {
    FockOperator::from_diagonal(space, |n| {
        C64::new(if n % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
    })
}

/// Coherent-state population beyond the truncation, `Σ_{n ≥ n_max} e^{−|α|²} |α|^{2n}/n!`,
/// summed directly so that tiny tails are not lost to cancellation.
pub fn coherent_tail_mass(n_max: usize, alpha_abs: f64) -> f64 {
    let x = alpha_abs * alpha_abs;
    if x == 0.0 {
        return 0.0;
    }
    // log of the first tail term, then the Poisson recursion p_{n+1} = p_n x / (n+1)
    let log_first = -x + (n_max as f64) * x.ln() - ln_factorial(n_max);
    let mut term = log_first.exp();
    let mut sum = 0.0;
    let mut n = n_max;
    loop {
        sum += term;
        n += 1;
        term *= x / n as f64;
        if (n as f64) > x + 10.0 && term <= 1e-18 * sum.max(1e-300) {
            break;
        }
        if n > n_max + 100_000 {
            break;
        }
    }
    sum
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Truncated coherent state `|α⟩`, renormalized inside the truncation.
pub fn coherent_state(space: FockSpace, alpha: C64) -> Result<Ket> {
    let tail = coherent_tail_mass(space.n_max, alpha.norm());
    if tail > TAIL_ERROR {
        return Err(Error::Truncation {
            alpha: alpha.norm(),
            n_max: space.n_max,
            tail,
        });
    }
    if tail > TAIL_WARN {
        log::warn!(
            "coherent state |alpha| = {} loses {tail:.3e} of its mass at n_max = {}",
            alpha.norm(),
            space.n_max
        );
    }
    let mut amps = Array1::zeros(space.n_max);
    amps[0] = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 1..space.n_max {
        amps[n] = amps[n - 1] * alpha / (n as f64).sqrt();
    }
    Ket { space, amps }.normalized()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatSign {
    Plus,
    Minus,
}

/// Normalization factors `γ± = √(2(1 ± e^{−2α²}))`.
pub fn cat_norms(alpha: f64) -> (f64, f64) {
    let overlap = (-2.0 * alpha * alpha).exp();
    ((2.0 * (1.0 + overlap)).sqrt(), (2.0 * (1.0 - overlap)).sqrt())
}

/// Even (`Plus`) or odd (`Minus`) cat state `(|α⟩ ± |−α⟩)/γ±`.
pub fn cat_state(space: FockSpace, alpha: f64, sign: CatSign) -> Result<Ket> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::DegenerateAmplitude(alpha));
    }
    let plus = coherent_state(space, C64::new(alpha, 0.0))?;
    let minus = coherent_state(space, C64::new(-alpha, 0.0))?;
    let combined = match sign {
        CatSign::Plus => plus.add(&minus),
        CatSign::Minus => plus.add(&minus.scale(C64::new(-1.0, 0.0))),
    };
    combined.normalized()
}

/// `L = a² − α² I`
pub fn two_photon_jump(space: FockSpace, alpha: f64) -> FockOperator {
    let a = annihilation(space);
    let a2 = a.dot(&a);
    a2.sub(&identity_op(space).scale(C64::new(alpha * alpha, 0.0)))
}

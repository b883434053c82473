//! The cat-qubit subspace `H_α = span{|c⁺_α⟩, |c⁻_α⟩}` and its slow dynamics.
//!
//! Qubit matrices are 2x2 in the ordered basis `(|c⁺⟩, |c⁻⟩)`. With
//! `σ_y = i(|c⁺⟩⟨c⁻| − |c⁻⟩⟨c⁺|)` a qubit state is `(I + xσ_x + yσ_y + zσ_z)/2`.

use ndarray::{array, Array2};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{cat_norms, cat_state, CatSign, DensityMatrix, FockOperator, FockSpace, Ket};
use crate::linalg;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

pub fn sigma_x() -> Array2<C64> {
    array![[ZERO, ONE], [ONE, ZERO]]
}

pub fn sigma_y() -> Array2<C64> {
    array![[ZERO, I], [-I, ZERO]]
}

pub fn sigma_z() -> Array2<C64> {
    array![[ONE, ZERO], [ZERO, -ONE]]
}

/// Orthonormal cat basis of `H_α` inside a truncated Fock space.
#[derive(Debug, Clone)]
pub struct CatBasis {
    alpha: f64,
    plus: Ket,
    minus: Ket,
    /// Columns `|c⁺⟩, |c⁻⟩`.
    isometry: Array2<C64>,
}

impl CatBasis {
    pub fn new(space: FockSpace, alpha: f64) -> Result<Self> {
        let plus = cat_state(space, alpha, CatSign::Plus)?;
        let minus = cat_state(space, alpha, CatSign::Minus)?;
        let n = space.n_max();
        let mut isometry = Array2::zeros((n, 2));
        isometry.column_mut(0).assign(plus.amplitudes());
        isometry.column_mut(1).assign(minus.amplitudes());
        Ok(Self {
            alpha,
            plus,
            minus,
            isometry,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn space(&self) -> FockSpace {
        self.plus.space()
    }

    pub fn plus(&self) -> &Ket {
        &self.plus
    }

    pub fn minus(&self) -> &Ket {
        &self.minus
    }

    /// `n_max x 2` matrix `V` with `V†V = I₂` and `VV† = P_c`.
    pub fn isometry(&self) -> &Array2<C64> {
        &self.isometry
    }

    /// `P_c = |c⁺⟩⟨c⁺| + |c⁻⟩⟨c⁻|`.
    pub fn projector(&self) -> FockOperator {
        FockOperator::from_parts(self.space(), self.embed_matrix(&Array2::eye(2)))
    }

    /// `V m V†` for a 2x2 matrix `m`.
    pub fn embed_matrix(&self, m: &Array2<C64>) -> Array2<C64> {
        self.isometry.dot(m).dot(&linalg::dagger(&self.isometry))
    }

    /// `V† m V` for an `n_max x n_max` matrix `m`.
    pub fn compress_matrix(&self, m: &Array2<C64>) -> Array2<C64> {
        linalg::dagger(&self.isometry).dot(m).dot(&self.isometry)
    }

    pub fn embed_operator(&self, m: &Array2<C64>) -> FockOperator {
        FockOperator::from_parts(self.space(), self.embed_matrix(m))
    }
}

pub fn projector_pc(space: FockSpace, alpha: f64) -> Result<FockOperator> {
    Ok(CatBasis::new(space, alpha)?.projector())
}

/// Normalized qubit state in the cat basis.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitDensity {
    entries: Array2<C64>,
}

impl QubitDensity {
    pub const HERMITIAN_TOL: f64 = 1e-12;
    pub const TRACE_TOL: f64 = 1e-10;
    pub const PSD_TOL: f64 = 1e-9;

    pub fn new(entries: Array2<C64>) -> Result<Self> {
        if entries.dim() != (2, 2) {
            return Err(Error::ShapeMismatch {
                expected: 2,
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        let defect = linalg::hermiticity_defect(&entries);
        if defect > Self::HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "qubit matrix not Hermitian (defect {defect:.3e})"
            )));
        }
        let tr = linalg::trace(&entries).re;
        if (tr - 1.0).abs() > Self::TRACE_TOL {
            return Err(Error::InvalidState(format!("qubit trace {tr} != 1")));
        }
        let mut entries = entries;
        linalg::hermitize(&mut entries);
        let q = Self { entries };
        let b = q.bloch();
        if b.radius() > 1.0 + 2.0 * Self::PSD_TOL {
            return Err(Error::InvalidState(format!(
                "qubit matrix not positive (Bloch radius {})",
                b.radius()
            )));
        }
        Ok(q)
    }

    pub(crate) fn from_parts(mut entries: Array2<C64>) -> Self {
        linalg::hermitize(&mut entries);
        Self { entries }
    }

    pub fn plus() -> Self {
        Self::from_parts(array![[ONE, ZERO], [ZERO, ZERO]])
    }

    pub fn minus() -> Self {
        Self::from_parts(array![[ZERO, ZERO], [ZERO, ONE]])
    }

    pub fn from_bloch(b: BlochVector) -> Self {
        let half = C64::new(0.5, 0.0);
        let mut m = Array2::eye(2).mapv(|z: C64| z * half);
        m.scaled_add(C64::new(0.5 * b.x, 0.0), &sigma_x());
        m.scaled_add(C64::new(0.5 * b.y, 0.0), &sigma_y());
        m.scaled_add(C64::new(0.5 * b.z, 0.0), &sigma_z());
        Self::from_parts(m)
    }

    pub fn entries(&self) -> &Array2<C64> {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(&self.entries).re
    }

    pub fn expectation(&self, op: &Array2<C64>) -> f64 {
        linalg::trace(&self.entries.dot(op)).re
    }

    pub fn bloch(&self) -> BlochVector {
        BlochVector {
            x: self.expectation(&sigma_x()),
            y: self.expectation(&sigma_y()),
            z: self.expectation(&sigma_z()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let b = Self { x, y, z };
        if !(x.is_finite() && y.is_finite() && z.is_finite()) || b.radius() > 1.0 + 1e-9 {
            return Err(Error::InvalidState(format!(
                "Bloch vector ({x}, {y}, {z}) outside the unit ball"
            )));
        }
        Ok(b)
    }

    pub fn radius(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// `P_c ρ P_c` compressed to the cat basis. The block is not renormalized.
#[derive(Debug, Clone)]
pub struct ProjectedQubit {
    pub block: Array2<C64>,
    /// `tr(P_c ρ P_c)`.
    pub population: f64,
}

impl ProjectedQubit {
    /// Divides the block by the subspace population.
    pub fn normalized(&self) -> Result<QubitDensity> {
        if !(self.population > 0.0) {
            return Err(Error::InvalidState(
                "state has no weight on the cat subspace".into(),
            ));
        }
        Ok(QubitDensity::from_parts(
            self.block.mapv(|z| z / self.population),
        ))
    }
}

pub fn project_to_qubit(rho: &DensityMatrix, basis: &CatBasis) -> ProjectedQubit {
    let mut block = basis.compress_matrix(rho.matrix());
    linalg::hermitize(&mut block);
    let population = linalg::trace(&block).re;
    ProjectedQubit { block, population }
}

pub fn embed_to_fock(rho_s: &QubitDensity, basis: &CatBasis) -> DensityMatrix {
    let mut m = basis.embed_matrix(rho_s.entries());
    linalg::hermitize(&mut m);
    DensityMatrix::from_parts(basis.space(), m)
}

/// Cat-basis Pauli operators, both as 2x2 matrices and embedded in Fock space.
#[derive(Debug, Clone)]
pub struct CatPaulis {
    pub x: FockOperator,
    pub y: FockOperator,
    pub z: FockOperator,
}

pub fn cat_paulis(basis: &CatBasis) -> CatPaulis {
    CatPaulis {
        x: basis.embed_operator(&sigma_x()),
        y: basis.embed_operator(&sigma_y()),
        z: basis.embed_operator(&sigma_z()),
    }
}

/// Orthonormal real basis of the Hermitian operators on `H_α`:
/// `|c⁺⟩⟨c⁺|`, `|c⁻⟩⟨c⁻|`, `σ_x/√2`, `σ_y/√2`.
pub fn slow_basis(basis: &CatBasis) -> [FockOperator; 4] {
    let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [
        basis.embed_operator(&array![[ONE, ZERO], [ZERO, ZERO]]),
        basis.embed_operator(&array![[ZERO, ZERO], [ZERO, ONE]]),
        basis.embed_operator(&sigma_x().mapv(|z| z * r)),
        basis.embed_operator(&sigma_y().mapv(|z| z * r)),
    ]
}

/// Reduced dynamics `dρ_s/dt = εα² 𝔏_X(ρ_s)` on the cat qubit.
#[derive(Debug, Clone)]
pub struct SlowGenerator {
    alpha: f64,
    epsilon: f64,
    x: Array2<C64>,
}

impl SlowGenerator {
    pub fn new(alpha: f64, epsilon: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::DegenerateAmplitude(alpha));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "epsilon must be non-negative, got {epsilon}"
            )));
        }
        let (gp, gm) = cat_norms(alpha);
        let x = array![
            [ZERO, C64::new(gp / gm, 0.0)],
            [C64::new(gm / gp, 0.0), ZERO]
        ];
        Ok(Self { alpha, epsilon, x })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `X = (γ⁺/γ⁻)|c⁺⟩⟨c⁻| + (γ⁻/γ⁺)|c⁻⟩⟨c⁺|`.
    pub fn jump(&self) -> &Array2<C64> {
        &self.x
    }

    /// `𝔏_X(ρ)` without the `εα²` prefactor.
    pub fn dissipator(&self, rho: &Array2<C64>) -> Array2<C64> {
        let xd = linalg::dagger(&self.x);
        let xdx = xd.dot(&self.x);
        let half = C64::new(0.5, 0.0);
        let mut out = self.x.dot(rho).dot(&xd);
        out.scaled_add(-half, &xdx.dot(rho));
        out.scaled_add(-half, &rho.dot(&xdx));
        out
    }

    pub fn apply(&self, rho: &Array2<C64>) -> Array2<C64> {
        let c = C64::new(self.epsilon * self.alpha * self.alpha, 0.0);
        self.dissipator(rho).mapv(|z| z * c)
    }

    /// RK4 integration from `rho0`, recording every `stride` steps and at the
    /// final time.
    pub fn integrate(
        &self,
        rho0: &QubitDensity,
        dt: f64,
        t_final: f64,
        stride: usize,
    ) -> Result<Vec<(f64, QubitDensity)>> {
        if !(dt > 0.0) || !(t_final > 0.0) || stride == 0 {
            return Err(Error::InvalidConfig(format!(
                "dt = {dt}, t_final = {t_final}, stride = {stride}"
            )));
        }
        let n_steps = (t_final / dt).round().max(1.0) as usize;
        let mut out = vec![(0.0, rho0.clone())];
        let mut rho = rho0.entries().clone();
        let h = C64::new(dt, 0.0);
        let half = C64::new(0.5 * dt, 0.0);
        for step in 1..=n_steps {
            let k1 = self.apply(&rho);
            let k2 = self.apply(&(&rho + &k1.mapv(|z| z * half)));
            let k3 = self.apply(&(&rho + &k2.mapv(|z| z * half)));
            let k4 = self.apply(&(&rho + &k3.mapv(|z| z * h)));
            let w = C64::new(dt / 6.0, 0.0);
            rho = &rho + &(&k1 + &k2.mapv(|z| z * 2.0) + k3.mapv(|z| z * 2.0) + &k4).mapv(|z| z * w);
            linalg::hermitize(&mut rho);
            if step % stride == 0 || step == n_steps {
                out.push((step as f64 * dt, QubitDensity::from_parts(rho.clone())));
            }
        }
        Ok(out)
    }
}

/// Relaxation rates of the reduced Bloch equations and the asymptotic `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlochRates {
    pub r_x: f64,
    pub r_y: f64,
    pub r_z: f64,
    pub z_inf: f64,
}

pub fn bloch_rates(alpha: f64, epsilon: f64) -> Result<BlochRates> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::DegenerateAmplitude(alpha));
    }
    let (gp, gm) = cat_norms(alpha);
    let (p2, m2) = (gp * gp, gm * gm);
    let scale = epsilon * alpha * alpha;
    Ok(BlochRates {
        r_x: scale * (p2 - m2).powi(2) / (2.0 * p2 * m2),
        r_y: scale * (p2 + m2).powi(2) / (2.0 * p2 * m2),
        r_z: scale * (p2 * p2 + m2 * m2) / (p2 * m2),
        z_inf: (p2 * p2 - m2 * m2) / (p2 * p2 + m2 * m2),
    })
}

/// Closed-form solution of the reduced Bloch equations.
pub fn solve_bloch(b0: BlochVector, alpha: f64, epsilon: f64, t: f64) -> Result<BlochVector> {
    let r = bloch_rates(alpha, epsilon)?;
    Ok(BlochVector {
        x: b0.x * (-r.r_x * t).exp(),
        y: b0.y * (-r.r_y * t).exp(),
        z: r.z_inf + (b0.z - r.z_inf) * (-r.r_z * t).exp(),
    })
}

/// How a Fock-space initial state is mapped to the reduced model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReducedInit {
    /// `diag((1+⟨Π⟩)/2, (1−⟨Π⟩)/2)`: the cat state with the same parity
    /// expectation. Vacuum maps to `|c⁺⟩⟨c⁺|`.
    ParityMatch,
    /// `P_c ρ P_c / tr(P_c ρ P_c)`.
    Projection,
    /// Projection when the state lies in `H_α` (population ≥ 1 − 1e−9),
    /// parity matching otherwise.
    Auto,
}

pub fn reduced_initial_state(
    rho: &DensityMatrix,
    basis: &CatBasis,
    mode: ReducedInit,
) -> Result<QubitDensity> {
    let projected = project_to_qubit(rho, basis);
    let mode = match mode {
        ReducedInit::Auto if projected.population >= 1.0 - 1e-9 => ReducedInit::Projection,
        ReducedInit::Auto => ReducedInit::ParityMatch,
        m => m,
    };
    match mode {
        ReducedInit::Projection => projected.normalized(),
        _ => {
            let parity = rho.expectation(&crate::fock::parity_op(rho.space()));
            let p = C64::new(0.5 * (1.0 + parity), 0.0);
            let q = C64::new(0.5 * (1.0 - parity), 0.0);
            Ok(QubitDensity::from_parts(array![[p, ZERO], [ZERO, q]]))
        }
    }
}

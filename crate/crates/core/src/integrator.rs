//! Time stepping for Lindblad models.
//!
//! The production scheme is a first-order Kraus map
//!
//! ```text
//! ρ' = (M₀ρM₀† + Σ_j dt γ_j A_j ρ A_j†) / tr(…),   M₀ = I − (iH + ½ Σ_j γ_j A_j†A_j) dt
//! ```
//!
//! which is a sum of congruences and therefore keeps ρ positive for any step.
//! Classical RK4 on the generator is kept as an accuracy reference.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, FockOperator};
use crate::lindblad::LindbladModel;
use crate::linalg;

/// `dt` times the stiffness bound of the model may not exceed this value.
/// At 2 the no-jump factor `I − K dt` is still non-expanding on the dissipative
/// part of the spectrum, and RK4 stays inside its stability region.
pub const STABILITY_LIMIT: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    KrausEuler,
    Rk4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    pub record_stride: usize,
    pub keep_snapshots: bool,
}

impl IntegratorConfig {
    pub const DEFAULT_STRIDE: usize = 100;

    pub fn new(dt: f64, t_final: f64, scheme: Scheme) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
        }
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "t_final must be positive, got {t_final}"
            )));
        }
        Ok(Self {
            dt,
            t_final,
            scheme,
            record_stride: Self::DEFAULT_STRIDE,
            keep_snapshots: false,
        })
    }

    pub fn with_record_stride(mut self, stride: usize) -> Result<Self> {
        if stride == 0 {
            return Err(Error::InvalidConfig("record_stride must be positive".into()));
        }
        self.record_stride = stride;
        Ok(self)
    }

    pub fn with_snapshots(mut self, keep: bool) -> Self {
        self.keep_snapshots = keep;
        self
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round().max(1.0) as usize
    }

    /// Rejects step sizes for which `dt · (‖H‖ + ½Σγ‖A‖²)` exceeds
    /// [`STABILITY_LIMIT`].
    pub fn check_stability(&self, model: &LindbladModel) -> Result<()> {
        let bound = model.stiffness_bound()?;
        if self.dt * bound > STABILITY_LIMIT {
            return Err(Error::InvalidConfig(format!(
                "dt = {} too large: dt * stiffness = {:.3} exceeds {STABILITY_LIMIT}",
                self.dt,
                self.dt * bound
            )));
        }
        Ok(())
    }
}

/// Kraus operators of one Euler step, precomputed for a fixed `dt`.
struct KrausStep {
    no_jump: Array2<C64>,
    no_jump_adj: Array2<C64>,
    kicks: Vec<(Array2<C64>, Array2<C64>)>,
}

impl KrausStep {
    fn new(model: &LindbladModel, dt: f64) -> Self {
        let n = model.space().n_max();
        let mut no_jump = Array2::<C64>::eye(n);
        no_jump.scaled_add(C64::new(-dt, 0.0), model.effective_operator());
        let no_jump_adj = linalg::dagger(&no_jump);
        let kicks = model
            .jumps()
            .iter()
            .enumerate()
            .filter(|(_, j)| j.rate > 0.0)
            .map(|(k, j)| {
                let w = C64::new((dt * j.rate).sqrt(), 0.0);
                (j.op.matrix().mapv(|z| z * w), model.jump_adjoint(k).mapv(|z| z * w))
            })
            .collect();
        Self {
            no_jump,
            no_jump_adj,
            kicks,
        }
    }

    fn apply(&self, rho: &Array2<C64>) -> Array2<C64> {
        let mut out = self.no_jump.dot(rho).dot(&self.no_jump_adj);
        for (b, b_adj) in &self.kicks {
            out += &b.dot(rho).dot(b_adj);
        }
        let tr = linalg::trace(&out).re;
        out.mapv_inplace(|z| z / tr);
        linalg::hermitize(&mut out);
        out
    }
}

fn rk4_apply(model: &LindbladModel, rho: &Array2<C64>, dt: f64) -> Array2<C64> {
    let half = C64::new(0.5 * dt, 0.0);
    let k1 = model.apply(rho);
    let mut probe = rho.clone();
    probe.scaled_add(half, &k1);
    let k2 = model.apply(&probe);
    probe.assign(rho);
    probe.scaled_add(half, &k2);
    let k3 = model.apply(&probe);
    probe.assign(rho);
    probe.scaled_add(C64::new(dt, 0.0), &k3);
    let k4 = model.apply(&probe);

    let mut out = rho.clone();
    let w = dt / 6.0;
    out.scaled_add(C64::new(w, 0.0), &k1);
    out.scaled_add(C64::new(2.0 * w, 0.0), &k2);
    out.scaled_add(C64::new(2.0 * w, 0.0), &k3);
    out.scaled_add(C64::new(w, 0.0), &k4);
    linalg::hermitize(&mut out);
    let tr = linalg::trace(&out).re;
    out.mapv_inplace(|z| z / tr);
    out
}

enum Stepper<'a> {
    Kraus(KrausStep),
    Rk4 { model: &'a LindbladModel, dt: f64 },
}

impl<'a> Stepper<'a> {
    fn new(model: &'a LindbladModel, scheme: Scheme, dt: f64) -> Self {
        match scheme {
            Scheme::KrausEuler => Stepper::Kraus(KrausStep::new(model, dt)),
            Scheme::Rk4 => Stepper::Rk4 { model, dt },
        }
    }

    fn step(&self, rho: &Array2<C64>) -> Array2<C64> {
        match self {
            Stepper::Kraus(k) => k.apply(rho),
            Stepper::Rk4 { model, dt } => rk4_apply(model, rho, *dt),
        }
    }
}

/// One positivity-preserving Kraus-Euler step.
pub fn step_kraus(model: &LindbladModel, rho: &DensityMatrix, dt: f64) -> DensityMatrix {
    let out = KrausStep::new(model, dt).apply(rho.matrix());
    DensityMatrix::from_parts(rho.space(), out)
}

/// One classical RK4 step, Hermitized and trace-renormalized. Positivity is not
/// enforced.
pub fn step_rk4(model: &LindbladModel, rho: &DensityMatrix, dt: f64) -> DensityMatrix {
    DensityMatrix::from_parts(rho.space(), rk4_apply(model, rho.matrix(), dt))
}

/// Recorded observables along a run.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    times: Vec<f64>,
    names: Vec<String>,
    values: Vec<Vec<f64>>,
    snapshots: Option<Vec<DensityMatrix>>,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn observable(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|k| self.values[k].as_slice())
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.names
            .iter()
            .zip(&self.values)
            .map(|(n, v)| (n.as_str(), v.as_slice()))
    }

    pub fn snapshots(&self) -> Option<&[DensityMatrix]> {
        self.snapshots.as_deref()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Integrates `model` from `rho0`, calling `visit(step_index, t, ρ)` at every
/// recorded time (step 0, every `record_stride` steps, and the final step).
/// Returns the final state.
pub fn evolve_with<F>(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    config: &IntegratorConfig,
    mut visit: F,
) -> Result<DensityMatrix>
where
    F: FnMut(usize, f64, &DensityMatrix) -> Result<()>,
{
    if rho0.space() != model.space() {
        return Err(Error::InvalidState(
            "initial state and model live on different spaces".into(),
        ));
    }
    config.check_stability(model)?;
    let stepper = Stepper::new(model, config.scheme, config.dt);
    let n_steps = config.n_steps();
    let space = model.space();

    let mut rho = rho0.clone();
    visit(0, 0.0, &rho)?;
    for step in 1..=n_steps {
        let next = stepper.step(rho.matrix());
        let t = step as f64 * config.dt;
        let tr = linalg::trace(&next);
        if !(tr.re.is_finite() && tr.im.is_finite()) || next.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { t, step });
        }
        rho = DensityMatrix::from_parts(space, next);
        if step % config.record_stride == 0 || step == n_steps {
            visit(step, t, &rho)?;
        }
    }
    Ok(rho)
}

/// Integrates and records `Re tr(ρ O)` for each named observable.
pub fn evolve(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    config: &IntegratorConfig,
    observables: &[(&str, &FockOperator)],
) -> Result<Trajectory> {
    let mut traj = Trajectory {
        times: Vec::new(),
        names: observables.iter().map(|(n, _)| n.to_string()).collect(),
        values: vec![Vec::new(); observables.len()],
        snapshots: config.keep_snapshots.then(Vec::new),
    };
    evolve_with(model, rho0, config, |_, t, rho| {
        traj.times.push(t);
        for (k, (_, op)) in observables.iter().enumerate() {
            traj.values[k].push(rho.expectation(op));
        }
        if let Some(snaps) = traj.snapshots.as_mut() {
            snaps.push(rho.clone());
        }
        Ok(())
    })?;
    Ok(traj)
}

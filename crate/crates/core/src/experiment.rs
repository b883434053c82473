//! Full-model, reduced-model and side-by-side runs of the cat-qubit scenarios.

use serde::{Deserialize, Serialize};

use crate::analysis::{decay_rate_fit, fidelity_matrix, ExpFit};
use crate::cat_qubit::{
    bloch_rates, cat_paulis, embed_to_fock, reduced_initial_state, sigma_x, sigma_z, solve_bloch,
    BlochRates, CatBasis, QubitDensity, ReducedInit, SlowGenerator,
};
use crate::error::{Error, Result};
use crate::fock::{number_op, parity_op, two_photon_jump, DensityMatrix, FockOperator, FockSpace};
use crate::integrator::{evolve_with, IntegratorConfig};
use crate::lindblad::{cat_model, drive_form_model, drive_from_alpha, LindbladModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelForm {
    /// `κ𝔏_L + ε𝔏_a` with `L = a² − α²`.
    LForm,
    /// `−i[H, ·] + κ𝔏_{a²} + ε𝔏_a` with `H = iu((a†)² − a²)`, `u = κα²/2`.
    DriveForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub alpha: f64,
    pub kappa: f64,
    pub epsilon: f64,
    pub n_max: usize,
    pub form: ModelForm,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            kappa: 1.0,
            epsilon: 0.01,
            n_max: crate::fock::DEFAULT_N_MAX,
            form: ModelForm::LForm,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::DegenerateAmplitude(self.alpha));
        }
        for (name, v) in [("kappa", self.kappa), ("epsilon", self.epsilon)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidModel(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.epsilon >= self.kappa {
            log::warn!(
                "epsilon = {} is not small against kappa = {}; the reduced model assumes epsilon << kappa",
                self.epsilon,
                self.kappa
            );
        }
        FockSpace::new(self.n_max)?;
        Ok(())
    }

    pub fn space(&self) -> Result<FockSpace> {
        FockSpace::new(self.n_max)
    }

    pub fn model(&self) -> Result<LindbladModel> {
        self.validate()?;
        let space = self.space()?;
        match self.form {
            ModelForm::LForm => cat_model(space, self.alpha, self.kappa, self.epsilon),
            ModelForm::DriveForm => drive_form_model(
                space,
                drive_from_alpha(self.alpha, self.kappa),
                self.kappa,
                self.epsilon,
            ),
        }
    }

    pub fn basis(&self) -> Result<CatBasis> {
        CatBasis::new(self.space()?, self.alpha)
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    Vacuum,
    CatPlus,
    CatMinus,
    /// `(|c⁺⟩ + |c⁻⟩)(⟨c⁺| + ⟨c⁻|)/2`.
    Superposition,
    Fock(usize),
}

impl InitialState {
    pub fn prepare(&self, basis: &CatBasis) -> Result<DensityMatrix> {
        let space = basis.space();
        match *self {
            InitialState::Vacuum => Ok(DensityMatrix::vacuum(space)),
            InitialState::CatPlus => basis.plus().density(),
            InitialState::CatMinus => basis.minus().density(),
            InitialState::Superposition => basis.plus().add(basis.minus()).normalized()?.density(),
            InitialState::Fock(n) => DensityMatrix::fock(space, n),
        }
    }
}

/// Column names of a full-model run, in CSV order.
pub const FULL_COLUMNS: [&str; 6] = ["sigma_z", "sigma_x", "subspace_population", "V", "N", "parity"];
/// Column names of a reduced-model run.
pub const REDUCED_COLUMNS: [&str; 5] = ["sigma_z_s", "sigma_x_s", "x", "y", "z"];
/// Column names of a comparison run.
pub const COMPARE_COLUMNS: [&str; 4] = ["fidelity", "delta_sigma_z", "delta_sigma_x", "log10_infidelity"];

/// Time series with named columns sharing one time axis.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Series {
    pub times: Vec<f64>,
    pub names: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Series {
    fn new(names: &[&str]) -> Self {
        Self {
            times: Vec::new(),
            names: names.iter().map(|s| s.to_string()).collect(),
            columns: vec![Vec::new(); names.len()],
        }
    }

    fn push(&mut self, t: f64, values: &[f64]) {
        self.times.push(t);
        for (col, v) in self.columns.iter_mut().zip(values) {
            col.push(*v);
        }
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|k| self.columns[k].as_slice())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Mean of a column over samples with `t ≥ t_min`.
    pub fn mean_after(&self, name: &str, t_min: f64) -> Option<f64> {
        let col = self.column(name)?;
        let vals: Vec<f64> = self
            .times
            .iter()
            .zip(col)
            .filter(|(t, _)| **t >= t_min)
            .map(|(_, v)| *v)
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

/// The operators whose expectations make up [`FULL_COLUMNS`].
struct FullObservables {
    ops: Vec<FockOperator>,
}

impl FullObservables {
    fn new(params: &ModelParams, basis: &CatBasis) -> Self {
        let space = basis.space();
        let p = cat_paulis(basis);
        let l = two_photon_jump(space, params.alpha);
        Self {
            ops: vec![
                p.z,
                p.x,
                basis.projector(),
                l.dagger().dot(&l),
                number_op(space),
                parity_op(space),
            ],
        }
    }

    fn evaluate(&self, rho: &DensityMatrix) -> Vec<f64> {
        self.ops.iter().map(|op| rho.expectation(op)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct FullRun {
    pub series: Series,
    pub final_state: DensityMatrix,
}

pub fn run_full(params: &ModelParams, rho0: &DensityMatrix, config: &IntegratorConfig) -> Result<FullRun> {
    let model = params.model()?;
    let basis = params.basis()?;
    let obs = FullObservables::new(params, &basis);
    let mut series = Series::new(&FULL_COLUMNS);
    let final_state = evolve_with(&model, rho0, config, |_, t, rho| {
        series.push(t, &obs.evaluate(rho));
        Ok(())
    })?;
    Ok(FullRun { series, final_state })
}

#[derive(Debug, Clone)]
pub struct ReducedRun {
    pub series: Series,
    pub states: Vec<QubitDensity>,
    pub rates: BlochRates,
}

/// Integrates the 2x2 slow model with RK4 on the same record grid as a full
/// run with `config`, alongside the closed-form Bloch solution.
pub fn run_reduced(params: &ModelParams, rho_s0: &QubitDensity, config: &IntegratorConfig) -> Result<ReducedRun> {
    params.validate()?;
    let gen = SlowGenerator::new(params.alpha, params.epsilon)?;
    let traj = gen.integrate(rho_s0, config.dt, config.t_final, config.record_stride)?;
    let b0 = rho_s0.bloch();
    let mut series = Series::new(&REDUCED_COLUMNS);
    let mut states = Vec::with_capacity(traj.len());
    for (t, q) in traj {
        let b = solve_bloch(b0, params.alpha, params.epsilon, t)?;
        series.push(t, &[q.expectation(&sigma_z()), q.expectation(&sigma_x()), b.x, b.y, b.z]);
        states.push(q);
    }
    Ok(ReducedRun {
        series,
        states,
        rates: bloch_rates(params.alpha, params.epsilon)?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareSummary {
    pub transient_end: f64,
    /// Mean of `1 − F` over `t ≥ transient_end`.
    pub infidelity_plateau: f64,
    /// Mean of `⟨σ_z⟩ − ⟨σ_z⟩_s` over `t ≥ transient_end`.
    pub sigma_z_offset: f64,
    pub sigma_x_offset: f64,
    pub final_fidelity: f64,
    pub rates: BlochRates,
}

#[derive(Debug, Clone)]
pub struct CompareRun {
    pub full: FullRun,
    pub reduced: ReducedRun,
    pub series: Series,
    pub summary: CompareSummary,
}

/// `log10(1 − F)` with `1 − F` floored at 1e−16.
pub fn log10_infidelity(f: f64) -> f64 {
    (1.0 - f).max(1e-16).log10()
}

/// Runs the full and the reduced model from `rho0`, the latter initialised by
/// `init`, and compares them at every recorded time.
pub fn run_compare(
    params: &ModelParams,
    rho0: &DensityMatrix,
    init: ReducedInit,
    config: &IntegratorConfig,
    transient_end: f64,
) -> Result<CompareRun> {
    let basis = params.basis()?;
    let rho_s0 = reduced_initial_state(rho0, &basis, init)?;
    let reduced = run_reduced(params, &rho_s0, config)?;

    let model = params.model()?;
    let obs = FullObservables::new(params, &basis);
    let mut full_series = Series::new(&FULL_COLUMNS);
    let mut series = Series::new(&COMPARE_COLUMNS);
    let mut k = 0usize;
    let final_state = evolve_with(&model, rho0, config, |_, t, rho| {
        let q = reduced.states.get(k).ok_or_else(|| {
            Error::InvalidState("reduced trajectory shorter than the full one".into())
        })?;
        let rt = reduced.series.times[k];
        if (rt - t).abs() > 1e-9 * t.max(1.0) {
            return Err(Error::InvalidState(format!(
                "time grids diverge: full {t}, reduced {rt}"
            )));
        }
        let values = obs.evaluate(rho);
        let embedded = embed_to_fock(q, &basis);
        let f = fidelity_matrix(rho.matrix(), embedded.matrix())?;
        series.push(
            t,
            &[
                f,
                values[0] - reduced.series.columns[0][k],
                values[1] - reduced.series.columns[1][k],
                log10_infidelity(f),
            ],
        );
        full_series.push(t, &values);
        k += 1;
        Ok(())
    })?;

    let fid = series.column("fidelity").expect("column exists");
    let plateau: Vec<f64> = series
        .times
        .iter()
        .zip(fid)
        .filter(|(t, _)| **t >= transient_end)
        .map(|(_, f)| 1.0 - f)
        .collect();
    if plateau.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no samples after the transient end {transient_end}"
        )));
    }
    let summary = CompareSummary {
        transient_end,
        infidelity_plateau: plateau.iter().sum::<f64>() / plateau.len() as f64,
        sigma_z_offset: series.mean_after("delta_sigma_z", transient_end).unwrap_or(f64::NAN),
        sigma_x_offset: series.mean_after("delta_sigma_x", transient_end).unwrap_or(f64::NAN),
        final_fidelity: *fid.last().unwrap_or(&f64::NAN),
        rates: reduced.rates,
    };
    Ok(CompareRun {
        full: FullRun {
            series: full_series,
            final_state,
        },
        reduced,
        series,
        summary,
    })
}

/// Exponential decay rate of a series column over a time window.
pub fn fit_column(series: &Series, name: &str, window: (f64, f64)) -> Result<ExpFit> {
    let col = series
        .column(name)
        .ok_or_else(|| Error::InvalidInput(format!("no column named {name}")))?;
    decay_rate_fit(&series.times, col, window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::Scheme;

    fn params(n_max: usize, epsilon: f64) -> ModelParams {
        ModelParams {
            n_max,
            epsilon,
            ..ModelParams::default()
        }
    }

    #[test]
    fn steady_cat_stays_put() {
        let p = params(20, 0.0);
        let basis = p.basis().unwrap();
        let rho0 = InitialState::CatPlus.prepare(&basis).unwrap();
        let cfg = IntegratorConfig::new(1e-3, 1.0, Scheme::KrausEuler).unwrap();
        let run = run_full(&p, &rho0, &cfg).unwrap();
        for (k, col) in run.series.columns.iter().enumerate() {
            let first = col[0];
            assert!(col.iter().all(|v| (v - first).abs() < 1e-8), "{}", FULL_COLUMNS[k]);
        }
    }

    #[test]
    fn initial_states() {
        let basis = params(20, 0.0).basis().unwrap();
        let sup = InitialState::Superposition.prepare(&basis).unwrap();
        assert!((sup.trace() - 1.0).abs() < 1e-12);
        let fock = InitialState::Fock(6).prepare(&basis).unwrap();
        assert_eq!(fock.population(6), 1.0);
        assert!(InitialState::Fock(20).prepare(&basis).is_err());
    }

    #[test]
    fn reduced_and_closed_form_agree() {
        let p = params(20, 0.05);
        let cfg = IntegratorConfig::new(1e-3, 20.0, Scheme::Rk4).unwrap();
        let run = run_reduced(&p, &QubitDensity::plus(), &cfg).unwrap();
        let zs = run.series.column("sigma_z_s").unwrap();
        let z = run.series.column("z").unwrap();
        assert!(zs.iter().zip(z).all(|(a, b)| (a - b).abs() < 1e-9));
    }

    #[test]
    fn compare_grids_align() {
        let p = params(20, 0.01);
        let basis = p.basis().unwrap();
        let rho0 = InitialState::Vacuum.prepare(&basis).unwrap();
        let cfg = IntegratorConfig::new(1e-3, 2.0, Scheme::KrausEuler)
            .unwrap()
            .with_record_stride(50)
            .unwrap();
        let run = run_compare(&p, &rho0, ReducedInit::Auto, &cfg, 1.0).unwrap();
        assert_eq!(run.series.len(), run.reduced.series.len());
        assert_eq!(run.series.len(), 41);
        let f0 = run.series.column("fidelity").unwrap()[0];
        // vacuum against |c+⟩: F = |⟨0|c+⟩|
        let (gp, _) = crate::fock::cat_norms(1.0);
        assert!((f0 - 2.0 * (-0.5f64).exp() / gp).abs() < 1e-9);
    }
}

//! Numerical checks of the convergence results and of the reduced model,
//! each reported as measured values against fixed bounds.

use std::fmt;
use std::time::Instant;

use ndarray::{s, Array1};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::analysis::{decay_rate_fit, moment, moment_bound, trace_distance};
use crate::cat_qubit::{embed_to_fock, QubitDensity, ReducedInit, SlowGenerator};
use crate::error::Result;
use crate::experiment::{fit_column, run_compare, run_full, CompareRun, FullRun, InitialState, ModelForm, ModelParams};
use crate::fock::{annihilation, number_op, parity_op, DensityMatrix};
use crate::integrator::{evolve_with, IntegratorConfig, Scheme};
use crate::lindblad::dissipator;
use crate::linalg;
use crate::random::{random_density, random_qubit, rng};
use crate::reduction::quantum::{quantum_block_system, reduce_quantum};
use crate::reduction::{conserved_functionals, integrate_linear, random_block_system, reduce_direct, reduce_dual};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    LyapunovDecay,
    Convergence,
    MomentBound,
    ParityConservation,
    FirstComponent,
    CorrectionVanishes,
    LinearReduction,
    InfidelityPlateau,
    SigmaZOffset,
    BitFlipRate,
    PhaseFlipDrift,
    IntegratorOrder,
    DriveForm,
}

impl Criterion {
    pub const ALL: [Criterion; 13] = [
        Criterion::LyapunovDecay,
        Criterion::Convergence,
        Criterion::MomentBound,
        Criterion::ParityConservation,
        Criterion::FirstComponent,
        Criterion::CorrectionVanishes,
        Criterion::LinearReduction,
        Criterion::InfidelityPlateau,
        Criterion::SigmaZOffset,
        Criterion::BitFlipRate,
        Criterion::PhaseFlipDrift,
        Criterion::IntegratorOrder,
        Criterion::DriveForm,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Criterion::LyapunovDecay => "lyapunov-decay",
            Criterion::Convergence => "convergence",
            Criterion::MomentBound => "moment-bound",
            Criterion::ParityConservation => "parity-conservation",
            Criterion::FirstComponent => "first-component",
            Criterion::CorrectionVanishes => "correction-vanishes",
            Criterion::LinearReduction => "linear-reduction",
            Criterion::InfidelityPlateau => "infidelity-plateau",
            Criterion::SigmaZOffset => "sigma-z-offset",
            Criterion::BitFlipRate => "bit-flip-rate",
            Criterion::PhaseFlipDrift => "phase-flip-drift",
            Criterion::IntegratorOrder => "integrator-order",
            Criterion::DriveForm => "drive-form",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Bound {
    AtMost { max: f64 },
    AtLeast { min: f64 },
    /// Strict `value < max`.
    Below { max: f64 },
    /// Strict `value > min`.
    Above { min: f64 },
    Within { min: f64, max: f64 },
}

impl Bound {
    pub fn holds(&self, v: f64) -> bool {
        match *self {
            Bound::AtMost { max } => v <= max,
            Bound::AtLeast { min } => v >= min,
            Bound::Below { max } => v < max,
            Bound::Above { min } => v > min,
            Bound::Within { min, max } => v >= min && v <= max,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::AtMost { max } => write!(f, "<= {max:e}"),
            Bound::AtLeast { min } => write!(f, ">= {min:e}"),
            Bound::Below { max } => write!(f, "< {max:e}"),
            Bound::Above { min } => write!(f, "> {min:e}"),
            Bound::Within { min, max } => write!(f, "in [{min:e}, {max:e}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measurement {
    pub quantity: String,
    pub value: f64,
    pub bound: Bound,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub criterion: Criterion,
    pub passed: bool,
    pub measurements: Vec<Measurement>,
    /// Set when the check could not be carried out.
    pub error: Option<String>,
    pub seconds: f64,
}

impl CheckReport {
    pub fn measurement(&self, quantity: &str) -> Option<&Measurement> {
        self.measurements.iter().find(|m| m.quantity == quantity)
    }

    pub fn value(&self, quantity: &str) -> Option<f64> {
        self.measurement(quantity).map(|m| m.value)
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}", self.criterion)?;
        if let Some(e) = &self.error {
            write!(f, " error: {e}")?;
        }
        for m in &self.measurements {
            write!(f, " | {} = {:.6e} ({})", m.quantity, m.value, m.bound)?;
        }
        write!(f, " [{:.1}s]", self.seconds)
    }
}

struct Builder {
    measurements: Vec<Measurement>,
}

impl Builder {
    fn new() -> Self {
        Self {
            measurements: Vec::new(),
        }
    }

    fn add(&mut self, quantity: &str, value: f64, bound: Bound) -> &mut Self {
        self.measurements.push(Measurement {
            quantity: quantity.to_string(),
            value,
            bound,
            passed: bound.holds(value),
        });
        self
    }

    fn finish(self, criterion: Criterion, seconds: f64) -> CheckReport {
        let passed = !self.measurements.is_empty() && self.measurements.iter().all(|m| m.passed);
        CheckReport {
            criterion,
            passed,
            measurements: self.measurements,
            error: None,
            seconds,
        }
    }
}

fn at_most(max: f64) -> Bound {
    Bound::AtMost { max }
}

fn at_least(min: f64) -> Bound {
    Bound::AtLeast { min }
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Parameters shared by the whole battery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    pub params: ModelParams,
    pub dt: f64,
    pub scheme: Scheme,
    pub seed: u64,
    /// Horizon of the vacuum comparison run.
    pub short_horizon: f64,
    /// Horizon of the superposition comparison run.
    pub long_horizon: f64,
    /// Start of the post-transient window.
    pub transient_end: f64,
    /// Window over which the phase-flip drift is compared.
    pub drift_window: (f64, f64),
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            params: ModelParams::default(),
            dt: 1e-3,
            scheme: Scheme::KrausEuler,
            seed: 20_240_611,
            short_horizon: 20.0,
            long_horizon: 100.0,
            transient_end: 5.0,
            drift_window: (50.0, 100.0),
        }
    }
}

impl CheckConfig {
    fn integrator(&self, t_final: f64) -> Result<IntegratorConfig> {
        IntegratorConfig::new(self.dt, t_final, self.scheme)
    }

    fn nominal(&self) -> ModelParams {
        self.params.with_epsilon(0.0)
    }
}

#[derive(Default)]
struct MomentRun {
    times: Vec<f64>,
    n1: Vec<f64>,
    n2: Vec<f64>,
    parity: Vec<f64>,
}

/// Lazily computed runs shared between criteria.
struct Runs<'a> {
    cfg: &'a CheckConfig,
    vacuum_nominal: Option<FullRun>,
    fock_nominal: Option<MomentRun>,
    vacuum_compare: Option<(CompareRun, f64)>,
    superposition_compare: Option<CompareRun>,
}

impl<'a> Runs<'a> {
    fn new(cfg: &'a CheckConfig) -> Self {
        Self {
            cfg,
            vacuum_nominal: None,
            fock_nominal: None,
            vacuum_compare: None,
            superposition_compare: None,
        }
    }

    fn nominal_run(&self, init: InitialState, t_final: f64) -> Result<FullRun> {
        let p = self.cfg.nominal();
        let rho0 = init.prepare(&p.basis()?)?;
        let ic = self.cfg.integrator(t_final)?.with_record_stride(10)?;
        run_full(&p, &rho0, &ic)
    }

    fn vacuum_nominal(&mut self) -> Result<&FullRun> {
        if self.vacuum_nominal.is_none() {
            self.vacuum_nominal = Some(self.nominal_run(InitialState::Vacuum, 10.0)?);
        }
        Ok(self.vacuum_nominal.as_ref().unwrap())
    }

    fn fock_nominal(&mut self) -> Result<&MomentRun> {
        if self.fock_nominal.is_none() {
            let p = self.cfg.nominal();
            let model = p.model()?;
            let rho0 = InitialState::Fock(6).prepare(&p.basis()?)?;
            let space = p.space()?;
            let n1 = number_op(space);
            let n2 = n1.dot(&n1);
            let par = parity_op(space);
            let ic = self.cfg.integrator(20.0)?.with_record_stride(10)?;
            let mut run = MomentRun::default();
            evolve_with(&model, &rho0, &ic, |_, t, rho| {
                run.times.push(t);
                run.n1.push(rho.expectation(&n1));
                run.n2.push(rho.expectation(&n2));
                run.parity.push(rho.expectation(&par));
                Ok(())
            })?;
            self.fock_nominal = Some(run);
        }
        Ok(self.fock_nominal.as_ref().unwrap())
    }

    fn compare(&self, init: InitialState, t_final: f64) -> Result<CompareRun> {
        let p = self.cfg.params;
        let rho0 = init.prepare(&p.basis()?)?;
        run_compare(
            &p,
            &rho0,
            ReducedInit::Auto,
            &self.cfg.integrator(t_final)?,
            self.cfg.transient_end,
        )
    }

    fn vacuum_compare(&mut self) -> Result<&(CompareRun, f64)> {
        if self.vacuum_compare.is_none() {
            let start = Instant::now();
            let run = self.compare(InitialState::Vacuum, self.cfg.short_horizon)?;
            self.vacuum_compare = Some((run, start.elapsed().as_secs_f64()));
        }
        Ok(self.vacuum_compare.as_ref().unwrap())
    }

    fn superposition_compare(&mut self) -> Result<&CompareRun> {
        if self.superposition_compare.is_none() {
            self.superposition_compare =
                Some(self.compare(InitialState::Superposition, self.cfg.long_horizon)?);
        }
        Ok(self.superposition_compare.as_ref().unwrap())
    }
}

fn lyapunov(runs: &mut Runs, b: &mut Builder) -> Result<()> {
    let kappa = runs.cfg.params.kappa;
    let run = runs.vacuum_nominal()?;
    let t = &run.series.times;
    let v = run.series.column("V").expect("V column");
    let v0 = v[0];
    // worst ratio V(t) / (V(0)e^{−2κt}); the bound asks for ≤ 1 + 1e−6
    let worst = t
        .iter()
        .zip(v)
        .map(|(t, v)| v / (v0 * (-2.0 * kappa * t).exp()))
        .fold(f64::NEG_INFINITY, f64::max);
    let max_increase = v
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let fit = decay_rate_fit(t, v, (0.0, 1.0 / kappa))?;
    b.add("max V(t)/(V(0)exp(-2kt))", worst, at_most(1.0 + 1e-6))
        .add("early fitted rate / kappa", fit.rate / kappa, at_least(2.0))
        .add("max V increment", max_increase, at_most(1e-10));
    Ok(())
}

fn convergence(runs: &mut Runs, b: &mut Builder) -> Result<()> {
    let run = runs.vacuum_nominal()?;
    let pop = *run.series.column("subspace_population").unwrap().last().unwrap();
    let v = run.series.column("V").unwrap();
    b.add("subspace population at t=10", pop, at_least(0.999))
        .add("V(10)/V(0)", v.last().unwrap() / v[0], at_most(1e-6));
    Ok(())
}

fn moments(runs: &mut Runs, b: &mut Builder) -> Result<()> {
    let alpha = runs.cfg.params.alpha;
    let kappa = runs.cfg.params.kappa;
    let p = runs.cfg.nominal();
    let model = p.model()?;
    let rho0 = InitialState::Fock(6).prepare(&p.basis()?)?;
    let drho0 = model.apply(rho0.matrix());
    let n_op = number_op(p.space()?);
    let run = runs.fock_nominal()?;
    for (nu, name, series) in [(1u32, "N", &run.n1), (2, "N^2", &run.n2)] {
        let bound = moment_bound(alpha, nu)?;
        let m0 = moment(&rho0, nu);
        let peak = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let op = if nu == 1 { n_op.clone() } else { n_op.dot(&n_op) };
        let slope = linalg::trace(&drho0.dot(op.matrix())).re;
        b.add(&format!("<{name}>(0) - threshold"), m0 - bound.threshold, Bound::Above { min: 0.0 })
            .add(&format!("max_t <{name}>(t) / <{name}>(0)"), peak / m0, at_most(1.0 + 1e-6))
            .add(&format!("d<{name}>/dt at t=0 / kappa"), slope / kappa, Bound::Below { max: 0.0 });
    }
    Ok(())
}

fn max_drift(times: &[f64], values: &[f64], t_max: f64) -> f64 {
    times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t <= t_max + 1e-9)
        .map(|(_, v)| (v - values[0]).abs())
        .fold(0.0, f64::max)
}

fn parity(runs: &mut Runs, b: &mut Builder) -> Result<()> {
    let vac = runs.vacuum_nominal()?;
    let d_vac = max_drift(&vac.series.times, vac.series.column("parity").unwrap(), 10.0);
    let fock = runs.fock_nominal()?;
    let d_fock = max_drift(&fock.times, &fock.parity, 10.0);
    b.add("max |<parity>(t) - <parity>(0)| from vacuum", d_vac, at_most(1e-6))
        .add("max |<parity>(t) - <parity>(0)| from |6>", d_fock, at_most(1e-6));
    Ok(())
}

fn first_component(cfg: &CheckConfig, b: &mut Builder) -> Result<()> {
    let mut r = rng(cfg.seed);
    let mut worst = 0.0f64;
    for alpha in [0.5, 1.0, 2.0] {
        let basis = ModelParams { alpha, ..cfg.params }.basis()?;
        let a = annihilation(basis.space());
        let pc = basis.projector();
        let slow = SlowGenerator::new(alpha, 1.0)?;
        for _ in 0..100 {
            let q = QubitDensity::new(random_qubit(&mut r))?;
            let rho = embed_to_fock(&q, &basis).to_operator();
            let lhs = pc.dot(&dissipator(&a, &rho)?).dot(&pc);
            let rhs = basis.embed_matrix(&slow.dissipator(q.entries())) * (alpha * alpha);
            worst = worst.max(linalg::frobenius(&(lhs.matrix() - &rhs)));
        }
    }
    b.add("max ||P L_a(rho) P - a^2 L_X(rho)||", worst, at_most(1e-9));
    Ok(())
}

fn correction(cfg: &CheckConfig, b: &mut Builder) -> Result<()> {
    let p = cfg.params;
    let q = quantum_block_system(p.space()?, p.alpha, p.kappa, p.epsilon)?;
    let red = reduce_quantum(&q)?;
    b.add("||Q||_F (dual)", red.q_dual_norm, at_most(1e-6))
        .add("kernel dimension", red.kernel_dim as f64, Bound::Within { min: 4.0, max: 4.0 })
        .add("singular-value gap ratio", red.gap_ratio, at_least(1e3));
    Ok(())
}

fn linear_reduction(cfg: &CheckConfig, b: &mut Builder) -> Result<()> {
    let (m, n, eps) = (4, 30, 1e-3);
    let mut r = rng(cfg.seed ^ 0x5eed);
    let (mut worst_q, mut worst_traj) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let sys = random_block_system(m, n, eps, &mut r)?;
        let direct = reduce_direct(&sys)?;
        let dual = reduce_dual(&sys, &conserved_functionals(&sys.nominal(), m)?)?;
        let dq = linalg::frobenius_real(&(&dual.q - &direct.q)) / linalg::frobenius_real(&direct.q);
        worst_q = worst_q.max(dq);

        let x1 = Array1::from_shape_fn(m, |_| r.sample::<f64, _>(StandardNormal));
        let mut x0 = Array1::zeros(m + n);
        x0.slice_mut(s![..m]).assign(&x1);
        let (dt, horizon) = (0.05, 1.0 / eps);
        let stride = usize::MAX;
        let full = integrate_linear(&sys.full_matrix(), &x0, dt, horizon, stride)?;
        let slow = integrate_linear(&direct.generator, &x1, dt, horizon, stride)?;
        let xf = full.last().unwrap().1.slice(s![..m]).to_owned();
        let xs = &slow.last().unwrap().1;
        let d = &xf - xs;
        worst_traj = worst_traj.max(d.dot(&d).sqrt() / xf.dot(&xf).sqrt());
    }
    b.add("max relative ||Q_dual - Q_direct||_F", worst_q, at_most(1e-9))
        .add("max relative slow-vs-full error at t=1/eps", worst_traj, at_most(10.0 * eps));
    Ok(())
}

fn plateau(runs: &mut Runs, b: &mut Builder) -> Result<()> {
    let (run, seconds) = runs.vacuum_compare()?;
    b.add(
        "post-transient mean 1-F",
        run.summary.infidelity_plateau,
        Bound::Within { min: 1e-5, max: 1e-3 },
    )
    .add("comparison runtime [s]", *seconds, at_most(120.0));
    Ok(())
}

fn offset(runs: &mut Runs, b: &mut Builder) -> Result<()> {
    let eps = runs.cfg.params.epsilon;
    let (run, _) = runs.vacuum_compare()?;
    b.add(
        "|sigma_z offset| / eps",
        run.summary.sigma_z_offset.abs() / eps,
        Bound::Within { min: 0.1, max: 10.0 },
    );
    Ok(())
}

fn bit_flip(runs: &mut Runs, b: &mut Builder) -> Result<()> {
    let window = (runs.cfg.transient_end, runs.cfg.long_horizon);
    let run = runs.superposition_compare()?;
    let full = fit_column(&run.full.series, "sigma_x", window)?;
    let reduced = fit_column(&run.reduced.series, "sigma_x_s", window)?;
    b.add("relative rate mismatch full vs reduced", relative(full.rate, reduced.rate), at_most(0.06))
        .add(
            "relative mismatch reduced rate vs r_x",
            relative(reduced.rate, run.reduced.rates.r_x),
            at_most(1e-6),
        );
    Ok(())
}

fn phase_flip(runs: &mut Runs, b: &mut Builder) -> Result<()> {
    let (lo, hi) = runs.cfg.drift_window;
    let t_start = runs.cfg.transient_end;
    let run = runs.superposition_compare()?;
    let t = &run.series.times;
    let zf = run.full.series.column("sigma_z").unwrap();
    let zr = run.reduced.series.column("z").unwrap();
    let mut worst = 0.0f64;
    let mut min_full = f64::INFINITY;
    for k in 0..t.len() {
        if t[k] >= t_start {
            min_full = min_full.min(zf[k]);
        }
        if t[k] >= lo && t[k] <= hi + 1e-9 {
            worst = worst.max(relative(zf[k], zr[k]));
        }
    }
    let z_inf = run.reduced.rates.z_inf;
    let last = zf.len() - 1;
    b.add("min post-transient <sigma_z>", min_full, Bound::Above { min: 0.0 })
        .add("max relative |z_full - z_reduced| on window", worst, at_most(0.1))
        .add(
            "final distance to z_inf shrinks (|z(T)-z_inf| - |z(t0)-z_inf|)",
            (zf[last] - z_inf).abs() - (zf[0] - z_inf).abs(),
            Bound::Below { max: 0.0 },
        );
    Ok(())
}

fn integrator_order(cfg: &CheckConfig, b: &mut Builder) -> Result<()> {
    let p = cfg.params;
    let model = p.model()?;
    let rho0 = InitialState::Vacuum.prepare(&p.basis()?)?;
    let stride = usize::MAX;
    let final_state = |dt: f64, scheme: Scheme| -> Result<DensityMatrix> {
        let ic = IntegratorConfig::new(dt, 1.0, scheme)?.with_record_stride(stride)?;
        evolve_with(&model, &rho0, &ic, |_, _, _| Ok(()))
    };
    let reference = final_state(2.5e-4, Scheme::Rk4)?;
    let coarse = trace_distance(&final_state(2e-3, Scheme::KrausEuler)?, &reference)?;
    let fine = trace_distance(&final_state(1e-3, Scheme::KrausEuler)?, &reference)?;
    b.add("error(dt=2e-3)/error(dt=1e-3)", coarse / fine, Bound::Within { min: 1.7, max: 2.3 });
    Ok(())
}

fn drive_form(cfg: &CheckConfig, b: &mut Builder) -> Result<()> {
    let p = cfg.params;
    let space = p.space()?;
    let l_form = ModelParams { form: ModelForm::LForm, ..p }.model()?;
    let d_form = ModelParams { form: ModelForm::DriveForm, ..p }.model()?;
    let mut r = rng(cfg.seed.wrapping_add(13));
    let mut worst = 0.0f64;
    for k in 0..100 {
        // alternate between low-lying and full-support states
        let support = if k % 2 == 0 { 10 } else { space.n_max() };
        let rho = random_density(space, support, &mut r);
        let d = l_form.apply(rho.matrix()) - d_form.apply(rho.matrix());
        worst = worst.max(linalg::frobenius(&d));
    }
    b.add("max ||rhs_L - rhs_drive||_F", worst, at_most(1e-9));
    Ok(())
}

/// Runs the selected criteria (all of them for an empty selection) in the
/// canonical order.
pub fn run_checks(cfg: &CheckConfig, selection: &[Criterion]) -> Vec<CheckReport> {
    let mut runs = Runs::new(cfg);
    let mut out = Vec::new();
    for c in Criterion::ALL {
        if !selection.is_empty() && !selection.contains(&c) {
            continue;
        }
        let start = Instant::now();
        let mut b = Builder::new();
        let res = match c {
            Criterion::LyapunovDecay => lyapunov(&mut runs, &mut b),
            Criterion::Convergence => convergence(&mut runs, &mut b),
            Criterion::MomentBound => moments(&mut runs, &mut b),
            Criterion::ParityConservation => parity(&mut runs, &mut b),
            Criterion::FirstComponent => first_component(cfg, &mut b),
            Criterion::CorrectionVanishes => correction(cfg, &mut b),
            Criterion::LinearReduction => linear_reduction(cfg, &mut b),
            Criterion::InfidelityPlateau => plateau(&mut runs, &mut b),
            Criterion::SigmaZOffset => offset(&mut runs, &mut b),
            Criterion::BitFlipRate => bit_flip(&mut runs, &mut b),
            Criterion::PhaseFlipDrift => phase_flip(&mut runs, &mut b),
            Criterion::IntegratorOrder => integrator_order(cfg, &mut b),
            Criterion::DriveForm => drive_form(cfg, &mut b),
        };
        let seconds = start.elapsed().as_secs_f64();
        let mut report = b.finish(c, seconds);
        if let Err(e) = res {
            report.passed = false;
            report.error = Some(e.to_string());
        }
        log::info!("{report}");
        out.push(report);
    }
    out
}

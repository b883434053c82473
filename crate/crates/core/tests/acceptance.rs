use std::io::Write;

use twophoton::analysis::moment_bound;
use twophoton::cat_qubit::bloch_rates;
use twophoton::checks::{run_checks, Bound, CheckConfig, CheckReport, Criterion};

/// Bounds every criterion must be reported against, restated here so that a
/// loosened bound in the library is caught.
fn expected() -> Vec<(Criterion, &'static str, Bound)> {
    use Bound::*;
    use Criterion::*;
    vec![
        (LyapunovDecay, "max V(t)/(V(0)exp(-2kt))", AtMost { max: 1.0 + 1e-6 }),
        (LyapunovDecay, "early fitted rate / kappa", AtLeast { min: 2.0 }),
        (LyapunovDecay, "max V increment", AtMost { max: 1e-10 }),
        (Convergence, "subspace population at t=10", AtLeast { min: 0.999 }),
        (Convergence, "V(10)/V(0)", AtMost { max: 1e-6 }),
        (MomentBound, "<N>(0) - threshold", Above { min: 0.0 }),
        (MomentBound, "max_t <N>(t) / <N>(0)", AtMost { max: 1.0 + 1e-6 }),
        (MomentBound, "d<N>/dt at t=0 / kappa", Below { max: 0.0 }),
        (MomentBound, "<N^2>(0) - threshold", Above { min: 0.0 }),
        (MomentBound, "max_t <N^2>(t) / <N^2>(0)", AtMost { max: 1.0 + 1e-6 }),
        (MomentBound, "d<N^2>/dt at t=0 / kappa", Below { max: 0.0 }),
        (ParityConservation, "max |<parity>(t) - <parity>(0)| from vacuum", AtMost { max: 1e-6 }),
        (ParityConservation, "max |<parity>(t) - <parity>(0)| from |6>", AtMost { max: 1e-6 }),
        (FirstComponent, "max ||P L_a(rho) P - a^2 L_X(rho)||", AtMost { max: 1e-9 }),
        (CorrectionVanishes, "||Q||_F (dual)", AtMost { max: 1e-6 }),
        (CorrectionVanishes, "kernel dimension", Within { min: 4.0, max: 4.0 }),
        (CorrectionVanishes, "singular-value gap ratio", AtLeast { min: 1e3 }),
        (LinearReduction, "max relative ||Q_dual - Q_direct||_F", AtMost { max: 1e-9 }),
        (LinearReduction, "max relative slow-vs-full error at t=1/eps", AtMost { max: 1e-2 }),
        (InfidelityPlateau, "post-transient mean 1-F", Within { min: 1e-5, max: 1e-3 }),
        (InfidelityPlateau, "comparison runtime [s]", AtMost { max: 120.0 }),
        (SigmaZOffset, "|sigma_z offset| / eps", Within { min: 0.1, max: 10.0 }),
        (BitFlipRate, "relative rate mismatch full vs reduced", AtMost { max: 0.06 }),
        (BitFlipRate, "relative mismatch reduced rate vs r_x", AtMost { max: 1e-6 }),
        (PhaseFlipDrift, "min post-transient <sigma_z>", Above { min: 0.0 }),
        (PhaseFlipDrift, "max relative |z_full - z_reduced| on window", AtMost { max: 0.1 }),
        (
            PhaseFlipDrift,
            "final distance to z_inf shrinks (|z(T)-z_inf| - |z(t0)-z_inf|)",
            Below { max: 0.0 },
        ),
        (IntegratorOrder, "error(dt=2e-3)/error(dt=1e-3)", Within { min: 1.7, max: 2.3 }),
        (DriveForm, "max ||rhs_L - rhs_drive||_F", AtMost { max: 1e-9 }),
    ]
}

fn holds(bound: Bound, v: f64) -> bool {
    match bound {
        Bound::AtMost { max } => v <= max,
        Bound::AtLeast { min } => v >= min,
        Bound::Below { max } => v < max,
        Bound::Above { min } => v > min,
        Bound::Within { min, max } => v >= min && v <= max,
    }
}

fn report_line(line: &str) {
    // written straight to the process stderr so it survives output capture
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
}

#[test]
fn reduced_model_constants() {
    // cat normalisations at α = 1
    let gp2 = 2.0 * (1.0 + (-2.0f64).exp());
    let gm2 = 2.0 * (1.0 - (-2.0f64).exp());
    let z_inf = (gp2 * gp2 - gm2 * gm2) / (gp2 * gp2 + gm2 * gm2);
    assert!((z_inf - 0.26580).abs() < 5e-6);
    let eps = 0.01;
    let r = bloch_rates(1.0, eps).unwrap();
    assert!((r.z_inf - z_inf).abs() < 1e-12);
    let r_x = eps * (gp2 - gm2).powi(2) / (2.0 * gp2 * gm2);
    let r_z = eps * (gp2 * gp2 + gm2 * gm2) / (gp2 * gm2);
    assert!((r.r_x - r_x).abs() < 1e-15);
    assert!((r.r_z - r_z).abs() < 1e-15);
}

#[test]
fn moment_thresholds() {
    // ν = 1: excess −x² + 4x + 6, maximal at x = 2
    let b1 = moment_bound(1.0, 1).unwrap();
    assert!((b1.mu - 10.0).abs() < 1e-9);
    assert!((b1.threshold - 10f64.sqrt()).abs() < 1e-9);
    // ν = 2: excess 4(x+1)(−x² + 2x + 3) + 2x³, stationary at (2 + √34)/3
    let x = (2.0 + 34f64.sqrt()) / 3.0;
    let mu = 4.0 * (x + 1.0) * (-x * x + 2.0 * x + 3.0) + 2.0 * x.powi(3);
    let b2 = moment_bound(1.0, 2).unwrap();
    assert!((b2.mu - mu).abs() < 1e-8);
    assert!((b2.threshold - (mu / 2.0).powf(2.0 / 3.0)).abs() < 1e-8);
}

#[test]
fn acceptance_battery() {
    let cfg = CheckConfig::default();
    assert_eq!(cfg.params.n_max, 40);
    assert_eq!((cfg.params.alpha, cfg.params.kappa, cfg.params.epsilon), (1.0, 1.0, 0.01));
    assert_eq!(cfg.dt, 1e-3);

    let reports: Vec<CheckReport> = run_checks(&cfg, &[]);
    assert_eq!(reports.len(), Criterion::ALL.len());
    report_line("acceptance:");
    for r in &reports {
        report_line(&format!("  {r}"));
    }

    let mut failures = Vec::new();
    for r in &reports {
        if let Some(e) = &r.error {
            failures.push(format!("{}: {e}", r.criterion));
        }
    }
    for (criterion, quantity, bound) in expected() {
        let report = reports.iter().find(|r| r.criterion == criterion).unwrap();
        match report.measurement(quantity) {
            None => failures.push(format!("{criterion}: missing {quantity}")),
            Some(m) => {
                if m.bound != bound {
                    failures.push(format!("{criterion}: {quantity} reported against {} not {bound}", m.bound));
                }
                if !holds(bound, m.value) {
                    failures.push(format!("{criterion}: {quantity} = {:e} violates {bound}", m.value));
                }
            }
        }
    }
    for r in &reports {
        let listed = expected().iter().filter(|e| e.0 == r.criterion).count();
        if r.measurements.len() != listed {
            failures.push(format!("{}: unexpected measurement count {}", r.criterion, r.measurements.len()));
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

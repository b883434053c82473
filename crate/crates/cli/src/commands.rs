use std::collections::BTreeMap;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};

use twophoton::cat_qubit::{reduced_initial_state, BlochVector};
use twophoton::checks::{run_checks, CheckReport};
use twophoton::experiment::{fit_column, run_compare, run_full, run_reduced, Series};
use twophoton::linalg;
use twophoton::reduction::{conserved_functionals, read_block_system, reduce_direct, reduce_dual};

use crate::config::{ScenarioConfig, TheoremConfig};
use crate::error::CliError;
use crate::output::{resolve, sibling, write_csv, write_json};

pub struct Context<'a> {
    pub config_path: Option<&'a Path>,
    pub output_dir: Option<&'a Path>,
}

impl Context<'_> {
    fn base_dir(&self) -> PathBuf {
        self.config_path
            .and_then(Path::parent)
            .map(Path::to_path_buf)
            .unwrap_or_default()
    }
}

fn fits(series: &Series, names: &[String], window: (f64, f64)) -> BTreeMap<String, Value> {
    names
        .iter()
        .map(|n| {
            let v = match fit_column(series, n, window) {
                Ok(fit) => serde_json::to_value(fit).unwrap_or(Value::Null),
                Err(e) => json!({ "error": e.to_string() }),
            };
            (n.clone(), v)
        })
        .collect()
}

fn finals(series: &Series, names: &[String]) -> BTreeMap<String, f64> {
    names
        .iter()
        .filter_map(|n| series.column(n).and_then(|c| c.last()).map(|v| (n.clone(), *v)))
        .collect()
}

#[derive(Serialize)]
struct Artifacts {
    csv: Vec<PathBuf>,
    json: PathBuf,
}

pub fn simulate(cfg: &ScenarioConfig, ctx: &Context) -> Result<Value, CliError> {
    cfg.validate()?;
    let rho0 = cfg.initial_density(&ctx.base_dir())?;
    let start = Instant::now();
    let run = run_full(&cfg.model, &rho0, &cfg.integrator.build()?)?;
    let names = cfg.observables();
    let csv_path = resolve(ctx.output_dir, cfg.outputs.csv_path.as_ref(), "simulate.csv");
    let json_path = resolve(ctx.output_dir, cfg.outputs.json_summary_path.as_ref(), "simulate.json");
    write_csv(&csv_path, &run.series, Some(&names))?;
    let summary = json!({
        "command": "simulate",
        "seed": cfg.seed,
        "config": cfg,
        "samples": run.series.len(),
        "final": finals(&run.series, &names),
        "fit_window": cfg.fit_window(),
        "fits": fits(&run.series, &names, cfg.fit_window()),
        "final_trace": run.final_state.trace(),
        "runtime_seconds": start.elapsed().as_secs_f64(),
        "artifacts": Artifacts { csv: vec![csv_path], json: json_path.clone() },
    });
    write_json(&json_path, &summary)?;
    Ok(summary)
}

pub fn reduced(cfg: &ScenarioConfig, ctx: &Context) -> Result<Value, CliError> {
    cfg.validate()?;
    let rho0 = cfg.initial_density(&ctx.base_dir())?;
    let q0 = reduced_initial_state(&rho0, &cfg.model.basis()?, cfg.reduced_init)?;
    let run = run_reduced(&cfg.model, &q0, &cfg.integrator.build()?)?;
    let csv_path = resolve(ctx.output_dir, cfg.outputs.csv_path.as_ref(), "reduced.csv");
    let json_path = resolve(ctx.output_dir, cfg.outputs.json_summary_path.as_ref(), "reduced.json");
    write_csv(&csv_path, &run.series, None)?;
    let b0: BlochVector = q0.bloch();
    let summary = json!({
        "command": "reduced",
        "seed": cfg.seed,
        "config": cfg,
        "initial_bloch": b0,
        "rates": run.rates,
        "samples": run.series.len(),
        "final": finals(&run.series, &run.series.names),
        "artifacts": Artifacts { csv: vec![csv_path], json: json_path.clone() },
    });
    write_json(&json_path, &summary)?;
    Ok(summary)
}

pub fn compare(cfg: &ScenarioConfig, ctx: &Context) -> Result<Value, CliError> {
    cfg.validate()?;
    let rho0 = cfg.initial_density(&ctx.base_dir())?;
    let start = Instant::now();
    let run = run_compare(
        &cfg.model,
        &rho0,
        cfg.reduced_init,
        &cfg.integrator.build()?,
        cfg.transient_end,
    )?;
    let runtime = start.elapsed().as_secs_f64();
    let csv_path = resolve(ctx.output_dir, cfg.outputs.csv_path.as_ref(), "compare.csv");
    let json_path = resolve(ctx.output_dir, cfg.outputs.json_summary_path.as_ref(), "compare.json");
    let full_path = sibling(&csv_path, "full");
    let reduced_path = sibling(&csv_path, "reduced");
    write_csv(&csv_path, &run.series, None)?;
    write_csv(&full_path, &run.full.series, Some(&cfg.observables()))?;
    write_csv(&reduced_path, &run.reduced.series, None)?;

    let window = cfg.fit_window();
    let full_fit = fits(&run.full.series, &["sigma_x".to_string()], window);
    let reduced_fit = fits(&run.reduced.series, &["sigma_x_s".to_string()], window);
    let summary = json!({
        "command": "compare",
        "seed": cfg.seed,
        "config": cfg,
        "summary": run.summary,
        "fit_window": window,
        "sigma_x_fit_full": full_fit["sigma_x"],
        "sigma_x_fit_reduced": reduced_fit["sigma_x_s"],
        "samples": run.series.len(),
        "runtime_seconds": runtime,
        "artifacts": Artifacts { csv: vec![csv_path, full_path, reduced_path], json: json_path.clone() },
    });
    write_json(&json_path, &summary)?;
    Ok(summary)
}

#[derive(Serialize)]
struct TheoremSummary<'a> {
    command: &'static str,
    seed: u64,
    config: &'a TheoremConfig,
    passed: bool,
    failed: Vec<String>,
    reports: &'a [CheckReport],
}

pub fn theorem_check(cfg: &TheoremConfig, ctx: &Context) -> Result<Value, CliError> {
    cfg.checks.params.validate()?;
    let reports = run_checks(&cfg.checks, &cfg.criteria);
    for r in &reports {
        println!("{r}");
    }
    let failed: Vec<String> = reports.iter().filter(|r| !r.passed).map(|r| r.criterion.to_string()).collect();
    let summary = TheoremSummary {
        command: "theorem-check",
        seed: cfg.checks.seed,
        config: cfg,
        passed: failed.is_empty(),
        failed: failed.clone(),
        reports: &reports,
    };
    let json_path = resolve(ctx.output_dir, cfg.outputs.json_summary_path.as_ref(), "theorem_check.json");
    write_json(&json_path, &summary)?;
    let value = serde_json::to_value(&summary)?;
    if failed.is_empty() {
        Ok(value)
    } else {
        Err(CliError::ChecksFailed(failed.len()))
    }
}

fn spectrum(m: &ndarray::Array2<f64>) -> Result<Vec<[f64; 2]>, CliError> {
    let mut ev: Vec<[f64; 2]> = linalg::eigenvalues(m)?.iter().map(|z| [z.re, z.im]).collect();
    ev.sort_by(|a, b| b[0].total_cmp(&a[0]).then(b[1].total_cmp(&a[1])));
    Ok(ev)
}

fn rows(m: &ndarray::Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

pub fn reduce_linear(matrix_file: &Path, ctx: &Context) -> Result<Value, CliError> {
    let file = std::fs::File::open(matrix_file)
        .map_err(|e| CliError::Validation(format!("cannot open {}: {e}", matrix_file.display())))?;
    let sys = read_block_system(BufReader::new(file))?;
    let direct = reduce_direct(&sys)?;
    let set = conserved_functionals(&sys.nominal(), sys.m())?;
    let dual = reduce_dual(&sys, &set)?;
    let diff = linalg::frobenius_real(&(&dual.q - &direct.q));
    let scale = linalg::frobenius_real(&direct.q);
    let summary = json!({
        "command": "reduce-linear",
        "input": matrix_file,
        "m": sys.m(),
        "n": sys.n(),
        "epsilon": sys.epsilon,
        "q_direct": rows(&direct.q),
        "q_dual": rows(&dual.q),
        "q_relative_difference": if scale > 0.0 { diff / scale } else { diff },
        "generator": rows(&direct.generator),
        "fast_spectrum": spectrum(&sys.a2)?,
        "generator_spectrum": spectrum(&direct.generator)?,
        "spectral_gap": sys.spectral_gap()?,
        "fast_condition": sys.fast_condition()?,
        "functional_residuals": set.functionals.iter().map(|f| f.residual(&sys)).collect::<Vec<_>>(),
        "kernel_dim": set.kernel_dim,
        "singular_values": set.singular_values.to_vec(),
        "gap_ratio": set.gap_ratio,
        "gram_determinant": set.gram_determinant()?,
    });
    match ctx.output_dir {
        Some(_) => write_json(&resolve(ctx.output_dir, None, "reduce_linear.json"), &summary)?,
        None => println!("{}", serde_json::to_string_pretty(&summary)?),
    }
    Ok(summary)
}

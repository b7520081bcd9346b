//! Configuration, dispatch and output for the `kdvb` command.

pub mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use kdvb_core::experiments::{
    h1_bound_check, inviscid_sweeps, rate_sweep, rough_initial_data, scaling_check,
    smooth_initial_data, soliton_initial_data, SweepReport,
};
use kdvb_core::imethod::{
    denergy_identity_residual, dyadic_ladder, sample_bound, BoundReport, IMultiplierSpec,
};
use kdvb_core::norms::{energy_ledger, l2_dissipation_residual};
use kdvb_core::output::fmt17;
use kdvb_core::propagator::ModelParams;
use kdvb_core::sharpness::{exponent_sweep, BilinearOptions};
use kdvb_core::spectral::{dealias, forward_transform, inverse_transform, GridSpec, SpectralField};
use kdvb_core::{Error, Result};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

pub use config::{parse_config, InitialData, RunConfig, Subcommand};

/// Process exit status for an error: 2 configuration, 3 divergence,
/// 4 resolution, 1 anything else.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Parameter { .. } | Error::Contract(_) | Error::Json(_) => 2,
        Error::Divergence { .. } => 3,
        Error::Resolution(_) => 4,
        _ => 1,
    }
}

fn error_kind(err: &Error) -> &'static str {
    match err {
        Error::Contract(_) => "contract",
        Error::Parameter { .. } => "parameter",
        Error::Resonance(_) => "resonance",
        Error::Divergence { .. } => "divergence",
        Error::Resolution(_) => "resolution",
        Error::Config(_) => "config",
        Error::Range(_) => "range",
        Error::Format(_) => "format",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    }
}

/// Machine-readable error record printed on failure.
pub fn error_json(err: &Error) -> String {
    json!({
        "error": error_kind(err),
        "message": err.to_string(),
        "exit_code": exit_code(err),
    })
    .to_string()
}

/// Files written by one run.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub output: PathBuf,
    pub manifest: PathBuf,
}

/// Result payload plus the numbers worth surfacing in the manifest.
struct Outcome {
    body: String,
    floors: Vec<f64>,
    summary: Value,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Runs one resolved configuration and writes its output and manifest.
pub fn run(cfg: &RunConfig) -> Result<Artifacts> {
    let start = Instant::now();
    let outcome = match cfg.subcommand {
        Subcommand::Solve => run_solve(cfg)?,
        Subcommand::Energy => run_energy(cfg)?,
        Subcommand::Inviscid => run_inviscid(cfg)?,
        Subcommand::Rate => run_rate(cfg)?,
        Subcommand::H1Bound => run_h1(cfg)?,
        Subcommand::Scaling => run_scaling(cfg)?,
        Subcommand::Sharpness => run_sharpness(cfg)?,
        Subcommand::ImethodBounds => run_bounds(cfg)?,
    };
    let output = cfg.out_path();
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(&output, outcome.body)?;
    let manifest = json!({
        "config": cfg,
        "versions": {
            "kdvb-cli": env!("CARGO_PKG_VERSION"),
        },
        "threads": rayon::current_num_threads(),
        "wall_time_seconds": start.elapsed().as_secs_f64(),
        "floors": outcome.floors,
        "summary": outcome.summary,
    });
    let manifest_file = manifest_path(&output);
    fs::write(
        &manifest_file,
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(Artifacts {
        output,
        manifest: manifest_file,
    })
}

/// The configured initial datum, dealiased, on `grid`.
pub fn initial_data(cfg: &RunConfig, grid: &GridSpec) -> Result<SpectralField> {
    match cfg.initial.clone().unwrap_or_default() {
        InitialData::Gaussian { width, l2_norm } => Ok(dealias(&forward_transform(
            &smooth_initial_data(grid, width, l2_norm)?,
        )?)),
        InitialData::Soliton { c, x0 } => {
            let x0 = x0.unwrap_or(0.5 * grid.box_length());
            Ok(dealias(&forward_transform(&soliton_initial_data(
                c, x0, grid,
            )?)?))
        }
        InitialData::Rough { decay, l2_norm } => rough_initial_data(grid, decay, l2_norm, cfg.seed),
    }
}

fn config_comment(cfg: &RunConfig) -> Result<String> {
    Ok(format!("# config {}\n", serde_json::to_string(cfg)?))
}

fn json_body<T: Serialize>(cfg: &RunConfig, key: &str, value: &T) -> Result<String> {
    let mut doc = serde_json::Map::new();
    doc.insert("config".into(), serde_json::to_value(cfg)?);
    doc.insert(key.into(), serde_json::to_value(value)?);
    Ok(serde_json::to_string_pretty(&Value::Object(doc))? + "\n")
}

fn run_solve(cfg: &RunConfig) -> Result<Outcome> {
    let solver = cfg.solver()?;
    let u0 = initial_data(cfg, &solver.grid)?;
    let traj = kdvb_core::evolve::solve_spectral(&u0, &solver)?;
    let u = inverse_transform(traj.last());
    let mut body = config_comment(cfg)?;
    body.push_str("x,u\n");
    for (x, v) in solver.grid.points().iter().zip(u.values()) {
        body.push_str(&format!("{},{}\n", fmt17(*x), fmt17(*v)));
    }
    Ok(Outcome {
        body,
        floors: Vec::new(),
        summary: json!({
            "t_final": traj.times.last(),
            "snapshots": traj.len(),
            "l2_norm": traj.last().l2_norm(),
        }),
    })
}

fn run_energy(cfg: &RunConfig) -> Result<Outcome> {
    let solver = cfg.solver()?;
    let block = cfg.energy.clone().unwrap_or_default();
    let u0 = initial_data(cfg, &solver.grid)?;
    let traj = kdvb_core::evolve::solve_spectral(&u0, &solver)?;
    let ledger = energy_ledger(&traj);
    let identity = if block.identity {
        let spec = IMultiplierSpec::new(block.cutoff_n, block.s)?;
        Some(denergy_identity_residual(&traj, &spec)?)
    } else {
        None
    };
    let mut buf = config_comment(cfg)?.into_bytes();
    ledger.write_csv(&mut buf)?;
    Ok(Outcome {
        body: String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))?,
        floors: Vec::new(),
        summary: json!({
            "l2_residual": l2_dissipation_residual(&traj),
            "modified_energy_identity": identity,
        }),
    })
}

fn sweep_outcome(cfg: &RunConfig, reports: Vec<SweepReport>) -> Result<Outcome> {
    let floors = reports
        .iter()
        .flat_map(|r| r.floors.iter().copied())
        .collect();
    let summary = json!(reports
        .iter()
        .map(|r| json!({"s": r.s, "strictly_decreasing": r.strictly_decreasing(), "spread": r.spread(), "fit": r.fit}))
        .collect::<Vec<_>>());
    Ok(Outcome {
        body: json_body(cfg, "reports", &reports)?,
        floors,
        summary,
    })
}

fn run_inviscid(cfg: &RunConfig) -> Result<Outcome> {
    let solver = cfg.solver()?;
    let block = cfg.inviscid.clone().unwrap_or_default();
    let u0 = initial_data(cfg, &solver.grid)?;
    let reports = inviscid_sweeps(&u0, cfg.alpha, &block.epsilons, &block.s, &solver)?;
    sweep_outcome(cfg, reports)
}

fn run_rate(cfg: &RunConfig) -> Result<Outcome> {
    let solver = cfg.solver()?;
    let block = cfg
        .rate
        .clone()
        .ok_or_else(|| Error::Config("missing `rate` block".into()))?;
    let u0 = initial_data(cfg, &solver.grid)?;
    let seed = matches!(cfg.initial, Some(InitialData::Rough { .. })).then_some(cfg.seed);
    let report = rate_sweep(&u0, cfg.alpha, &block.epsilons, seed, &solver)?;
    sweep_outcome(cfg, vec![report])
}

fn run_h1(cfg: &RunConfig) -> Result<Outcome> {
    let solver = cfg.solver()?;
    let block = cfg
        .h1_bound
        .clone()
        .ok_or_else(|| Error::Config("missing `h1_bound` block".into()))?;
    let phi = inverse_transform(&initial_data(cfg, &solver.grid)?);
    let report = h1_bound_check(&phi, cfg.alpha, &block.epsilons, &solver)?;
    sweep_outcome(cfg, vec![report])
}

fn run_scaling(cfg: &RunConfig) -> Result<Outcome> {
    let solver = cfg.solver()?;
    let m = cfg.scaling.as_ref().map_or(1, |b| b.lambda_exp);
    let phi = inverse_transform(&initial_data(cfg, &solver.grid)?);
    let distance = scaling_check(&phi, &solver.params, m, &solver)?;
    Ok(Outcome {
        body: json_body(cfg, "distance", &distance)?,
        floors: Vec::new(),
        summary: json!({ "distance": distance, "lambda": 0.5f64.powi(m as i32) }),
    })
}

fn run_sharpness(cfg: &RunConfig) -> Result<Outcome> {
    let block = cfg.sharpness.clone().unwrap_or_default();
    let regime = block
        .regime
        .ok_or_else(|| Error::Config("sharpness regime unresolved".into()))?;
    let opts = BilinearOptions {
        delta: block.delta,
        cells: block.cells,
        ..BilinearOptions::default()
    };
    let report = exponent_sweep(regime, cfg.alpha, &block.s_values, &block.n_ladder, &opts)?;
    let mut buf = config_comment(cfg)?.into_bytes();
    report.write_csv(&mut buf)?;
    Ok(Outcome {
        body: String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))?,
        floors: Vec::new(),
        summary: json!({
            "crossover": report.crossover,
            "critical_index": kdvb_core::experiments::critical_index(cfg.alpha)?,
            "slopes": report.slopes,
        }),
    })
}

fn run_bounds(cfg: &RunConfig) -> Result<Outcome> {
    let block = cfg.imethod_bounds.clone().unwrap_or_default();
    let ladder = dyadic_ladder(block.ladder_exponents.0, block.ladder_exponents.1);
    let mut jobs = Vec::new();
    for c in &block.configs {
        for &e in &block.epsilons {
            for &a in &block.alphas {
                jobs.push((c, e, a));
            }
        }
    }
    let reports = jobs
        .par_iter()
        .map(|&(c, e, a)| {
            sample_bound(
                c,
                block.s,
                &ModelParams::new(e, a)?,
                &ladder,
                block.samples,
                cfg.seed,
            )
        })
        .collect::<Result<Vec<BoundReport>>>()?;
    let max_abs_slope = reports.iter().map(|r| r.slope.abs()).fold(0.0, f64::max);
    Ok(Outcome {
        body: json_body(cfg, "reports", &reports)?,
        floors: Vec::new(),
        summary: json!({ "max_abs_slope": max_abs_slope }),
    })
}

/// Parses the file at `path`, applies overrides and runs it.
pub fn run_file(path: &Path, out: Option<PathBuf>, seed: Option<u64>) -> Result<Artifacts> {
    let text = fs::read_to_string(path)?;
    let mut cfg = parse_config(&text)?;
    if let Some(out) = out {
        cfg.out = Some(out);
    }
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    run(&cfg)
}

/// Writes the error record to `w`.
pub fn report_error<W: Write>(w: &mut W, err: &Error) {
    let _ = writeln!(w, "{}", error_json(err));
}

#[cfg(test)]
mod tests {
    use super::*;
    use kdvb_core::evolve::solve;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::Divergence { step: 1, time: 0.1 }), 3);
        assert_eq!(exit_code(&Error::Resolution("x".into())), 4);
        let v: Value =
            serde_json::from_str(&error_json(&Error::Resolution("coarse".into()))).unwrap();
        assert_eq!(v["error"], "resolution");
        assert_eq!(v["exit_code"], 4);
    }

    #[test]
    fn manifest_sits_next_to_output() {
        assert_eq!(
            manifest_path(Path::new("a/b.csv")),
            PathBuf::from("a/b.csv.manifest.json")
        );
    }

    #[test]
    fn solve_helper_matches_library() {
        let cfg = parse_config(
            r#"{"subcommand":"solve","modes":32,"box_length":6.283185307179586,"dt":0.01,"t_final":0.1}"#,
        )
        .unwrap();
        let solver = cfg.solver().unwrap();
        let u0 = initial_data(&cfg, &solver.grid).unwrap();
        let direct = solve(&inverse_transform(&u0), &solver).unwrap();
        let out = run_solve(&cfg).unwrap();
        let last_line = out.body.lines().last().unwrap().to_string();
        let u = inverse_transform(direct.last());
        assert!(last_line.ends_with(&fmt17(*u.values().last().unwrap())));
    }
}

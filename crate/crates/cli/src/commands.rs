//! Subcommand implementations and the exit-code mapping.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use semalloc::numerics::RandomSeed;
use semalloc::perception::fit_surface;
use semalloc::simulator::{end_to_end_check, validate_ber_curve, SimConfig, SimRow};
use semalloc::solvers::{solve, SolverKind, SweepRow, sweep_targets};
use semalloc::modulation::ModulationScheme;

use crate::config::{ExperimentConfig, OutputFormat};
use crate::error::CliError;
use crate::io;
use crate::manifest::RunManifest;
use crate::svg::{LineChart, Series, DASHES, PALETTE};

#[derive(Debug, Parser)]
#[command(name = "semalloc", version, about = "Perception-constrained power allocation experiments")]
pub struct Cli {
    /// Experiment config (TOML); the bundled default scenario when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the output format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a perception surface to `psi1,psi2,P` samples.
    Fit { samples: PathBuf, out: PathBuf },
    /// Solve one target with every selected allocator.
    Solve {
        /// Overrides the config's target list with a single value.
        #[arg(long)]
        target: Option<f64>,
    },
    /// Sweep the target list, writing CSVs and a chart.
    Sweep,
    /// Compare analytic and Monte Carlo bit error rates.
    Simulate,
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Fit { samples, out } => cmd_fit(samples, out),
        Command::Solve { target } => load_config(&cli).and_then(|c| cmd_solve(c, *target)),
        Command::Sweep => load_config(&cli).and_then(cmd_sweep),
        Command::Simulate => load_config(&cli).and_then(cmd_simulate),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Reads the config (or the default) and applies the command-line
/// overrides.
pub fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => {
            let mut c = ExperimentConfig::default();
            c.rebase(&std::env::current_dir()?);
            c
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = std::path::absolute(out)?;
    }
    if let Some(format) = cli.format {
        cfg.output.format = format;
    }
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    fs::create_dir_all(&cfg.output.dir)
        .map_err(|e| CliError::Input(format!("{}: {e}", cfg.output.dir.display())))?;
    Ok(cfg.output.dir.clone())
}

fn write_output(manifest: &mut RunManifest, path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)?;
    manifest.record_output(path)
}

pub fn cmd_fit(samples_path: &Path, out_path: &Path) -> Result<i32, CliError> {
    let mut manifest = RunManifest::start("fit", 0);
    manifest.args = [samples_path, out_path]
        .iter()
        .map(|p| std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf()).display().to_string())
        .collect();
    let samples = io::read_samples(samples_path)?;
    manifest.record_input(samples_path)?;
    let fit = fit_surface(&samples, &io::initial_guess(&samples))?;
    let doc = io::SurfaceDocument::from_fit(&fit, io::file_digest(samples_path)?);
    if let Some(dir) = out_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    io::write_surface_document(out_path, &doc)?;
    manifest.record_output(out_path)?;
    let s = fit.params;
    println!(
        "p0 = {:.6}  pmax = {:.6}  tau1 = {:.6e}  tau2 = {:.6e}  beta1 = {:.4}  beta2 = {:.4}",
        s.p0, s.pmax, s.tau1, s.tau2, s.beta1, s.beta2
    );
    println!("rmse = {:.3e} over {} samples", fit.rmse, fit.n_samples);
    manifest.write(&out_path.with_extension("manifest.toml"), None)?;
    if fit.converged {
        Ok(0)
    } else {
        eprintln!(
            "warning: fit stopped after {} iterations without converging; {} is flagged",
            fit.iterations,
            out_path.display()
        );
        Ok(3)
    }
}

fn table(rows: &[SweepRow]) -> String {
    let mut t = String::new();
    let _ = writeln!(
        t,
        "{:<13} {:>13} {:>12} {:>12} {:>11} {:>11} {:>10} {:>5}",
        "solver", "total_cost_w", "q1_w", "q2_w", "psi1", "psi2", "achieved", "iter"
    );
    for r in rows {
        let _ = match &r.outcome {
            Ok(a) => writeln!(
                t,
                "{:<13} {:>13.6e} {:>12.5e} {:>12.5e} {:>11.4e} {:>11.4e} {:>10.6} {:>5}",
                r.solver.label(),
                a.total_cost,
                a.q[0],
                a.q[1],
                a.psi[0],
                a.psi[1],
                a.achieved_p,
                a.iterations
            ),
            Err(e) => writeln!(t, "{:<13} failed: {e}", r.solver.label()),
        };
    }
    t
}

pub fn cmd_solve(mut cfg: ExperimentConfig, target: Option<f64>) -> Result<i32, CliError> {
    if let Some(t) = target {
        cfg.targets = crate::config::TargetSection {
            values: Some(vec![t]),
            ..Default::default()
        };
    }
    let mut manifest = RunManifest::start("solve", cfg.seed);
    let resolved = cfg.resolve()?;
    if resolved.targets.len() != 1 {
        return Err(CliError::Input(format!(
            "solve takes a single target, the config lists {}; use --target or sweep",
            resolved.targets.len()
        )));
    }
    for p in &resolved.inputs {
        manifest.record_input(p)?;
    }
    let p = &resolved.problem;
    let rows: Vec<SweepRow> = resolved
        .solvers
        .iter()
        .map(|&solver| SweepRow {
            target: p.target,
            solver,
            outcome: solve(p, solver, cfg.grid_n),
        })
        .collect();

    if let Some(Err(e)) = rows
        .iter()
        .map(|r| &r.outcome)
        .find(|o| matches!(o, Err(semalloc::Error::Infeasible { .. })))
    {
        return Err(CliError::Infeasible(e.to_string()));
    }

    let dir = out_dir(&cfg)?;
    write_output(&mut manifest, &dir.join("solve.csv"), &io::allocation_csv(&rows))?;
    print!("target P = {}\n{}", p.target, table(&rows));
    manifest.write(&dir.join("manifest.toml"), Some(&cfg))?;

    let troubled = rows
        .iter()
        .filter(|r| !r.outcome.as_ref().is_ok_and(|a| a.converged))
        .count();
    if troubled > 0 {
        eprintln!("warning: {troubled} solver(s) failed or did not converge");
        return Ok(3);
    }
    Ok(0)
}

fn sweep_chart(sweeps: &[(String, Vec<SweepRow>)], solvers: &[SolverKind]) -> LineChart {
    let mut series = Vec::new();
    for (m, (label, rows)) in sweeps.iter().enumerate() {
        for &solver in solvers {
            let color_index = SolverKind::ALL.iter().position(|&k| k == solver).unwrap_or(0);
            series.push(Series {
                label: format!("{label} {solver}"),
                color: PALETTE[color_index % PALETTE.len()].into(),
                dash: DASHES[m % DASHES.len()].into(),
                points: rows
                    .iter()
                    .filter(|r| r.solver == solver)
                    .map(|r| (r.target, r.outcome.as_ref().map_or(f64::NAN, |a| a.total_cost)))
                    .collect(),
            });
        }
    }
    LineChart {
        title: "Total power cost versus perception target".into(),
        x_label: "perception target P̄".into(),
        y_label: "total cost Σ Kᵢ qᵢ (W)".into(),
        series,
    }
}

pub fn cmd_sweep(cfg: ExperimentConfig) -> Result<i32, CliError> {
    let mut manifest = RunManifest::start("sweep", cfg.seed);
    let resolved = cfg.resolve()?;
    for p in &resolved.inputs {
        manifest.record_input(p)?;
    }
    let dir = out_dir(&cfg)?;
    let mut sweeps = Vec::new();
    let mut solved = 0;
    for (label, problem) in resolved.sweep_problems()? {
        let report = sweep_targets(&problem, &resolved.targets, &resolved.solvers, cfg.grid_n);
        for w in &report.warnings {
            eprintln!("warning ({label}): {w}");
        }
        solved += report.rows.iter().filter(|r| r.outcome.is_ok()).count();
        let path = dir.join(format!("sweep_{label}.csv"));
        write_output(&mut manifest, &path, &io::allocation_csv(&report.rows))?;
        println!(
            "{label}: {} of {} rows solved -> {}",
            report.rows.iter().filter(|r| r.outcome.is_ok()).count(),
            report.rows.len(),
            path.display()
        );
        sweeps.push((label, report.rows));
    }
    if cfg.output.format == OutputFormat::CsvSvg {
        let chart = sweep_chart(&sweeps, &resolved.solvers);
        write_output(&mut manifest, &dir.join("sweep.svg"), &chart.render())?;
    }
    manifest.write(&dir.join("manifest.toml"), Some(&cfg))?;
    if solved == 0 {
        let (low, high) = resolved.problem.achievable_range();
        return Err(CliError::Infeasible(format!(
            "no target could be solved; achievable range is ({low}, {high})"
        )));
    }
    Ok(0)
}

pub fn cmd_simulate(cfg: ExperimentConfig) -> Result<i32, CliError> {
    let Some(sim) = cfg.simulation.clone() else {
        return Err(CliError::Input("config has no [simulation] section".into()));
    };
    let mut manifest = RunManifest::start("simulate", cfg.seed);
    let sim_cfg = SimConfig {
        n_bits: sim.n_bits,
        seed: RandomSeed(cfg.seed),
        fading_mode: sim.fading,
    };
    sim_cfg.validate()?;
    if sim.snr_db.is_empty() && sim.check_solver.is_none() {
        return Err(CliError::Input(
            "simulation needs `snr_db` points, a `check_solver`, or both".into(),
        ));
    }
    let resolved = cfg.resolve()?;
    for p in &resolved.inputs {
        manifest.record_input(p)?;
    }
    let override_scheme = sim
        .modulation
        .as_deref()
        .map(ModulationScheme::preset)
        .transpose()?;

    let mut rows: Vec<SimRow> = Vec::new();
    if !sim.snr_db.is_empty() {
        for (i, s) in resolved.problem.streams.iter().enumerate() {
            let scheme = override_scheme.as_ref().unwrap_or(&s.modulation);
            let stream_cfg = SimConfig {
                seed: sim_cfg.seed.derive(i as u64),
                ..sim_cfg
            };
            rows.extend(validate_ber_curve(&s.name, scheme, &s.channel, &sim.snr_db, &stream_cfg)?);
        }
    }
    let mut summary = Vec::new();
    if let Some(label) = &sim.check_solver {
        let kind = SolverKind::from_label(label)
            .ok_or_else(|| CliError::Input(format!("unknown check_solver '{label}'")))?;
        let p = &resolved.problem;
        let alloc = solve(p, kind, cfg.grid_n)?;
        let report = end_to_end_check(p, &alloc, &sim_cfg)?;
        summary.push(format!(
            "{kind} at target {}: analytic P = {:.6}, empirical P = {:.6}, gap = {:.2e}",
            report.target, report.analytic_p, report.empirical_p, report.gap
        ));
        rows.extend(report.rows.into_iter().map(|mut r| {
            r.stream = format!("{}@{kind}", r.stream);
            r
        }));
    }

    let dir = out_dir(&cfg)?;
    write_output(&mut manifest, &dir.join("simulate.csv"), &io::simulation_csv(&rows)?)?;
    manifest.write(&dir.join("manifest.toml"), Some(&cfg))?;
    for line in &summary {
        println!("{line}");
    }
    let violations = rows.iter().filter(|r| !r.within_ci()).count();
    println!(
        "simulate: {} rows, {violations} outside the 3-sigma binomial band",
        rows.len()
    );
    Ok(0)
}

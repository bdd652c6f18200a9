use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use samar::harness::{
    compute_metrics, emit_report, load_run_dir, parse_seeds, presets, run_bounds_grid, run_experiment, write_run_dir,
    BoundsFile, CellReport, ExperimentFile, MetricsSummary, RunLog,
};
use samar::problems::{gradcheck_shipped, SHIPPED_PROBLEMS};
use samar::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_DIVERGENCE: u8 = 2;
const EXIT_BOUND_FLAG: u8 = 3;
const EXIT_GRADCHECK: u8 = 4;

#[derive(Parser)]
#[command(name = "samar", version, about = "Run and analyse SAMAR, SAM, VaSSO and SGD experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment in a config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated seeds, replacing those in the config.
        #[arg(long)]
        seeds: Option<String>,
        /// Preset applied to experiments that do not name one.
        #[arg(long)]
        preset: Option<String>,
    },
    /// Check the convergence bound over a grid of run lengths.
    Bounds {
        config: PathBuf,
        #[arg(long, default_value = "bounds-out")]
        out: PathBuf,
    },
    /// Compare analytic and finite-difference gradients of a shipped problem.
    Gradcheck {
        problem: String,
        #[arg(long, default_value_t = 5)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Rebuild the table, curves and summary from a run directory.
    Report {
        run_dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the available presets.
    Presets,
}

fn summaries(groups: &[Vec<RunLog>]) -> Vec<MetricsSummary> {
    groups
        .iter()
        .filter(|logs| logs.iter().any(|l| l.epochs.iter().any(|e| e.test_top1.is_some())))
        .filter_map(|logs| match compute_metrics(logs) {
            Ok(m) => Some(m),
            Err(e) => {
                eprintln!("{}: no accuracy metrics ({e})", logs[0].config_key);
                None
            }
        })
        .collect()
}

fn print_summaries(summaries: &[MetricsSummary]) {
    for m in summaries {
        println!(
            "{:<8} {:<24} top1 {}  gen-error {}",
            m.optimizer,
            m.problem,
            m.top1.display_percent(),
            m.generalization_error.display_percent()
        );
    }
}

fn any_diverged(groups: &[Vec<RunLog>]) -> bool {
    groups.iter().flatten().any(|l| l.divergence.is_some())
}

fn cmd_run(config: &Path, out: Option<PathBuf>, seeds: Option<String>, preset: Option<String>) -> samar::Result<u8> {
    let mut file = ExperimentFile::load(config, preset.as_deref())?;
    if let Some(s) = seeds {
        let seeds = parse_seeds(&s)?;
        for e in &mut file.experiments {
            e.seeds = seeds.clone();
        }
    }
    let out = out
        .or_else(|| file.experiments[0].output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs"));
    let mut groups = Vec::new();
    for cfg in &file.experiments {
        eprintln!("running {} ({} seeds)", cfg.name, cfg.seeds.len());
        let logs = run_experiment(cfg)?;
        write_run_dir(&out, &cfg.name, &logs)?;
        groups.push(logs);
    }
    let summaries = summaries(&groups);
    emit_report(&summaries, &groups, &[], &out)?;
    print_summaries(&summaries);
    println!("wrote {}", out.display());
    Ok(if any_diverged(&groups) { EXIT_DIVERGENCE } else { 0 })
}

fn cmd_bounds(config: &Path, out: &Path) -> samar::Result<u8> {
    let file = BoundsFile::load(config)?;
    let reports = run_bounds_grid(&file)?;
    for r in &reports {
        println!(
            "{:<20} K={:<6} avg {:>12} bound {:>12.6e} {:?} | perturbed {:>12} bound {:>12.6e} {:?}",
            r.name,
            r.k,
            r.empirical.map_or("diverged".into(), |v| format!("{v:.6e}")),
            r.bound,
            r.status,
            r.perturbed_empirical.map_or("-".into(), |v| format!("{v:.6e}")),
            r.perturbed_bound,
            r.perturbed_status,
        );
    }
    emit_report(&[], &[], &reports, out)?;
    println!("wrote {}", out.display());
    Ok(if reports.iter().any(CellReport::raises_flag) { EXIT_BOUND_FLAG } else { 0 })
}

fn cmd_gradcheck(problem: &str, points: usize, seed: u64) -> samar::Result<u8> {
    let names: Vec<&str> = if problem == "all" { SHIPPED_PROBLEMS.to_vec() } else { vec![problem] };
    let mut ok = true;
    for name in names {
        let report = gradcheck_shipped(name, points, seed)?;
        println!(
            "{:<12} points {:<3} max relative error {:.3e} (tolerance {:.0e}) {}",
            report.problem,
            report.full_gradient_errors.len(),
            report.max_error(),
            report.tolerance,
            if report.passed() { "ok" } else { "FAILED" }
        );
        ok &= report.passed();
    }
    Ok(if ok { 0 } else { EXIT_GRADCHECK })
}

fn cmd_report(run_dir: &Path, out: Option<PathBuf>) -> samar::Result<u8> {
    let groups = load_run_dir(run_dir)?;
    let bounds_path = run_dir.join("bounds.json");
    let bounds: Vec<CellReport> = match std::fs::read_to_string(&bounds_path) {
        Ok(text) => serde_json::from_str(&text)?,
        Err(_) => Vec::new(),
    };
    let summaries = summaries(&groups);
    let out = out.unwrap_or_else(|| run_dir.to_path_buf());
    emit_report(&summaries, &groups, &bounds, &out)?;
    print_summaries(&summaries);
    println!("wrote {}", out.display());
    Ok(if any_diverged(&groups) { EXIT_DIVERGENCE } else { 0 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, seeds, preset } => cmd_run(&config, out, seeds, preset),
        Command::Bounds { config, out } => cmd_bounds(&config, &out),
        Command::Gradcheck { problem, points, seed } => cmd_gradcheck(&problem, points, seed),
        Command::Report { run_dir, out } => cmd_report(&run_dir, out),
        Command::Presets => {
            for p in presets::all_presets() {
                println!("{:<28} {:<6} {}", p.name, if p.runnable { "run" } else { "doc" }, p.description);
            }
            Ok(0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::DivergenceDetected { .. } => EXIT_DIVERGENCE,
                _ => EXIT_CONFIG,
            })
        }
    }
}

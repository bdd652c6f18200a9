use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::bounds::CellReport;
use super::metrics::MetricsSummary;
use super::runlog::RunLog;
use crate::error::{Error, Result};

pub const STEPS_HEADER: &str = "step,epoch,loss,grad_norm,pert_grad_norm,lambda,ratio,lr,sharpness";
pub const TABLE_HEADER: &str = "optimizer,problem,top1_max,top1_mean,top1_std,top5_max,last10_test,last10_train,gen_error";
pub const CURVES_HEADER: &str =
    "experiment,optimizer,problem,seed,epoch,lr,train_loss,test_loss,train_top1,test_top1,train_top5,test_top5";
const EPOCHS_HEADER: &str = "epoch,lr,train_loss,test_loss,train_top1,test_top1,train_top5,test_top5";

pub const TABLE_FILE: &str = "table.csv";
pub const CURVES_FILE: &str = "curves.csv";
pub const BOUNDS_FILE: &str = "bounds.json";
pub const SUMMARY_FILE: &str = "summary.txt";

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn write_rows(path: &Path, header: &str, rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(header.split(',')).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_steps_csv(path: &Path, log: &RunLog) -> Result<()> {
    write_rows(
        path,
        STEPS_HEADER,
        log.steps.iter().map(|s| {
            vec![
                s.step_index.to_string(),
                s.epoch.to_string(),
                s.loss.to_string(),
                s.grad_norm.to_string(),
                opt(s.perturbed_grad_norm),
                s.lambda.to_string(),
                opt(s.ratio),
                s.learning_rate.to_string(),
                opt(s.sharpness_estimate),
            ]
        }),
    )
}

pub fn write_epochs_csv(path: &Path, log: &RunLog) -> Result<()> {
    write_rows(
        path,
        EPOCHS_HEADER,
        log.epochs.iter().map(|e| {
            vec![
                e.epoch.to_string(),
                e.learning_rate.to_string(),
                e.train_loss.to_string(),
                opt(e.test_loss),
                opt(e.train_top1),
                opt(e.test_top1),
                opt(e.train_top5),
                opt(e.test_top5),
            ]
        }),
    )
}

pub fn write_table_csv(path: &Path, summaries: &[MetricsSummary]) -> Result<()> {
    write_rows(
        path,
        TABLE_HEADER,
        summaries.iter().map(|m| {
            vec![
                m.optimizer.clone(),
                m.problem.clone(),
                m.top1.max.to_string(),
                m.top1.mean.to_string(),
                m.top1.std.to_string(),
                m.top5.max.to_string(),
                m.last10_top1_test.mean.to_string(),
                m.last10_top1_train.mean.to_string(),
                m.generalization_error.mean.to_string(),
            ]
        }),
    )
}

/// One row per recorded epoch of every log.
pub fn write_curves_csv(path: &Path, groups: &[Vec<RunLog>]) -> Result<()> {
    let rows = groups.iter().flatten().flat_map(|log| {
        let experiment = log.config_key.split('/').next().unwrap_or_default().to_string();
        log.epochs.iter().map(move |e| {
            vec![
                experiment.clone(),
                log.optimizer.clone(),
                log.problem.clone(),
                log.seed.to_string(),
                e.epoch.to_string(),
                e.learning_rate.to_string(),
                e.train_loss.to_string(),
                opt(e.test_loss),
                opt(e.train_top1),
                opt(e.test_top1),
                opt(e.train_top5),
                opt(e.test_top5),
            ]
        })
    });
    write_rows(path, CURVES_HEADER, rows)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Persists each seed's log as JSON plus step and epoch CSVs under `dir/name`.
pub fn write_run_dir(dir: &Path, name: &str, logs: &[RunLog]) -> Result<PathBuf> {
    let sub = dir.join(name);
    create_dir(&sub)?;
    for log in logs {
        let stem = format!("seed-{}", log.seed);
        let json = sub.join(format!("{stem}.json"));
        fs::write(&json, serde_json::to_string(log)?).map_err(|e| Error::io(&json, e))?;
        write_steps_csv(&sub.join(format!("{stem}.steps.csv")), log)?;
        write_epochs_csv(&sub.join(format!("{stem}.epochs.csv")), log)?;
    }
    Ok(sub)
}

/// Reads back every experiment directory under `dir`, sorted by name, with
/// each experiment's logs sorted by seed.
pub fn load_run_dir(dir: &Path) -> Result<Vec<Vec<RunLog>>> {
    let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    let mut groups = Vec::new();
    for sub in subdirs {
        let mut logs = Vec::new();
        for entry in fs::read_dir(&sub).map_err(|e| Error::io(&sub, e))? {
            let path = entry.map_err(|e| Error::io(&sub, e))?.path();
            if path.extension().is_some_and(|x| x == "json") {
                let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                logs.push(serde_json::from_str::<RunLog>(&text)?);
            }
        }
        if !logs.is_empty() {
            logs.sort_by_key(|l| l.seed);
            groups.push(logs);
        }
    }
    if groups.is_empty() {
        return Err(Error::config(format!("no run logs found under {}", dir.display())));
    }
    Ok(groups)
}

fn summary_text(summaries: &[MetricsSummary], groups: &[Vec<RunLog>], bounds: &[CellReport]) -> String {
    let mut s = String::new();
    for logs in groups {
        let Some(first) = logs.first() else { continue };
        let diverged: Vec<String> =
            logs.iter().filter(|l| l.divergence.is_some()).map(|l| l.seed.to_string()).collect();
        let finals: Vec<f64> = logs.iter().filter_map(|l| l.epochs.last().map(|e| e.train_loss)).collect();
        let _ = writeln!(s, "{} ({} on {})", first.config_key, first.optimizer, first.problem);
        let _ = writeln!(s, "  seeds: {}", logs.len());
        if !diverged.is_empty() {
            let _ = writeln!(s, "  diverged seeds: {}", diverged.join(", "));
        }
        let skipped: usize = logs.iter().map(|l| l.skipped_steps).sum();
        if skipped > 0 {
            let _ = writeln!(s, "  steps skipped on vanishing minibatch gradients: {skipped}");
        }
        if !finals.is_empty() {
            let mean = finals.iter().sum::<f64>() / finals.len() as f64;
            let _ = writeln!(s, "  final train loss (mean): {mean:.6e}");
        }
    }
    if !summaries.is_empty() {
        let _ = writeln!(s, "\naccuracy, percent, max_{{mean±std}} over seeds");
        for m in summaries {
            let _ = writeln!(s, "{} on {}", m.optimizer, m.problem);
            let _ = writeln!(s, "  Top-1               {}", m.top1.display_percent());
            let _ = writeln!(s, "  Top-5               {}", m.top5.display_percent());
            let _ = writeln!(s, "  Last10 Top-1 test   {}", m.last10_top1_test.display_percent());
            let _ = writeln!(s, "  Last10 Top-1 train  {}", m.last10_top1_train.display_percent());
            let _ = writeln!(s, "  generalization err  {}", m.generalization_error.display_percent());
        }
    }
    if !bounds.is_empty() {
        let _ = writeln!(s, "\nconvergence bound checks");
        for c in bounds {
            let _ = writeln!(
                s,
                "{} K={}: avg {} vs bound {:.4e} [{:?}], perturbed {} vs {:.4e} [{:?}]",
                c.name,
                c.k,
                c.empirical.map_or("diverged".to_string(), |v| format!("{v:.4e}")),
                c.bound,
                c.status,
                c.perturbed_empirical.map_or("-".to_string(), |v| format!("{v:.4e}")),
                c.perturbed_bound,
                c.perturbed_status,
            );
        }
    }
    s
}

/// Writes the comparison table, accuracy curves, bound report and summary
/// text into `out_dir`.
pub fn emit_report(
    summaries: &[MetricsSummary],
    groups: &[Vec<RunLog>],
    bounds: &[CellReport],
    out_dir: &Path,
) -> Result<()> {
    if summaries.is_empty() && groups.is_empty() && bounds.is_empty() {
        return Err(Error::contract("nothing to report"));
    }
    create_dir(out_dir)?;
    write_table_csv(&out_dir.join(TABLE_FILE), summaries)?;
    write_curves_csv(&out_dir.join(CURVES_FILE), groups)?;
    let path = out_dir.join(BOUNDS_FILE);
    fs::write(&path, serde_json::to_string_pretty(bounds)?).map_err(|e| Error::io(&path, e))?;
    let path = out_dir.join(SUMMARY_FILE);
    fs::write(&path, summary_text(summaries, groups, bounds)).map_err(|e| Error::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{compute_metrics, EpochRecord};
    use crate::optim::StepRecord;

    fn log(seed: u64, epochs: usize) -> RunLog {
        let mut log = RunLog::new("exp/samar/mlp".into(), "samar", "mlp", seed);
        for e in 0..epochs {
            log.steps.push(StepRecord {
                step_index: e,
                epoch: e,
                loss: 0.5,
                grad_norm: 1.0,
                perturbed_grad_norm: Some(1.1),
                lambda: 0.5,
                ratio: if e == 0 { None } else { Some(1.0) },
                learning_rate: 0.1,
                sharpness_estimate: Some(0.01),
            });
            log.epochs.push(EpochRecord {
                epoch: e,
                learning_rate: 0.1,
                train_loss: 0.5,
                test_loss: Some(0.6),
                train_top1: Some(0.9),
                test_top1: Some(0.8),
                train_top5: Some(1.0),
                test_top5: Some(1.0),
            });
        }
        log
    }

    #[test]
    fn single_row_table_and_curve_cardinality() {
        let dir = tempfile::tempdir().unwrap();
        let logs: Vec<RunLog> = (1..=3).map(|s| log(s, 12)).collect();
        let m = compute_metrics(&logs).unwrap();
        emit_report(&[m], &[logs], &[], dir.path()).unwrap();
        let table = fs::read_to_string(dir.path().join(TABLE_FILE)).unwrap();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[0], TABLE_HEADER);
        assert_eq!(lines.len(), 2);
        let curves = fs::read_to_string(dir.path().join(CURVES_FILE)).unwrap();
        assert_eq!(curves.lines().count(), 1 + 12 * 3);
        assert!(dir.path().join(BOUNDS_FILE).exists());
        assert!(fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap().contains("Top-1"));
    }

    #[test]
    fn step_csv_schema() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        write_steps_csv(&path, &log(1, 2)).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], STEPS_HEADER);
        assert_eq!(lines[1], "0,0,0.5,1,1.1,0.5,,0.1,0.01");
    }

    #[test]
    fn run_dir_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let logs = vec![log(2, 3), log(1, 3)];
        write_run_dir(dir.path(), "exp", &logs).unwrap();
        let back = load_run_dir(dir.path()).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0], vec![logs[1].clone(), logs[0].clone()]);
    }

    #[test]
    fn unwritable_path_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let err = emit_report(&[], &[vec![log(1, 1)]], &[], &blocker.join("out")).unwrap_err();
        assert!(err.to_string().contains("file"), "{err}");
    }
}

use super::config::ExperimentConfig;
use super::runlog::{DivergenceInfo, EpochRecord, RunLog};
use crate::error::{Error, Result};
use crate::optim::Optimizer;
use crate::oracle::StochasticOracle;
use crate::problems::Problem;
use crate::rng::SeededRng;
use crate::schedule::{learning_rate, ScheduleSpec};
use crate::vector::ParamVector;

/// Runs every seed of `cfg`. A diverging seed is recorded in its log and
/// does not stop the others.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<RunLog>> {
    cfg.validate()?;
    let problem = Problem::build(&cfg.problem)?;
    #[cfg(feature = "parallel")]
    let results: Vec<Result<RunLog>> = {
        use rayon::prelude::*;
        cfg.seeds.par_iter().map(|s| run_seed(cfg, &problem, *s)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<RunLog>> = cfg.seeds.iter().map(|s| run_seed(cfg, &problem, *s)).collect();
    results.into_iter().collect()
}

fn snapshot(oracle: &dyn StochasticOracle, x: &ParamVector, epoch: usize, lr: f64) -> Result<EpochRecord> {
    let mut rec = EpochRecord {
        epoch,
        learning_rate: lr,
        train_loss: oracle.loss(x)?,
        test_loss: None,
        train_top1: None,
        test_top1: None,
        train_top5: None,
        test_top5: None,
    };
    if let Some(c) = oracle.classifier() {
        rec.test_loss = Some(c.test_loss(x)?);
        rec.train_top1 = Some(c.train_accuracy(x, 1)?);
        rec.test_top1 = Some(c.test_accuracy(x, 1)?);
        rec.train_top5 = Some(c.train_accuracy(x, 5)?);
        rec.test_top5 = Some(c.test_accuracy(x, 5)?);
    }
    Ok(rec)
}

/// One seed of `cfg` on an already built problem.
pub fn run_seed(cfg: &ExperimentConfig, problem: &Problem, seed: u64) -> Result<RunLog> {
    let root = SeededRng::new(seed);
    let mut init_rng = root.fork(1);
    let mut rng = root.fork(2);
    let mut x = problem.initial_point(&mut init_rng);
    let mut oracle = problem.oracle(cfg.batch_size)?;
    let mut opt = Optimizer::new(cfg.optimizer.clone(), x.dim())?;
    let noiseless = oracle.noise_bound() == Some(0.0) || oracle.batches_per_pass() == Some(1);

    let steps_per_epoch = oracle
        .batches_per_pass()
        .or(cfg.steps_per_epoch)
        .unwrap_or(problem.dimension());
    let total_steps = match cfg.schedule {
        ScheduleSpec::Theorem1 { total_steps, .. } => total_steps,
        _ => cfg.epochs * steps_per_epoch,
    };

    let mut log = RunLog::new(cfg.config_key(), cfg.optimizer.name(), &cfg.problem.label(), seed);
    for step in 0..total_steps {
        let epoch = step / steps_per_epoch;
        let lr = learning_rate(&cfg.schedule, epoch, step)?;
        let full_sq = if cfg.record_full_gradient { Some(oracle.full_gradient(&x)?.norm_squared()) } else { None };
        match opt.step(&x, oracle.as_mut(), lr, &mut rng) {
            Ok(out) => {
                if let Some(v) = full_sq {
                    log.full_grad_sq.push(v);
                    if let Some(eps) = &out.perturbation {
                        log.perturbed_full_grad_sq.push(oracle.full_gradient(&x.add(eps)?)?.norm_squared());
                    }
                }
                let mut record = out.record;
                record.epoch = epoch;
                log.steps.push(record);
                x = out.x;
                if cfg.weight_decay > 0.0 {
                    x = x.scaled(1.0 - lr * cfg.weight_decay);
                }
            }
            Err(Error::ZeroGradient { .. }) if noiseless => {
                log.converged_early = true;
                break;
            }
            // a minibatch with no usable direction leaves the iterate alone
            Err(Error::ZeroGradient { .. }) => log.skipped_steps += 1,
            Err(Error::DivergenceDetected { step, loss }) => {
                log.divergence = Some(DivergenceInfo { step, loss });
                break;
            }
            Err(e) => return Err(e),
        }
        if (step + 1) % steps_per_epoch == 0 || step + 1 == total_steps {
            log.epochs.push(snapshot(oracle.as_ref(), &x, epoch, lr)?);
        }
    }
    if log.converged_early {
        let epoch = log.steps.last().map_or(0, |s| s.epoch);
        let lr = log.steps.last().map_or(cfg.schedule.eta0(), |s| s.learning_rate);
        if log.epochs.last().is_none_or(|e| e.epoch != epoch) {
            log.epochs.push(snapshot(oracle.as_ref(), &x, epoch, lr)?);
        }
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ExperimentFile;

    fn quad_config(extra: &str) -> ExperimentConfig {
        let text = format!(
            r#"
[[experiment]]
name = "q"
epochs = 4
seeds = [1, 2, 3]
batch_size = 1
record_full_gradient = true
problem = {{ kind = "quadratic", dim = 5, eig_min = 0.5, eig_max = 1.0, noise_sigma = 0.05, seed = 2 }}
optimizer = {{ kind = "samar", rho = 0.05 }}
schedule = {{ kind = "constant", eta0 = 0.1 }}
{extra}
"#
        );
        ExperimentFile::parse(&text).unwrap().experiments.remove(0)
    }

    #[test]
    fn one_log_per_seed() {
        let logs = run_experiment(&quad_config("")).unwrap();
        assert_eq!(logs.len(), 3);
        for l in &logs {
            assert_eq!(l.steps.len(), 20);
            assert_eq!(l.epochs.len(), 4);
            assert_eq!(l.full_grad_sq.len(), 20);
            assert_eq!(l.perturbed_full_grad_sq.len(), 20);
            assert!(l.divergence.is_none());
        }
        assert_ne!(logs[0].steps, logs[1].steps);
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = quad_config("");
        assert_eq!(run_experiment(&cfg).unwrap(), run_experiment(&cfg).unwrap());
    }

    #[test]
    fn seed_runs_independent_of_grid() {
        let cfg = quad_config("");
        let problem = Problem::build(&cfg.problem).unwrap();
        let alone = run_seed(&cfg, &problem, 2).unwrap();
        assert_eq!(run_experiment(&cfg).unwrap()[1], alone);
    }

    #[test]
    fn divergence_is_recorded_per_seed() {
        let mut cfg = quad_config("");
        cfg.schedule = ScheduleSpec::Constant { eta0: 50.0 };
        cfg.epochs = 40;
        let logs = run_experiment(&cfg).unwrap();
        assert_eq!(logs.len(), 3);
        assert!(logs.iter().all(|l| l.divergence.is_some()));
    }

    #[test]
    fn noiseless_zero_gradient_counts_as_convergence() {
        // A = I and η = 1: the λ = 0 step lands on the minimizer, after which
        // the perturbation is undefined.
        let text = r#"
[[experiment]]
name = "exact"
epochs = 3
seeds = [1]
problem = { kind = "quadratic", dim = 3, eig_min = 1.0, eig_max = 1.0, b_scale = 0.0, noise_sigma = 0.0, seed = 1 }
optimizer = { kind = "samar", rho = 0.1, pinned_lambda = 0.0 }
schedule = { kind = "constant", eta0 = 1.0 }
"#;
        let cfg = ExperimentFile::parse(text).unwrap().experiments.remove(0);
        let log = &run_experiment(&cfg).unwrap()[0];
        assert!(log.converged_early);
        assert!(log.divergence.is_none());
        assert_eq!(log.steps.len(), 1);
        assert_eq!(log.epochs.len(), 1);
    }

    #[test]
    fn theorem1_schedule_sets_run_length() {
        let mut cfg = quad_config("");
        cfg.schedule = ScheduleSpec::Theorem1 { eta0: 1.0, total_steps: 13 };
        let log = &run_experiment(&cfg).unwrap()[0];
        assert_eq!(log.steps.len(), 13);
        assert_eq!(log.epochs.len(), 3);
        assert!(log.steps.iter().all(|s| s.learning_rate == 1.0 / 13f64.sqrt()));
    }

    #[test]
    fn weight_decay_shrinks_iterates() {
        let plain = run_experiment(&quad_config("")).unwrap();
        let decayed = run_experiment(&quad_config("weight_decay = 0.5")).unwrap();
        assert_ne!(plain[0].steps[1].loss, decayed[0].steps[1].loss);
    }
}

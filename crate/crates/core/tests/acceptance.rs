//! Acceptance checks. Each test prints one `[PASS]` or `[FAIL]` line.

use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use samar::analysis::{
    check_proof_inequalities, fit_rate, min_so_far, theorem1_bound, BoundInputs,
};
use samar::harness::{
    compute_metrics, emit_report, run_bound_cell, run_experiment, write_run_dir, BoundCell, ExperimentConfig,
    ExperimentFile,
};
use samar::optim::{compute_perturbation, Optimizer, OptimizerSpec, SamarConfig, VassoConvention};
use samar::oracle::Batch;
use samar::problems::{gradcheck_shipped, Problem, ProblemSpec, QuadraticProblem, SHIPPED_PROBLEMS};
use samar::schedule::learning_rate;
use samar::{ParamVector, SeededRng, StochasticOracle};

fn verdict(name: &str, pass: bool, detail: impl AsRef<str>) {
    // written past the test harness's capture so every line shows up
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "[{}] {name}: {}", if pass { "PASS" } else { "FAIL" }, detail.as_ref());
    let _ = out.flush();
}

fn preset(name: &str) -> ExperimentConfig {
    ExperimentFile::parse(&format!("[[experiment]]\npreset = \"{name}\"\n")).unwrap().experiments.remove(0)
}

// ---------------------------------------------------------------------------

fn iterate_bits(spec: OptimizerSpec, cfg: &ExperimentConfig, problem: &Problem, steps: usize) -> Vec<Vec<u64>> {
    let root = SeededRng::new(11);
    let mut x = problem.initial_point(&mut root.fork(1));
    let mut rng = root.fork(2);
    let mut oracle = problem.oracle(cfg.batch_size).unwrap();
    let per_epoch = oracle.batches_per_pass().unwrap();
    let mut opt = Optimizer::new(spec, x.dim()).unwrap();
    let mut out = Vec::with_capacity(steps);
    for k in 0..steps {
        let lr = learning_rate(&cfg.schedule, k / per_epoch, k).unwrap();
        x = opt.step(&x, oracle.as_mut(), lr, &mut rng).unwrap().x;
        out.push(x.iter().map(|v| v.to_bits()).collect());
    }
    out
}

#[test]
fn reduction_identities() {
    let start = Instant::now();
    let cfg = preset("toy-spirals-samar");
    let problem = Problem::build(&cfg.problem).unwrap();
    let rho = 0.10;
    let pinned = |l: f64| OptimizerSpec::Samar(SamarConfig { rho, pinned_lambda: Some(l), ..SamarConfig::default() });
    let sam = iterate_bits(OptimizerSpec::Sam { rho }, &cfg, &problem, 1000);
    let sgd = iterate_bits(OptimizerSpec::Sgd, &cfg, &problem, 1000);
    let samar1 = iterate_bits(pinned(1.0), &cfg, &problem, 1000);
    let samar0 = iterate_bits(pinned(0.0), &cfg, &problem, 1000);
    let vasso1 = iterate_bits(
        OptimizerSpec::Vasso { rho, theta: 1.0, convention: VassoConvention::default() },
        &cfg,
        &problem,
        1000,
    );
    let elapsed = start.elapsed();
    let checks = [
        ("SAMAR(λ=1) = SAM", samar1 == sam),
        ("SAMAR(λ=0) = SGD", samar0 == sgd),
        ("VaSSO(θ=1) = SAM", vasso1 == sam),
        ("SAM != SGD", sam != sgd),
    ];
    let pass = checks.iter().all(|c| c.1) && elapsed < Duration::from_secs(10);
    let detail: Vec<String> = checks.iter().map(|(n, ok)| format!("{n}: {ok}")).collect();
    verdict(
        "reduction identities (1000 MLP steps, bitwise)",
        pass,
        format!("{}; {:.2}s", detail.join(", "), elapsed.as_secs_f64()),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------

/// Gradients independent of `x` whose norms follow a seeded sequence.
struct NormSequence {
    dim: usize,
    powers_of_two: bool,
}

impl StochasticOracle for NormSequence {
    fn dimension(&self) -> usize {
        self.dim
    }
    fn loss(&self, _: &ParamVector) -> samar::Result<f64> {
        Ok(0.0)
    }
    fn full_gradient(&self, _: &ParamVector) -> samar::Result<ParamVector> {
        Ok(ParamVector::zeros(self.dim))
    }
    fn draw_batch(&mut self, rng: &mut SeededRng) -> Batch {
        let mut g = vec![0.0; self.dim];
        if self.powers_of_two {
            // exact norms, so ratios hit the threshold exactly
            g[0] = 2f64.powi(rng.below(5) as i32 - 2);
        } else {
            let scale = (0.3 * rng.normal()).exp();
            for v in &mut g {
                *v = scale * rng.normal();
            }
        }
        Batch::Noise(ParamVector::from(g))
    }
    fn batch_loss_gradient(&self, _: &ParamVector, batch: &Batch) -> samar::Result<(f64, ParamVector)> {
        match batch {
            Batch::Noise(g) => Ok((0.0, g.clone())),
            _ => unreachable!(),
        }
    }
}

#[test]
fn lambda_dynamics_fuzz() {
    let mut rng = SeededRng::new(2718);
    let (mut steps, mut out_of_band, mut wrong_branch, mut increases, mut ties) = (0usize, 0usize, 0usize, 0usize, 0usize);
    for run in 0..100 {
        let exact = run % 2 == 0;
        let cfg = SamarConfig {
            rho: rng.uniform_range(0.001, 1.0),
            lambda0: rng.uniform_range(0.0, 1.0).max(1e-3),
            chi: if exact { [0.5, 1.0, 2.0][rng.below(3)] } else { rng.uniform_range(0.5, 2.0) },
            gamma: rng.uniform_range(1.01, 3.0),
            delta: rng.uniform_range(0.001, 0.45),
            pinned_lambda: None,
        };
        let mut oracle = NormSequence { dim: 1 + rng.below(6), powers_of_two: exact };
        let mut opt = Optimizer::new(OptimizerSpec::Samar(cfg.clone()), oracle.dim).unwrap();
        let mut step_rng = rng.fork(run);
        let x = ParamVector::zeros(oracle.dim);
        let mut records = Vec::with_capacity(1001);
        for _ in 0..1001 {
            records.push(opt.step(&x, &mut oracle, 0.0, &mut step_rng).unwrap().record);
        }
        for k in 0..1000 {
            let (cur, next) = (&records[k], &records[k + 1]);
            let ratio_ok = match cur.ratio {
                None => k == 0,
                Some(r) => k > 0 && r == cur.grad_norm / records[k - 1].grad_norm,
            };
            let increase = k == 0 || cur.ratio.unwrap() >= cfg.chi;
            let raw = if increase { cfg.gamma * cur.lambda } else { cur.lambda / cfg.gamma };
            let expected = raw.min(1.0 - cfg.delta).max(cfg.delta);
            if next.lambda != expected || !ratio_ok {
                wrong_branch += 1;
            }
            if !(cfg.delta..=1.0 - cfg.delta).contains(&next.lambda) {
                out_of_band += 1;
            }
            increases += increase as usize;
            ties += (cur.ratio == Some(cfg.chi)) as usize;
            steps += 1;
        }
    }
    let pass = steps == 100_000 && out_of_band == 0 && wrong_branch == 0 && ties > 0;
    verdict(
        "λ dynamics (10^5 fuzzed steps)",
        pass,
        format!(
            "{steps} steps, {out_of_band} outside [δ, 1−δ], {wrong_branch} branch mismatches, \
             {increases} increases, {ties} exact ties r = χ"
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------

#[test]
fn perturbation_norm_equals_radius() {
    let mut rng = SeededRng::new(99);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let dim = 1 + rng.below(64);
        let scale = 10f64.powf(rng.uniform_range(-6.0, 6.0));
        let g = ParamVector::from((0..dim).map(|_| scale * rng.normal()).collect::<Vec<_>>());
        let rho = 10f64.powf(rng.uniform_range(-3.0, 1.0));
        let eps = compute_perturbation(&g, rho).unwrap();
        let len = eps.iter().map(|v| v * v).sum::<f64>().sqrt();
        worst = worst.max((len - rho).abs() / rho);
    }
    let pass = worst <= 1e-12;
    verdict("perturbation norm ‖ε‖ = ρ (10^4 gradients)", pass, format!("max relative error {worst:.3e}"));
    assert!(pass);
}

// ---------------------------------------------------------------------------

#[test]
fn gradient_audits() {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut pass = true;
    for name in SHIPPED_PROBLEMS {
        let report = gradcheck_shipped(name, 5, 2024).unwrap();
        let ok = report.passed() && report.full_gradient_errors.len() >= 5 && report.max_error() < 1e-5;
        pass &= ok;
        lines.push(format!("{name} {:.2e}", report.max_error()));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(30);
    verdict(
        "gradient audits (5 points, relative error < 1e-5)",
        pass,
        format!("{}; {:.2}s", lines.join(", "), elapsed.as_secs_f64()),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------

fn quadratic_cell(ks: Vec<usize>) -> BoundCell {
    BoundCell {
        name: "quadratic-d20".into(),
        problem: ProblemSpec::Quadratic {
            dim: 20,
            eig_min: 0.2,
            eig_max: 1.0,
            b_scale: 1.0,
            noise_sigma: 0.1,
            seed: 1,
            x0_scale: 1.0,
        },
        optimizer: OptimizerSpec::Samar(SamarConfig::default()),
        eta0: 2.0,
        rho0: 1.0,
        ks,
        seeds: (1..=10).collect(),
        slack: 0.1,
        batch_size: 1,
    }
}

#[test]
fn theorem1_bound_holds() {
    let start = Instant::now();
    let results = run_bound_cell(&quadratic_cell(vec![100, 400, 1600])).unwrap();
    let elapsed = start.elapsed();
    let mut pass = elapsed < Duration::from_secs(120);
    let mut parts = Vec::new();
    for (r, _) in &results {
        let ok = r.inputs.step_size() <= 2.0 / (5.0 * r.inputs.lipschitz)
            && r.empirical.is_some_and(|v| v <= (1.0 + r.slack) * r.bound)
            && r.perturbed_empirical.is_some_and(|v| v <= (1.0 + r.slack) * r.perturbed_bound);
        pass &= ok;
        parts.push(format!(
            "K={} avg {:.4} ≤ {:.4}, perturbed {:.4} ≤ {:.4}",
            r.k,
            r.empirical.unwrap_or(f64::NAN),
            r.bound,
            r.perturbed_empirical.unwrap_or(f64::NAN),
            r.perturbed_bound
        ));
    }
    verdict(
        "bound check (d=20 quadratic, 10 seeds, 10% slack)",
        pass,
        format!("{}; {:.2}s", parts.join("; "), elapsed.as_secs_f64()),
    );
    assert!(pass);
}

#[test]
fn rate_recovery() {
    let start = Instant::now();
    let results = run_bound_cell(&quadratic_cell(vec![100, 400, 1600, 6400])).unwrap();
    let ks: Vec<usize> = results.iter().map(|(r, _)| r.k).collect();
    let avgs: Vec<f64> = results.iter().map(|(r, _)| r.empirical.unwrap()).collect();
    let fit = fit_rate(&ks, &avgs).unwrap();
    // informational: the best iterate seen so far, averaged over seeds
    let best: Vec<f64> = results
        .iter()
        .map(|(_, logs)| {
            logs.iter().map(|l| *min_so_far(&l.full_grad_sq).last().unwrap()).sum::<f64>() / logs.len() as f64
        })
        .collect();
    let best_fit = fit_rate(&ks, &best).unwrap();
    let elapsed = start.elapsed();
    let pass = (-0.65..=-0.35).contains(&fit.slope) && elapsed < Duration::from_secs(300);
    verdict(
        "rate recovery (slope of averaged ‖∇f‖² vs K)",
        pass,
        format!(
            "slope {:.4}, R² {:.4}, values {avgs:.4?}; min-so-far slope {:.4}; {:.2}s",
            fit.slope,
            fit.r_squared,
            best_fit.slope,
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------

#[test]
fn proof_inequalities_hold() {
    let mut rng = SeededRng::new(31);
    let mut pass = true;
    let mut parts = Vec::new();
    let oracles = [
        ("d=20", QuadraticProblem::random(20, 0.2, 1.0, 1.0, 0.1, 1).unwrap()),
        ("d=2", QuadraticProblem::isotropic(2, 1.0, 0.1).unwrap()),
        ("d=5 noiseless", QuadraticProblem::random(5, 0.1, 3.0, 1.0, 0.0, 4).unwrap()),
    ];
    for (label, mut oracle) in oracles {
        let dim = oracle.dim();
        let probes: Vec<ParamVector> =
            (0..100).map(|_| ParamVector::from((0..dim).map(|_| 2.0 * rng.normal()).collect::<Vec<_>>())).collect();
        let report = check_proof_inequalities(&mut oracle, &probes, 0.1, 10_000, &mut rng).unwrap();
        pass &= report.passed() && report.checks.iter().all(|c| c.probes == 100);
        for c in &report.checks {
            parts.push(format!("{label} {} max margin {:.2e} ({} violations)", c.name, c.max_margin, c.violations));
        }
    }
    verdict("proof inequalities (100 probes)", pass, parts.join("; "));
    assert!(pass);
}

// ---------------------------------------------------------------------------

#[test]
fn toy_generalization_trend() {
    let start = Instant::now();
    let samar_cfg = preset("toy-spirals-samar");
    let sgd_cfg = preset("toy-spirals-sgd");
    assert_eq!(samar_cfg.problem, sgd_cfg.problem);
    assert_eq!(samar_cfg.seeds.len(), 10);
    assert_eq!(samar_cfg.epochs, 100);
    if let ProblemSpec::Mlp { dataset, .. } = &samar_cfg.problem {
        assert_eq!((dataset.train_size, dataset.test_size), (2000, 500));
    }
    let samar = compute_metrics(&run_experiment(&samar_cfg).unwrap()).unwrap();
    let sgd = compute_metrics(&run_experiment(&sgd_cfg).unwrap()).unwrap();
    let elapsed = start.elapsed();
    let pass = samar.generalization_error.mean <= sgd.generalization_error.mean
        && samar.per_seed.len() == 10
        && sgd.per_seed.len() == 10
        && elapsed < Duration::from_secs(600);
    verdict(
        "toy generalization trend (two spirals, 10 seeds)",
        pass,
        format!(
            "mean generalization error SAMAR {:.4} vs SGD {:.4}; last10 train/test SAMAR {:.4}/{:.4}; {:.1}s",
            samar.generalization_error.mean,
            sgd.generalization_error.mean,
            samar.last10_top1_train.mean,
            samar.last10_top1_test.mean,
            elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------

fn run_grid(dir: &Path) {
    let mut configs: Vec<ExperimentConfig> = ["samar", "sgd", "sam", "vasso"]
        .iter()
        .map(|k| {
            let mut c = preset(&format!("toy-spirals-{k}"));
            c.epochs = 12;
            c.seeds = vec![1, 2, 3];
            c
        })
        .collect();
    configs.push(preset("toy-quadratic-theorem1"));
    let mut groups = Vec::new();
    let mut summaries = Vec::new();
    for cfg in &configs {
        let logs = run_experiment(cfg).unwrap();
        write_run_dir(dir, &cfg.name, &logs).unwrap();
        if cfg.name.starts_with("toy-spirals") {
            summaries.push(compute_metrics(&logs).unwrap());
        }
        groups.push(logs);
    }
    let bounds: Vec<_> =
        run_bound_cell(&quadratic_cell(vec![100, 400])).unwrap().into_iter().map(|(r, _)| r).collect();
    emit_report(&summaries, &groups, &bounds, dir).unwrap();
}

fn tree_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                files.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn grid_rerun_is_bitwise_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_grid(a.path());
    run_grid(b.path());
    let (ta, tb) = (tree_bytes(a.path()), tree_bytes(b.path()));
    let csvs = ta.iter().filter(|(n, _)| n.ends_with(".csv")).count();
    let pass = ta == tb && csvs > 0;
    verdict("determinism (grid rerun, all output files)", pass, format!("{} files, {csvs} CSV", ta.len()));
    assert!(pass);
}

// ---------------------------------------------------------------------------

#[test]
fn worked_bound_value() {
    let inp = BoundInputs { lipschitz: 1.0, sigma: 1.0, rho0: 1.0, eta0: 0.1, f0: 1.0, f_inf: 0.0, k: 100 };
    // exact rational value 7651/4875
    let expected = 7651.0 / 4875.0;
    let got = theorem1_bound(&inp).unwrap();
    let rel = (got - expected).abs() / expected;
    let pass = rel <= 1e-12;
    verdict("worked bound value", pass, format!("{got} vs {expected} (relative error {rel:.2e})"));
    assert!(pass);
}

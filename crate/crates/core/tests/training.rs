use proptest::prelude::*;

use samar::analysis::{fit_rate, min_so_far};
use samar::harness::{compute_metrics, run_experiment, run_seed, ExperimentFile};
use samar::optim::{update_lambda, OptimizerSpec, SamarConfig};
use samar::problems::Problem;

#[test]
fn sgd_fits_two_spirals_training_set() {
    let file = ExperimentFile::parse(
        r#"
[[experiment]]
name = "spirals-fit"
epochs = 200
batch_size = 16
seeds = [1]
schedule = { kind = "cosine-anneal", eta0 = 1.0, total_epochs = 200 }
problem = { kind = "mlp", hidden = [32], activation = "tanh", dataset = { recipe = "two-spirals", train_size = 1000, test_size = 200, seed = 3 } }
optimizer = { kind = "sgd" }
"#,
    )
    .unwrap();
    let cfg = &file.experiments[0];
    let problem = Problem::build(&cfg.problem).unwrap();
    let log = run_seed(cfg, &problem, 1).unwrap();
    let last = log.epochs.last().unwrap();
    assert_eq!(last.epoch, 199);
    assert!(last.train_top1.unwrap() > 0.95, "train accuracy {:?}", last.train_top1);
}

#[test]
fn pinned_samar_row_matches_sam_row() {
    let text = |opt: &str| {
        format!(
            "[[experiment]]\npreset = \"toy-spirals-sam\"\nname = \"x\"\nepochs = 10\nseeds = [1, 2]\n\
             schedule = {{ kind = \"cosine-anneal\", eta0 = 1.0, total_epochs = 10 }}\noptimizer = {opt}\n"
        )
    };
    let run = |opt: &str| {
        let cfg = ExperimentFile::parse(&text(opt)).unwrap().experiments.remove(0);
        compute_metrics(&run_experiment(&cfg).unwrap()).unwrap()
    };
    let sam = run("{ kind = \"sam\", rho = 0.1 }");
    let samar = run("{ kind = \"samar\", rho = 0.1, pinned_lambda = 1.0 }");
    assert_eq!(sam.top1, samar.top1);
    assert_eq!(sam.top5, samar.top5);
    assert_eq!(sam.last10_top1_test, samar.last10_top1_test);
    assert_eq!(sam.last10_top1_train, samar.last10_top1_train);
    assert_eq!(sam.generalization_error, samar.generalization_error);
    assert_eq!(sam.per_seed, samar.per_seed);
}

proptest! {
    #[test]
    fn min_so_far_is_a_nonincreasing_lower_envelope(values in prop::collection::vec(0.0f64..1e6, 1..200)) {
        let env = min_so_far(&values);
        prop_assert_eq!(env.len(), values.len());
        prop_assert_eq!(env[0], values[0]);
        for i in 1..env.len() {
            prop_assert!(env[i] <= env[i - 1]);
            prop_assert!(env[i] <= values[i]);
            prop_assert!(values[..=i].contains(&env[i]));
        }
    }

    #[test]
    fn rate_slope_ignores_scale(c in 1e-3f64..1e3, p in -2.0f64..0.0, extra in 0usize..4) {
        let ks: Vec<usize> = (0..3 + extra).map(|i| 50 << (2 * i)).collect();
        let values: Vec<f64> = ks.iter().map(|k| c * (*k as f64).powf(p)).collect();
        let fit = fit_rate(&ks, &values).unwrap();
        prop_assert!((fit.slope - p).abs() < 1e-9);
        prop_assert!((fit.intercept - c.ln()).abs() < 1e-7);
    }

    #[test]
    fn lambda_stays_in_band(
        lambda in 0.0f64..=1.0,
        ratio in prop::option::of(0.0f64..5.0),
        k in 0usize..10,
        gamma in 1.0f64..4.0,
        chi in 0.1f64..3.0,
        delta in 0.0f64..0.5,
    ) {
        let cfg = SamarConfig { gamma, chi, delta, ..SamarConfig::default() };
        let ratio = if k == 0 { None } else { ratio.or(Some(1.0)) };
        let next = update_lambda(lambda, ratio, k, &cfg);
        prop_assert!(next >= delta && next <= 1.0 - delta);
    }
}

#[test]
fn theorem1_runs_record_one_full_gradient_per_step() {
    let cfg = ExperimentFile::parse("[[experiment]]\npreset = \"toy-quadratic-theorem1\"\nseeds = [3]\n")
        .unwrap()
        .experiments
        .remove(0);
    assert!(matches!(cfg.optimizer, OptimizerSpec::Samar(_)));
    let logs = run_experiment(&cfg).unwrap();
    assert_eq!(logs[0].full_grad_sq.len(), 400);
    assert_eq!(logs[0].perturbed_full_grad_sq.len(), 400);
}

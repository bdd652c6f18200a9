//! Named config fragments.
//!
//! `toy-*` presets run at desk scale. The `cifar*` presets record the
//! hyperparameters of the published CIFAR runs (ResNet-34 and
//! WideResNet-34-10, batch 256, weight decay 0.0005, 100 epochs of cosine
//! annealing). No network or dataset of that kind ships here, so they can
//! be listed but not run.

use crate::error::{Error, Result};

pub struct Preset {
    pub name: String,
    pub runnable: bool,
    pub description: String,
    pub toml: String,
}

const TOY_SPIRALS: &str = r#"
epochs = 100
batch_size = 16
seeds = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]
weight_decay = 0.0
schedule = { kind = "cosine-anneal", eta0 = 1.0, total_epochs = 100 }
problem = { kind = "mlp", hidden = [64], activation = "tanh", dataset = { recipe = "two-spirals", noise = 0.2, turns = 1.0, scale = 8.0, train_size = 2000, test_size = 500, seed = 17 } }
"#;

const TOY_RHO: f64 = 0.10;

fn toy_optimizer(kind: &str) -> String {
    match kind {
        "sgd" => r#"optimizer = { kind = "sgd" }"#.to_string(),
        "sam" => format!(r#"optimizer = {{ kind = "sam", rho = {TOY_RHO} }}"#),
        "vasso" => format!(r#"optimizer = {{ kind = "vasso", rho = {TOY_RHO}, theta = 0.9 }}"#),
        _ => format!(
            r#"optimizer = {{ kind = "samar", rho = {TOY_RHO}, lambda0 = 1.0, chi = 1.1, gamma = 1.55, delta = 0.01 }}"#
        ),
    }
}

const TOY_QUADRATIC: &str = r#"
name = "toy-quadratic-theorem1"
batch_size = 1
seeds = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]
record_full_gradient = true
schedule = { kind = "theorem1", eta0 = 4.0, total_steps = 400 }
problem = { kind = "quadratic", dim = 20, eig_min = 0.2, eig_max = 1.0, b_scale = 1.0, noise_sigma = 0.1, seed = 1, x0_scale = 1.0 }
optimizer = { kind = "samar", rho = 0.05, lambda0 = 1.0, chi = 1.1, gamma = 1.55, delta = 0.01 }
"#;

/// (dataset, network, lr, rho, gamma, chi)
const PUBLISHED: [(&str, &str, f64, f64, f64, f64); 4] = [
    ("cifar10", "resnet34", 0.3, 0.10, 1.550, 1.100),
    ("cifar10", "wrn34-10", 0.1, 0.10, 1.400, 1.050),
    ("cifar100", "resnet34", 0.3, 0.10, 1.400, 1.075),
    ("cifar100", "wrn34-10", 0.3, 0.15, 1.500, 1.000),
];

fn published_optimizer(kind: &str, rho: f64, gamma: f64, chi: f64) -> String {
    match kind {
        "sgd" => r#"optimizer = { kind = "sgd" }"#.to_string(),
        "sam" => format!(r#"optimizer = {{ kind = "sam", rho = {rho} }}"#),
        "vasso" => format!(r#"optimizer = {{ kind = "vasso", rho = {rho}, theta = 0.9 }}"#),
        _ => format!(
            r#"optimizer = {{ kind = "samar", rho = {rho}, lambda0 = 1.0, chi = {chi}, gamma = {gamma}, delta = 0.01 }}"#
        ),
    }
}

const OPTIMIZERS: [&str; 4] = ["samar", "sgd", "sam", "vasso"];

pub fn all_presets() -> Vec<Preset> {
    let mut out = Vec::new();
    for kind in OPTIMIZERS {
        let name = format!("toy-spirals-{kind}");
        out.push(Preset {
            toml: format!("name = \"{name}\"\n{TOY_SPIRALS}{}\n", toy_optimizer(kind)),
            name,
            runnable: true,
            description: format!("{kind}, 64-unit tanh MLP on two spirals (2000/500), 100 epochs, 10 seeds"),
        });
    }
    out.push(Preset {
        name: "toy-quadratic-theorem1".into(),
        runnable: true,
        description: "samar on a noisy 20-d quadratic under the constant eta0/sqrt(K) schedule".into(),
        toml: TOY_QUADRATIC.into(),
    });
    for (data, net, lr, rho, gamma, chi) in PUBLISHED {
        for kind in OPTIMIZERS {
            let name = format!("{data}-{net}-{kind}");
            out.push(Preset {
                toml: format!(
                    "name = \"{name}\"\nepochs = 100\nbatch_size = 256\nweight_decay = 0.0005\n\
                     schedule = {{ kind = \"cosine-anneal\", eta0 = {lr}, total_epochs = 100 }}\n{}\n",
                    published_optimizer(kind, rho, gamma, chi)
                ),
                name,
                runnable: false,
                description: format!("{kind} on {data} with {net}: reference values only"),
            });
        }
    }
    out
}

pub fn find_preset(name: &str) -> Result<Preset> {
    all_presets().into_iter().find(|p| p.name == name).ok_or_else(|| {
        let names: Vec<String> = all_presets().into_iter().map(|p| p.name).collect();
        Error::config(format!("unknown preset `{name}`; known presets: {}", names.join(", ")))
    })
}

/// The preset's values, for runnable presets only.
pub fn preset_table(name: &str) -> Result<toml::Table> {
    let preset = find_preset(name)?;
    if !preset.runnable {
        return Err(Error::config(format!(
            "preset `{name}` documents a CIFAR-scale run and cannot be executed here; use a toy-* preset"
        )));
    }
    preset.toml.parse().map_err(|e: toml::de::Error| Error::config(format!("preset `{name}`: {e}")))
}

//! Built-in invariant checks with a pass/fail table.

use std::io::Write;

use nonconv::autodiff::{finite_difference_gradient, generalized_gradient, relative_error};
use nonconv::bounds::{deep_layer_bound, layer1_bound};
use nonconv::config::{Config, Experiment};
use nonconv::experiments::{init_frequencies, run_trials};
use nonconv::inactivity::{deepest_inactive, scan_dead_layers};
use nonconv::normal::normal_cdf;
use nonconv::optim::{verify_phi_condition, verify_phi_condition_with};
use nonconv::rng::{stream, Purpose};
use nonconv::{
    ActivationFamily, Architecture, BoundInputs, CoordLaw, Hyper, InitDistribution, InputBox, Loss, Method, Sample,
    UpdateRule,
};

use crate::{Failure, SelftestArgs};

const COIN: &str = r#"
[architecture]
widths = [1, 2, 2, 1]
[activation]
kind = "relu"
[data]
kind = "discrete"
box = [0.0, 1.0]
atoms = [{ x = [0.0], y = [0.0], p = 0.5 }, { x = [1.0], y = [1.0], p = 0.5 }]
reference_optimum = 0.0
[optimizer]
method = "adam"
schedule = { constant = 0.01 }
[training]
steps = 200
condition_on_dead_init = true
log_every = 1
"#;

type Check = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn coin() -> Experiment {
    Experiment::from_config(Config::from_toml_str(COIN).expect("built-in config")).expect("built-in config")
}

fn unit_box() -> InputBox {
    InputBox::new(0.0, 1.0).expect("valid box")
}

fn normal_cdf_oracle() -> Check {
    let v = normal_cdf(-1.25) - normal_cdf(-1.75);
    verdict(
        (v - 0.06559061680303817).abs() < 1e-16,
        format!("Φ(−1.25) − Φ(−1.75) = {v:.17}"),
    )
}

fn bound_oracles() -> Check {
    let act = ActivationFamily::relu();
    let init = InitDistribution::standard_normal();
    let bound = |w: Vec<usize>| BoundInputs::new(Architecture::new(w).unwrap(), &act, unit_box()).unwrap();
    let l1 = layer1_bound(&init, &bound(vec![1, 1, 1])).map_err(|e| e.to_string())?;
    let deep = deep_layer_bound(&init, &bound(vec![1, 1, 1, 1]))
        .map_err(|e| e.to_string())?
        .value;
    verdict(
        (l1 - 0.02511628185918066).abs() < 1e-16 && deep == 0.25,
        format!("layer-1 {l1:.17}, deep {deep}"),
    )
}

struct DecayedSgd(f64);

impl UpdateRule for DecayedSgd {
    fn step(&mut self, theta: &mut [f64], grad: &[f64]) -> nonconv::Result<()> {
        for (t, g) in theta.iter_mut().zip(grad) {
            *t -= self.0 * (g + 0.01 * *t);
        }
        Ok(())
    }
}

fn phi_condition(seed: u64) -> Check {
    let failed: Vec<&str> = Method::ALL
        .into_iter()
        .filter(|&m| !verify_phi_condition(m, Hyper::default(), 200, seed))
        .map(|m| m.name())
        .collect();
    let control = verify_phi_condition_with(|_, lr| Box::new(DecayedSgd(lr)), 200, seed);
    verdict(
        failed.is_empty() && !control,
        format!(
            "failing methods {failed:?}, weight-decay control rejected: {}",
            !control
        ),
    )
}

fn dead_gradients(seed: u64) -> Check {
    let act = ActivationFamily::relu();
    let arch = Architecture::new(vec![2, 3, 3, 2]).unwrap();
    let init = InitDistribution::Iid(CoordLaw::Normal { mu: 0.5, sigma: 1.0 });
    let mut rng = stream(seed, Purpose::Verification, 1);
    let box_ = InputBox::new(-1.0, 1.0).unwrap();
    let mut checked = 0;
    for _ in 0..5000 {
        let theta = init.sample(&arch, &mut rng);
        let Some(k) = deepest_inactive(&scan_dead_layers(&theta, &act, box_, &mut rng, 0)) else {
            continue;
        };
        let batch: Vec<Sample> = (0..4)
            .map(|_| Sample::new(box_.sample_point(2, &mut rng), box_.sample_point(2, &mut rng)))
            .collect();
        let g = generalized_gradient(&theta, &batch, &Loss::Mse, &act).map_err(|e| e.to_string())?;
        if g[..arch.prefix_count(k)].iter().any(|v| v.to_bits() != 0) {
            return Err(format!("nonzero prefix gradient for certified layer {k}"));
        }
        checked += 1;
    }
    verdict(checked > 0, format!("{checked} certified parameter vectors"))
}

fn finite_differences(seed: u64) -> Check {
    let act = ActivationFamily::repu(3).unwrap();
    let arch = Architecture::new(vec![2, 3, 2, 1]).unwrap();
    let init = InitDistribution::standard_normal();
    let mut rng = stream(seed, Purpose::Verification, 2);
    let box_ = InputBox::new(-1.0, 1.0).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let theta = init.sample(&arch, &mut rng);
        let batch: Vec<Sample> = (0..3)
            .map(|_| Sample::new(box_.sample_point(2, &mut rng), box_.sample_point(1, &mut rng)))
            .collect();
        let g = generalized_gradient(&theta, &batch, &Loss::Mse, &act).map_err(|e| e.to_string())?;
        let fd = finite_difference_gradient(&theta, &batch, &Loss::Mse, &act, 1e-6).map_err(|e| e.to_string())?;
        worst = worst.max(relative_error(&g, &fd));
    }
    verdict(worst < 1e-5, format!("max relative error {worst:.2e}"))
}

fn persistence(seed: u64, threads: Option<usize>) -> Check {
    let exp = coin();
    let recs = run_trials(&exp, 20, seed, threads).map_err(|e| e.to_string())?;
    let frozen = recs.iter().filter(|r| r.frozen_prefix_ok).count();
    verdict(
        frozen == recs.len(),
        format!("{frozen}/{} trials kept the dead prefix", recs.len()),
    )
}

fn determinism(seed: u64) -> Check {
    let exp = coin();
    let a = init_frequencies(&exp, 2000, seed, Some(1)).map_err(|e| e.to_string())?;
    let b = init_frequencies(&exp, 2000, seed, Some(4)).map_err(|e| e.to_string())?;
    verdict(a == b, "1 vs 4 threads".into())
}

pub fn run(args: &SelftestArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let checks: Vec<(&str, Check)> = vec![
        ("normal cdf oracle", normal_cdf_oracle()),
        ("bound oracles", bound_oracles()),
        ("phi condition", phi_condition(args.seed)),
        ("dead-prefix gradients", dead_gradients(args.seed)),
        ("finite differences", finite_differences(args.seed)),
        ("prefix persistence", persistence(args.seed, args.threads)),
        ("thread determinism", determinism(args.seed)),
    ];
    let io = |e: std::io::Error| Failure::Internal(format!("stdout: {e}"));
    writeln!(out, "{:<24} {:<6} detail", "check", "result").map_err(io)?;
    let mut failures = 0;
    for (name, result) in &checks {
        let (tag, detail) = match result {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        writeln!(out, "{name:<24} {tag:<6} {detail}").map_err(io)?;
    }
    if failures > 0 {
        return Err(Failure::Internal(format!("{failures} self-test check(s) failed")));
    }
    Ok(())
}

//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use nonconv::autodiff::{finite_difference_gradient, generalized_gradient, relative_error};
use nonconv::bounds::{combined_bound, deep_layer_bound};
use nonconv::config::{Config, Experiment};
use nonconv::experiments::{
    depth_sweep_experiment, gap_expectation_estimator, init_frequencies, nonconvergence_frequency, run_trials,
};
use nonconv::inactivity::scan_dead_layers;
use nonconv::optim::{verify_phi_condition, verify_phi_condition_with};
use nonconv::rng::{stream, Purpose};
use nonconv::{
    forward, ActivationFamily, Architecture, BoundInputs, CoordLaw, Hyper, InitDistribution, InputBox, Loss, Method,
    ParamVector, Sample, UpdateRule,
};

const SEED: u64 = 20_240_601;

const COIN: &str = r#"
[activation]
kind = "relu"
[data]
kind = "discrete"
box = [0.0, 1.0]
atoms = [{ x = [0.0], y = [0.0], p = 0.5 }, { x = [1.0], y = [1.0], p = 0.5 }]
reference_optimum = 0.0
"#;

struct Outcome {
    pass: bool,
    detail: String,
}

fn coin(widths: &str, extra: &str) -> Experiment {
    let text = format!("[architecture]\nwidths = {widths}\n{COIN}{extra}");
    Experiment::from_config(Config::from_toml_str(&text).expect("config parses")).expect("config builds")
}

fn sigma(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn within_time(start: Instant, limit: Duration, pass: bool, detail: String) -> Outcome {
    let elapsed = start.elapsed();
    Outcome {
        pass: pass && elapsed < limit,
        detail: format!("{detail}; {:.1}s of {}s", elapsed.as_secs_f64(), limit.as_secs()),
    }
}

fn all_architectures(max_width: usize, max_depth: usize) -> Vec<Architecture> {
    let mut out = Vec::new();
    for depth in 1..=max_depth {
        let n = max_width.pow(depth as u32 + 1);
        for code in 0..n {
            let mut c = code;
            let widths = (0..=depth)
                .map(|_| {
                    let v = c % max_width + 1;
                    c /= max_width;
                    v
                })
                .collect();
            out.push(Architecture::new(widths).unwrap());
        }
    }
    out
}

fn batch_for(arch: &Architecture, input_box: InputBox, n: usize, rng: &mut nonconv::rng::StreamRng) -> Vec<Sample> {
    (0..n)
        .map(|_| {
            Sample::new(
                input_box.sample_point(arch.input_dim(), rng),
                input_box.sample_point(arch.output_dim(), rng),
            )
        })
        .collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let archs = [vec![1, 1, 1], vec![2, 2, 2], vec![1, 2, 2, 1], vec![2, 3, 3, 2]];
    let acts = [ActivationFamily::relu(), ActivationFamily::clip(-1.0, 1.0).unwrap()];
    let init = InitDistribution::Iid(CoordLaw::Normal { mu: 0.7, sigma: 1.0 });
    let box_ = InputBox::new(-1.0, 1.0).unwrap();
    let mut rng = stream(SEED, Purpose::Verification, 1);
    let mut per_k = [0usize; 2];
    let mut violations = 0;
    let mut found = 0;
    while found < 1000 {
        let arch = Architecture::new(archs[found % archs.len()].clone()).unwrap();
        let act = &acts[(found / archs.len()) % 2];
        let theta = init.sample(&arch, &mut rng);
        let verdicts = scan_dead_layers(&theta, act, box_, &mut rng, 0);
        let certified: Vec<usize> = (1..=2.min(arch.depth() - 1))
            .filter(|&k| verdicts[k - 1].is_inactive())
            .collect();
        if certified.is_empty() {
            continue;
        }
        let batch = batch_for(&arch, box_, 4, &mut rng);
        let g = generalized_gradient(&theta, &batch, &Loss::Mse, act).unwrap();
        for &k in &certified {
            per_k[k - 1] += 1;
            if g[..arch.prefix_count(k)].iter().any(|v| v.to_bits() != 0) {
                violations += 1;
            }
        }
        found += 1;
    }
    within_time(
        start,
        Duration::from_secs(10),
        violations == 0 && per_k.iter().all(|&c| c > 0),
        format!(
            "{found} certified parameter vectors (layer 1: {}, layer 2: {}), nonzero prefix gradients: {violations}",
            per_k[0], per_k[1]
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let methods = [
        (Method::Sgd, 0.05),
        (Method::Momentum, 0.01),
        (Method::Nesterov, 0.01),
        (Method::Adagrad, 0.05),
        (Method::Rmsprop, 0.005),
        (Method::Adadelta, 1.0),
        (Method::Adam, 0.01),
        (Method::Adamax, 0.01),
        (Method::Amsgrad, 0.01),
    ];
    let (mut total, mut frozen, mut constant_output, mut constant_risk) = (0, 0, 0, 0);
    for (method, lr) in methods {
        let exp = coin(
            "[1, 2, 2, 1]",
            &format!(
                "[optimizer]\nmethod = \"{}\"\nschedule = {{ constant = {lr} }}\n\
                 [training]\nsteps = 1000\nbatch_size = 4\nlog_every = 1\ncondition_on_dead_init = true\n",
                method.name()
            ),
        );
        let recs = run_trials(&exp, 200, SEED, None).unwrap();
        total += recs.len();
        frozen += recs
            .iter()
            .filter(|r| r.frozen_prefix_ok && r.frozen_prefix_len > 0)
            .count();
        constant_output += recs.iter().filter(|r| r.output_constant == Some(true)).count();
        constant_risk += recs.iter().filter(|r| r.risk_trace_constant()).count();
    }
    within_time(
        start,
        Duration::from_secs(60),
        frozen == total && constant_risk == total,
        format!(
            "dead prefix bit-identical {frozen}/{total}, output constant in x {constant_output}/{total}, \
             risk trace constant {constant_risk}/{total}"
        ),
    )
}

fn hidden_margin(theta: &ParamVector, act: &ActivationFamily, batch: &[Sample]) -> f64 {
    let depth = theta.arch().depth();
    let mut m = f64::INFINITY;
    for s in batch {
        let t = forward(theta, act, &s.x).unwrap();
        for k in 1..depth {
            m = t.layer(k).iter().fold(m, |m, z| m.min(z.abs()));
        }
    }
    m
}

fn path_product_gradient(theta: &ParamVector, act: &ActivationFamily, batch: &[Sample]) -> Vec<f64> {
    let arch = theta.arch();
    let depth = arch.depth();
    let mut g = vec![0.0; arch.param_count()];
    for s in batch {
        let t = forward(theta, act, &s.x).unwrap();
        let deriv = |m: usize, i: usize| act.gen_deriv(t.layer(m)[i - 1]);
        let post = |m: usize, j: usize| {
            if m == 0 {
                s.x[j - 1]
            } else {
                act.value(t.layer(m)[j - 1])
            }
        };
        for k in 1..=depth {
            for i in 1..=arch.width(k) {
                // every index path i = i_k → … → i_L
                let mut paths: Vec<(Vec<usize>, f64)> = vec![(vec![i], 1.0)];
                for m in k + 1..=depth {
                    paths = paths
                        .into_iter()
                        .flat_map(|(p, w)| {
                            let last = *p.last().unwrap();
                            (1..=arch.width(m)).map(move |n| {
                                let mut q = p.clone();
                                q.push(n);
                                (q, w * deriv(m - 1, last) * theta.weight(m, n, last))
                            })
                        })
                        .collect();
                }
                let back: f64 = paths
                    .iter()
                    .map(|(p, w)| {
                        let o = *p.last().unwrap();
                        w * 2.0 * (t.output()[o - 1] - s.y[o - 1])
                    })
                    .sum();
                let n = batch.len() as f64;
                for j in 1..=arch.width(k - 1) {
                    g[arch.weight_index(k, i, j) - 1] += back * post(k - 1, j) / n;
                }
                g[arch.bias_index(k, i) - 1] += back / n;
            }
        }
    }
    g
}

fn criterion_3() -> Outcome {
    let archs = all_architectures(3, 4);
    let init = InitDistribution::Iid(CoordLaw::Uniform { lo: -1.5, hi: 1.5 });
    let box_ = InputBox::new(-1.0, 1.0).unwrap();
    let mut rng = stream(SEED, Purpose::Verification, 3);
    let acts = [
        ActivationFamily::repu(2).unwrap(),
        ActivationFamily::repu(3).unwrap(),
        ActivationFamily::relu(),
    ];
    let mut worst_fd = 0.0f64;
    let mut cases = 0;
    let mut attempt = 0;
    while cases < 200 {
        attempt += 1;
        let arch = &archs[(attempt * 37) % archs.len()];
        let act = &acts[cases % 3];
        let theta = init.sample(arch, &mut rng);
        let batch = batch_for(arch, box_, 3, &mut rng);
        if act.name() == "relu" && hidden_margin(&theta, act, &batch) < 1e-3 {
            continue;
        }
        let g = generalized_gradient(&theta, &batch, &Loss::Mse, act).unwrap();
        let fd = finite_difference_gradient(&theta, &batch, &Loss::Mse, act, 1e-6).unwrap();
        worst_fd = worst_fd.max(relative_error(&g, &fd));
        cases += 1;
    }
    let mut worst_path = 0.0f64;
    for arch in &archs {
        for act in [ActivationFamily::relu(), ActivationFamily::clip(-1.0, 1.0).unwrap()] {
            let theta = init.sample(arch, &mut rng);
            let batch = batch_for(arch, box_, 2, &mut rng);
            let g = generalized_gradient(&theta, &batch, &Loss::Mse, &act).unwrap();
            let oracle = path_product_gradient(&theta, &act, &batch);
            for (a, b) in g.iter().zip(&oracle) {
                worst_path = worst_path.max((a - b).abs());
            }
        }
    }
    Outcome {
        pass: worst_fd < 1e-5 && worst_path <= 1e-10,
        detail: format!(
            "finite differences: max relative error {worst_fd:.2e} over {cases} cases; \
             path products: max abs deviation {worst_path:.2e} over {} architectures",
            archs.len()
        ),
    }
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let exp = coin("[1, 1, 1]", "[bound]\nwindow = [-2.0, -1.0]\n");
    let n = 100_000;
    let f = init_frequencies(&exp, n, SEED, None).unwrap();
    let b = f.bounds.layer1_bound;
    let freq = f.window_freq;
    let s = sigma(freq, n);
    let analytic_ok = (b - 0.02511628185918066).abs() < 1e-15;
    within_time(
        start,
        Duration::from_secs(30),
        analytic_ok && freq >= b - 3.0 * s && freq >= b && freq <= b + 0.05,
        format!(
            "analytic {b:.17}, window-event frequency {freq:.5} (3σ {:.5}) over {n} draws",
            3.0 * s
        ),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let exp = coin("[1, 1, 1, 1]", "");
    let n = 100_000;
    let f = init_frequencies(&exp, n, SEED, None).unwrap();
    let b = f.bounds.deep_bound;
    let freq = f.any_layer_freq;
    let s = sigma(freq, n);
    within_time(
        start,
        Duration::from_secs(60),
        b == 0.25 && freq >= b - 3.0 * s,
        format!(
            "analytic {b}, certified dead-union frequency {freq:.5} (3σ {:.5}) over {n} draws",
            3.0 * s
        ),
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut details = Vec::new();
    let mut pass = true;
    for (method, lr) in [("sgd", 0.05), ("adam", 0.01)] {
        let exp = coin(
            "[1, 1, 1]",
            &format!(
                "[optimizer]\nmethod = \"{method}\"\nschedule = {{ constant = {lr} }}\n\
                 [training]\nsteps = 2000\nbatch_size = 4\nlog_every = 10\n"
            ),
        );
        let (rep, _) = nonconvergence_frequency(&exp, 2000, SEED, None).unwrap();
        let s = sigma(rep.freq, rep.n_trials);
        let bound = combined_bound(&exp.init, &exp.bound_inputs).unwrap().value;
        let ok = rep.delta_gap == 0.125 && rep.freq >= bound - 3.0 * s && rep.freq - 3.0 * s > 0.0;
        pass &= ok;
        details.push(format!(
            "{method}: frequency {:.4} ± {:.4} vs bound {bound:.5}",
            rep.freq,
            3.0 * s
        ));
    }
    within_time(start, Duration::from_secs(600), pass, details.join(", "))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let exp = coin("[1, 1, 1]", "");
    let n = 100_000;
    let t = depth_sweep_experiment(&exp, 1, &[3, 10, 30, 100], n, 0, SEED, None).unwrap();
    let init = InitDistribution::standard_normal();
    let mut pass = t.nondecreasing;
    let mut details = Vec::new();
    for r in &t.rows {
        let arch = Architecture::new(r.arch.clone()).unwrap();
        let inputs = BoundInputs::new(arch, &ActivationFamily::relu(), InputBox::new(0.0, 1.0).unwrap()).unwrap();
        let b = deep_layer_bound(&init, &inputs).unwrap().value;
        let ok = (r.witness_freq - b).abs() <= 3.0 * sigma(b, n) + 1e-12;
        pass &= ok && r.deep_bound == b;
        details.push(format!("L={} {:.5} vs {:.5}", r.depth, r.witness_freq, b));
    }
    let last = t.rows.last().unwrap();
    if last.deep_bound > 0.99 {
        pass &= last.witness_freq > 0.99;
    }
    within_time(
        start,
        Duration::from_secs(120),
        pass,
        format!("{}; nondecreasing {}", details.join(", "), t.nondecreasing),
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

fn criterion_8() -> Outcome {
    let failed: Vec<&str> = Method::ALL
        .into_iter()
        .filter(|&m| !verify_phi_condition(m, Hyper::default(), 1000, SEED))
        .map(|m| m.name())
        .collect();
    let control = verify_phi_condition_with(|_, lr| Box::new(DecayedSgd(lr)), 1000, SEED);
    Outcome {
        pass: failed.is_empty() && !control,
        detail: format!(
            "{} methods, failing {failed:?}; weight-decay control {}",
            Method::ALL.len(),
            if control { "passed (wrong)" } else { "rejected" }
        ),
    }
}

fn criterion_9() -> Outcome {
    let exp = coin(
        "[1, 1, 1]",
        r#"
[[init.override]]
layer = 1
part = "weights"
law = { law = "point_mass", at = 0.1 }
[[init.override]]
layer = 1
part = "biases"
law = { law = "point_mass", at = -1.5 }
[optimizer]
method = "sgd"
schedule = { constant = 0.05 }
[training]
steps = 2000
batch_mode = "full"
log_every = 100
"#,
    );
    let recs = run_trials(&exp, 500, SEED, None).unwrap();
    let all_dead = recs.iter().all(|r| r.dead_at_init_any());
    let mut pass = all_dead;
    let mut details = Vec::new();
    for (delta, target) in [(Some(0.1), 0.1), (None, 0.25)] {
        let g = gap_expectation_estimator(&recs, delta).unwrap();
        let m = *g.mean.last().unwrap();
        let se = *g.std_error.last().unwrap();
        pass &= (m - target).abs() <= 3.0 * se + 1e-12;
        details.push(format!(
            "δ={}: {m:.15} (target {target})",
            delta.map_or("∞".into(), |d| d.to_string())
        ));
    }
    Outcome {
        pass,
        detail: format!("{} trials all dead {all_dead}; {}", recs.len(), details.join(", ")),
    }
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    std::fs::write(
        &cfg,
        format!("[architecture]\nwidths = [1, 1, 1]\n{COIN}[sweep]\nwidth = 2\ndepths = [3, 10, 30]\ntrials = 20000\ntrain_trials = 16\n[training]\nsteps = 200\n"),
    )
    .unwrap();
    let run = |threads: &str| {
        let out = dir.path().join(format!("out{threads}"));
        let status = Command::new(env!("CARGO_BIN_EXE_nonconv"))
            .args([
                "sweep",
                cfg.to_str().unwrap(),
                "--seed",
                "77",
                "--threads",
                threads,
                "--out-dir",
            ])
            .arg(&out)
            .env_remove("NONCONV_SEED")
            .stdout(std::process::Stdio::null())
            .status()
            .unwrap();
        assert!(status.success());
        (
            std::fs::read(out.join("sweep.csv")).unwrap(),
            std::fs::read(out.join("sweep.json")).unwrap(),
        )
    };
    let one = run("1");
    let four = run("4");
    Outcome {
        pass: one == four,
        detail: format!(
            "--threads 1 vs 4: csv identical {}, json identical {}",
            one.0 == four.0,
            one.1 == four.1
        ),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("dead-gradient exactness", criterion_1),
        ("persistence", criterion_2),
        ("gradient oracle", criterion_3),
        ("layer-1 bound", criterion_4),
        ("deep bound", criterion_5),
        ("non-convergence frequency", criterion_6),
        ("depth sweep", criterion_7),
        ("phi-condition suite", criterion_8),
        ("gap estimator", criterion_9),
        ("determinism", criterion_10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty()
            && !filter
                .iter()
                .any(|p| name.contains(p.as_str()) || p == &(i + 1).to_string())
        {
            continue;
        }
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<26} {}  {}",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}

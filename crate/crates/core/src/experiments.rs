//! Monte Carlo harness: training trials, non-convergence frequencies, gap
//! estimators and depth sweeps.
//!
//! Trial `t` of an experiment with master seed `s` draws its initialization,
//! batches and falsifier points from streams keyed by `(s, t)`, so results do
//! not depend on the number of threads.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ann::{forward_raw, Architecture, ParamVector};
use crate::autodiff::GradWorkspace;
use crate::bounds::{combined_bound, depth_sweep_bound, BoundReport, DepthExtras, DepthSweep};
use crate::config::{BatchMode, Experiment};
use crate::error::{Error, Result};
use crate::inactivity::{
    certify_layer1_inactive, deepest_inactive, in_deep_witness_union, scan_dead_layers, BoundInputs, Verdict,
};
use crate::loss::{best_constant_risk, best_constant_risk_sampled, check_target_nondegeneracy, Sample};
use crate::optim::{Method, OptimizerState, UpdateRule};
use crate::rng::{stream, Purpose};

pub const SCHEMA_VERSION: u32 = 1;

/// Runs `f(0..n)` on a pool of `threads` workers, preserving order.
pub fn par_map<T: Send>(threads: Option<usize>, n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Result<Vec<T>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Unsupported(format!("cannot start thread pool: {e}")))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
}

/// How risk is evaluated along a trajectory.
#[derive(Clone, Debug)]
pub enum Evaluator {
    /// Exact expectation over the support.
    Exact(Vec<(Sample, f64)>),
    /// Mean over a fixed held-out set.
    HeldOut(Vec<Sample>),
}

impl Evaluator {
    /// Exact support when available, else `n` samples from the
    /// evaluation stream of `seed`.
    pub fn new(exp: &Experiment, seed: u64) -> Self {
        match exp.data.exact_support() {
            Some(atoms) => Evaluator::Exact(
                atoms
                    .iter()
                    .map(|a| (Sample::new(a.x.clone(), a.y.clone()), a.prob))
                    .collect(),
            ),
            None => {
                let mut rng = stream(seed, Purpose::Evaluation, 0);
                Evaluator::HeldOut(exp.data.sample_batch(exp.config.training.eval_samples, &mut rng))
            }
        }
    }

    pub fn inputs(&self) -> Vec<&[f64]> {
        match self {
            Evaluator::Exact(v) => v.iter().map(|(s, _)| s.x.as_slice()).collect(),
            Evaluator::HeldOut(v) => v.iter().map(|s| s.x.as_slice()).collect(),
        }
    }

    pub fn risk(&self, exp: &Experiment, theta: &[f64]) -> f64 {
        let eval = |s: &Sample| {
            let out = forward_raw(&exp.arch, theta, &exp.act, 0, &s.x).pop().expect("layer");
            exp.loss.value(&out, &s.y)
        };
        match self {
            Evaluator::Exact(v) => v.iter().map(|(s, p)| p * eval(s)).sum(),
            Evaluator::HeldOut(v) => v.iter().map(eval).sum::<f64>() / v.len() as f64,
        }
    }

    /// Best constant prediction risk on this evaluator.
    pub fn best_constant(&self, exp: &Experiment) -> Result<f64> {
        match self {
            Evaluator::Exact(_) => Ok(best_constant_risk(&exp.data, &exp.loss)?.1),
            Evaluator::HeldOut(v) => Ok(best_constant_risk_sampled(v, &exp.loss)?.1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialRecord {
    pub seed: u64,
    pub trial: u64,
    pub arch: Vec<usize>,
    pub method: Method,
    /// Initializations rejected before an accepted one.
    pub rejections: u64,
    pub dead_at_init: Vec<Verdict>,
    pub dead_at_end: Vec<Verdict>,
    pub logged_steps: Vec<usize>,
    pub risk_trace: Vec<f64>,
    pub reference_optimum: f64,
    /// Minimum over logged steps of `risk − reference_optimum`.
    pub final_gap: f64,
    /// Number of leading coordinates checked for freezing (`0` if no layer was
    /// certified at init).
    pub frozen_prefix_len: usize,
    /// Whether those coordinates stayed bit-identical at every step.
    pub frozen_prefix_ok: bool,
    /// For trials with a certified layer: whether the final network output is
    /// identical on every evaluation input.
    pub output_constant: Option<bool>,
}

impl TrialRecord {
    pub fn dead_at_init_any(&self) -> bool {
        self.dead_at_init.iter().any(|v| v.is_inactive())
    }

    /// Whether every logged risk is bitwise equal to the first one.
    pub fn risk_trace_constant(&self) -> bool {
        self.risk_trace
            .iter()
            .all(|r| r.to_bits() == self.risk_trace[0].to_bits())
    }
}

/// Draws `Θ₀` for a trial, rejecting until a layer is certified when the
/// config asks for it.
fn draw_init(exp: &Experiment, seed: u64, trial: u64) -> Result<(ParamVector, u64)> {
    let mut rng = stream(seed, Purpose::Init, trial);
    let t = &exp.config.training;
    let mut rejections = 0;
    loop {
        let theta = exp.init.sample(&exp.arch, &mut rng);
        if !t.condition_on_dead_init {
            return Ok((theta, 0));
        }
        let mut no_rng = stream(seed, Purpose::Falsifier, trial);
        let verdicts = scan_dead_layers(&theta, &exp.act, exp.data.input_box(), &mut no_rng, 0);
        if deepest_inactive(&verdicts).is_some() {
            return Ok((theta, rejections));
        }
        rejections += 1;
        if rejections >= t.max_rejections {
            return Err(Error::Precondition(format!(
                "no certified-inactive initialization after {rejections} draws"
            )));
        }
    }
}

/// Prepared runner sharing the evaluation set across trials.
pub struct Runner<'a> {
    exp: &'a Experiment,
    seed: u64,
    evaluator: Evaluator,
}

impl<'a> Runner<'a> {
    pub fn new(exp: &'a Experiment, seed: u64) -> Self {
        Runner {
            exp,
            seed,
            evaluator: Evaluator::new(exp, seed),
        }
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.evaluator
    }

    pub fn run(&self, trial: u64) -> Result<TrialRecord> {
        let exp = self.exp;
        let t = &exp.config.training;
        let input_box = exp.data.input_box();
        let (theta0, rejections) = draw_init(exp, self.seed, trial)?;
        let mut falsifier = stream(self.seed, Purpose::Falsifier, trial);
        let dead_at_init = scan_dead_layers(&theta0, &exp.act, input_box, &mut falsifier, t.falsifier_samples);
        let prefix = deepest_inactive(&dead_at_init).map_or(0, |k| exp.arch.prefix_count(k));
        let frozen: Vec<u64> = theta0.as_slice()[..prefix].iter().map(|v| v.to_bits()).collect();

        let opt = &exp.config.optimizer;
        let mut state = OptimizerState::new(opt.method, opt.hyper, opt.schedule.clone(), theta0.len())?;
        let mut ws = GradWorkspace::new(&exp.arch);
        let mut theta = theta0.into_vec();
        let mut grad = vec![0.0; theta.len()];
        let mut batch_rng = stream(self.seed, Purpose::Batches, trial);
        let full_batch: Option<Vec<Sample>> = match t.batch_mode {
            BatchMode::Full => Some(match &self.evaluator {
                Evaluator::Exact(v) => v.iter().map(|(s, _)| s.clone()).collect(),
                Evaluator::HeldOut(_) => unreachable!("validated"),
            }),
            BatchMode::Iid => None,
        };
        let mut batch: Vec<Sample> = Vec::with_capacity(t.batch_size);

        let mut logged_steps = vec![0];
        let mut risk_trace = vec![self.evaluator.risk(exp, &theta)];
        let mut frozen_prefix_ok = true;
        for n in 1..=t.steps {
            let b = match &full_batch {
                Some(all) => all.as_slice(),
                None => {
                    batch.clear();
                    for _ in 0..t.batch_size {
                        batch.push(exp.data.sample(&mut batch_rng));
                    }
                    batch.as_slice()
                }
            };
            ws.gradient_into(&theta, b, &exp.loss, &exp.act, 0, &mut grad)?;
            state.step(&mut theta, &grad)?;
            if frozen_prefix_ok
                && theta[..prefix]
                    .iter()
                    .zip(&frozen)
                    .any(|(v, &bits)| v.to_bits() != bits)
            {
                frozen_prefix_ok = false;
            }
            if n % t.log_every == 0 || n == t.steps {
                logged_steps.push(n);
                risk_trace.push(self.evaluator.risk(exp, &theta));
            }
        }
        let theta = ParamVector::new(exp.arch.clone(), theta)?;
        let dead_at_end = scan_dead_layers(&theta, &exp.act, input_box, &mut falsifier, t.falsifier_samples);
        let output_constant = (prefix > 0).then(|| {
            let inputs = self.evaluator.inputs();
            let first = forward_raw(&exp.arch, theta.as_slice(), &exp.act, 0, inputs[0]).pop();
            inputs
                .iter()
                .all(|x| forward_raw(&exp.arch, theta.as_slice(), &exp.act, 0, x).pop() == first)
        });
        let final_gap = risk_trace.iter().copied().fold(f64::INFINITY, f64::min) - exp.reference_optimum;
        if risk_trace.iter().any(|r| !r.is_finite()) {
            return Err(Error::Precondition(format!(
                "trial {trial}: risk diverged to a non-finite value"
            )));
        }
        Ok(TrialRecord {
            seed: self.seed,
            trial,
            arch: exp.arch.widths().to_vec(),
            method: opt.method,
            rejections,
            dead_at_init,
            dead_at_end,
            logged_steps,
            risk_trace,
            reference_optimum: exp.reference_optimum,
            final_gap,
            frozen_prefix_len: prefix,
            frozen_prefix_ok,
            output_constant,
        })
    }
}

/// One training trial with its own evaluation set.
pub fn run_training_trial(exp: &Experiment, seed: u64, trial: u64) -> Result<TrialRecord> {
    Runner::new(exp, seed).run(trial)
}

/// `n_trials` trials in parallel, in trial order.
pub fn run_trials(exp: &Experiment, n_trials: usize, seed: u64, threads: Option<usize>) -> Result<Vec<TrialRecord>> {
    let runner = Runner::new(exp, seed);
    par_map(threads, n_trials, |i| runner.run(i as u64))?
        .into_iter()
        .collect()
}

/// Three-sigma binomial half-width.
pub fn binomial_ci(freq: f64, n: usize) -> f64 {
    3.0 * (freq * (1.0 - freq) / n as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyReport {
    pub schema_version: u32,
    pub n_trials: usize,
    pub seed: u64,
    pub method: Method,
    pub delta_gap: f64,
    pub reference_optimum: f64,
    pub best_constant_risk: f64,
    /// Fraction of trials with `final_gap > delta_gap`.
    pub freq: f64,
    pub ci_halfwidth: f64,
    pub analytic_bound: f64,
    /// Fraction of trials with a certified layer at init.
    pub dead_init_freq: f64,
    /// `false` when the target does not depend on the input.
    pub applicable: bool,
    pub diagnostics: Vec<String>,
}

/// Whether `E[Y | X]` varies with `X`.
pub fn target_nondegenerate(exp: &Experiment, evaluator: &Evaluator) -> Result<bool> {
    if exp.data.exact_support().is_some() {
        return check_target_nondegeneracy(&exp.data);
    }
    match &exp.data {
        crate::loss::DataDistribution::Affine { slope, .. } => Ok(slope.iter().any(|&s| s != 0.0)),
        crate::loss::DataDistribution::Teacher { teacher, act, .. } => {
            let inputs = evaluator.inputs();
            let first = forward_raw(teacher.arch(), teacher.as_slice(), act, 0, inputs[0]).pop();
            Ok(inputs
                .iter()
                .any(|x| forward_raw(teacher.arch(), teacher.as_slice(), act, 0, x).pop() != first))
        }
        crate::loss::DataDistribution::Discrete { .. } => unreachable!(),
    }
}

/// Default non-convergence margin: half the gap between the best constant
/// risk and the reference optimum.
pub fn default_delta_gap(exp: &Experiment, evaluator: &Evaluator) -> Result<f64> {
    let gap = evaluator.best_constant(exp)? - exp.reference_optimum;
    if !(gap > 0.0) {
        return Err(Error::Precondition(format!(
            "best constant risk does not exceed the reference optimum (gap {gap})"
        )));
    }
    Ok(gap / 2.0)
}

/// Frequency of `inf_n risk(Θ_n) > reference + δ_gap` over training trials,
/// next to the analytic lower bound.
pub fn nonconvergence_frequency(
    exp: &Experiment,
    n_trials: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<(FrequencyReport, Vec<TrialRecord>)> {
    if n_trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let evaluator = Evaluator::new(exp, seed);
    let applicable = target_nondegenerate(exp, &evaluator)?;
    let mut diagnostics = Vec::new();
    if !applicable {
        diagnostics.push("target is a function of nothing: E[Y|X] = E[Y], bound does not apply".into());
    }
    let best = evaluator.best_constant(exp)?;
    let delta_gap = match exp.config.training.delta_gap {
        Some(d) => d,
        None if applicable => default_delta_gap(exp, &evaluator)?,
        None => f64::INFINITY,
    };
    let records = run_trials(exp, n_trials, seed, threads)?;
    let hits = records.iter().filter(|r| r.final_gap > delta_gap).count();
    let dead = records.iter().filter(|r| r.dead_at_init_any()).count();
    let freq = hits as f64 / n_trials as f64;
    let analytic_bound = if applicable {
        combined_bound(&exp.init, &exp.bound_inputs)?.value
    } else {
        0.0
    };
    if exp.config.training.condition_on_dead_init {
        diagnostics.push("initializations conditioned on a certified layer".into());
    }
    Ok((
        FrequencyReport {
            schema_version: SCHEMA_VERSION,
            n_trials,
            seed,
            method: exp.config.optimizer.method,
            delta_gap,
            reference_optimum: exp.reference_optimum,
            best_constant_risk: best,
            freq,
            ci_halfwidth: binomial_ci(freq, n_trials),
            analytic_bound,
            dead_init_freq: dead as f64 / n_trials as f64,
            applicable,
            diagnostics,
        },
        records,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapEstimate {
    /// `None` encodes `δ = ∞`.
    pub delta: Option<f64>,
    pub steps: Vec<usize>,
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    pub running_inf: Vec<f64>,
}

/// Monte Carlo estimate of `E[min{δ, |risk(Θ_n) − reference|}]` at each
/// logged step; `delta = None` means `δ = ∞`.
pub fn gap_expectation_estimator(records: &[TrialRecord], delta: Option<f64>) -> Result<GapEstimate> {
    if let Some(d) = delta {
        if !(d > 0.0) {
            return Err(Error::invalid("delta", format!("must lie in (0, ∞], got {d}")));
        }
    }
    let first = records
        .first()
        .ok_or_else(|| Error::invalid("records", "need at least one trial"))?;
    if records.iter().any(|r| r.logged_steps != first.logged_steps) {
        return Err(Error::invalid("records", "trials were logged at different steps"));
    }
    let n = records.len() as f64;
    let d = delta.unwrap_or(f64::INFINITY);
    let mut mean = Vec::with_capacity(first.logged_steps.len());
    let mut std_error = Vec::with_capacity(first.logged_steps.len());
    for i in 0..first.logged_steps.len() {
        let vals: Vec<f64> = records
            .iter()
            .map(|r| d.min((r.risk_trace[i] - r.reference_optimum).abs()))
            .collect();
        let m = vals.iter().sum::<f64>() / n;
        let var = if records.len() > 1 {
            vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        mean.push(m);
        std_error.push((var / n).sqrt());
    }
    let running_inf = mean
        .iter()
        .scan(f64::INFINITY, |acc, &m| {
            *acc = acc.min(m);
            Some(*acc)
        })
        .collect();
    Ok(GapEstimate {
        delta,
        steps: first.logged_steps.clone(),
        mean,
        std_error,
        running_inf,
    })
}

/// JSON summary of a training experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSummary {
    pub schema_version: u32,
    pub frequency: FrequencyReport,
    /// Gap estimator with `δ = ∞`.
    pub gap: GapEstimate,
    /// Gap estimator with `δ = delta_gap` (absent when the margin is infinite).
    pub gap_at_margin: Option<GapEstimate>,
}

impl TrainSummary {
    pub fn new(frequency: FrequencyReport, records: &[TrialRecord]) -> Result<Self> {
        let gap = gap_expectation_estimator(records, None)?;
        let gap_at_margin = if frequency.delta_gap.is_finite() {
            Some(gap_expectation_estimator(records, Some(frequency.delta_gap))?)
        } else {
            None
        };
        Ok(TrainSummary {
            schema_version: SCHEMA_VERSION,
            frequency,
            gap,
            gap_at_margin,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitFrequencies {
    pub schema_version: u32,
    pub n_trials: usize,
    pub seed: u64,
    /// Per layer `k = 1..L−1`: fraction certified inactive by intervals.
    pub layer_freq: Vec<f64>,
    /// Fraction with some certified layer.
    pub any_layer_freq: f64,
    /// Fraction whose layer-1 pre-activations stay in the bound window.
    pub window_freq: f64,
    /// Fraction with a deep witness layer.
    pub witness_freq: f64,
    pub bounds: BoundReport,
}

#[derive(Clone, Copy, Default)]
struct InitFlags {
    window: bool,
    witness: bool,
}

/// Monte Carlo frequencies of inactive layers at initialization.
pub fn init_frequencies(
    exp: &Experiment,
    n_trials: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<InitFrequencies> {
    if n_trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let bounds = BoundReport::build(exp.act.name(), &exp.init, &exp.bound_inputs)?;
    let depth = exp.arch.depth();
    let box_ = exp.data.input_box();
    let per_trial = par_map(threads, n_trials, |i| {
        let mut rng = stream(seed, Purpose::Init, i as u64);
        let theta = exp.init.sample(&exp.arch, &mut rng);
        let verdicts = scan_dead_layers(&theta, &exp.act, box_, &mut rng, 0);
        let flags = InitFlags {
            window: certify_layer1_inactive(&theta, exp.bound_inputs.window, box_),
            witness: in_deep_witness_union(&theta, &exp.bound_inputs),
        };
        (verdicts, flags)
    })?;
    let n = n_trials as f64;
    let layer_freq = (0..depth - 1)
        .map(|k| per_trial.iter().filter(|(v, _)| v[k].is_inactive()).count() as f64 / n)
        .collect();
    let count = |f: &dyn Fn(&(Vec<Verdict>, InitFlags)) -> bool| per_trial.iter().filter(|t| f(t)).count() as f64 / n;
    Ok(InitFrequencies {
        schema_version: SCHEMA_VERSION,
        n_trials,
        seed,
        layer_freq,
        any_layer_freq: count(&|t| t.0.iter().any(|v| v.is_inactive())),
        window_freq: count(&|t| t.1.window),
        witness_freq: count(&|t| t.1.witness),
        bounds,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRow {
    pub depth: usize,
    pub arch: Vec<usize>,
    pub trials: usize,
    /// Fraction of initializations with a deep witness layer.
    pub witness_freq: f64,
    /// Fraction with some interval-certified inactive layer.
    pub dead_freq: f64,
    pub layer1_bound: f64,
    pub deep_bound: f64,
    pub combined_bound: f64,
    /// `|witness_freq − deep_bound| ≤ 3σ` with `σ` from the analytic value.
    pub within_3sigma: bool,
    pub train_trials: usize,
    pub train_freq: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepTable {
    pub schema_version: u32,
    pub seed: u64,
    pub width: usize,
    pub rows: Vec<SweepRow>,
    /// Whether `witness_freq` is nondecreasing in depth within 3σ.
    pub nondecreasing: bool,
    pub depth_bound: Option<DepthSweep>,
}

/// Dead-at-init frequencies and bounds for architectures
/// `(l_0, l, …, l, l_L)` of the listed depths.
pub fn depth_sweep_experiment(
    exp: &Experiment,
    width: usize,
    depths: &[usize],
    n_trials: usize,
    train_trials: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<SweepTable> {
    if n_trials == 0 {
        return Err(Error::invalid("sweep.trials", "must be at least 1"));
    }
    let mut rows = Vec::with_capacity(depths.len());
    for &depth in depths {
        let arch = Architecture::uniform(exp.arch.input_dim(), width, depth, exp.arch.output_dim())?;
        let sub = exp.with_arch(arch.clone())?;
        let inputs: &BoundInputs = &sub.bound_inputs;
        let c = combined_bound(&sub.init, inputs)?;
        let box_ = sub.data.input_box();
        let flags = par_map(threads, n_trials, |i| {
            let mut rng = stream(seed, Purpose::Init, ((depth as u64) << 40) | i as u64);
            let theta = sub.init.sample(&arch, &mut rng);
            let witness = in_deep_witness_union(&theta, inputs);
            let dead = witness
                || scan_dead_layers(&theta, &sub.act, box_, &mut rng, 0)
                    .iter()
                    .any(|v| v.is_inactive());
            (witness, dead)
        })?;
        let n = n_trials as f64;
        let witness_freq = flags.iter().filter(|f| f.0).count() as f64 / n;
        let dead_freq = flags.iter().filter(|f| f.1).count() as f64 / n;
        let b = c.deep.value;
        let sigma = (b * (1.0 - b) / n).sqrt();
        let train_freq = if train_trials > 0 {
            let recs = run_trials(&sub, train_trials, seed ^ ((depth as u64) << 40), threads)?;
            let ev = Evaluator::new(&sub, seed);
            let delta = match sub.config.training.delta_gap {
                Some(d) => d,
                None => default_delta_gap(&sub, &ev)?,
            };
            Some(recs.iter().filter(|r| r.final_gap > delta).count() as f64 / train_trials as f64)
        } else {
            None
        };
        rows.push(SweepRow {
            depth,
            arch: arch.widths().to_vec(),
            trials: n_trials,
            witness_freq,
            dead_freq,
            layer1_bound: c.layer1,
            deep_bound: b,
            combined_bound: c.value,
            within_3sigma: (witness_freq - b).abs() <= 3.0 * sigma + 1e-12,
            train_trials,
            train_freq,
        });
    }
    let nondecreasing = rows.windows(2).all(|w| {
        let se = |r: &SweepRow| r.witness_freq * (1.0 - r.witness_freq) / r.trials as f64;
        w[1].witness_freq >= w[0].witness_freq - 3.0 * (se(&w[0]) + se(&w[1])).sqrt()
    });
    let depth_bound = match exp.config.sweep.as_ref().and_then(|s| s.p.map(|p| (p, s))) {
        Some((p, s)) => Some(depth_sweep_bound(
            width,
            depths,
            p,
            DepthExtras {
                inf_bound: exp.act.inf_bound(),
                c_bold: s.c_bold,
                eps: s.eps,
                gamma: exp.bound_inputs.gamma,
            },
        )?),
        None => None,
    };
    Ok(SweepTable {
        schema_version: SCHEMA_VERSION,
        seed,
        width,
        rows,
        nondecreasing,
        depth_bound,
    })
}

/// Random `θ` whose layer `k` is a deep witness; other coordinates from the
/// experiment's law.
pub fn sample_with_witness<R: Rng + ?Sized>(exp: &Experiment, k: usize, rng: &mut R) -> ParamVector {
    let mut theta = exp.init.sample(&exp.arch, rng);
    let rho = exp.bound_inputs.rho().max(-1.0);
    let t = exp.bound_inputs.bias_threshold();
    let range = exp.arch.layer_range(k);
    let n_w = exp.arch.width(k) * exp.arch.width(k - 1);
    for i in range.clone() {
        theta.as_mut_slice()[i] = if i < range.start + n_w {
            rng.random_range(rho..0.0).min(-f64::MIN_POSITIVE).max(rho.next_up())
        } else {
            t - rng.random_range(0.0..1.0) - f64::EPSILON
        };
    }
    theta
}

//! Experiment configuration.
//!
//! A single TOML file describes one experiment:
//!
//! ```toml
//! [architecture]
//! widths = [1, 1, 1]
//!
//! [activation]
//! kind = "relu"                 # relu | clip (lo, hi) | repu (power)
//!
//! [loss]
//! kind = "mse"                  # mse | psi (psi = "sqrt1p" | "log1p" | { pow = q })
//!
//! [data]
//! kind = "discrete"             # discrete | teacher | affine
//! box = [0.0, 1.0]
//! atoms = [{ x = [0.0], y = [0.0], p = 0.5 }, { x = [1.0], y = [1.0], p = 0.5 }]
//! reference_optimum = 0.0
//!
//! [init.base]
//! law = "normal"                # normal | uniform | point_mass | scaled_normal
//! mu = 0.0
//! sigma = 1.0
//!
//! [optimizer]
//! method = "sgd"
//! schedule = { constant = 0.05 } # constant | inverse_time | custom = [...]
//!
//! [training]
//! steps = 2000
//! batch_size = 4
//! trials = 100
//! seed = 1
//! ```
//!
//! Optional sections: `[optimizer.hyper]`, `[[init.override]]`, `[bound]`,
//! `[sweep]`. The only environment input is `NONCONV_SEED`, which replaces
//! `training.seed`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::activation::{ActivationFamily, ActivationSpec};
use crate::ann::{Architecture, ParamVector};
use crate::error::{Error, Result};
use crate::inactivity::{BoundInputs, Window};
use crate::init::{CoordLaw, InitDistribution};
use crate::loss::{Atom, DataDistribution, InputBox, Loss, PsiKind};
use crate::optim::{Hyper, Method, Schedule};
use crate::rng::{stream, Purpose};

pub const SEED_ENV: &str = "NONCONV_SEED";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub architecture: ArchitectureSection,
    pub activation: ActivationSpec,
    #[serde(default)]
    pub loss: LossSpec,
    pub data: DataSpec,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default)]
    pub optimizer: OptimizerSpec,
    #[serde(default)]
    pub training: TrainingSpec,
    #[serde(default)]
    pub bound: BoundSpec,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureSection {
    pub widths: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LossSpec {
    #[default]
    Mse,
    Psi {
        psi: PsiKind,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DataSpec {
    Discrete {
        #[serde(rename = "box")]
        input_box: InputBox,
        atoms: Vec<Atom>,
        reference_optimum: f64,
    },
    /// Teacher network of the configured architecture and activation with
    /// standard normal parameters drawn from `teacher_seed`.
    Teacher {
        #[serde(rename = "box")]
        input_box: InputBox,
        noise: f64,
        teacher_seed: u64,
        #[serde(default)]
        reference_optimum: Option<f64>,
    },
    Affine {
        #[serde(rename = "box")]
        input_box: InputBox,
        slope: Vec<f64>,
        intercept: f64,
        noise: f64,
        #[serde(default)]
        reference_optimum: Option<f64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Weights,
    Biases,
    All,
}

/// Replaces the law of a block of coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitOverride {
    pub layer: usize,
    #[serde(default = "default_part")]
    pub part: Part,
    pub law: CoordLaw,
}

fn default_part() -> Part {
    Part::All
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitSpec {
    pub base: CoordLaw,
    #[serde(rename = "override")]
    pub overrides: Vec<InitOverride>,
}

impl Default for InitSpec {
    fn default() -> Self {
        InitSpec {
            base: CoordLaw::STANDARD_NORMAL,
            overrides: Vec::new(),
        }
    }
}

impl InitSpec {
    pub fn build(&self, arch: &Architecture) -> Result<InitDistribution> {
        self.base.validate()?;
        if self.overrides.is_empty() {
            return Ok(InitDistribution::Iid(self.base));
        }
        let mut laws = vec![self.base; arch.param_count()];
        for (n, o) in self.overrides.iter().enumerate() {
            if o.layer == 0 || o.layer > arch.depth() {
                return Err(Error::invalid(
                    format!("init.override[{n}].layer"),
                    format!("must be in 1..={}", arch.depth()),
                ));
            }
            o.law.validate()?;
            let range = arch.layer_range(o.layer);
            let split = range.start + arch.width(o.layer) * arch.width(o.layer - 1);
            let target = match o.part {
                Part::Weights => range.start..split,
                Part::Biases => split..range.end,
                Part::All => range,
            };
            for l in &mut laws[target] {
                *l = o.law;
            }
        }
        Ok(InitDistribution::PerCoordinate(laws))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSpec {
    pub method: Method,
    pub schedule: Schedule,
    pub hyper: Hyper,
}

impl Default for OptimizerSpec {
    fn default() -> Self {
        OptimizerSpec {
            method: Method::Sgd,
            schedule: Schedule::Constant(0.01),
            hyper: Hyper::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BatchMode {
    /// `batch_size` fresh i.i.d. samples per step.
    Iid,
    /// Every atom of an exact-support distribution with equal weights.
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSpec {
    pub steps: usize,
    pub batch_size: usize,
    pub batch_mode: BatchMode,
    /// Risk is logged at step 0, every `log_every` steps, and at the end.
    pub log_every: usize,
    /// Held-out evaluation size for distributions without exact support.
    pub eval_samples: usize,
    /// Falsifier points per layer when certifying dead layers.
    pub falsifier_samples: usize,
    /// Redraw the initialization until some layer is certified inactive.
    pub condition_on_dead_init: bool,
    pub max_rejections: u64,
    /// Non-convergence margin; defaults to half the constant-vs-optimum gap.
    pub delta_gap: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl Default for TrainingSpec {
    fn default() -> Self {
        TrainingSpec {
            steps: 1000,
            batch_size: 4,
            batch_mode: BatchMode::Iid,
            log_every: 10,
            eval_samples: 4096,
            falsifier_samples: 64,
            condition_on_dead_init: false,
            max_rejections: 10_000_000,
            delta_gap: None,
            trials: 100,
            seed: 0,
            threads: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundSpec {
    pub window: Option<Window>,
    pub gamma: Option<f64>,
    pub chi: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Hidden width `l` of every hidden layer.
    pub width: usize,
    pub depths: Vec<usize>,
    /// Initializations per depth.
    #[serde(default = "default_sweep_trials")]
    pub trials: usize,
    /// Also train `train_trials` networks per depth.
    #[serde(default)]
    pub train_trials: usize,
    /// Depth-sweep bound parameters; omitted `p` skips that bound.
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default = "default_c_bold")]
    pub c_bold: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_sweep_trials() -> usize {
    10_000
}

fn default_c_bold() -> f64 {
    2.0
}

fn default_eps() -> f64 {
    1.0
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Config::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies `NONCONV_SEED` when set.
    pub fn apply_env_seed(&mut self) -> Result<()> {
        match std::env::var(SEED_ENV) {
            Ok(v) => {
                self.training.seed = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::invalid(SEED_ENV, format!("not an unsigned integer: {v:?}")))?;
                Ok(())
            }
            Err(_) => Ok(()),
        }
    }
}

/// A validated configuration with every component built.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: Config,
    pub arch: Architecture,
    pub act: ActivationFamily,
    pub loss: Loss,
    pub data: DataDistribution,
    pub init: InitDistribution,
    pub reference_optimum: f64,
    pub bound_inputs: BoundInputs,
}

impl Experiment {
    pub fn from_config(config: Config) -> Result<Self> {
        let arch = Architecture::new(config.architecture.widths.clone())
            .map_err(|e| Error::invalid("architecture.widths", e.to_string()))?;
        Experiment::build(config, arch)
    }

    /// Same experiment on another architecture with the same input and
    /// output dimensions.
    pub fn with_arch(&self, arch: Architecture) -> Result<Self> {
        Experiment::build(self.config.clone(), arch)
    }

    fn build(config: Config, arch: Architecture) -> Result<Self> {
        let act = config.activation.build()?;
        let loss = match &config.loss {
            LossSpec::Mse => Loss::Mse,
            LossSpec::Psi { psi } => {
                if let PsiKind::Pow(q) = psi {
                    if !(*q > 0.0) {
                        return Err(Error::invalid("loss.psi", "pow exponent must be positive"));
                    }
                }
                if arch.output_dim() != 1 {
                    return Err(Error::invalid("loss", "ψ-losses are supported for scalar output only"));
                }
                Loss::psi(*psi)
            }
        };
        let (data, reference_optimum) = build_data(&config, &arch, &act, &loss)?;
        if data.input_dim() != arch.input_dim() || data.output_dim() != arch.output_dim() {
            return Err(Error::invalid(
                "data",
                format!(
                    "data has input/output dimensions ({}, {}) but the architecture needs ({}, {})",
                    data.input_dim(),
                    data.output_dim(),
                    arch.input_dim(),
                    arch.output_dim()
                ),
            ));
        }
        let init = config.init.build(&arch)?;
        let t = &config.training;
        validate_training(t, &data)?;
        config.optimizer.hyper.validate()?;
        config.optimizer.schedule.validate(Some(t.steps))?;
        let mut bound_inputs = BoundInputs::new(arch.clone(), &act, data.input_box())?;
        if let Some(w) = config.bound.window {
            bound_inputs.window = w;
        }
        if let Some(g) = config.bound.gamma {
            bound_inputs.gamma = g;
        }
        if let Some(c) = config.bound.chi {
            bound_inputs.chi = c;
        }
        bound_inputs.validate()?;
        if let Some(s) = &config.sweep {
            if s.width == 0 || s.depths.is_empty() || s.depths.iter().any(|&d| d < 2) {
                return Err(Error::invalid(
                    "sweep",
                    "need width >= 1 and a nonempty list of depths >= 2",
                ));
            }
        }
        Ok(Experiment {
            config,
            arch,
            act,
            loss,
            data,
            init,
            reference_optimum,
            bound_inputs,
        })
    }

    pub fn seed(&self) -> u64 {
        self.config.training.seed
    }
}

fn validate_training(t: &TrainingSpec, data: &DataDistribution) -> Result<()> {
    if t.log_every == 0 {
        return Err(Error::invalid("training.log_every", "must be at least 1"));
    }
    if t.batch_mode == BatchMode::Iid && t.batch_size == 0 {
        return Err(Error::invalid("training.batch_size", "must be at least 1"));
    }
    if t.batch_mode == BatchMode::Full {
        let atoms = data
            .exact_support()
            .ok_or_else(|| Error::invalid("training.batch_mode", "full batches need discrete data"))?;
        if atoms.iter().any(|a| a.prob != atoms[0].prob) {
            return Err(Error::invalid(
                "training.batch_mode",
                "full batches need equally weighted atoms",
            ));
        }
    }
    if data.exact_support().is_none() && t.eval_samples < 2 {
        return Err(Error::invalid("training.eval_samples", "must be at least 2"));
    }
    if t.trials == 0 {
        return Err(Error::invalid("training.trials", "must be at least 1"));
    }
    if t.threads == Some(0) {
        return Err(Error::invalid("training.threads", "must be at least 1"));
    }
    if let Some(d) = t.delta_gap {
        if !(d > 0.0) {
            return Err(Error::invalid("training.delta_gap", "must be positive"));
        }
    }
    Ok(())
}

fn build_data(
    config: &Config,
    arch: &Architecture,
    act: &ActivationFamily,
    loss: &Loss,
) -> Result<(DataDistribution, f64)> {
    let is_mse = matches!(loss, Loss::Mse);
    let need_ref = |r: Option<f64>, default: f64| -> Result<f64> {
        match r {
            Some(v) => Ok(v),
            None if is_mse => Ok(default),
            None => Err(Error::invalid("data.reference_optimum", "required for ψ-losses")),
        }
    };
    let check_box = |b: InputBox| InputBox::new(b.lo, b.hi).map_err(|e| Error::invalid("data.box", e.to_string()));
    let check_noise = |n: f64| {
        if n.is_finite() && n >= 0.0 {
            Ok(())
        } else {
            Err(Error::invalid("data.noise", "must be finite and >= 0"))
        }
    };
    match &config.data {
        DataSpec::Discrete {
            input_box,
            atoms,
            reference_optimum,
        } => {
            let b = check_box(*input_box)?;
            let d = DataDistribution::discrete(b, atoms.clone())?;
            Ok((d, *reference_optimum))
        }
        DataSpec::Teacher {
            input_box,
            noise,
            teacher_seed,
            reference_optimum,
        } => {
            check_noise(*noise)?;
            let b = check_box(*input_box)?;
            let teacher_arch = Architecture::new(config.architecture.widths.clone())?;
            let teacher = InitDistribution::standard_normal()
                .sample(&teacher_arch, &mut stream(*teacher_seed, Purpose::Teacher, 0));
            let r = need_ref(*reference_optimum, noise * noise * teacher_arch.output_dim() as f64)?;
            let _ = arch;
            Ok((
                DataDistribution::Teacher {
                    input_box: b,
                    teacher,
                    act: act.clone(),
                    noise: *noise,
                },
                r,
            ))
        }
        DataSpec::Affine {
            input_box,
            slope,
            intercept,
            noise,
            reference_optimum,
        } => {
            check_noise(*noise)?;
            let b = check_box(*input_box)?;
            let r = need_ref(*reference_optimum, noise * noise)?;
            Ok((
                DataDistribution::Affine {
                    input_box: b,
                    slope: slope.clone(),
                    intercept: *intercept,
                    noise: *noise,
                },
                r,
            ))
        }
    }
}

/// Teacher parameters used by a teacher-data config.
pub fn teacher_params(config: &Config) -> Option<ParamVector> {
    match &config.data {
        DataSpec::Teacher { teacher_seed, .. } => {
            let a = Architecture::new(config.architecture.widths.clone()).ok()?;
            Some(InitDistribution::standard_normal().sample(&a, &mut stream(*teacher_seed, Purpose::Teacher, 0)))
        }
        _ => None,
    }
}

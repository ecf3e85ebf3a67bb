//! History-dependent update rules.
//!
//! Every shipped method keeps per-coordinate state that stays at zero while the
//! coordinate's gradient is zero, so such coordinates never move.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sgd,
    Momentum,
    Nesterov,
    Adagrad,
    Rmsprop,
    Adadelta,
    Adam,
    Adamax,
    Amsgrad,
    /// Experimental.
    Nadam,
    /// Experimental.
    Nadamax,
}

impl Method {
    pub const ALL: [Method; 11] = [
        Method::Sgd,
        Method::Momentum,
        Method::Nesterov,
        Method::Adagrad,
        Method::Rmsprop,
        Method::Adadelta,
        Method::Adam,
        Method::Adamax,
        Method::Amsgrad,
        Method::Nadam,
        Method::Nadamax,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sgd => "sgd",
            Method::Momentum => "momentum",
            Method::Nesterov => "nesterov",
            Method::Adagrad => "adagrad",
            Method::Rmsprop => "rmsprop",
            Method::Adadelta => "adadelta",
            Method::Adam => "adam",
            Method::Adamax => "adamax",
            Method::Amsgrad => "amsgrad",
            Method::Nadam => "nadam",
            Method::Nadamax => "nadamax",
        }
    }

    pub fn is_experimental(self) -> bool {
        matches!(self, Method::Nadam | Method::Nadamax)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Hyperparameters shared across methods; each method reads only its own.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyper {
    /// First-moment decay (Adam family).
    pub beta1: f64,
    /// Second-moment decay (Adam family).
    pub beta2: f64,
    /// Stabilizer added to denominators.
    pub eps: f64,
    /// Momentum coefficient (momentum, Nesterov).
    pub momentum: f64,
    /// Squared-gradient decay (RMSprop, Adadelta).
    pub rho: f64,
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            momentum: 0.9,
            rho: 0.9,
        }
    }
}

impl Hyper {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::invalid(
                    format!("optimizer.{name}"),
                    format!("must lie in [0, 1), got {v}"),
                ))
            }
        };
        unit("beta1", self.beta1)?;
        unit("beta2", self.beta2)?;
        unit("momentum", self.momentum)?;
        unit("rho", self.rho)?;
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::invalid("optimizer.eps", "must be positive"));
        }
        Ok(())
    }
}

/// Learning rates `γ_n`, `n = 1, 2, ...`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    Constant(f64),
    /// `γ_n = γ₀ / n`
    InverseTime(f64),
    Custom(Vec<f64>),
}

impl Schedule {
    pub fn rate(&self, n: u64) -> Result<f64> {
        debug_assert!(n >= 1);
        match self {
            Schedule::Constant(g) => Ok(*g),
            Schedule::InverseTime(g) => Ok(g / n as f64),
            Schedule::Custom(v) => v.get((n - 1) as usize).copied().ok_or_else(|| {
                Error::invalid(
                    "optimizer.schedule",
                    format!("custom schedule has {} entries, step {n} requested", v.len()),
                )
            }),
        }
    }

    pub fn validate(&self, steps: Option<usize>) -> Result<()> {
        let check = |g: f64| {
            if g.is_finite() && g >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(
                    "optimizer.schedule",
                    format!("learning rate {g} must be finite and >= 0"),
                ))
            }
        };
        match self {
            Schedule::Constant(g) | Schedule::InverseTime(g) => check(*g),
            Schedule::Custom(v) => {
                v.iter().try_for_each(|&g| check(g))?;
                match steps {
                    Some(s) if v.len() < s => Err(Error::invalid(
                        "optimizer.schedule",
                        format!("custom schedule has {} entries but {s} steps are configured", v.len()),
                    )),
                    _ => Ok(()),
                }
            }
        }
    }
}

/// One step of `θ_n = Φ_n(history)` given the newest gradient.
pub trait UpdateRule: Send {
    fn step(&mut self, theta: &mut [f64], grad: &[f64]) -> Result<()>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    method: Method,
    hyper: Hyper,
    schedule: Schedule,
    n: u64,
    m: Vec<f64>,
    v: Vec<f64>,
    aux: Vec<f64>,
}

impl OptimizerState {
    pub fn new(method: Method, hyper: Hyper, schedule: Schedule, dim: usize) -> Result<Self> {
        hyper.validate()?;
        schedule.validate(None)?;
        let aux_len = match method {
            Method::Amsgrad | Method::Adadelta => dim,
            _ => 0,
        };
        Ok(OptimizerState {
            method,
            hyper,
            schedule,
            n: 0,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
            aux: vec![0.0; aux_len],
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn steps_taken(&self) -> u64 {
        self.n
    }
}

impl UpdateRule for OptimizerState {
    fn step(&mut self, theta: &mut [f64], grad: &[f64]) -> Result<()> {
        if grad.len() != self.m.len() || theta.len() != self.m.len() {
            return Err(Error::Dimension {
                what: "optimizer step",
                expected: self.m.len(),
                got: if grad.len() != self.m.len() {
                    grad.len()
                } else {
                    theta.len()
                },
            });
        }
        let n = self.n + 1;
        let lr = self.schedule.rate(n)?;
        self.n = n;
        let Hyper {
            beta1: b1,
            beta2: b2,
            eps,
            momentum: mu,
            rho,
        } = self.hyper;
        let bc1 = 1.0 - b1.powi(n as i32);
        let bc2 = 1.0 - b2.powi(n as i32);
        let m = &mut self.m;
        let v = &mut self.v;
        match self.method {
            Method::Sgd => {
                for (t, g) in theta.iter_mut().zip(grad) {
                    *t -= lr * g;
                }
            }
            Method::Momentum => {
                // v ← μv + g, θ ← θ − γv
                for i in 0..theta.len() {
                    m[i] = mu * m[i] + grad[i];
                    theta[i] -= lr * m[i];
                }
            }
            Method::Nesterov => {
                // v ← μv + g, θ ← θ − γ(g + μv)
                for i in 0..theta.len() {
                    m[i] = mu * m[i] + grad[i];
                    theta[i] -= lr * (grad[i] + mu * m[i]);
                }
            }
            Method::Adagrad => {
                for i in 0..theta.len() {
                    v[i] += grad[i] * grad[i];
                    theta[i] -= lr * grad[i] / (v[i].sqrt() + eps);
                }
            }
            Method::Rmsprop => {
                for i in 0..theta.len() {
                    v[i] = rho * v[i] + (1.0 - rho) * grad[i] * grad[i];
                    theta[i] -= lr * grad[i] / (v[i].sqrt() + eps);
                }
            }
            Method::Adadelta => {
                // v: squared gradients, aux: squared updates
                let u = &mut self.aux;
                for i in 0..theta.len() {
                    v[i] = rho * v[i] + (1.0 - rho) * grad[i] * grad[i];
                    let delta = (u[i] + eps).sqrt() / (v[i] + eps).sqrt() * grad[i];
                    u[i] = rho * u[i] + (1.0 - rho) * delta * delta;
                    theta[i] -= lr * delta;
                }
            }
            Method::Adam => {
                for i in 0..theta.len() {
                    m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
                    v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
                    theta[i] -= lr * (m[i] / bc1) / ((v[i] / bc2).sqrt() + eps);
                }
            }
            Method::Adamax => {
                for i in 0..theta.len() {
                    m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
                    v[i] = (b2 * v[i]).max(grad[i].abs());
                    theta[i] -= lr / bc1 * m[i] / (v[i] + eps);
                }
            }
            Method::Amsgrad => {
                let vmax = &mut self.aux;
                for i in 0..theta.len() {
                    m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
                    v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
                    vmax[i] = vmax[i].max(v[i]);
                    theta[i] -= lr * (m[i] / bc1) / ((vmax[i] / bc2).sqrt() + eps);
                }
            }
            Method::Nadam | Method::Nadamax => {
                // Nesterov-corrected first moment: β₁m̂_{n+1} + (1−β₁)g/(1−β₁ⁿ)
                let bc1_next = 1.0 - b1.powi(n as i32 + 1);
                for i in 0..theta.len() {
                    m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
                    let m_bar = b1 * m[i] / bc1_next + (1.0 - b1) * grad[i] / bc1;
                    let denom = if self.method == Method::Nadam {
                        v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
                        (v[i] / bc2).sqrt() + eps
                    } else {
                        v[i] = (b2 * v[i]).max(grad[i].abs());
                        v[i] + eps
                    };
                    theta[i] -= lr * m_bar / denom;
                }
            }
        }
        Ok(())
    }
}

/// Checks that coordinates with an all-zero gradient history stay
/// bit-identical, over `trials` random histories of length at most 50.
pub fn verify_phi_condition(method: Method, hyper: Hyper, trials: usize, seed: u64) -> bool {
    verify_phi_condition_with(
        |dim, lr| {
            OptimizerState::new(method, hyper, Schedule::Constant(lr), dim)
                .map(|s| Box::new(s) as Box<dyn UpdateRule>)
                .expect("valid hyperparameters")
        },
        trials,
        seed,
    )
}

/// As [`verify_phi_condition`] for an arbitrary rule built by
/// `factory(dim, learning_rate)`.
pub fn verify_phi_condition_with(
    factory: impl Fn(usize, f64) -> Box<dyn UpdateRule>,
    trials: usize,
    seed: u64,
) -> bool {
    for trial in 0..trials as u64 {
        let mut rng = stream(seed, Purpose::Verification, trial);
        let dim = rng.random_range(1..=12);
        let len = rng.random_range(1..=50);
        let lr = rng.random_range(1e-4..1.0);
        let mut zeroed: Vec<bool> = (0..dim).map(|_| rng.random_bool(0.5)).collect();
        if !zeroed.iter().any(|&z| z) {
            zeroed[rng.random_range(0..dim)] = true;
        }
        let mut theta: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        let frozen: Vec<u64> = theta.iter().map(|t| t.to_bits()).collect();
        let mut rule = factory(dim, lr);
        for _ in 0..len {
            let scale = 10f64.powf(rng.random_range(-3.0..2.0));
            let grad: Vec<f64> = zeroed
                .iter()
                .map(|&z| if z { 0.0 } else { scale * rng.random_range(-1.0..1.0) })
                .collect();
            if rule.step(&mut theta, &grad).is_err() {
                return false;
            }
            let moved = zeroed
                .iter()
                .zip(&theta)
                .zip(&frozen)
                .any(|((&z, t), &bits)| z && t.to_bits() != bits);
            if moved {
                return false;
            }
        }
    }
    true
}

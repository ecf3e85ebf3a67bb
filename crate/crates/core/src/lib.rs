//! Dead layers and non-convergence of gradient methods for deep networks.
//!
//! Fully connected feedforward networks with a flat activation region, their
//! generalized gradients, a family of history-dependent optimizers,
//! certification of inactive layers, closed-form lower bounds on the
//! probability of an inactive layer at initialization, and a Monte Carlo
//! harness that compares those bounds with simulated training.

pub mod activation;
pub mod ann;
pub mod autodiff;
pub mod bounds;
pub mod config;
pub mod error;
pub mod experiments;
pub mod inactivity;
pub mod init;
pub mod interval;
pub mod loss;
pub mod normal;
pub mod optim;
pub mod rng;

pub use activation::{ActivationFamily, ActivationSpec, ScalarActivation};
pub use ann::{forward, realize, Architecture, ForwardTrace, ParamVector};
pub use error::{Error, Result};
pub use inactivity::{BoundInputs, Verdict, Window};
pub use init::{CoordLaw, InitDistribution};
pub use loss::{DataDistribution, InputBox, Loss, Sample};
pub use optim::{Hyper, Method, OptimizerState, Schedule, UpdateRule};

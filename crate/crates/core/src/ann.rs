//! Fully-connected feedforward networks over a flat parameter vector.
//!
//! Parameters are laid out layer by layer. Within layer `k` the `l_k × l_{k-1}`
//! weight matrix comes first (row-major: all incoming weights of neuron 1,
//! then neuron 2, ...), followed by the `l_k` biases. The activation is
//! applied to every hidden layer and never to the output layer.
//!
//! Storage is 0-based. [`Architecture::weight_index`] and
//! [`Architecture::bias_index`] speak the 1-based convention used for
//! layer/neuron/flat indices in the analysis (flat index = storage index + 1).

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::activation::ActivationFamily;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Architecture {
    widths: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Architecture {
    type Error = Error;

    fn try_from(widths: Vec<usize>) -> Result<Self> {
        Architecture::new(widths)
    }
}

impl From<Architecture> for Vec<usize> {
    fn from(a: Architecture) -> Self {
        a.widths
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, w) in self.widths.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{w}")?;
        }
        write!(f, ")")
    }
}

impl Architecture {
    pub fn new(widths: Vec<usize>) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::Architecture(format!(
                "need at least input and output widths, got {widths:?}"
            )));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(Error::Architecture(format!("every width must be >= 1, got {widths:?}")));
        }
        Ok(Architecture { widths })
    }

    /// Input width, a hidden block of `depth - 1` layers of width `width`, and
    /// output width.
    pub fn uniform(input: usize, width: usize, depth: usize, output: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Architecture("depth must be >= 1".into()));
        }
        let mut widths = Vec::with_capacity(depth + 1);
        widths.push(input);
        widths.extend(std::iter::repeat_n(width, depth - 1));
        widths.push(output);
        Architecture::new(widths)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    /// Number of affine layers `L`.
    pub fn depth(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn width(&self, k: usize) -> usize {
        self.widths[k]
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        self.widths[self.depth()]
    }

    /// `sum_k l_k (l_{k-1} + 1)`.
    pub fn param_count(&self) -> usize {
        self.prefix_count(self.depth())
    }

    /// Number of parameters in layers `1..=k`.
    pub fn prefix_count(&self, k: usize) -> usize {
        (1..=k).map(|i| self.widths[i] * (self.widths[i - 1] + 1)).sum()
    }

    /// Storage range of layer `k` (weights then biases), `1 <= k <= L`.
    pub fn layer_range(&self, k: usize) -> Range<usize> {
        self.prefix_count(k - 1)..self.prefix_count(k)
    }

    /// 1-based flat index of the weight from neuron `j` of layer `k-1` into
    /// neuron `i` of layer `k` (all 1-based).
    pub fn weight_index(&self, k: usize, i: usize, j: usize) -> usize {
        debug_assert!(k >= 1 && k <= self.depth());
        debug_assert!(i >= 1 && i <= self.widths[k] && j >= 1 && j <= self.widths[k - 1]);
        (i - 1) * self.widths[k - 1] + j + self.prefix_count(k - 1)
    }

    /// 1-based flat index of the bias of neuron `i` in layer `k`.
    pub fn bias_index(&self, k: usize, i: usize) -> usize {
        debug_assert!(k >= 1 && k <= self.depth());
        debug_assert!(i >= 1 && i <= self.widths[k]);
        self.widths[k] * self.widths[k - 1] + i + self.prefix_count(k - 1)
    }

    /// Number of leading coordinates that precede the output layer.
    pub fn hidden_param_count(&self) -> usize {
        self.prefix_count(self.depth() - 1)
    }

    pub fn max_width(&self) -> usize {
        self.widths.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector {
    arch: Architecture,
    theta: Vec<f64>,
}

impl ParamVector {
    pub fn new(arch: Architecture, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != arch.param_count() {
            return Err(Error::Dimension {
                what: "parameter vector",
                expected: arch.param_count(),
                got: theta.len(),
            });
        }
        Ok(ParamVector { arch, theta })
    }

    pub fn zeros(arch: Architecture) -> Self {
        let theta = vec![0.0; arch.param_count()];
        ParamVector { arch, theta }
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.theta
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Weight by 1-based `(k, i, j)`.
    pub fn weight(&self, k: usize, i: usize, j: usize) -> f64 {
        self.theta[self.arch.weight_index(k, i, j) - 1]
    }

    pub fn set_weight(&mut self, k: usize, i: usize, j: usize, value: f64) {
        let idx = self.arch.weight_index(k, i, j) - 1;
        self.theta[idx] = value;
    }

    /// Bias by 1-based `(k, i)`.
    pub fn bias(&self, k: usize, i: usize) -> f64 {
        self.theta[self.arch.bias_index(k, i) - 1]
    }

    pub fn set_bias(&mut self, k: usize, i: usize, value: f64) {
        let idx = self.arch.bias_index(k, i) - 1;
        self.theta[idx] = value;
    }

    /// Weight matrix (row-major, `l_k × l_{k-1}`) and bias slice of layer `k`.
    pub fn layer(&self, k: usize) -> (&[f64], &[f64]) {
        layer_slices(&self.arch, &self.theta, k)
    }
}

#[inline]
pub(crate) fn layer_slices<'a>(arch: &Architecture, theta: &'a [f64], k: usize) -> (&'a [f64], &'a [f64]) {
    let range = arch.layer_range(k);
    let n_w = arch.widths[k] * arch.widths[k - 1];
    let layer = &theta[range];
    layer.split_at(n_w)
}

/// Pre-activations of every layer `1..=L`; the last entry is the output.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace {
    pub pre_activations: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.pre_activations.last().expect("at least one layer")
    }

    /// Pre-activations of layer `k` (1-based).
    pub fn layer(&self, k: usize) -> &[f64] {
        &self.pre_activations[k - 1]
    }
}

/// Evaluates the realization with activation approximation `r` (`0` = exact).
pub(crate) fn forward_raw(
    arch: &Architecture,
    theta: &[f64],
    act: &ActivationFamily,
    r: u32,
    x: &[f64],
) -> Vec<Vec<f64>> {
    let depth = arch.depth();
    let mut pre: Vec<Vec<f64>> = Vec::with_capacity(depth);
    let mut input: Vec<f64> = x.to_vec();
    for k in 1..=depth {
        let (w, b) = layer_slices(arch, theta, k);
        let n_in = arch.widths[k - 1];
        let z: Vec<f64> = b
            .iter()
            .enumerate()
            .map(|(i, &bias)| {
                let row = &w[i * n_in..(i + 1) * n_in];
                row.iter().zip(&input).fold(bias, |acc, (wij, xj)| acc + wij * xj)
            })
            .collect();
        if k < depth {
            input = z.iter().map(|&v| act.value_at(r, v)).collect();
        }
        pre.push(z);
    }
    pre
}

pub fn forward(theta: &ParamVector, act: &ActivationFamily, x: &[f64]) -> Result<ForwardTrace> {
    forward_with(theta, act, 0, x)
}

/// Forward pass using the `r`-th activation approximation.
pub fn forward_with(theta: &ParamVector, act: &ActivationFamily, r: u32, x: &[f64]) -> Result<ForwardTrace> {
    if x.len() != theta.arch.input_dim() {
        return Err(Error::Dimension {
            what: "network input",
            expected: theta.arch.input_dim(),
            got: x.len(),
        });
    }
    Ok(ForwardTrace {
        pre_activations: forward_raw(&theta.arch, &theta.theta, act, r, x),
    })
}

/// Output of the realization only.
pub fn realize(theta: &ParamVector, act: &ActivationFamily, x: &[f64]) -> Result<Vec<f64>> {
    let mut t = forward(theta, act, x)?;
    Ok(t.pre_activations.pop().expect("at least one layer"))
}

/// Scalar chain `N^0(x) = A(x)`, `N^v(x) = A(eta_v N^{v-1}(x) + zeta_v)`.
pub fn scalar_chain(act: &ActivationFamily, eta: &[f64], zeta: &[f64], x: f64) -> f64 {
    eta.iter()
        .zip(zeta)
        .fold(act.value(x), |n, (&e, &z)| act.value(e * n + z))
}

/// Parameters whose realization is `x ↦ y + r·e·N^{L-2}(w·x + z)`, with
/// `N` the [`scalar_chain`] over `(eta, zeta)`.
///
/// Only the first neuron of every hidden layer is wired; every other
/// coordinate is zero.
#[allow(clippy::too_many_arguments)]
pub fn embed_scalar_chain(
    arch: &Architecture,
    r: f64,
    w: &[f64],
    z: f64,
    eta: &[f64],
    zeta: &[f64],
    y: &[f64],
    e: &[f64],
) -> Result<ParamVector> {
    let depth = arch.depth();
    if depth < 2 {
        return Err(Error::Architecture(
            "scalar chain embedding needs at least one hidden layer".into(),
        ));
    }
    let check = |what: &'static str, expected: usize, got: usize| {
        if expected != got {
            Err(Error::Dimension { what, expected, got })
        } else {
            Ok(())
        }
    };
    check("w", arch.input_dim(), w.len())?;
    check("eta", depth - 2, eta.len())?;
    check("zeta", depth - 2, zeta.len())?;
    check("y", arch.output_dim(), y.len())?;
    check("e", arch.output_dim(), e.len())?;

    let mut theta = ParamVector::zeros(arch.clone());
    for (j, &wj) in w.iter().enumerate() {
        theta.set_weight(1, 1, j + 1, wj);
    }
    theta.set_bias(1, 1, z);
    for v in 1..=depth - 2 {
        theta.set_weight(v + 1, 1, 1, eta[v - 1]);
        theta.set_bias(v + 1, 1, zeta[v - 1]);
    }
    for i in 1..=arch.output_dim() {
        theta.set_weight(depth, i, 1, r * e[i - 1]);
        theta.set_bias(depth, i, y[i - 1]);
    }
    Ok(theta)
}

/// Witness that `x ↦ A(a·A(x) + b)` is non-constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonconstancyWitness {
    pub x: f64,
    pub a: f64,
    pub b: f64,
}

/// Finds `(a, b)` with `A(a·A(x) + b) ≠ A(a·A(0) + b)` from a probe `x` where
/// `A(x) ≠ A(0)`, using `a = x / (A(x) - A(0))`, `b = -x·A(0) / (A(x) - A(0))`.
/// Returns `None` when no probe yields a verified witness.
pub fn find_nonconstancy_composition(act: &ActivationFamily, probes: &[f64]) -> Option<NonconstancyWitness> {
    let a0 = act.value(0.0);
    probes.iter().copied().filter(|x| x.is_finite()).find_map(|x| {
        let ax = act.value(x);
        let diff = ax - a0;
        if diff == 0.0 || !diff.is_finite() {
            return None;
        }
        let a = x / diff;
        let b = -x * a0 / diff;
        let lhs = act.value(a * ax + b);
        let rhs = act.value(a * a0 + b);
        (lhs != rhs).then_some(NonconstancyWitness { x, a, b })
    })
}

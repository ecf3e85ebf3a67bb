//! Analytic lower bounds on the probability that the initialization has an
//! inactive layer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inactivity::{BoundInputs, Window};
use crate::init::InitDistribution;
use crate::normal::{normal_cdf, normal_pdf};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Per-neuron factor `ϱ_i` of the layer-1 bound.
pub fn layer1_factors(dist: &InitDistribution, inputs: &BoundInputs) -> Vec<f64> {
    let arch = &inputs.arch;
    let (l0, l1) = (arch.input_dim(), arch.width(1));
    let Window { eta, zeta } = inputs.window;
    let bias_lo = (3.0 * eta + zeta) / 4.0;
    let bias_hi = (eta + 3.0 * zeta) / 4.0;
    let scale = 1f64.max(inputs.input_box.lo.abs()).max(inputs.input_box.hi.abs());
    let t = (zeta - eta) / (2.0 * l0 as f64 * scale);
    (1..=l1)
        .map(|i| {
            let bias = dist.prob_between(arch.bias_index(1, i) - 1, bias_lo, bias_hi);
            (1..=l0).fold(bias, |acc, j| {
                acc * dist.prob_between(arch.weight_index(1, i, j) - 1, -t, t)
            })
        })
        .collect()
}

/// `∏_i ϱ_i`: probability that every layer-1 bias sits in the middle half of
/// the window and every layer-1 weight is small enough to keep the
/// pre-activation inside it.
pub fn layer1_bound(dist: &InitDistribution, inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    Ok(layer1_factors(dist, inputs).iter().product())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeepBound {
    pub value: f64,
    pub applicable: bool,
    /// Probability of the witness event at each layer `k = 2..=L−1`.
    pub layer_terms: Vec<f64>,
    pub diagnostic: Option<String>,
}

/// `1 − ∏_{k=2}^{L−1} [1 − P(layer k is a deep witness)]`.
///
/// Reported as `0` with a diagnostic when the flat interval is bounded below
/// or too few coordinates are independent.
pub fn deep_layer_bound(dist: &InitDistribution, inputs: &BoundInputs) -> Result<DeepBound> {
    inputs.validate()?;
    let arch = &inputs.arch;
    let depth = arch.depth();
    let inapplicable = |msg: String| DeepBound {
        value: 0.0,
        applicable: false,
        layer_terms: Vec::new(),
        diagnostic: Some(msg),
    };
    if inputs.flat_lo != f64::NEG_INFINITY {
        return Ok(inapplicable(format!(
            "flat interval is bounded below ({}); deep bound needs it unbounded",
            inputs.flat_lo
        )));
    }
    let needed = arch.param_count() - arch.width(depth) * arch.width(depth - 1) - arch.width(depth);
    if inputs.chi < needed {
        return Ok(inapplicable(format!(
            "only {} independent coordinates, deep bound needs {needed}",
            inputs.chi
        )));
    }
    let rho = inputs.rho();
    let t = inputs.bias_threshold();
    let layer_terms: Vec<f64> = (2..depth)
        .map(|k| {
            let range = arch.layer_range(k);
            let n_w = arch.width(k) * arch.width(k - 1);
            let weights = (range.start..range.start + n_w).fold(1.0, |acc, i| {
                let p = if rho == f64::NEG_INFINITY {
                    dist.prob_below(i, 0.0)
                } else {
                    dist.prob_between(i, rho, 0.0)
                };
                acc * p
            });
            (range.start + n_w..range.end).fold(weights, |acc, i| acc * dist.prob_below(i, t))
        })
        .collect();
    // 1 − ∏(1 − t_k) as a sum of nonnegative increments
    let value = layer_terms.iter().fold(0.0, |v, t| v + t * (1.0 - v));
    Ok(DeepBound {
        value,
        applicable: true,
        diagnostic: if depth == 2 {
            Some("no layers strictly between 1 and L".into())
        } else {
            None
        },
        layer_terms,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombinedBound {
    pub layer1: f64,
    pub deep: DeepBound,
    pub value: f64,
}

/// Larger of the layer-1 bound and the (gated) deep bound.
pub fn combined_bound(dist: &InitDistribution, inputs: &BoundInputs) -> Result<CombinedBound> {
    let layer1 = layer1_bound(dist, inputs)?;
    let deep = deep_layer_bound(dist, inputs)?;
    let gated = if deep.applicable { deep.value } else { 0.0 };
    Ok(CombinedBound {
        layer1,
        value: layer1.max(gated),
        deep,
    })
}

/// Constants for the depth-sweep bound with `Θ^i = Z/c_i`, `Z` standard
/// normal and `sup_i (c_i + 1/c_i) ≤ c_bold`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthExtras {
    pub inf_bound: f64,
    pub c_bold: f64,
    pub eps: f64,
    pub gamma: f64,
}

impl DepthExtras {
    /// Supremum of admissible `p`.
    pub fn p_max(&self) -> f64 {
        let neg = self.inf_bound < 0.0;
        let first = if neg {
            normal_pdf(self.eps) * self.eps
        } else {
            normal_cdf(0.0)
        };
        let shift = if neg { 1.0 } else { 0.0 };
        let second = normal_cdf(0f64.min(self.c_bold * (self.gamma - shift)));
        first.min(second)
    }

    /// `q = pε / (ε − l·c·min{A, 0})`.
    pub fn q(&self, p: f64, width: usize) -> f64 {
        p * self.eps / (self.eps - width as f64 * self.c_bold * self.inf_bound.min(0.0))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthSweepRow {
    pub depth: usize,
    pub bound: f64,
    /// `L · q^{l(l+1)}`.
    pub hypothesis_term: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthSweep {
    pub width: usize,
    pub p: f64,
    pub q: f64,
    pub rows: Vec<DepthSweepRow>,
    /// Whether `L · q^{l(l+1)}` strictly increases along the list.
    pub hypothesis_increasing: bool,
}

/// `1 − (1 − q^{l(l+1)})^{L−2}` for each depth `L`.
pub fn depth_sweep_bound(width: usize, depths: &[usize], p: f64, extras: DepthExtras) -> Result<DepthSweep> {
    if width == 0 {
        return Err(Error::invalid("sweep.width", "must be at least 1"));
    }
    if !(extras.eps > 0.0) || !(extras.c_bold > 0.0) {
        return Err(Error::invalid("sweep.extras", "eps and c_bold must be positive"));
    }
    let p_max = extras.p_max();
    if !(p > 0.0 && p < p_max) {
        return Err(Error::invalid("sweep.p", format!("must lie in (0, {p_max}), got {p}")));
    }
    if let Some(&d) = depths.iter().find(|&&d| d < 2) {
        return Err(Error::invalid("sweep.depths", format!("depth {d} < 2")));
    }
    let q = extras.q(p, width);
    let hit = q.powi((width * (width + 1)) as i32);
    let rows: Vec<DepthSweepRow> = depths
        .iter()
        .map(|&depth| DepthSweepRow {
            depth,
            bound: -((depth - 2) as f64 * (-hit).ln_1p()).exp_m1(),
            hypothesis_term: depth as f64 * hit,
        })
        .collect();
    let hypothesis_increasing = rows.windows(2).all(|w| w[1].hypothesis_term > w[0].hypothesis_term);
    Ok(DepthSweep {
        width,
        p,
        q,
        rows,
        hypothesis_increasing,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundReport {
    pub schema_version: u32,
    pub arch: Vec<usize>,
    pub activation: String,
    pub distribution: String,
    pub window: [f64; 2],
    pub gamma: f64,
    /// `None` encodes `ρ = −∞`.
    pub rho: Option<f64>,
    pub layer1_bound: f64,
    pub deep_bound: f64,
    pub combined_bound: f64,
    pub diagnostics: Vec<String>,
}

impl BoundReport {
    pub fn build(activation: &str, dist: &InitDistribution, inputs: &BoundInputs) -> Result<Self> {
        let c = combined_bound(dist, inputs)?;
        let mut diagnostics = Vec::new();
        diagnostics.extend(c.deep.diagnostic.clone());
        if c.deep.applicable {
            diagnostics.push(format!(
                "deep bound applicable; per-layer witness probabilities {:?}",
                c.deep.layer_terms
            ));
        }
        Ok(BoundReport {
            schema_version: REPORT_SCHEMA_VERSION,
            arch: inputs.arch.widths().to_vec(),
            activation: activation.to_string(),
            distribution: dist.describe(),
            window: inputs.window.into(),
            gamma: inputs.gamma,
            rho: Some(inputs.rho()).filter(|r| r.is_finite()),
            layer1_bound: c.layer1,
            deep_bound: c.deep.value,
            combined_bound: c.value,
            diagnostics,
        })
    }
}

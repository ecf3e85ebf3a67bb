//! Gradients of the empirical risk.
//!
//! Reverse mode with the generalized derivative at every hidden
//! pre-activation. A zero derivative stores `+0.0` in the backward signal and
//! gradients are accumulated into `+0.0`, so coordinates behind a flat layer
//! come out as bitwise `+0.0` rather than `-0.0`.

use crate::activation::ActivationFamily;
use crate::ann::{Architecture, ParamVector};
use crate::error::{Error, Result};
use crate::loss::{check_sample, empirical_risk, Loss, Sample};

/// Reusable buffers for repeated gradient evaluations on one architecture.
#[derive(Clone, Debug)]
pub struct GradWorkspace {
    arch: Architecture,
    offsets: Vec<usize>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    deriv: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
}

impl GradWorkspace {
    pub fn new(arch: &Architecture) -> Self {
        let w = arch.widths();
        let layers = |f: &dyn Fn(usize) -> usize| (0..=arch.depth()).map(|k| vec![0.0; f(k)]).collect::<Vec<_>>();
        GradWorkspace {
            arch: arch.clone(),
            offsets: (0..=arch.depth()).map(|k| arch.prefix_count(k)).collect(),
            pre: layers(&|k| w[k]),
            post: layers(&|k| w[k]),
            deriv: layers(&|k| w[k]),
            delta: layers(&|k| w[k]),
        }
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    /// Mean gradient over `batch` with approximation level `r` (`0` =
    /// generalized gradient), written into `out`.
    pub fn gradient_into(
        &mut self,
        theta: &[f64],
        batch: &[Sample],
        loss: &Loss,
        act: &ActivationFamily,
        r: u32,
        out: &mut [f64],
    ) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if theta.len() != self.arch.param_count() || out.len() != theta.len() {
            return Err(Error::Dimension {
                what: "parameter vector",
                expected: self.arch.param_count(),
                got: theta.len().min(out.len()),
            });
        }
        out.fill(0.0);
        for s in batch {
            if s.x.len() != self.arch.input_dim() || s.y.len() != self.arch.output_dim() {
                return Err(Error::Dimension {
                    what: "sample",
                    expected: self.arch.input_dim(),
                    got: s.x.len(),
                });
            }
            self.accumulate(theta, s, loss, act, r, out);
        }
        let n = batch.len() as f64;
        for g in out.iter_mut() {
            *g /= n;
        }
        Ok(())
    }

    fn accumulate(&mut self, theta: &[f64], s: &Sample, loss: &Loss, act: &ActivationFamily, r: u32, out: &mut [f64]) {
        let widths = self.arch.widths();
        let depth = self.arch.depth();
        self.post[0].copy_from_slice(&s.x);
        for k in 1..=depth {
            let (n_in, n_out) = (widths[k - 1], widths[k]);
            let base = self.offsets[k - 1];
            let (w, b) = theta[base..self.offsets[k]].split_at(n_in * n_out);
            let (lower, upper) = self.post.split_at_mut(k);
            let input = &lower[k - 1];
            for i in 0..n_out {
                let row = &w[i * n_in..(i + 1) * n_in];
                let z = row.iter().zip(input).fold(b[i], |acc, (wij, xj)| acc + wij * xj);
                self.pre[k][i] = z;
                if k < depth {
                    let (v, d) = act.eval(r, z);
                    upper[0][i] = v;
                    self.deriv[k][i] = d;
                } else {
                    upper[0][i] = z;
                }
            }
        }
        loss.grad_pred_into(&self.pre[depth], &s.y, &mut self.delta[depth]);
        for k in (1..=depth).rev() {
            let (n_in, n_out) = (widths[k - 1], widths[k]);
            let base = self.offsets[k - 1];
            let input = &self.post[k - 1];
            let (gw, gb) = out[base..self.offsets[k]].split_at_mut(n_in * n_out);
            for i in 0..n_out {
                let d = self.delta[k][i];
                for (g, a) in gw[i * n_in..(i + 1) * n_in].iter_mut().zip(input) {
                    *g += d * a;
                }
                gb[i] += d;
            }
            if k > 1 {
                let w = &theta[base..base + n_in * n_out];
                let (lower, upper) = self.delta.split_at_mut(k);
                let below = &mut lower[k - 1];
                for (j, slot) in below.iter_mut().enumerate() {
                    let a_prime = self.deriv[k - 1][j];
                    *slot = if a_prime == 0.0 {
                        0.0
                    } else {
                        let back = (0..n_out).fold(0.0, |acc, i| acc + w[i * n_in + j] * upper[0][i]);
                        a_prime * back
                    };
                }
            }
        }
    }
}

fn gradient_with(
    theta: &ParamVector,
    batch: &[Sample],
    loss: &Loss,
    act: &ActivationFamily,
    r: u32,
) -> Result<Vec<f64>> {
    for s in batch {
        check_sample(theta, s)?;
    }
    let mut ws = GradWorkspace::new(theta.arch());
    let mut out = vec![0.0; theta.len()];
    ws.gradient_into(theta.as_slice(), batch, loss, act, r, &mut out)?;
    Ok(out)
}

/// Backpropagation with the generalized derivative at hidden pre-activations.
pub fn generalized_gradient(
    theta: &ParamVector,
    batch: &[Sample],
    loss: &Loss,
    act: &ActivationFamily,
) -> Result<Vec<f64>> {
    gradient_with(theta, batch, loss, act, 0)
}

/// Exact gradient of the risk built from the `r`-th approximation, `r >= 1`.
pub fn mollified_gradient(
    theta: &ParamVector,
    batch: &[Sample],
    loss: &Loss,
    act: &ActivationFamily,
    r: u32,
) -> Result<Vec<f64>> {
    if r == 0 {
        return Err(Error::invalid("r", "approximation level must be at least 1"));
    }
    gradient_with(theta, batch, loss, act, r)
}

/// Central differences of the exact empirical risk, one coordinate at a time.
pub fn finite_difference_gradient(
    theta: &ParamVector,
    batch: &[Sample],
    loss: &Loss,
    act: &ActivationFamily,
    step: f64,
) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid("step", "must be positive and finite"));
    }
    let mut probe = theta.clone();
    let mut out = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        let orig = theta.as_slice()[i];
        probe.as_mut_slice()[i] = orig + step;
        let up = empirical_risk(&probe, batch, loss, act, 0)?;
        probe.as_mut_slice()[i] = orig - step;
        let down = empirical_risk(&probe, batch, loss, act, 0)?;
        probe.as_mut_slice()[i] = orig;
        out.push((up - down) / (2.0 * step));
    }
    Ok(out)
}

/// `‖a - b‖∞ / max(‖a‖∞, ‖b‖∞)`, or `0` when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = a.iter().chain(b).map(|x| x.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

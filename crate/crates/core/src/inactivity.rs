//! Inactive-layer certification.
//!
//! Layer `k` is inactive for `θ` when every layer-`k` pre-activation lies in
//! the flat set `(flat_lo, flat_hi) \ S` for every input in the box. The
//! network output is then constant on the box and the gradient vanishes on
//! all coordinates of layers `1..=k`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::activation::ActivationFamily;
use crate::ann::{layer_slices, Architecture, ParamVector};
use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::loss::InputBox;

/// Open interval `(η, ζ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Window {
    pub eta: f64,
    pub zeta: f64,
}

impl From<[f64; 2]> for Window {
    fn from(v: [f64; 2]) -> Self {
        Window { eta: v[0], zeta: v[1] }
    }
}

impl From<Window> for [f64; 2] {
    fn from(w: Window) -> Self {
        [w.eta, w.zeta]
    }
}

impl Window {
    pub fn new(eta: f64, zeta: f64) -> Self {
        Window { eta, zeta }
    }

    pub fn width(&self) -> f64 {
        self.zeta - self.eta
    }
}

/// Everything the analytic bounds consume besides the initialization law.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundInputs {
    pub arch: Architecture,
    pub window: Window,
    pub gamma: f64,
    /// Lower bound on the activation's range.
    pub inf_bound: f64,
    pub input_box: InputBox,
    /// Number of leading coordinates that are independent.
    pub chi: usize,
    pub flat_lo: f64,
    pub flat_hi: f64,
    pub exception_set: Vec<f64>,
}

impl BoundInputs {
    /// Inputs with the default window and threshold for `act`; all
    /// coordinates independent.
    pub fn new(arch: Architecture, act: &ActivationFamily, input_box: InputBox) -> Result<Self> {
        let window = default_window(act)?;
        let chi = arch.param_count();
        Ok(BoundInputs {
            arch,
            window,
            gamma: act.default_gamma(),
            inf_bound: act.inf_bound(),
            input_box,
            chi,
            flat_lo: act.flat_lo(),
            flat_hi: act.flat_hi(),
            exception_set: act.exception_set().to_vec(),
        })
    }

    pub fn with_window(mut self, window: Window) -> Result<Self> {
        self.window = window;
        self.validate()?;
        Ok(self)
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        self.gamma = gamma;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let Window { eta, zeta } = self.window;
        if !(eta < zeta) {
            return Err(Error::invalid(
                "bound.window",
                format!("need eta < zeta, got ({eta}, {zeta})"),
            ));
        }
        if !(eta >= self.flat_lo && zeta <= self.flat_hi) {
            return Err(Error::invalid(
                "bound.window",
                format!(
                    "({eta}, {zeta}) is not inside the flat interval ({}, {})",
                    self.flat_lo, self.flat_hi
                ),
            ));
        }
        if let Some(s) = self.exception_set.iter().find(|&&s| s > eta && s < zeta) {
            return Err(Error::invalid("bound.window", format!("contains exception point {s}")));
        }
        let gamma_max = self.exception_set.iter().copied().fold(self.flat_hi, f64::min);
        if !(self.gamma <= gamma_max) {
            return Err(Error::invalid(
                "bound.gamma",
                format!("must be at most {gamma_max}, got {}", self.gamma),
            ));
        }
        if self.chi > self.arch.param_count() {
            return Err(Error::invalid("bound.chi", "exceeds the parameter count"));
        }
        Ok(())
    }

    /// Lower end of the weight interval `(ρ, 0)` for the deep witnesses.
    ///
    /// `-∞` when the activation is nonnegative, `0` for a single hidden layer
    /// with negative range bound, else `1/(A · max_{1≤i≤L−2} l_i)`.
    pub fn rho(&self) -> f64 {
        let depth = self.arch.depth();
        if self.inf_bound >= 0.0 {
            f64::NEG_INFINITY
        } else if depth == 2 {
            0.0
        } else {
            let max_width = self.arch.widths()[1..=depth - 2].iter().copied().max().unwrap_or(1);
            1.0 / (self.inf_bound * max_width as f64)
        }
    }

    /// Upper bound on the deep-witness biases: `γ − 1_{A<0}`.
    pub fn bias_threshold(&self) -> f64 {
        if self.inf_bound < 0.0 {
            self.gamma - 1.0
        } else {
            self.gamma
        }
    }
}

/// `(w−2, w−1)` for the flat interval `(v, w)`, moved into the flat set when
/// that interval is bounded or meets an exception point.
pub fn default_window(act: &ActivationFamily) -> Result<Window> {
    let (v, w) = (act.flat_lo(), act.flat_hi());
    if !(v < w) || !w.is_finite() && !v.is_finite() {
        return Err(Error::Unsupported(format!(
            "activation {} has no usable flat interval",
            act.name()
        )));
    }
    let (mut eta, mut zeta) = if w.is_finite() {
        (w - 2.0, w - 1.0)
    } else {
        (v + 1.0, v + 2.0)
    };
    if eta < v || zeta > w {
        eta = v + (w - v) / 3.0;
        zeta = v + 2.0 * (w - v) / 3.0;
    }
    // keep the widest piece not containing an exception point
    let mut cuts: Vec<f64> = act
        .exception_set()
        .iter()
        .copied()
        .filter(|&s| s > eta && s < zeta)
        .collect();
    if !cuts.is_empty() {
        cuts.push(eta);
        cuts.push(zeta);
        cuts.sort_by(f64::total_cmp);
        let (a, b) = cuts
            .windows(2)
            .map(|p| (p[0], p[1]))
            .max_by(|x, y| (x.1 - x.0).total_cmp(&(y.1 - y.0)))
            .expect("at least two cuts");
        eta = a;
        zeta = b;
    }
    Ok(Window::new(eta, zeta))
}

fn affine_interval(w: &[f64], b: &[f64], input: &[Interval]) -> Vec<Interval> {
    let n_in = input.len();
    b.iter()
        .enumerate()
        .map(|(i, &bias)| {
            w[i * n_in..(i + 1) * n_in]
                .iter()
                .zip(input)
                .fold(Interval::point(bias), |acc, (&wij, x)| acc.add(x.scale(wij)))
        })
        .collect()
}

fn layer1_ranges(theta: &ParamVector, input_box: InputBox) -> Vec<Interval> {
    let arch = theta.arch();
    let input = vec![Interval::new(input_box.lo, input_box.hi); arch.input_dim()];
    let (w, b) = layer_slices(arch, theta.as_slice(), 1);
    affine_interval(w, b, &input)
}

/// Whether every layer-1 pre-activation stays in the open window on the box.
///
/// The affine range is enclosed with outward rounding, so `true` also holds
/// for the floating-point forward pass.
pub fn certify_layer1_inactive(theta: &ParamVector, window: Window, input_box: InputBox) -> bool {
    layer1_ranges(theta, input_box)
        .iter()
        .all(|r| r.lo > window.eta && r.hi < window.zeta)
}

/// Enclosures of the pre-activations of layers `1..=k` over the box.
pub fn pre_activation_ranges(
    theta: &ParamVector,
    k: usize,
    act: &ActivationFamily,
    input_box: InputBox,
) -> Vec<Vec<Interval>> {
    let arch = theta.arch();
    let mut out = vec![layer1_ranges(theta, input_box)];
    for v in 2..=k {
        let input: Vec<Interval> = out[v - 2]
            .iter()
            .map(|r| {
                let (lo, hi) = act.image(r.lo, r.hi);
                Interval::new(lo, hi).widen()
            })
            .collect();
        let (w, b) = layer_slices(arch, theta.as_slice(), v);
        out.push(affine_interval(w, b, &input));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    CertifiedInactive,
    CertifiedActive,
    Unknown,
}

impl Verdict {
    pub fn is_inactive(self) -> bool {
        self == Verdict::CertifiedInactive
    }
}

fn check_layer_index(arch: &Architecture, k: usize) -> Result<()> {
    if k == 0 || k >= arch.depth() {
        return Err(Error::invalid(
            "k",
            format!("layer index must be in 1..={}, got {k}", arch.depth() - 1),
        ));
    }
    Ok(())
}

/// Box points for the falsifier: corners first (at most 64), then uniform.
fn falsifier_points<R: Rng + ?Sized>(dim: usize, input_box: InputBox, samples: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let corners = if dim <= 6 { 1usize << dim } else { 0 };
    let mut pts: Vec<Vec<f64>> = (0..corners.min(samples.max(corners)))
        .map(|c| {
            (0..dim)
                .map(|j| if c >> j & 1 == 1 { input_box.hi } else { input_box.lo })
                .collect()
        })
        .collect();
    while pts.len() < samples.max(corners) {
        pts.push(input_box.sample_point(dim, rng));
    }
    pts
}

/// Tri-state verdict on layer `k`'s inactivity over the box.
///
/// Interval propagation gives `CertifiedInactive`; otherwise `samples` box
/// points (corners included) are searched for a pre-activation outside the
/// flat set, giving `CertifiedActive`.
pub fn certify_layer_inactive<R: Rng + ?Sized>(
    theta: &ParamVector,
    k: usize,
    act: &ActivationFamily,
    input_box: InputBox,
    rng: &mut R,
    samples: usize,
) -> Result<Verdict> {
    check_layer_index(theta.arch(), k)?;
    let ranges = pre_activation_ranges(theta, k, act, input_box);
    if ranges[k - 1].iter().all(|r| act.interval_in_flat_set(r.lo, r.hi)) {
        return Ok(Verdict::CertifiedInactive);
    }
    Ok(falsify(theta, k, act, input_box, rng, samples))
}

fn falsify<R: Rng + ?Sized>(
    theta: &ParamVector,
    k: usize,
    act: &ActivationFamily,
    input_box: InputBox,
    rng: &mut R,
    samples: usize,
) -> Verdict {
    let arch = theta.arch();
    for x in falsifier_points(arch.input_dim(), input_box, samples, rng) {
        let pre = crate::ann::forward_raw(arch, theta.as_slice(), act, 0, &x);
        if pre[k - 1].iter().any(|&z| !act.in_flat_set(z)) {
            return Verdict::CertifiedActive;
        }
    }
    Verdict::Unknown
}

/// Verdicts for layers `1..=L−1`; the first certified layer stops the
/// falsifier search for deeper ones (they are then left to intervals only).
pub fn scan_dead_layers<R: Rng + ?Sized>(
    theta: &ParamVector,
    act: &ActivationFamily,
    input_box: InputBox,
    rng: &mut R,
    samples: usize,
) -> Vec<Verdict> {
    let depth = theta.arch().depth();
    if depth < 2 {
        return Vec::new();
    }
    let ranges = pre_activation_ranges(theta, depth - 1, act, input_box);
    (1..depth)
        .map(|k| {
            if ranges[k - 1].iter().all(|r| act.interval_in_flat_set(r.lo, r.hi)) {
                Verdict::CertifiedInactive
            } else if samples == 0 {
                Verdict::Unknown
            } else {
                falsify(theta, k, act, input_box, rng, samples)
            }
        })
        .collect()
}

/// Largest certified-inactive layer in a scan.
pub fn deepest_inactive(verdicts: &[Verdict]) -> Option<usize> {
    verdicts.iter().rposition(|v| v.is_inactive()).map(|i| i + 1)
}

/// Whether layer `k ≥ 2` belongs to the deep witness set: all its weights in
/// `(ρ, 0)` and all its biases below `γ − 1_{A<0}`.
pub fn in_deep_witness(theta: &ParamVector, k: usize, inputs: &BoundInputs) -> bool {
    let (w, b) = theta.layer(k);
    let rho = inputs.rho();
    let t = inputs.bias_threshold();
    w.iter().all(|&x| rho < x && x < 0.0) && b.iter().all(|&x| x < t)
}

/// Whether some layer `2..=L−1` is a deep witness.
pub fn in_deep_witness_union(theta: &ParamVector, inputs: &BoundInputs) -> bool {
    (2..theta.arch().depth()).any(|k| in_deep_witness(theta, k, inputs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ann::forward;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_box() -> InputBox {
        InputBox::new(0.0, 1.0).unwrap()
    }

    fn arch(w: &[usize]) -> Architecture {
        Architecture::new(w.to_vec()).unwrap()
    }

    #[test]
    fn window_center_is_certified() {
        let a = arch(&[2, 3, 1]);
        let mut theta = ParamVector::zeros(a);
        for i in 1..=3 {
            theta.set_bias(1, i, -1.5);
        }
        assert!(certify_layer1_inactive(&theta, Window::new(-2.0, -1.0), unit_box()));
        theta.set_weight(1, 2, 1, 0.6);
        assert!(!certify_layer1_inactive(&theta, Window::new(-2.0, -1.0), unit_box()));
    }

    #[test]
    fn layer1_agrees_with_corner_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = arch(&[2, 2, 1]);
        let w = Window::new(-2.0, -1.0);
        let b = unit_box();
        let mut agree_true = 0;
        for _ in 0..500 {
            let theta = ParamVector::new(
                a.clone(),
                (0..a.param_count())
                    .map(|i| {
                        if i < 4 {
                            rng.random_range(-0.6..0.6)
                        } else {
                            rng.random_range(-2.2..-0.8)
                        }
                    })
                    .collect(),
            )
            .unwrap();
            let certified = certify_layer1_inactive(&theta, w, b);
            let pts = falsifier_points(2, b, 10_000, &mut rng);
            let sampled = pts.iter().all(|x| {
                forward(&theta, &ActivationFamily::relu(), x)
                    .unwrap()
                    .layer(1)
                    .iter()
                    .all(|&z| z > w.eta && z < w.zeta)
            });
            assert_eq!(certified, sampled);
            agree_true += certified as usize;
        }
        assert!(agree_true > 10);
    }

    #[test]
    fn deep_witness_is_certified() {
        let relu = ActivationFamily::relu();
        let a = arch(&[1, 2, 2, 1]);
        let inputs = BoundInputs::new(a.clone(), &relu, unit_box()).unwrap();
        let mut theta = ParamVector::zeros(a);
        for (k, i, j) in [(1, 1, 1), (1, 2, 1)] {
            theta.set_weight(k, i, j, 3.0);
        }
        for i in 1..=2 {
            theta.set_bias(1, i, 1.0);
            for j in 1..=2 {
                theta.set_weight(2, i, j, -0.5);
            }
            theta.set_bias(2, i, -0.1);
        }
        assert!(in_deep_witness(&theta, 2, &inputs));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            certify_layer_inactive(&theta, 2, &relu, unit_box(), &mut rng, 100).unwrap(),
            Verdict::CertifiedInactive
        );
        assert_eq!(
            certify_layer_inactive(&theta, 1, &relu, unit_box(), &mut rng, 100).unwrap(),
            Verdict::CertifiedActive
        );
    }

    #[test]
    fn positive_bias_is_active() {
        let relu = ActivationFamily::relu();
        let mut theta = ParamVector::zeros(arch(&[1, 2, 2, 1]));
        theta.set_bias(2, 1, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            certify_layer_inactive(&theta, 2, &relu, unit_box(), &mut rng, 10).unwrap(),
            Verdict::CertifiedActive
        );
        assert!(certify_layer_inactive(&theta, 3, &relu, unit_box(), &mut rng, 10).is_err());
    }

    #[test]
    fn clip_witness() {
        let clip = ActivationFamily::clip(-1.0, 1.0).unwrap();
        let a = arch(&[1, 2, 2, 1]);
        let inputs = BoundInputs::new(a.clone(), &clip, unit_box()).unwrap();
        assert_eq!(inputs.rho(), -0.5);
        assert_eq!(inputs.bias_threshold(), -2.0);
        // layer 2 drawn near the witness set
        let mut laws = vec![crate::init::CoordLaw::STANDARD_NORMAL; a.param_count()];
        for i in a.layer_range(2) {
            laws[i] = crate::init::CoordLaw::Uniform { lo: -0.6, hi: 0.1 };
        }
        for i in 1..=2 {
            laws[a.bias_index(2, i) - 1] = crate::init::CoordLaw::Uniform { lo: -2.5, hi: -1.5 };
        }
        let dist = crate::init::InitDistribution::PerCoordinate(laws);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut found = 0;
        for _ in 0..20_000 {
            let theta = dist.sample(&a, &mut rng);
            if in_deep_witness(&theta, 2, &inputs) {
                found += 1;
                assert!(certify_layer_inactive(&theta, 2, &clip, unit_box(), &mut rng, 0)
                    .unwrap()
                    .is_inactive());
            }
        }
        assert!(found > 0);
    }

    #[test]
    fn defaults() {
        let relu = ActivationFamily::relu();
        assert_eq!(default_window(&relu).unwrap(), Window::new(-2.0, -1.0));
        let clip = ActivationFamily::clip(-0.5, 2.0).unwrap();
        assert_eq!(default_window(&clip).unwrap(), Window::new(-2.5, -1.5));
        assert_eq!(clip.default_gamma(), -0.5);
    }

    #[test]
    fn validation_names_field() {
        let relu = ActivationFamily::relu();
        let base = BoundInputs::new(arch(&[1, 1, 1]), &relu, unit_box()).unwrap();
        let err = base.clone().with_window(Window::new(-1.0, -2.0)).unwrap_err();
        assert!(err.to_string().contains("bound.window"));
        assert!(base.clone().with_window(Window::new(-1.0, 0.5)).is_err());
        assert!(base
            .clone()
            .with_gamma(0.1)
            .unwrap_err()
            .to_string()
            .contains("bound.gamma"));
        assert!(base.with_gamma(-3.0).is_ok());
    }

    #[test]
    fn rho_cases() {
        let clip = ActivationFamily::clip(-1.0, 1.0).unwrap();
        let relu = ActivationFamily::relu();
        assert_eq!(
            BoundInputs::new(arch(&[1, 3, 1]), &clip, unit_box()).unwrap().rho(),
            0.0
        );
        assert_eq!(
            BoundInputs::new(arch(&[1, 3, 1, 4, 1]), &clip, unit_box())
                .unwrap()
                .rho(),
            -1.0 / 3.0
        );
        assert_eq!(
            BoundInputs::new(arch(&[1, 3, 1]), &relu, unit_box()).unwrap().rho(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn deepest() {
        use Verdict::*;
        assert_eq!(
            deepest_inactive(&[CertifiedActive, CertifiedInactive, Unknown]),
            Some(2)
        );
        assert_eq!(deepest_inactive(&[Unknown]), None);
    }
}

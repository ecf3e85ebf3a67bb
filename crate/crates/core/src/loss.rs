//! Losses, data distributions and risks.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::activation::ActivationFamily;
use crate::ann::{forward_raw, ParamVector};
use crate::error::{Error, Result};

/// Strictly increasing C¹ function on `[0, inf)` composed with the squared
/// distance.
pub trait Psi: Send + Sync {
    fn value(&self, x: f64) -> f64;
    fn deriv(&self, x: f64) -> f64;
    fn name(&self) -> String;
}

/// Shipped ψ choices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PsiKind {
    /// `sqrt(x + 1)`
    Sqrt1p,
    /// `ln(1 + x)`; violates the `ψ'(x)√x` monotonicity condition past `x = 1`.
    Log1p,
    /// `x^q`, `q > 0`
    Pow(f64),
}

impl Psi for PsiKind {
    fn value(&self, x: f64) -> f64 {
        match *self {
            PsiKind::Sqrt1p => (x + 1.0).sqrt(),
            PsiKind::Log1p => x.ln_1p(),
            PsiKind::Pow(q) => x.powf(q),
        }
    }

    fn deriv(&self, x: f64) -> f64 {
        match *self {
            PsiKind::Sqrt1p => 0.5 / (x + 1.0).sqrt(),
            PsiKind::Log1p => 1.0 / (1.0 + x),
            PsiKind::Pow(q) => q * x.powf(q - 1.0),
        }
    }

    fn name(&self) -> String {
        match *self {
            PsiKind::Sqrt1p => "sqrt1p".into(),
            PsiKind::Log1p => "log1p".into(),
            PsiKind::Pow(q) => format!("pow({q})"),
        }
    }
}

/// ψ from a pair of closures.
pub struct FnPsi<F, G> {
    pub value: F,
    pub deriv: G,
    pub label: &'static str,
}

impl<F, G> Psi for FnPsi<F, G>
where
    F: Fn(f64) -> f64 + Send + Sync,
    G: Fn(f64) -> f64 + Send + Sync,
{
    fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    fn deriv(&self, x: f64) -> f64 {
        (self.deriv)(x)
    }

    fn name(&self) -> String {
        self.label.to_string()
    }
}

#[derive(Clone)]
pub enum Loss {
    /// `‖pred - target‖²`
    Mse,
    /// `ψ(‖pred - target‖²)`
    Psi(Arc<dyn Psi>),
}

impl fmt::Debug for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Loss::Mse => write!(f, "Mse"),
            Loss::Psi(p) => write!(f, "Psi({})", p.name()),
        }
    }
}

impl Loss {
    pub fn psi(kind: PsiKind) -> Self {
        Loss::Psi(Arc::new(kind))
    }

    pub fn name(&self) -> String {
        match self {
            Loss::Mse => "mse".into(),
            Loss::Psi(p) => format!("psi:{}", p.name()),
        }
    }

    #[inline]
    pub fn value(&self, pred: &[f64], target: &[f64]) -> f64 {
        let sq = squared_distance(pred, target);
        match self {
            Loss::Mse => sq,
            Loss::Psi(p) => p.value(sq),
        }
    }

    /// Gradient with respect to `pred`, written into `out`.
    #[inline]
    pub fn grad_pred_into(&self, pred: &[f64], target: &[f64], out: &mut [f64]) {
        let scale = match self {
            Loss::Mse => 2.0,
            Loss::Psi(p) => 2.0 * p.deriv(squared_distance(pred, target)),
        };
        for ((o, p), t) in out.iter_mut().zip(pred).zip(target) {
            *o = scale * (p - t);
        }
    }

    pub fn grad_pred(&self, pred: &[f64], target: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; pred.len()];
        self.grad_pred_into(pred, target, &mut out);
        out
    }
}

#[inline]
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Sample {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        Sample { x, y }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    #[serde(rename = "p")]
    pub prob: f64,
}

/// Input box `[lo, hi]^{l_0}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct InputBox {
    pub lo: f64,
    pub hi: f64,
}

impl From<[f64; 2]> for InputBox {
    fn from(v: [f64; 2]) -> Self {
        InputBox { lo: v[0], hi: v[1] }
    }
}

impl From<InputBox> for [f64; 2] {
    fn from(b: InputBox) -> Self {
        [b.lo, b.hi]
    }
}

impl InputBox {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::invalid("box", format!("need finite lo <= hi, got [{lo}, {hi}]")));
        }
        Ok(InputBox { lo, hi })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().all(|&v| v >= self.lo && v <= self.hi)
    }

    pub fn max_abs(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn sample_point<R: Rng + ?Sized>(&self, dim: usize, rng: &mut R) -> Vec<f64> {
        (0..dim)
            .map(|_| {
                if self.lo == self.hi {
                    self.lo
                } else {
                    rng.random_range(self.lo..=self.hi)
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub enum DataDistribution {
    /// Finite support with probabilities.
    Discrete { input_box: InputBox, atoms: Vec<Atom> },
    /// `X` uniform on the box, `Y = teacher(X) + noise·ε`, `ε ~ N(0, I)`.
    Teacher {
        input_box: InputBox,
        teacher: ParamVector,
        act: ActivationFamily,
        noise: f64,
    },
    /// `X` uniform on the box, `Y = slope·X + intercept + noise·ε` (scalar `Y`).
    Affine {
        input_box: InputBox,
        slope: Vec<f64>,
        intercept: f64,
        noise: f64,
    },
}

impl DataDistribution {
    pub fn discrete(input_box: InputBox, atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::invalid("data.atoms", "need at least one atom"));
        }
        let (dx, dy) = (atoms[0].x.len(), atoms[0].y.len());
        for (i, a) in atoms.iter().enumerate() {
            if a.x.len() != dx || a.y.len() != dy {
                return Err(Error::invalid(
                    format!("data.atoms[{i}]"),
                    "all atoms must share input and output dimensions",
                ));
            }
            if !input_box.contains(&a.x) {
                return Err(Error::invalid(format!("data.atoms[{i}].x"), "outside the input box"));
            }
            if !(a.prob >= 0.0 && a.prob.is_finite()) {
                return Err(Error::invalid(
                    format!("data.atoms[{i}].p"),
                    "must be a nonnegative number",
                ));
            }
        }
        let total: f64 = atoms.iter().map(|a| a.prob).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "data.atoms",
                format!("probabilities sum to {total}, not 1"),
            ));
        }
        Ok(DataDistribution::Discrete { input_box, atoms })
    }

    /// Uniform distribution over the given `(x, y)` pairs.
    pub fn uniform_atoms(input_box: InputBox, pairs: Vec<(Vec<f64>, Vec<f64>)>) -> Result<Self> {
        let p = 1.0 / pairs.len() as f64;
        let atoms = pairs.into_iter().map(|(x, y)| Atom { x, y, prob: p }).collect();
        DataDistribution::discrete(input_box, atoms)
    }

    pub fn input_box(&self) -> InputBox {
        match self {
            DataDistribution::Discrete { input_box, .. }
            | DataDistribution::Teacher { input_box, .. }
            | DataDistribution::Affine { input_box, .. } => *input_box,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            DataDistribution::Discrete { atoms, .. } => atoms[0].x.len(),
            DataDistribution::Teacher { teacher, .. } => teacher.arch().input_dim(),
            DataDistribution::Affine { slope, .. } => slope.len(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            DataDistribution::Discrete { atoms, .. } => atoms[0].y.len(),
            DataDistribution::Teacher { teacher, .. } => teacher.arch().output_dim(),
            DataDistribution::Affine { .. } => 1,
        }
    }

    pub fn exact_support(&self) -> Option<&[Atom]> {
        match self {
            DataDistribution::Discrete { atoms, .. } => Some(atoms),
            _ => None,
        }
    }

    /// `E‖Y - E[Y|X]‖²` when known in closed form.
    pub fn noise_floor(&self) -> Option<f64> {
        match self {
            DataDistribution::Teacher { teacher, noise, .. } => {
                Some(noise * noise * teacher.arch().output_dim() as f64)
            }
            DataDistribution::Affine { noise, .. } => Some(noise * noise),
            DataDistribution::Discrete { .. } => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Sample {
        match self {
            DataDistribution::Discrete { atoms, .. } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let atom = atoms
                    .iter()
                    .find(|a| {
                        acc += a.prob;
                        u < acc
                    })
                    .unwrap_or_else(|| atoms.iter().rev().find(|a| a.prob > 0.0).unwrap_or(&atoms[0]));
                Sample::new(atom.x.clone(), atom.y.clone())
            }
            DataDistribution::Teacher {
                input_box,
                teacher,
                act,
                noise,
            } => {
                let arch = teacher.arch();
                let x = input_box.sample_point(arch.input_dim(), rng);
                let mut y = forward_raw(arch, teacher.as_slice(), act, 0, &x)
                    .pop()
                    .expect("at least one layer");
                if *noise != 0.0 {
                    for v in &mut y {
                        let e: f64 = StandardNormal.sample(rng);
                        *v += noise * e;
                    }
                }
                Sample::new(x, y)
            }
            DataDistribution::Affine {
                input_box,
                slope,
                intercept,
                noise,
            } => {
                let x = input_box.sample_point(slope.len(), rng);
                let mut y = slope.iter().zip(&x).fold(*intercept, |acc, (s, v)| acc + s * v);
                if *noise != 0.0 {
                    let e: f64 = StandardNormal.sample(rng);
                    y += noise * e;
                }
                Sample::new(x, vec![y])
            }
        }
    }

    pub fn sample_batch<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Sample> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

/// Mean loss over the batch using activation approximation `r` (`0` = exact).
pub fn empirical_risk(
    theta: &ParamVector,
    batch: &[Sample],
    loss: &Loss,
    act: &ActivationFamily,
    r: u32,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let arch = theta.arch();
    let mut total = 0.0;
    for s in batch {
        check_sample(theta, s)?;
        let out = forward_raw(arch, theta.as_slice(), act, r, &s.x).pop().expect("layer");
        total += loss.value(&out, &s.y);
    }
    Ok(total / batch.len() as f64)
}

pub(crate) fn check_sample(theta: &ParamVector, s: &Sample) -> Result<()> {
    let arch = theta.arch();
    if s.x.len() != arch.input_dim() {
        return Err(Error::Dimension {
            what: "sample input",
            expected: arch.input_dim(),
            got: s.x.len(),
        });
    }
    if s.y.len() != arch.output_dim() {
        return Err(Error::Dimension {
            what: "sample target",
            expected: arch.output_dim(),
            got: s.y.len(),
        });
    }
    Ok(())
}

/// Risk of predicting the constant `z` for every input.
pub fn constant_risk(atoms: &[Atom], loss: &Loss, z: &[f64]) -> f64 {
    atoms.iter().map(|a| a.prob * loss.value(z, &a.y)).sum()
}

/// Minimizing constant prediction and its risk.
///
/// MSE uses the closed form `z* = E[Y]`. ψ-losses need a scalar target and
/// use golden-section search on `[min Y, max Y]`; moving `z` toward that
/// range decreases every term, so the minimizer lies inside it.
pub fn best_constant_risk(dist: &DataDistribution, loss: &Loss) -> Result<(Vec<f64>, f64)> {
    let atoms = dist
        .exact_support()
        .ok_or_else(|| Error::Unsupported("best constant risk needs an exact-support distribution".into()))?;
    match loss {
        Loss::Mse => {
            let dim = atoms[0].y.len();
            let mut mean = vec![0.0; dim];
            for a in atoms {
                for (m, y) in mean.iter_mut().zip(&a.y) {
                    *m += a.prob * y;
                }
            }
            let value = constant_risk(atoms, loss, &mean);
            Ok((mean, value))
        }
        Loss::Psi(_) => {
            if atoms[0].y.len() != 1 {
                return Err(Error::Unsupported(
                    "ψ-loss best constant risk is only defined for scalar output".into(),
                ));
            }
            let lo = atoms.iter().map(|a| a.y[0]).fold(f64::INFINITY, f64::min);
            let hi = atoms.iter().map(|a| a.y[0]).fold(f64::NEG_INFINITY, f64::max);
            let f = |z: f64| constant_risk(atoms, loss, &[z]);
            let z = golden_section_min(f, lo, hi, 1e-12);
            Ok((vec![z], f(z)))
        }
    }
}

/// Sample-based best constant risk for distributions without exact support
/// (MSE only): the constant is the sample mean of `Y`.
pub fn best_constant_risk_sampled(samples: &[Sample], loss: &Loss) -> Result<(Vec<f64>, f64)> {
    if samples.is_empty() {
        return Err(Error::EmptyBatch);
    }
    if !matches!(loss, Loss::Mse) {
        return Err(Error::Unsupported(
            "sampled best constant risk is implemented for MSE only".into(),
        ));
    }
    let n = samples.len() as f64;
    let dim = samples[0].y.len();
    let mut mean = vec![0.0; dim];
    for s in samples {
        for (m, y) in mean.iter_mut().zip(&s.y) {
            *m += y / n;
        }
    }
    let value = samples.iter().map(|s| loss.value(&mean, &s.y)).sum::<f64>() / n;
    Ok((mean, value))
}

fn golden_section_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    if a == b {
        return a;
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol * (1.0 + a.abs().max(b.abs())) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RiskEstimate {
    pub estimate: f64,
    pub std_error: f64,
    /// `true` when computed exactly from the support.
    pub exact: bool,
}

/// True risk: exact on finite support, otherwise a Monte Carlo mean with its
/// standard error.
pub fn true_risk_mc(
    theta: &ParamVector,
    dist: &DataDistribution,
    loss: &Loss,
    act: &ActivationFamily,
    n_samples: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    if let Some(atoms) = dist.exact_support() {
        return Ok(RiskEstimate {
            estimate: exact_risk(theta, atoms, loss, act)?,
            std_error: 0.0,
            exact: true,
        });
    }
    if n_samples < 2 {
        return Err(Error::invalid("n_samples", "need at least 2 samples"));
    }
    let mut rng = crate::rng::stream(seed, crate::rng::Purpose::Evaluation, 0);
    let arch = theta.arch();
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..n_samples {
        let s = dist.sample(&mut rng);
        check_sample(theta, &s)?;
        let out = forward_raw(arch, theta.as_slice(), act, 0, &s.x).pop().expect("layer");
        let v = loss.value(&out, &s.y);
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = m2 / (n_samples - 1) as f64;
    Ok(RiskEstimate {
        estimate: mean,
        std_error: (var / n_samples as f64).sqrt(),
        exact: false,
    })
}

pub fn exact_risk(theta: &ParamVector, atoms: &[Atom], loss: &Loss, act: &ActivationFamily) -> Result<f64> {
    let arch = theta.arch();
    let mut total = 0.0;
    for a in atoms {
        check_sample(theta, &Sample::new(a.x.clone(), a.y.clone()))?;
        let out = forward_raw(arch, theta.as_slice(), act, 0, &a.x).pop().expect("layer");
        total += a.prob * loss.value(&out, &a.y);
    }
    Ok(total)
}

/// Whether `E[Y | X]` differs from `E[Y]` on some atom of positive mass.
pub fn check_target_nondegeneracy(dist: &DataDistribution) -> Result<bool> {
    let atoms = dist
        .exact_support()
        .ok_or_else(|| Error::Unsupported("nondegeneracy check needs an exact-support distribution".into()))?;
    let dim = atoms[0].y.len();
    let mut global = vec![0.0; dim];
    for a in atoms {
        for (g, y) in global.iter_mut().zip(&a.y) {
            *g += a.prob * y;
        }
    }
    // group atoms by input
    let mut groups: Vec<(&[f64], f64, Vec<f64>)> = Vec::new();
    for a in atoms.iter().filter(|a| a.prob > 0.0) {
        match groups.iter_mut().find(|(x, _, _)| *x == a.x.as_slice()) {
            Some((_, p, sum)) => {
                *p += a.prob;
                for (s, y) in sum.iter_mut().zip(&a.y) {
                    *s += a.prob * y;
                }
            }
            None => groups.push((&a.x, a.prob, a.y.iter().map(|y| a.prob * y).collect())),
        }
    }
    Ok(groups
        .iter()
        .any(|(_, p, sum)| sum.iter().zip(&global).any(|(s, g)| (s / p - g).abs() > 1e-12)))
}

/// Whether `ψ` and `x ↦ ψ'(x)√x` are strictly increasing along `grid`.
pub fn psi_condition_check(psi: &dyn Psi, grid: &[f64]) -> bool {
    if grid.iter().any(|&x| !(x > 0.0)) {
        return false;
    }
    grid.windows(2).all(|w| {
        let (a, b) = (w[0], w[1]);
        a < b && psi.value(a) < psi.value(b) && psi.deriv(a) * a.sqrt() < psi.deriv(b) * b.sqrt()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ann::Architecture;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_box() -> InputBox {
        InputBox::new(0.0, 1.0).unwrap()
    }

    fn coin(ys: &[f64]) -> DataDistribution {
        DataDistribution::uniform_atoms(
            unit_box(),
            ys.iter()
                .enumerate()
                .map(|(i, &y)| (vec![(i % 2) as f64], vec![y]))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn mse_values() {
        assert_eq!(Loss::Mse.value(&[1.0, 2.0], &[0.0, 0.0]), 5.0);
        assert_eq!(Loss::Mse.grad_pred(&[1.0, 2.0], &[0.0, 1.0]), vec![2.0, 2.0]);
    }

    #[test]
    fn grad_pred_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let losses = [Loss::Mse, Loss::psi(PsiKind::Sqrt1p), Loss::psi(PsiKind::Pow(1.5))];
        for loss in &losses {
            for _ in 0..500 {
                let dim = rng.random_range(1..4);
                let pred: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
                let target: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
                let g = loss.grad_pred(&pred, &target);
                let h = 1e-6;
                let mut max_err: f64 = 0.0;
                let mut scale: f64 = 0.0;
                for i in 0..dim {
                    let mut p = pred.clone();
                    p[i] += h;
                    let up = loss.value(&p, &target);
                    p[i] -= 2.0 * h;
                    let down = loss.value(&p, &target);
                    let fd = (up - down) / (2.0 * h);
                    max_err = max_err.max((fd - g[i]).abs());
                    scale = scale.max(g[i].abs());
                }
                assert!(max_err <= 1e-6 * scale.max(1.0), "{loss:?}: {max_err}");
            }
        }
    }

    #[test]
    fn empirical_risk_examples() {
        let a = Architecture::new(vec![1, 1]).unwrap();
        let theta = ParamVector::new(a.clone(), vec![1.0, 0.0]).unwrap();
        let relu = ActivationFamily::relu();
        let batch = vec![Sample::new(vec![1.0], vec![0.0]), Sample::new(vec![2.0], vec![0.0])];
        assert_eq!(empirical_risk(&theta, &batch, &Loss::Mse, &relu, 0).unwrap(), 2.5);

        let constant = ParamVector::new(a, vec![0.0, 0.75]).unwrap();
        let batch = vec![Sample::new(vec![0.3], vec![0.75])];
        assert_eq!(empirical_risk(&constant, &batch, &Loss::Mse, &relu, 0).unwrap(), 0.0);
        assert_eq!(
            empirical_risk(&constant, &[], &Loss::Mse, &relu, 0),
            Err(Error::EmptyBatch)
        );
    }

    #[test]
    fn empirical_risk_is_mean_of_per_sample_losses() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = Architecture::new(vec![2, 3, 2]).unwrap();
        let theta = ParamVector::new(
            a.clone(),
            (0..a.param_count()).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let relu = ActivationFamily::relu();
        let batch: Vec<Sample> = (0..5)
            .map(|_| Sample::new(vec![rng.random(), rng.random()], vec![rng.random(), rng.random()]))
            .collect();
        let mut want = 0.0;
        for s in &batch {
            let out = crate::ann::realize(&theta, &relu, &s.x).unwrap();
            want += Loss::Mse.value(&out, &s.y);
        }
        want /= 5.0;
        assert_eq!(empirical_risk(&theta, &batch, &Loss::Mse, &relu, 0).unwrap(), want);
    }

    #[test]
    fn best_constant_examples() {
        let (z, v) = best_constant_risk(&coin(&[0.0, 1.0]), &Loss::Mse).unwrap();
        assert_eq!((z[0], v), (0.5, 0.25));
        let (z, v) = best_constant_risk(&coin(&[3.0, 3.0]), &Loss::Mse).unwrap();
        assert_eq!((z[0], v), (3.0, 0.0));
        let three = DataDistribution::uniform_atoms(
            unit_box(),
            vec![(vec![0.0], vec![0.0]), (vec![0.5], vec![1.0]), (vec![1.0], vec![2.0])],
        )
        .unwrap();
        let (z, v) = best_constant_risk(&three, &Loss::Mse).unwrap();
        assert!((z[0] - 1.0).abs() < 1e-15);
        assert!((v - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn best_constant_psi() {
        let dist = coin(&[0.0, 1.0]);
        let loss = Loss::psi(PsiKind::Sqrt1p);
        let (z, v) = best_constant_risk(&dist, &loss).unwrap();
        // symmetric targets: the minimizer is the midpoint
        assert!((z[0] - 0.5).abs() < 1e-6);
        for probe in [0.0, 0.2, 0.45, 0.55, 0.9, 1.0] {
            assert!(constant_risk(dist.exact_support().unwrap(), &loss, &[probe]) >= v - 1e-15);
        }
        let two_d = DataDistribution::uniform_atoms(unit_box(), vec![(vec![0.0], vec![0.0, 1.0])]).unwrap();
        assert!(matches!(best_constant_risk(&two_d, &loss), Err(Error::Unsupported(_))));
    }

    #[test]
    fn discrete_validation() {
        let bad = DataDistribution::discrete(
            unit_box(),
            vec![Atom {
                x: vec![0.0],
                y: vec![0.0],
                prob: 0.6,
            }],
        );
        assert!(bad.is_err());
        let outside = DataDistribution::discrete(
            unit_box(),
            vec![Atom {
                x: vec![2.0],
                y: vec![0.0],
                prob: 1.0,
            }],
        );
        assert!(outside.is_err());
    }

    #[test]
    fn samples_stay_in_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let b = InputBox::new(-0.5, 2.0).unwrap();
        let dist = DataDistribution::Affine {
            input_box: b,
            slope: vec![1.0, -1.0],
            intercept: 0.0,
            noise: 0.3,
        };
        for _ in 0..1000 {
            assert!(b.contains(&dist.sample(&mut rng).x));
        }
    }

    #[test]
    fn exact_true_risk() {
        let dist = DataDistribution::uniform_atoms(unit_box(), vec![(vec![0.0], vec![0.0])]).unwrap();
        let theta = ParamVector::zeros(Architecture::new(vec![1, 2, 1]).unwrap());
        let r = true_risk_mc(&theta, &dist, &Loss::Mse, &ActivationFamily::relu(), 10, 0).unwrap();
        assert_eq!(
            r,
            RiskEstimate {
                estimate: 0.0,
                std_error: 0.0,
                exact: true
            }
        );
    }

    #[test]
    fn dead_network_risk_at_least_best_constant() {
        let dist = coin(&[0.0, 1.0]);
        let (_, best) = best_constant_risk(&dist, &Loss::Mse).unwrap();
        let a = Architecture::new(vec![1, 1, 1]).unwrap();
        for c in [-1.0, 0.0, 0.3, 0.5, 0.7, 2.0] {
            let theta = ParamVector::new(a.clone(), vec![0.0, -1.0, 1.0, c]).unwrap();
            let r = true_risk_mc(&theta, &dist, &Loss::Mse, &ActivationFamily::relu(), 2, 0).unwrap();
            assert!(r.estimate >= best);
        }
    }

    #[test]
    fn teacher_noise_floor() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = Architecture::new(vec![2, 4, 2]).unwrap();
        let teacher = ParamVector::new(
            a.clone(),
            (0..a.param_count()).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let noise = 0.3;
        let dist = DataDistribution::Teacher {
            input_box: unit_box(),
            teacher: teacher.clone(),
            act: ActivationFamily::relu(),
            noise,
        };
        let r = true_risk_mc(&teacher, &dist, &Loss::Mse, &ActivationFamily::relu(), 200_000, 4).unwrap();
        let floor = dist.noise_floor().unwrap();
        assert_eq!(floor, noise * noise * 2.0);
        assert!((r.estimate - floor).abs() <= 3.0 * r.std_error, "{r:?} vs {floor}");
    }

    #[test]
    fn nondegeneracy() {
        assert!(check_target_nondegeneracy(&coin(&[0.0, 1.0])).unwrap());
        // Y independent of X: every x carries the same conditional law
        let indep = DataDistribution::uniform_atoms(
            unit_box(),
            vec![
                (vec![0.0], vec![0.0]),
                (vec![0.0], vec![1.0]),
                (vec![1.0], vec![0.0]),
                (vec![1.0], vec![1.0]),
            ],
        )
        .unwrap();
        assert!(!check_target_nondegeneracy(&indep).unwrap());
        let xor = DataDistribution::uniform_atoms(
            unit_box(),
            vec![
                (vec![0.0, 0.0], vec![0.0]),
                (vec![0.0, 1.0], vec![1.0]),
                (vec![1.0, 0.0], vec![1.0]),
                (vec![1.0, 1.0], vec![0.0]),
            ],
        )
        .unwrap();
        assert!(check_target_nondegeneracy(&xor).unwrap());
    }

    #[test]
    fn psi_conditions() {
        let grid: Vec<f64> = (1..=200).map(|i| i as f64 * 0.05).collect();
        let identity = FnPsi {
            value: |x: f64| x,
            deriv: |_: f64| 1.0,
            label: "id",
        };
        assert!(psi_condition_check(&identity, &grid));
        assert!(psi_condition_check(&PsiKind::Sqrt1p, &grid));
        let neg = FnPsi {
            value: |x: f64| -x,
            deriv: |_: f64| -1.0,
            label: "neg",
        };
        assert!(!psi_condition_check(&neg, &grid));
        // ψ'(x)√x = √x/(1+x) peaks at x = 1
        assert!(!psi_condition_check(&PsiKind::Log1p, &grid));
        assert!(psi_condition_check(&PsiKind::Pow(1.5), &grid));
        assert!(!psi_condition_check(&PsiKind::Pow(0.5), &grid));
    }
}

//! Activation families with a flat region.
//!
//! An [`ActivationFamily`] bundles the activation itself, the generalized
//! derivative used by backpropagation (defined everywhere, equal to the true
//! derivative away from the finite exception set `S`), the flat interval
//! `(flat_lo, flat_hi)` on which the generalized derivative vanishes, a lower
//! bound on the activation's range, and a sequence of C¹ approximations
//! indexed by `r = 1, 2, ...` that agree with the activation (value and
//! derivative) at every fixed point once `r` is large enough.
//!
//! Smoothing level `r = 0` always denotes the activation itself.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// User-supplied activation. Only needed for families beyond the shipped ones.
pub trait ScalarActivation: Send + Sync {
    fn value(&self, x: f64) -> f64;
    /// Generalized derivative; must be defined on the exception set too.
    fn gen_deriv(&self, x: f64) -> f64;
    /// Value and derivative of the `r`-th C¹ approximation, `r >= 1`.
    fn mollified(&self, r: u32, x: f64) -> (f64, f64);
    /// Points where the activation may change monotonicity. Interval images
    /// are computed from the endpoints plus these points.
    fn critical_points(&self) -> Vec<f64>;
}

/// Serializable description used by configs and reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ActivationSpec {
    Relu,
    Clip { lo: f64, hi: f64 },
    Repu { power: u32 },
}

impl ActivationSpec {
    pub fn build(&self) -> Result<ActivationFamily> {
        match *self {
            ActivationSpec::Relu => Ok(ActivationFamily::relu()),
            ActivationSpec::Clip { lo, hi } => ActivationFamily::clip(lo, hi),
            ActivationSpec::Repu { power } => ActivationFamily::repu(power),
        }
    }
}

impl fmt::Display for ActivationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActivationSpec::Relu => write!(f, "relu"),
            ActivationSpec::Clip { lo, hi } => write!(f, "clip({lo},{hi})"),
            ActivationSpec::Repu { power } => write!(f, "repu({power})"),
        }
    }
}

#[derive(Clone)]
enum Kind {
    Relu,
    Clip { lo: f64, hi: f64 },
    Repu { power: i32 },
    Custom(Arc<dyn ScalarActivation>),
}

#[derive(Clone)]
pub struct ActivationFamily {
    name: String,
    kind: Kind,
    exception_set: Vec<f64>,
    flat_lo: f64,
    flat_hi: f64,
    inf_bound: f64,
}

impl fmt::Debug for ActivationFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ActivationFamily")
            .field("name", &self.name)
            .field("exception_set", &self.exception_set)
            .field("flat", &(self.flat_lo, self.flat_hi))
            .field("inf_bound", &self.inf_bound)
            .finish()
    }
}

/// C¹ blend of `0` (left) into `t` (right) on `[0, h]`: value, derivative.
///
/// `f(0) = f'(0) = 0`, `f(h) = h`, `f'(h) = 1`, nondecreasing and below `t`.
#[inline]
fn kink_blend(t: f64, h: f64) -> (f64, f64) {
    let s = t / h;
    (t * s * (2.0 - s), s * (4.0 - 3.0 * s))
}

#[inline]
fn relu_mollified(r: u32, x: f64) -> (f64, f64) {
    let h = 1.0 / r as f64;
    if x <= 0.0 {
        (0.0, 0.0)
    } else if x >= h {
        (x, 1.0)
    } else {
        kink_blend(x, h)
    }
}

#[inline]
fn clip_mollified(lo: f64, hi: f64, r: u32, x: f64) -> (f64, f64) {
    let h = (1.0 / r as f64).min(0.5 * (hi - lo));
    if x <= lo {
        (lo, 0.0)
    } else if x >= hi {
        (hi, 0.0)
    } else if x < lo + h {
        let (v, d) = kink_blend(x - lo, h);
        (lo + v, d)
    } else if x > hi - h {
        let (v, d) = kink_blend(hi - x, h);
        (hi - v, d)
    } else {
        (x, 1.0)
    }
}

impl ActivationFamily {
    /// `max{x, 0}` with `a(0) = 0`.
    pub fn relu() -> Self {
        ActivationFamily {
            name: "relu".into(),
            kind: Kind::Relu,
            exception_set: vec![0.0],
            flat_lo: f64::NEG_INFINITY,
            flat_hi: 0.0,
            inf_bound: 0.0,
        }
    }

    /// `max{lo, min{x, hi}}`; the designated flat interval is `(-inf, lo)`.
    pub fn clip(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::invalid(
                "activation.clip",
                format!("need finite lo < hi, got lo={lo}, hi={hi}"),
            ));
        }
        Ok(ActivationFamily {
            name: format!("clip({lo},{hi})"),
            kind: Kind::Clip { lo, hi },
            exception_set: vec![lo, hi],
            flat_lo: f64::NEG_INFINITY,
            flat_hi: lo,
            inf_bound: lo,
        })
    }

    /// `(max{x, 0})^p` for `p >= 2`; already C¹, so every approximation is exact.
    pub fn repu(power: u32) -> Result<Self> {
        if power < 2 {
            return Err(Error::invalid(
                "activation.repu.power",
                format!("power must be >= 2, got {power}"),
            ));
        }
        Ok(ActivationFamily {
            name: format!("repu({power})"),
            kind: Kind::Repu { power: power as i32 },
            exception_set: Vec::new(),
            flat_lo: f64::NEG_INFINITY,
            flat_hi: 0.0,
            inf_bound: 0.0,
        })
    }

    /// Wraps a user activation. `exception_set` is sorted and deduplicated.
    pub fn custom(
        name: impl Into<String>,
        activation: Arc<dyn ScalarActivation>,
        mut exception_set: Vec<f64>,
        flat: (f64, f64),
        inf_bound: f64,
    ) -> Result<Self> {
        if exception_set.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("exception_set", "entries must be finite"));
        }
        exception_set.sort_by(f64::total_cmp);
        exception_set.dedup();
        if flat.0.is_nan() || flat.1.is_nan() || flat.0 >= flat.1 || !flat.1.is_finite() {
            return Err(Error::invalid(
                "flat",
                format!("need flat_lo < flat_hi with finite flat_hi, got {flat:?}"),
            ));
        }
        Ok(ActivationFamily {
            name: name.into(),
            kind: Kind::Custom(activation),
            exception_set,
            flat_lo: flat.0,
            flat_hi: flat.1,
            inf_bound,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn exception_set(&self) -> &[f64] {
        &self.exception_set
    }

    pub fn flat_lo(&self) -> f64 {
        self.flat_lo
    }

    pub fn flat_hi(&self) -> f64 {
        self.flat_hi
    }

    pub fn inf_bound(&self) -> f64 {
        self.inf_bound
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match self.kind {
            Kind::Relu => x.max(0.0),
            Kind::Clip { lo, hi } => x.clamp(lo, hi),
            Kind::Repu { power } => x.max(0.0).powi(power),
            Kind::Custom(ref a) => a.value(x),
        }
    }

    /// Generalized derivative `a`. The shipped families return zero on the
    /// exception set, the limit the mollified approximations select at a kink.
    #[inline]
    pub fn gen_deriv(&self, x: f64) -> f64 {
        match self.kind {
            Kind::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Clip { lo, hi } => {
                if x > lo && x < hi {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Repu { power } => power as f64 * x.max(0.0).powi(power - 1),
            Kind::Custom(ref a) => a.gen_deriv(x),
        }
    }

    /// Value and derivative of the `r`-th approximation. `r = 0` returns the
    /// activation and its generalized derivative.
    #[inline]
    pub fn eval(&self, r: u32, x: f64) -> (f64, f64) {
        if r == 0 {
            return (self.value(x), self.gen_deriv(x));
        }
        match self.kind {
            Kind::Relu => relu_mollified(r, x),
            Kind::Clip { lo, hi } => clip_mollified(lo, hi, r, x),
            Kind::Repu { .. } => (self.value(x), self.gen_deriv(x)),
            Kind::Custom(ref a) => a.mollified(r, x),
        }
    }

    #[inline]
    pub fn value_at(&self, r: u32, x: f64) -> f64 {
        if r == 0 {
            self.value(x)
        } else {
            self.eval(r, x).0
        }
    }

    /// Smallest `r` from which the approximation is exact at `x`, when known
    /// in closed form for the shipped families.
    pub fn exactness_threshold(&self, x: f64) -> Option<u32> {
        let dist = self
            .exception_set
            .iter()
            .map(|s| (x - s).abs())
            .fold(f64::INFINITY, f64::min);
        match self.kind {
            Kind::Repu { .. } => Some(1),
            Kind::Relu | Kind::Clip { .. } => {
                if dist == 0.0 || dist.is_infinite() {
                    Some(1)
                } else {
                    Some((1.0 / dist).ceil().max(1.0) as u32)
                }
            }
            Kind::Custom(_) => None,
        }
    }

    /// Whether `x` lies in `(flat_lo, flat_hi) \ S`.
    #[inline]
    pub fn in_flat_set(&self, x: f64) -> bool {
        x > self.flat_lo && x < self.flat_hi && !self.exception_set.contains(&x)
    }

    /// Whether the closed interval `[lo, hi]` lies in `(flat_lo, flat_hi) \ S`.
    pub fn interval_in_flat_set(&self, lo: f64, hi: f64) -> bool {
        lo > self.flat_lo && hi < self.flat_hi && lo <= hi && !self.exception_set.iter().any(|&s| s >= lo && s <= hi)
    }

    /// Exact image of `[lo, hi]` for piecewise-monotone activations.
    pub fn image(&self, lo: f64, hi: f64) -> (f64, f64) {
        match self.kind {
            Kind::Relu | Kind::Clip { .. } | Kind::Repu { .. } => (self.value(lo), self.value(hi)),
            Kind::Custom(ref a) => {
                let mut min = self.value(lo).min(self.value(hi));
                let mut max = self.value(lo).max(self.value(hi));
                for c in a.critical_points() {
                    if c > lo && c < hi {
                        let v = self.value(c);
                        min = min.min(v);
                        max = max.max(v);
                    }
                }
                (min, max)
            }
        }
    }

    /// Default threshold `min(S ∪ {flat_hi})`.
    pub fn default_gamma(&self) -> f64 {
        self.exception_set.iter().copied().fold(self.flat_hi, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn relu_examples() {
        let a = ActivationFamily::relu();
        assert_eq!(a.gen_deriv(-3.0), 0.0);
        assert_eq!(a.gen_deriv(0.0), 0.0);
        assert_eq!(a.gen_deriv(2.0), 1.0);
        assert_eq!(a.eval(1, 2.0), (2.0, 1.0));
        assert_eq!(a.eval(7, 0.0), (0.0, 0.0));
    }

    #[test]
    fn clip_examples() {
        let a = ActivationFamily::clip(0.0, 1.0).unwrap();
        assert_eq!(a.value(2.0), 1.0);
        assert_eq!(a.gen_deriv(0.5), 1.0);
        assert_eq!(a.gen_deriv(0.0), 0.0);
        assert_eq!(a.gen_deriv(1.0), 0.0);
        assert_eq!(ActivationFamily::clip(-1.0, 1.0).unwrap().inf_bound(), -1.0);
        assert!(ActivationFamily::clip(1.0, 1.0).is_err());
        assert!(ActivationFamily::clip(2.0, 1.0).is_err());
    }

    #[test]
    fn repu_examples() {
        let a = ActivationFamily::repu(2).unwrap();
        assert_eq!(a.value(3.0), 9.0);
        assert_eq!(a.gen_deriv(3.0), 6.0);
        assert_eq!(ActivationFamily::repu(3).unwrap().gen_deriv(-1.0), 0.0);
        assert!(ActivationFamily::repu(1).is_err());
        assert!(a.exception_set().is_empty());
    }

    fn shipped() -> Vec<ActivationFamily> {
        vec![
            ActivationFamily::relu(),
            ActivationFamily::clip(0.0, 1.0).unwrap(),
            ActivationFamily::clip(-1.0, 2.0).unwrap(),
            ActivationFamily::repu(2).unwrap(),
            ActivationFamily::repu(3).unwrap(),
        ]
    }

    #[test]
    fn flat_region_has_zero_derivative() {
        for a in shipped() {
            let lo = a.flat_lo().max(-1e6);
            let hi = a.flat_hi();
            for i in 1..10_000 {
                let x = lo + (hi - lo) * i as f64 / 10_000.0;
                if a.in_flat_set(x) {
                    assert_eq!(a.gen_deriv(x), 0.0, "{} at {x}", a.name());
                    assert_eq!(a.value(x), a.value(0.5 * (lo + hi)), "{} at {x}", a.name());
                }
            }
        }
    }

    #[test]
    fn derivative_is_not_identically_zero() {
        for a in shipped() {
            let max = (-100..100)
                .map(|i| a.gen_deriv(i as f64 * 0.05).abs())
                .fold(0.0, f64::max);
            assert!(max > 0.0, "{}", a.name());
            assert!((-100..100).all(|i| a.value(i as f64 * 0.05) >= a.inf_bound()));
        }
    }

    #[test]
    fn mollified_is_c1() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for a in shipped() {
            for _ in 0..1000 {
                let x: f64 = rng.random_range(-3.0..3.0);
                let r: u32 = rng.random_range(1..10);
                let s = 1e-8;
                let fd = (a.value_at(r, x + s) - a.value_at(r, x - s)) / (2.0 * s);
                let d = a.eval(r, x).1;
                assert!(
                    (fd - d).abs() <= 1e-6 * d.abs().max(1.0),
                    "{} r={r} x={x}: fd={fd} d={d}",
                    a.name()
                );
            }
        }
    }

    #[test]
    fn mollified_eventually_exact() {
        let probes = [-2.0, -0.3, -0.01, 0.0, 0.004, 0.2, 0.999, 1.0, 1.5, 3.0];
        for a in shipped() {
            for &x in &probes {
                let threshold = a.exactness_threshold(x).unwrap();
                for r in threshold..threshold + 50 {
                    let (v, d) = a.eval(r, x);
                    assert_eq!(v, a.value(x), "{} r={r} x={x}", a.name());
                    assert_eq!(d, a.gen_deriv(x), "{} r={r} x={x}", a.name());
                }
            }
        }
    }

    #[test]
    fn repu_derivative_matches_finite_differences() {
        for p in 2..5 {
            let a = ActivationFamily::repu(p).unwrap();
            for i in -40..40 {
                let x = i as f64 * 0.073 + 0.01;
                let s = 1e-6;
                let fd = (a.value(x + s) - a.value(x - s)) / (2.0 * s);
                assert!((fd - a.gen_deriv(x)).abs() <= 1e-6 * fd.abs().max(1.0));
            }
        }
    }

    #[test]
    fn flat_set_membership() {
        let a = ActivationFamily::relu();
        assert!(a.in_flat_set(-1.0));
        assert!(!a.in_flat_set(0.0));
        assert!(a.interval_in_flat_set(-2.0, -1e-9));
        assert!(!a.interval_in_flat_set(-2.0, 0.0));
        let c = ActivationFamily::clip(-1.0, 1.0).unwrap();
        assert_eq!(c.default_gamma(), -1.0);
        assert!(!c.in_flat_set(-1.0));
        assert!(c.in_flat_set(-1.5));
    }
}

//! Initialization laws with CDF access.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ann::{Architecture, ParamVector};
use crate::error::{Error, Result};
use crate::normal::normal_cdf;

/// Law of a single coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoordLaw {
    /// `σΘ + μ` is standard normal, i.e. `Θ = (Z - μ)/σ`.
    Normal {
        mu: f64,
        sigma: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    PointMass {
        at: f64,
    },
    /// `Θ = Z/c`, so `P(Θ < x) = Φ(c·x)`.
    ScaledNormal {
        c: f64,
    },
}

impl CoordLaw {
    pub const STANDARD_NORMAL: CoordLaw = CoordLaw::Normal { mu: 0.0, sigma: 1.0 };

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            CoordLaw::Normal { mu, sigma } => mu.is_finite() && sigma.is_finite() && sigma > 0.0,
            CoordLaw::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            CoordLaw::PointMass { at } => at.is_finite(),
            CoordLaw::ScaledNormal { c } => c.is_finite() && c > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("init", format!("invalid coordinate law {self:?}")))
        }
    }

    /// `P(Θ < x)`.
    pub fn prob_below(&self, x: f64) -> f64 {
        match *self {
            CoordLaw::Normal { mu, sigma } => normal_cdf(sigma * x + mu),
            CoordLaw::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            CoordLaw::PointMass { at } => {
                if at < x {
                    1.0
                } else {
                    0.0
                }
            }
            CoordLaw::ScaledNormal { c } => normal_cdf(c * x),
        }
    }

    /// `P(Θ ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            CoordLaw::PointMass { at } => {
                if at <= x {
                    1.0
                } else {
                    0.0
                }
            }
            _ => self.prob_below(x),
        }
    }

    /// `P(lo < Θ < hi)`; `0` for empty intervals.
    pub fn prob_between(&self, lo: f64, hi: f64) -> f64 {
        if !(lo < hi) {
            return 0.0;
        }
        match *self {
            CoordLaw::PointMass { at } => {
                if lo < at && at < hi {
                    1.0
                } else {
                    0.0
                }
            }
            // difference of upper tails is more accurate above the median
            CoordLaw::Normal { mu, sigma } if sigma * lo + mu > 0.0 => {
                normal_cdf(-(sigma * lo + mu)) - normal_cdf(-(sigma * hi + mu))
            }
            CoordLaw::ScaledNormal { c } if c * lo > 0.0 => normal_cdf(-c * lo) - normal_cdf(-c * hi),
            _ => (self.prob_below(hi) - self.cdf(lo)).max(0.0),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            CoordLaw::Normal { mu, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                (z - mu) / sigma
            }
            CoordLaw::Uniform { lo, hi } => rng.random_range(lo..hi),
            CoordLaw::PointMass { at } => at,
            CoordLaw::ScaledNormal { c } => {
                let z: f64 = StandardNormal.sample(rng);
                z / c
            }
        }
    }
}

/// Product law on `ℝ^𝔡` with independent coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum InitDistribution {
    Iid(CoordLaw),
    PerCoordinate(Vec<CoordLaw>),
}

impl InitDistribution {
    pub fn standard_normal() -> Self {
        InitDistribution::Iid(CoordLaw::STANDARD_NORMAL)
    }

    /// Coordinates of layer `k` follow `Z/c_k`, with `c_k` from `factor(k)`.
    pub fn layer_scaled(arch: &Architecture, factor: impl Fn(usize) -> f64) -> Result<Self> {
        let mut laws = Vec::with_capacity(arch.param_count());
        for k in 1..=arch.depth() {
            let law = CoordLaw::ScaledNormal { c: factor(k) };
            law.validate()?;
            laws.extend(std::iter::repeat_n(law, arch.layer_range(k).len()));
        }
        Ok(InitDistribution::PerCoordinate(laws))
    }

    /// Law of coordinate `i` (0-based).
    pub fn law(&self, i: usize) -> &CoordLaw {
        match self {
            InitDistribution::Iid(l) => l,
            InitDistribution::PerCoordinate(v) => &v[i],
        }
    }

    pub fn validate(&self, arch: &Architecture) -> Result<()> {
        match self {
            InitDistribution::Iid(l) => l.validate(),
            InitDistribution::PerCoordinate(v) => {
                if v.len() != arch.param_count() {
                    return Err(Error::Dimension {
                        what: "per-coordinate init laws",
                        expected: arch.param_count(),
                        got: v.len(),
                    });
                }
                v.iter().try_for_each(CoordLaw::validate)
            }
        }
    }

    pub fn prob_below(&self, i: usize, x: f64) -> f64 {
        self.law(i).prob_below(x)
    }

    pub fn prob_between(&self, i: usize, lo: f64, hi: f64) -> f64 {
        self.law(i).prob_between(lo, hi)
    }

    /// Draws `Θ₀`, coordinates in index order.
    pub fn sample<R: Rng + ?Sized>(&self, arch: &Architecture, rng: &mut R) -> ParamVector {
        let theta = (0..arch.param_count()).map(|i| self.law(i).sample(rng)).collect();
        ParamVector::new(arch.clone(), theta).expect("length matches")
    }

    pub fn describe(&self) -> String {
        match self {
            InitDistribution::Iid(l) => format!("iid {l:?}"),
            InitDistribution::PerCoordinate(v) => format!("per-coordinate ({} laws)", v.len()),
        }
    }
}

//! Binary aggregate games with additively separable payoff heterogeneity.
//!
//! Every agent chooses between two actions. Action `I` pays the common
//! amount `F(x̄)`, which depends only on the aggregate participation rate
//! `x̄ ∈ [0,1]`; action `O` pays the agent's own type `θ` (an outside
//! option). Types are drawn from a continuous distribution with a compact
//! support, so the best response of type `θ` is `I` iff `θ ≤ F(x̄)`.

use serde::Serialize;

use crate::error::{input, Result};

/// Slack allowed when validating points that should lie in `[0,1]` or in a
/// type support; absorbs rounding from upstream arithmetic.
pub(crate) const DOMAIN_SLACK: f64 = 1e-12;

/// One of the two actions of a binary game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Action {
    /// Participate; pays the common payoff `F(x̄)`.
    I,
    /// Stay out; pays the agent's type.
    O,
}

/// Payoff function families for action `I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PayoffFamily {
    /// `F(x̄) = slope·x̄ + intercept`.
    Affine { slope: f64, intercept: f64 },
    /// Random matching in a 2×2 coordination game:
    /// `F(x̄) = (1 − c)x̄ − c(1 − x̄) = x̄ − c`.
    LinearCoordination { cost: f64 },
}

/// The common payoff `F` of a binary aggregate game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AggregateGame {
    family: PayoffFamily,
}

impl AggregateGame {
    pub fn affine(slope: f64, intercept: f64) -> Result<Self> {
        if !slope.is_finite() || !intercept.is_finite() {
            return input("affine payoff coefficients must be finite");
        }
        Ok(Self {
            family: PayoffFamily::Affine { slope, intercept },
        })
    }

    pub fn linear_coordination(cost: f64) -> Result<Self> {
        if !(cost > 0.0 && cost < 1.0) {
            return input(format!("coordination cost must lie in (0,1), got {cost}"));
        }
        Ok(Self {
            family: PayoffFamily::LinearCoordination { cost },
        })
    }

    /// The canonical three-equilibrium game `F(x̄) = (49x̄ − 1)/20`.
    pub fn canonical() -> Self {
        Self {
            family: PayoffFamily::Affine {
                slope: 49.0 / 20.0,
                intercept: -1.0 / 20.0,
            },
        }
    }

    pub fn family(&self) -> PayoffFamily {
        self.family
    }

    pub fn slope(&self) -> f64 {
        match self.family {
            PayoffFamily::Affine { slope, .. } => slope,
            PayoffFamily::LinearCoordination { .. } => 1.0,
        }
    }

    pub fn intercept(&self) -> f64 {
        match self.family {
            PayoffFamily::Affine { intercept, .. } => intercept,
            PayoffFamily::LinearCoordination { cost } => -cost,
        }
    }

    /// Lipschitz constant of `F` on its evaluation domain.
    pub fn lipschitz(&self) -> f64 {
        self.slope().abs()
    }

    /// `true` iff `F` is strictly increasing in `x̄`.
    pub fn has_positive_externality(&self) -> bool {
        self.slope() > 0.0
    }

    /// Evaluates `F(x̄)`, rejecting aggregates outside `[0,1]`.
    pub fn payoff(&self, xbar: f64) -> Result<f64> {
        check_unit(xbar, "aggregate strategy")?;
        Ok(self.eval(xbar))
    }

    #[inline]
    pub(crate) fn eval(&self, xbar: f64) -> f64 {
        match self.family {
            PayoffFamily::Affine { slope, intercept } => slope * xbar + intercept,
            PayoffFamily::LinearCoordination { cost } => (1.0 - cost) * xbar - cost * (1.0 - xbar),
        }
    }
}

/// Type distribution families with closed-form c.d.f., inverse and density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DistributionFamily {
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// `P(θ) = √(θ + 1) − 1` on `[0, 3]`.
    SqrtShift,
    /// Logistic with location `mu` and scale `s`, truncated to
    /// `[mu − tau·s, mu + tau·s]` and renormalised.
    Logistic {
        mu: f64,
        s: f64,
        tau: f64,
    },
}

/// Default truncation half-width of the logistic family, in scale units.
pub const LOGISTIC_DEFAULT_TAU: f64 = 12.0;

/// A continuous type distribution on a compact support `[θ_min, θ_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TypeDistribution {
    family: DistributionFamily,
    lower: f64,
    upper: f64,
    // Standard logistic c.d.f. at the truncation points.
    #[serde(skip)]
    mass_lo: f64,
    #[serde(skip)]
    mass_hi: f64,
}

impl TypeDistribution {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return input(format!(
                "uniform support needs finite lo < hi, got [{lo}, {hi}]"
            ));
        }
        Ok(Self {
            family: DistributionFamily::Uniform { lo, hi },
            lower: lo,
            upper: hi,
            mass_lo: 0.0,
            mass_hi: 1.0,
        })
    }

    pub fn sqrt_shift() -> Self {
        Self {
            family: DistributionFamily::SqrtShift,
            lower: 0.0,
            upper: 3.0,
            mass_lo: 0.0,
            mass_hi: 1.0,
        }
    }

    pub fn logistic(mu: f64, s: f64, tau: f64) -> Result<Self> {
        if !(mu.is_finite() && s.is_finite() && s > 0.0) {
            return input(format!(
                "logistic needs finite location and positive scale, got mu={mu}, s={s}"
            ));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return input(format!(
                "logistic truncation must be positive, got tau={tau}"
            ));
        }
        Ok(Self {
            family: DistributionFamily::Logistic { mu, s, tau },
            lower: mu - tau * s,
            upper: mu + tau * s,
            mass_lo: sigmoid(-tau),
            mass_hi: sigmoid(tau),
        })
    }

    pub fn family(&self) -> DistributionFamily {
        self.family
    }

    /// `(θ_min, θ_max)`.
    pub fn support(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// `P(θ)`, equal to 0 below the support and 1 above it.
    pub fn cdf(&self, theta: f64) -> f64 {
        if theta <= self.lower {
            return 0.0;
        }
        if theta >= self.upper {
            return 1.0;
        }
        let p = match self.family {
            DistributionFamily::Uniform { lo, hi } => (theta - lo) / (hi - lo),
            DistributionFamily::SqrtShift => (theta + 1.0).sqrt() - 1.0,
            DistributionFamily::Logistic { mu, s, .. } => {
                (sigmoid((theta - mu) / s) - self.mass_lo) / (self.mass_hi - self.mass_lo)
            }
        };
        p.clamp(0.0, 1.0)
    }

    /// `P⁻¹(u)`; `u` is clamped to `[0,1]`.
    pub fn inv_cdf(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        if u == 0.0 {
            return self.lower;
        }
        if u == 1.0 {
            return self.upper;
        }
        let theta = match self.family {
            DistributionFamily::Uniform { lo, hi } => lo + u * (hi - lo),
            DistributionFamily::SqrtShift => (u + 1.0) * (u + 1.0) - 1.0,
            DistributionFamily::Logistic { mu, s, .. } => {
                let z = self.mass_lo + u * (self.mass_hi - self.mass_lo);
                mu + s * (z / (1.0 - z)).ln()
            }
        };
        theta.clamp(self.lower, self.upper)
    }

    /// Density `p(θ)`; zero outside the support.
    pub fn pdf(&self, theta: f64) -> f64 {
        if theta < self.lower || theta > self.upper {
            return 0.0;
        }
        match self.family {
            DistributionFamily::Uniform { lo, hi } => 1.0 / (hi - lo),
            DistributionFamily::SqrtShift => 0.5 / (theta + 1.0).sqrt(),
            DistributionFamily::Logistic { mu, s, .. } => {
                let g = sigmoid((theta - mu) / s);
                g * (1.0 - g) / (s * (self.mass_hi - self.mass_lo))
            }
        }
    }

    /// `true` iff `θ` lies in the support (with rounding slack).
    pub fn contains(&self, theta: f64) -> bool {
        theta >= self.lower - DOMAIN_SLACK && theta <= self.upper + DOMAIN_SLACK
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn check_unit(value: f64, what: &str) -> Result<()> {
    if (-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&value) {
        Ok(())
    } else {
        input(format!("{what} must lie in [0,1], got {value}"))
    }
}

/// Best response of type `θ` when the aggregate is `x̄`; indifference goes to `I`.
pub fn best_response(
    game: &AggregateGame,
    dist: &TypeDistribution,
    xbar: f64,
    theta: f64,
) -> Result<Action> {
    if !dist.contains(theta) {
        let (lo, hi) = dist.support();
        return input(format!("type {theta} outside support [{lo}, {hi}]"));
    }
    let f = game.payoff(xbar)?;
    Ok(if theta <= f { Action::I } else { Action::O })
}

/// Mass of types whose best response to `x̄` is `I`: `P(F(x̄))`, clamped
/// to 0 or 1 when `F(x̄)` leaves the support.
pub fn aggregate_best_response(game: &AggregateGame, dist: &TypeDistribution, xbar: f64) -> f64 {
    dist.cdf(game.eval(xbar))
}

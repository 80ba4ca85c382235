//! Revision protocols, the heterogeneous vector field and its integration.
//!
//! Agents receive revision opportunities at rate one and switch only to
//! their current best response. The conditional switching rate depends on
//! the payoff deficit of the current action: constant under the standard
//! best response dynamic, increasing under a tempered one. Power tempering
//! is a *rate* and may exceed 1; it is bounded by `(max deficit)^k` on the
//! compact type support.

use serde::Serialize;

use crate::composition::{aggregate_values, BayesianStrategy};
use crate::error::{input, Error, Result};
use crate::game::{check_unit, AggregateGame, TypeDistribution};

/// Shape of the tempering function `Q` applied to positive deficits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "tempering", rename_all = "snake_case")]
pub enum Tempering {
    /// `Q(q) = q^k`.
    Power { k: f64 },
    /// `Q(q) = min((q/π♯)^k, 1)`: saturates at deficit `π♯`.
    BoundedPower { k: f64, pisharp: f64 },
}

/// `q^k`, with the much cheaper `powi` for small integer exponents.
#[inline]
fn pow(q: f64, k: f64) -> f64 {
    if k == k.trunc() && (1.0..=16.0).contains(&k) {
        q.powi(k as i32)
    } else {
        q.powf(k)
    }
}

impl Tempering {
    #[inline]
    fn eval(&self, q: f64) -> f64 {
        match *self {
            Tempering::Power { k } => pow(q, k),
            Tempering::BoundedPower { k, pisharp } => {
                if q >= pisharp {
                    1.0
                } else {
                    pow(q / pisharp, k)
                }
            }
        }
    }

    fn integral(&self, a: f64, b: f64) -> f64 {
        match *self {
            Tempering::Power { k } => (b.powf(k + 1.0) - a.powf(k + 1.0)) / (k + 1.0),
            Tempering::BoundedPower { k, pisharp } => {
                let top = b.min(pisharp);
                let curved = if a < top {
                    pisharp / (k + 1.0)
                        * ((top / pisharp).powf(k + 1.0) - (a / pisharp).powf(k + 1.0))
                } else {
                    0.0
                };
                curved + (b - a.max(pisharp)).max(0.0)
            }
        }
    }
}

/// Conditional switching-rate rule of an exact optimisation dynamic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RevisionProtocol {
    /// Switch to the best response at rate 1.
    Standard,
    /// Switch at rate `Q(deficit)`.
    Tempered(Tempering),
}

impl RevisionProtocol {
    pub fn power(k: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return input(format!("tempering exponent must be positive, got {k}"));
        }
        Ok(Self::Tempered(Tempering::Power { k }))
    }

    pub fn bounded_power(k: f64, pisharp: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return input(format!("tempering exponent must be positive, got {k}"));
        }
        if !(pisharp.is_finite() && pisharp > 0.0) {
            return input(format!(
                "saturation deficit must be positive, got {pisharp}"
            ));
        }
        Ok(Self::Tempered(Tempering::BoundedPower { k, pisharp }))
    }

    /// Switching rate toward an action whose payoff exceeds the current
    /// one by `deficit`; zero for non-positive deficits.
    #[inline]
    pub fn rate(&self, deficit: f64) -> f64 {
        if deficit <= 0.0 {
            return 0.0;
        }
        match self {
            RevisionProtocol::Standard => 1.0,
            RevisionProtocol::Tempered(t) => t.eval(deficit),
        }
    }

    /// `∫_a^b Q(q) dq` for `0 ≤ a ≤ b`.
    pub fn rate_integral(&self, a: f64, b: f64) -> f64 {
        let a = a.max(0.0);
        if b <= a {
            return 0.0;
        }
        match self {
            RevisionProtocol::Standard => b - a,
            RevisionProtocol::Tempered(t) => t.integral(a, b),
        }
    }

    /// Upper bound on the switching rate over deficits up to `max_deficit`.
    pub fn rate_bound(&self, max_deficit: f64) -> f64 {
        match self {
            RevisionProtocol::Tempered(Tempering::Power { k }) => max_deficit.max(0.0).powf(*k),
            _ => 1.0,
        }
    }

    /// `true` when `Q` is strictly increasing on all positive deficits, the
    /// case where balanced switching rates reduce to balanced deficits.
    pub fn is_strictly_increasing(&self) -> bool {
        matches!(self, RevisionProtocol::Tempered(Tempering::Power { .. }))
    }
}

/// Switching rate for a payoff difference `π_target − π_current`.
pub fn switching_rate(protocol: &RevisionProtocol, deficit: f64) -> f64 {
    protocol.rate(deficit)
}

/// Rate at which a current `I` player of type `θ` switches to `O` when the
/// payoff of `I` is `payoff`.
#[inline]
pub fn rate_out(protocol: &RevisionProtocol, payoff: f64, theta: f64) -> f64 {
    protocol.rate(theta - payoff)
}

/// Rate at which a current `O` player of type `θ` switches to `I`.
#[inline]
pub fn rate_in(protocol: &RevisionProtocol, payoff: f64, theta: f64) -> f64 {
    protocol.rate(payoff - theta)
}

/// Writes `ẋ_i` into `out` given node types and values; returns the
/// aggregate used to freeze the payoff.
fn field_into(
    game: &AggregateGame,
    protocol: &RevisionProtocol,
    grid: &crate::composition::TypeGrid,
    values: &[f64],
    out: &mut [f64],
) -> f64 {
    let xbar = aggregate_values(grid, values);
    let payoff = game.eval(xbar.clamp(0.0, 1.0));
    for ((o, &x), &theta) in out.iter_mut().zip(values).zip(grid.nodes()) {
        *o = if theta <= payoff {
            (1.0 - x) * rate_in(protocol, payoff, theta)
        } else {
            -x * rate_out(protocol, payoff, theta)
        };
    }
    xbar
}

/// Per-node rates of change `ẋ_i` of the heterogeneous dynamic.
pub fn vector_field(
    game: &AggregateGame,
    protocol: &RevisionProtocol,
    x: &BayesianStrategy,
) -> Vec<f64> {
    let mut out = vec![0.0; x.values().len()];
    field_into(game, protocol, x.grid(), x.values(), &mut out);
    out
}

/// Aggregate velocity `Σ w_i ẋ_i`.
pub fn aggregate_velocity(
    game: &AggregateGame,
    protocol: &RevisionProtocol,
    x: &BayesianStrategy,
) -> f64 {
    let field = vector_field(game, protocol, x);
    x.grid()
        .weights()
        .iter()
        .zip(&field)
        .map(|(w, v)| w * v)
        .sum()
}

/// Integration settings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegrateOptions {
    pub t_end: f64,
    pub dt: f64,
    /// Times at which full strategy snapshots are kept.
    pub snapshot_times: Vec<f64>,
}

impl IntegrateOptions {
    pub fn new(t_end: f64, dt: f64) -> Self {
        Self {
            t_end,
            dt,
            snapshot_times: Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return input(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return input(format!("dt must be positive, got {}", self.dt));
        }
        Ok(())
    }

    /// End times `k·dt` of the steps covering `[0, t_end]`; the last step
    /// ends exactly at `t_end` and is shortened when `t_end` is not a
    /// multiple of `dt`.
    fn step_ends(&self) -> impl Iterator<Item = f64> + '_ {
        let full = (self.t_end / self.dt * (1.0 + 1e-12)).floor() as usize;
        let rest = self.t_end - full as f64 * self.dt;
        let extra = rest > self.dt * 1e-9;
        let count = full + usize::from(extra);
        (1..=count).map(move |k| {
            if k == count {
                self.t_end
            } else {
                k as f64 * self.dt
            }
        })
    }
}

/// Recorded strategy at a snapshot time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub strategy: BayesianStrategy,
}

/// Aggregate path of a run, with optional strategy snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub xbar: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    /// Total mass moved by clamping node values back into `[0,1]`.
    pub clamped: f64,
    /// State at `t_end` (heterogeneous runs only).
    pub final_state: Option<BayesianStrategy>,
}

impl Trajectory {
    pub fn final_xbar(&self) -> f64 {
        *self
            .xbar
            .last()
            .expect("trajectory holds the initial point")
    }

    /// Aggregate at the recorded time closest to `t`.
    pub fn xbar_at(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&s| s < t);
        let k = match (k.checked_sub(1), self.times.get(k)) {
            (Some(prev), Some(&next)) if (t - self.times[prev]) < (next - t) => prev,
            (_, Some(_)) => k,
            (Some(prev), None) => prev,
            (None, None) => 0,
        };
        self.xbar[k]
    }
}

/// Fixed-step classical RK4 on the heterogeneous dynamic. Node values are
/// clamped to `[0,1]` after every step.
pub fn integrate(
    game: &AggregateGame,
    protocol: &RevisionProtocol,
    x0: &BayesianStrategy,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    opts.validate()?;
    let grid = x0.grid().clone();
    let n = grid.len();
    let mut y = x0.values().to_vec();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut stage = vec![0.0; n];

    let mut snapshot_times = opts.snapshot_times.clone();
    snapshot_times.sort_by(f64::total_cmp);
    let mut pending = snapshot_times.into_iter().peekable();
    let mut snapshots = Vec::new();

    let mut t = 0.0;
    let mut times = vec![0.0];
    let mut xbars = vec![aggregate_values(&grid, &y)];
    let mut clamped = 0.0;
    let w = 1.0 / n as f64;

    while let Some(&ts) = pending.peek() {
        if ts > opts.dt * 0.5 {
            break;
        }
        snapshots.push(Snapshot {
            t: 0.0,
            strategy: BayesianStrategy::from_parts_unchecked(grid.clone(), y.clone()),
        });
        pending.next();
    }

    for t_next in opts.step_ends() {
        let h = t_next - t;
        field_into(game, protocol, &grid, &y, &mut k1);
        for i in 0..n {
            stage[i] = y[i] + 0.5 * h * k1[i];
        }
        field_into(game, protocol, &grid, &stage, &mut k2);
        for i in 0..n {
            stage[i] = y[i] + 0.5 * h * k2[i];
        }
        field_into(game, protocol, &grid, &stage, &mut k3);
        for i in 0..n {
            stage[i] = y[i] + h * k3[i];
        }
        field_into(game, protocol, &grid, &stage, &mut k4);
        for i in 0..n {
            let next = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            let bounded = next.clamp(0.0, 1.0);
            clamped += w * (next - bounded).abs();
            y[i] = bounded;
        }
        t = t_next;
        let xbar = aggregate_values(&grid, &y);
        if !xbar.is_finite() {
            return Err(Error::Integration {
                time: t,
                message: "non-finite aggregate state".into(),
            });
        }
        times.push(t);
        xbars.push(xbar);
        while let Some(&ts) = pending.peek() {
            if ts > t + 0.5 * h {
                break;
            }
            snapshots.push(Snapshot {
                t,
                strategy: BayesianStrategy::from_parts_unchecked(grid.clone(), y.clone()),
            });
            pending.next();
        }
    }

    Ok(Trajectory {
        times,
        xbar: xbars,
        snapshots,
        clamped,
        final_state: Some(BayesianStrategy::from_parts_unchecked(grid, y)),
    })
}

/// Homogenised smooth best response field `P(F(x̄)) − x̄`.
pub fn homogenized_field(game: &AggregateGame, dist: &TypeDistribution, xbar: f64) -> f64 {
    dist.cdf(game.eval(xbar)) - xbar
}

/// Fixed-step RK4 on the scalar homogenised dynamic.
pub fn integrate_homogenized(
    game: &AggregateGame,
    dist: &TypeDistribution,
    xbar0: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    opts.validate()?;
    check_unit(xbar0, "initial aggregate")?;
    let field = |x: f64| homogenized_field(game, dist, x.clamp(0.0, 1.0));
    let mut x = xbar0.clamp(0.0, 1.0);
    let mut t = 0.0;
    let mut times = vec![0.0];
    let mut xbars = vec![x];
    let mut clamped = 0.0;
    for t_next in opts.step_ends() {
        let h = t_next - t;
        let k1 = field(x);
        let k2 = field(x + 0.5 * h * k1);
        let k3 = field(x + 0.5 * h * k2);
        let k4 = field(x + h * k3);
        let next = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t = t_next;
        if !next.is_finite() {
            return Err(Error::Integration {
                time: t,
                message: "non-finite aggregate state".into(),
            });
        }
        let bounded = next.clamp(0.0, 1.0);
        clamped += (next - bounded).abs();
        x = bounded;
        times.push(t);
        xbars.push(x);
    }
    Ok(Trajectory {
        times,
        xbar: xbars,
        snapshots: Vec::new(),
        clamped,
        final_state: None,
    })
}

//! Aggregate equilibria `x̄ = P(F(x̄))`, their stability under the
//! homogenised best response dynamic, and cut-off Bayesian equilibria.

use std::sync::Arc;

use serde::Serialize;

use crate::composition::{sorted_composition, BayesianStrategy, TypeGrid};
use crate::dynamics::homogenized_field;
use crate::error::{input, Result};
use crate::game::{check_unit, AggregateGame, TypeDistribution};
use crate::numeric::bisect;

pub const DEFAULT_SCAN_RESOLUTION: f64 = 1e-4;

/// Values of `|P(F(x̄)) − x̄|` at or below this count as zero during the scan.
const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    Semistable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equilibrium {
    pub xbar: f64,
    pub stability: Stability,
    /// Basin under the homogenised dynamic. Endpoints that are themselves
    /// equilibria do not belong to the basin.
    pub basin_lo: f64,
    pub basin_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub equilibria: Vec<Equilibrium>,
}

impl EquilibriumReport {
    pub fn stable(&self) -> impl Iterator<Item = &Equilibrium> {
        self.equilibria
            .iter()
            .filter(|e| e.stability == Stability::Stable)
    }

    /// The reported equilibrium closest to `xbar`, if within `tol`.
    pub fn nearest(&self, xbar: f64, tol: f64) -> Option<&Equilibrium> {
        self.equilibria
            .iter()
            .filter(|e| (e.xbar - xbar).abs() <= tol)
            .min_by(|a, b| (a.xbar - xbar).abs().total_cmp(&(b.xbar - xbar).abs()))
    }
}

fn sign(v: f64) -> i8 {
    if v > ZERO_TOL {
        1
    } else if v < -ZERO_TOL {
        -1
    } else {
        0
    }
}

fn classify(left: Option<i8>, right: Option<i8>) -> Stability {
    match (left, right) {
        (Some(1), Some(-1)) | (None, Some(-1)) | (Some(1), None) => Stability::Stable,
        (Some(-1), Some(1)) | (None, Some(1)) | (Some(-1), None) => Stability::Unstable,
        _ => Stability::Semistable,
    }
}

/// Sign scan of `g(x̄) = P(F(x̄)) − x̄` on `[0,1]` followed by bisection of
/// every sign change down to the last representable bracket.
pub fn find_aggregate_equilibria(
    game: &AggregateGame,
    dist: &TypeDistribution,
    scan_resolution: f64,
) -> Result<EquilibriumReport> {
    if !(scan_resolution.is_finite() && scan_resolution > 0.0 && scan_resolution <= 0.5) {
        return input(format!(
            "scan resolution must lie in (0, 0.5], got {scan_resolution}"
        ));
    }
    let g = |x: f64| homogenized_field(game, dist, x);
    let count = (1.0 / scan_resolution).ceil() as usize;
    let xs: Vec<f64> = (0..=count).map(|k| k as f64 / count as f64).collect();
    let gs: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let ss: Vec<i8> = gs.iter().map(|&v| sign(v)).collect();

    // (location, sign just left, sign just right)
    let mut roots: Vec<(f64, Option<i8>, Option<i8>)> = Vec::new();
    let mut i = 0;
    while i <= count {
        if ss[i] == 0 {
            let mut end = i;
            while end < count && ss[end + 1] == 0 {
                end += 1;
            }
            let left = i.checked_sub(1).map(|k| ss[k]);
            let right = (end < count).then(|| ss[end + 1]);
            let at = match (left, right) {
                (Some(l), Some(r)) if l != r => bisect(g, xs[i - 1], xs[end + 1], 0.0),
                _ => (i..=end)
                    .min_by(|&a, &b| gs[a].abs().total_cmp(&gs[b].abs()))
                    .map(|k| xs[k])
                    .unwrap_or(xs[i]),
            };
            roots.push((at, left, right));
            i = end + 1;
            continue;
        }
        if i < count && ss[i + 1] != 0 && ss[i] != ss[i + 1] {
            let at = bisect(g, xs[i], xs[i + 1], 0.0);
            roots.push((at, Some(ss[i]), Some(ss[i + 1])));
        }
        i += 1;
    }

    let locations: Vec<f64> = roots.iter().map(|r| r.0).collect();
    let equilibria = roots
        .iter()
        .enumerate()
        .map(|(k, &(xbar, left, right))| {
            let prev = if k > 0 { locations[k - 1] } else { 0.0 };
            let next = locations.get(k + 1).copied().unwrap_or(1.0);
            let stability = classify(left, right);
            let (basin_lo, basin_hi) = match stability {
                Stability::Stable => (prev, next),
                Stability::Unstable => (xbar, xbar),
                Stability::Semistable => match (left, right) {
                    (Some(1), _) => (prev, xbar),
                    (_, Some(-1)) => (xbar, next),
                    _ => (xbar, xbar),
                },
            };
            Equilibrium {
                xbar,
                stability,
                basin_lo,
                basin_hi,
            }
        })
        .collect();
    Ok(EquilibriumReport { equilibria })
}

/// `true` when `|P(F(x̄)) − x̄| ≤ tol`.
pub fn is_aggregate_equilibrium(
    game: &AggregateGame,
    dist: &TypeDistribution,
    xbar: f64,
    tol: f64,
) -> bool {
    (0.0..=1.0).contains(&xbar) && homogenized_field(game, dist, xbar).abs() <= tol
}

/// Cut-off Bayesian equilibrium behind an aggregate equilibrium.
pub fn bayesian_equilibrium(
    game: &AggregateGame,
    dist: &TypeDistribution,
    grid: &Arc<TypeGrid>,
    xbar_star: f64,
) -> Result<BayesianStrategy> {
    check_unit(xbar_star, "aggregate equilibrium")?;
    if !is_aggregate_equilibrium(game, dist, xbar_star, 1e-6) {
        return input(format!(
            "{xbar_star} is not an aggregate equilibrium (P(F(x̄)) − x̄ = {})",
            homogenized_field(game, dist, xbar_star)
        ));
    }
    sorted_composition(grid, xbar_star)
}

/// Cut-off type `P⁻¹(x̄)` of the sorted composition with aggregate `x̄`.
pub fn cutoff_type(dist: &TypeDistribution, xbar: f64) -> f64 {
    dist.inv_cdf(xbar)
}

//! Discretised Bayesian strategies on an equiprobable type grid, plus the
//! canonical compositions: perfectly sorted, reversed, detailed-balanced,
//! seeded random and the two local perturbations of an aggregate equilibrium.
//!
//! # Balanced band construction
//!
//! Let `θ* = F(x̄*)` for an aggregate equilibrium `x̄*`. A composition keeps
//! the aggregate pinned at `x̄*` iff the deficit distributions of the inflow
//! and outflow sources coincide, which for densities reads
//! `x_O(θ* − π)·p(θ* − π) = x_I(θ* + π)·p(θ* + π)` for all `π > 0`.
//! Starting from the sorted equilibrium, [`balanced_composition`] removes a
//! constant share `κ` of participants at every type `θ* − π` with
//! `0 < π ≤ π_max` and adds `κ·p(θ* − π)/p(θ* + π)` participants at the
//! mirrored type `θ* + π`. Both sides then carry density `κ·p(θ* − π)` at
//! deficit `π`, so the identity holds and the removed and added masses are
//! equal, which leaves the aggregate unchanged.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::dynamics::RevisionProtocol;
use crate::error::{input, Error, Result};
use crate::game::{check_unit, AggregateGame, TypeDistribution};
use crate::numeric::neumaier_sum;

/// Equiprobable discretisation of a type distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl TypeGrid {
    /// Nodes at the quantiles `P⁻¹((i − ½)/n)`, each carrying mass `1/n`.
    pub fn equiprobable(dist: &TypeDistribution, n: usize) -> Result<Self> {
        if n < 2 {
            return input(format!("type grid needs at least 2 nodes, got {n}"));
        }
        let nf = n as f64;
        let nodes = (0..n)
            .map(|i| dist.inv_cdf((i as f64 + 0.5) / nf))
            .collect();
        Ok(Self {
            nodes,
            weights: vec![1.0 / nf; n],
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of nodes with `θ_i ≤ theta`.
    pub fn count_at_or_below(&self, theta: f64) -> usize {
        self.nodes.partition_point(|&t| t <= theta)
    }
}

/// Builds the equiprobable grid with `n` nodes.
pub fn make_grid(dist: &TypeDistribution, n: usize) -> Result<Arc<TypeGrid>> {
    TypeGrid::equiprobable(dist, n).map(Arc::new)
}

/// Participation rate `x_i ∈ [0,1]` at every node of a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesianStrategy {
    grid: Arc<TypeGrid>,
    values: Vec<f64>,
}

impl BayesianStrategy {
    pub fn new(grid: Arc<TypeGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return input(format!(
                "strategy has {} values for a grid of {} nodes",
                values.len(),
                grid.len()
            ));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return input(format!("participation rate {v} at node {i} outside [0,1]"));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Arc<TypeGrid>, value: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![value; n])
    }

    pub(crate) fn from_parts_unchecked(grid: Arc<TypeGrid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<TypeGrid> {
        &self.grid
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `x̄ = Σ w_i x_i`.
    pub fn aggregate(&self) -> f64 {
        aggregate_values(&self.grid, &self.values)
    }
}

pub(crate) fn aggregate_values(grid: &TypeGrid, values: &[f64]) -> f64 {
    // Equal weights: sum first, divide once, so permutations of the same
    // values give bit-identical aggregates.
    neumaier_sum(values.iter().copied()) / grid.len() as f64
}

/// `x̄ = Σ w_i x_i`.
pub fn aggregate(x: &BayesianStrategy) -> f64 {
    x.aggregate()
}

/// Full participation on `⌊x̄n⌋` nodes taken in `order`, plus a fractional
/// node so the aggregate is exactly `x̄`.
fn fill(
    grid: &Arc<TypeGrid>,
    xbar: f64,
    order: impl Iterator<Item = usize>,
) -> Result<BayesianStrategy> {
    check_unit(xbar, "aggregate strategy")?;
    let n = grid.len();
    let total = (xbar.clamp(0.0, 1.0) * n as f64).min(n as f64);
    let full = total.floor() as usize;
    let frac = total - full as f64;
    let mut values = vec![0.0; n];
    for (rank, i) in order.enumerate() {
        if rank < full {
            values[i] = 1.0;
        } else if rank == full {
            values[i] = frac;
        } else {
            break;
        }
    }
    Ok(BayesianStrategy::from_parts_unchecked(grid.clone(), values))
}

/// Perfectly sorted strategy: the lowest types participate.
pub fn sorted_composition(grid: &Arc<TypeGrid>, xbar: f64) -> Result<BayesianStrategy> {
    fill(grid, xbar, 0..grid.len())
}

/// Reversed strategy: the highest types participate.
pub fn reversed_composition(grid: &Arc<TypeGrid>, xbar: f64) -> Result<BayesianStrategy> {
    fill(grid, xbar, (0..grid.len()).rev())
}

/// Threshold type of the reversed composition, `P⁻¹(1 − x̄)`.
pub fn reversed_threshold(dist: &TypeDistribution, xbar: f64) -> f64 {
    dist.inv_cdf(1.0 - xbar)
}

/// Detailed-balanced band composition around the equilibrium cut-off
/// `θ* = F(x̄*)`; see the module docs.
pub fn balanced_composition(
    grid: &Arc<TypeGrid>,
    dist: &TypeDistribution,
    game: &AggregateGame,
    xbar_star: f64,
    kappa: f64,
    pimax: f64,
) -> Result<BayesianStrategy> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::Construction(format!(
            "kappa must lie in [0,1], got {kappa}"
        )));
    }
    if !(pimax.is_finite() && pimax > 0.0) {
        return Err(Error::Construction(format!(
            "pimax must be positive, got {pimax}"
        )));
    }
    let theta_star = game.payoff(xbar_star)?;
    let (lo, hi) = dist.support();
    if theta_star - pimax < lo {
        return Err(Error::Construction(format!(
            "lower band edge θ* − pimax = {} below support bottom {lo}",
            theta_star - pimax
        )));
    }
    if theta_star + pimax > hi {
        return Err(Error::Construction(format!(
            "upper band edge θ* + pimax = {} above support top {hi}",
            theta_star + pimax
        )));
    }

    let mut x = sorted_composition(grid, xbar_star)?.into_values();
    for (i, &theta) in grid.nodes().iter().enumerate() {
        let deficit = (theta - theta_star).abs();
        if deficit == 0.0 || deficit > pimax {
            continue;
        }
        if theta < theta_star {
            x[i] = 1.0 - kappa;
        } else {
            let mirrored = dist.pdf(theta_star - deficit) / dist.pdf(theta);
            let value = kappa * mirrored;
            if value > 1.0 {
                return Err(Error::Construction(format!(
                    "kappa·p(θ*−π)/p(θ*+π) = {value} exceeds 1 at π = {deficit}"
                )));
            }
            x[i] = value;
        }
    }
    Ok(BayesianStrategy::from_parts_unchecked(grid.clone(), x))
}

/// Local perturbations of an equilibrium composition that push the
/// aggregate up while the aggregate velocity turns positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    /// `(1 − ε)x*(θ) + ε` below `θ*`; needs `x*` to leave a positive mass
    /// of low types out (a balanced, non-sorted equilibrium composition).
    Uplift,
    /// Add density `ε/p` on `[θ* + e, θ* + 2e)` and remove `w·ε/p` on
    /// `[θ* − 4e, θ* − 3e)`; meant for the sorted Bayesian equilibrium.
    Bands { width: f64, mass_ratio: f64 },
}

/// Smallest admissible mass ratio `∫_e^{2e}Q / ∫_{3e}^{4e}Q` for
/// [`Perturbation::Bands`]; any `w` strictly between it and 1 works.
pub fn admissible_mass_ratio(protocol: &RevisionProtocol, width: f64) -> f64 {
    let near = protocol.rate_integral(width, 2.0 * width);
    let far = protocol.rate_integral(3.0 * width, 4.0 * width);
    if far > 0.0 {
        near / far
    } else {
        f64::INFINITY
    }
}

/// Applies a local perturbation to an aggregate-equilibrium composition.
pub fn perturb_equilibrium(
    xstar: &BayesianStrategy,
    game: &AggregateGame,
    dist: &TypeDistribution,
    protocol: &RevisionProtocol,
    kind: Perturbation,
    eps: f64,
) -> Result<BayesianStrategy> {
    if !(eps.is_finite() && eps >= 0.0) {
        return input(format!(
            "perturbation magnitude must be non-negative, got {eps}"
        ));
    }
    let theta_star = game.payoff(xstar.aggregate())?;
    let (lo, hi) = dist.support();
    if !(theta_star > lo && theta_star < hi) {
        return Err(Error::Construction(format!(
            "cut-off θ* = {theta_star} is not interior to the support [{lo}, {hi}]"
        )));
    }
    let grid = xstar.grid();
    let mut x = xstar.values().to_vec();
    match kind {
        Perturbation::Uplift => {
            let outside: f64 = grid
                .nodes()
                .iter()
                .zip(grid.weights())
                .zip(&x)
                .filter(|((&t, _), _)| t < theta_star)
                .map(|((_, &w), &v)| w * (1.0 - v))
                .sum();
            if outside <= 0.0 {
                return Err(Error::Construction(
                    "uplift needs non-participants below θ*; the input is a sorted equilibrium"
                        .into(),
                ));
            }
            for (v, &t) in x.iter_mut().zip(grid.nodes()) {
                if t < theta_star {
                    *v = (1.0 - eps) * *v + eps;
                }
            }
        }
        Perturbation::Bands { width, mass_ratio } => {
            if !(width.is_finite() && width > 0.0) {
                return input(format!("band width must be positive, got {width}"));
            }
            if theta_star - 4.0 * width < lo || theta_star + 2.0 * width > hi {
                return Err(Error::Construction(format!(
                    "bands [θ*−4e, θ*−3e) and [θ*+e, θ*+2e) leave the support [{lo}, {hi}] for e = {width}"
                )));
            }
            let w_min = admissible_mass_ratio(protocol, width);
            if !(mass_ratio > w_min && mass_ratio < 1.0) {
                return Err(Error::Construction(format!(
                    "mass ratio {mass_ratio} outside the admissible range ({w_min}, 1)"
                )));
            }
            let up = (theta_star + width, theta_star + 2.0 * width);
            let down = (theta_star - 4.0 * width, theta_star - 3.0 * width);
            for (i, &t) in grid.nodes().iter().enumerate() {
                if t >= up.0 && t < up.1 {
                    x[i] += eps / dist.pdf(t);
                } else if t >= down.0 && t < down.1 {
                    x[i] -= mass_ratio * eps / dist.pdf(t);
                }
            }
        }
    }
    if let Some((i, v)) = x
        .iter()
        .enumerate()
        .find(|(_, v)| !(0.0..=1.0).contains(*v))
    {
        return Err(Error::Construction(format!(
            "perturbed value {v} at node {i} leaves [0,1]; reduce eps"
        )));
    }
    Ok(BayesianStrategy::from_parts_unchecked(grid.clone(), x))
}

/// Seeded random composition with aggregate `x̄` (up to rounding).
pub fn random_composition<R: Rng + ?Sized>(
    grid: &Arc<TypeGrid>,
    xbar: f64,
    rng: &mut R,
) -> Result<BayesianStrategy> {
    check_unit(xbar, "aggregate strategy")?;
    let xbar = xbar.clamp(0.0, 1.0);
    let n = grid.len();
    let shape: f64 = rng.random_range(0.25..4.0);
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>().powf(shape)).collect();
    let mean = neumaier_sum(raw.iter().copied()) / n as f64;
    let values = if mean >= xbar {
        let scale = if mean > 0.0 { xbar / mean } else { 0.0 };
        raw.iter().map(|r| (r * scale).clamp(0.0, 1.0)).collect()
    } else {
        let scale = (1.0 - xbar) / (1.0 - mean);
        raw.iter()
            .map(|r| (1.0 - (1.0 - r) * scale).clamp(0.0, 1.0))
            .collect()
    };
    Ok(BayesianStrategy::from_parts_unchecked(grid.clone(), values))
}

/// Piecewise-constant interpolation of `(θ, x)` rows onto the grid: each
/// node takes the value of the last row with `θ_row ≤ θ_i`, or the first
/// row's value below the first breakpoint.
pub fn custom_composition(grid: &Arc<TypeGrid>, rows: &[(f64, f64)]) -> Result<BayesianStrategy> {
    if rows.is_empty() {
        return input("custom composition needs at least one (theta, x) row");
    }
    let mut rows = rows.to_vec();
    if let Some((t, v)) = rows
        .iter()
        .find(|(t, v)| !t.is_finite() || !(0.0..=1.0).contains(v))
    {
        return input(format!(
            "custom composition row ({t}, {v}) invalid: x must lie in [0,1]"
        ));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let values = grid
        .nodes()
        .iter()
        .map(|&theta| {
            let k = rows.partition_point(|r| r.0 <= theta);
            rows[k.saturating_sub(1)].1
        })
        .collect();
    Ok(BayesianStrategy::from_parts_unchecked(grid.clone(), values))
}

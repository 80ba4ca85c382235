//! Distributional critical masses, distributional basins, robustness
//! thresholds under bounded tempering, and equilibrium selection.
//!
//! A point `x̄†` is a critical mass to decrease when every composition with
//! that aggregate has a negative aggregate velocity. The sufficient test
//! compares the switching rate of the cut-off type `P⁻¹(x̄†)`, which is the
//! slowest leaver in the perfectly sorted composition, with the fastest
//! possible joiner. All supported protocols are nondecreasing in the
//! deficit, so the fastest joiner is the lowest type.

use serde::Serialize;

use crate::dynamics::RevisionProtocol;
use crate::equilibria::{EquilibriumReport, Stability};
use crate::error::{input, Error, Result};
use crate::game::{check_unit, Action, AggregateGame, TypeDistribution};
use crate::numeric::sampled_max;

pub const DEFAULT_CRITICAL_MASS_RESOLUTION: f64 = 1e-3;
pub const THRESHOLD_RESOLUTION: f64 = 1e-4;
/// Number of sample types used to cross-check the closed-form supremum.
const SCAN_TYPES: usize = 1000;
const TIE_TOL: f64 = 1e-12;
/// Condition (a) must hold with this margin; smaller deficits are rounding
/// noise at an equilibrium.
const DEFICIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Decrease,
    Increase,
}

/// Which clause of the sufficient condition certified the point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Condition (a) fails: the cut-off type best-responds the wrong way.
    NotApplicable,
    /// `x̄ = 1` (decrease) or `x̄ = 0` (increase).
    DomainEdge,
    /// Nobody prefers the other action: `P(F(x̄)) = 0` (decrease) or `= 1` (increase).
    Clamped,
    /// Rate comparison between the cut-off type and the extreme type.
    RateComparison,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalMassCertificate {
    pub xbar: f64,
    pub direction: Direction,
    pub certified: bool,
    pub branch: Branch,
    /// `P⁻¹(x̄) − F(x̄)`.
    pub cutoff_deficit: f64,
    /// Rate of the cut-off type toward its best response.
    pub cutoff_rate: f64,
    /// Closed-form supremum of opposing rates (at the extreme type).
    pub sup_rate: f64,
    /// The same supremum from a scan of sample types.
    pub sup_rate_scan: f64,
}

fn cert(
    xbar: f64,
    direction: Direction,
    branch: Branch,
    cutoff_deficit: f64,
    cutoff_rate: f64,
    sup_rate: f64,
    sup_rate_scan: f64,
) -> CriticalMassCertificate {
    let certified = match branch {
        Branch::NotApplicable => false,
        Branch::DomainEdge | Branch::Clamped => true,
        Branch::RateComparison => cutoff_rate >= sup_rate,
    };
    CriticalMassCertificate {
        xbar,
        direction,
        certified,
        branch,
        cutoff_deficit,
        cutoff_rate,
        sup_rate,
        sup_rate_scan,
    }
}

fn scan_sup(lo: f64, hi: f64, rate: impl Fn(f64) -> f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    (0..SCAN_TYPES)
        .map(|i| lo + (hi - lo) * i as f64 / SCAN_TYPES as f64)
        .map(rate)
        .fold(0.0, f64::max)
}

/// Sufficient test that every composition with aggregate `xbar` moves down.
pub fn is_critical_mass_decrease(
    game: &AggregateGame,
    dist: &TypeDistribution,
    protocol: &RevisionProtocol,
    xbar: f64,
) -> Result<CriticalMassCertificate> {
    check_unit(xbar, "aggregate")?;
    if xbar <= 0.0 {
        return input("a critical mass to decrease must be positive");
    }
    let f = game.eval(xbar);
    let cutoff = dist.inv_cdf(xbar);
    let deficit = cutoff - f;
    let cutoff_rate = protocol.rate(deficit);
    let lo = dist.lower();
    // Types in [θ_min, F) currently playing O would join.
    let sup = if f > lo { protocol.rate(f - lo) } else { 0.0 };
    let scan = scan_sup(lo, f.min(dist.upper()), |t| protocol.rate(f - t));
    let branch = if deficit <= DEFICIT_TOL {
        Branch::NotApplicable
    } else if xbar >= 1.0 {
        Branch::DomainEdge
    } else if dist.cdf(f) <= 0.0 {
        Branch::Clamped
    } else {
        Branch::RateComparison
    };
    Ok(cert(
        xbar,
        Direction::Decrease,
        branch,
        deficit,
        cutoff_rate,
        sup,
        scan,
    ))
}

/// Mirror image of [`is_critical_mass_decrease`].
pub fn is_critical_mass_increase(
    game: &AggregateGame,
    dist: &TypeDistribution,
    protocol: &RevisionProtocol,
    xbar: f64,
) -> Result<CriticalMassCertificate> {
    check_unit(xbar, "aggregate")?;
    if xbar >= 1.0 {
        return input("a critical mass to increase must be below 1");
    }
    let f = game.eval(xbar);
    let cutoff = dist.inv_cdf(xbar);
    let deficit = cutoff - f;
    let cutoff_rate = protocol.rate(-deficit);
    let hi = dist.upper();
    let sup = if f < hi { protocol.rate(hi - f) } else { 0.0 };
    // Sampled downward from θ_max so the extreme type is included.
    let scan = scan_sup(0.0, hi - f.max(dist.lower()), |s| protocol.rate(hi - s - f));
    let branch = if deficit >= -DEFICIT_TOL {
        Branch::NotApplicable
    } else if xbar <= 0.0 {
        Branch::DomainEdge
    } else if dist.cdf(f) >= 1.0 {
        Branch::Clamped
    } else {
        Branch::RateComparison
    };
    Ok(cert(
        xbar,
        Direction::Increase,
        branch,
        deficit,
        cutoff_rate,
        sup,
        scan,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistributionalBasin {
    pub xbar_star: f64,
    /// Critical mass to increase below `x̄*` (or `x̄*` itself at 0).
    pub lo: f64,
    /// Critical mass to decrease above `x̄*` (or `x̄*` itself at 1).
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalMassReport {
    pub resolution: f64,
    pub decrease_set: Vec<Interval>,
    pub increase_set: Vec<Interval>,
    pub basins: Vec<DistributionalBasin>,
}

/// Refines the switch between a member `a` and a non-member `b`.
fn refine(member: impl Fn(f64) -> bool, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..60 {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        if member(mid) {
            a = mid;
        } else {
            b = mid;
        }
    }
    a
}

fn collect_intervals(xs: &[f64], hits: &[bool], member: impl Fn(f64) -> bool) -> Vec<Interval> {
    let mut out = Vec::new();
    let mut k = 0;
    while k < xs.len() {
        if !hits[k] {
            k += 1;
            continue;
        }
        let start = k;
        while k + 1 < xs.len() && hits[k + 1] {
            k += 1;
        }
        let lo = if start > 0 {
            refine(&member, xs[start], xs[start - 1])
        } else {
            xs[start]
        };
        let hi = if k + 1 < xs.len() {
            refine(&member, xs[k], xs[k + 1])
        } else {
            xs[k]
        };
        out.push(Interval { lo, hi });
        k += 1;
    }
    out
}

/// Scans both certificates on a grid of aggregates, merges positive runs
/// into intervals (endpoints refined by bisection), and reports the
/// distributional basin of each stable equilibrium when one exists.
pub fn critical_mass_sets(
    game: &AggregateGame,
    dist: &TypeDistribution,
    protocol: &RevisionProtocol,
    equilibria: &EquilibriumReport,
    resolution: f64,
) -> Result<CriticalMassReport> {
    if !(resolution.is_finite() && resolution > 0.0 && resolution <= 0.5) {
        return input(format!("resolution must lie in (0, 0.5], got {resolution}"));
    }
    let count = (1.0 / resolution).ceil() as usize;
    let xs: Vec<f64> = (0..=count).map(|k| k as f64 / count as f64).collect();
    let dec = |x: f64| {
        x > 0.0 && is_critical_mass_decrease(game, dist, protocol, x).is_ok_and(|c| c.certified)
    };
    let inc = |x: f64| {
        x < 1.0 && is_critical_mass_increase(game, dist, protocol, x).is_ok_and(|c| c.certified)
    };
    let dec_hits: Vec<bool> = xs.iter().map(|&x| dec(x)).collect();
    let inc_hits: Vec<bool> = xs.iter().map(|&x| inc(x)).collect();
    let decrease_set = collect_intervals(&xs, &dec_hits, dec);
    let increase_set = collect_intervals(&xs, &inc_hits, inc);

    let eqs = &equilibria.equilibria;
    let mut basins = Vec::new();
    for (k, e) in eqs.iter().enumerate() {
        if e.stability != Stability::Stable {
            continue;
        }
        let prev = k.checked_sub(1).map(|j| eqs[j].xbar);
        let next = eqs.get(k + 1).map(|n| n.xbar);
        let lo = if e.xbar <= 0.0 {
            Some(0.0)
        } else {
            increase_set
                .iter()
                .filter(|iv| iv.hi < e.xbar && prev.is_none_or(|p| iv.lo > p))
                .map(|iv| iv.lo)
                .reduce(f64::min)
        };
        let hi = if e.xbar >= 1.0 {
            Some(1.0)
        } else {
            decrease_set
                .iter()
                .filter(|iv| iv.lo > e.xbar && next.is_none_or(|n| iv.hi < n))
                .map(|iv| iv.hi)
                .reduce(f64::max)
        };
        if let (Some(lo), Some(hi)) = (lo, hi) {
            basins.push(DistributionalBasin {
                xbar_star: e.xbar,
                lo,
                hi,
            });
        }
    }
    Ok(CriticalMassReport {
        resolution,
        decrease_set,
        increase_set,
        basins,
    })
}

/// One point of the cut-off deficit curve `P⁻¹(x̄) − F(x̄)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeficitPoint {
    pub xbar: f64,
    pub deficit: f64,
}

pub fn cutoff_deficit(game: &AggregateGame, dist: &TypeDistribution, xbar: f64) -> f64 {
    dist.inv_cdf(xbar) - game.eval(xbar)
}

pub fn cutoff_deficit_curve(
    game: &AggregateGame,
    dist: &TypeDistribution,
    resolution: f64,
) -> Result<Vec<DeficitPoint>> {
    if !(resolution.is_finite() && resolution > 0.0 && resolution <= 0.5) {
        return input(format!("resolution must lie in (0, 0.5], got {resolution}"));
    }
    let count = (1.0 / resolution).ceil() as usize;
    Ok((0..=count)
        .map(|k| {
            let xbar = k as f64 / count as f64;
            DeficitPoint {
                xbar,
                deficit: cutoff_deficit(game, dist, xbar),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SideThreshold {
    pub value: f64,
    pub at: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobustnessThreshold {
    pub xbar_star: f64,
    /// Greatest deficit of `O` over the basin part below `x̄*`.
    pub left: Option<SideThreshold>,
    /// Greatest deficit of `I` over the basin part above `x̄*`.
    pub right: Option<SideThreshold>,
    pub overall: f64,
}

/// Largest payoff deficit of the action pushing back toward `x̄*` that the
/// cut-off type faces within the basin. A bounded tempering saturating at
/// `π♯` no greater than this keeps the equilibrium distributionally stable.
pub fn robustness_threshold(
    game: &AggregateGame,
    dist: &TypeDistribution,
    xbar_star: f64,
    report: &EquilibriumReport,
) -> Result<RobustnessThreshold> {
    let e = report.nearest(xbar_star, 1e-6).ok_or_else(|| {
        Error::Input(format!(
            "{xbar_star} is not a reported aggregate equilibrium"
        ))
    })?;
    if e.stability != Stability::Stable {
        return input(format!("aggregate equilibrium {} is not stable", e.xbar));
    }
    let x = e.xbar;
    let left = (e.basin_lo < x).then(|| {
        let (at, value) = sampled_max(
            |y| (-cutoff_deficit(game, dist, y)).max(0.0),
            e.basin_lo,
            x,
            THRESHOLD_RESOLUTION,
        );
        SideThreshold { value, at }
    });
    let right = (e.basin_hi > x).then(|| {
        let (at, value) = sampled_max(
            |y| cutoff_deficit(game, dist, y).max(0.0),
            x,
            e.basin_hi,
            THRESHOLD_RESOLUTION,
        );
        SideThreshold { value, at }
    });
    let overall = match (left, right) {
        (Some(l), Some(r)) => l.value.min(r.value),
        (Some(s), None) | (None, Some(s)) => s.value,
        (None, None) => 0.0,
    };
    Ok(RobustnessThreshold {
        xbar_star: x,
        left,
        right,
        overall,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessReport {
    pub thresholds: Vec<RobustnessThreshold>,
    /// The unique most robust equilibrium; `None` on a tie.
    pub selected: Option<f64>,
    /// Equilibria sharing the greatest threshold when there is a tie.
    pub tied: Vec<f64>,
}

impl RobustnessReport {
    /// Stable equilibria that remain distributionally stable under bounded
    /// tempering saturating at `pisharp`.
    pub fn robust_at(&self, pisharp: f64) -> Vec<f64> {
        self.thresholds
            .iter()
            .filter(|t| t.overall >= pisharp)
            .map(|t| t.xbar_star)
            .collect()
    }
}

pub fn select_most_robust(
    game: &AggregateGame,
    dist: &TypeDistribution,
    report: &EquilibriumReport,
) -> Result<RobustnessReport> {
    let thresholds = report
        .stable()
        .map(|e| robustness_threshold(game, dist, e.xbar, report))
        .collect::<Result<Vec<_>>>()?;
    let best = thresholds
        .iter()
        .map(|t| t.overall)
        .reduce(f64::max)
        .ok_or_else(|| Error::Analysis("no stable aggregate equilibrium".into()))?;
    let top: Vec<f64> = thresholds
        .iter()
        .filter(|t| t.overall >= best - TIE_TOL)
        .map(|t| t.xbar_star)
        .collect();
    let (selected, tied) = if top.len() == 1 {
        (Some(top[0]), Vec::new())
    } else {
        (None, top)
    };
    Ok(RobustnessReport {
        thresholds,
        selected,
        tied,
    })
}

/// Risk-dominant action of the linear coordination game with cost `c`.
pub fn risk_dominant_action(cost: f64) -> Result<Action> {
    if !(cost.is_finite() && cost > 0.0 && cost < 1.0) {
        return input(format!("cost must lie in (0, 1), got {cost}"));
    }
    if cost == 0.5 {
        return Err(Error::Tie(
            "neither action is risk dominant at c = 1/2".into(),
        ));
    }
    Ok(if cost < 0.5 { Action::I } else { Action::O })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::{find_aggregate_equilibria, DEFAULT_SCAN_RESOLUTION};
    use crate::game::LOGISTIC_DEFAULT_TAU;

    fn ex1() -> (AggregateGame, TypeDistribution) {
        (AggregateGame::canonical(), TypeDistribution::sqrt_shift())
    }

    fn cubic() -> RevisionProtocol {
        RevisionProtocol::power(3.0).unwrap()
    }

    fn critical_root() -> f64 {
        (2.9 - 8.01f64.sqrt()) / 2.0
    }

    #[test]
    fn decrease_examples() {
        let (g, d) = ex1();
        let c = is_critical_mass_decrease(&g, &d, &cubic(), 0.02).unwrap();
        assert!(c.certified);
        assert_eq!(c.branch, Branch::Clamped);

        let c = is_critical_mass_decrease(&g, &d, &cubic(), 0.03).unwrap();
        assert!(c.certified);
        assert_eq!(c.branch, Branch::RateComparison);
        // (P⁻¹ − F)³ against F³ by direct substitution.
        let f = (49.0 * 0.03 - 1.0) / 20.0;
        let cut = 1.03f64.powi(2) - 1.0;
        assert!((c.cutoff_rate - (cut - f).powi(3)).abs() < 1e-15);
        assert!((c.sup_rate - f.powi(3)).abs() < 1e-15);
        assert!(c.sup_rate_scan <= c.sup_rate);
        assert!((c.sup_rate_scan - c.sup_rate).abs() < 1e-4);

        let c = is_critical_mass_decrease(&g, &d, &RevisionProtocol::Standard, 0.15).unwrap();
        assert!(c.certified);
        assert_eq!(c.cutoff_rate, c.sup_rate);

        assert!(
            !is_critical_mass_decrease(&g, &d, &cubic(), 0.1)
                .unwrap()
                .certified
        );
        assert!(is_critical_mass_decrease(&g, &d, &cubic(), 0.0).is_err());
    }

    #[test]
    fn increase_examples() {
        let (g, d) = ex1();
        let c = is_critical_mass_increase(&g, &d, &cubic(), 0.225).unwrap();
        assert!(!c.certified);
        assert!((c.cutoff_deficit + 1.0 / 1600.0).abs() < 1e-12);
        assert!((c.sup_rate - (3.0 - g.eval(0.225)).powi(3)).abs() < 1e-12);

        let c = is_critical_mass_increase(&g, &d, &RevisionProtocol::Standard, 0.225).unwrap();
        assert!(c.certified);

        let c = is_critical_mass_increase(&g, &d, &cubic(), 0.0).unwrap();
        assert!(!c.certified);
        assert_eq!(c.branch, Branch::NotApplicable);
    }

    #[test]
    fn decrease_set_under_cubic() {
        let (g, d) = ex1();
        let eq = find_aggregate_equilibria(&g, &d, DEFAULT_SCAN_RESOLUTION).unwrap();
        let r =
            critical_mass_sets(&g, &d, &cubic(), &eq, DEFAULT_CRITICAL_MASS_RESOLUTION).unwrap();
        // Besides the trivial point x̄ = 1, only the low interval.
        assert_eq!(r.decrease_set.len(), 2, "{:?}", r.decrease_set);
        assert_eq!((r.decrease_set[1].lo, r.decrease_set[1].hi), (1.0, 1.0));
        let iv = r.decrease_set[0];
        assert!(iv.lo <= 1e-3);
        assert!((iv.hi - critical_root()).abs() < 1e-9, "{}", iv.hi);
        assert!(r.increase_set.is_empty());
        assert_eq!(r.basins.len(), 1);
        assert_eq!(r.basins[0].xbar_star, 0.0);
        assert!((r.basins[0].hi - critical_root()).abs() < 1e-9);
    }

    #[test]
    fn condition_a_is_necessary() {
        let (g, d) = ex1();
        let eq = find_aggregate_equilibria(&g, &d, DEFAULT_SCAN_RESOLUTION).unwrap();
        for p in [RevisionProtocol::Standard, cubic()] {
            let r = critical_mass_sets(&g, &d, &p, &eq, DEFAULT_CRITICAL_MASS_RESOLUTION).unwrap();
            for iv in &r.decrease_set {
                for k in 0..=100 {
                    let x = iv.lo + (iv.hi - iv.lo) * k as f64 / 100.0;
                    assert!(cutoff_deficit(&g, &d, x) > 0.0);
                }
            }
            for b in &r.basins {
                let inside = eq
                    .equilibria
                    .iter()
                    .filter(|e| b.lo <= e.xbar && e.xbar <= b.hi)
                    .count();
                assert_eq!(inside, 1);
            }
        }
    }

    #[test]
    fn standard_sets_follow_deficit_sign() {
        let (g, d) = ex1();
        let eq = find_aggregate_equilibria(&g, &d, DEFAULT_SCAN_RESOLUTION).unwrap();
        let r = critical_mass_sets(
            &g,
            &d,
            &RevisionProtocol::Standard,
            &eq,
            DEFAULT_CRITICAL_MASS_RESOLUTION,
        )
        .unwrap();
        assert!(r
            .decrease_set
            .iter()
            .any(|iv| iv.lo <= 1e-3 && (iv.hi - 0.2).abs() < 1e-9));
        assert!(r
            .increase_set
            .iter()
            .any(|iv| (iv.lo - 0.2).abs() < 1e-9 && (iv.hi - 0.25).abs() < 1e-9));
        assert_eq!(r.basins.len(), 2);
        assert!((r.basins[0].hi - 0.2).abs() < 1e-9);
        assert!((r.basins[1].lo - 0.2).abs() < 1e-9);
        assert_eq!(r.basins[1].hi, 1.0);
    }

    #[test]
    fn bounded_power_membership() {
        let (g, d) = ex1();
        for k in [1.0, 3.0] {
            let p = RevisionProtocol::bounded_power(k, 0.01).unwrap();
            assert!(
                is_critical_mass_decrease(&g, &d, &p, 0.05)
                    .unwrap()
                    .certified
            );
            assert!(
                !is_critical_mass_decrease(&g, &d, &p, 0.15)
                    .unwrap()
                    .certified
            );
        }
        assert!((cutoff_deficit(&g, &d, 0.05) - 0.03).abs() < 1e-12);
        assert!((cutoff_deficit(&g, &d, 0.15) - 0.005).abs() < 1e-12);
    }

    #[test]
    fn thresholds_and_selection() {
        let (g, d) = ex1();
        let eq = find_aggregate_equilibria(&g, &d, DEFAULT_SCAN_RESOLUTION).unwrap();
        let high = robustness_threshold(&g, &d, 0.25, &eq).unwrap();
        let left = high.left.unwrap();
        assert!((left.value - 1.0 / 1600.0).abs() < 1e-12);
        assert!((left.at - 0.225).abs() < 1e-6);
        assert!((high.right.unwrap().value - 0.6).abs() < 1e-12);
        assert!((high.overall - 1.0 / 1600.0).abs() < 1e-12);

        let low = robustness_threshold(&g, &d, 0.0, &eq).unwrap();
        assert!(low.left.is_none());
        assert!((low.overall - 0.05).abs() < 1e-12);

        assert!(robustness_threshold(&g, &d, 0.2, &eq).is_err());

        let sel = select_most_robust(&g, &d, &eq).unwrap();
        assert_eq!(sel.selected, Some(0.0));
        assert!(sel.tied.is_empty());
        assert_eq!(sel.robust_at(0.001), vec![0.0]);
        assert_eq!(sel.robust_at(0.0).len(), 2);
    }

    #[test]
    fn coordination_selects_high_branch() {
        let g = AggregateGame::linear_coordination(0.3).unwrap();
        let d = TypeDistribution::logistic(0.0, 0.05, LOGISTIC_DEFAULT_TAU).unwrap();
        let eq = find_aggregate_equilibria(&g, &d, DEFAULT_SCAN_RESOLUTION).unwrap();
        let sel = select_most_robust(&g, &d, &eq).unwrap();
        assert!(sel.selected.unwrap() > 0.9);
        assert_eq!(risk_dominant_action(0.3).unwrap(), Action::I);
    }

    #[test]
    fn symmetric_coordination_ties() {
        let g = AggregateGame::linear_coordination(0.5).unwrap();
        let d = TypeDistribution::logistic(0.0, 0.05, LOGISTIC_DEFAULT_TAU).unwrap();
        let eq = find_aggregate_equilibria(&g, &d, DEFAULT_SCAN_RESOLUTION).unwrap();
        let sel = select_most_robust(&g, &d, &eq).unwrap();
        assert_eq!(sel.selected, None, "{sel:?}");
        assert_eq!(sel.tied.len(), 2);
    }

    #[test]
    fn single_equilibrium_is_selected() {
        let g = AggregateGame::affine(0.0, 0.7).unwrap();
        let d = TypeDistribution::uniform(0.0, 1.0).unwrap();
        let eq = find_aggregate_equilibria(&g, &d, DEFAULT_SCAN_RESOLUTION).unwrap();
        let sel = select_most_robust(&g, &d, &eq).unwrap();
        assert!((sel.selected.unwrap() - 0.7).abs() < 1e-9);
    }

    #[test]
    fn constant_payoff_below_support() {
        let g = AggregateGame::affine(0.0, -0.5).unwrap();
        let d = TypeDistribution::uniform(0.0, 1.0).unwrap();
        let eq = find_aggregate_equilibria(&g, &d, DEFAULT_SCAN_RESOLUTION).unwrap();
        let t = robustness_threshold(&g, &d, 0.0, &eq).unwrap();
        assert!((t.overall - 1.5).abs() < 1e-12);
    }

    #[test]
    fn risk_dominance() {
        assert_eq!(risk_dominant_action(0.7).unwrap(), Action::O);
        assert!(matches!(risk_dominant_action(0.5), Err(Error::Tie(_))));
        assert!(risk_dominant_action(1.0).is_err());
    }

    #[test]
    fn deficit_curve() {
        let (g, d) = ex1();
        let c = cutoff_deficit_curve(&g, &d, 0.05).unwrap();
        assert_eq!(c.len(), 21);
        for p in &c {
            let want = (20.0 * p.xbar * p.xbar - 9.0 * p.xbar + 1.0) / 20.0;
            assert!((p.deficit - want).abs() < 1e-12);
        }
    }
}

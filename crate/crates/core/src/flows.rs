//! Distributions of switching rates and payoff deficits in the sources of
//! inflow and outflow, and the escape analysis built on them.
//!
//! The inflow source is the mass of agents who currently play `O` but
//! prefer `I`; the outflow source is the mirror. With the payoff frozen at
//! `F(x̄_ref)`, the aggregate velocity is the difference of the two first
//! moments, and the frozen-payoff solution
//! `x̄* + Σ_in m (1 − e^{−qt}) − Σ_out m (1 − e^{−qt})`
//! bounds the actual aggregate from above under a positive externality.

use std::cmp::Ordering;

use serde::Serialize;

use crate::composition::BayesianStrategy;
use crate::dynamics::{rate_in, rate_out, RevisionProtocol};
use crate::equilibria::{find_aggregate_equilibria, Stability, DEFAULT_SCAN_RESOLUTION};
use crate::error::{input, Error, Result};
use crate::game::{check_unit, AggregateGame, TypeDistribution};
use crate::numeric::neumaier_sum;
use crate::stability::is_critical_mass_decrease;

/// Strictness tolerance of the dominance comparison.
pub const SOSD_TOL: f64 = 1e-12;
pub const ESCAPE_SAMPLES: usize = 2000;
pub const ESCAPE_T_MIN: f64 = 1e-3;
const RATIO_SCAN: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomKind {
    Rates,
    Deficits,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub q: f64,
    pub m: f64,
}

/// Finite distribution with atoms sorted by value. Total mass may be
/// below one; the remainder is the mass outside the source.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwitchingRateDistribution {
    atoms: Vec<Atom>,
    kind: AtomKind,
}

impl SwitchingRateDistribution {
    pub fn new(atoms: Vec<Atom>, kind: AtomKind) -> Result<Self> {
        for a in &atoms {
            if !(a.q.is_finite() && a.m.is_finite() && a.m > 0.0) {
                return input(format!(
                    "atom ({}, {}) needs a finite value and positive mass",
                    a.q, a.m
                ));
            }
            if kind == AtomKind::Deficits && a.q < 0.0 {
                return input(format!("deficit {} is negative", a.q));
            }
        }
        let mut d = Self { atoms, kind };
        d.atoms.sort_by(|a, b| a.q.total_cmp(&b.q));
        if d.total_mass() > 1.0 + 1e-12 {
            return input(format!("total mass {} exceeds 1", d.total_mass()));
        }
        Ok(d)
    }

    pub fn empty(kind: AtomKind) -> Self {
        Self {
            atoms: Vec::new(),
            kind,
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn kind(&self) -> AtomKind {
        self.kind
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        neumaier_sum(self.atoms.iter().map(|a| a.m))
    }

    /// `Σ q_k m_k`.
    pub fn first_moment(&self) -> f64 {
        neumaier_sum(self.atoms.iter().map(|a| a.q * a.m))
    }

    /// `Σ_{q_k ≤ q} m_k`.
    pub fn cdf(&self, q: f64) -> f64 {
        let end = self.atoms.partition_point(|a| a.q <= q);
        neumaier_sum(self.atoms[..end].iter().map(|a| a.m))
    }

    /// `∫_{−∞}^{q} cdf`.
    pub fn integrated_cdf(&self, q: f64) -> f64 {
        let end = self.atoms.partition_point(|a| a.q <= q);
        neumaier_sum(self.atoms[..end].iter().map(|a| a.m * (q - a.q)))
    }

    pub fn min(&self) -> Option<f64> {
        self.atoms.first().map(|a| a.q)
    }

    pub fn max(&self) -> Option<f64> {
        self.atoms.last().map(|a| a.q)
    }
}

fn build_sources(
    game: &AggregateGame,
    x: &BayesianStrategy,
    xbar_ref: f64,
    kind: AtomKind,
    value: impl Fn(f64, f64, bool) -> f64,
) -> Result<(SwitchingRateDistribution, SwitchingRateDistribution)> {
    check_unit(xbar_ref, "reference aggregate")?;
    let payoff = game.eval(xbar_ref);
    let w = x.grid().weights();
    let mut inflow = Vec::new();
    let mut outflow = Vec::new();
    for ((&theta, &xi), &wi) in x.nodes().iter().zip(x.values()).zip(w) {
        if theta < payoff {
            let m = wi * (1.0 - xi);
            if m > 0.0 {
                inflow.push(Atom {
                    q: value(payoff, theta, true),
                    m,
                });
            }
        } else if theta > payoff {
            let m = wi * xi;
            if m > 0.0 {
                outflow.push(Atom {
                    q: value(payoff, theta, false),
                    m,
                });
            }
        }
    }
    Ok((
        SwitchingRateDistribution::new(inflow, kind)?,
        SwitchingRateDistribution::new(outflow, kind)?,
    ))
}

/// Switching-rate distributions `(Q̆^I, Q̆^O)` with the payoff frozen at
/// `F(xbar_ref)`.
pub fn flow_distributions(
    game: &AggregateGame,
    protocol: &RevisionProtocol,
    x: &BayesianStrategy,
    xbar_ref: f64,
) -> Result<(SwitchingRateDistribution, SwitchingRateDistribution)> {
    build_sources(game, x, xbar_ref, AtomKind::Rates, |f, theta, joining| {
        if joining {
            rate_in(protocol, f, theta)
        } else {
            rate_out(protocol, f, theta)
        }
    })
}

/// Payoff-deficit distributions `(Π̆^I, Π̆^O)`.
pub fn deficit_distributions(
    game: &AggregateGame,
    x: &BayesianStrategy,
    xbar_ref: f64,
) -> Result<(SwitchingRateDistribution, SwitchingRateDistribution)> {
    build_sources(game, x, xbar_ref, AtomKind::Deficits, |f, theta, _| {
        (f - theta).abs()
    })
}

pub fn aggregate_velocity_from_flows(
    inflow: &SwitchingRateDistribution,
    outflow: &SwitchingRateDistribution,
) -> f64 {
    inflow.first_moment() - outflow.first_moment()
}

/// Walks the merged atom points of two distributions in increasing order,
/// calling `visit(q, cdf_a, cdf_b, int_a, int_b)` after the atoms at `q`
/// are absorbed. Integrals are of the c.d.f.s up to `q`.
fn sweep(
    a: &SwitchingRateDistribution,
    b: &SwitchingRateDistribution,
    mut visit: impl FnMut(f64, f64, f64, f64, f64),
) {
    let (aa, bb) = (a.atoms(), b.atoms());
    let (mut i, mut j) = (0, 0);
    let (mut ca, mut cb, mut ia, mut ib) = (0.0, 0.0, 0.0, 0.0);
    let mut last: Option<f64> = None;
    while i < aa.len() || j < bb.len() {
        let q = match (aa.get(i), bb.get(j)) {
            (Some(x), Some(y)) => x.q.min(y.q),
            (Some(x), None) => x.q,
            (None, Some(y)) => y.q,
            (None, None) => unreachable!(),
        };
        if let Some(p) = last {
            ia += ca * (q - p);
            ib += cb * (q - p);
        }
        while i < aa.len() && aa[i].q == q {
            ca += aa[i].m;
            i += 1;
        }
        while j < bb.len() && bb[j].q == q {
            cb += bb[j].m;
            j += 1;
        }
        last = Some(q);
        visit(q, ca, cb, ia, ib);
    }
}

/// `sup_q |Q̆^I(q) − Q̆^O(q)|` over the merged atom points.
pub fn detailed_balance_residual(
    inflow: &SwitchingRateDistribution,
    outflow: &SwitchingRateDistribution,
) -> f64 {
    let mut worst = 0.0f64;
    sweep(inflow, outflow, |_, ci, co, _, _| {
        worst = worst.max((ci - co).abs())
    });
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Dominance {
    #[serde(rename = "O_dominates")]
    ODominates,
    #[serde(rename = "I_dominates")]
    IDominates,
    Incomparable,
}

/// Second-order stochastic dominance between outflow and inflow rates:
/// the dominant side has the smaller integrated c.d.f. everywhere and
/// strictly somewhere. Masses must agree within `mass_tol`.
pub fn sosd_compare(
    outflow: &SwitchingRateDistribution,
    inflow: &SwitchingRateDistribution,
    mass_tol: f64,
) -> Result<Dominance> {
    let (mo, mi) = (outflow.total_mass(), inflow.total_mass());
    if (mo - mi).abs() > mass_tol {
        return input(format!("source masses differ: outflow {mo}, inflow {mi}"));
    }
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    sweep(outflow, inflow, |_, _, _, io, ii| {
        let d = io - ii;
        lo = lo.min(d);
        hi = hi.max(d);
    });
    Ok(if hi <= SOSD_TOL && lo < -SOSD_TOL {
        Dominance::ODominates
    } else if lo >= -SOSD_TOL && hi > SOSD_TOL {
        Dominance::IDominates
    } else {
        Dominance::Incomparable
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundPoint {
    pub t: f64,
    pub xbarbar: f64,
}

/// Frozen-payoff trajectory from `xbar_star`, an upper bound on the actual
/// aggregate when the externality is positive and outflow dominates.
pub fn bound_trajectory(
    inflow: &SwitchingRateDistribution,
    outflow: &SwitchingRateDistribution,
    xbar_star: f64,
    times: &[f64],
) -> Vec<BoundPoint> {
    let moved = |d: &SwitchingRateDistribution, t: f64| {
        neumaier_sum(d.atoms().iter().map(|a| -a.m * (-a.q * t).exp_m1()))
    };
    times
        .iter()
        .map(|&t| BoundPoint {
            t,
            xbarbar: xbar_star + moved(inflow, t) - moved(outflow, t),
        })
        .collect()
}

/// `n` points log-spaced on `[lo, hi]`.
pub fn log_times(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 || hi <= lo {
        return vec![hi];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| {
            if k + 1 == n {
                hi
            } else {
                (a + (b - a) * k as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateRatioCheck {
    pub xbar_star: f64,
    pub theta_star: f64,
    pub theta_hat: f64,
    pub r: f64,
    pub xbar_ddagger_max: f64,
    pub bound_value: f64,
    pub holds: bool,
}

/// `x̄*(1 − (1 − r) r^{r/(1−r)})`, with its limit 0 at `r = 0`.
pub fn rate_ratio_bound(r: f64, xbar_star: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    xbar_star * (1.0 - (1.0 - r) * r.powf(r / (1.0 - r)))
}

/// Sufficient escape condition from the upper stable equilibrium of a
/// coordination game started from the reversed composition.
pub fn rate_ratio_check(
    game: &AggregateGame,
    dist: &TypeDistribution,
    protocol: &RevisionProtocol,
) -> Result<RateRatioCheck> {
    let report = find_aggregate_equilibria(game, dist, DEFAULT_SCAN_RESOLUTION)?;
    let stable: Vec<f64> = report.stable().map(|e| e.xbar).collect();
    let xbar_star = stable
        .iter()
        .rev()
        .copied()
        .find(|&x| x > 0.0 && x < 1.0 && stable.iter().any(|&y| y < x))
        .ok_or_else(|| {
            Error::Input(
                "needs an interior stable equilibrium above another stable equilibrium".into(),
            )
        })?;
    let f = game.eval(xbar_star);
    let theta_hat = dist.inv_cdf(1.0 - xbar_star);
    if theta_hat <= f {
        return input(format!(
            "reversed threshold {theta_hat} does not exceed the cut-off type {f}"
        ));
    }
    let theta_min = dist.lower();
    let denom = rate_out(protocol, f, theta_hat);
    let r = rate_in(protocol, f, theta_min) / denom;
    if r.is_nan() || r >= 1.0 {
        return input(format!("initial rate ratio r = {r} is not below 1"));
    }
    let holds_at = |x: f64| {
        let fx = game.eval(x);
        protocol.rate(dist.inv_cdf(x) - fx) >= protocol.rate(fx - theta_min)
    };
    let count = (xbar_star / RATIO_SCAN).ceil() as usize;
    let mut xbar_ddagger_max = if holds_at(0.0) { xbar_star } else { 0.0 };
    if xbar_ddagger_max > 0.0 {
        for k in 1..=count {
            let x = xbar_star * k as f64 / count as f64;
            if !holds_at(x) {
                let (mut a, mut b) = (xbar_star * (k - 1) as f64 / count as f64, x);
                for _ in 0..60 {
                    let mid = 0.5 * (a + b);
                    if holds_at(mid) {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                xbar_ddagger_max = a;
                break;
            }
        }
    }
    let bound_value = rate_ratio_bound(r, xbar_star);
    Ok(RateRatioCheck {
        xbar_star,
        theta_star: f,
        theta_hat,
        r,
        xbar_ddagger_max,
        bound_value,
        holds: bound_value <= xbar_ddagger_max,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EscapeReport {
    pub xbar_star: f64,
    pub xbar_dagger: f64,
    pub dominance: Dominance,
    pub inflow_mass: f64,
    pub outflow_mass: f64,
    pub initial_velocity: f64,
    /// First sampled time with the bound below `x̄†`, provided it stayed
    /// below `x̄*` at every earlier sample.
    pub crossing_time: Option<f64>,
    pub rate_ratio: Option<RateRatioCheck>,
    #[serde(skip)]
    pub bound: Vec<BoundPoint>,
}

impl EscapeReport {
    /// A crossing certifies that the aggregate reaches `x̄†` in finite time
    /// and stays below it afterwards.
    pub fn escapes(&self) -> bool {
        self.crossing_time.is_some()
    }
}

fn first_crossing(bound: &[BoundPoint], xbar_star: f64, xbar_dagger: f64) -> Option<f64> {
    for p in bound {
        if p.xbarbar.partial_cmp(&xbar_star) != Some(Ordering::Less) {
            return None;
        }
        if p.xbarbar < xbar_dagger {
            return Some(p.t);
        }
    }
    None
}

/// Escape analysis from a composition sitting at an aggregate equilibrium.
pub fn escape_certificate(
    game: &AggregateGame,
    dist: &TypeDistribution,
    protocol: &RevisionProtocol,
    x0: &BayesianStrategy,
    xbar_dagger: f64,
    t_end: f64,
) -> Result<EscapeReport> {
    if !game.has_positive_externality() {
        return input("escape analysis needs a positive externality");
    }
    if !(t_end.is_finite() && t_end > ESCAPE_T_MIN) {
        return input(format!("t_end must exceed {ESCAPE_T_MIN}, got {t_end}"));
    }
    let n = x0.values().len() as f64;
    let start = x0.aggregate();
    let report = find_aggregate_equilibria(game, dist, DEFAULT_SCAN_RESOLUTION)?;
    let eq = report.nearest(start, 2.0 / n).ok_or_else(|| {
        Error::Input(format!(
            "initial aggregate {start} is not at an aggregate equilibrium"
        ))
    })?;
    let xbar_star = eq.xbar;
    if eq.stability == Stability::Unstable {
        return input(format!("aggregate equilibrium {xbar_star} is unstable"));
    }
    if xbar_dagger.is_nan() || xbar_dagger >= xbar_star {
        return input(format!(
            "x̄† = {xbar_dagger} must lie below x̄* = {xbar_star}"
        ));
    }
    let certificate = is_critical_mass_decrease(game, dist, protocol, xbar_dagger)?;
    if !certificate.certified {
        return input(format!(
            "x̄† = {xbar_dagger} is not a certified critical mass to decrease"
        ));
    }
    let (inflow, outflow) = flow_distributions(game, protocol, x0, xbar_star)?;
    let dominance = sosd_compare(&outflow, &inflow, 2.0 / n)?;
    let times = log_times(ESCAPE_T_MIN, t_end, ESCAPE_SAMPLES);
    let bound = bound_trajectory(&inflow, &outflow, xbar_star, &times);
    let crossing_time = first_crossing(&bound, xbar_star, xbar_dagger);
    Ok(EscapeReport {
        xbar_star,
        xbar_dagger,
        dominance,
        inflow_mass: inflow.total_mass(),
        outflow_mass: outflow.total_mass(),
        initial_velocity: aggregate_velocity_from_flows(&inflow, &outflow),
        crossing_time,
        rate_ratio: rate_ratio_check(game, dist, protocol).ok(),
        bound,
    })
}

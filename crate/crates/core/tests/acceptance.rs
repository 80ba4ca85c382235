//! Acceptance checks for the canonical example. Prints one PASS/FAIL line
//! per criterion and exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use evodyn::composition::{
    balanced_composition, make_grid, perturb_equilibrium, random_composition, reversed_composition,
    sorted_composition, Perturbation, TypeGrid,
};
use evodyn::dynamics::{aggregate_velocity, integrate, integrate_homogenized, vector_field};
use evodyn::equilibria::{
    bayesian_equilibrium, find_aggregate_equilibria, DEFAULT_SCAN_RESOLUTION,
};
use evodyn::flows::{
    aggregate_velocity_from_flows, bound_trajectory, escape_certificate, flow_distributions,
    sosd_compare, Dominance,
};
use evodyn::stability::{critical_mass_sets, is_critical_mass_decrease, select_most_robust};
use evodyn::{
    AggregateGame, IntegrateOptions, RevisionProtocol, Stability, Trajectory, TypeDistribution,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn game() -> AggregateGame {
    AggregateGame::canonical()
}

fn dist() -> TypeDistribution {
    TypeDistribution::sqrt_shift()
}

fn cubic() -> RevisionProtocol {
    RevisionProtocol::power(3.0).unwrap()
}

fn grid(n: usize) -> Arc<TypeGrid> {
    make_grid(&dist(), n).unwrap()
}

fn reversed_run(n: usize, dt: f64, t_end: f64) -> Trajectory {
    let x0 = reversed_composition(&grid(n), 0.25).unwrap();
    integrate(&game(), &cubic(), &x0, &IntegrateOptions::new(t_end, dt)).unwrap()
}

fn within(elapsed: Duration, limit_secs: f64) -> bool {
    elapsed.as_secs_f64() < limit_secs
}

fn equilibrium_set() -> Outcome {
    let start = Instant::now();
    let report = find_aggregate_equilibria(&game(), &dist(), DEFAULT_SCAN_RESOLUTION).unwrap();
    let elapsed = start.elapsed();
    // Roots of 20x̄² − 9x̄ + 1 plus the clamped corner.
    let expected = [
        (0.0, Stability::Stable),
        (0.2, Stability::Unstable),
        (0.25, Stability::Stable),
    ];
    let found: Vec<_> = report
        .equilibria
        .iter()
        .map(|e| (e.xbar, e.stability))
        .collect();
    let matches = found.len() == 3
        && found
            .iter()
            .zip(expected)
            .all(|((x, s), (xe, se))| (x - xe).abs() <= 1e-6 && *s == se);
    outcome(
        matches && within(elapsed, 1.0),
        format!("{found:?} in {elapsed:.2?}"),
    )
}

fn robustness_thresholds() -> Outcome {
    let start = Instant::now();
    let report = find_aggregate_equilibria(&game(), &dist(), DEFAULT_SCAN_RESOLUTION).unwrap();
    let sel = select_most_robust(&game(), &dist(), &report).unwrap();
    let elapsed = start.elapsed();
    let at = |x: f64| {
        sel.thresholds
            .iter()
            .find(|t| (t.xbar_star - x).abs() < 1e-6)
    };
    let (Some(low), Some(high)) = (at(0.0), at(0.25)) else {
        return outcome(false, format!("missing thresholds: {:?}", sel.thresholds));
    };
    let high_at = high.left.map_or(f64::NAN, |s| s.at);
    let pass = (high.overall - 1.0 / 1600.0).abs() <= 1e-9
        && (high_at - 0.225).abs() <= 1e-4
        && (low.overall - 0.05).abs() <= 1e-6
        && sel.selected == Some(0.0)
        && within(elapsed, 1.0);
    outcome(
        pass,
        format!(
            "threshold(0.25) = {:.12} at {high_at:.6}, threshold(0) = {:.9}, selected = {:?}, {elapsed:.2?}",
            high.overall, low.overall, sel.selected
        ),
    )
}

fn stationarity() -> Outcome {
    let start = Instant::now();
    let (g, d) = (game(), dist());
    let grid = grid(4000);
    let report = find_aggregate_equilibria(&g, &d, DEFAULT_SCAN_RESOLUTION).unwrap();
    let mut worst = 0.0f64;
    for e in &report.equilibria {
        let x = bayesian_equilibrium(&g, &d, &grid, e.xbar).unwrap();
        // The cut-off node itself may hold a fractional value.
        let cut = grid.count_at_or_below(evodyn::equilibria::cutoff_type(&d, e.xbar));
        for p in [RevisionProtocol::Standard, cubic()] {
            for (i, v) in vector_field(&g, &p, &x).iter().enumerate() {
                if i + 1 != cut && i != cut {
                    worst = worst.max(v.abs());
                }
            }
        }
    }
    let balanced = balanced_composition(&grid, &d, &g, 0.25, 0.2, 0.3).unwrap();
    let traj = integrate(&g, &cubic(), &balanced, &IntegrateOptions::new(5.0, 0.005)).unwrap();
    let drift = traj
        .xbar
        .iter()
        .map(|x| (x - 0.25).abs())
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-9 && drift <= 5e-3 && within(elapsed, 30.0),
        format!("max node velocity {worst:.3e}, balanced drift {drift:.3e}, {elapsed:.2?}"),
    )
}

fn aggregability() -> Outcome {
    let start = Instant::now();
    let (g, d) = (game(), dist());
    let grid = grid(4000);
    let sorted = sorted_composition(&grid, 0.25).unwrap();
    let reversed = reversed_composition(&grid, 0.25).unwrap();
    let opts = IntegrateOptions::new(20.0, 0.005);
    let std = RevisionProtocol::Standard;
    let a = integrate(&g, &std, &sorted, &opts).unwrap();
    let b = integrate(&g, &std, &reversed, &opts).unwrap();
    let h = integrate_homogenized(&g, &d, 0.25, &opts).unwrap();
    let gap = a
        .xbar
        .iter()
        .zip(&b.xbar)
        .zip(&h.xbar)
        .map(|((x, y), z)| (x - y).abs().max((x - z).abs()).max((y - z).abs()))
        .fold(0.0, f64::max);

    let opts2 = IntegrateOptions::new(2.0, 0.005);
    let ts = integrate(&g, &cubic(), &sorted, &opts2).unwrap();
    let tr = integrate(&g, &cubic(), &reversed, &opts2).unwrap();
    let split = (ts.final_xbar() - tr.final_xbar()).abs();
    let elapsed = start.elapsed();
    outcome(
        gap <= 1e-6 && split > 0.05 && within(elapsed, 30.0),
        format!("standard max gap {gap:.3e}, tempered gap at t=2 {split:.4}, {elapsed:.2?}"),
    )
}

fn escape() -> Outcome {
    let start = Instant::now();
    let (g, d, p) = (game(), dist(), cubic());
    let x0 = reversed_composition(&grid(4000), 0.25).unwrap();
    let (inflow, outflow) = flow_distributions(&g, &p, &x0, 0.25).unwrap();
    let dominance = sosd_compare(&outflow, &inflow, 1e-9).unwrap();
    let cert = escape_certificate(&g, &d, &p, &x0, 0.03, 50.0).unwrap();
    let traj = integrate(&g, &p, &x0, &IntegrateOptions::new(200.0, 0.005)).unwrap();
    let bound = bound_trajectory(&inflow, &outflow, 0.25, &traj.times);

    let a = dominance == Dominance::ODominates;
    let b = traj
        .times
        .iter()
        .zip(&traj.xbar)
        .filter(|(t, _)| **t > 0.0 && **t <= 50.0)
        .all(|(_, x)| *x < 0.25);
    let excess = traj
        .times
        .iter()
        .zip(&traj.xbar)
        .zip(&bound)
        .filter(|((t, _), _)| **t <= 50.0)
        .map(|((_, x), bb)| x - bb.xbarbar)
        .fold(f64::NEG_INFINITY, f64::max);
    let c = excess <= 1e-3;
    let dd = bound.iter().any(|bb| bb.t <= 1.0 && bb.xbarbar < 0.1);
    let x50 = traj.xbar_at(50.0);
    let x200 = traj.final_xbar();
    let e = x50 < 0.01 && x200.abs() <= 1e-3;
    let elapsed = start.elapsed();
    outcome(
        a && b && c && dd && e && cert.escapes() && within(elapsed, 120.0),
        format!(
            "(a) {dominance:?} (b) {b} (c) max x̄ − x̄̄ = {excess:.3e} (d) {dd} (e) x̄(50) = {x50:.3e}, x̄(200) = {x200:.3e}; \
             crossing time {:?}; {elapsed:.2?}",
            cert.crossing_time
        ),
    )
}

fn critical_mass() -> Outcome {
    let start = Instant::now();
    let (g, d, p) = (game(), dist(), cubic());
    let analytic = (2.9 - 8.01f64.sqrt()) / 2.0;
    let report = find_aggregate_equilibria(&g, &d, DEFAULT_SCAN_RESOLUTION).unwrap();
    let sets = critical_mass_sets(&g, &d, &p, &report, 1e-4).unwrap();
    let Some(first) = sets.decrease_set.first().copied() else {
        return outcome(false, "empty decrease set".into());
    };
    // Brute force: largest certified point on the 1e-4 grid below the unstable equilibrium.
    let mut brute = 0.0;
    for k in 1..2000 {
        let x = k as f64 * 1e-4;
        if is_critical_mass_decrease(&g, &d, &p, x).unwrap().certified {
            brute = x;
        } else {
            break;
        }
    }
    let elapsed = start.elapsed();
    let pass = first.lo <= 1e-4
        && (first.hi - analytic).abs() <= 1e-3
        && (brute - analytic).abs() <= 1e-3
        && within(elapsed, 10.0);
    outcome(
        pass,
        format!(
            "decrease set starts ({:.1e}, {:.6}], brute force {brute:.4}, analytic {analytic:.6}, {elapsed:.2?}",
            first.lo, first.hi
        ),
    )
}

fn flow_identity() -> Outcome {
    let start = Instant::now();
    let g = game();
    let grid = grid(2000);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let xbar: f64 = rng.random();
        let x = random_composition(&grid, xbar, &mut rng).unwrap();
        let agg = x.aggregate();
        for p in [RevisionProtocol::Standard, cubic()] {
            let (inflow, outflow) = flow_distributions(&g, &p, &x, agg).unwrap();
            let diff = (aggregate_velocity_from_flows(&inflow, &outflow)
                - aggregate_velocity(&g, &p, &x))
            .abs();
            worst = worst.max(diff);
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-12 && within(elapsed, 10.0),
        format!("max |difference| {worst:.3e}, {elapsed:.2?}"),
    )
}

fn perturbation() -> Outcome {
    let start = Instant::now();
    let (g, d, p) = (game(), dist(), cubic());
    let n = 4000;
    let xstar = bayesian_equilibrium(&g, &d, &grid(n), 0.25).unwrap();
    let (e, w, eps) = (0.05, 0.5, 0.01);
    let xd = perturb_equilibrium(
        &xstar,
        &g,
        &d,
        &p,
        Perturbation::Bands {
            width: e,
            mass_ratio: w,
        },
        eps,
    )
    .unwrap();
    let shift = xd.aggregate() - xstar.aggregate();
    let target = (1.0 - w) * e * eps;
    let velocity = aggregate_velocity(&g, &p, &xd);
    let elapsed = start.elapsed();
    outcome(
        (shift - target).abs() <= 2.0 / n as f64 && velocity > 0.0 && within(elapsed, 5.0),
        format!("aggregate shift {shift:.6e} (target {target:.6e}), velocity {velocity:.3e}, {elapsed:.2?}"),
    )
}

fn convergence() -> Outcome {
    let start = Instant::now();
    let coarse = reversed_run(2000, 0.005, 10.0).final_xbar();
    let fine = reversed_run(4000, 0.005, 10.0).final_xbar();
    let half_step = reversed_run(4000, 0.0025, 10.0).final_xbar();
    let dn = (coarse - fine).abs();
    let dt = (half_step - fine).abs();
    let elapsed = start.elapsed();
    outcome(
        dn <= 2e-3 && dt <= 1e-6,
        format!("x̄(10) = {fine:.6e}; n 2000→4000 changes it by {dn:.3e}, dt halving by {dt:.3e}; {elapsed:.2?}"),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("equilibrium set", equilibrium_set),
        ("robustness thresholds", robustness_thresholds),
        ("stationarity", stationarity),
        ("aggregability contrast", aggregability),
        ("escape reproduction", escape),
        ("critical mass", critical_mass),
        ("flow identity", flow_identity),
        ("perturbation", perturbation),
        ("grid and step convergence", convergence),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} {}. {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            k + 1,
            o.detail
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

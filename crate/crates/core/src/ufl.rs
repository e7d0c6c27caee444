//! Rounding oracle for facility location with uniform opening cost.

use crate::error::{Error, Result};
use crate::lp::{balls_apart, Ball, FractionalSolution, SepCut, TAU_LP};
use crate::metric::{MetricInstance, ProblemSpec, RadiusGrid};
use crate::round_or_cut::RoundOutcome;
use crate::solution::{assemble, factor_bound, Certificate};

/// Lower end of the threshold range.
pub const BETA: f64 = 0.1353352832366127; // e^-2

/// Threshold filtering at level `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaProfile {
    pub alpha: f64,
    /// `r_alpha(v)`: smallest grid radius with ball mass at least `alpha`.
    pub radius: Vec<f64>,
    pub radius_idx: Vec<usize>,
    pub reps: Vec<usize>,
    /// Children of `reps[i]`, the rep itself included.
    pub child: Vec<Vec<usize>>,
}

impl AlphaProfile {
    /// Balls `B(j, r_alpha(j))` around the representatives.
    pub fn balls(&self) -> Vec<Ball> {
        self.reps
            .iter()
            .map(|&j| Ball {
                client: j,
                radius: self.radius[j],
            })
            .collect()
    }
}

fn alpha_radius(grid: &RadiusGrid, sol: &FractionalSolution, v: usize, alpha: f64) -> Result<usize> {
    let ys = &sol.ball[v];
    if let Some(i) = ys.iter().position(|&y| y >= alpha) {
        return Ok(i);
    }
    let last = grid.radii(v).len() - 1;
    if ys[last] >= alpha - TAU_LP {
        Ok(last)
    } else {
        Err(Error::NoRadius { client: v, alpha })
    }
}

/// Greedy filtering: repeatedly pick the uncovered client with the smallest
/// `r_alpha` (ties by index) and absorb every uncovered `u` with
/// `d(u,j) <= r_alpha(u) + r_alpha(j)`, up to `SEPARATION_TOL`.
pub fn filter_ufl(
    inst: &MetricInstance,
    grid: &RadiusGrid,
    sol: &FractionalSolution,
    alpha: f64,
) -> Result<AlphaProfile> {
    let n = inst.n();
    let radius_idx = (0..n)
        .map(|v| alpha_radius(grid, sol, v, alpha))
        .collect::<Result<Vec<_>>>()?;
    let radius: Vec<f64> = (0..n).map(|v| grid.radii(v)[radius_idx[v]]).collect();
    let mut covered = vec![false; n];
    let mut reps = Vec::new();
    let mut child = Vec::new();
    while let Some(j) = (0..n)
        .filter(|&v| !covered[v])
        .min_by(|&a, &b| radius[a].total_cmp(&radius[b]).then(a.cmp(&b)))
    {
        let kids: Vec<usize> = (0..n)
            .filter(|&u| !covered[u] && !balls_apart(inst.cd(u, j), radius[u], radius[j]))
            .collect();
        for &u in &kids {
            covered[u] = true;
        }
        reps.push(j);
        child.push(kids);
    }
    Ok(AlphaProfile {
        alpha,
        radius,
        radius_idx,
        reps,
        child,
    })
}

/// Distinct ball masses in `(e^-2, 1]`, ascending, always ending with 1.
pub fn breakpoints(sol: &FractionalSolution) -> Vec<f64> {
    let mut out: Vec<f64> = sol
        .ball
        .iter()
        .flatten()
        .map(|&y| y.min(1.0))
        .filter(|&y| y > BETA)
        .chain([1.0])
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// `∫_0^1 r_alpha(v) dalpha` minus the LP's cost share, floored at 0: the
/// amount by which the discretized cost row undercounts the threshold radii.
pub fn discretization_slack(grid: &RadiusGrid, sol: &FractionalSolution, v: usize) -> f64 {
    let rs = grid.radii(v);
    let mut prev = 0.0f64;
    let mut integral = 0.0;
    for (t, &r) in rs.iter().enumerate() {
        let m = prev.max(sol.y(v, t).min(1.0));
        integral += r * (m - prev);
        prev = m;
    }
    integral += rs[rs.len() - 1] * (1.0 - prev).max(0.0);
    (integral - sol.cost[v]).max(0.0)
}

/// Tries every threshold breakpoint. Returns the most violated disjoint-ball
/// cut if any threshold yields one; otherwise opens the representatives of
/// the cheapest threshold and certifies the cost against the averaged bound.
pub fn attempt_round_ufl(
    inst: &MetricInstance,
    grid: &RadiusGrid,
    sol: &FractionalSolution,
    opt_g: f64,
    lambda: f64,
) -> Result<RoundOutcome> {
    let n = inst.n();
    let spec = ProblemSpec::Ufl { lambda };
    let total_c = sol.total_cost();
    let mut worst: Option<(f64, AlphaProfile)> = None;
    let mut best: Option<(f64, AlphaProfile)> = None;
    for alpha in breakpoints(sol) {
        let prof = filter_ufl(inst, grid, sol, alpha)?;
        let ysum: f64 = prof.reps.iter().map(|&j| sol.y(j, prof.radius_idx[j])).sum();
        let violation = lambda * ysum + total_c - opt_g;
        let threshold = crate::lp::TAU_CUT * opt_g.abs().max(1.0);
        if violation > threshold {
            if worst.as_ref().map_or(true, |w| violation > w.0) {
                worst = Some((violation, prof));
            }
            continue;
        }
        let points: Vec<usize> = prof.reps.iter().map(|&j| inst.clients()[j]).collect();
        let cost = crate::solution::evaluate(inst, &spec, &points);
        if best.as_ref().map_or(true, |b| cost < b.0) {
            best = Some((cost, prof));
        }
    }
    if let Some((_, prof)) = worst {
        return Ok(RoundOutcome::Cut(SepCut::ufl(inst, prof.balls(), lambda)?));
    }
    let (cost, prof) = best.expect("alpha = 1 is always a breakpoint");
    let factor = factor_bound(&spec);
    let slack = crate::lp::TAU_CUT * opt_g.abs().max(1.0)
        + (0..n).map(|v| discretization_slack(grid, sol, v)).sum::<f64>();
    let bound = factor * (opt_g + slack);
    if cost > bound * (1.0 + 1e-9) + 1e-9 {
        return Err(Error::CertificateFailure(format!(
            "cost {cost} exceeds {factor}·({opt_g} + {slack})"
        )));
    }
    let cert = Certificate {
        factor,
        opt_g,
        bound,
        slack,
        fairness_ok: true,
        cuts: 0,
        iterations: 0,
    };
    Ok(RoundOutcome::Accept(assemble(
        inst,
        &spec,
        prof.reps,
        (0..n).collect(),
        cert,
    )))
}

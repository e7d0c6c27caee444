//! Rounding oracle for (k,p)-clustering: sum of p-th powers of distances.

use crate::error::Result;
use crate::fair::{certified, filter_by_caps, round_caps, CapProfile, CapsOutcome};
use crate::lp::{FractionalSolution, TAU_LP};
use crate::metric::{MetricInstance, ProblemSpec, RadiusGrid};
use crate::round_or_cut::RoundOutcome;

/// `U_v >= ρ^p (1 − y(v,ρ)) − τ`: the mass outside a ball of radius `ρ` pays
/// at least `ρ^p`.
pub fn markov_check_kp(sol: &FractionalSolution, grid: &RadiusGrid, v: usize, idx: usize, p: u32) -> bool {
    let rho = grid.radii(v)[idx];
    let need = rho.powi(p as i32) * (1.0 - sol.y(v, idx));
    sol.cost[v] >= need - TAU_LP * need.abs().max(1.0)
}

/// Caps `R(v) = 2^{1/p} U_v^{1/p}`.
pub fn filter_kp(
    inst: &MetricInstance,
    grid: &RadiusGrid,
    sol: &FractionalSolution,
    p: u32,
) -> Result<CapProfile> {
    let root = |u: f64| if u <= 0.0 { 0.0 } else { (2.0 * u).powf(1.0 / p as f64) };
    let cap = sol.cost.iter().map(|&u| root(u)).collect();
    filter_by_caps(inst, grid, cap)
}

/// Filter, separate, consolidate with `c_j^p`, round, and certify
/// `cost <= 2^{2p+1} opt_g`.
pub fn attempt_round_kp(
    inst: &MetricInstance,
    grid: &RadiusGrid,
    sol: &FractionalSolution,
    opt_g: f64,
    k: usize,
    p: u32,
) -> Result<RoundOutcome> {
    let prof = filter_kp(inst, grid, sol, p)?;
    match round_caps(inst, grid, sol, prof, k, p)? {
        CapsOutcome::Cut(cut) => Ok(RoundOutcome::Cut(cut)),
        CapsOutcome::Rounded(r) => {
            certified(inst, &ProblemSpec::Kp { k, p }, sol, r.centers, opt_g, true)
                .map(RoundOutcome::Accept)
        }
    }
}

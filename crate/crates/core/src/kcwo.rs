//! Rounding oracle for k-center with outliers.

use crate::error::{Error, Result};
use crate::lp::{Ball, FractionalSolution, SepCut, TAU_CUT, TAU_LP};
use crate::metric::{MetricInstance, ProblemSpec, RadiusGrid};
use crate::round_or_cut::RoundOutcome;
use crate::solution::{assemble, Certificate};

#[derive(Debug, Clone, PartialEq)]
pub struct CovProfile {
    pub reps: Vec<usize>,
    /// Children of `reps[i]`, the rep itself included.
    pub child: Vec<Vec<usize>>,
    /// Positions in `reps` of the `k` reps with the most children.
    pub selected: Vec<usize>,
    pub served: usize,
}

/// Repeatedly picks the uncovered client with the largest coverage (ties by
/// index) and absorbs every uncovered client within `2 opt_g`; keeps the `k`
/// reps with the largest child sets (ties by index).
pub fn filter_kcwo(inst: &MetricInstance, sol: &FractionalSolution, opt_g: f64, k: usize) -> CovProfile {
    let n = inst.n();
    let cov = &sol.cov;
    let mut covered = vec![false; n];
    let mut reps = Vec::new();
    let mut child = Vec::new();
    while let Some(i) = (0..n)
        .filter(|&v| !covered[v])
        .min_by(|&a, &b| cov[b].total_cmp(&cov[a]).then(a.cmp(&b)))
    {
        let kids: Vec<usize> = (0..n)
            .filter(|&u| !covered[u] && inst.cd(u, i) <= 2.0 * opt_g)
            .collect();
        for &u in &kids {
            covered[u] = true;
        }
        reps.push(i);
        child.push(kids);
    }
    let mut order: Vec<usize> = (0..reps.len()).collect();
    order.sort_by(|&a, &b| child[b].len().cmp(&child[a].len()).then(reps[a].cmp(&reps[b])));
    order.truncate(k);
    let served = order.iter().map(|&i| child[i].len()).sum();
    CovProfile {
        reps,
        child,
        selected: order,
        served,
    }
}

/// Whether the `k` largest child sets hold at least `m` clients.
pub fn weighted_average_argument(child_sizes: &[usize], k: usize, m: usize) -> bool {
    let mut sizes = child_sizes.to_vec();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes.iter().take(k).sum::<usize>() >= m
}

/// The two LP facts that force the top-`k` child sets to hold `m` clients:
/// total coverage at least `m`, and coverage of the reps at most `k`.
pub fn coverage_premises(sol: &FractionalSolution, prof: &CovProfile, k: usize, m: usize) -> (bool, bool) {
    let total: f64 = sol.cov.iter().sum();
    let reps: f64 = prof.reps.iter().map(|&i| sol.cov[i]).sum();
    (total >= m as f64 - TAU_LP, reps <= k as f64 + TAU_LP)
}

/// Opens the selected reps when they serve `m` clients, else cuts with the
/// disjoint balls `B(i, opt_g)` around all reps.
pub fn attempt_round_kcwo(
    inst: &MetricInstance,
    grid: &RadiusGrid,
    sol: &FractionalSolution,
    opt_g: f64,
    k: usize,
    m: usize,
) -> Result<RoundOutcome> {
    let prof = filter_kcwo(inst, sol, opt_g, k);
    if prof.served >= m {
        let mut served: Vec<usize> = prof
            .selected
            .iter()
            .flat_map(|&i| prof.child[i].iter().copied())
            .collect();
        served.sort_by(|&a, &b| sol.cov[b].total_cmp(&sol.cov[a]).then(a.cmp(&b)));
        served.truncate(m);
        served.sort_unstable();
        let mut centers: Vec<usize> = prof.selected.iter().map(|&i| prof.reps[i]).collect();
        centers.sort_unstable();
        let cert = Certificate {
            factor: 2.0,
            opt_g,
            bound: 2.0 * opt_g,
            slack: 0.0,
            fairness_ok: true,
            cuts: 0,
            iterations: 0,
        };
        let out = assemble(inst, &ProblemSpec::Kcwo { k, m }, centers, served, cert);
        if out.cost > 2.0 * opt_g {
            return Err(Error::CertificateFailure(format!(
                "radius {} exceeds 2·{opt_g}",
                out.cost
            )));
        }
        return Ok(RoundOutcome::Accept(out));
    }
    let balls = prof
        .reps
        .iter()
        .map(|&i| Ball {
            client: i,
            radius: opt_g,
        })
        .collect();
    let cut = SepCut::kcwo(inst, balls, k)?;
    let v = cut.violation(sol, grid, opt_g)?;
    if v <= TAU_CUT {
        return Err(Error::InvariantBreach(format!(
            "top-{k} reps serve {} < {m} clients but the ball cut is violated by only {v}",
            prof.served
        )));
    }
    Ok(RoundOutcome::Cut(cut))
}

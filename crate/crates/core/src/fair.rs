//! Rounding oracle for k-median with per-client radius limits, and the
//! capped filtering / consolidation pipeline it shares with (k,p)-clustering.

use crate::dlp::{self, DlpInput, DlpSolution, HalfIntegral};
use crate::error::{Error, Result};
use crate::lp::{Ball, FractionalSolution, SepCut, TAU_CUT};
use crate::metric::{shrunk_half, MetricInstance, ProblemSpec, RadiusGrid};
use crate::round_or_cut::RoundOutcome;
use crate::solution::{assemble, factor_bound, nearest, Certificate, Solution};

/// Consolidated masses this close to 1 count as 1, and masses this far
/// below ½ are tolerated as LP round-off.
pub const MASS_TOL: f64 = 1e-6;

/// Filtering by per-client caps `R(v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CapProfile {
    pub cap: Vec<f64>,
    pub reps: Vec<usize>,
    /// Children of `reps[i]`, the rep itself included.
    pub child: Vec<Vec<usize>>,
    /// `s(j)` as a position in `reps`; a lone rep points at itself.
    pub neighbor: Vec<usize>,
    /// `a(j) = d(j, s(j)) / 2`, or `R_max(j)` for a lone rep.
    pub half: Vec<f64>,
    /// Grid index of the rep ball radius `shrunk_half(a(j))`, or of
    /// `R_max(j)` for a lone rep.
    pub ball_idx: Vec<usize>,
}

impl CapProfile {
    pub fn balls(&self, grid: &RadiusGrid) -> Vec<Ball> {
        self.reps
            .iter()
            .zip(&self.ball_idx)
            .map(|(&j, &i)| Ball {
                client: j,
                radius: grid.radii(j)[i],
            })
            .collect()
    }

    /// Rep position of every client.
    pub fn rep_of(&self, n: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; n];
        for (i, kids) in self.child.iter().enumerate() {
            for &v in kids {
                out[v] = i;
            }
        }
        out
    }
}

/// Repeatedly picks the uncovered client with the smallest cap (ties by
/// index) and absorbs every uncovered `u` with `d(u,j) <= 2 R(u)`; then links
/// each rep to its nearest other rep by `(distance, index)`.
pub fn filter_by_caps(inst: &MetricInstance, grid: &RadiusGrid, cap: Vec<f64>) -> Result<CapProfile> {
    let n = inst.n();
    let mut covered = vec![false; n];
    let mut reps = Vec::new();
    let mut child = Vec::new();
    while let Some(j) = (0..n)
        .filter(|&v| !covered[v])
        .min_by(|&a, &b| cap[a].total_cmp(&cap[b]).then(a.cmp(&b)))
    {
        let kids: Vec<usize> = (0..n)
            .filter(|&u| !covered[u] && inst.cd(u, j) <= 2.0 * cap[u])
            .collect();
        for &u in &kids {
            covered[u] = true;
        }
        reps.push(j);
        child.push(kids);
    }
    let r = reps.len();
    let mut neighbor = Vec::with_capacity(r);
    let mut half = Vec::with_capacity(r);
    for i in 0..r {
        let j = reps[i];
        let s = (0..r)
            .filter(|&o| o != i)
            .min_by(|&a, &b| {
                inst.cd(j, reps[a])
                    .total_cmp(&inst.cd(j, reps[b]))
                    .then(reps[a].cmp(&reps[b]))
            });
        match s {
            Some(s) => {
                neighbor.push(s);
                half.push(inst.cd(j, reps[s]) / 2.0);
            }
            None => {
                neighbor.push(i);
                half.push(grid.r_max(j));
            }
        }
    }
    let ball_idx = reps
        .iter()
        .zip(&half)
        .zip(&neighbor)
        .enumerate()
        .map(|(i, ((&j, &a), &s))| grid.require(j, if s == i { a } else { shrunk_half(a) }))
        .collect::<Result<Vec<_>>>()?;
    Ok(CapProfile {
        cap,
        reps,
        child,
        neighbor,
        half,
        ball_idx,
    })
}

/// Caps `R(v) = min(r(v), 2 C_v)`.
pub fn filter_fair(
    inst: &MetricInstance,
    grid: &RadiusGrid,
    spec: &ProblemSpec,
    sol: &FractionalSolution,
) -> Result<CapProfile> {
    let cap = (0..inst.n())
        .map(|v| spec.radius(v).min(2.0 * sol.cost[v].max(0.0)))
        .collect();
    filter_by_caps(inst, grid, cap)
}

/// Disjoint ball cut `Σ y(j, b(j)) <= k` with `b(j) = shrunk_half(a(j))`,
/// returned when the LP point violates it. More than `2k` reps without a violation is an invariant
/// breach.
pub fn sep_caps(
    inst: &MetricInstance,
    grid: &RadiusGrid,
    sol: &FractionalSolution,
    prof: &CapProfile,
    k: usize,
) -> Result<Option<SepCut>> {
    let ysum: f64 = prof
        .reps
        .iter()
        .zip(&prof.ball_idx)
        .map(|(&j, &i)| sol.y(j, i))
        .sum();
    if ysum > k as f64 + TAU_CUT {
        return Ok(Some(SepCut::fair(inst, prof.balls(grid), k)?));
    }
    if prof.reps.len() > 2 * k {
        return Err(Error::InvariantBreach(format!(
            "{} reps exceed 2k = {} but ball mass {ysum} is within k",
            prof.reps.len(),
            2 * k
        )));
    }
    Ok(None)
}

/// Moves each rep's mass inside its ball onto the rep:
/// `z_j = min(y(j, b(j)), 1)`, the rest assigned to `s(j)` at distance
/// `c_j = d(j, s(j))`.
pub fn consolidate(sol: &FractionalSolution, prof: &CapProfile, k: usize, p: u32) -> Result<DlpInput> {
    let mut mass = Vec::with_capacity(prof.reps.len());
    for (&j, &i) in prof.reps.iter().zip(&prof.ball_idx) {
        let z = sol.y(j, i).min(1.0);
        if z < 0.5 - MASS_TOL {
            return Err(Error::InvariantBreach(format!(
                "rep {j} keeps mass {z} below 1/2"
            )));
        }
        mass.push(if z >= 1.0 - MASS_TOL { 1.0 } else { z.max(0.5) });
    }
    Ok(DlpInput {
        reps: prof.reps.clone(),
        weight: prof.child.iter().map(|c| c.len() as f64).collect(),
        neighbor: prof.neighbor.clone(),
        dist: prof.half.iter().map(|a| 2.0 * a).collect(),
        mass,
        k,
        p,
    })
}

/// Every intermediate of the capped rounding, for inspection.
#[derive(Debug, Clone)]
pub struct CapsRounding {
    pub profile: CapProfile,
    pub consolidated: DlpInput,
    pub padded: DlpInput,
    pub half: HalfIntegral,
    pub integral: DlpSolution,
    /// Opened client positions.
    pub centers: Vec<usize>,
}

/// Cut or full rounding for a given cap profile.
pub enum CapsOutcome {
    Cut(SepCut),
    Rounded(Box<CapsRounding>),
}

pub fn round_caps(
    inst: &MetricInstance,
    grid: &RadiusGrid,
    sol: &FractionalSolution,
    profile: CapProfile,
    k: usize,
    p: u32,
) -> Result<CapsOutcome> {
    if let Some(cut) = sep_caps(inst, grid, sol, &profile, k)? {
        return Ok(CapsOutcome::Cut(cut));
    }
    let consolidated = consolidate(sol, &profile, k, p)?;
    let (padded, half, integral) = dlp::round(&consolidated)?;
    let centers = integral.opened().into_iter().map(|i| profile.reps[i]).collect();
    Ok(CapsOutcome::Rounded(Box::new(CapsRounding {
        profile,
        consolidated,
        padded,
        half,
        integral,
        centers,
    })))
}

/// Per-client fairness check `d(v,S) <= 8 r(v) + extra`.
pub fn fairness_holds(inst: &MetricInstance, spec: &ProblemSpec, centers: &[usize], extra: f64) -> bool {
    let points: Vec<usize> = centers.iter().map(|&c| inst.clients()[c]).collect();
    nearest(inst, &points)
        .iter()
        .enumerate()
        .all(|(v, &(d, _))| d <= 8.0 * spec.radius(v) * (1.0 + 1e-12) + extra)
}

pub(crate) fn certified(
    inst: &MetricInstance,
    spec: &ProblemSpec,
    sol: &FractionalSolution,
    centers: Vec<usize>,
    opt_g: f64,
    fairness_ok: bool,
) -> Result<Solution> {
    let factor = factor_bound(spec);
    let slack = (sol.total_cost() - opt_g).max(0.0) + TAU_CUT * opt_g.abs().max(1.0);
    let bound = factor * (opt_g + slack);
    let cert = Certificate {
        factor,
        opt_g,
        bound,
        slack,
        fairness_ok,
        cuts: 0,
        iterations: 0,
    };
    let out = assemble(inst, spec, centers, (0..inst.n()).collect(), cert);
    if out.cost > bound * (1.0 + 1e-9) + 1e-9 {
        return Err(Error::CertificateFailure(format!(
            "cost {} exceeds {factor}·({opt_g} + {slack})",
            out.cost
        )));
    }
    Ok(out)
}

/// Filter, separate, consolidate and round; certifies the 8-factor on cost
/// and on every client's radius limit.
pub fn attempt_round_fair(
    inst: &MetricInstance,
    grid: &RadiusGrid,
    spec: &ProblemSpec,
    sol: &FractionalSolution,
    opt_g: f64,
) -> Result<RoundOutcome> {
    let k = spec.k().expect("fair kind has k");
    let prof = filter_fair(inst, grid, spec, sol)?;
    let rounding = match round_caps(inst, grid, sol, prof, k, 1)? {
        CapsOutcome::Cut(cut) => return Ok(RoundOutcome::Cut(cut)),
        CapsOutcome::Rounded(r) => r,
    };
    let fairness_ok = fairness_holds(inst, spec, &rounding.centers, 0.0);
    if !fairness_ok && !fairness_holds(inst, spec, &rounding.centers, 2.0 * grid.max_gap()) {
        return Err(Error::CertificateFailure("a client exceeds 8 r(v)".into()));
    }
    certified(inst, spec, sol, rounding.centers, opt_g, fairness_ok).map(RoundOutcome::Accept)
}

//! Exhaustive solvers over the candidate points, solution certification, and
//! the check that an integral optimum satisfies every generated LP row.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::lp::{build_base, FractionalSolution, SepCut};
use crate::metric::{MetricInstance, ProblemSpec, RadiusGrid};
use crate::solution::{evaluate, factor_bound, nearest, Solution};

/// Largest number of center sets [`exact_solve`] will enumerate.
pub const ENUMERATION_BUDGET: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    /// Optimal centers as point indices.
    pub centers: Vec<usize>,
    pub value: f64,
    pub enumerated: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExactOutcome {
    Optimal(ExactResult),
    Infeasible,
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Minimum over all center sets drawn from every point of the instance.
///
/// Cardinality-bounded kinds only try sets of size `min(k, |X|)`, since more
/// centers never hurt. Facility location tries every size up to `n`.
pub fn exact_solve(inst: &MetricInstance, spec: &ProblemSpec) -> Result<ExactOutcome> {
    spec.validate(inst.n())?;
    let x = inst.point_count();
    let sizes: Vec<usize> = match spec {
        ProblemSpec::Ufl { .. } => (1..=inst.n().min(x)).collect(),
        _ => vec![spec.k().unwrap().min(x)],
    };
    let count: u128 = sizes.iter().map(|&s| binomial(x, s)).sum();
    if count > ENUMERATION_BUDGET {
        return Err(Error::TooLarge {
            count,
            budget: ENUMERATION_BUDGET,
        });
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut enumerated = 0u64;
    for s in sizes {
        for set in (0..x).combinations(s) {
            enumerated += 1;
            if let ProblemSpec::FairKMedian { radii, .. } = spec {
                let near = nearest(inst, &set);
                if near.iter().zip(radii).any(|(&(d, _), &r)| d > r) {
                    continue;
                }
            }
            let value = evaluate(inst, spec, &set);
            if best.as_ref().map_or(true, |b| value < b.0) {
                best = Some((value, set));
            }
        }
    }
    Ok(match best {
        Some((value, centers)) => ExactOutcome::Optimal(ExactResult {
            centers,
            value,
            enumerated,
        }),
        None => ExactOutcome::Infeasible,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub ok: bool,
    /// `rhs − lhs` of the checked inequality.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CertifyReport {
    pub checks: Vec<Check>,
}

impl CertifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.ok)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.ok)
    }

    fn le(&mut self, name: impl Into<String>, lhs: f64, rhs: f64) {
        self.checks.push(Check {
            name: name.into(),
            ok: lhs <= rhs,
            slack: rhs - lhs,
        });
    }
}

/// Recomputes the solution's cost from distances and checks the factor
/// inequality against `opt_g`, the radius limits, `|S| <= k` and `|D| >= m`.
pub fn certify(inst: &MetricInstance, spec: &ProblemSpec, sol: &Solution, opt_g: f64) -> CertifyReport {
    let mut r = CertifyReport::default();
    let points: Vec<usize> = sol.centers.iter().map(|&c| inst.clients()[c]).collect();
    let near = nearest(inst, &points);
    let cost = match spec {
        ProblemSpec::Kcwo { .. } => sol.served.iter().map(|&v| near[v].0).fold(0.0, f64::max),
        _ => evaluate(inst, spec, &points),
    };
    r.checks.push(Check {
        name: "reported cost".into(),
        ok: (cost - sol.cost).abs() <= 1e-9 * cost.abs().max(1.0),
        slack: -(cost - sol.cost).abs(),
    });
    r.le("factor", cost, factor_bound(spec) * opt_g);
    if let Some(k) = spec.k() {
        r.le("centers", sol.centers.len() as f64, k as f64);
    }
    match spec {
        ProblemSpec::FairKMedian { radii, .. } => {
            for (v, &(d, _)) in near.iter().enumerate() {
                r.le(format!("radius of client {v}"), d, 8.0 * radii[v]);
            }
        }
        ProblemSpec::Kcwo { m, .. } => r.le("served", *m as f64, sol.served.len() as f64),
        _ => {}
    }
    r
}

/// LP point of an integral solution: cost shares `d(v,S)^p`, ball masses
/// `[d(v,S) <= ρ]`, and coverage of clients within `opt_g` for outlier
/// problems.
pub fn induced_point(
    inst: &MetricInstance,
    spec: &ProblemSpec,
    grid: &RadiusGrid,
    centers: &[usize],
    opt_g: f64,
) -> FractionalSolution {
    let d: Vec<f64> = nearest(inst, centers).into_iter().map(|x| x.0).collect();
    let covered: Vec<bool> = d.iter().map(|&x| x <= opt_g).collect();
    FractionalSolution::induced(grid, &d, spec.power(), &covered)
}

/// Rows (base rows at `opt_g` and the given cuts) violated by the point
/// induced by `centers`, described by tag and amount.
pub fn validity_violations(
    inst: &MetricInstance,
    spec: &ProblemSpec,
    grid: &RadiusGrid,
    cuts: &[SepCut],
    centers: &[usize],
    opt_g: f64,
) -> Result<Vec<String>> {
    let mut pool = build_base(inst, spec, grid, opt_g)?;
    for cut in cuts {
        pool.insert_cut(cut.clone(), grid)?;
    }
    let point = induced_point(inst, spec, grid, centers, opt_g);
    Ok(pool
        .violations(&point, opt_g)
        .map(|(row, v)| format!("{} violated by {v:e}", row.tag))
        .collect())
}

/// Whether every client's distance to `centers` is within its largest grid
/// radius.
pub fn r_max_sound(inst: &MetricInstance, grid: &RadiusGrid, centers: &[usize]) -> bool {
    nearest(inst, centers)
        .iter()
        .enumerate()
        .all(|(v, &(d, _))| d <= grid.r_max(v))
}

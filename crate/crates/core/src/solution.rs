//! Integral solutions and their cost evaluation.

use crate::metric::{MetricInstance, ProblemSpec};

/// Approximation factor the rounding certifies for each kind.
pub fn factor_bound(spec: &ProblemSpec) -> f64 {
    match spec {
        ProblemSpec::Ufl { .. } => 2.0 / (1.0 - (-2.0f64).exp()),
        ProblemSpec::FairKMedian { .. } => 8.0,
        ProblemSpec::Kp { p, .. } => 2f64.powi(2 * *p as i32 + 1),
        ProblemSpec::Kcwo { .. } => 2.0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub factor: f64,
    /// Guess the accepting LP was solved at.
    pub opt_g: f64,
    /// Upper bound on the cost proved by the rounding, `factor·(opt_g + slack)`.
    pub bound: f64,
    /// Discretization slack added to `opt_g` in `bound`.
    pub slack: f64,
    pub fairness_ok: bool,
    pub cuts: usize,
    pub iterations: usize,
}

/// Open centers are client positions; `assignment[v]` is the position of the
/// center serving client `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub centers: Vec<usize>,
    pub assignment: Vec<usize>,
    /// Served clients (all clients except for outlier problems).
    pub served: Vec<usize>,
    pub cost: f64,
    pub certificate: Certificate,
}

/// Distance from each client to its nearest center among `centers` (point
/// indices), with that center. Ties go to the earlier center.
pub fn nearest(inst: &MetricInstance, centers: &[usize]) -> Vec<(f64, usize)> {
    (0..inst.n())
        .map(|v| {
            centers
                .iter()
                .map(|&x| (inst.client_to_point(v, x), x))
                .fold((f64::INFINITY, usize::MAX), |best, c| if c.0 < best.0 { c } else { best })
        })
        .collect()
}

/// Objective value of opening `centers` (point indices). For outlier problems
/// the radius covers the `m` closest clients.
pub fn evaluate(inst: &MetricInstance, spec: &ProblemSpec, centers: &[usize]) -> f64 {
    let d: Vec<f64> = nearest(inst, centers).into_iter().map(|x| x.0).collect();
    match spec {
        ProblemSpec::Ufl { lambda } => lambda * centers.len() as f64 + d.iter().sum::<f64>(),
        ProblemSpec::FairKMedian { .. } => d.iter().sum(),
        ProblemSpec::Kp { p, .. } => d.iter().map(|x| x.powi(*p as i32)).sum(),
        ProblemSpec::Kcwo { m, .. } => {
            let mut d = d;
            d.sort_by(f64::total_cmp);
            d[*m - 1]
        }
    }
}

/// Objective of a served set: the largest distance for outlier problems,
/// otherwise the same as [`evaluate`].
pub fn evaluate_served(
    inst: &MetricInstance,
    spec: &ProblemSpec,
    centers: &[usize],
    served: &[usize],
) -> f64 {
    match spec {
        ProblemSpec::Kcwo { .. } => {
            let d = nearest(inst, centers);
            served.iter().map(|&v| d[v].0).fold(0.0, f64::max)
        }
        _ => evaluate(inst, spec, centers),
    }
}

/// Positions of `centers` (client positions) as point indices.
pub fn center_points(inst: &MetricInstance, centers: &[usize]) -> Vec<usize> {
    centers.iter().map(|&c| inst.clients()[c]).collect()
}

/// Builds a [`Solution`] opening the given client positions, assigning every
/// client to its nearest one and recomputing the cost from distances.
pub fn assemble(
    inst: &MetricInstance,
    spec: &ProblemSpec,
    centers: Vec<usize>,
    served: Vec<usize>,
    certificate: Certificate,
) -> Solution {
    let points = center_points(inst, &centers);
    let near = nearest(inst, &points);
    let assignment = near
        .iter()
        .map(|&(_, x)| centers[points.iter().position(|&p| p == x).unwrap()])
        .collect();
    let cost = evaluate_served(inst, spec, &points, &served);
    Solution {
        centers,
        assignment,
        served,
        cost,
        certificate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Norm;

    fn path() -> MetricInstance {
        let pts: Vec<Vec<f64>> = (0..3).map(|i| vec![i as f64]).collect();
        MetricInstance::from_points(&pts, Norm::L2, vec![0, 1, 2]).unwrap()
    }

    #[test]
    fn factors() {
        let ufl = factor_bound(&ProblemSpec::Ufl { lambda: 1.0 });
        assert!((ufl - 2.313035).abs() < 1e-6 && ufl < 2.32);
        assert_eq!(factor_bound(&ProblemSpec::Kp { k: 1, p: 1 }), 8.0);
        assert_eq!(factor_bound(&ProblemSpec::Kp { k: 1, p: 2 }), 32.0);
        assert_eq!(factor_bound(&ProblemSpec::Kp { k: 1, p: 3 }), 128.0);
    }

    #[test]
    fn evaluate_kinds() {
        let inst = path();
        assert_eq!(evaluate(&inst, &ProblemSpec::Kp { k: 1, p: 1 }, &[1]), 2.0);
        assert_eq!(evaluate(&inst, &ProblemSpec::Kp { k: 1, p: 2 }, &[0]), 5.0);
        assert_eq!(evaluate(&inst, &ProblemSpec::Ufl { lambda: 1.0 }, &[0, 2]), 3.0);
        assert_eq!(evaluate(&inst, &ProblemSpec::Kcwo { k: 1, m: 2 }, &[0]), 1.0);
    }

    #[test]
    fn assemble_assigns_nearest() {
        let inst = path();
        let cert = Certificate {
            factor: 8.0,
            opt_g: 2.0,
            bound: 16.0,
            slack: 0.0,
            fairness_ok: true,
            cuts: 0,
            iterations: 1,
        };
        let s = assemble(&inst, &ProblemSpec::Kp { k: 2, p: 1 }, vec![0, 2], vec![0, 1, 2], cert);
        assert_eq!(s.assignment, vec![0, 0, 2]);
        assert_eq!(s.cost, 1.0);
    }
}

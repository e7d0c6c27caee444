//! Graph-to-ℓ∞ embedding behind the facility-location hardness gap, the
//! cheap solution for graphs with a planted independent 4-partition, and the
//! greedy matching used in the converse direction.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::metric::{MetricInstance, Norm, ProblemSpec};
use crate::oracle::{exact_solve, ExactOutcome};

/// Simple undirected graph; each edge is stored oriented from its lower to
/// its higher endpoint, in sorted order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::InvalidInstance(format!("self-loop at {u}")));
            }
            if u >= n || v >= n {
                return Err(Error::InvalidInstance(format!("edge ({u},{v}) outside {n} vertices")));
            }
            let e = (u.min(v), u.max(v));
            if !seen.insert(e) {
                return Err(Error::InvalidInstance(format!("duplicate edge ({u},{v})")));
            }
            out.push(e);
        }
        out.sort_unstable();
        Ok(Self { n, edges: out })
    }

    /// Parses `u v` lines (0-indexed). Blank lines and `#` comments are
    /// skipped; the vertex count is one more than the largest index.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut n = 0;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let nums: Vec<&str> = line.split_whitespace().collect();
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|_| {
                    Error::InvalidInstance(format!("line {}: bad vertex {s:?}", lineno + 1))
                })
            };
            if nums.len() != 2 {
                return Err(Error::InvalidInstance(format!(
                    "line {}: expected `u v`",
                    lineno + 1
                )));
            }
            let (u, v) = (parse(nums[0])?, parse(nums[1])?);
            n = n.max(u + 1).max(v + 1);
            edges.push((u, v));
        }
        Self::new(n, edges)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.binary_search(&(u.min(v), u.max(v))).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedInstance {
    pub graph: Graph,
    pub eps: f64,
    /// Opening cost `eps · n`.
    pub lambda: f64,
    /// `A(v)`, one coordinate per edge.
    pub clients: Vec<Vec<f64>>,
    /// Extra facility candidates appended after the clients.
    pub extra: Vec<Vec<f64>>,
}

impl EmbeddedInstance {
    /// Materialized ℓ∞ instance, clients first.
    pub fn instance(&self) -> Result<MetricInstance> {
        let mut pts = self.clients.clone();
        pts.extend(self.extra.iter().cloned());
        MetricInstance::from_points(&pts, Norm::LInf, (0..self.clients.len()).collect())
    }

    pub fn spec(&self) -> ProblemSpec {
        ProblemSpec::Ufl {
            lambda: self.lambda,
        }
    }
}

/// `A(v)(e) = 2` when `v` is the tail of `e`, `−2` at the head, else 0.
pub fn embed(g: &Graph, eps: f64) -> Result<EmbeddedInstance> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidSpec(format!("eps must lie in (0,1), got {eps}")));
    }
    if g.edges.is_empty() {
        return Err(Error::InvalidInstance("graph has no edges".into()));
    }
    let m = g.edges.len();
    let mut clients = vec![vec![0.0; m]; g.n];
    for (e, &(u, v)) in g.edges.iter().enumerate() {
        clients[u][e] = 2.0;
        clients[v][e] = -2.0;
    }
    Ok(EmbeddedInstance {
        graph: g.clone(),
        eps,
        lambda: eps * g.n as f64,
        clients,
        extra: Vec::new(),
    })
}

/// Facility point of a vertex set: `+1` on edges whose tail is in the set,
/// `−1` where the head is.
pub fn part_facility(g: &Graph, part: &[usize]) -> Vec<f64> {
    let inside: HashSet<usize> = part.iter().copied().collect();
    g.edges
        .iter()
        .map(|&(u, v)| {
            if inside.contains(&u) {
                1.0
            } else if inside.contains(&v) {
                -1.0
            } else {
                0.0
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completeness {
    pub facilities: Vec<Vec<f64>>,
    /// `d∞(A(v), s_i)` for every vertex and part.
    pub dist: Vec<Vec<f64>>,
    pub connection: f64,
    pub opening: f64,
    pub cost: f64,
    /// Every part has at least `(1 − eps) n / 4` vertices.
    pub large_parts: bool,
    pub bound: f64,
}

fn linf(a: &[f64], b: &[f64]) -> f64 {
    Norm::LInf.distance(a, b)
}

/// Opens one facility per part and certifies the per-client distances: at
/// most 1 (exactly 1 when the vertex has an edge) to its own part's facility,
/// at most 3 to any other.
pub fn completeness_solution(g: &Graph, parts: &[Vec<usize>], eps: f64) -> Result<Completeness> {
    if parts.len() > 4 {
        return Err(Error::InvalidSpec(format!("{} parts, at most 4 allowed", parts.len())));
    }
    let emb = embed(g, eps)?;
    let mut owner = vec![None; g.n];
    for (i, part) in parts.iter().enumerate() {
        for (a, &u) in part.iter().enumerate() {
            if u >= g.n {
                return Err(Error::InvalidSpec(format!("vertex {u} out of range")));
            }
            if owner[u].replace(i).is_some() {
                return Err(Error::InvalidSpec(format!("vertex {u} in two parts")));
            }
            for &v in &part[a + 1..] {
                if g.has_edge(u, v) {
                    return Err(Error::NotIndependent { part: i, u, v });
                }
            }
        }
    }
    let mut facilities: Vec<Vec<f64>> = parts.iter().map(|p| part_facility(g, p)).collect();
    facilities.resize(4, vec![0.0; g.edges.len()]);
    let degree = |v: usize| g.edges.iter().filter(|&&(a, b)| a == v || b == v).count();
    let mut dist = Vec::with_capacity(g.n);
    for v in 0..g.n {
        let row: Vec<f64> = facilities.iter().map(|s| linf(&emb.clients[v], s)).collect();
        for (i, &d) in row.iter().enumerate() {
            let ok = match owner[v] {
                Some(o) if o == i => d <= 1.0 && (degree(v) == 0 || d == 1.0),
                _ => d <= 3.0,
            };
            if !ok {
                return Err(Error::InvariantBreach(format!(
                    "vertex {v} at distance {d} from facility {i}"
                )));
            }
        }
        dist.push(row);
    }
    let connection: f64 = dist.iter().map(|r| r.iter().copied().fold(f64::INFINITY, f64::min)).sum();
    let opening = 4.0 * emb.lambda;
    let n = g.n as f64;
    let large_parts = parts.len() == 4 && parts.iter().all(|p| p.len() as f64 >= (1.0 - eps) * n / 4.0);
    let bound = (1.0 + 6.0 * eps) * n;
    let cost = connection + opening;
    if large_parts && cost > bound {
        return Err(Error::CertificateFailure(format!("cost {cost} exceeds (1+6eps)n = {bound}")));
    }
    Ok(Completeness {
        facilities,
        dist,
        connection,
        opening,
        cost,
        large_parts,
        bound,
    })
}

/// Repeatedly matches the lowest remaining edge inside `w` while at least
/// `eps_prime · n` vertices remain. With `no_large_independent_set` the
/// caller asserts that no `eps_prime · n` vertices are independent, which
/// forces the matching to reach `(|w| − eps_prime n) / 2` edges.
pub fn greedy_matching(
    g: &Graph,
    w: &[usize],
    eps_prime: f64,
    no_large_independent_set: bool,
) -> Result<Vec<(usize, usize)>> {
    let mut left: HashSet<usize> = w.iter().copied().collect();
    let floor = eps_prime * g.n as f64;
    let mut matching = Vec::new();
    while left.len() as f64 >= floor && !left.is_empty() {
        let Some(&(u, v)) = g
            .edges
            .iter()
            .find(|(u, v)| left.contains(u) && left.contains(v))
        else {
            break;
        };
        left.remove(&u);
        left.remove(&v);
        matching.push((u, v));
    }
    let need = (w.len() as f64 - floor) / 2.0;
    if no_large_independent_set && (matching.len() as f64) < need {
        return Err(Error::InvariantBreach(format!(
            "matching of {} edges below {need}",
            matching.len()
        )));
    }
    Ok(matching)
}

/// Coordinate-wise median of a point set.
pub fn coordinate_median(points: &[&[f64]]) -> Vec<f64> {
    let dim = points.first().map_or(0, |p| p.len());
    (0..dim)
        .map(|c| {
            let mut col: Vec<f64> = points.iter().map(|p| p[c]).collect();
            col.sort_by(f64::total_cmp);
            let m = col.len();
            if m % 2 == 1 {
                col[m / 2]
            } else {
                (col[m / 2 - 1] + col[m / 2]) / 2.0
            }
        })
        .collect()
}

/// Partial check of the converse bound: the cheapest facility-location cost
/// when facilities may only open at clients, the given extra points, and the
/// coordinate-wise medians of each group and of all clients. Real optima may
/// open anywhere, so this only upper-bounds the true optimum.
pub fn restricted_optimum(emb: &EmbeddedInstance, extra: &[Vec<f64>], groups: &[Vec<usize>]) -> Result<f64> {
    let mut cand = emb.clone();
    cand.extra = extra.to_vec();
    let all: Vec<&[f64]> = emb.clients.iter().map(Vec::as_slice).collect();
    cand.extra.push(coordinate_median(&all));
    for gset in groups.iter().filter(|g| !g.is_empty()) {
        let pts: Vec<&[f64]> = gset.iter().map(|&v| emb.clients[v].as_slice()).collect();
        cand.extra.push(coordinate_median(&pts));
    }
    match exact_solve(&cand.instance()?, &cand.spec())? {
        ExactOutcome::Optimal(r) => Ok(r.value),
        ExactOutcome::Infeasible => Err(Error::InvariantBreach("facility location is always feasible".into())),
    }
}

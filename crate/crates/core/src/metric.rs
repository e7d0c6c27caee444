//! Finite metric instances, problem parameters, rescaling and radius grids.

use std::fmt;

use crate::error::{Error, Result};

/// Relative slack on the triangle inequality, multiplied by the diameter.
pub const TRIANGLE_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    LInf,
}

impl Norm {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            Norm::L1 => diffs.sum(),
            Norm::L2 => diffs.map(|d| d * d).sum::<f64>().sqrt(),
            Norm::LInf => diffs.fold(0.0, f64::max),
        }
    }
}

/// Points with a materialized distance matrix and a client subset.
///
/// Every point id is a candidate center location for the exact oracle; the
/// solvers themselves only ever look at client-to-client distances.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricInstance {
    point_count: usize,
    dist: Vec<f64>,
    clients: Vec<usize>,
}

impl MetricInstance {
    /// Builds an instance from a square matrix. Metric axioms are not checked
    /// here; see [`validate_metric`].
    pub fn new(matrix: Vec<Vec<f64>>, clients: Vec<usize>) -> Result<Self> {
        let point_count = matrix.len();
        if point_count == 0 {
            return Err(Error::InvalidInstance("empty distance matrix".into()));
        }
        let mut dist = Vec::with_capacity(point_count * point_count);
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != point_count {
                return Err(Error::InvalidInstance(format!(
                    "row {i} has {} entries, expected {point_count}",
                    row.len()
                )));
            }
            dist.extend_from_slice(row);
        }
        if clients.is_empty() {
            return Err(Error::InvalidInstance("no clients".into()));
        }
        Ok(Self {
            point_count,
            dist,
            clients,
        })
    }

    /// Materializes pairwise distances of `points` under `norm`.
    pub fn from_points(points: &[Vec<f64>], norm: Norm, clients: Vec<usize>) -> Result<Self> {
        if let Some(dim) = points.first().map(Vec::len) {
            if let Some(i) = points.iter().position(|p| p.len() != dim) {
                return Err(Error::InvalidInstance(format!(
                    "point {i} has dimension {}, expected {dim}",
                    points[i].len()
                )));
            }
        }
        let n = points.len();
        let mut matrix = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let d = norm.distance(&points[i], &points[j]);
                matrix[i][j] = d;
                matrix[j][i] = d;
            }
        }
        Self::new(matrix, clients)
    }

    pub fn point_count(&self) -> usize {
        self.point_count
    }

    /// Number of clients.
    pub fn n(&self) -> usize {
        self.clients.len()
    }

    pub fn clients(&self) -> &[usize] {
        &self.clients
    }

    /// Distance between two point ids.
    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.point_count + j]
    }

    /// Distance between two clients, addressed by client position.
    #[inline]
    pub fn cd(&self, a: usize, b: usize) -> f64 {
        self.dist(self.clients[a], self.clients[b])
    }

    /// Distance from client `a` to point id `x`.
    #[inline]
    pub fn client_to_point(&self, a: usize, x: usize) -> f64 {
        self.dist(self.clients[a], x)
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.dist
            .chunks(self.point_count)
            .map(|r| r.to_vec())
            .collect()
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    pub fn client_diameter(&self) -> f64 {
        let n = self.n();
        let mut best = 0.0f64;
        for a in 0..n {
            for b in a + 1..n {
                best = best.max(self.cd(a, b));
            }
        }
        best
    }

    /// Smallest positive client-to-client distance, if any pair is apart.
    pub fn min_positive_client_distance(&self) -> Option<f64> {
        let n = self.n();
        let mut best: Option<f64> = None;
        for a in 0..n {
            for b in a + 1..n {
                let d = self.cd(a, b);
                if d > 0.0 && best.map_or(true, |m| d < m) {
                    best = Some(d);
                }
            }
        }
        best
    }

    /// Number of distinct client locations (clients at distance 0 coincide).
    pub fn distinct_client_count(&self) -> usize {
        let n = self.n();
        (0..n)
            .filter(|&a| (0..a).all(|b| self.cd(a, b) > 0.0))
            .count()
    }

    /// Multiplies every distance by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            point_count: self.point_count,
            dist: self.dist.iter().map(|d| d * factor).collect(),
            clients: self.clients.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonFinite { i: usize, j: usize },
    Negative { i: usize, j: usize },
    NonZeroDiagonal { i: usize },
    Asymmetry { i: usize, j: usize },
    Triangle { i: usize, j: usize, k: usize },
    ClientOutOfRange { position: usize, id: usize },
    DuplicateClient { id: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFinite { i, j } => write!(f, "non-finite distance at ({i},{j})"),
            Violation::Negative { i, j } => write!(f, "negative distance at ({i},{j})"),
            Violation::NonZeroDiagonal { i } => write!(f, "nonzero self-distance at {i}"),
            Violation::Asymmetry { i, j } => write!(f, "asymmetry at ({i},{j})"),
            Violation::Triangle { i, j, k } => write!(f, "triangle violation ({i},{j},{k})"),
            Violation::ClientOutOfRange { position, id } => {
                write!(f, "client {position} refers to missing point {id}")
            }
            Violation::DuplicateClient { id } => write!(f, "point {id} listed twice as client"),
        }
    }
}

/// Lists every broken metric or client-set invariant; empty means valid.
pub fn validate_metric(inst: &MetricInstance) -> Vec<Violation> {
    let p = inst.point_count();
    let mut out = Vec::new();
    for i in 0..p {
        for j in 0..p {
            let d = inst.dist(i, j);
            if !d.is_finite() {
                out.push(Violation::NonFinite { i, j });
            } else if d < 0.0 {
                out.push(Violation::Negative { i, j });
            }
        }
        if inst.dist(i, i) != 0.0 {
            out.push(Violation::NonZeroDiagonal { i });
        }
        for j in i + 1..p {
            if inst.dist(i, j) != inst.dist(j, i) {
                out.push(Violation::Asymmetry { i, j });
            }
        }
    }
    let tol = TRIANGLE_REL_TOL * inst.diameter();
    for i in 0..p {
        for j in 0..p {
            let dij = inst.dist(i, j);
            for k in 0..p {
                if inst.dist(i, k) > dij + inst.dist(j, k) + tol {
                    // Report each violated triple once, from its lowest index.
                    if i < k {
                        out.push(Violation::Triangle { i, j, k });
                    }
                }
            }
        }
    }
    let mut seen = vec![false; p];
    for (position, &id) in inst.clients().iter().enumerate() {
        if id >= p {
            out.push(Violation::ClientOutOfRange { position, id });
        } else if seen[id] {
            out.push(Violation::DuplicateClient { id });
        } else {
            seen[id] = true;
        }
    }
    out
}

/// The clustering problem to solve and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    /// Uniform opening cost `lambda` per center, no cardinality bound.
    Ufl { lambda: f64 },
    /// k-median where client `v` must have a center within `radii[v]`
    /// (`f64::INFINITY` for no constraint).
    FairKMedian { k: usize, radii: Vec<f64> },
    /// Sum of `p`-th powers of distances with at most `k` centers.
    Kp { k: usize, p: u32 },
    /// Minimize the radius needed to serve `m` clients with `k` centers.
    Kcwo { k: usize, m: usize },
}

impl ProblemSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::Ufl { .. } => "ufl",
            ProblemSpec::FairKMedian { .. } => "fair_kmedian",
            ProblemSpec::Kp { .. } => "kp",
            ProblemSpec::Kcwo { .. } => "kcwo",
        }
    }

    /// Power applied to distances in the objective.
    pub fn power(&self) -> u32 {
        match self {
            ProblemSpec::Kp { p, .. } => *p,
            _ => 1,
        }
    }

    pub fn k(&self) -> Option<usize> {
        match self {
            ProblemSpec::Ufl { .. } => None,
            ProblemSpec::FairKMedian { k, .. }
            | ProblemSpec::Kp { k, .. }
            | ProblemSpec::Kcwo { k, .. } => Some(*k),
        }
    }

    /// Fairness radius of client `v`, infinite when unconstrained.
    pub fn radius(&self, v: usize) -> f64 {
        match self {
            ProblemSpec::FairKMedian { radii, .. } => radii[v],
            _ => f64::INFINITY,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        match self {
            ProblemSpec::Ufl { lambda } => {
                if !lambda.is_finite() || *lambda < 0.0 {
                    return bad(format!("lambda must be finite and nonnegative, got {lambda}"));
                }
            }
            ProblemSpec::FairKMedian { k, radii } => {
                if *k == 0 {
                    return bad("k must be positive".into());
                }
                if radii.len() != n {
                    return bad(format!("{} radii for {n} clients", radii.len()));
                }
                if let Some(v) = radii.iter().position(|r| r.is_nan() || *r < 0.0) {
                    return bad(format!("radius of client {v} must be nonnegative"));
                }
            }
            ProblemSpec::Kp { k, p } => {
                if *k == 0 || *p == 0 {
                    return bad("k and p must be positive".into());
                }
            }
            ProblemSpec::Kcwo { k, m } => {
                if *k == 0 || *m == 0 || *m > n {
                    return bad(format!("need k >= 1 and 1 <= m <= n, got k={k}, m={m}"));
                }
            }
        }
        Ok(())
    }

    /// The same problem after every distance is multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            ProblemSpec::Ufl { lambda } => ProblemSpec::Ufl {
                lambda: lambda * factor,
            },
            ProblemSpec::FairKMedian { k, radii } => ProblemSpec::FairKMedian {
                k: *k,
                radii: radii.iter().map(|r| r * factor).collect(),
            },
            other => other.clone(),
        }
    }

    /// Factor by which objective values change when distances scale by `factor`.
    pub fn cost_scale(&self, factor: f64) -> f64 {
        match self {
            ProblemSpec::Kp { p, .. } => factor.powi(*p as i32),
            _ => factor,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Rescaled {
    pub instance: MetricInstance,
    /// New distances are old distances times `scale`.
    pub scale: f64,
    pub aspect_ratio: f64,
    pub warning: Option<String>,
}

/// Scales distances so the smallest positive client distance becomes 1.
pub fn rescale(inst: &MetricInstance) -> Result<Rescaled> {
    let dmin = inst.min_positive_client_distance().ok_or(Error::AllCoincident)?;
    let scale = 1.0 / dmin;
    let instance = inst.scaled(scale);
    let aspect_ratio = instance.client_diameter();
    let n = inst.n() as f64;
    let warning = (aspect_ratio > n.powi(3)).then(|| {
        let msg = format!("aspect ratio {aspect_ratio:e} exceeds n^3 = {}", n.powi(3));
        log::warn!("{msg}");
        msg
    });
    Ok(Rescaled {
        instance,
        scale,
        aspect_ratio,
        warning,
    })
}

/// Mesh refinement settings for [`build_grid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub eps_grid: f64,
    pub eps_abs: f64,
    /// When false only structural radii are kept.
    pub mesh: bool,
}

impl GridConfig {
    /// Default mesh `1/n^2` for both the relative and the absolute step.
    pub fn new(n: usize) -> Self {
        let eps = 1.0 / (n.max(1) as f64).powi(2);
        Self {
            eps_grid: eps,
            eps_abs: eps,
            mesh: true,
        }
    }

    pub fn without_mesh(mut self) -> Self {
        self.mesh = false;
        self
    }
}

/// Per-client strictly increasing radii starting at 0 and ending at `r_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusGrid {
    radii: Vec<Vec<f64>>,
    r_max: Vec<f64>,
}

impl RadiusGrid {
    pub fn from_parts(radii: Vec<Vec<f64>>, r_max: Vec<f64>) -> Self {
        Self { radii, r_max }
    }

    pub fn radii(&self, v: usize) -> &[f64] {
        &self.radii[v]
    }

    pub fn r_max(&self, v: usize) -> f64 {
        self.r_max[v]
    }

    pub fn clients(&self) -> usize {
        self.radii.len()
    }

    /// Total number of (client, radius) pairs.
    pub fn total_len(&self) -> usize {
        self.radii.iter().map(Vec::len).sum()
    }

    /// Position of `radius` in the grid of `v`, tolerating relative rounding
    /// noise of 1e-12.
    pub fn index_of(&self, v: usize, radius: f64) -> Option<usize> {
        let r = &self.radii[v];
        let pos = r.partition_point(|&x| x < radius);
        let tol = 1e-12 * radius.abs().max(1.0);
        [pos.checked_sub(1), Some(pos)]
            .into_iter()
            .flatten()
            .filter(|&i| i < r.len() && (r[i] - radius).abs() <= tol)
            .min_by(|&a, &b| (r[a] - radius).abs().total_cmp(&(r[b] - radius).abs()))
    }

    pub fn require(&self, v: usize, radius: f64) -> Result<usize> {
        self.index_of(v, radius)
            .ok_or(Error::GridMissingRadius { client: v, radius })
    }

    /// Index of the smallest grid radius that is at least `radius`.
    pub fn ceil_index(&self, v: usize, radius: f64) -> Option<usize> {
        if let Some(i) = self.index_of(v, radius) {
            return Some(i);
        }
        let r = &self.radii[v];
        let pos = r.partition_point(|&x| x < radius);
        (pos < r.len()).then_some(pos)
    }

    /// Largest consecutive gap in the grid of `v` among radii up to `limit`.
    pub fn max_gap_below(&self, v: usize, limit: f64) -> f64 {
        self.radii[v]
            .windows(2)
            .filter(|w| w[1] <= limit)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    pub fn max_gap(&self) -> f64 {
        (0..self.clients())
            .map(|v| self.max_gap_below(v, f64::INFINITY))
            .fold(0.0, f64::max)
    }
}

/// Largest radius any LP variable of client `v` needs.
///
/// For sum objectives every member of an optimal cluster is within twice the
/// client diameter of its center: otherwise moving the center onto any member
/// improves every member. For facility location an optimal connection never
/// exceeds the opening cost either, since opening at the client itself is
/// allowed.
pub fn r_max_for(inst: &MetricInstance, spec: &ProblemSpec) -> Vec<f64> {
    let n = inst.n();
    let two_diam = 2.0 * inst.client_diameter();
    match spec {
        ProblemSpec::Ufl { lambda } => vec![lambda.min(two_diam); n],
        ProblemSpec::FairKMedian { radii, .. } => radii
            .iter()
            .map(|&r| if r.is_finite() { two_diam.max(r) } else { two_diam })
            .collect(),
        ProblemSpec::Kp { .. } => vec![two_diam; n],
        ProblemSpec::Kcwo { .. } => {
            let mut top = 0.0f64;
            for v in 0..n {
                for x in 0..inst.point_count() {
                    top = top.max(inst.client_to_point(v, x));
                }
            }
            vec![2.0 * top; n]
        }
    }
}

/// Relative amount by which rep balls of the capped filters sit below the
/// half distance to the nearest other rep. Closed balls at exactly half the
/// distance share their boundary, and an integral center there lies in both.
pub const BALL_SHRINK: f64 = 1e-7;

/// Rep ball radius for half distance `a`.
pub fn shrunk_half(a: f64) -> f64 {
    a * (1.0 - BALL_SHRINK)
}

/// Builds the radius grid: structural radii (client distances, half
/// distances, fairness radii, `extra`), clipped to `R_max(v)`, then refined so
/// consecutive radii satisfy `next <= (1 + eps_grid) * prev + eps_abs`.
pub fn build_grid(
    inst: &MetricInstance,
    spec: &ProblemSpec,
    cfg: &GridConfig,
    extra: &[f64],
) -> RadiusGrid {
    build_grid_with_r_max(inst, spec, cfg, extra, r_max_for(inst, spec))
}

/// [`build_grid`] with explicit per-client truncation radii.
pub fn build_grid_with_r_max(
    inst: &MetricInstance,
    spec: &ProblemSpec,
    cfg: &GridConfig,
    extra: &[f64],
    r_max: Vec<f64>,
) -> RadiusGrid {
    let n = inst.n();
    // Capped filters use shrunk rep balls, so they get shrunk half distances
    // in place of the exact ones.
    let capped = matches!(spec, ProblemSpec::FairKMedian { .. } | ProblemSpec::Kp { .. });
    let half = |d: f64| if capped { shrunk_half(d / 2.0) } else { d / 2.0 };
    let mut shared = Vec::with_capacity(n * n + extra.len());
    let mut halves = Vec::with_capacity(n * n / 2 + n);
    for a in 0..n {
        for b in a..n {
            let d = inst.cd(a, b);
            shared.push(d);
            halves.push(half(d));
        }
    }
    halves.sort_by(f64::total_cmp);
    halves.dedup();
    shared.extend_from_slice(&halves);
    shared.extend_from_slice(extra);
    let radii = (0..n)
        .map(|v| {
            let top = r_max[v];
            let mut rs: Vec<f64> = shared.iter().copied().filter(|&r| r <= top).collect();
            rs.push(0.0);
            rs.push(top);
            let rv = spec.radius(v);
            if rv.is_finite() && rv <= top {
                rs.push(rv);
            }
            rs.sort_by(f64::total_cmp);
            rs.dedup();
            if capped {
                rs = drop_near_shrunk(rs, &halves, [top, rv]);
            }
            if cfg.mesh {
                refine(&rs, cfg)
            } else {
                rs
            }
        })
        .collect();
    RadiusGrid { radii, r_max }
}

/// Drops a radius lying just above a shrunk half distance, unless `keep`
/// names it. Such pairs differ by `BALL_SHRINK` and make the LP ill
/// conditioned.
fn drop_near_shrunk(rs: Vec<f64>, halves: &[f64], keep: [f64; 2]) -> Vec<f64> {
    let is_half = |r: f64| halves.binary_search_by(|x| x.total_cmp(&r)).is_ok();
    let mut out: Vec<f64> = Vec::with_capacity(rs.len());
    for r in rs {
        let close = out
            .last()
            .is_some_and(|&s| is_half(s) && r <= s * (1.0 + 2.0 * BALL_SHRINK));
        if !close || keep.contains(&r) || is_half(r) {
            out.push(r);
        }
    }
    out
}

fn refine(rs: &[f64], cfg: &GridConfig) -> Vec<f64> {
    let mut out = Vec::with_capacity(rs.len() * 4);
    out.push(rs[0]);
    for &next in &rs[1..] {
        let mut cur = *out.last().unwrap();
        loop {
            let step = cur * (1.0 + cfg.eps_grid) + cfg.eps_abs;
            if step >= next {
                break;
            }
            out.push(step);
            cur = step;
        }
        out.push(next);
    }
    out
}

//! LP model: ball and cost variables, base constraint families, disjoint-ball
//! cuts, the constraint pool, and the simplex backend.

use std::fmt::Write as _;

use indexmap::IndexMap;
use microlp::{ComparisonOp, OptimizationDirection, Problem, Solution, Variable};

use crate::error::{Error, Result};
use crate::metric::{MetricInstance, ProblemSpec, RadiusGrid};

/// Feasibility tolerance on LP points, relative to the magnitude of the row.
pub const TAU_LP: f64 = 1e-7;
/// A cut is only admitted when violated by more than this.
pub const TAU_CUT: f64 = 1e-6;
/// Relative margin by which computed distances must exceed a radius sum for
/// two closed balls to count as disjoint. Exact ties come back one ulp apart.
pub const SEPARATION_TOL: f64 = 1e-12;

/// Whether closed balls of radii `ra` and `rb` at distance `d` are disjoint
/// with margin `SEPARATION_TOL`.
pub fn balls_apart(d: f64, ra: f64, rb: f64) -> bool {
    d > (ra + rb) * (1.0 + SEPARATION_TOL)
}
/// LP values this close to 0 or 1 are snapped.
const SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarIndex {
    /// Connection cost of a client (its `p`-th power for powered objectives).
    Cost(usize),
    /// Ball mass of a client at the grid radius with this index.
    Ball(usize, usize),
    /// Coverage of a client (outlier problems only).
    Cov(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
}

/// Anything that assigns values to LP variables.
pub trait PointValues {
    fn value(&self, var: VarIndex) -> f64;
}

/// `Σ coeff·var  (<= | >=)  rhs + budget·opt_g`.
///
/// Rows that mention the budget are parametric in the guess `opt_g`, so one
/// pool serves every guess.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub terms: Vec<(VarIndex, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub budget: f64,
    pub tag: String,
}

impl LinearConstraint {
    pub fn new(terms: Vec<(VarIndex, f64)>, sense: Sense, rhs: f64, tag: impl Into<String>) -> Self {
        Self {
            terms,
            sense,
            rhs,
            budget: 0.0,
            tag: tag.into(),
        }
    }

    pub fn with_budget(mut self, budget: f64) -> Self {
        self.budget = budget;
        self
    }

    pub fn rhs_at(&self, opt_g: f64) -> f64 {
        self.rhs + self.budget * opt_g
    }

    pub fn lhs(&self, point: &impl PointValues) -> f64 {
        self.terms.iter().map(|&(v, c)| c * point.value(v)).sum()
    }

    /// Signed violation: positive when the point breaks the row.
    pub fn violation(&self, point: &impl PointValues, opt_g: f64) -> f64 {
        let diff = self.lhs(point) - self.rhs_at(opt_g);
        match self.sense {
            Sense::Le => diff,
            Sense::Ge => -diff,
        }
    }

    /// Magnitude used to make the feasibility tolerance relative.
    pub fn magnitude(&self, point: &impl PointValues, opt_g: f64) -> f64 {
        let lhs: f64 = self
            .terms
            .iter()
            .map(|&(v, c)| (c * point.value(v)).abs())
            .sum();
        lhs.max(self.rhs_at(opt_g).abs()).max(1.0)
    }

    pub fn satisfied_by(&self, point: &impl PointValues, opt_g: f64) -> bool {
        self.violation(point, opt_g) <= TAU_LP * self.magnitude(point, opt_g)
    }
}

/// An LP point: per-client cost, ball masses by grid index, coverage.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalSolution {
    pub cost: Vec<f64>,
    pub ball: Vec<Vec<f64>>,
    pub cov: Vec<f64>,
    pub objective: f64,
}

impl FractionalSolution {
    /// Ball mass of `v` at grid index `idx`.
    pub fn y(&self, v: usize, idx: usize) -> f64 {
        self.ball[v][idx]
    }

    pub fn y_at(&self, grid: &RadiusGrid, v: usize, radius: f64) -> Result<f64> {
        Ok(self.ball[v][grid.require(v, radius)?])
    }

    pub fn total_cost(&self) -> f64 {
        self.cost.iter().sum()
    }

    /// The point induced by an integral solution: `cost[v] = d(v,S)^p`,
    /// ball masses are indicators of `d(v,S) <= radius`, and `covered` marks
    /// served clients.
    pub fn induced(grid: &RadiusGrid, dist_to_centers: &[f64], p: u32, covered: &[bool]) -> Self {
        let ball = dist_to_centers
            .iter()
            .enumerate()
            .map(|(v, &d)| {
                grid.radii(v)
                    .iter()
                    .map(|&r| if d <= r { 1.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        Self {
            cost: dist_to_centers.iter().map(|d| d.powi(p as i32)).collect(),
            ball,
            cov: covered.iter().map(|&c| if c { 1.0 } else { 0.0 }).collect(),
            objective: 0.0,
        }
    }
}

impl PointValues for FractionalSolution {
    fn value(&self, var: VarIndex) -> f64 {
        match var {
            VarIndex::Cost(v) => self.cost.get(v).copied().unwrap_or(0.0),
            VarIndex::Ball(v, i) => self.ball[v][i],
            VarIndex::Cov(v) => self.cov.get(v).copied().unwrap_or(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CutFamily {
    UflAlpha,
    Fair,
    Kcwo,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub client: usize,
    pub radius: f64,
}

/// Canonical identity of a cut: family plus sorted (client, radius bits).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CutKey(pub CutFamily, pub Vec<(usize, u64)>);

/// A disjoint-ball constraint.
///
/// `UflAlpha` reads `lambda·Σ y(j,ρ_j) + Σ_v C_v <= opt_g`; `Fair` and `Kcwo`
/// read `Σ y(j,ρ_j) <= k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SepCut {
    pub family: CutFamily,
    pub balls: Vec<Ball>,
    pub lambda: f64,
    pub k: usize,
}

impl SepCut {
    pub fn ufl(inst: &MetricInstance, balls: Vec<Ball>, lambda: f64) -> Result<Self> {
        Self::build(inst, CutFamily::UflAlpha, balls, lambda, 0)
    }

    pub fn fair(inst: &MetricInstance, balls: Vec<Ball>, k: usize) -> Result<Self> {
        Self::build(inst, CutFamily::Fair, balls, 0.0, k)
    }

    pub fn kcwo(inst: &MetricInstance, balls: Vec<Ball>, k: usize) -> Result<Self> {
        Self::build(inst, CutFamily::Kcwo, balls, 0.0, k)
    }

    /// Checks pairwise disjointness. The coverage filter separates reps by
    /// the exact radius sum, since its radius bound has no slack.
    fn build(
        inst: &MetricInstance,
        family: CutFamily,
        mut balls: Vec<Ball>,
        lambda: f64,
        k: usize,
    ) -> Result<Self> {
        balls.sort_by(|a, b| a.client.cmp(&b.client).then(a.radius.total_cmp(&b.radius)));
        for (i, a) in balls.iter().enumerate() {
            for b in &balls[i + 1..] {
                let d = inst.cd(a.client, b.client);
                let apart = match family {
                    CutFamily::Kcwo => d > a.radius + b.radius,
                    _ => balls_apart(d, a.radius, b.radius),
                };
                if !apart {
                    return Err(Error::OverlappingBalls {
                        a: a.client,
                        b: b.client,
                    });
                }
            }
        }
        Ok(Self {
            family,
            balls,
            lambda,
            k,
        })
    }

    pub fn key(&self) -> CutKey {
        CutKey(
            self.family,
            self.balls
                .iter()
                .map(|b| (b.client, b.radius.to_bits()))
                .collect(),
        )
    }

    pub fn to_constraint(&self, grid: &RadiusGrid, n: usize) -> Result<LinearConstraint> {
        let coeff = match self.family {
            CutFamily::UflAlpha => self.lambda,
            _ => 1.0,
        };
        let mut terms = Vec::with_capacity(self.balls.len() + n);
        for b in &self.balls {
            terms.push((VarIndex::Ball(b.client, grid.require(b.client, b.radius)?), coeff));
        }
        let tag = match self.family {
            CutFamily::UflAlpha => "cut_ufl",
            CutFamily::Fair => "cut_fair",
            CutFamily::Kcwo => "cut_kcwo",
        };
        Ok(match self.family {
            CutFamily::UflAlpha => {
                terms.extend((0..n).map(|v| (VarIndex::Cost(v), 1.0)));
                LinearConstraint::new(terms, Sense::Le, 0.0, tag).with_budget(1.0)
            }
            _ => LinearConstraint::new(terms, Sense::Le, self.k as f64, tag),
        })
    }

    /// Signed violation of this cut by `sol` at guess `opt_g`.
    pub fn violation(&self, sol: &FractionalSolution, grid: &RadiusGrid, opt_g: f64) -> Result<f64> {
        let mut ysum = 0.0;
        for b in &self.balls {
            ysum += sol.y_at(grid, b.client, b.radius)?;
        }
        Ok(match self.family {
            CutFamily::UflAlpha => self.lambda * ysum + sol.total_cost() - opt_g,
            _ => ysum - self.k as f64,
        })
    }

    /// Violation a cut must exceed before it is admitted.
    pub fn admission_threshold(&self, opt_g: f64) -> f64 {
        match self.family {
            CutFamily::UflAlpha => TAU_CUT * opt_g.abs().max(1.0),
            _ => TAU_CUT,
        }
    }
}

/// Signed violation of `cut` by `sol`.
pub fn check_cut_violated(
    sol: &FractionalSolution,
    cut: &SepCut,
    grid: &RadiusGrid,
    opt_g: f64,
) -> Result<f64> {
    cut.violation(sol, grid, opt_g)
}

/// Column layout of the LP.
#[derive(Debug, Clone, PartialEq)]
pub struct VarLayout {
    pub n: usize,
    pub has_cost: bool,
    pub has_cov: bool,
    offsets: Vec<usize>,
    total: usize,
}

impl VarLayout {
    pub fn new(grid: &RadiusGrid, has_cost: bool, has_cov: bool) -> Self {
        let n = grid.clients();
        let mut offsets = Vec::with_capacity(n);
        let mut next = if has_cost { n } else { 0 };
        for v in 0..n {
            offsets.push(next);
            next += grid.radii(v).len();
        }
        let total = next + if has_cov { n } else { 0 };
        Self {
            n,
            has_cost,
            has_cov,
            offsets,
            total,
        }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn column(&self, var: VarIndex) -> usize {
        match var {
            VarIndex::Cost(v) => v,
            VarIndex::Ball(v, i) => self.offsets[v] + i,
            VarIndex::Cov(v) => self.total - self.n + v,
        }
    }

    fn ball_len(&self, v: usize) -> usize {
        let end = if v + 1 < self.n {
            self.offsets[v + 1]
        } else if self.has_cov {
            self.total - self.n
        } else {
            self.total
        };
        end - self.offsets[v]
    }

    fn bounds(&self, col: usize) -> (f64, f64) {
        let ball_start = if self.has_cost { self.n } else { 0 };
        if col < ball_start {
            (0.0, f64::INFINITY)
        } else {
            (0.0, 1.0)
        }
    }
}

/// Base rows plus the deduplicated cut set.
#[derive(Debug, Clone)]
pub struct ConstraintPool {
    layout: VarLayout,
    base: Vec<LinearConstraint>,
    cuts: IndexMap<CutKey, SepCut>,
    cut_rows: Vec<LinearConstraint>,
}

impl ConstraintPool {
    pub fn new(layout: VarLayout) -> Self {
        Self {
            layout,
            base: Vec::new(),
            cuts: IndexMap::new(),
            cut_rows: Vec::new(),
        }
    }

    pub fn layout(&self) -> &VarLayout {
        &self.layout
    }

    pub fn push_base(&mut self, row: LinearConstraint) {
        self.base.push(row);
    }

    pub fn base(&self) -> &[LinearConstraint] {
        &self.base
    }

    pub fn cuts(&self) -> impl Iterator<Item = &SepCut> {
        self.cuts.values()
    }

    pub fn cut_count(&self) -> usize {
        self.cuts.len()
    }

    pub fn len(&self) -> usize {
        self.base.len() + self.cut_rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, cut: &SepCut) -> bool {
        self.cuts.contains_key(&cut.key())
    }

    /// Adds a cut; returns false (and changes nothing) when its key is known.
    pub fn insert_cut(&mut self, cut: SepCut, grid: &RadiusGrid) -> Result<bool> {
        let key = cut.key();
        if self.cuts.contains_key(&key) {
            return Ok(false);
        }
        self.cut_rows.push(cut.to_constraint(grid, self.layout.n)?);
        self.cuts.insert(key, cut);
        Ok(true)
    }

    /// All rows, base first, then cuts in insertion order.
    pub fn rows(&self) -> impl Iterator<Item = &LinearConstraint> {
        self.base.iter().chain(self.cut_rows.iter())
    }

    fn row(&self, i: usize) -> &LinearConstraint {
        if i < self.base.len() {
            &self.base[i]
        } else {
            &self.cut_rows[i - self.base.len()]
        }
    }

    pub fn uses_budget(&self) -> bool {
        self.rows().any(|r| r.budget != 0.0)
    }

    /// Rows violated by `point` beyond the relative tolerance.
    pub fn violations<'a>(
        &'a self,
        point: &'a impl PointValues,
        opt_g: f64,
    ) -> impl Iterator<Item = (&'a LinearConstraint, f64)> + 'a {
        self.rows().filter_map(move |r| {
            (!r.satisfied_by(point, opt_g)).then(|| (r, r.violation(point, opt_g)))
        })
    }

    /// One row per line: `tag: Σ coeff·var <= rhs`.
    pub fn dump(&self, grid: &RadiusGrid, opt_g: f64) -> String {
        let mut out = String::new();
        for row in self.rows() {
            let _ = write!(out, "{}:", row.tag);
            for (i, &(var, c)) in row.terms.iter().enumerate() {
                let name = match var {
                    VarIndex::Cost(v) => format!("C({v})"),
                    VarIndex::Ball(v, t) => format!("y({v},{})", grid.radii(v)[t]),
                    VarIndex::Cov(v) => format!("cov({v})"),
                };
                let sep = if i == 0 { " " } else { " + " };
                let _ = write!(out, "{sep}{c}·{name}");
            }
            let op = match row.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
            };
            let _ = writeln!(out, " {op} {}", row.rhs_at(opt_g));
        }
        out
    }
}

/// Builds the per-kind base rows.
///
/// Every kind gets monotonicity along each client's grid. Sum objectives add
/// the right-endpoint discretized integral row
/// `Σ_t (ρ_{t+1}^p − ρ_t^p)(1 − y(v,ρ_{t+1})) <= U_v`, an anchoring row, and the
/// parametric budget `Σ U_v <= opt_g`. Fair instances add `y(v,r(v)) >= 1` and
/// one containment row per ordered client pair. Outlier instances link ball
/// mass at `opt_g` to coverage and demand `Σ cov >= m`.
pub fn build_base(
    inst: &MetricInstance,
    spec: &ProblemSpec,
    grid: &RadiusGrid,
    opt_g: f64,
) -> Result<ConstraintPool> {
    let n = inst.n();
    let is_kcwo = matches!(spec, ProblemSpec::Kcwo { .. });
    let layout = VarLayout::new(grid, !is_kcwo, is_kcwo);
    let mut pool = ConstraintPool::new(layout);
    let p = spec.power() as i32;

    for v in 0..n {
        let rs = grid.radii(v);
        for t in 0..rs.len().saturating_sub(1) {
            pool.push_base(LinearConstraint::new(
                vec![(VarIndex::Ball(v, t), 1.0), (VarIndex::Ball(v, t + 1), -1.0)],
                Sense::Le,
                0.0,
                "mono",
            ));
        }
    }

    if let ProblemSpec::Kcwo { m, .. } = spec {
        for v in 0..n {
            let g = grid.require(v, opt_g)?;
            pool.push_base(LinearConstraint::new(
                vec![(VarIndex::Ball(v, g), 1.0), (VarIndex::Cov(v), -1.0)],
                Sense::Ge,
                0.0,
                "cover",
            ));
        }
        pool.push_base(LinearConstraint::new(
            (0..n).map(|v| (VarIndex::Cov(v), 1.0)).collect(),
            Sense::Ge,
            *m as f64,
            "outliers",
        ));
        return Ok(pool);
    }

    for v in 0..n {
        let rs = grid.radii(v);
        let mut terms = Vec::with_capacity(rs.len());
        let mut total = 0.0;
        for t in 0..rs.len() - 1 {
            let c = rs[t + 1].powi(p) - rs[t].powi(p);
            total += c;
            terms.push((VarIndex::Ball(v, t + 1), c));
        }
        if !terms.is_empty() {
            terms.push((VarIndex::Cost(v), 1.0));
            pool.push_base(LinearConstraint::new(terms, Sense::Ge, total, "integral"));
        }
        let anchor = match spec {
            ProblemSpec::FairKMedian { radii, .. } if radii[v].is_finite() => {
                grid.require(v, radii[v])?
            }
            _ => rs.len() - 1,
        };
        pool.push_base(LinearConstraint::new(
            vec![(VarIndex::Ball(v, anchor), 1.0)],
            Sense::Ge,
            1.0,
            "anchor",
        ));
    }

    if let ProblemSpec::FairKMedian { radii, .. } = spec {
        for v in 0..n {
            if !radii[v].is_finite() {
                continue;
            }
            let rv = grid.require(v, radii[v])?;
            for u in 0..n {
                if u == v {
                    continue;
                }
                let need = inst.cd(u, v) + radii[v];
                let rs = grid.radii(u);
                let pos = rs.partition_point(|&x| x < need);
                if pos < rs.len() {
                    pool.push_base(LinearConstraint::new(
                        vec![(VarIndex::Ball(u, pos), 1.0), (VarIndex::Ball(v, rv), -1.0)],
                        Sense::Ge,
                        0.0,
                        "pair",
                    ));
                }
            }
        }
    }

    pool.push_base(
        LinearConstraint::new(
            (0..n).map(|v| (VarIndex::Cost(v), 1.0)).collect(),
            Sense::Le,
            0.0,
            "budget",
        )
        .with_budget(1.0),
    );
    Ok(pool)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// Minimize the sum of cost variables.
    MinCost,
    /// Any feasible point.
    Feasibility,
    /// Minimize an arbitrary linear function.
    Custom(Vec<(VarIndex, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Feasible(FractionalSolution),
    Infeasible,
}

/// One-shot solve of `pool` at guess `opt_g`.
pub fn solve_lp(pool: &ConstraintPool, objective: &Objective, opt_g: f64) -> Result<LpOutcome> {
    match LpSession::start(pool, objective, opt_g)? {
        (_, LpOutcome::Infeasible) => Ok(LpOutcome::Infeasible),
        (_, out) => Ok(out),
    }
}

/// A simplex basis kept alive across cut insertions and guess changes.
///
/// The guess enters as a fixed column, so moving it and appending cuts are
/// both warm dual-simplex re-solves.
pub struct LpSession {
    layout: VarLayout,
    objective: Objective,
    vars: Vec<Variable>,
    budget_var: Option<Variable>,
    state: Option<Solution>,
    loaded: usize,
    budget: f64,
}

/// Value the budget column is pinned to. The backend misreports
/// infeasibility when the guess equals the LP optimum exactly, so the column
/// gets a slack far below the verification tolerance.
fn budget_value(opt_g: f64) -> f64 {
    opt_g + 1e-9 * opt_g.abs().max(1.0)
}

fn backend_error(e: microlp::Error) -> Error {
    Error::NumericalFailure(e.to_string())
}

fn objective_vector(layout: &VarLayout, objective: &Objective) -> Vec<f64> {
    let mut obj = vec![0.0; layout.total()];
    match objective {
        Objective::MinCost if layout.has_cost => {
            for c in obj.iter_mut().take(layout.n) {
                *c = 1.0;
            }
        }
        Objective::Custom(terms) => {
            for &(v, c) in terms {
                obj[layout.column(v)] += c;
            }
        }
        _ => {}
    }
    obj
}

/// LP point from column values, snapping ball and coverage masses near 0
/// or 1.
fn read_point(l: &VarLayout, val: impl Fn(usize) -> f64, objective: f64) -> FractionalSolution {
    let unit = |x: f64| {
        if x.abs() <= SNAP {
            0.0
        } else if (x - 1.0).abs() <= SNAP {
            1.0
        } else {
            x.clamp(0.0, 1.0)
        }
    };
    let cost = if l.has_cost {
        (0..l.n).map(|v| val(v).max(0.0)).collect()
    } else {
        Vec::new()
    };
    let ball = (0..l.n)
        .map(|v| {
            (0..l.ball_len(v))
                .map(|i| unit(val(l.column(VarIndex::Ball(v, i)))))
                .collect()
        })
        .collect();
    let cov = if l.has_cov {
        (0..l.n).map(|v| unit(val(l.column(VarIndex::Cov(v))))).collect()
    } else {
        Vec::new()
    };
    FractionalSolution {
        cost,
        ball,
        cov,
        objective,
    }
}

/// Cold solve with the interior-point backend, for pools on which the
/// simplex runs into a singular basis. The budget column is substituted by
/// its pinned value.
fn solve_interior(pool: &ConstraintPool, layout: &VarLayout, obj: &[f64], opt_g: f64) -> Result<LpOutcome> {
    use clarabel::algebra::CscMatrix;
    use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus};

    let cols = layout.total();
    let g = budget_value(opt_g);
    let (mut ri, mut ci, mut vals, mut rhs) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for row in pool.rows() {
        let sign = match row.sense {
            Sense::Le => 1.0,
            Sense::Ge => -1.0,
        };
        let r = rhs.len();
        for &(v, c) in &row.terms {
            ri.push(r);
            ci.push(layout.column(v));
            vals.push(sign * c);
        }
        rhs.push(sign * (row.rhs + row.budget * g));
    }
    for col in 0..cols {
        let (lo, hi) = layout.bounds(col);
        if hi.is_finite() {
            ri.push(rhs.len());
            ci.push(col);
            vals.push(1.0);
            rhs.push(hi);
        }
        if lo.is_finite() {
            ri.push(rhs.len());
            ci.push(col);
            vals.push(-1.0);
            rhs.push(-lo);
        }
    }
    let m = rhs.len();
    let a = CscMatrix::new_from_triplets(m, cols, ri, ci, vals);
    let p = CscMatrix::<f64>::zeros((cols, cols));
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .build()
        .map_err(|e| Error::NumericalFailure(e.to_string()))?;
    let mut solver = DefaultSolver::new(&p, obj, &a, &rhs, &[NonnegativeConeT(m)], settings)
        .map_err(|e| Error::NumericalFailure(e.to_string()))?;
    solver.solve();
    match solver.solution.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => {}
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            return Ok(LpOutcome::Infeasible)
        }
        other => return Err(Error::NumericalFailure(format!("interior point: {other:?}"))),
    }
    let x = &solver.solution.x;
    let point = read_point(layout, |col| x[col], solver.solution.obj_val);
    if let Some((row, viol)) = pool.violations(&point, opt_g).next() {
        return Err(Error::NumericalFailure(format!(
            "interior point violates a {} row by {viol:e}",
            row.tag
        )));
    }
    Ok(LpOutcome::Feasible(point))
}

fn add_row(
    problem_vars: &[Variable],
    layout: &VarLayout,
    budget_var: Option<Variable>,
    row: &LinearConstraint,
) -> (Vec<(Variable, f64)>, ComparisonOp, f64) {
    let mut expr: Vec<(Variable, f64)> = row
        .terms
        .iter()
        .map(|&(v, c)| (problem_vars[layout.column(v)], c))
        .collect();
    if row.budget != 0.0 {
        expr.push((budget_var.expect("budget column"), -row.budget));
    }
    let op = match row.sense {
        Sense::Le => ComparisonOp::Le,
        Sense::Ge => ComparisonOp::Ge,
    };
    (expr, op, row.rhs)
}

impl LpSession {
    /// Cold-solves `pool` at `opt_g`. On infeasibility no session survives.
    pub fn start(
        pool: &ConstraintPool,
        objective: &Objective,
        opt_g: f64,
    ) -> Result<(Option<Self>, LpOutcome)> {
        let layout = pool.layout().clone();
        let obj = objective_vector(&layout, objective);
        // The budget column is solved free and then fixed: created fixed, the
        // backend rejects a guess equal to the LP optimum. Fixing after the
        // solve can hit a singular basis, and then the fixed-column problem
        // is solved instead.
        let build = |fixed: Option<f64>| {
            let mut problem = Problem::new(OptimizationDirection::Minimize);
            let vars: Vec<Variable> = (0..layout.total())
                .map(|col| problem.add_var(obj[col], layout.bounds(col)))
                .collect();
            let budget_var = pool
                .uses_budget()
                .then(|| problem.add_var(0.0, fixed.map_or((0.0, f64::INFINITY), |b| (b, b))));
            for row in pool.rows() {
                let (expr, op, rhs) = add_row(&vars, &layout, budget_var, row);
                problem.add_constraint(expr.as_slice(), op, rhs);
            }
            (problem, vars, budget_var)
        };
        let simplex = || -> Result<Option<(Solution, Vec<Variable>, Option<Variable>)>> {
            let (problem, vars, budget_var) = build(None);
            let state = match problem.solve() {
                Ok(outcome) => into_solution(outcome)?,
                Err(microlp::Error::Infeasible) => return Ok(None),
                Err(e) => return Err(backend_error(e)),
            };
            let Some(b) = budget_var else {
                return Ok(Some((state, vars, None)));
            };
            match state.fix_var(b, budget_value(opt_g)) {
                Ok(o) => Ok(Some((into_solution(o)?, vars, budget_var))),
                Err(microlp::Error::Infeasible) => Ok(None),
                Err(_) => {
                    let (problem, vars, budget_var) = build(Some(budget_value(opt_g)));
                    match problem.solve() {
                        Ok(outcome) => Ok(Some((into_solution(outcome)?, vars, budget_var))),
                        Err(microlp::Error::Infeasible) => Ok(None),
                        Err(e) => Err(backend_error(e)),
                    }
                }
            }
        };
        let interior = || solve_interior(pool, &layout, &obj, opt_g).map(|out| (None, out));
        let (state, vars, budget_var) = match simplex() {
            Ok(Some(found)) => found,
            Ok(None) => return Ok((None, LpOutcome::Infeasible)),
            Err(Error::NumericalFailure(_)) => return interior(),
            Err(e) => return Err(e),
        };
        let session = Self {
            layout: layout.clone(),
            objective: objective.clone(),
            vars,
            budget_var,
            state: Some(state),
            loaded: pool.len(),
            budget: opt_g,
        };
        let point = session.extract();
        if session.verify(pool, &point, opt_g).is_err() {
            return interior();
        }
        Ok((Some(session), LpOutcome::Feasible(point)))
    }

    /// Brings the session in line with `pool` (new cut rows) at `opt_g`.
    ///
    /// On infeasibility the session keeps its last feasible basis so a later
    /// call with a larger guess can continue warm.
    pub fn sync(&mut self, pool: &ConstraintPool, opt_g: f64) -> Result<LpOutcome> {
        match self.warm(pool, opt_g) {
            Ok(Some(out)) => return Ok(out),
            Ok(None) | Err(Error::NumericalFailure(_)) => {}
            Err(e) => return Err(e),
        }
        // Warm re-solves drifted or broke down; fall back to a cold solve of
        // the full pool.
        match Self::start(pool, &self.objective, opt_g)? {
            (Some(fresh), out) => {
                *self = fresh;
                Ok(out)
            }
            (None, out) => Ok(out),
        }
    }

    /// Warm fix of the budget and warm row additions. `None` when the
    /// resulting point fails verification.
    fn warm(&mut self, pool: &ConstraintPool, opt_g: f64) -> Result<Option<LpOutcome>> {
        let mut st = self.state.clone().expect("session state");
        if opt_g != self.budget {
            if let Some(b) = self.budget_var {
                st = match st.fix_var(b, budget_value(opt_g)) {
                    Ok(o) => into_solution(o)?,
                    Err(microlp::Error::Infeasible) => return Ok(Some(LpOutcome::Infeasible)),
                    Err(e) => return Err(backend_error(e)),
                };
            }
        }
        for i in self.loaded..pool.len() {
            let (expr, op, rhs) = add_row(&self.vars, &self.layout, self.budget_var, pool.row(i));
            st = match st.add_constraint(expr.as_slice(), op, rhs) {
                Ok(o) => into_solution(o)?,
                Err(microlp::Error::Infeasible) => return Ok(Some(LpOutcome::Infeasible)),
                Err(e) => return Err(backend_error(e)),
            };
        }
        self.state = Some(st);
        self.loaded = pool.len();
        self.budget = opt_g;
        let point = self.extract();
        Ok(self
            .verify(pool, &point, opt_g)
            .is_ok()
            .then_some(LpOutcome::Feasible(point)))
    }

    fn extract(&self) -> FractionalSolution {
        let st = self.state.as_ref().expect("session state");
        read_point(&self.layout, |col| st.var_value(self.vars[col]), st.objective())
    }

    fn verify(&self, pool: &ConstraintPool, point: &FractionalSolution, opt_g: f64) -> Result<()> {
        if let Some((row, viol)) = pool.violations(point, opt_g).next() {
            return Err(Error::NumericalFailure(format!(
                "LP point violates a {} row by {viol:e}",
                row.tag
            )));
        }
        Ok(())
    }
}

fn into_solution(o: microlp::SolveOutcome) -> Result<Solution> {
    o.into_solution()
        .map_err(|_| Error::NumericalFailure("solve interrupted".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{build_grid, shrunk_half, GridConfig, Norm};

    fn two_clients(d: f64) -> MetricInstance {
        MetricInstance::from_points(&[vec![0.0], vec![d]], Norm::L2, vec![0, 1]).unwrap()
    }

    fn one_var_pool() -> ConstraintPool {
        let grid = RadiusGrid::from_parts(vec![vec![0.0]], vec![0.0]);
        ConstraintPool::new(VarLayout::new(&grid, true, false))
    }

    #[test]
    fn empty_region_is_infeasible() {
        let mut pool = one_var_pool();
        let x = VarIndex::Cost(0);
        pool.push_base(LinearConstraint::new(vec![(x, 1.0)], Sense::Ge, 1.0, "lo"));
        pool.push_base(LinearConstraint::new(vec![(x, 1.0)], Sense::Le, 0.0, "hi"));
        assert_eq!(solve_lp(&pool, &Objective::MinCost, 0.0).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn objective_at_bound() {
        let mut pool = one_var_pool();
        let x = VarIndex::Cost(0);
        pool.push_base(LinearConstraint::new(vec![(x, 1.0)], Sense::Le, 0.0, "budget").with_budget(1.0));
        match solve_lp(&pool, &Objective::MinCost, 5.0).unwrap() {
            LpOutcome::Feasible(s) => assert_eq!(s.cost[0], 0.0),
            LpOutcome::Infeasible => panic!("feasible pool"),
        }
    }

    #[test]
    fn fair_anchor_row() {
        let inst = MetricInstance::from_points(&[vec![0.0]], Norm::L2, vec![0]).unwrap();
        let spec = ProblemSpec::FairKMedian {
            k: 1,
            radii: vec![5.0],
        };
        let grid = RadiusGrid::from_parts(vec![vec![0.0, 5.0, 10.0]], vec![10.0]);
        let pool = build_base(&inst, &spec, &grid, 1.0).unwrap();
        assert!(pool.base().iter().any(|r| r.tag == "anchor"
            && r.terms == vec![(VarIndex::Ball(0, 1), 1.0)]
            && r.sense == Sense::Ge
            && r.rhs == 1.0));
    }

    #[test]
    fn right_endpoint_integral_row() {
        let inst = MetricInstance::from_points(&[vec![0.0]], Norm::L2, vec![0]).unwrap();
        let spec = ProblemSpec::Kp { k: 1, p: 1 };
        let grid = RadiusGrid::from_parts(vec![vec![0.0, 3.0, 6.0]], vec![6.0]);
        let pool = build_base(&inst, &spec, &grid, 1.0).unwrap();
        let row = pool.base().iter().find(|r| r.tag == "integral").unwrap();
        // 3(1 - y(3)) + 3(1 - y(6)) <= U  <=>  3 y(3) + 3 y(6) + U >= 6
        assert_eq!(
            row.terms,
            vec![
                (VarIndex::Ball(0, 1), 3.0),
                (VarIndex::Ball(0, 2), 3.0),
                (VarIndex::Cost(0), 1.0)
            ]
        );
        assert_eq!((row.sense, row.rhs), (Sense::Ge, 6.0));
    }

    #[test]
    fn fair_pair_row() {
        let inst = two_clients(4.0);
        let spec = ProblemSpec::FairKMedian {
            k: 1,
            radii: vec![f64::INFINITY, 2.0],
        };
        let grid = RadiusGrid::from_parts(
            vec![vec![0.0, 2.0, 4.0, 6.0, 8.0], vec![0.0, 2.0, 4.0, 8.0]],
            vec![8.0, 8.0],
        );
        let pool = build_base(&inst, &spec, &grid, 1.0).unwrap();
        let pairs: Vec<_> = pool.base().iter().filter(|r| r.tag == "pair").collect();
        assert_eq!(pairs.len(), 1);
        // y(u=0, 6) >= y(v=1, 2)
        assert_eq!(
            pairs[0].terms,
            vec![(VarIndex::Ball(0, 3), 1.0), (VarIndex::Ball(1, 1), -1.0)]
        );
    }

    #[test]
    fn missing_fair_radius_is_reported() {
        let inst = two_clients(4.0);
        let spec = ProblemSpec::FairKMedian {
            k: 1,
            radii: vec![1.5, 1.5],
        };
        let grid = RadiusGrid::from_parts(vec![vec![0.0, 2.0, 8.0]; 2], vec![8.0, 8.0]);
        assert!(matches!(
            build_base(&inst, &spec, &grid, 1.0),
            Err(Error::GridMissingRadius { .. })
        ));
    }

    #[test]
    fn fair_base_lp_is_monotone() {
        let inst = two_clients(6.0);
        let spec = ProblemSpec::FairKMedian {
            k: 1,
            radii: vec![f64::INFINITY; 2],
        };
        let grid = build_grid(&inst, &spec, &GridConfig::new(2), &[]);
        let pool = build_base(&inst, &spec, &grid, 6.0).unwrap();
        let LpOutcome::Feasible(sol) = solve_lp(&pool, &Objective::MinCost, 6.0).unwrap() else {
            panic!("feasible");
        };
        for v in 0..2 {
            for w in sol.ball[v].windows(2) {
                assert!(w[0] <= w[1] + TAU_LP);
            }
        }
        assert_eq!(pool.violations(&sol, 6.0).count(), 0);
    }

    fn sol_with(y: Vec<Vec<f64>>, cost: Vec<f64>) -> FractionalSolution {
        FractionalSolution {
            cost,
            ball: y,
            cov: vec![],
            objective: 0.0,
        }
    }

    #[test]
    fn cut_violation_arithmetic() {
        let inst = MetricInstance::from_points(
            &[vec![0.0], vec![10.0], vec![20.0]],
            Norm::L2,
            vec![0, 1, 2],
        )
        .unwrap();
        let grid = RadiusGrid::from_parts(vec![vec![0.0, 1.0]; 3], vec![1.0; 3]);
        let balls: Vec<Ball> = (0..3).map(|c| Ball { client: c, radius: 1.0 }).collect();
        let fair = SepCut::fair(&inst, balls.clone(), 2).unwrap();
        let s = sol_with(vec![vec![0.0, 1.0], vec![0.0, 0.8], vec![0.0, 0.8]], vec![0.0; 3]);
        assert!((check_cut_violated(&s, &fair, &grid, 0.0).unwrap() - 0.6).abs() < 1e-12);
        let s = sol_with(vec![vec![0.0, 0.5], vec![0.0, 0.7], vec![0.0, 0.7]], vec![0.0; 3]);
        assert!((check_cut_violated(&s, &fair, &grid, 0.0).unwrap() + 0.1).abs() < 1e-12);

        let ufl = SepCut::ufl(&inst, balls, 1.0).unwrap();
        let s = sol_with(vec![vec![0.0, 1.0]; 3], vec![1.0, 1.0, 2.0]);
        assert_eq!(check_cut_violated(&s, &ufl, &grid, 6.0).unwrap(), 1.0);
    }

    #[test]
    fn overlapping_balls_rejected() {
        let inst = two_clients(2.0);
        let b = vec![Ball { client: 0, radius: 1.0 }, Ball { client: 1, radius: 1.0 }];
        assert!(SepCut::ufl(&inst, b.clone(), 1.0).is_err());
        assert!(SepCut::kcwo(&inst, b.clone(), 1).is_err());
        // Touching balls share a boundary point.
        assert!(SepCut::fair(&inst, b, 1).is_err());
        let r = shrunk_half(1.0);
        let b = vec![Ball { client: 0, radius: r }, Ball { client: 1, radius: r }];
        assert!(SepCut::fair(&inst, b, 1).is_ok());
    }

    #[test]
    fn pool_dedup() {
        let inst = two_clients(10.0);
        let grid = RadiusGrid::from_parts(vec![vec![0.0, 1.0]; 2], vec![1.0; 2]);
        let mut pool = ConstraintPool::new(VarLayout::new(&grid, true, false));
        let balls = vec![Ball { client: 1, radius: 1.0 }, Ball { client: 0, radius: 1.0 }];
        let cut = SepCut::fair(&inst, balls.clone(), 1).unwrap();
        assert!(pool.insert_cut(cut, &grid).unwrap());
        let mut rev = balls;
        rev.reverse();
        let again = SepCut::fair(&inst, rev, 1).unwrap();
        assert!(!pool.insert_cut(again, &grid).unwrap());
        assert_eq!(pool.len(), 1);
    }

    #[test]
    fn dump_format() {
        let inst = two_clients(10.0);
        let grid = RadiusGrid::from_parts(vec![vec![0.0, 1.0]; 2], vec![1.0; 2]);
        let mut pool = ConstraintPool::new(VarLayout::new(&grid, true, false));
        let cut = SepCut::ufl(
            &inst,
            vec![Ball { client: 0, radius: 1.0 }, Ball { client: 1, radius: 1.0 }],
            2.0,
        )
        .unwrap();
        pool.insert_cut(cut, &grid).unwrap();
        assert_eq!(
            pool.dump(&grid, 7.0),
            "cut_ufl: 2·y(0,1) + 2·y(1,1) + 1·C(0) + 1·C(1) <= 7\n"
        );
    }

    #[test]
    fn warm_session_tracks_cuts_and_budget() {
        let inst = two_clients(6.0);
        let spec = ProblemSpec::Kp { k: 1, p: 1 };
        let grid = build_grid(&inst, &spec, &GridConfig::new(2).without_mesh(), &[]);
        let mut pool = build_base(&inst, &spec, &grid, 100.0).unwrap();
        let (session, out) = LpSession::start(&pool, &Objective::MinCost, 100.0).unwrap();
        let mut session = session.unwrap();
        assert!(matches!(out, LpOutcome::Feasible(_)));
        // One unit of mass across both rep balls: the cheapest LP point puts
        // a center on one client and pays just under 3 at the other.
        let r = shrunk_half(3.0);
        let cut = SepCut::fair(
            &inst,
            vec![Ball { client: 0, radius: r }, Ball { client: 1, radius: r }],
            1,
        )
        .unwrap();
        pool.insert_cut(cut, &grid).unwrap();
        let LpOutcome::Feasible(s) = session.sync(&pool, 100.0).unwrap() else {
            panic!("feasible");
        };
        assert!((s.total_cost() - r).abs() < 1e-7);
        assert_eq!(session.sync(&pool, 2.9).unwrap(), LpOutcome::Infeasible);
        let LpOutcome::Feasible(s) = session.sync(&pool, r).unwrap() else {
            panic!("feasible at the LP optimum");
        };
        assert!((s.total_cost() - r).abs() < 1e-7);
        let cold = solve_lp(&pool, &Objective::MinCost, r).unwrap();
        assert!(matches!(cold, LpOutcome::Feasible(_)));
    }

    #[test]
    fn interior_fallback_matches_simplex() {
        let inst = two_clients(6.0);
        let spec = ProblemSpec::Kp { k: 1, p: 1 };
        let grid = build_grid(&inst, &spec, &GridConfig::new(2).without_mesh(), &[]);
        let mut pool = build_base(&inst, &spec, &grid, 100.0).unwrap();
        let r = shrunk_half(3.0);
        let cut = SepCut::fair(
            &inst,
            vec![Ball { client: 0, radius: r }, Ball { client: 1, radius: r }],
            1,
        )
        .unwrap();
        pool.insert_cut(cut, &grid).unwrap();
        let obj = objective_vector(pool.layout(), &Objective::MinCost);
        let LpOutcome::Feasible(s) = solve_interior(&pool, pool.layout(), &obj, 10.0).unwrap() else {
            panic!("feasible");
        };
        assert!((s.total_cost() - r).abs() < 1e-6);
        assert_eq!(solve_interior(&pool, pool.layout(), &obj, 2.9).unwrap(), LpOutcome::Infeasible);
    }
}

//! Cutting-plane loop around the rounding oracles, and the search over the
//! optimum guess.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lp::{
    build_base, ConstraintPool, FractionalSolution, LpOutcome, LpSession, Objective, SepCut,
};
use crate::metric::{
    build_grid, build_grid_with_r_max, rescale, validate_metric, GridConfig, MetricInstance,
    ProblemSpec, RadiusGrid,
};
use crate::solution::{assemble, Solution};
use crate::{fair, kcwo, kp, ufl};

/// What a rounding oracle makes of an LP point.
#[derive(Debug, Clone, PartialEq)]
pub enum RoundOutcome {
    Accept(Solution),
    Cut(SepCut),
}

#[derive(Debug, Clone, PartialEq)]
pub enum IterateOutcome {
    Accept(Solution),
    Infeasible,
}

/// Dispatches to the oracle of `spec`'s kind.
pub fn attempt_round(
    inst: &MetricInstance,
    spec: &ProblemSpec,
    grid: &RadiusGrid,
    sol: &FractionalSolution,
    opt_g: f64,
) -> Result<RoundOutcome> {
    match spec {
        ProblemSpec::Ufl { lambda } => ufl::attempt_round_ufl(inst, grid, sol, opt_g, *lambda),
        ProblemSpec::FairKMedian { .. } => fair::attempt_round_fair(inst, grid, spec, sol, opt_g),
        ProblemSpec::Kp { k, p } => kp::attempt_round_kp(inst, grid, sol, opt_g, *k, *p),
        ProblemSpec::Kcwo { k, m } => kcwo::attempt_round_kcwo(inst, grid, sol, opt_g, *k, *m),
    }
}

fn objective_for(spec: &ProblemSpec) -> Objective {
    match spec {
        ProblemSpec::Kcwo { .. } => Objective::Feasibility,
        _ => Objective::MinCost,
    }
}

/// Default iteration cap per guess: `factor · n · (grid size)`.
pub fn iteration_cap(factor: usize, grid: &RadiusGrid) -> usize {
    factor * grid.clients() * grid.total_len()
}

/// Statistics of one guess.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRecord {
    pub opt_g: f64,
    pub iterations: usize,
    /// Cuts added while probing this guess.
    pub cuts: usize,
    /// Pool cut count after each iteration.
    pub cut_history: Vec<usize>,
    pub accepted: bool,
    pub cost: Option<f64>,
}

/// An LP pool with a live simplex session, reused across guesses.
pub struct Driver<'a> {
    inst: &'a MetricInstance,
    spec: &'a ProblemSpec,
    grid: &'a RadiusGrid,
    pool: ConstraintPool,
    session: Option<LpSession>,
    cap: usize,
}

impl<'a> Driver<'a> {
    /// Base rows at `opt_g` plus the given cuts.
    pub fn new(
        inst: &'a MetricInstance,
        spec: &'a ProblemSpec,
        grid: &'a RadiusGrid,
        opt_g: f64,
        cuts: &[SepCut],
        cap: usize,
    ) -> Result<Self> {
        let mut pool = build_base(inst, spec, grid, opt_g)?;
        for cut in cuts {
            pool.insert_cut(cut.clone(), grid)?;
        }
        Ok(Self {
            inst,
            spec,
            grid,
            pool,
            session: None,
            cap,
        })
    }

    pub fn pool(&self) -> &ConstraintPool {
        &self.pool
    }

    fn solve(&mut self, opt_g: f64) -> Result<LpOutcome> {
        match &mut self.session {
            Some(s) => s.sync(&self.pool, opt_g),
            None => {
                let (s, out) = LpSession::start(&self.pool, &objective_for(self.spec), opt_g)?;
                self.session = s;
                Ok(out)
            }
        }
    }

    /// Solve, round, and add the returned cut until the oracle accepts or
    /// the pool becomes infeasible.
    pub fn iterate(
        &mut self,
        opt_g: f64,
        mut oracle: impl FnMut(&FractionalSolution, f64) -> Result<RoundOutcome>,
    ) -> Result<(IterateOutcome, ProbeRecord)> {
        let start = self.pool.cut_count();
        let mut rec = ProbeRecord {
            opt_g,
            iterations: 0,
            cuts: 0,
            cut_history: Vec::new(),
            accepted: false,
            cost: None,
        };
        loop {
            let sol = match self.solve(opt_g)? {
                LpOutcome::Infeasible => {
                    rec.cuts = self.pool.cut_count() - start;
                    return Ok((IterateOutcome::Infeasible, rec));
                }
                LpOutcome::Feasible(sol) => sol,
            };
            rec.iterations += 1;
            match oracle(&sol, opt_g)? {
                RoundOutcome::Accept(mut s) => {
                    s.certificate.cuts = self.pool.cut_count();
                    s.certificate.iterations = rec.iterations;
                    rec.cut_history.push(self.pool.cut_count());
                    rec.cuts = self.pool.cut_count() - start;
                    rec.accepted = true;
                    rec.cost = Some(s.cost);
                    return Ok((IterateOutcome::Accept(s), rec));
                }
                RoundOutcome::Cut(cut) => {
                    let v = cut.violation(&sol, self.grid, opt_g)?;
                    if v <= cut.admission_threshold(opt_g) {
                        return Err(Error::InvariantBreach(format!(
                            "oracle cut violated by only {v:e}"
                        )));
                    }
                    if !self.pool.insert_cut(cut, self.grid)? {
                        return Err(Error::InvariantBreach("oracle repeated a pool cut".into()));
                    }
                    rec.cut_history.push(self.pool.cut_count());
                }
            }
            if rec.iterations >= self.cap {
                return Err(Error::CutLimitExceeded { cap: self.cap, opt_g });
            }
        }
    }

    /// Iterates with the kind's own oracle.
    pub fn probe(&mut self, opt_g: f64) -> Result<(IterateOutcome, ProbeRecord)> {
        let (inst, spec, grid) = (self.inst, self.spec, self.grid);
        self.iterate(opt_g, |sol, g| attempt_round(inst, spec, grid, sol, g))
    }
}

/// One cutting-plane run at a fixed guess.
pub fn iterate(
    inst: &MetricInstance,
    spec: &ProblemSpec,
    grid: &RadiusGrid,
    opt_g: f64,
    oracle: impl FnMut(&FractionalSolution, f64) -> Result<RoundOutcome>,
    cap: usize,
) -> Result<IterateOutcome> {
    let mut d = Driver::new(inst, spec, grid, opt_g, &[], cap)?;
    Ok(d.iterate(opt_g, oracle)?.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative mesh step; defaults to `1/n^2`.
    pub eps_grid: Option<f64>,
    /// Absolute mesh step; defaults to `1/n^2`.
    pub eps_abs: Option<f64>,
    /// Iterations per guess are capped at `cap_factor · n · grid size`.
    pub cap_factor: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps_grid: None,
            eps_abs: None,
            cap_factor: 10,
        }
    }
}

impl SolverConfig {
    fn grid_config(&self, spec: &ProblemSpec, n: usize) -> GridConfig {
        let mut cfg = GridConfig::new(n);
        if let Some(e) = self.eps_grid {
            cfg.eps_grid = e;
        }
        if let Some(e) = self.eps_abs {
            cfg.eps_abs = e;
        }
        // The right-endpoint cost row makes ball-mass bounds exact at grid
        // radii, so only the threshold rounding needs a fine mesh.
        match spec {
            ProblemSpec::Ufl { .. } => cfg,
            _ => cfg.without_mesh(),
        }
    }
}

/// All probes of a search.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchTrace {
    pub probes: Vec<ProbeRecord>,
    pub chosen_opt_g: Option<f64>,
}

impl SearchTrace {
    pub fn total_cuts(&self) -> usize {
        self.probes.iter().map(|p| p.cuts).sum()
    }

    pub fn total_iterations(&self) -> usize {
        self.probes.iter().map(|p| p.iterations).sum()
    }

    /// `opt_g,iterations,cuts,status,cost` with one row per probe.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("opt_g,iterations,cuts,status,cost\n");
        for p in &self.probes {
            let status = if p.accepted { "accept" } else { "infeasible" };
            let cost = p.cost.map_or_else(|| "NA".to_string(), |c| c.to_string());
            let _ = writeln!(out, "{},{},{},{status},{cost}", p.opt_g, p.iterations, p.cuts);
        }
        out
    }
}

/// Result of [`search`], with the working-scale data needed to audit it.
#[derive(Debug, Clone)]
pub struct SearchOutput {
    /// Solution in the caller's distance units.
    pub solution: Solution,
    pub trace: SearchTrace,
    /// Working distances are input distances times `scale`.
    pub scale: f64,
    pub instance: MetricInstance,
    pub spec: ProblemSpec,
    /// Grid of the accepting guess.
    pub grid: RadiusGrid,
    /// Every cut generated, in insertion order.
    pub cuts: Vec<SepCut>,
    /// Accepting guess in working units.
    pub opt_g: f64,
    /// Iteration cap that applied per guess.
    pub cap: usize,
}

const SEARCH_ABS: f64 = 1e-9;

/// Searches the optimum guess and returns the cheapest accepted solution.
///
/// Sum objectives bisect geometrically between a lower bound on the optimum
/// and a guess large enough that the budget cannot bind. Outlier instances
/// binary-search the sorted client-to-point distances and their halves.
pub fn search(inst: &MetricInstance, spec: &ProblemSpec, cfg: &SolverConfig) -> Result<SearchOutput> {
    spec.validate(inst.n())?;
    if let Some(v) = validate_metric(inst).first() {
        return Err(Error::InvalidInstance(v.to_string()));
    }
    match spec {
        ProblemSpec::Kcwo { .. } => search_kcwo(inst, spec, cfg),
        _ => search_sum(inst, spec, cfg),
    }
}

fn to_caller_units(
    inst: &MetricInstance,
    spec: &ProblemSpec,
    sol: &Solution,
    cost_scale: f64,
) -> Solution {
    let mut cert = sol.certificate.clone();
    cert.opt_g /= cost_scale;
    cert.bound /= cost_scale;
    cert.slack /= cost_scale;
    assemble(inst, spec, sol.centers.clone(), sol.served.clone(), cert)
}

fn search_sum(inst: &MetricInstance, spec: &ProblemSpec, cfg: &SolverConfig) -> Result<SearchOutput> {
    let n = inst.n();
    let (work, scale) = match rescale(inst) {
        Ok(r) => (r.instance, r.scale),
        Err(Error::AllCoincident) => (inst.clone(), 1.0),
        Err(e) => return Err(e),
    };
    let wspec = spec.scaled(scale);
    let cost_scale = spec.cost_scale(scale);
    let grid = build_grid(&work, &wspec, &cfg.grid_config(spec, n), &[]);
    let cap = iteration_cap(cfg.cap_factor, &grid);
    let p = spec.power() as i32;
    let nf = n as f64;
    let lambda = match wspec {
        ProblemSpec::Ufl { lambda } => lambda,
        _ => 0.0,
    };
    let diam = work.client_diameter();
    let rmax_sum: f64 = (0..n).map(|v| grid.r_max(v).powi(p)).sum();
    let hi0 = (lambda * nf + nf * (2.0 * diam).powi(p)).max(rmax_sum);
    let lb = match &wspec {
        ProblemSpec::Ufl { lambda } => *lambda,
        _ => {
            let k = wspec.k().unwrap_or(1);
            match work.min_positive_client_distance() {
                Some(dmin) if work.distinct_client_count() > k => 2.0 * (dmin / 2.0).powi(p),
                _ => 0.0,
            }
        }
    };

    let mut driver = Driver::new(&work, &wspec, &grid, hi0, &[], cap)?;
    let mut trace = SearchTrace::default();
    let mut best: Option<(Solution, f64)> = None;
    let mut probe = |g: f64, trace: &mut SearchTrace, best: &mut Option<(Solution, f64)>| -> Result<bool> {
        let (out, mut rec) = driver.probe(g)?;
        log::debug!(
            "guess {g}: {} iterations, {} cuts, accepted {}",
            rec.iterations,
            rec.cuts,
            rec.accepted
        );
        rec.opt_g = g / cost_scale;
        rec.cost = rec.cost.map(|c| c / cost_scale);
        trace.probes.push(rec);
        Ok(match out {
            IterateOutcome::Accept(s) => {
                if best.as_ref().map_or(true, |b| s.cost < b.0.cost) {
                    *best = Some((s, g));
                }
                true
            }
            IterateOutcome::Infeasible => false,
        })
    };

    if !probe(hi0, &mut trace, &mut best)? {
        return Err(Error::Infeasible);
    }
    let mut hi = hi0;
    let mut lo = lb.min(hi0);
    if lo == 0.0 && hi > 0.0 {
        if probe(0.0, &mut trace, &mut best)? {
            hi = 0.0;
        }
    }
    let ratio = 1.0 + 1.0 / (nf * nf);
    while hi > ratio * lo + SEARCH_ABS {
        let mid = if lo > 0.0 { (lo * hi).sqrt() } else { hi / 2.0 };
        if probe(mid, &mut trace, &mut best)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let (sol, g) = best.expect("the first probe accepted");
    trace.chosen_opt_g = Some(g / cost_scale);
    let cuts = driver.pool().cuts().cloned().collect();
    Ok(SearchOutput {
        solution: to_caller_units(inst, spec, &sol, cost_scale),
        trace,
        scale,
        instance: work.clone(),
        spec: wspec.clone(),
        grid: grid.clone(),
        cuts,
        opt_g: g,
        cap,
    })
}

/// Sorted distinct values `d(v,x)` and `d(v,x)/2` over clients `v` and
/// points `x`.
pub fn kcwo_candidates(inst: &MetricInstance) -> Vec<f64> {
    let mut c = Vec::with_capacity(2 * inst.n() * inst.point_count());
    for v in 0..inst.n() {
        for x in 0..inst.point_count() {
            let d = inst.client_to_point(v, x);
            c.push(d);
            c.push(d / 2.0);
        }
    }
    c.sort_by(f64::total_cmp);
    c.dedup();
    c
}

/// Grid for one outlier guess: structural radii plus the guess and every
/// radius used by a retained cut.
pub fn kcwo_grid(inst: &MetricInstance, spec: &ProblemSpec, g: f64, cuts: &[SepCut], r_max: f64) -> RadiusGrid {
    let mut extra = vec![g];
    extra.extend(cuts.iter().flat_map(|c| c.balls.iter().map(|b| b.radius)));
    build_grid_with_r_max(
        inst,
        spec,
        &GridConfig::new(inst.n()).without_mesh(),
        &extra,
        vec![r_max; inst.n()],
    )
}

fn search_kcwo(inst: &MetricInstance, spec: &ProblemSpec, cfg: &SolverConfig) -> Result<SearchOutput> {
    let cand = kcwo_candidates(inst);
    let r_max = 2.0 * cand.last().copied().unwrap_or(0.0);
    let mut cuts: Vec<SepCut> = Vec::new();
    let mut trace = SearchTrace::default();
    let mut best: Option<(Solution, f64, RadiusGrid, usize)> = None;
    let mut probe = |i: usize, cuts: &mut Vec<SepCut>, trace: &mut SearchTrace| -> Result<bool> {
        let g = cand[i];
        let grid = kcwo_grid(inst, spec, g, cuts, r_max);
        let cap = iteration_cap(cfg.cap_factor, &grid);
        let mut driver = Driver::new(inst, spec, &grid, g, cuts, cap)?;
        let (out, rec) = driver.probe(g)?;
        log::debug!(
            "radius guess {g}: {} iterations, {} cuts, accepted {}",
            rec.iterations,
            rec.cuts,
            rec.accepted
        );
        trace.probes.push(rec);
        let known = cuts.len();
        cuts.extend(driver.pool().cuts().skip(known).cloned());
        Ok(match out {
            IterateOutcome::Accept(s) => {
                if best.as_ref().map_or(true, |b| s.cost < b.0.cost) {
                    best = Some((s, g, grid.clone(), cap));
                }
                true
            }
            IterateOutcome::Infeasible => false,
        })
    };
    let mut hi = cand.len() - 1;
    if !probe(hi, &mut cuts, &mut trace)? {
        return Err(Error::Infeasible);
    }
    // Invariant: cand[lo] is certified infeasible (lo = None: nothing below),
    // cand[hi] accepted.
    let mut lo: Option<usize> = None;
    while hi - lo.map_or(0, |l| l + 1) > 0 {
        let base = lo.map_or(0, |l| l + 1);
        let mid = base + (hi - base) / 2;
        if probe(mid, &mut cuts, &mut trace)? {
            hi = mid;
        } else {
            lo = Some(mid);
        }
    }
    let (sol, g, grid, cap) = best.expect("the first probe accepted");
    trace.chosen_opt_g = Some(g);
    Ok(SearchOutput {
        solution: sol,
        trace,
        scale: 1.0,
        instance: inst.clone(),
        spec: spec.clone(),
        grid,
        cuts,
        opt_g: g,
        cap,
    })
}

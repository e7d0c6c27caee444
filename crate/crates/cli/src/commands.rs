//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use contclust_core::gen::{clustered_points, random_points, PointCloud};
use contclust_core::hardness::{embed, Graph};
use contclust_core::metric::ProblemSpec;
use contclust_core::oracle::{exact_solve, ExactOutcome};
use contclust_core::round_or_cut::{search, SearchOutput, SolverConfig};
use contclust_core::solution::factor_bound;
use contclust_core::Error;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CliError;
use crate::format::{ConfigSection, InstanceFile, MetricSection, ProblemSection, SolutionFile};

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load(path: &Path) -> Result<InstanceFile, CliError> {
    InstanceFile::parse(&read(path)?, &path.display().to_string())
}

/// Overrides applied on top of an instance's own `config` section.
#[derive(Debug, Clone, Copy, Default)]
pub struct SolveFlags {
    pub eps_grid: Option<f64>,
    pub eps_abs: Option<f64>,
    pub cap_factor: Option<usize>,
}

impl SolveFlags {
    fn config(&self, file: &InstanceFile) -> SolverConfig {
        let mut cfg = file.solver_config();
        if self.eps_grid.is_some() {
            cfg.eps_grid = self.eps_grid;
        }
        if self.eps_abs.is_some() {
            cfg.eps_abs = self.eps_abs;
        }
        if let Some(c) = self.cap_factor {
            cfg.cap_factor = c;
        }
        cfg
    }
}

pub fn solve_file(file: &InstanceFile, flags: &SolveFlags) -> Result<(SolutionFile, SearchOutput), CliError> {
    let inst = file.instance()?;
    let out = search(&inst, &file.spec(), &flags.config(file))?;
    let sol = SolutionFile::from_solution(
        &inst,
        &out.solution,
        out.trace.total_cuts(),
        out.trace.total_iterations(),
    );
    Ok((sol, out))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactReport {
    pub centers: Vec<usize>,
    pub value: f64,
    pub enumerated: u64,
}

pub fn exact_file(file: &InstanceFile) -> Result<ExactReport, CliError> {
    let inst = file.instance()?;
    match exact_solve(&inst, &file.spec())? {
        ExactOutcome::Optimal(r) => Ok(ExactReport {
            centers: r.centers,
            value: r.value,
            enumerated: r.enumerated,
        }),
        ExactOutcome::Infeasible => Err(CliError::Solver(Error::Infeasible)),
    }
}

/// The problem attached to generated instances.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemChoice {
    pub kind: String,
    pub lambda: f64,
    pub k: usize,
    pub p: u32,
    pub m: Option<usize>,
    pub radius: Option<f64>,
}

impl ProblemChoice {
    pub fn section(&self, n: usize) -> Result<ProblemSection, CliError> {
        let spec = match self.kind.as_str() {
            "ufl" => ProblemSpec::Ufl { lambda: self.lambda },
            "fair_kmedian" => ProblemSpec::FairKMedian {
                k: self.k,
                radii: vec![self.radius.unwrap_or(f64::INFINITY); n],
            },
            "kp" => ProblemSpec::Kp { k: self.k, p: self.p },
            "kcwo" => ProblemSpec::Kcwo {
                k: self.k,
                m: self.m.unwrap_or(n),
            },
            other => {
                return Err(CliError::Usage(format!(
                    "unknown problem {other:?}; expected ufl, fair_kmedian, kp or kcwo"
                )))
            }
        };
        spec.validate(n).map_err(CliError::Invalid)?;
        Ok((&spec).into())
    }
}

fn cloud_file(pc: PointCloud, problem: &ProblemChoice, seed: u64) -> Result<InstanceFile, CliError> {
    let n = pc.clients.len();
    Ok(InstanceFile {
        metric: MetricSection::LpNorm {
            p: pc.norm.into(),
            points: pc.points,
        },
        clients: pc.clients,
        problem: problem.section(n)?,
        config: Some(ConfigSection {
            seed: Some(seed),
            ..ConfigSection::default()
        }),
    })
}

pub fn gen_random(
    n: usize,
    dim: usize,
    norm: contclust_core::metric::Norm,
    extra: usize,
    seed: u64,
    problem: &ProblemChoice,
) -> Result<InstanceFile, CliError> {
    let pc = random_points(n, dim, norm, extra, seed).map_err(CliError::Invalid)?;
    cloud_file(pc, problem, seed)
}

pub fn gen_euclidean(
    n: usize,
    dim: usize,
    clusters: usize,
    spread: f64,
    extra: usize,
    seed: u64,
    problem: &ProblemChoice,
) -> Result<InstanceFile, CliError> {
    let pc = clustered_points(n, dim, clusters, spread, extra, seed).map_err(CliError::Invalid)?;
    cloud_file(pc, problem, seed)
}

/// ℓ∞ embedding of an edge-list graph with opening cost `eps · n`.
pub fn gen_hardness(graph: &Path, eps: f64) -> Result<InstanceFile, CliError> {
    let g = Graph::parse_edge_list(&read(graph)?).map_err(|e| CliError::Parse {
        origin: graph.display().to_string(),
        message: e.to_string(),
    })?;
    let emb = embed(&g, eps).map_err(CliError::Invalid)?;
    let n = emb.clients.len();
    let mut points = emb.clients.clone();
    points.extend(emb.extra.iter().cloned());
    Ok(InstanceFile {
        metric: MetricSection::LpNorm {
            p: crate::format::NormName::LInf,
            points,
        },
        clients: (0..n).collect(),
        problem: (&emb.spec()).into(),
        config: None,
    })
}

pub const BENCH_HEADER: [&str; 12] = [
    "instance",
    "kind",
    "n",
    "k_or_lambda",
    "exact_opt",
    "alg_cost",
    "ratio",
    "factor_bound",
    "cuts",
    "iterations",
    "wall_ms",
    "status",
];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub instance: String,
    pub kind: String,
    pub n: Option<usize>,
    pub k_or_lambda: String,
    pub exact_opt: Option<f64>,
    pub alg_cost: Option<f64>,
    pub factor_bound: Option<f64>,
    pub cuts: Option<usize>,
    pub iterations: Option<usize>,
    pub wall_ms: u128,
    pub status: String,
}

impl BenchRow {
    fn blank(instance: String) -> Self {
        Self {
            instance,
            kind: "NA".into(),
            n: None,
            k_or_lambda: "NA".into(),
            exact_opt: None,
            alg_cost: None,
            factor_bound: None,
            cuts: None,
            iterations: None,
            wall_ms: 0,
            status: "ok".into(),
        }
    }

    pub fn ratio(&self) -> Option<f64> {
        match (self.alg_cost, self.exact_opt) {
            (Some(a), Some(o)) if o > 0.0 => Some(a / o),
            (Some(a), Some(_)) if a == 0.0 => Some(1.0),
            _ => None,
        }
    }

    pub fn record(&self) -> Vec<String> {
        fn opt<T: ToString>(x: Option<T>) -> String {
            x.map_or_else(|| "NA".to_string(), |v| v.to_string())
        }
        vec![
            self.instance.clone(),
            self.kind.clone(),
            opt(self.n),
            self.k_or_lambda.clone(),
            opt(self.exact_opt),
            opt(self.alg_cost),
            opt(self.ratio()),
            opt(self.factor_bound),
            opt(self.cuts),
            opt(self.iterations),
            self.wall_ms.to_string(),
            self.status.clone(),
        ]
    }
}

fn status_of(e: &CliError) -> String {
    match e {
        CliError::Parse { .. } | CliError::Io { .. } => "parse_error".into(),
        CliError::Invalid(_) | CliError::Usage(_) => "invalid".into(),
        CliError::Solver(Error::Infeasible) => "infeasible".into(),
        CliError::Solver(Error::TooLarge { .. }) => "too_large".into(),
        CliError::Solver(Error::CutLimitExceeded { .. }) => "cut_limit".into(),
        CliError::Solver(_) => "solver_error".into(),
    }
}

pub fn bench_one(path: &Path, flags: &SolveFlags) -> BenchRow {
    let name = path
        .file_name()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
    let mut row = BenchRow::blank(name);
    let file = match load(path) {
        Ok(f) => f,
        Err(e) => {
            row.status = status_of(&e);
            return row;
        }
    };
    let spec = file.spec();
    row.kind = spec.name().into();
    row.n = Some(file.clients.len());
    row.k_or_lambda = match &spec {
        ProblemSpec::Ufl { lambda } => lambda.to_string(),
        _ => spec.k().unwrap().to_string(),
    };
    row.factor_bound = Some(factor_bound(&spec));
    match exact_file(&file) {
        Ok(r) => row.exact_opt = Some(r.value),
        Err(CliError::Solver(Error::TooLarge { .. } | Error::Infeasible)) => {}
        Err(e) => {
            row.status = status_of(&e);
            return row;
        }
    }
    let start = Instant::now();
    let res = solve_file(&file, flags);
    row.wall_ms = start.elapsed().as_millis();
    match res {
        Ok((sol, _)) => {
            row.alg_cost = Some(sol.cost);
            row.cuts = Some(sol.certificate.cuts_added);
            row.iterations = Some(sol.certificate.iterations);
        }
        Err(e) => row.status = status_of(&e),
    }
    row
}

/// Every `*.json` file of `dir`, sorted by name.
pub fn bench_inputs(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|source| CliError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    Ok(paths)
}

/// Runs every instance (in parallel) and returns rows in input order.
pub fn bench(dir: &Path, flags: &SolveFlags) -> Result<Vec<BenchRow>, CliError> {
    let paths = bench_inputs(dir)?;
    Ok(paths.par_iter().map(|p| bench_one(p, flags)).collect())
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(BENCH_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record(r.record()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

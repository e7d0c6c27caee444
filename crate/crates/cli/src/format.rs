//! JSON instance and solution documents.

use contclust_core::metric::{validate_metric, MetricInstance, Norm, ProblemSpec};
use contclust_core::round_or_cut::SolverConfig;
use contclust_core::solution::{center_points, Solution};
use contclust_core::Error;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormName {
    #[serde(rename = "1")]
    L1,
    #[serde(rename = "2")]
    L2,
    #[serde(rename = "inf")]
    LInf,
}

impl From<NormName> for Norm {
    fn from(n: NormName) -> Self {
        match n {
            NormName::L1 => Norm::L1,
            NormName::L2 => Norm::L2,
            NormName::LInf => Norm::LInf,
        }
    }
}

impl From<Norm> for NormName {
    fn from(n: Norm) -> Self {
        match n {
            Norm::L1 => NormName::L1,
            Norm::L2 => NormName::L2,
            Norm::LInf => NormName::LInf,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSection {
    Explicit { matrix: Vec<Vec<f64>> },
    LpNorm { p: NormName, points: Vec<Vec<f64>> },
}

/// A radius that may be the string `"inf"`.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RadiusRepr {
    Finite(f64),
    Text(String),
}

mod radii {
    use super::*;

    pub fn serialize<S: Serializer>(rs: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(rs.iter().map(|&r| {
            if r == f64::INFINITY {
                RadiusRepr::Text("inf".into())
            } else {
                RadiusRepr::Finite(r)
            }
        }))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<RadiusRepr>::deserialize(d)?
            .into_iter()
            .map(|r| match r {
                RadiusRepr::Finite(x) => Ok(x),
                RadiusRepr::Text(t) if t == "inf" => Ok(f64::INFINITY),
                RadiusRepr::Text(t) => Err(serde::de::Error::custom(format!(
                    "radius must be a number or \"inf\", got {t:?}"
                ))),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSection {
    Ufl {
        lambda: f64,
    },
    FairKmedian {
        k: usize,
        #[serde(with = "radii")]
        radii: Vec<f64>,
    },
    Kp {
        k: usize,
        p: u32,
    },
    Kcwo {
        k: usize,
        m: usize,
    },
}

impl From<&ProblemSection> for ProblemSpec {
    fn from(p: &ProblemSection) -> Self {
        match p {
            ProblemSection::Ufl { lambda } => ProblemSpec::Ufl { lambda: *lambda },
            ProblemSection::FairKmedian { k, radii } => ProblemSpec::FairKMedian {
                k: *k,
                radii: radii.clone(),
            },
            ProblemSection::Kp { k, p } => ProblemSpec::Kp { k: *k, p: *p },
            ProblemSection::Kcwo { k, m } => ProblemSpec::Kcwo { k: *k, m: *m },
        }
    }
}

impl From<&ProblemSpec> for ProblemSection {
    fn from(p: &ProblemSpec) -> Self {
        match p {
            ProblemSpec::Ufl { lambda } => ProblemSection::Ufl { lambda: *lambda },
            ProblemSpec::FairKMedian { k, radii } => ProblemSection::FairKmedian {
                k: *k,
                radii: radii.clone(),
            },
            ProblemSpec::Kp { k, p } => ProblemSection::Kp { k: *k, p: *p },
            ProblemSpec::Kcwo { k, m } => ProblemSection::Kcwo { k: *k, m: *m },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_grid: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_abs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub metric: MetricSection,
    pub clients: Vec<usize>,
    pub problem: ProblemSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ConfigSection>,
}

impl InstanceFile {
    /// Parses JSON; syntax and shape errors carry the line and column.
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse {
            origin: origin.to_string(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance documents always serialize")
    }

    pub fn spec(&self) -> ProblemSpec {
        (&self.problem).into()
    }

    /// Materializes the distance matrix and validates indices, the metric and
    /// the problem parameters.
    pub fn instance(&self) -> Result<MetricInstance, CliError> {
        let inst = match &self.metric {
            MetricSection::Explicit { matrix } => MetricInstance::new(matrix.clone(), self.clients.clone()),
            MetricSection::LpNorm { p, points } => {
                MetricInstance::from_points(points, (*p).into(), self.clients.clone())
            }
        }
        .map_err(CliError::Invalid)?;
        if let Some(v) = validate_metric(&inst).first() {
            return Err(CliError::Invalid(Error::InvalidInstance(v.to_string())));
        }
        self.spec().validate(inst.n()).map_err(CliError::Invalid)?;
        Ok(inst)
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut cfg = SolverConfig::default();
        if let Some(c) = &self.config {
            cfg.eps_grid = c.eps_grid;
            cfg.eps_abs = c.eps_abs;
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSection {
    pub factor_bound: f64,
    pub fairness_ok: bool,
    pub cuts_added: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionFile {
    /// Opened centers as point indices.
    pub centers: Vec<usize>,
    /// Point index of the center serving each client.
    pub assignment: Vec<usize>,
    pub served: Vec<usize>,
    pub cost: f64,
    pub opt_g_used: f64,
    pub certificate: CertificateSection,
}

impl SolutionFile {
    pub fn from_solution(inst: &MetricInstance, sol: &Solution, cuts: usize, iterations: usize) -> Self {
        Self {
            centers: center_points(inst, &sol.centers),
            assignment: center_points(inst, &sol.assignment),
            served: sol.served.clone(),
            cost: sol.cost,
            opt_g_used: sol.certificate.opt_g,
            certificate: CertificateSection {
                factor_bound: sol.certificate.factor,
                fairness_ok: sol.certificate.fairness_ok,
                cuts_added: cuts,
                iterations,
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution documents always serialize")
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse {
            origin: origin.to_string(),
            message: e.to_string(),
        })
    }
}

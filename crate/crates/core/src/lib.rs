//! Round-or-cut LP solvers for continuous clustering: facility location with
//! uniform opening cost, fair k-median, (k,p)-clustering and k-center with
//! outliers, plus exact brute-force oracles and a hardness-instance generator.

pub mod dlp;
pub mod error;
pub mod fair;
pub mod gen;
pub mod hardness;
pub mod kcwo;
pub mod kp;
pub mod lp;
pub mod metric;
pub mod oracle;
pub mod round_or_cut;
pub mod solution;
pub mod ufl;

pub use error::{Error, Result};

//! Library side of the `qclsim` command: configuration, runs, invariant
//! checks and the bracket tool.

pub mod check;
pub mod config;
pub mod runner;

use qclsim_core::{jacobi_residual, parse_field, quasi_lie_bracket, StructureMatrix};
use serde::Serialize;

/// Failure classes, each with its own process exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("trajectory {index} produced a non-finite value: {reason}")]
    Numerical { index: usize, reason: String },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Usage(_) => 2,
            Self::Numerical { .. } => 3,
            Self::Runtime(_) => 1,
        }
    }
}

/// Worker count: `requested` (or all cores) capped by `QCLSIM_THREADS`.
pub fn worker_count(requested: Option<usize>, env_cap: Option<&str>) -> Result<usize, CliError> {
    let base = requested.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let cap = match env_cap {
        Some(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Usage(format!("QCLSIM_THREADS must be a positive integer, got `{v}`")))?,
        None => usize::MAX,
    };
    Ok(base.max(1).min(cap))
}

/// Structure matrix named `name` whose dimension matches a point of length `len`.
pub fn structure_for(name: &str, len: usize) -> Result<StructureMatrix, CliError> {
    let bad = || CliError::Usage(format!("a point of length {len} does not fit the {name} structure"));
    let s = match name {
        "canonical" if len >= 2 && len.is_multiple_of(2) => StructureMatrix::canonical(len / 2),
        "spin" if len == 3 => StructureMatrix::spin(),
        "nose" if len >= 4 && len.is_multiple_of(2) => StructureMatrix::nose((len - 2) / 2),
        "nhc" if len >= 6 && len.is_multiple_of(2) => StructureMatrix::nhc((len - 4) / 2),
        "canonical" | "spin" | "nose" | "nhc" => return Err(bad()),
        other => return Err(CliError::Usage(format!("unknown structure `{other}`"))),
    };
    Ok(s)
}

/// Residuals printed by `qclsim bracket`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketReport {
    pub fields: [String; 3],
    pub point: Vec<f64>,
    pub hbar: f64,
    pub structure: String,
    /// `max |(f1,f2) + (f2,f1)|`.
    pub antisymmetry: f64,
    /// `max |(f1,f1)|`.
    pub self_bracket: f64,
    pub jacobi: f64,
}

pub fn bracket_report(fields: [&str; 3], point: &[f64], hbar: f64, structure: &str) -> Result<BracketReport, CliError> {
    if !(hbar > 0.0) {
        return Err(CliError::Usage(format!("hbar must be positive, got {hbar}")));
    }
    let s = structure_for(structure, point.len())?;
    let usage = |e: qclsim_core::Error| CliError::Usage(e.to_string());
    let [a, b, c] = [0, 1, 2].map(|k| parse_field(fields[k], &s));
    let (a, b, c) = (a.map_err(usage)?, b.map_err(usage)?, c.map_err(usage)?);
    let runtime = |e: qclsim_core::Error| CliError::Runtime(e.to_string());
    let ab = quasi_lie_bracket(&a, &b, &s, point, hbar).map_err(runtime)?.value;
    let ba = quasi_lie_bracket(&b, &a, &s, point, hbar).map_err(runtime)?.value;
    let aa = quasi_lie_bracket(&a, &a, &s, point, hbar).map_err(runtime)?;
    Ok(BracketReport {
        fields: fields.map(String::from),
        point: point.to_vec(),
        hbar,
        structure: structure.to_string(),
        antisymmetry: qclsim_core::linalg::max_abs(&(ab + ba)),
        self_bracket: aa.max_abs(),
        jacobi: jacobi_residual(&a, &b, &c, &s, point, hbar).map_err(runtime)?,
    })
}

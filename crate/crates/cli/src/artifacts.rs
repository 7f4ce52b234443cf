//! Files shared between commands.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use procure_core::mechanism::{Classification, Mechanism};
use procure_core::solver::Status;

use crate::error::{CliError, Result};
use crate::io::read_json;

pub const MECHANISM: &str = "mechanism.json";
pub const ALLOCATION: &str = "allocation.csv";
pub const IRONING: &str = "ironing.csv";
pub const SUMMARY: &str = "summary.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AllocationRow {
    pub s: f64,
    pub q: f64,
    #[serde(rename = "P_hat")]
    pub p_hat: f64,
    #[serde(rename = "P_star")]
    pub p_star: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IroningRow {
    pub s: f64,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "Gbar")]
    pub g_bar: f64,
    pub gbar: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Payoffs {
    pub buyer: f64,
    pub social: f64,
    /// The objective at the configured weight.
    pub weighted: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub status: Status,
    pub no_trade: bool,
    pub n: usize,
    pub gamma: f64,
    pub buyer_ir: bool,
    pub grid: usize,
    pub classification: Classification,
    pub payoffs: Payoffs,
    pub lambda_star: f64,
    pub s_plus: f64,
    pub s_zero: f64,
    pub p_bar: Option<f64>,
    pub pooling: Vec<(f64, f64)>,
    pub step: u8,
    pub dual_monotone: bool,
    pub clamp_binding: bool,
    pub slackness_residual: f64,
}

/// `explicit` if given, else the mechanism written by `solve` into `out`.
pub fn mechanism_path(out: &Path, explicit: Option<&Path>) -> PathBuf {
    explicit.map_or_else(|| out.join(MECHANISM), Path::to_path_buf)
}

/// Reads a mechanism and rejects one that is not a valid bid-interval design.
pub fn load_mechanism(path: &Path) -> Result<Mechanism> {
    let mech: Mechanism = read_json(path)?;
    mech.validate()
        .map_err(|e| CliError::Mismatch(format!("{}: {e}", path.display())))?;
    Ok(mech)
}

use std::path::Path;

use serde::Serialize;

use procure_core::auction::interim_probability;
use procure_core::calculus::{Grid, QuantileSurplus};
use procure_core::exec::Execution;
use procure_core::solver::{check_border_samples, BorderReport};
use procure_core::verify::{check_mechanism, lp_oracle, DominanceReport, OracleReport};

use crate::artifacts::{load_mechanism, mechanism_path, AllocationRow, Summary, ALLOCATION, SUMMARY};
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::io::{read_csv, read_json, write_json};

/// Largest `n` the exhaustive dominance check enumerates.
const MAX_DOMINANCE_N: usize = 3;

#[derive(Debug, Serialize)]
struct BorderFile {
    pass: bool,
    report: Option<BorderReport>,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct OracleFile {
    pass: bool,
    failures: Vec<String>,
    objective: f64,
    lp_value: f64,
    tolerance: f64,
    greedy_gap: Option<f64>,
    round_trip_error: f64,
    oracle: OracleReport,
}

#[derive(Debug, Serialize)]
struct DominanceFile {
    pass: bool,
    skipped: bool,
    report: Option<DominanceReport>,
}

pub fn run(cfg: &RunConfig, out: &Path, mechanism: Option<&Path>) -> Result<()> {
    let env = cfg.environment()?;
    let mech = load_mechanism(&mechanism_path(out, mechanism))?;
    let rows: Vec<AllocationRow> = read_csv(&out.join(ALLOCATION))?;
    let summary: Summary = read_json(&out.join(SUMMARY))?;
    let cells = cfg.numerics.grid;
    if rows.len() != cells + 1 {
        return Err(CliError::Mismatch(format!(
            "{ALLOCATION} has {} rows, the configured grid needs {}",
            rows.len(),
            cells + 1
        )));
    }
    let tol = &cfg.numerics.tolerances;
    let mut failed = Vec::new();

    let values: Vec<f64> = rows.iter().map(|r| r.p_hat).collect();
    let border = match check_border_samples(&values, env.n()) {
        Ok(report) => BorderFile {
            pass: report.pass,
            error: (!report.pass).then(|| {
                format!("majorization fails by {:.3e} at s = {}", -report.worst_margin, report.worst_s)
            }),
            report: Some(report),
        },
        Err(e) => BorderFile {
            pass: false,
            report: None,
            error: Some(e.to_string()),
        },
    };
    if let Some(e) = &border.error {
        failed.push(format!("border: {e}"));
    }
    write_json(&out.join("border.json"), &border)?;

    let oracle = lp_oracle(&env, cfg.numerics.lp_bins).map_err(|e| CliError::Verification(e.to_string()))?;
    let objective = summary.payoffs.weighted;
    let scale = QuantileSurplus::new(&env, env.gamma(), 0.0).scale(&Grid::new(cells));
    let tolerance = tol.oracle.max(2.0 * scale / cfg.numerics.lp_bins as f64);
    let greedy_gap = oracle.greedy.as_ref().map(|g| (g.value - oracle.lp.value).abs());
    let round_trip_error = rows
        .iter()
        .map(|r| (r.p_hat - interim_probability(&mech, &env, env.dist().quantile(r.s))).abs())
        .fold(0.0, f64::max);
    let mut failures = Vec::new();
    if (oracle.lp.value - objective).abs() > tolerance {
        failures.push(format!(
            "LP value {} differs from the solver objective {} by more than {tolerance:.3e}",
            oracle.lp.value, objective
        ));
    }
    if let Some(gap) = greedy_gap.filter(|g| *g > tol.greedy) {
        failures.push(format!("greedy path differs from the LP by {gap:.3e}"));
    }
    if !oracle.feasible {
        failures.push("LP solution violates the majorization sums".into());
    }
    if !(round_trip_error <= tol.round_trip) {
        failures.push(format!("mechanism reproduces the allocation only to {round_trip_error:.3e}"));
    }
    failed.extend(failures.iter().map(|f| format!("oracle: {f}")));
    write_json(
        &out.join("oracle.json"),
        &OracleFile {
            pass: failures.is_empty(),
            failures,
            objective,
            lp_value: oracle.lp.value,
            tolerance,
            greedy_gap,
            round_trip_error,
            oracle,
        },
    )?;

    let dominance = if env.n() <= MAX_DOMINANCE_N {
        let report = check_mechanism(&mech, env.n(), Execution::default());
        if let Some(v) = report.violations.first() {
            failed.push(format!(
                "dominance: {} profitable deviations, e.g. quality {} gains {:.3e} bidding {:?} instead of {:?}",
                report.violations.len(),
                v.quality,
                v.gain,
                v.deviation,
                v.prescribed
            ));
        }
        DominanceFile {
            pass: report.passed(),
            skipped: false,
            report: Some(report),
        }
    } else {
        println!("dominance: skipped for n = {} > {MAX_DOMINANCE_N}", env.n());
        DominanceFile {
            pass: true,
            skipped: true,
            report: None,
        }
    };
    write_json(&out.join("dominance.json"), &dominance)?;

    if failed.is_empty() {
        println!("all checks passed");
        Ok(())
    } else {
        Err(CliError::Verification(failed.join("; ")))
    }
}

use std::path::Path;

use procure_core::auction::{simulate, SimulationReport};
use procure_core::exec::Execution;

use crate::artifacts::{load_mechanism, mechanism_path};
use crate::config::RunConfig;
use crate::error::Result;
use crate::io::{write_csv, write_json};

pub struct Overrides<'a> {
    pub mechanism: Option<&'a Path>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
}

pub fn run(cfg: &RunConfig, out: &Path, over: &Overrides<'_>) -> Result<SimulationReport> {
    let env = cfg.environment()?;
    let path = mechanism_path(out, over.mechanism);
    if over.mechanism.is_none() && !path.exists() {
        crate::solve::run(cfg, out)?;
    }
    let mech = load_mechanism(&path)?;
    let trials = over.trials.unwrap_or(cfg.simulation.trials);
    cfg.check_trials(trials)?;
    let seed = over.seed.unwrap_or(cfg.simulation.seed);

    let report = simulate(&env, &mech, trials, seed, cfg.simulation.bins, Execution::default());
    write_csv(
        &out.join("simulation.csv"),
        &["bin_lo", "bin_hi", "empirical_P", "analytic_P", "std_err"],
        report
            .bins
            .iter()
            .map(|b| vec![Some(b.bin_lo), Some(b.bin_hi), Some(b.empirical_p), Some(b.analytic_p), b.std_err]),
    )?;
    write_json(&out.join("report.json"), &report)?;

    let se = |x: Option<f64>| x.map_or_else(|| "n/a".to_string(), |v| format!("{v:.2e}"));
    println!(
        "buyer payoff {:.6} (se {}), analytic {:.6}",
        report.buyer_payoff.mean,
        se(report.buyer_payoff.std_error),
        report.analytic_buyer_payoff
    );
    println!(
        "social surplus {:.6} (se {}), analytic {:.6}",
        report.social_surplus.mean,
        se(report.social_surplus.std_error),
        report.analytic_social_surplus
    );
    Ok(report)
}

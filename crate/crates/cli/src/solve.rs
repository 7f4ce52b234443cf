use std::path::Path;

use procure_core::calculus::Grid;
use procure_core::mechanism::{build_mechanism, classify_on};
use procure_core::solver::{payoff, solve_weighted_on, Status, Which};

use crate::artifacts::{Payoffs, Summary, ALLOCATION, IRONING, MECHANISM, SUMMARY};
use crate::config::RunConfig;
use crate::error::Result;
use crate::io::{write_csv, write_json};

pub fn run(cfg: &RunConfig, out: &Path) -> Result<Summary> {
    let env = cfg.environment()?;
    let grid = Grid::new(cfg.numerics.grid);
    let sol = solve_weighted_on(&env, grid);
    let alloc = &sol.allocation;
    let mech = build_mechanism(&env, alloc);
    let n = env.n() as i32;

    write_json(&out.join(MECHANISM), &mech)?;
    write_csv(
        &out.join(ALLOCATION),
        &["s", "q", "P_hat", "P_star"],
        grid.nodes().map(|s| {
            let q = env.dist().quantile(s);
            vec![Some(s), Some(q), Some(alloc.value(s)), Some((1.0 - s).powi(n - 1))]
        }),
    )?;
    let ir = &sol.ironing;
    write_csv(
        &out.join(IRONING),
        &["s", "G", "Gbar", "gbar"],
        grid.nodes()
            .enumerate()
            .map(|(k, s)| vec![Some(s), Some(ir.cumulative[k]), Some(ir.hull[k]), Some(ir.gbar(s))]),
    )?;

    let summary = Summary {
        status: sol.status,
        no_trade: sol.status == Status::NoTrade,
        n: env.n(),
        gamma: env.gamma(),
        buyer_ir: env.buyer_ir(),
        grid: grid.cells(),
        classification: classify_on(&env, grid),
        payoffs: Payoffs {
            buyer: payoff(&env, alloc, Which::Buyer),
            social: payoff(&env, alloc, Which::Social),
            weighted: payoff(&env, alloc, Which::Weighted(env.gamma())),
        },
        lambda_star: sol.lambda_star,
        s_plus: sol.s_plus,
        s_zero: sol.s_zero,
        p_bar: sol.p_bar,
        pooling: sol.pooling(),
        step: sol.step,
        dual_monotone: sol.dual_monotone,
        clamp_binding: sol.clamp_binding,
        slackness_residual: sol.slackness_residual(),
    };
    write_json(&out.join(SUMMARY), &summary)?;

    println!("status: {:?}, step {}", summary.status, summary.step);
    if summary.no_trade {
        println!("no trade: the trivial mechanism is optimal");
    }
    println!("intervals: {:?}", mech.intervals);
    if let Some((b, zeta)) = mech.augmentation() {
        println!("extra bid {b} with qualification rate {zeta:.6}");
    }
    println!(
        "payoffs: buyer {:.6}, social {:.6}; lambda* {:.6}",
        summary.payoffs.buyer, summary.payoffs.social, summary.lambda_star
    );
    Ok(summary)
}

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use serde::{Deserialize, Serialize};

use crate::calculus::QuantileSurplus;
use crate::env::Environment;
use crate::quadrature::integrate;

use super::VerifyError;

/// Slack allowed when re-checking an oracle solution against its constraints.
const FEASIBILITY_TOL: f64 = 1e-9;

/// Bin-level version of the allocation problem: choose bin values `P_k`,
/// decreasing, in `[0, 1]`, with every prefix sum at most that of the
/// competitive allocation and, optionally, a non-negative buyer payoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteProgram {
    pub n: usize,
    pub bins: usize,
    /// `int_bin phi~` for the weighted objective.
    pub objective: Vec<f64>,
    /// `int_bin g~`, present when the buyer-payoff row is imposed.
    pub buyer_row: Option<Vec<f64>>,
    /// Bin averages of `(1 - s)^(n-1)`.
    pub p_star: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    /// `n sum_k objective_k P_k`.
    pub value: f64,
    pub bins: Vec<f64>,
}

impl DiscreteProgram {
    pub fn new(env: &Environment, bins: usize, buyer_row: bool) -> Self {
        let n = env.n();
        let h = QuantileSurplus::new(env, env.gamma(), 0.0);
        let g = QuantileSurplus::buyer(env);
        let edge = |k: usize| k as f64 / bins as f64;
        let objective = (0..bins)
            .map(|k| integrate(|s| h.at(s), edge(k), edge(k + 1)))
            .collect();
        let buyer_row = buyer_row.then(|| {
            (0..bins)
                .map(|k| integrate(|s| g.at(s), edge(k), edge(k + 1)))
                .collect()
        });
        let nf = n as f64;
        let p_star = (0..bins)
            .map(|k| {
                let (a, b) = (edge(k), edge(k + 1));
                ((1.0 - a).powf(nf) - (1.0 - b).powf(nf)) / (nf * (b - a))
            })
            .collect();
        DiscreteProgram {
            n,
            bins,
            objective,
            buyer_row,
            p_star,
        }
    }

    pub fn value_of(&self, bins: &[f64]) -> f64 {
        self.n as f64 * self.objective.iter().zip(bins).map(|(c, p)| c * p).sum::<f64>()
    }

    /// Solves the program with a general simplex solver.
    pub fn solve_lp(&self) -> Result<OracleSolution, VerifyError> {
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let scale = self.n as f64;
        let vars: Vec<_> = self
            .objective
            .iter()
            .map(|c| lp.add_var(scale * c, (0.0, 1.0)))
            .collect();
        for w in vars.windows(2) {
            lp.add_constraint([(w[0], 1.0), (w[1], -1.0)], ComparisonOp::Ge, 0.0);
        }
        let mut prefix = 0.0;
        for k in 0..self.bins {
            prefix += self.p_star[k];
            let row: Vec<_> = vars[..=k].iter().map(|&v| (v, 1.0)).collect();
            lp.add_constraint(row, ComparisonOp::Le, prefix);
        }
        if let Some(g) = &self.buyer_row {
            let row: Vec<_> = vars.iter().zip(g).map(|(&v, &c)| (v, c)).collect();
            lp.add_constraint(row, ComparisonOp::Ge, 0.0);
        }
        let solution = lp
            .solve()
            .map_err(|e| VerifyError::Lp(e.to_string()))?
            .into_solution()
            .map_err(|_| VerifyError::Lp("solve interrupted".into()))?;
        let bins: Vec<f64> = vars.iter().map(|&v| solution.var_value(v)).collect();
        Ok(OracleSolution {
            value: self.value_of(&bins),
            bins,
        })
    }

    /// Best allocation among those that average the competitive allocation
    /// over consecutive blocks of bins and vanish after a cutoff bin, by
    /// dynamic programming over block boundaries. Ignores the buyer row.
    pub fn solve_greedy(&self) -> OracleSolution {
        let k = self.bins;
        let mut c = vec![0.0; k + 1];
        let mut ps = vec![0.0; k + 1];
        for i in 0..k {
            c[i + 1] = c[i] + self.objective[i];
            ps[i + 1] = ps[i] + self.p_star[i];
        }
        let mut best = vec![0.0; k + 1];
        let mut from = vec![0usize; k + 1];
        for end in 1..=k {
            let mut top = f64::NEG_INFINITY;
            for start in 0..end {
                let mean = (ps[end] - ps[start]) / (end - start) as f64;
                let v = best[start] + (c[end] - c[start]) * mean;
                if v > top {
                    top = v;
                    from[end] = start;
                }
            }
            best[end] = top;
        }
        let (mut cut, mut top) = (0, 0.0);
        for (m, &v) in best.iter().enumerate() {
            if v > top {
                top = v;
                cut = m;
            }
        }
        let mut bins = vec![0.0; k];
        let mut end = cut;
        while end > 0 {
            let start = from[end];
            let mean = (ps[end] - ps[start]) / (end - start) as f64;
            bins[start..end].iter_mut().for_each(|b| *b = mean);
            end = start;
        }
        OracleSolution {
            value: self.value_of(&bins),
            bins,
        }
    }

    /// Whether `bins` satisfies every constraint of the program.
    pub fn is_feasible(&self, bins: &[f64]) -> bool {
        let tol = FEASIBILITY_TOL;
        if bins.iter().any(|&p| p < -tol || p > 1.0 + tol) {
            return false;
        }
        if bins.windows(2).any(|w| w[1] > w[0] + tol) {
            return false;
        }
        let (mut lhs, mut rhs) = (0.0, 0.0);
        for (p, s) in bins.iter().zip(&self.p_star) {
            lhs += p;
            rhs += s;
            if lhs > rhs + tol * (1.0 + rhs) {
                return false;
            }
        }
        match &self.buyer_row {
            Some(g) => g.iter().zip(bins).map(|(c, p)| c * p).sum::<f64>() >= -tol,
            None => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub bins: usize,
    pub lp: OracleSolution,
    /// Present when the program has no buyer row.
    pub greedy: Option<OracleSolution>,
    pub feasible: bool,
}

/// Solves the discretized program for `env` on `bins` bins, imposing the
/// buyer-payoff row iff `env.buyer_ir()`.
pub fn lp_oracle(env: &Environment, bins: usize) -> Result<OracleReport, VerifyError> {
    let program = DiscreteProgram::new(env, bins, env.buyer_ir());
    let lp = program.solve_lp()?;
    let greedy = program.buyer_row.is_none().then(|| program.solve_greedy());
    Ok(OracleReport {
        bins,
        feasible: program.is_feasible(&lp.bins),
        lp,
        greedy,
    })
}

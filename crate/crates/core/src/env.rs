//! Procurement environments: the quality distribution, the buyer's valuation
//! and the standing assumptions every solver routine relies on.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Probe points for the `F/f -> 0` limit check at the bottom of the support.
const HAZARD_PROBES: [f64; 3] = [1e-6, 1e-4, 1e-3];

/// Quality distribution on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Distribution {
    Uniform,
    /// `F(q) = q^alpha`.
    Power { alpha: f64 },
    /// Piecewise-linear CDF through strictly increasing `(q, F(q))` knots,
    /// starting at `(0, 0)` and ending at `(1, 1)`.
    Tabulated { points: Vec<(f64, f64)> },
}

impl Distribution {
    pub fn cdf(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        match self {
            Distribution::Uniform => q,
            Distribution::Power { alpha } => q.powf(*alpha),
            Distribution::Tabulated { points } => {
                let i = segment_index(points.iter().map(|p| p.0), points.len(), q);
                let (q0, f0) = points[i];
                let (q1, f1) = points[i + 1];
                f0 + (f1 - f0) * (q - q0) / (q1 - q0)
            }
        }
    }

    /// Density; at tabulated knots this is the slope of the segment to the right
    /// (the last segment at `q = 1`).
    pub fn pdf(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        match self {
            Distribution::Uniform => 1.0,
            Distribution::Power { alpha } => {
                if q == 0.0 {
                    if *alpha < 1.0 {
                        f64::INFINITY
                    } else if *alpha == 1.0 {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    alpha * q.powf(alpha - 1.0)
                }
            }
            Distribution::Tabulated { points } => {
                let i = segment_index(points.iter().map(|p| p.0), points.len(), q);
                let (q0, f0) = points[i];
                let (q1, f1) = points[i + 1];
                (f1 - f0) / (q1 - q0)
            }
        }
    }

    /// Inverse CDF `F^{-1}(s)`.
    pub fn quantile(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        match self {
            Distribution::Uniform => s,
            Distribution::Power { alpha } => s.powf(1.0 / alpha),
            Distribution::Tabulated { points } => {
                let i = segment_index(points.iter().map(|p| p.1), points.len(), s);
                let (q0, f0) = points[i];
                let (q1, f1) = points[i + 1];
                q0 + (q1 - q0) * (s - f0) / (f1 - f0)
            }
        }
    }

    /// `F(q)/f(q)`, with the limit value 0 at `q = 0`.
    pub fn hazard_ratio(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return 0.0;
        }
        match self {
            Distribution::Uniform => q,
            Distribution::Power { alpha } => q / alpha,
            Distribution::Tabulated { .. } => self.cdf(q) / self.pdf(q),
        }
    }

    fn validate(&self) -> Result<(), Assumption> {
        match self {
            Distribution::Uniform => Ok(()),
            Distribution::Power { alpha } => {
                if alpha.is_finite() && *alpha > 0.0 {
                    Ok(())
                } else {
                    Err(Assumption::MalformedDistribution(format!(
                        "power exponent must be positive and finite, got {alpha}"
                    )))
                }
            }
            Distribution::Tabulated { points } => {
                if points.len() < 2 {
                    return Err(Assumption::MalformedDistribution(
                        "tabulated CDF needs at least two knots".into(),
                    ));
                }
                let first = points[0];
                let last = points[points.len() - 1];
                if first != (0.0, 0.0) || last != (1.0, 1.0) {
                    return Err(Assumption::MalformedDistribution(
                        "tabulated CDF must run from (0, 0) to (1, 1)".into(),
                    ));
                }
                for w in points.windows(2) {
                    if !(w[1].0 > w[0].0) {
                        return Err(Assumption::MalformedDistribution(format!(
                            "tabulated qualities must be strictly increasing at q = {}",
                            w[1].0
                        )));
                    }
                    if !(w[1].1 > w[0].1) {
                        // flat CDF piece means zero density on an interior stretch
                        return Err(Assumption::DensityVanishes { q: w[0].0 });
                    }
                }
                Ok(())
            }
        }
    }
}

/// Index `i` of the segment `[x_i, x_{i+1}]` containing `x`.
fn segment_index(xs: impl Iterator<Item = f64>, len: usize, x: f64) -> usize {
    let upper = xs.skip(1).take_while(|&k| k <= x).count();
    upper.min(len - 2)
}

/// Buyer's valuation `v(q)` of a good of quality `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Valuation {
    /// `sum_i c_i q^i`.
    Polynomial { coefficients: Vec<f64> },
    /// `(a + b q) / (c + d q)`.
    Rational { a: f64, b: f64, c: f64, d: f64 },
    /// Mean of a Pareto variable with scale `x_m` and shape `A + B q`:
    /// `x_m (A + B q) / (A + B q - 1)`.
    ParetoConditionalMean {
        scale: f64,
        shape_intercept: f64,
        shape_slope: f64,
    },
}

impl Valuation {
    pub fn value(&self, q: f64) -> f64 {
        match self {
            Valuation::Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, c| acc * q + c)
            }
            Valuation::Rational { a, b, c, d } => (a + b * q) / (c + d * q),
            Valuation::ParetoConditionalMean {
                scale,
                shape_intercept,
                shape_slope,
            } => {
                let shape = shape_intercept + shape_slope * q;
                scale * shape / (shape - 1.0)
            }
        }
    }

    fn validate(&self) -> Result<(), Assumption> {
        match self {
            Valuation::Polynomial { coefficients } => {
                if coefficients.iter().all(|c| c.is_finite()) {
                    Ok(())
                } else {
                    Err(Assumption::MalformedValuation(
                        "polynomial coefficients must be finite".into(),
                    ))
                }
            }
            Valuation::Rational { a, b, c, d } => {
                if ![a, b, c, d].iter().all(|x| x.is_finite()) {
                    return Err(Assumption::MalformedValuation(
                        "rational coefficients must be finite".into(),
                    ));
                }
                // c + d q is affine, so a root in [0, 1] shows up as a sign change
                // (or zero) at the endpoints
                let (lo, hi) = (*c, c + d);
                if lo == 0.0 || hi == 0.0 || lo.signum() != hi.signum() {
                    return Err(Assumption::MalformedValuation(
                        "rational denominator vanishes on [0, 1]".into(),
                    ));
                }
                Ok(())
            }
            Valuation::ParetoConditionalMean {
                scale,
                shape_intercept,
                shape_slope,
            } => {
                if !scale.is_finite() || *scale <= 0.0 {
                    return Err(Assumption::MalformedValuation(format!(
                        "pareto scale must be positive, got {scale}"
                    )));
                }
                let at0 = *shape_intercept;
                let at1 = shape_intercept + shape_slope;
                if !(at0 > 1.0 && at1 > 1.0) {
                    return Err(Assumption::MalformedValuation(
                        "pareto shape must exceed 1 on [0, 1] for the mean to exist".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

/// The assumption an environment failed.
#[derive(Debug, Clone, PartialEq)]
pub enum Assumption {
    NegativeValueAtZero(f64),
    DensityVanishes { q: f64 },
    HazardRatioNotVanishing { ratios: [f64; 3] },
    TooFewSellers(usize),
    WeightOutOfRange(f64),
    MalformedDistribution(String),
    MalformedValuation(String),
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assumption::NegativeValueAtZero(v) => write!(f, "v(0) >= 0 fails: v(0) = {v}"),
            Assumption::DensityVanishes { q } => {
                write!(f, "density must be positive on (0, 1], vanishes near q = {q}")
            }
            Assumption::HazardRatioNotVanishing { ratios } => write!(
                f,
                "F(q)/f(q) must vanish as q -> 0, probes gave {:?}",
                ratios
            ),
            Assumption::TooFewSellers(n) => write!(f, "need n >= 2 sellers, got {n}"),
            Assumption::WeightOutOfRange(g) => write!(f, "weight gamma must lie in [0, 1], got {g}"),
            Assumption::MalformedDistribution(m) => write!(f, "distribution: {m}"),
            Assumption::MalformedValuation(m) => write!(f, "valuation: {m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("assumption violation: {0}")]
    AssumptionViolation(Assumption),
}

impl From<Assumption> for EnvError {
    fn from(a: Assumption) -> Self {
        EnvError::AssumptionViolation(a)
    }
}

/// A validated procurement instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Environment {
    n: usize,
    dist: Distribution,
    val: Valuation,
    gamma: f64,
    buyer_ir: bool,
}

impl Environment {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dist(&self) -> &Distribution {
        &self.dist
    }

    pub fn val(&self) -> &Valuation {
        &self.val
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn buyer_ir(&self) -> bool {
        self.buyer_ir
    }

    /// Same environment with a different welfare weight.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self, EnvError> {
        make_environment(self.n, self.dist.clone(), self.val.clone(), gamma, self.buyer_ir)
    }

    pub fn with_buyer_ir(&self, buyer_ir: bool) -> Self {
        Environment {
            buyer_ir,
            ..self.clone()
        }
    }

    /// `F(q)/f(q)`.
    pub fn hazard_ratio(&self, q: f64) -> f64 {
        hazard_ratio(self, q)
    }
}

/// Validates raw parameters against the standing assumptions.
pub fn make_environment(
    n: usize,
    dist: Distribution,
    val: Valuation,
    gamma: f64,
    buyer_ir: bool,
) -> Result<Environment, EnvError> {
    if n < 2 {
        return Err(Assumption::TooFewSellers(n).into());
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Assumption::WeightOutOfRange(gamma).into());
    }
    dist.validate()?;
    val.validate()?;

    let v0 = val.value(0.0);
    if !(v0 >= 0.0) {
        return Err(Assumption::NegativeValueAtZero(v0).into());
    }

    // interior density; parametric families are positive by construction
    if let Distribution::Power { .. } | Distribution::Uniform = dist {
        for k in 1..=1000 {
            let q = k as f64 / 1000.0;
            let f = dist.pdf(q);
            if !(f > 0.0) {
                return Err(Assumption::DensityVanishes { q }.into());
            }
        }
    }

    if dist.pdf(0.0) == 0.0 {
        let ratios = HAZARD_PROBES.map(|q| dist.cdf(q) / dist.pdf(q));
        let decreasing = ratios.windows(2).all(|w| w[0] <= w[1]);
        if !decreasing || !(ratios[0] < 1e-3) {
            return Err(Assumption::HazardRatioNotVanishing { ratios }.into());
        }
    }

    Ok(Environment {
        n,
        dist,
        val,
        gamma,
        buyer_ir,
    })
}

/// `F(q)/f(q)` for the environment's distribution; 0 at the bottom of the support.
pub fn hazard_ratio(env: &Environment, q: f64) -> f64 {
    env.dist.hazard_ratio(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn reliability() -> Valuation {
        Valuation::Rational {
            a: 1.0,
            b: 0.0,
            c: 1.33,
            d: -1.0,
        }
    }

    #[test]
    fn reliability_example_is_valid() {
        let env = make_environment(2, Distribution::Uniform, reliability(), 1.0, false).unwrap();
        assert_eq!(env.n(), 2);
        assert_abs_diff_eq!(env.val().value(0.0), 1.0 / 1.33, epsilon = 1e-15);
    }

    #[test]
    fn negative_value_at_zero_is_rejected() {
        let val = Valuation::Polynomial {
            coefficients: vec![-0.1, 1.0],
        };
        let err = make_environment(2, Distribution::Uniform, val, 1.0, false).unwrap_err();
        assert!(matches!(
            err,
            EnvError::AssumptionViolation(Assumption::NegativeValueAtZero(_))
        ));
        assert!(err.to_string().contains("v(0)"));
    }

    #[test]
    fn power_two_with_vanishing_density_is_valid() {
        let val = Valuation::Polynomial {
            coefficients: vec![0.0, 1.0],
        };
        let env = make_environment(3, Distribution::Power { alpha: 2.0 }, val, 0.5, true).unwrap();
        assert_eq!(env.dist().pdf(0.0), 0.0);
    }

    #[test]
    fn structural_parameters_are_checked() {
        let v = Valuation::Polynomial {
            coefficients: vec![1.0],
        };
        assert!(matches!(
            make_environment(1, Distribution::Uniform, v.clone(), 1.0, false),
            Err(EnvError::AssumptionViolation(Assumption::TooFewSellers(1)))
        ));
        assert!(matches!(
            make_environment(2, Distribution::Uniform, v, -0.5, false),
            Err(EnvError::AssumptionViolation(Assumption::WeightOutOfRange(_)))
        ));
    }

    #[test]
    fn hazard_ratio_examples() {
        let v = Valuation::Polynomial {
            coefficients: vec![0.0, 1.0],
        };
        let uni = make_environment(2, Distribution::Uniform, v.clone(), 1.0, false).unwrap();
        let pow = make_environment(2, Distribution::Power { alpha: 2.0 }, v, 1.0, false).unwrap();
        assert_abs_diff_eq!(hazard_ratio(&uni, 0.5), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(hazard_ratio(&pow, 0.4), 0.2, epsilon = 1e-15);
        assert_eq!(hazard_ratio(&uni, 0.0), 0.0);
    }

    #[test]
    fn rational_denominator_root_is_rejected() {
        let val = Valuation::Rational {
            a: 1.0,
            b: 0.0,
            c: 0.5,
            d: -1.0,
        };
        assert!(make_environment(2, Distribution::Uniform, val, 1.0, false).is_err());
    }

    #[test]
    fn pareto_shape_must_exceed_one() {
        let val = Valuation::ParetoConditionalMean {
            scale: 0.5,
            shape_intercept: 1.5,
            shape_slope: -1.0,
        };
        assert!(make_environment(2, Distribution::Uniform, val, 1.0, false).is_err());
    }

    #[test]
    fn tabulated_flat_piece_is_rejected() {
        let d = Distribution::Tabulated {
            points: vec![(0.0, 0.0), (0.5, 0.5), (0.7, 0.5), (1.0, 1.0)],
        };
        let v = Valuation::Polynomial {
            coefficients: vec![1.0],
        };
        assert!(matches!(
            make_environment(2, d, v, 1.0, false),
            Err(EnvError::AssumptionViolation(Assumption::DensityVanishes { .. }))
        ));
    }

    #[test]
    fn hazard_probe_accepts_shallow_power() {
        let d = Distribution::Power { alpha: 1e-3 };
        let v = Valuation::Polynomial {
            coefficients: vec![1.0],
        };
        assert!(make_environment(2, d, v, 1.0, false).is_ok());
    }

    #[test]
    fn tabulated_inverse_and_density() {
        let d = Distribution::Tabulated {
            points: vec![(0.0, 0.0), (0.25, 0.5), (1.0, 1.0)],
        };
        assert_abs_diff_eq!(d.cdf(0.125), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(d.pdf(0.1), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.pdf(0.5), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.quantile(0.75), 0.625, epsilon = 1e-15);
        assert_abs_diff_eq!(d.hazard_ratio(0.1), 0.1, epsilon = 1e-15);
    }
}

#![allow(dead_code)]

use procure_core::env::{make_environment, Distribution, Environment, Valuation};

pub fn env(n: usize, val: Valuation, gamma: f64, buyer_ir: bool) -> Environment {
    make_environment(n, Distribution::Uniform, val, gamma, buyer_ir).unwrap()
}

pub fn fig2(n: usize) -> Environment {
    env(
        n,
        Valuation::Polynomial {
            coefficients: vec![0.0, 4.0, -2.0],
        },
        1.0,
        false,
    )
}

pub fn example1(n: usize) -> Environment {
    env(
        n,
        Valuation::Rational {
            a: 1.0,
            b: 0.0,
            c: 1.33,
            d: -1.0,
        },
        1.0,
        false,
    )
}

pub fn example2(n: usize, buyer_ir: bool) -> Environment {
    env(
        n,
        Valuation::Polynomial {
            coefficients: vec![0.0, 2.6, -2.85, 2.25],
        },
        0.0,
        buyer_ir,
    )
}

pub fn appendix_d(n: usize) -> Environment {
    env(
        n,
        Valuation::Rational {
            a: 1.1,
            b: -0.5,
            c: 1.2,
            d: -1.0,
        },
        1.0,
        false,
    )
}

/// `v(q) - q` strictly decreasing, half weight on the buyer, participation
/// constraint imposed.
pub fn corollary_c2(n: usize) -> Environment {
    env(
        n,
        Valuation::Polynomial {
            coefficients: vec![0.8, 0.5],
        },
        0.5,
        true,
    )
}

/// Every bundled example environment with `n` sellers.
pub fn worked_environments(n: usize) -> Vec<(&'static str, Environment)> {
    vec![
        ("fig2", fig2(n)),
        ("example1", example1(n)),
        ("example2", example2(n, true)),
        ("appendixD", appendix_d(n)),
        ("corollaryC2", corollary_c2(n)),
    ]
}

//! Quantile-space calculus: virtual surplus, cumulative integrals, the least
//! concave majorant and the pooling structure it induces.

use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::quadrature::gauss8;

pub const DEFAULT_CELLS: usize = 4096;

/// A node is a contact node iff `Gbar - G <= CONTACT_TOL * max(1, max |G|)`.
pub const CONTACT_TOL: f64 = 1e-9;

/// Left/right tangency refinement passes per pooling interval.
const REFINE_PASSES: usize = 4;

/// Uniform grid `s_k = k / K` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    cells: usize,
}

impl Grid {
    pub fn new(cells: usize) -> Self {
        assert!(cells >= 2, "grid needs at least two cells");
        Grid { cells }
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn step(&self) -> f64 {
        1.0 / self.cells as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        if k == self.cells {
            1.0
        } else {
            k as f64 / self.cells as f64
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.cells).map(move |k| self.node(k))
    }
}

impl Default for Grid {
    fn default() -> Self {
        Grid::new(DEFAULT_CELLS)
    }
}

/// `h_gamma(q) + lambda * g(q)` with `h_gamma = v - q - gamma F/f` and `g = h_1`.
pub fn virtual_surplus(env: &Environment, gamma: f64, lambda: f64, q: f64) -> f64 {
    let base = env.val().value(q) - q;
    let ratio = env.hazard_ratio(q);
    base - gamma * ratio + lambda * (base - ratio)
}

/// The surplus `phi(F^{-1}(s); gamma, lambda)` as a function of the quantile.
#[derive(Debug, Clone, Copy)]
pub struct QuantileSurplus<'a> {
    pub env: &'a Environment,
    pub gamma: f64,
    pub lambda: f64,
}

impl<'a> QuantileSurplus<'a> {
    pub fn new(env: &'a Environment, gamma: f64, lambda: f64) -> Self {
        QuantileSurplus { env, gamma, lambda }
    }

    /// Buyer's virtual surplus `g~`.
    pub fn buyer(env: &'a Environment) -> Self {
        QuantileSurplus::new(env, 1.0, 0.0)
    }

    pub fn at(&self, s: f64) -> f64 {
        let q = self.env.dist().quantile(s);
        virtual_surplus(self.env, self.gamma, self.lambda, q)
    }

    /// `max |phi~|` over the grid nodes, floored at 1e-300.
    pub fn scale(&self, grid: &Grid) -> f64 {
        grid.nodes()
            .map(|s| self.at(s).abs())
            .fold(1e-300, f64::max)
    }
}

/// Trapezoidal cumulative of the quantile surplus at the grid nodes.
pub fn sample_cumulative(surplus: &QuantileSurplus<'_>, grid: &Grid) -> Vec<f64> {
    let h = grid.step();
    let values: Vec<f64> = grid.nodes().map(|s| surplus.at(s)).collect();
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Cumulative integral evaluated off-grid: Gauss-Legendre per cell, exact
/// enough to locate tangency points to well below a grid step.
#[derive(Debug, Clone)]
pub struct Cumulative<'a> {
    surplus: QuantileSurplus<'a>,
    grid: Grid,
    at_nodes: Vec<f64>,
}

impl<'a> Cumulative<'a> {
    pub fn new(surplus: QuantileSurplus<'a>, grid: Grid) -> Self {
        let f = |s: f64| surplus.at(s);
        let mut at_nodes = Vec::with_capacity(grid.cells() + 1);
        let mut acc = 0.0;
        at_nodes.push(0.0);
        for k in 0..grid.cells() {
            acc += gauss8(&f, grid.node(k), grid.node(k + 1));
            at_nodes.push(acc);
        }
        Cumulative {
            surplus,
            grid,
            at_nodes,
        }
    }

    pub fn at(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let k = ((x * self.grid.cells() as f64).floor() as usize).min(self.grid.cells() - 1);
        let lo = self.grid.node(k);
        let f = |s: f64| self.surplus.at(s);
        self.at_nodes[k] + gauss8(&f, lo, x)
    }
}

/// Least concave majorant of a sampled polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct Hull {
    pub values: Vec<f64>,
    pub contact: Vec<bool>,
}

/// Upper hull of the points `(k, samples[k])`, interpolated back to every node.
pub fn concave_hull(samples: &[f64]) -> Hull {
    let m = samples.len();
    let mut vertices: Vec<usize> = Vec::with_capacity(m);
    for i in 0..m {
        while vertices.len() >= 2 {
            let a = vertices[vertices.len() - 2];
            let b = vertices[vertices.len() - 1];
            let lhs = (samples[b] - samples[a]) * (i - a) as f64;
            let rhs = (samples[i] - samples[a]) * (b - a) as f64;
            if lhs <= rhs {
                vertices.pop();
            } else {
                break;
            }
        }
        vertices.push(i);
    }

    let mut values = vec![0.0; m];
    for w in vertices.windows(2) {
        let (a, b) = (w[0], w[1]);
        let slope = (samples[b] - samples[a]) / (b - a) as f64;
        for (k, v) in values.iter_mut().enumerate().take(b + 1).skip(a) {
            *v = samples[a] + slope * (k - a) as f64;
        }
        values[b] = samples[b];
    }
    if let Some(&only) = vertices.first() {
        values[only] = samples[only];
    }

    let scale = samples.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
    let contact = values
        .iter()
        .zip(samples)
        .map(|(hv, g)| hv - g <= CONTACT_TOL * scale)
        .collect();
    Hull { values, contact }
}

/// Node-index pairs `(i, j)` of consecutive contact nodes at least two cells
/// apart: the hull is affine and strictly above the samples between them.
pub fn pooling_intervals(hull: &Hull) -> Vec<(usize, usize)> {
    let contacts: Vec<usize> = hull
        .contact
        .iter()
        .enumerate()
        .filter_map(|(k, &c)| c.then_some(k))
        .collect();
    contacts
        .windows(2)
        .filter(|w| w[1] - w[0] >= 2)
        .map(|w| (w[0], w[1]))
        .collect()
}

/// Stretch of the ironed derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Piece {
    /// `gbar = phi~` on `[lo, hi]`.
    Competitive { lo: f64, hi: f64 },
    /// `gbar` constant at the chord slope on `[lo, hi]`.
    Pooled { lo: f64, hi: f64, slope: f64 },
}

impl Piece {
    pub fn lo(&self) -> f64 {
        match *self {
            Piece::Competitive { lo, .. } | Piece::Pooled { lo, .. } => lo,
        }
    }

    pub fn hi(&self) -> f64 {
        match *self {
            Piece::Competitive { hi, .. } | Piece::Pooled { hi, .. } => hi,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IroningResult {
    pub env: Environment,
    pub gamma: f64,
    pub lambda: f64,
    pub grid: Grid,
    /// Trapezoidal cumulative `G` at the nodes.
    pub cumulative: Vec<f64>,
    /// Concave majorant `Gbar` at the nodes.
    pub hull: Vec<f64>,
    pub contact: Vec<bool>,
    /// Pooling intervals `[lo, hi)` after tangency refinement.
    pub pooling: Vec<(f64, f64)>,
    pub pieces: Vec<Piece>,
    /// `max |phi~|` over the nodes.
    pub scale: f64,
}

impl IroningResult {
    pub fn surplus(&self) -> QuantileSurplus<'_> {
        QuantileSurplus::new(&self.env, self.gamma, self.lambda)
    }

    /// Forward differences of the sampled hull, one per node (the last node
    /// repeats the final cell).
    pub fn gbar_samples(&self) -> Vec<f64> {
        let k = self.grid.cells() as f64;
        let mut out: Vec<f64> = self.hull.windows(2).map(|w| (w[1] - w[0]) * k).collect();
        out.push(*out.last().unwrap_or(&0.0));
        out
    }

    /// Ironed derivative at `s` (right-continuous at piece boundaries).
    pub fn gbar(&self, s: f64) -> f64 {
        let piece = self
            .pieces
            .iter()
            .rev()
            .find(|p| p.lo() <= s)
            .or(self.pieces.first());
        match piece {
            Some(Piece::Pooled { slope, .. }) => *slope,
            _ => self.surplus().at(s),
        }
    }

    /// Exclusion cutoff: `sup{gbar >= 0}`, or `sup{gbar > 0}` when `strict`.
    /// Zero when the condition fails at the bottom of the support.
    pub fn cutoff(&self, strict: bool) -> f64 {
        let keep = |x: f64| if strict { x > 0.0 } else { x >= 0.0 };
        let surplus = self.surplus();
        let f = |s: f64| surplus.at(s);
        for piece in &self.pieces {
            match *piece {
                Piece::Pooled { lo, slope, .. } => {
                    if !keep(slope) {
                        return lo;
                    }
                }
                Piece::Competitive { lo, hi } => {
                    if !keep(f(lo)) {
                        return lo;
                    }
                    let h = self.grid.step();
                    let mut prev = lo;
                    let mut k = (lo / h).floor() as usize + 1;
                    loop {
                        let s = self.grid.node(k).min(hi);
                        if !keep(f(s)) {
                            return bisect(|x| keep(f(x)), prev, s);
                        }
                        if s >= hi {
                            break;
                        }
                        prev = s;
                        k += 1;
                    }
                }
            }
        }
        1.0
    }
}

/// Last point with `pred = true` when `pred(a)` holds and `pred(b)` fails.
fn bisect(pred: impl Fn(f64) -> bool, mut a: f64, mut b: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if pred(m) {
            a = m;
        } else {
            b = m;
        }
    }
    a
}

/// Root of `f` on `[a, b]` if the endpoint values bracket one.
fn bracketed_root(f: impl Fn(f64) -> f64, a: f64, b: f64) -> Option<f64> {
    if !(b > a) {
        return None;
    }
    let fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    Some(bisect(|x| f(x).signum() == fa.signum(), a, b))
}

/// Irons `phi(.; gamma, lambda)` on `grid`.
///
/// Pooling endpoints start at contact nodes and are refined on the continuous
/// tangency conditions; intervals narrower than two cells are discarded.
pub fn iron(env: &Environment, gamma: f64, lambda: f64, grid: Grid) -> IroningResult {
    let surplus = QuantileSurplus::new(env, gamma, lambda);
    let cumulative = sample_cumulative(&surplus, &grid);
    let Hull { values, contact } = concave_hull(&cumulative);
    let nodes = pooling_intervals(&Hull {
        values: values.clone(),
        contact: contact.clone(),
    });
    let scale = surplus.scale(&grid);

    let accurate = Cumulative::new(surplus, grid);
    let h = grid.step();
    let f = |s: f64| surplus.at(s);
    let mut pooling: Vec<(f64, f64)> = Vec::with_capacity(nodes.len());
    for &(i, j) in &nodes {
        let mut a = grid.node(i);
        let mut b = grid.node(j);
        for _ in 0..REFINE_PASSES {
            if i > 0 {
                let d_left = |x: f64| accurate.at(b) - accurate.at(x) - f(x) * (b - x);
                let lo = (a - 2.0 * h).max(0.0);
                let hi = (a + 2.0 * h).min(b - h);
                if let Some(r) = bracketed_root(d_left, lo, hi) {
                    a = r;
                }
            }
            if j < grid.cells() {
                let d_right = |y: f64| accurate.at(y) - accurate.at(a) - f(y) * (y - a);
                let lo = (b - 2.0 * h).max(a + h);
                let hi = (b + 2.0 * h).min(1.0);
                if let Some(r) = bracketed_root(d_right, lo, hi) {
                    b = r;
                }
            }
        }
        pooling.push((a, b));
    }
    for k in 1..pooling.len() {
        if pooling[k].0 < pooling[k - 1].1 {
            let shared = grid.node(nodes[k].0);
            pooling[k - 1].1 = shared;
            pooling[k].0 = shared;
        }
    }
    pooling.retain(|(a, b)| b - a >= 2.0 * h);

    let mut pieces = Vec::with_capacity(2 * pooling.len() + 1);
    let mut cursor = 0.0;
    for &(a, b) in &pooling {
        if a > cursor {
            pieces.push(Piece::Competitive { lo: cursor, hi: a });
        }
        let slope = (accurate.at(b) - accurate.at(a)) / (b - a);
        pieces.push(Piece::Pooled { lo: a, hi: b, slope });
        cursor = b;
    }
    if cursor < 1.0 {
        pieces.push(Piece::Competitive { lo: cursor, hi: 1.0 });
    }

    IroningResult {
        env: env.clone(),
        gamma,
        lambda,
        grid,
        cumulative,
        hull: values,
        contact,
        pooling,
        pieces,
        scale,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{make_environment, Distribution, Valuation};
    use approx::assert_abs_diff_eq;

    fn poly(coefficients: Vec<f64>) -> Environment {
        make_environment(
            2,
            Distribution::Uniform,
            Valuation::Polynomial { coefficients },
            1.0,
            false,
        )
        .unwrap()
    }

    fn fig2() -> Environment {
        poly(vec![0.0, 4.0, -2.0])
    }

    fn example1() -> Environment {
        make_environment(
            2,
            Distribution::Uniform,
            Valuation::Rational {
                a: 1.0,
                b: 0.0,
                c: 1.33,
                d: -1.0,
            },
            1.0,
            false,
        )
        .unwrap()
    }

    fn example2() -> Environment {
        poly(vec![0.0, 2.6, -2.85, 2.25])
            .with_gamma(0.0)
            .unwrap()
    }

    #[test]
    fn surplus_examples() {
        assert_abs_diff_eq!(
            virtual_surplus(&example1(), 1.0, 0.0, 0.0),
            0.7518796992481203,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            virtual_surplus(&example2(), 0.0, 0.0, 0.5),
            0.36875,
            epsilon = 1e-12
        );
        let env = example1();
        for q in [0.0, 0.3, 0.9] {
            assert_abs_diff_eq!(
                virtual_surplus(&env, 0.4, 0.0, q),
                env.val().value(q) - q - 0.4 * q,
                epsilon = 1e-15
            );
            assert_abs_diff_eq!(
                virtual_surplus(&env, 0.0, 1.0, q),
                virtual_surplus(&env, 0.0, 0.0, q) + virtual_surplus(&env, 1.0, 0.0, q),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn fig2_cumulative_matches_closed_form() {
        let env = fig2();
        let grid = Grid::default();
        let g = sample_cumulative(&QuantileSurplus::buyer(&env), &grid);
        for (k, s) in grid.nodes().enumerate() {
            assert_abs_diff_eq!(g[k], s * s - 2.0 / 3.0 * s * s * s, epsilon = 1e-7);
        }
    }

    #[test]
    fn constant_surplus_cumulative_is_exact() {
        let env = poly(vec![0.3, 2.0]);
        let grid = Grid::new(256);
        let g = sample_cumulative(&QuantileSurplus::buyer(&env), &grid);
        for (k, s) in grid.nodes().enumerate() {
            assert_abs_diff_eq!(g[k], 0.3 * s, epsilon = 1e-14);
        }
    }

    #[test]
    fn example1_total_cumulative() {
        let env = example1();
        let g = sample_cumulative(&QuantileSurplus::buyer(&env), &Grid::default());
        let exact = (1.33f64 / 0.33).ln() - 1.0;
        assert_abs_diff_eq!(g[g.len() - 1], exact, epsilon = 1e-6);
        assert_abs_diff_eq!(exact, 0.394, epsilon = 5e-4);
    }

    #[test]
    fn hull_of_concave_input_is_identity() {
        let grid = Grid::new(512);
        let g: Vec<f64> = grid.nodes().map(|s| s - s * s / 2.0).collect();
        let hull = concave_hull(&g);
        assert_eq!(hull.values, g);
        assert!(hull.contact.iter().all(|&c| c));
        assert!(pooling_intervals(&hull).is_empty());
    }

    #[test]
    fn hull_of_convex_input_is_chord() {
        let grid = Grid::new(512);
        let g: Vec<f64> = grid.nodes().map(|s| s * s).collect();
        let hull = concave_hull(&g);
        for (k, s) in grid.nodes().enumerate() {
            assert_abs_diff_eq!(hull.values[k], s, epsilon = 1e-15);
        }
        assert_eq!(pooling_intervals(&hull), vec![(0, 512)]);
    }

    #[test]
    fn fig2_pools_bottom_quarter_to_three_quarters() {
        let ir = iron(&fig2(), 1.0, 0.0, Grid::default());
        assert_eq!(ir.pooling.len(), 1);
        assert_eq!(ir.pooling[0].0, 0.0);
        assert_abs_diff_eq!(ir.pooling[0].1, 0.75, epsilon = 1e-9);
        assert_eq!(ir.cutoff(false), 1.0);
    }

    #[test]
    fn example1_pooling_onset() {
        let ir = iron(&example1(), 1.0, 0.0, Grid::default());
        assert_eq!(ir.pooling.len(), 1);
        let (a, b) = ir.pooling[0];
        assert_abs_diff_eq!(a, 0.3457, epsilon = 1e-4);
        assert_eq!(b, 1.0);
        match ir.pieces[1] {
            Piece::Pooled { slope, .. } => assert_abs_diff_eq!(slope, 0.324, epsilon = 1e-3),
            other => panic!("expected pooled piece, got {other:?}"),
        }
    }

    #[test]
    fn decreasing_surplus_has_no_pooling() {
        // g~(s) = 1 - 2s for v(q) = 1, uniform
        let ir = iron(&poly(vec![1.0]), 1.0, 0.0, Grid::default());
        assert!(ir.pooling.is_empty());
        assert_abs_diff_eq!(ir.cutoff(false), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn negative_surplus_cuts_off_at_zero() {
        let env = poly(vec![0.0, 0.0]);
        let ir = iron(&env, 1.0, 0.0, Grid::new(256));
        assert_eq!(ir.cutoff(false), 0.0);
    }

    #[test]
    fn strict_and_weak_cutoffs_differ_on_zero_surplus() {
        // v(q) = 2q gives g~ = 0 identically
        let ir = iron(&poly(vec![0.0, 2.0]), 1.0, 0.0, Grid::new(256));
        assert_eq!(ir.cutoff(false), 1.0);
        assert_eq!(ir.cutoff(true), 0.0);
    }

    #[test]
    fn hull_invariants_on_example1() {
        let ir = iron(&example1(), 1.0, 0.0, Grid::default());
        let scale = ir.cumulative.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        for (hv, g) in ir.hull.iter().zip(&ir.cumulative) {
            assert!(hv - g >= -1e-12 * scale);
        }
        let gbar = ir.gbar_samples();
        for w in gbar.windows(2) {
            assert!(w[1] <= w[0] + 1e-10 * ir.scale);
        }
    }

    #[test]
    fn gbar_is_piecewise() {
        let ir = iron(&example1(), 1.0, 0.0, Grid::default());
        assert_abs_diff_eq!(ir.gbar(0.1), ir.surplus().at(0.1), epsilon = 1e-15);
        assert_abs_diff_eq!(ir.gbar(0.8), 0.324, epsilon = 1e-3);
    }
}

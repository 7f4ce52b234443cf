use serde::{Deserialize, Serialize};

use crate::auction::exact_pooled_interim;
use crate::calculus::{IroningResult, Piece};
use crate::quadrature::integrate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SegmentKind {
    /// `(1 - s)^(n-1)`.
    Competitive,
    /// Conditional mean of the competitive allocation over the segment.
    Pooled { value: f64 },
    /// Constrained flat tail, at most the conditional mean.
    Tail { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    #[serde(flatten)]
    pub kind: SegmentKind,
}

impl Segment {
    pub fn flat_value(&self) -> Option<f64> {
        match self.kind {
            SegmentKind::Competitive => None,
            SegmentKind::Pooled { value } | SegmentKind::Tail { value } => Some(value),
        }
    }
}

/// Piecewise quantile interim allocation `P(s)`.
///
/// Point evaluation follows the auction's tie structure: flat segments are
/// closed at both ends (the later one wins at a shared point), competitive
/// segments take the remaining points, and the allocation vanishes on
/// `[cutoff, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterimAllocation {
    pub n: usize,
    pub segments: Vec<Segment>,
    pub cutoff: f64,
}

impl InterimAllocation {
    /// The no-trade allocation.
    pub fn zero(n: usize) -> Self {
        InterimAllocation {
            n,
            segments: Vec::new(),
            cutoff: 0.0,
        }
    }

    /// `(1 - s)^(n-1)` on `[0, cutoff)`.
    pub fn competitive(n: usize, cutoff: f64) -> Self {
        InterimAllocation {
            n,
            segments: vec![Segment {
                lo: 0.0,
                hi: cutoff,
                kind: SegmentKind::Competitive,
            }],
            cutoff,
        }
    }

    /// Constant `c` on `[0, 1)`.
    pub fn constant(n: usize, c: f64) -> Self {
        InterimAllocation {
            n,
            segments: vec![Segment {
                lo: 0.0,
                hi: 1.0,
                kind: SegmentKind::Tail { value: c },
            }],
            cutoff: 1.0,
        }
    }

    /// Competitive allocation pooled over the ironing's pooling intervals,
    /// truncated at `cutoff`.
    pub fn from_ironing(ir: &IroningResult, cutoff: f64) -> Self {
        let n = ir.env.n();
        let mut segments = Vec::with_capacity(ir.pieces.len());
        for piece in &ir.pieces {
            let lo = piece.lo();
            if lo >= cutoff {
                break;
            }
            let hi = piece.hi().min(cutoff);
            let kind = match piece {
                Piece::Competitive { .. } => SegmentKind::Competitive,
                Piece::Pooled { .. } => SegmentKind::Pooled {
                    value: exact_pooled_interim(lo, hi, n),
                },
            };
            segments.push(Segment { lo, hi, kind });
        }
        InterimAllocation {
            n,
            segments,
            cutoff,
        }
    }

    pub fn competitive_value(&self, s: f64) -> f64 {
        (1.0 - s).powi(self.n as i32 - 1)
    }

    pub fn value(&self, s: f64) -> f64 {
        if s >= self.cutoff {
            return 0.0;
        }
        if let Some(seg) = self
            .segments
            .iter()
            .rev()
            .find(|g| g.flat_value().is_some() && g.lo <= s && s <= g.hi)
        {
            return seg.flat_value().unwrap_or(0.0);
        }
        if self
            .segments
            .iter()
            .any(|g| g.kind == SegmentKind::Competitive && g.lo <= s && s <= g.hi)
        {
            return self.competitive_value(s);
        }
        0.0
    }

    /// `P` at every node of a uniform grid with `cells` cells.
    pub fn sample(&self, cells: usize) -> Vec<f64> {
        (0..=cells)
            .map(|k| self.value(k as f64 / cells as f64))
            .collect()
    }

    /// `int_0^x P`.
    pub fn integral(&self, x: f64) -> f64 {
        let n = self.n as f64;
        self.active_segments()
            .filter(|&(lo, _, _)| lo < x)
            .map(|(lo, hi, kind)| {
                let hi = hi.min(x);
                match kind {
                    SegmentKind::Competitive => ((1.0 - lo).powf(n) - (1.0 - hi).powf(n)) / n,
                    SegmentKind::Pooled { value } | SegmentKind::Tail { value } => {
                        value * (hi - lo)
                    }
                }
            })
            .sum()
    }

    /// `int_0^1 f(s) P(s) ds`.
    pub fn integrate_against(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.active_segments()
            .map(|(lo, hi, kind)| match kind {
                SegmentKind::Competitive => integrate(|s| f(s) * self.competitive_value(s), lo, hi),
                SegmentKind::Pooled { value } | SegmentKind::Tail { value } => {
                    value * integrate(&f, lo, hi)
                }
            })
            .sum()
    }

    /// Average of `P` over `[a, b]`.
    pub fn average(&self, a: f64, b: f64) -> f64 {
        if b > a {
            (self.integral(b) - self.integral(a)) / (b - a)
        } else {
            self.value(a)
        }
    }

    /// Whether `P` never increases, up to `tol`.
    pub fn is_decreasing(&self, tol: f64) -> bool {
        let mut last = f64::INFINITY;
        for (lo, hi, kind) in self.active_segments() {
            let (start, end) = match kind {
                SegmentKind::Competitive => (self.competitive_value(lo), self.competitive_value(hi)),
                SegmentKind::Pooled { value } | SegmentKind::Tail { value } => (value, value),
            };
            if start > last + tol || !(0.0..=1.0 + tol).contains(&start) {
                return false;
            }
            last = end;
        }
        true
    }

    /// Flat segments with their values.
    pub fn flats(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.segments
            .iter()
            .filter_map(|g| g.flat_value().map(|v| (g.lo, g.hi, v)))
    }

    fn active_segments(&self) -> impl Iterator<Item = (f64, f64, SegmentKind)> + '_ {
        self.segments
            .iter()
            .filter(move |g| g.lo < self.cutoff && g.hi > g.lo)
            .map(move |g| (g.lo, g.hi.min(self.cutoff), g.kind))
    }
}

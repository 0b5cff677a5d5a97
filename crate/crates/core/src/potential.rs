//! Piecewise-constant unit cells.
//!
//! A cell is an ordered list of constant segments laid out from x = 0. The
//! total width `b` is the sum of the segment widths. Adjacent segments of
//! equal height are kept as given; nothing is merged.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// One constant piece of a potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub width: f64,
    pub height: f64,
}

impl Segment {
    pub fn new(width: f64, height: f64) -> Self {
        Segment { width, height }
    }
}

/// Cantor-like construction rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CantorVariant {
    /// Removes the middle `ratio` fraction of every barrier segment at each step.
    Standard { ratio: f64 },
    /// Smith–Volterra–Cantor: at step j (1-indexed) removes the middle 1/4^j
    /// fraction of every barrier segment.
    SmithVolterra,
}

impl CantorVariant {
    /// Fraction of each barrier segment removed at `step` (1-indexed).
    fn removed_fraction(&self, step: u32) -> f64 {
        match *self {
            CantorVariant::Standard { ratio } => ratio,
            CantorVariant::SmithVolterra => 0.25f64.powi(step as i32),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstantPotential {
    segments: Vec<Segment>,
    width: f64,
}

impl PiecewiseConstantPotential {
    /// Builds a potential from `(width, height)` pieces in left-to-right order.
    pub fn from_segments(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(invalid("potential needs at least one segment"));
        }
        for (i, seg) in segments.iter().enumerate() {
            if !(seg.width.is_finite() && seg.width > 0.0) {
                return Err(invalid(format!(
                    "segment {i}: width must be positive and finite, got {}",
                    seg.width
                )));
            }
            if !seg.height.is_finite() {
                return Err(invalid(format!(
                    "segment {i}: height must be finite, got {}",
                    seg.height
                )));
            }
        }
        let width = segments.iter().map(|s| s.width).sum();
        Ok(PiecewiseConstantPotential { segments, width })
    }

    /// Single barrier (or well, or free region) of height `height` and width `width`.
    pub fn rectangular(height: f64, width: f64) -> Result<Self> {
        Self::from_segments(vec![Segment::new(width, height)])
    }

    /// Convenience form of [`from_segments`](Self::from_segments) taking `(width, height)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::from_segments(pairs.iter().map(|&(w, h)| Segment::new(w, h)).collect())
    }

    /// Cantor or SVC barrier of height `height` after `level` middle-removal
    /// steps applied to a single barrier of width `total_width`. Removed
    /// intervals become zero-height segments.
    pub fn cantor(
        variant: CantorVariant,
        level: u32,
        height: f64,
        total_width: f64,
    ) -> Result<Self> {
        if let CantorVariant::Standard { ratio } = variant {
            if !(ratio > 0.0 && ratio < 1.0) {
                return Err(invalid(format!(
                    "cantor ratio must lie in (0, 1), got {ratio}"
                )));
            }
        }
        if !(total_width.is_finite() && total_width > 0.0) {
            return Err(invalid(format!(
                "cantor total width must be positive and finite, got {total_width}"
            )));
        }
        if !height.is_finite() {
            return Err(invalid(format!(
                "cantor height must be finite, got {height}"
            )));
        }

        let mut segments = vec![Segment::new(total_width, height)];
        for step in 1..=level {
            let fraction = variant.removed_fraction(step);
            let mut next = Vec::with_capacity(segments.len() * 3);
            for seg in segments {
                if seg.height == 0.0 {
                    next.push(seg);
                    continue;
                }
                let gap = seg.width * fraction;
                let side = 0.5 * (seg.width - gap);
                next.push(Segment::new(side, seg.height));
                next.push(Segment::new(gap, 0.0));
                next.push(Segment::new(side, seg.height));
            }
            segments = next;
        }
        Self::from_segments(segments)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Total width b.
    pub fn width(&self) -> f64 {
        self.width
    }

    /// Largest segment height.
    pub fn max_height(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.height)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Combined width of the segments with nonzero height.
    pub fn barrier_width(&self) -> f64 {
        self.segments
            .iter()
            .filter(|s| s.height != 0.0)
            .map(|s| s.width)
            .sum()
    }

    /// Same shape stretched uniformly to total width `width`.
    pub fn scaled_to_width(&self, width: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(invalid(format!(
                "target width must be positive, got {width}"
            )));
        }
        let factor = width / self.width;
        Self::from_segments(
            self.segments
                .iter()
                .map(|s| Segment::new(s.width * factor, s.height))
                .collect(),
        )
    }

    /// Splits into the first `index` segments and the rest.
    pub fn split_at(&self, index: usize) -> Result<(Self, Self)> {
        if index == 0 || index >= self.segments.len() {
            return Err(invalid(format!(
                "split index {index} must lie in 1..{}",
                self.segments.len()
            )));
        }
        let (left, right) = self.segments.split_at(index);
        Ok((
            Self::from_segments(left.to_vec())?,
            Self::from_segments(right.to_vec())?,
        ))
    }
}

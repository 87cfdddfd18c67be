//! Equations and iteration sub-regions.

use std::fmt;

use super::expr::Expr;
use crate::error::{Result, SfError};

/// Position along an axis, counted from either end of the unpadded grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Bound {
    Start(usize),
    /// `End(k)` resolves to `n - k`.
    End(usize),
}

impl Bound {
    pub fn resolve(self, n: usize) -> Option<usize> {
        match self {
            Bound::Start(k) => (k <= n).then_some(k),
            Bound::End(k) => n.checked_sub(k),
        }
    }
}

/// Per-axis half-open iteration bounds.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Region {
    pub axes: Vec<(Bound, Bound)>,
}

impl Region {
    pub fn full(ndim: usize) -> Region {
        Region { axes: vec![(Bound::Start(0), Bound::End(0)); ndim] }
    }

    /// All points at least `w` away from every edge.
    pub fn interior(ndim: usize, w: usize) -> Region {
        Region { axes: vec![(Bound::Start(w), Bound::End(w)); ndim] }
    }

    /// Full extent except `[lo, hi)` along `axis`.
    pub fn slab(ndim: usize, axis: usize, lo: Bound, hi: Bound) -> Region {
        let mut r = Region::full(ndim);
        r.axes[axis] = (lo, hi);
        r
    }

    pub fn resolve(&self, shape: &[usize]) -> Result<Vec<(usize, usize)>> {
        if self.axes.len() != shape.len() {
            return Err(SfError::Lowering(format!(
                "region has {} axes, grid has {}",
                self.axes.len(),
                shape.len()
            )));
        }
        self.axes
            .iter()
            .zip(shape)
            .map(|(&(lo, hi), &n)| match (lo.resolve(n), hi.resolve(n)) {
                (Some(a), Some(b)) if a <= b => Ok((a, b)),
                _ => Err(SfError::Lowering(format!("region bounds {lo:?}..{hi:?} invalid for extent {n}"))),
            })
            .collect()
    }
}

/// `lhs = rhs`, or `lhs += rhs` when accumulating.
#[derive(Debug, Clone, PartialEq)]
pub struct Equation {
    pub lhs: Expr,
    pub rhs: Expr,
    pub region: Option<Region>,
    pub accumulate: bool,
}

impl Equation {
    pub fn new(lhs: impl Into<Expr>, rhs: impl Into<Expr>) -> Equation {
        Equation { lhs: lhs.into(), rhs: rhs.into(), region: None, accumulate: false }
    }

    pub fn inc(lhs: impl Into<Expr>, rhs: impl Into<Expr>) -> Equation {
        Equation { accumulate: true, ..Equation::new(lhs, rhs) }
    }

    pub fn with_region(mut self, region: Region) -> Equation {
        self.region = Some(region);
        self
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = if self.accumulate { "+=" } else { "=" };
        write!(f, "{} {op} {}", self.lhs, self.rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn region_resolution() {
        let r = Region::interior(2, 1);
        assert_eq!(r.resolve(&[5, 7]).unwrap(), vec![(1, 4), (1, 6)]);
        let s = Region::slab(2, 0, Bound::Start(0), Bound::Start(1));
        assert_eq!(s.resolve(&[5, 7]).unwrap(), vec![(0, 1), (0, 7)]);
        assert!(Region::interior(2, 4).resolve(&[5, 7]).is_err());
    }
}

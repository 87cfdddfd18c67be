//! Scheduled loop-nest IR.

use std::fmt::{self, Write};
use std::sync::Arc;

use crate::grid::{Dimension, Grid};
use crate::symbolic::{Access, Expr, FieldRef};

/// Left-hand side of an assignment.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Field(Access),
    /// Single-assignment scalar temporary, local to one loop body.
    Temp(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub target: Target,
    pub value: Expr,
    pub accumulate: bool,
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = if self.accumulate { "+=" } else { "=" };
        match &self.target {
            Target::Field(a) => write!(f, "{} {op} {}", Expr::access(a.field.clone(), a.indices.clone()), self.value),
            Target::Temp(n) => write!(f, "{n} {op} {}", self.value),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// How a space loop walks its axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopKind {
    /// Plain loop over `[lo, hi)`.
    Range,
    /// Walks tile origins `lo, lo + tile, ...` below `hi`.
    BlockOuter { tile: usize },
    /// Walks `[origin, min(origin + tile, hi))` of the enclosing tile loop.
    BlockInner { tile: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Iteration {
    pub dim: Dimension,
    pub axis: usize,
    pub lo: usize,
    pub hi: usize,
    pub kind: LoopKind,
    pub parallel: bool,
    pub vectorizable: bool,
}

/// Perfect space loop nest over a rectangular box of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Nest {
    pub grid: Arc<Grid>,
    /// Half-open bounds per grid axis.
    pub bounds: Vec<(usize, usize)>,
    pub loops: Vec<Iteration>,
    pub body: Vec<Assignment>,
}

impl Nest {
    pub fn new(grid: Arc<Grid>, bounds: Vec<(usize, usize)>, body: Vec<Assignment>) -> Nest {
        let nd = bounds.len();
        let loops = bounds
            .iter()
            .enumerate()
            .map(|(ax, &(lo, hi))| Iteration {
                dim: Dimension::space(ax),
                axis: ax,
                lo,
                hi,
                kind: LoopKind::Range,
                parallel: true,
                vectorizable: ax + 1 == nd,
            })
            .collect();
        Nest { grid, bounds, loops, body }
    }

    /// Number of points the nest visits.
    pub fn points(&self) -> usize {
        self.bounds.iter().map(|&(lo, hi)| hi - lo).product()
    }

    /// Tile sizes if blocked.
    pub fn tiles(&self) -> Option<Vec<usize>> {
        let t: Vec<usize> = self
            .loops
            .iter()
            .filter_map(|l| match l.kind {
                LoopKind::BlockOuter { tile } => Some(tile),
                _ => None,
            })
            .collect();
        (!t.is_empty()).then_some(t)
    }

    /// Enumerate visited points by simulating the loop structure.
    pub fn enumerate(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut idx = vec![0usize; self.bounds.len()];
        let mut origin = vec![0usize; self.bounds.len()];
        self.walk(0, &mut idx, &mut origin, &mut out);
        out
    }

    fn walk(&self, level: usize, idx: &mut Vec<usize>, origin: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if level == self.loops.len() {
            out.push(idx.clone());
            return;
        }
        let l = &self.loops[level];
        match l.kind {
            LoopKind::Range => {
                for i in l.lo..l.hi {
                    idx[l.axis] = i;
                    self.walk(level + 1, idx, origin, out);
                }
            }
            LoopKind::BlockOuter { tile } => {
                let mut o = l.lo;
                while o < l.hi {
                    origin[l.axis] = o;
                    self.walk(level + 1, idx, origin, out);
                    o += tile;
                }
            }
            LoopKind::BlockInner { tile } => {
                let start = origin[l.axis];
                for i in start..(start + tile).min(l.hi) {
                    idx[l.axis] = i;
                    self.walk(level + 1, idx, origin, out);
                }
            }
        }
    }
}

/// Serial block of point updates (sparse injection or interpolation).
#[derive(Debug, Clone, PartialEq)]
pub struct PointBlock {
    pub body: Vec<Assignment>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Section {
    Nest(Nest),
    Points(PointBlock),
}

/// Time loop descriptor; concrete bounds are derived at execution time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeLoop {
    pub direction: Direction,
    /// Smallest and largest relative time offsets over all accesses.
    pub min_offset: i64,
    pub max_offset: i64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoopNestIR {
    /// Scalars evaluated once before any loop, in order.
    pub scalars: Vec<(String, Expr)>,
    /// Loop nests computing hoisted time-invariant arrays.
    pub prologue: Vec<Nest>,
    pub time: Option<TimeLoop>,
    /// Sections executed inside the time loop (or once when there is none).
    pub body: Vec<Section>,
    /// Arrays introduced by invariant hoisting.
    pub temporaries: Vec<FieldRef>,
}

impl LoopNestIR {
    pub fn nests(&self) -> impl Iterator<Item = &Nest> {
        self.body.iter().filter_map(|s| match s {
            Section::Nest(n) => Some(n),
            _ => None,
        })
    }

    pub fn nests_mut(&mut self) -> impl Iterator<Item = &mut Nest> {
        self.body.iter_mut().filter_map(|s| match s {
            Section::Nest(n) => Some(n),
            _ => None,
        })
    }

    /// All assignments in execution order (prologue first).
    pub fn assignments(&self) -> Vec<&Assignment> {
        let mut v: Vec<&Assignment> = self.prologue.iter().flat_map(|n| n.body.iter()).collect();
        for s in &self.body {
            match s {
                Section::Nest(n) => v.extend(n.body.iter()),
                Section::Points(p) => v.extend(p.body.iter()),
            }
        }
        v
    }

    /// Deterministic plain-text rendering.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (n, e) in &self.scalars {
            let _ = writeln!(s, "scalar {n} = {e}");
        }
        for n in &self.prologue {
            dump_nest(&mut s, n, 0);
        }
        let mut depth = 0;
        if let Some(t) = &self.time {
            let dir = match t.direction {
                Direction::Forward => "forward",
                Direction::Backward => "backward",
            };
            let _ = writeln!(s, "for t in [time_m, time_M] {dir}");
            depth = 1;
        }
        for sec in &self.body {
            match sec {
                Section::Nest(n) => dump_nest(&mut s, n, depth),
                Section::Points(p) => {
                    let _ = writeln!(s, "{}points serial", "  ".repeat(depth));
                    for a in &p.body {
                        let _ = writeln!(s, "{}{a}", "  ".repeat(depth + 1));
                    }
                }
            }
        }
        s
    }
}

fn dump_nest(s: &mut String, n: &Nest, depth: usize) {
    for (i, l) in n.loops.iter().enumerate() {
        let mut ann = Vec::new();
        if l.parallel {
            ann.push("parallel".to_string());
        }
        if l.vectorizable {
            ann.push("vectorizable".to_string());
        }
        let head = match l.kind {
            LoopKind::Range => format!("for {} in [{}, {})", l.dim, l.lo, l.hi),
            LoopKind::BlockOuter { tile } => {
                ann.push(format!("blocked({tile})"));
                format!("for {}_blk in [{}, {}) step {tile}", l.dim, l.lo, l.hi)
            }
            LoopKind::BlockInner { tile } => {
                format!("for {} in [{}_blk, min({}_blk + {tile}, {}))", l.dim, l.dim, l.dim, l.hi)
            }
        };
        let _ = writeln!(s, "{}{head} {{{}}}", "  ".repeat(depth + i), ann.join(", "));
    }
    for a in &n.body {
        let _ = writeln!(s, "{}{a}", "  ".repeat(depth + n.loops.len()));
    }
}

//! Flop and byte accounting on scheduled IR.

use std::collections::BTreeSet;

use serde::Serialize;

use super::ir::{Assignment, LoopNestIR, Nest, Section, Target};
use crate::symbolic::expr::{split_coeff, Expr, Node};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FlopCount {
    pub adds: usize,
    pub muls: usize,
    pub divs: usize,
}

impl FlopCount {
    pub fn total(&self) -> usize {
        self.adds + self.muls + self.divs
    }
}

impl std::ops::Add for FlopCount {
    type Output = FlopCount;
    fn add(self, o: FlopCount) -> FlopCount {
        FlopCount { adds: self.adds + o.adds, muls: self.muls + o.muls, divs: self.divs + o.divs }
    }
}

impl std::ops::AddAssign for FlopCount {
    fn add_assign(&mut self, o: FlopCount) {
        *self = *self + o;
    }
}

fn is_sign(e: &Expr) -> bool {
    e.as_num().is_some_and(|n| n.is_one() || n.is_minus_one())
}

/// Operations needed to evaluate `e` once.
pub fn expr_flops(e: &Expr) -> FlopCount {
    let mut c = FlopCount::default();
    match e.node() {
        Node::Add(ch) => {
            c.adds += ch.len() - 1;
            for t in ch {
                // A negated term becomes a subtraction: do not charge the sign.
                let (k, rest) = split_coeff(t);
                if k.is_minus_one() {
                    c += expr_flops(&rest);
                } else {
                    c += expr_flops(t);
                }
            }
        }
        Node::Mul(ch) => {
            let n = ch.iter().filter(|f| !is_sign(f)).count();
            c.muls += n.saturating_sub(1);
            for f in ch {
                c += expr_flops(f);
            }
        }
        Node::Pow(b, p) => {
            let k = p.unsigned_abs() as usize;
            c.muls += k - 1;
            if *p < 0 {
                c.divs += 1;
            }
            c += expr_flops(b);
        }
        Node::Deriv(d) => c += expr_flops(&d.expr),
        _ => {}
    }
    c
}

pub fn assignment_flops(a: &Assignment) -> FlopCount {
    let mut c = expr_flops(&a.value);
    if a.accumulate {
        c.adds += 1;
    }
    c
}

/// Flops per point of one nest.
pub fn nest_flops(n: &Nest) -> FlopCount {
    n.body.iter().map(assignment_flops).fold(FlopCount::default(), |a, b| a + b)
}

/// Flops per grid point of the time-stepped body (sum over its nests).
pub fn flop_count(ir: &LoopNestIR) -> FlopCount {
    ir.nests().map(nest_flops).fold(FlopCount::default(), |a, b| a + b)
}

/// Distinct array streams (field, time level) a nest touches, reads and writes.
pub fn nest_streams(n: &Nest) -> BTreeSet<(String, i64)> {
    let mut s = BTreeSet::new();
    for a in &n.body {
        if let Target::Field(acc) = &a.target {
            s.insert((acc.field.name.clone(), acc.time_offset().unwrap_or(0)));
        }
        for acc in a.value.accesses() {
            s.insert((acc.field.name.clone(), acc.time_offset().unwrap_or(0)));
        }
    }
    s
}

/// Bytes moved per grid point, counting each distinct stream once.
pub fn bytes_per_point(ir: &LoopNestIR, elem_size: usize) -> usize {
    ir.nests().map(|n| nest_streams(n).len() * elem_size).sum()
}

/// Operational intensity: flops per byte.
pub fn oi_estimate(ir: &LoopNestIR, elem_size: usize) -> f64 {
    let b = bytes_per_point(ir, elem_size);
    if b == 0 {
        0.0
    } else {
        flop_count(ir).total() as f64 / b as f64
    }
}

/// Exact operation count of one pass over the body (all nests and point blocks).
pub fn body_flops_exact(ir: &LoopNestIR) -> usize {
    ir.body
        .iter()
        .map(|s| match s {
            Section::Nest(n) => nest_flops(n).total() * n.points(),
            Section::Points(p) => p.body.iter().map(|a| assignment_flops(a).total()).sum(),
        })
        .sum()
}

/// Operation count of the prologue and scalar setup.
pub fn prologue_flops_exact(ir: &LoopNestIR) -> usize {
    let p: usize = ir.prologue.iter().map(|n| nest_flops(n).total() * n.points()).sum();
    let s: usize = ir.scalars.iter().map(|(_, e)| expr_flops(e).total()).sum();
    p + s
}

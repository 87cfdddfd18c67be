//! Compiled operator: optimized IR plus accounting metadata.

use std::collections::BTreeSet;

use serde::Serialize;

use super::flops::{bytes_per_point, flop_count, oi_estimate, FlopCount};
use super::ir::{LoopNestIR, Target};
use super::lower::lower;
use super::passes::{block_loops, cse, factorize, hoist, unblock, Names};
use crate::error::Result;
use crate::symbolic::{Equation, FieldRef};

/// Which passes run after lowering.
#[derive(Debug, Clone, PartialEq)]
pub struct CompileOptions {
    pub cse: bool,
    pub factorize: bool,
    pub hoist: bool,
    pub tiles: Option<Vec<usize>>,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions { cse: true, factorize: true, hoist: true, tiles: None }
    }
}

impl CompileOptions {
    /// Lowering only.
    pub fn none() -> Self {
        CompileOptions { cse: false, factorize: false, hoist: false, tiles: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub flops: FlopCount,
    pub flops_per_point: usize,
    pub bytes_per_point: usize,
    pub oi: f64,
    pub tiles: Option<Vec<usize>>,
}

impl Metadata {
    fn of(ir: &LoopNestIR) -> Metadata {
        let flops = flop_count(ir);
        Metadata {
            flops,
            flops_per_point: flops.total(),
            bytes_per_point: bytes_per_point(ir, 8),
            oi: oi_estimate(ir, 8),
            tiles: ir.nests().find_map(|n| n.tiles()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Operator {
    pub ir: LoopNestIR,
    pub options: CompileOptions,
    pub meta: Metadata,
    /// User fields the operator reads or writes, sorted by name.
    pub fields: Vec<FieldRef>,
    /// Free scalar symbols that must be bound at execution, sorted.
    pub parameters: Vec<String>,
}

impl Operator {
    /// Compile with every optimization enabled and no blocking.
    pub fn new(eqs: &[Equation]) -> Result<Operator> {
        Operator::with_options(eqs, CompileOptions::default())
    }

    pub fn with_options(eqs: &[Equation], options: CompileOptions) -> Result<Operator> {
        let mut ir = lower(eqs)?;
        let mut names = Names::default();
        for n in ir.nests_mut() {
            if options.cse {
                n.body = cse(&n.body, &mut names);
            }
            if options.factorize {
                for a in n.body.iter_mut() {
                    a.value = factorize(&a.value);
                }
            }
        }
        if options.hoist {
            hoist(&mut ir, &mut names);
        }
        if let Some(t) = &options.tiles {
            block_loops(&mut ir, t)?;
        }
        Ok(Operator::from_ir(ir, options))
    }

    fn from_ir(ir: LoopNestIR, options: CompileOptions) -> Operator {
        let temps: BTreeSet<String> = ir.temporaries.iter().map(|f| f.name.clone()).collect();
        let mut fields = BTreeSet::new();
        let mut locals = BTreeSet::new();
        let mut syms = BTreeSet::new();
        for (n, e) in &ir.scalars {
            locals.insert(n.clone());
            syms.extend(e.symbols());
        }
        for a in ir.assignments() {
            match &a.target {
                Target::Field(acc) => {
                    fields.insert(acc.field.clone());
                }
                Target::Temp(n) => {
                    locals.insert(n.clone());
                }
            }
            for acc in a.value.accesses() {
                fields.insert(acc.field.clone());
            }
            syms.extend(a.value.symbols());
        }
        let fields = fields.into_iter().filter(|f| !temps.contains(&f.name)).collect();
        let parameters = syms.into_iter().filter(|s| !locals.contains(s)).collect();
        let meta = Metadata::of(&ir);
        Operator { ir, options, meta, fields, parameters }
    }

    /// Same operator with different (or no) blocking.
    pub fn reblocked(&self, tiles: Option<&[usize]>) -> Result<Operator> {
        let mut ir = self.ir.clone();
        unblock(&mut ir);
        if let Some(t) = tiles {
            block_loops(&mut ir, t)?;
        }
        let options = CompileOptions { tiles: tiles.map(|t| t.to_vec()), ..self.options.clone() };
        Ok(Operator::from_ir(ir, options))
    }

    pub fn dump(&self) -> String {
        self.ir.dump()
    }

    /// `{flops, bytes, oi, tiles}` report.
    pub fn metadata_json(&self) -> serde_json::Value {
        serde_json::json!({
            "flops": self.meta.flops_per_point,
            "adds": self.meta.flops.adds,
            "muls": self.meta.flops.muls,
            "divs": self.meta.flops.divs,
            "bytes": self.meta.bytes_per_point,
            "oi": self.meta.oi,
            "tiles": self.meta.tiles,
        })
    }

    /// Default inclusive time range `[time_m, time_M]` for `nt` stored steps.
    pub fn time_range(&self, nt: usize) -> Option<(i64, i64)> {
        self.ir.time.as_ref().map(|t| (-t.min_offset.min(0), nt as i64 - 1 - t.max_offset.max(0)))
    }
}

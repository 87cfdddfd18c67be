//! Runtime selection of loop-blocking tile sizes.

use super::bindings::Bindings;
use super::exec::{execute_with, ExecOptions};
use crate::compiler::Operator;
use crate::error::{Result, SfError};

/// Time `steps` trial steps of each candidate blocking (`None` = unblocked) on
/// scratch copies of `b` and return the fastest; ties keep the first seen.
pub fn autotune(
    op: &Operator,
    b: &Bindings,
    candidates: &[Option<Vec<usize>>],
    steps: usize,
    opts: &ExecOptions,
) -> Result<Option<Vec<usize>>> {
    if candidates.is_empty() {
        return Err(SfError::Parameter("autotune needs at least one candidate".into()));
    }
    if steps == 0 {
        return Err(SfError::Parameter("autotune needs at least one trial step".into()));
    }
    if candidates.len() == 1 {
        return Ok(candidates[0].clone());
    }
    let (tm, _) = b.resolve_time(op)?.unwrap_or((0, 0));
    let mut best: Option<(f64, &Option<Vec<usize>>)> = None;
    for c in candidates {
        let trial = op.reblocked(c.as_deref())?;
        let mut scratch = b.clone();
        if op.ir.time.is_some() {
            scratch.set_time_range(tm, tm + steps as i64 - 1);
        }
        let r = execute_with(&trial, &mut scratch, &ExecOptions { nan_check_interval: 0, ..opts.clone() })?;
        if best.is_none_or(|(t, _)| r.wall_time < t) {
            best = Some((r.wall_time, c));
        }
    }
    Ok(best.unwrap().1.clone())
}

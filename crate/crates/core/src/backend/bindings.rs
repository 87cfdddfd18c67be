//! Execution bindings: array buffers and scalar values by name.

use std::collections::{BTreeMap, HashMap};

use super::array::Array;
use crate::compiler::Operator;
use crate::error::{Result, SfError};
use crate::grid::Grid;
use crate::symbolic::{FieldKind, FieldRef};

#[derive(Debug, Clone, Default)]
pub struct Bindings {
    arrays: HashMap<String, Array>,
    scalars: BTreeMap<String, f64>,
    time: Option<(i64, i64)>,
    nt: Option<usize>,
}

impl Bindings {
    pub fn new() -> Bindings {
        Bindings::default()
    }

    /// Allocate a zeroed buffer for `f` (replacing any existing one).
    pub fn alloc(&mut self, f: &FieldRef) -> &mut Array {
        self.arrays.insert(f.name.clone(), Array::zeros(&f.data_shape()));
        self.arrays.get_mut(&f.name).unwrap()
    }

    pub fn set_array(&mut self, name: &str, a: Array) {
        self.arrays.insert(name.to_string(), a);
    }

    pub fn take_array(&mut self, name: &str) -> Option<Array> {
        self.arrays.remove(name)
    }

    pub fn array(&self, name: &str) -> Result<&Array> {
        self.arrays.get(name).ok_or_else(|| SfError::Binding(format!("no buffer bound for '{name}'")))
    }

    pub fn array_mut(&mut self, name: &str) -> Result<&mut Array> {
        self.arrays.get_mut(name).ok_or_else(|| SfError::Binding(format!("no buffer bound for '{name}'")))
    }

    pub fn has_array(&self, name: &str) -> bool {
        self.arrays.contains_key(name)
    }

    pub(crate) fn arrays_mut(&mut self) -> &mut HashMap<String, Array> {
        &mut self.arrays
    }

    pub fn set_scalar(&mut self, name: &str, v: f64) {
        self.scalars.insert(name.to_string(), v);
    }

    pub fn scalar(&self, name: &str) -> Option<f64> {
        self.scalars.get(name).copied()
    }

    pub fn scalars(&self) -> &BTreeMap<String, f64> {
        &self.scalars
    }

    /// Bind grid spacings (`h_x`, `h_y`, ...).
    pub fn bind_grid(&mut self, g: &Grid) {
        for (n, v) in g.spacing_bindings() {
            self.set_scalar(&n, v);
        }
    }

    /// Explicit inclusive time range `[time_m, time_M]`.
    pub fn set_time_range(&mut self, time_m: i64, time_max: i64) {
        self.time = Some((time_m, time_max));
    }

    /// Number of time samples; the range is derived from the operator's offsets.
    pub fn set_nt(&mut self, nt: usize) {
        self.nt = Some(nt);
    }

    /// Inclusive time range for `op`, or `None` without a time loop.
    pub fn resolve_time(&self, op: &Operator) -> Result<Option<(i64, i64)>> {
        if op.ir.time.is_none() {
            return Ok(None);
        }
        if let Some(r) = self.time {
            return Ok(Some(r));
        }
        let nt = match self.nt {
            Some(n) => n,
            None => op
                .fields
                .iter()
                .filter_map(|f| match f.kind {
                    FieldKind::Time { save: Some(n), .. } => Some(n),
                    FieldKind::Sparse { nt, .. } => Some(nt),
                    _ => None,
                })
                .min()
                .ok_or_else(|| SfError::Binding("time range not set".into()))?,
        };
        Ok(op.time_range(nt))
    }

    /// Copy of the unpadded interior of `f` (at stored time level `slot` for time fields).
    pub fn interior(&self, f: &FieldRef, slot: Option<usize>) -> Result<Array> {
        let a = self.array(&f.name)?;
        let g = f.grid.shape().to_vec();
        let h = f.halo();
        let padded = f.padded_shape();
        let base = slot.unwrap_or(0) * padded.iter().product::<usize>();
        let mut out = Array::zeros(&g);
        let n = out.len();
        let dst = out.as_mut_slice();
        let src = a.as_slice();
        let mut idx = vec![0usize; g.len()];
        for (k, d) in dst.iter_mut().enumerate().take(n) {
            let mut r = k;
            for ax in (0..g.len()).rev() {
                idx[ax] = r % g[ax];
                r /= g[ax];
            }
            let off = idx.iter().zip(&padded).fold(0, |acc, (&i, &p)| acc * p + i + h);
            *d = src[base + off];
        }
        Ok(out)
    }

    /// Write an unpadded interior array into `f`.
    pub fn set_interior(&mut self, f: &FieldRef, slot: Option<usize>, values: &Array) -> Result<()> {
        let g = f.grid.shape().to_vec();
        if values.shape() != g.as_slice() {
            return Err(SfError::Binding(format!("interior shape {:?} != grid {:?}", values.shape(), g)));
        }
        if !self.has_array(&f.name) {
            self.alloc(f);
        }
        let h = f.halo();
        let padded = f.padded_shape();
        let base = slot.unwrap_or(0) * padded.iter().product::<usize>();
        let dst = self.array_mut(&f.name)?.as_mut_slice();
        let mut idx = vec![0usize; g.len()];
        for (k, v) in values.as_slice().iter().enumerate() {
            let mut r = k;
            for ax in (0..g.len()).rev() {
                idx[ax] = r % g[ax];
                r /= g[ax];
            }
            let off = idx.iter().zip(&padded).fold(0, |acc, (&i, &p)| acc * p + i + h);
            dst[base + off] = *v;
        }
        Ok(())
    }
}

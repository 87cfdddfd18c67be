//! Row-major f64 storage with 64-byte aligned base address.

use std::fmt;

use crate::error::{Result, SfError};

#[derive(Clone, Copy)]
#[repr(C, align(64))]
struct Line([f64; 8]);

/// Dense n-dimensional array of f64.
pub struct Array {
    lines: Vec<Line>,
    len: usize,
    shape: Vec<usize>,
}

impl Array {
    pub fn zeros(shape: &[usize]) -> Array {
        let len: usize = shape.iter().product();
        Array { lines: vec![Line([0.0; 8]); len.div_ceil(8)], len, shape: shape.to_vec() }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Array> {
        let mut a = Array::zeros(shape);
        if data.len() != a.len {
            return Err(SfError::Binding(format!("{} values for shape {shape:?}", data.len())));
        }
        a.as_mut_slice().copy_from_slice(&data);
        Ok(a)
    }

    pub fn filled(shape: &[usize], v: f64) -> Array {
        let mut a = Array::zeros(shape);
        a.fill(v);
        a
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_slice(&self) -> &[f64] {
        // SAFETY: `Line` is a plain array of f64 with no padding; `lines` holds at least `len` values.
        unsafe { std::slice::from_raw_parts(self.lines.as_ptr() as *const f64, self.len) }
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        // SAFETY: as above, with unique access through `&mut self`.
        unsafe { std::slice::from_raw_parts_mut(self.lines.as_mut_ptr() as *mut f64, self.len) }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.as_slice().to_vec()
    }

    pub fn fill(&mut self, v: f64) {
        self.as_mut_slice().fill(v);
    }

    fn flat(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.shape.len(), "index rank");
        idx.iter().zip(&self.shape).fold(0, |acc, (&i, &n)| {
            assert!(i < n, "index {idx:?} out of bounds for shape {:?}", self.shape);
            acc * n + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.as_slice()[self.flat(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let k = self.flat(idx);
        self.as_mut_slice()[k] = v;
    }

    /// Largest absolute value.
    pub fn max_abs(&self) -> f64 {
        self.as_slice().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Clone for Array {
    fn clone(&self) -> Array {
        Array { lines: self.lines.clone(), len: self.len, shape: self.shape.clone() }
    }
}

impl PartialEq for Array {
    fn eq(&self, o: &Array) -> bool {
        self.shape == o.shape && self.as_slice() == o.as_slice()
    }
}

impl fmt::Debug for Array {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Array{:?}", self.shape)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aligned_and_indexed() {
        let mut a = Array::zeros(&[3, 5]);
        assert_eq!(a.as_slice().as_ptr() as usize % 64, 0);
        a.set(&[2, 4], 7.0);
        assert_eq!(a.as_slice()[14], 7.0);
        assert_eq!(a.get(&[2, 4]), 7.0);
        let b = a.clone();
        assert_eq!(b.as_slice().as_ptr() as usize % 64, 0);
        assert_eq!(a, b);
        assert!(Array::from_vec(&[2], vec![1.0]).is_err());
    }
}

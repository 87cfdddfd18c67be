//! Source wavelets and acquisition geometry.

use std::f64::consts::PI;

use crate::backend::Array;
use crate::error::{Result, SfError};

/// Ricker wavelet of peak frequency `f0` (Hz) delayed by `1/f0`.
pub fn ricker(f0: f64, times: &[f64]) -> Vec<f64> {
    ricker_delayed(f0, 1.0 / f0, times)
}

/// Ricker wavelet centred at `delay` seconds.
pub fn ricker_delayed(f0: f64, delay: f64, times: &[f64]) -> Vec<f64> {
    times
        .iter()
        .map(|&t| {
            let a = (PI * f0 * (t - delay)).powi(2);
            (1.0 - 2.0 * a) * (-a).exp()
        })
        .collect()
}

/// Number of samples of `[t0, tn]` at step `dt`.
pub fn sample_count(t0: f64, tn: f64, dt: f64) -> usize {
    ((tn - t0) / dt * (1.0 + 1e-12)).floor() as usize + 1
}

/// Source and receiver positions with the source time functions.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub src_coords: Vec<Vec<f64>>,
    pub rec_coords: Vec<Vec<f64>>,
    pub t0: f64,
    pub tn: f64,
    pub dt: f64,
    pub nt: usize,
    pub f0: f64,
    /// Source traces, shape `[nt, nsrc]`.
    pub src_data: Array,
}

impl Geometry {
    /// Geometry whose sources all fire a Ricker wavelet of peak `f0`.
    pub fn ricker(
        src_coords: Vec<Vec<f64>>,
        rec_coords: Vec<Vec<f64>>,
        t0: f64,
        tn: f64,
        dt: f64,
        f0: f64,
    ) -> Result<Geometry> {
        if !(f0 > 0.0) {
            return Err(SfError::Parameter("peak frequency must be positive".into()));
        }
        let nt = Self::check(&src_coords, &rec_coords, t0, tn, dt)?;
        let times: Vec<f64> = (0..nt).map(|i| t0 + i as f64 * dt).collect();
        let w = ricker(f0, &times);
        let ns = src_coords.len();
        let data = (0..nt * ns).map(|k| w[k / ns]).collect();
        let src_data = Array::from_vec(&[nt, ns], data)?;
        Ok(Geometry { src_coords, rec_coords, t0, tn, dt, nt, f0, src_data })
    }

    /// Geometry with arbitrary source traces of shape `[nt, nsrc]`.
    pub fn with_traces(
        src_coords: Vec<Vec<f64>>,
        rec_coords: Vec<Vec<f64>>,
        t0: f64,
        tn: f64,
        dt: f64,
        src_data: Array,
    ) -> Result<Geometry> {
        let nt = Self::check(&src_coords, &rec_coords, t0, tn, dt)?;
        if src_data.shape() != [nt, src_coords.len()] {
            return Err(SfError::Binding(format!(
                "source traces {:?} != [{nt}, {}]",
                src_data.shape(),
                src_coords.len()
            )));
        }
        Ok(Geometry { src_coords, rec_coords, t0, tn, dt, nt, f0: 0.0, src_data })
    }

    fn check(src: &[Vec<f64>], rec: &[Vec<f64>], t0: f64, tn: f64, dt: f64) -> Result<usize> {
        if src.is_empty() || rec.is_empty() {
            return Err(SfError::Parameter("geometry needs at least one source and one receiver".into()));
        }
        if !(dt > 0.0) || !(tn > t0) {
            return Err(SfError::Parameter(format!("invalid time axis t0={t0} tn={tn} dt={dt}")));
        }
        let nt = sample_count(t0, tn, dt);
        if nt < 3 {
            return Err(SfError::Parameter(format!("time axis has {nt} samples, need at least 3")));
        }
        Ok(nt)
    }

    pub fn nsrc(&self) -> usize {
        self.src_coords.len()
    }

    pub fn nrec(&self) -> usize {
        self.rec_coords.len()
    }

    pub fn time_axis(&self) -> Vec<f64> {
        (0..self.nt).map(|i| self.t0 + i as f64 * self.dt).collect()
    }

    /// Copy restricted to source `i`.
    pub fn single_source(&self, i: usize) -> Result<Geometry> {
        if i >= self.nsrc() {
            return Err(SfError::Parameter(format!("source {i} out of range")));
        }
        let ns = self.nsrc();
        let data = (0..self.nt).map(|t| self.src_data.as_slice()[t * ns + i]).collect();
        Ok(Geometry {
            src_coords: vec![self.src_coords[i].clone()],
            src_data: Array::from_vec(&[self.nt, 1], data)?,
            ..self.clone()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ricker_peak_and_tails() {
        let f0 = 10.0;
        assert_eq!(ricker(f0, &[0.1])[0], 1.0);
        let far = ricker(f0, &[-10.0, 10.0]);
        assert!(far.iter().all(|v| v.abs() < 1e-300));
    }

    #[test]
    fn sample_count_is_floor_plus_one() {
        assert_eq!(sample_count(0.0, 1.0, 0.1), 11);
        assert_eq!(sample_count(0.0, 0.15, 1e-4), 1501);
        assert_eq!(sample_count(0.0, 1.05, 0.1), 11);
    }
}

//! Velocity models, absorbing layers and the stability limit.

use std::sync::Arc;

use crate::backend::Array;
use crate::error::{Result, SfError};
use crate::fdcoeff::{centered_offsets, fd_weights};
use crate::grid::Grid;

/// Reflection coefficient targeted by the default damping strength.
const TARGET_REFLECTION: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DampingProfile {
    Linear,
    #[default]
    Quadratic,
}

impl DampingProfile {
    fn ramp(self, x: f64) -> f64 {
        match self {
            DampingProfile::Linear => x,
            DampingProfile::Quadratic => x * x,
        }
    }

    /// Maximal rate (1/s) on one axis for a layer of `width` metres.
    fn peak(self, c_max: f64, width: f64) -> f64 {
        let k = match self {
            DampingProfile::Linear => 2.0,
            DampingProfile::Quadratic => 3.0,
        };
        k * c_max * (1.0 / TARGET_REFLECTION).ln() / (2.0 * width)
    }
}

/// Depth (in points, 0 in the interior) of index `i` into a layer of width `nbl`.
fn layer_depth(i: usize, n: usize, nbl: usize) -> usize {
    if i < nbl {
        nbl - i
    } else if i + nbl >= n {
        i + nbl + 1 - n
    } else {
        0
    }
}

/// Damping rate (1/s) on `grid`: zero inside, ramping up over the outer `nbl`
/// points of every axis, summed across axes.
pub fn build_damping(grid: &Grid, nbl: usize, profile: DampingProfile, c_max: f64) -> Result<Array> {
    let shape = grid.shape();
    if nbl > 0 && shape.iter().any(|&n| 2 * nbl >= n) {
        return Err(SfError::Parameter(format!("absorbing layer of {nbl} points does not fit grid {shape:?}")));
    }
    let mut out = Array::zeros(shape);
    if nbl == 0 {
        return Ok(out);
    }
    let peaks: Vec<f64> = grid.spacing().iter().map(|&h| profile.peak(c_max, nbl as f64 * h)).collect();
    let mut idx = vec![0usize; shape.len()];
    for (k, v) in out.as_mut_slice().iter_mut().enumerate() {
        let mut r = k;
        for ax in (0..shape.len()).rev() {
            idx[ax] = r % shape[ax];
            r /= shape[ax];
        }
        *v = (0..shape.len())
            .map(|ax| {
                let d = layer_depth(idx[ax], shape[ax], nbl);
                peaks[ax] * profile.ramp(d as f64 / nbl as f64)
            })
            .sum();
    }
    Ok(out)
}

/// Acoustic medium on a grid extended by `nbl` absorbing points per side.
///
/// `m` is the squared slowness (s²/m²). `damp` multiplies `u_t` in the wave
/// equation and holds the rate times the reference squared slowness, so it
/// stays fixed when `m` is updated during inversion.
#[derive(Debug, Clone)]
pub struct Model {
    pub grid: Arc<Grid>,
    pub nbl: usize,
    pub space_order: usize,
    pub m: Array,
    pub damp: Array,
    phys_shape: Vec<usize>,
}

impl Model {
    /// Model from a velocity array (m/s) on the physical grid with the given
    /// spacing and origin. Velocities are extended into the layer by edge copy.
    pub fn from_velocity(
        vp: &Array,
        spacing: &[f64],
        origin: &[f64],
        nbl: usize,
        space_order: usize,
        profile: DampingProfile,
    ) -> Result<Model> {
        centered_offsets(space_order)?;
        let phys = vp.shape().to_vec();
        if spacing.len() != phys.len() || origin.len() != phys.len() {
            return Err(SfError::Grid("spacing/origin rank does not match the velocity array".into()));
        }
        if vp.as_slice().iter().any(|&c| !(c > 0.0 && c.is_finite())) {
            return Err(SfError::Parameter("velocity must be positive and finite".into()));
        }
        let shape: Vec<usize> = phys.iter().map(|&n| n + 2 * nbl).collect();
        let eorigin: Vec<f64> = origin.iter().zip(spacing).map(|(&o, &h)| o - nbl as f64 * h).collect();
        let grid = Grid::with_origin(&shape, spacing, &eorigin)?;
        let mut m = Array::zeros(&shape);
        let mut idx = vec![0usize; shape.len()];
        let mut src = vec![0usize; shape.len()];
        for (k, v) in m.as_mut_slice().iter_mut().enumerate() {
            let mut r = k;
            for ax in (0..shape.len()).rev() {
                idx[ax] = r % shape[ax];
                r /= shape[ax];
                src[ax] = idx[ax].saturating_sub(nbl).min(phys[ax] - 1);
            }
            let c = vp.get(&src);
            *v = 1.0 / (c * c);
        }
        let c_max = vp.max_abs();
        let rate = build_damping(&grid, nbl, profile, c_max)?;
        let m0 = m.as_slice().iter().cloned().fold(f64::INFINITY, f64::min);
        let damp = Array::from_vec(&shape, rate.as_slice().iter().map(|&g| g * m0).collect())?;
        Ok(Model { grid, nbl, space_order, m, damp, phys_shape: phys })
    }

    /// Constant-velocity model.
    pub fn constant(
        shape: &[usize],
        spacing: &[f64],
        origin: &[f64],
        vp: f64,
        nbl: usize,
        space_order: usize,
    ) -> Result<Model> {
        Self::from_velocity(&Array::filled(shape, vp), spacing, origin, nbl, space_order, DampingProfile::default())
    }

    pub fn ndim(&self) -> usize {
        self.grid.ndim()
    }

    /// Shape of the physical (unextended) domain.
    pub fn physical_shape(&self) -> &[usize] {
        &self.phys_shape
    }

    /// Same grid and damping with a new squared slowness.
    pub fn with_m(&self, m: Array) -> Result<Model> {
        if m.shape() != self.m.shape() {
            return Err(SfError::Binding(format!("m shape {:?} != model shape {:?}", m.shape(), self.m.shape())));
        }
        if m.as_slice().iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(SfError::Parameter("squared slowness must be positive and finite".into()));
        }
        Ok(Model { m, ..self.clone() })
    }

    pub fn vp(&self) -> Array {
        let v = self.m.as_slice().iter().map(|&m| 1.0 / m.sqrt()).collect();
        Array::from_vec(self.m.shape(), v).expect("same shape")
    }

    pub fn vp_max(&self) -> f64 {
        let m_min = self.m.as_slice().iter().cloned().fold(f64::INFINITY, f64::min);
        1.0 / m_min.sqrt()
    }

    /// Largest stable time step (s) of the second-order leapfrog scheme.
    pub fn critical_dt(&self) -> f64 {
        critical_dt(&self.grid, self.space_order, self.vp_max())
    }

    /// Whether index `idx` of the extended grid lies in the physical domain.
    pub fn is_physical(&self, idx: &[usize]) -> bool {
        idx.iter().zip(&self.phys_shape).all(|(&i, &n)| i >= self.nbl && i < self.nbl + n)
    }
}

/// Velocity `v_top` above index `interface` of the last axis, `v_bottom` from it on.
pub fn two_layer_velocity(shape: &[usize], interface: usize, v_top: f64, v_bottom: f64) -> Array {
    let last = *shape.last().expect("non-empty shape");
    let v = (0..shape.iter().product::<usize>())
        .map(|k| if k % last < interface { v_top } else { v_bottom })
        .collect();
    Array::from_vec(shape, v).expect("consistent shape")
}

/// Velocity `v_bg` with a disc (or ball) of `v_in` of `radius` points around `center`.
pub fn circle_velocity(shape: &[usize], center: &[f64], radius: f64, v_bg: f64, v_in: f64) -> Array {
    let mut out = Array::filled(shape, v_bg);
    let mut idx = vec![0usize; shape.len()];
    for (k, v) in out.as_mut_slice().iter_mut().enumerate() {
        let mut r = k;
        for ax in (0..shape.len()).rev() {
            idx[ax] = r % shape[ax];
            r /= shape[ax];
        }
        let d2: f64 = idx.iter().zip(center).map(|(&i, &c)| (i as f64 - c).powi(2)).sum();
        if d2 <= radius * radius {
            *v = v_in;
        }
    }
    out
}

/// `min(h) / (c_max · sqrt(ndim · Σ|w| / 2))` with `w` the order-`space_order`
/// second-derivative weights at unit spacing.
pub fn critical_dt(grid: &Grid, space_order: usize, c_max: f64) -> f64 {
    let offsets = centered_offsets(space_order).expect("model space order is even");
    let w = fd_weights(2, &offsets).expect("valid centered stencil");
    let s: f64 = w.abs_sum();
    let h = grid.spacing().iter().cloned().fold(f64::INFINITY, f64::min);
    h / (c_max * (grid.ndim() as f64 * s / 2.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn damping_zero_inside_and_monotone() {
        let g = Grid::new(&[30, 24], &[10.0, 10.0]).unwrap();
        let d = build_damping(&g, 6, DampingProfile::Quadratic, 2000.0).unwrap();
        for i in 6..24 {
            for j in 6..18 {
                assert_eq!(d.get(&[i, j]), 0.0);
            }
        }
        for j in 6..18 {
            for i in 0..6 {
                assert!(d.get(&[i, j]) > d.get(&[i + 1, j]));
                assert!(d.get(&[29 - i, j]) > d.get(&[28 - i, j]));
            }
            let col = (0..30).map(|i| d.get(&[i, j])).fold(0.0, f64::max);
            assert_eq!(d.get(&[0, j]), col);
        }
        let z = build_damping(&g, 0, DampingProfile::Linear, 2000.0).unwrap();
        assert_eq!(z.max_abs(), 0.0);
        assert!(build_damping(&g, 12, DampingProfile::Linear, 2000.0).is_err());
    }

    #[test]
    fn extended_model_layout() {
        let m = Model::constant(&[11, 9], &[5.0, 5.0], &[0.0, 0.0], 1500.0, 4, 4).unwrap();
        assert_eq!(m.grid.shape(), &[19, 17]);
        assert_eq!(m.grid.origin(), &[-20.0, -20.0]);
        assert!(m.is_physical(&[4, 4]) && !m.is_physical(&[3, 4]) && !m.is_physical(&[15, 4]));
        assert!((m.m.get(&[0, 0]) - 1.0 / 1500.0f64.powi(2)).abs() < 1e-20);
        assert_eq!(m.damp.get(&[9, 8]), 0.0);
        assert!(m.damp.get(&[0, 8]) > 0.0);
    }

    #[test]
    fn critical_dt_second_order_2d() {
        let g = Grid::new(&[10, 10], &[1.0, 1.0]).unwrap();
        // Order-2 weights (1, -2, 1): sqrt(2 * 4 / 2) = 2.
        assert!((critical_dt(&g, 2, 1.0) - 0.5).abs() < 1e-15);
    }
}

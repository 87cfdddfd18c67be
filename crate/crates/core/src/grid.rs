//! Computational domains and iteration dimensions.

use std::fmt;
use std::sync::Arc;

use crate::error::{Result, SfError};

/// What a dimension iterates over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DimKind {
    /// Spatial grid axis (0 = x, 1 = y, 2 = z).
    Space(usize),
    /// The time-stepping dimension.
    Time,
    /// Index over the points of a sparse function.
    Point,
}

/// A named iteration dimension.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dimension {
    kind: DimKind,
    name: Arc<str>,
}

impl Dimension {
    pub fn space(axis: usize) -> Self {
        let name = ["x", "y", "z"].get(axis).copied().unwrap_or("w");
        Dimension { kind: DimKind::Space(axis), name: Arc::from(name) }
    }

    pub fn time() -> Self {
        Dimension { kind: DimKind::Time, name: Arc::from("t") }
    }

    pub fn point(name: &str) -> Self {
        Dimension { kind: DimKind::Point, name: Arc::from(format!("p_{name}")) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> DimKind {
        self.kind
    }

    pub fn is_time(&self) -> bool {
        self.kind == DimKind::Time
    }

    pub fn axis(&self) -> Option<usize> {
        match self.kind {
            DimKind::Space(a) => Some(a),
            _ => None,
        }
    }

    /// Name of the scalar symbol holding this dimension's step size.
    pub fn spacing_name(&self) -> String {
        match self.kind {
            DimKind::Time => "dt".to_string(),
            _ => format!("h_{}", self.name),
        }
    }
}

impl fmt::Debug for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

/// A regular cartesian grid of 1 to 3 dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    shape: Vec<usize>,
    spacing: Vec<f64>,
    origin: Vec<f64>,
}

impl Grid {
    pub fn new(shape: &[usize], spacing: &[f64]) -> Result<Arc<Grid>> {
        Self::with_origin(shape, spacing, &vec![0.0; shape.len()])
    }

    pub fn with_origin(shape: &[usize], spacing: &[f64], origin: &[f64]) -> Result<Arc<Grid>> {
        let nd = shape.len();
        if !(1..=3).contains(&nd) {
            return Err(SfError::Grid(format!("ndim must be 1..=3, got {nd}")));
        }
        if spacing.len() != nd || origin.len() != nd {
            return Err(SfError::Grid("shape, spacing and origin lengths differ".into()));
        }
        if let Some(n) = shape.iter().find(|&&n| n < 3) {
            return Err(SfError::Grid(format!("every axis needs at least 3 points, got {n}")));
        }
        if spacing.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(SfError::Grid(format!("spacing must be positive, got {spacing:?}")));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(SfError::Grid("origin must be finite".into()));
        }
        Ok(Arc::new(Grid { shape: shape.to_vec(), spacing: spacing.to_vec(), origin: origin.to_vec() }))
    }

    pub fn ndim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn dimensions(&self) -> Vec<Dimension> {
        (0..self.ndim()).map(Dimension::space).collect()
    }

    pub fn npoints(&self) -> usize {
        self.shape.iter().product()
    }

    /// Physical extent `(shape - 1) * spacing` per axis.
    pub fn extent(&self) -> Vec<f64> {
        self.shape.iter().zip(&self.spacing).map(|(&n, &h)| (n - 1) as f64 * h).collect()
    }

    /// Physical coordinate of grid node `index`.
    pub fn node_coords(&self, index: &[usize]) -> Vec<f64> {
        index
            .iter()
            .enumerate()
            .map(|(d, &i)| self.origin[d] + i as f64 * self.spacing[d])
            .collect()
    }

    /// Scalar bindings `h_x`, `h_y`, `h_z` for this grid's spacings.
    pub fn spacing_bindings(&self) -> Vec<(String, f64)> {
        self.dimensions()
            .iter()
            .zip(&self.spacing)
            .map(|(d, &h)| (d.spacing_name(), h))
            .collect()
    }
}

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `M` equispaced points on `[a, b]`, endpoints included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    a: f64,
    b: f64,
    points: Vec<f64>,
}

impl Grid {
    pub fn new(a: f64, b: f64, m: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a >= b {
            return Err(Error::InvalidGrid(format!("need finite a < b, got [{a}, {b}]")));
        }
        if m < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {m}")));
        }
        let step = (b - a) / (m - 1) as f64;
        let mut points: Vec<f64> = (0..m).map(|i| a + i as f64 * step).collect();
        points[m - 1] = b;
        Ok(Self { a, b, points })
    }

    pub fn unit(m: usize) -> Result<Self> {
        Self::new(0.0, 1.0, m)
    }

    pub fn start(&self) -> f64 {
        self.a
    }

    pub fn end(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// `v(T) = b - a`.
    pub fn volume(&self) -> f64 {
        self.b - self.a
    }

    /// Riemann weight `v(T) / M` used for every integral over the grid.
    pub fn weight(&self) -> f64 {
        self.volume() / self.len() as f64
    }
}

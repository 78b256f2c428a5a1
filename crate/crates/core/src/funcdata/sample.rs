use serde::{Deserialize, Serialize};

use super::Grid;
use crate::{Error, Result};

/// One group's `n` curves, each `p` components evaluated on `M` grid points.
///
/// Values are stored point-major: the `p`-vector `y_i(t_m)` is contiguous
/// at offset `(i * M + m) * p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfdSample {
    group_id: String,
    subjects: Vec<String>,
    p: usize,
    m: usize,
    values: Vec<f64>,
}

impl MfdSample {
    pub fn new(group_id: impl Into<String>, p: usize, m: usize, values: Vec<f64>) -> Result<Self> {
        if p == 0 || m == 0 || values.is_empty() || !values.len().is_multiple_of(p * m) {
            return Err(Error::DimensionMismatch(format!(
                "{} values cannot be split into curves of {p} x {m}",
                values.len()
            )));
        }
        let n = values.len() / (p * m);
        let subjects = (1..=n).map(|i| i.to_string()).collect();
        Self::with_subjects(group_id, subjects, p, m, values)
    }

    pub fn with_subjects(
        group_id: impl Into<String>,
        subjects: Vec<String>,
        p: usize,
        m: usize,
        values: Vec<f64>,
    ) -> Result<Self> {
        let group_id = group_id.into();
        if p == 0 || m == 0 || subjects.is_empty() || values.len() != subjects.len() * p * m {
            return Err(Error::DimensionMismatch(format!(
                "group {group_id}: {} values for {} subjects of {p} x {m}",
                values.len(),
                subjects.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "group {group_id}: non-finite value at curve {}",
                pos / (p * m)
            )));
        }
        Ok(Self { group_id, subjects, p, m, values })
    }

    /// Builds a sample from `f(curve, component, grid index)`.
    pub fn from_fn(
        group_id: impl Into<String>,
        n: usize,
        p: usize,
        m: usize,
        f: impl Fn(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(n * p * m);
        for i in 0..n {
            for t in 0..m {
                for h in 0..p {
                    values.push(f(i, h, t));
                }
            }
        }
        Self::new(group_id, p, m, values)
    }

    pub fn group_id(&self) -> &str {
        &self.group_id
    }

    pub fn subjects(&self) -> &[String] {
        &self.subjects
    }

    pub fn n(&self) -> usize {
        self.subjects.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn value(&self, curve: usize, component: usize, point: usize) -> f64 {
        self.values[(curve * self.m + point) * self.p + component]
    }

    /// `y_i(t_m)` as a `p`-slice.
    pub fn point(&self, curve: usize, point: usize) -> &[f64] {
        let off = (curve * self.m + point) * self.p;
        &self.values[off..off + self.p]
    }

    /// All `M * p` values of curve `i`, point-major.
    pub fn curve(&self, curve: usize) -> &[f64] {
        let len = self.m * self.p;
        &self.values[curve * len..(curve + 1) * len]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Applies `f` to every `p`-vector `y_i(t_m)` in place.
    pub fn map_points(&mut self, mut f: impl FnMut(usize, &mut [f64])) {
        let (p, m) = (self.p, self.m);
        for (idx, chunk) in self.values.chunks_mut(p).enumerate() {
            f(idx % m, chunk);
        }
    }
}

/// `k` independent samples sharing a grid and dimension `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    grid: Grid,
    groups: Vec<MfdSample>,
}

impl SampleSet {
    pub fn new(grid: Grid, groups: Vec<MfdSample>) -> Result<Self> {
        if groups.len() < 2 {
            return Err(Error::DimensionMismatch(format!("need at least 2 groups, got {}", groups.len())));
        }
        let p = groups[0].p();
        for g in &groups {
            if g.p() != p {
                return Err(Error::DimensionMismatch(format!(
                    "group {} has p = {}, expected {p}",
                    g.group_id(),
                    g.p()
                )));
            }
            if g.m() != grid.len() {
                return Err(Error::DimensionMismatch(format!(
                    "group {} has {} grid points, grid has {}",
                    g.group_id(),
                    g.m(),
                    grid.len()
                )));
            }
        }
        Ok(Self { grid, groups })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Same as [`SampleSet::grid`].
    pub fn resolution(&self) -> &Grid {
        &self.grid
    }

    pub fn groups(&self) -> &[MfdSample] {
        &self.groups
    }

    pub fn groups_mut(&mut self) -> &mut [MfdSample] {
        &mut self.groups
    }

    pub fn k(&self) -> usize {
        self.groups.len()
    }

    pub fn p(&self) -> usize {
        self.groups[0].p()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(MfdSample::n).collect()
    }

    /// `(k, p, [n_1, ..., n_k])`.
    pub fn dims(&self) -> (usize, usize, Vec<usize>) {
        (self.k(), self.p(), self.sizes())
    }

    pub fn total_size(&self) -> usize {
        self.groups.iter().map(MfdSample::n).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_roundtrip() {
        let grid = Grid::unit(4).unwrap();
        let groups = (0..3)
            .map(|g| MfdSample::from_fn(format!("g{g}"), 5 + g, 6, 4, |i, h, t| (i + h + t) as f64).unwrap())
            .collect();
        let set = SampleSet::new(grid.clone(), groups).unwrap();
        assert_eq!(set.dims(), (3, 6, vec![5, 6, 7]));
        assert_eq!(set.resolution(), &grid);
    }

    #[test]
    fn layout_accessors() {
        let s = MfdSample::from_fn("a", 2, 3, 4, |i, h, t| (100 * i + 10 * h + t) as f64).unwrap();
        assert_eq!(s.value(1, 2, 3), 123.0);
        assert_eq!(s.point(1, 3), &[103.0, 113.0, 123.0]);
        assert_eq!(s.curve(0).len(), 12);
    }

    #[test]
    fn rejects_inconsistent_sets() {
        let grid = Grid::unit(4).unwrap();
        let a = MfdSample::from_fn("a", 3, 2, 4, |_, _, _| 0.0).unwrap();
        let b = MfdSample::from_fn("b", 3, 3, 4, |_, _, _| 0.0).unwrap();
        assert!(SampleSet::new(grid.clone(), vec![a.clone()]).is_err());
        assert!(SampleSet::new(grid, vec![a, b]).is_err());
        assert!(MfdSample::new("x", 2, 2, vec![0.0, 1.0, f64::NAN, 2.0]).is_err());
    }
}

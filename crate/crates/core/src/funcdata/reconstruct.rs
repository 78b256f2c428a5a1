use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::spline::{linear_interpolate, SplineBasis};
use super::{Grid, MfdSample, RawObservation, SampleSet};
use crate::{Error, Execution, Result};

/// Minimum distinct time points for a smoothing-spline fit; shorter series
/// fall back to linear interpolation.
pub const SPLINE_MIN_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReconstructMethod {
    #[default]
    Linear,
    SmoothingSpline,
}

impl std::str::FromStr for ReconstructMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Self::Linear),
            "spline" | "smoothing-spline" => Ok(Self::SmoothingSpline),
            other => Err(Error::InvalidArgument(format!("unknown reconstruction method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub set: SampleSet,
    /// Series fitted linearly although a spline was requested.
    pub linear_fallbacks: usize,
    /// Series whose observed range does not cover the grid, so boundary
    /// values were continued as constants.
    pub extrapolated: usize,
}

/// Outcome of putting one series on the grid.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct SeriesNotes {
    pub linear_fallback: bool,
    pub extrapolated: bool,
}

/// Sorts a series by time and averages values observed at equal times.
pub(crate) fn tidy_series(mut pts: Vec<(f64, f64)>) -> (Vec<f64>, Vec<f64>) {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut x: Vec<f64> = Vec::with_capacity(pts.len());
    let mut y: Vec<f64> = Vec::with_capacity(pts.len());
    let mut count = 0usize;
    for (t, v) in pts {
        if x.last() == Some(&t) {
            count += 1;
            let last = y.last_mut().unwrap();
            *last += (v - *last) / count as f64;
        } else {
            x.push(t);
            y.push(v);
            count = 1;
        }
    }
    (x, y)
}

/// Evaluates one tidy series on the grid. `basis`, when given, must be the
/// spline basis for exactly the knots `x`.
pub(crate) fn fit_series(
    x: &[f64],
    y: &[f64],
    grid: &Grid,
    method: ReconstructMethod,
    basis: Option<&SplineBasis>,
) -> (Vec<f64>, SeriesNotes) {
    let notes = SeriesNotes {
        linear_fallback: method == ReconstructMethod::SmoothingSpline && x.len() < SPLINE_MIN_POINTS,
        extrapolated: x[0] > grid.start() || x[x.len() - 1] < grid.end(),
    };
    let values = match (method, x.len() >= SPLINE_MIN_POINTS) {
        (ReconstructMethod::SmoothingSpline, true) => {
            let owned;
            let basis = match basis {
                Some(b) => b,
                None => {
                    owned = SplineBasis::new(x);
                    &owned
                }
            };
            let s = basis.fit_gcv(y);
            grid.points().iter().map(|&t| s.eval(t)).collect()
        }
        _ => grid.points().iter().map(|&t| linear_interpolate(x, y, t)).collect(),
    };
    (values, notes)
}

/// Raw `(time, value)` pairs of one component of one subject.
type Series = Vec<(f64, f64)>;

fn knot_key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

pub fn reconstruct(observations: &[RawObservation], grid: &Grid, method: ReconstructMethod) -> Result<Reconstruction> {
    reconstruct_with(observations, grid, method, Execution::default())
}

/// Puts every `(group, subject, component)` series on `grid`. Groups and
/// subjects keep their order of first appearance; `p` is the largest
/// component index seen and every subject must provide all `p` components.
pub fn reconstruct_with(
    observations: &[RawObservation],
    grid: &Grid,
    method: ReconstructMethod,
    exec: Execution,
) -> Result<Reconstruction> {
    if observations.is_empty() {
        return Err(Error::EmptyFile);
    }
    let p = observations.iter().map(|o| o.component).max().unwrap_or(0);
    if let Some(bad) = observations.iter().find(|o| o.component == 0) {
        return Err(Error::ComponentOutOfRange { component: bad.component, p });
    }

    let mut group_names: Vec<String> = Vec::new();
    let mut group_index: HashMap<&str, usize> = HashMap::new();
    let mut subjects: Vec<Vec<String>> = Vec::new();
    let mut subject_index: HashMap<(usize, &str), usize> = HashMap::new();
    // series[g][s][h] = raw (time, value) pairs
    let mut series: Vec<Vec<Vec<Series>>> = Vec::new();

    for o in observations {
        let g = *group_index.entry(o.group.as_str()).or_insert_with(|| {
            group_names.push(o.group.clone());
            subjects.push(Vec::new());
            series.push(Vec::new());
            group_names.len() - 1
        });
        let s = *subject_index.entry((g, o.subject.as_str())).or_insert_with(|| {
            subjects[g].push(o.subject.clone());
            series[g].push(vec![Vec::new(); p]);
            subjects[g].len() - 1
        });
        series[g][s][o.component - 1].push((o.time, o.value));
    }

    // Flatten to a task list of tidy series, validating lengths.
    struct Task {
        x: Vec<f64>,
        y: Vec<f64>,
    }
    let mut tasks: Vec<Task> = Vec::new();
    for (g, group) in series.into_iter().enumerate() {
        for (s, comps) in group.into_iter().enumerate() {
            for (h, pts) in comps.into_iter().enumerate() {
                let (x, y) = tidy_series(pts);
                if x.len() < 2 {
                    return Err(Error::TooFewPoints {
                        group: group_names[g].clone(),
                        subject: subjects[g][s].clone(),
                        component: h + 1,
                        found: x.len(),
                        needed: 2,
                    });
                }
                tasks.push(Task { x, y });
            }
        }
    }

    let mut bases: HashMap<Vec<u64>, SplineBasis> = HashMap::new();
    if method == ReconstructMethod::SmoothingSpline {
        let mut keys: Vec<(Vec<u64>, usize)> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (i, t) in tasks.iter().enumerate() {
            if t.x.len() >= SPLINE_MIN_POINTS && seen.insert(knot_key(&t.x)) {
                keys.push((knot_key(&t.x), i));
            }
        }
        let built = exec.map(keys.len(), |j| SplineBasis::new(&tasks[keys[j].1].x));
        bases = keys.into_iter().map(|(k, _)| k).zip(built).collect();
    }

    let fitted = exec.map(tasks.len(), |i| {
        let t = &tasks[i];
        let basis = bases.get(&knot_key(&t.x));
        fit_series(&t.x, &t.y, grid, method, basis)
    });

    let m = grid.len();
    let mut linear_fallbacks = 0;
    let mut extrapolated = 0;
    let mut cursor = fitted.into_iter();
    let mut groups = Vec::with_capacity(group_names.len());
    for (g, name) in group_names.into_iter().enumerate() {
        let n = subjects[g].len();
        let mut values = vec![0.0; n * m * p];
        for s in 0..n {
            for h in 0..p {
                let (vals, notes) = cursor.next().expect("one fit per series");
                linear_fallbacks += notes.linear_fallback as usize;
                extrapolated += notes.extrapolated as usize;
                for (t, v) in vals.into_iter().enumerate() {
                    values[(s * m + t) * p + h] = v;
                }
            }
        }
        groups.push(MfdSample::with_subjects(name, std::mem::take(&mut subjects[g]), p, m, values)?);
    }

    Ok(Reconstruction { set: SampleSet::new(grid.clone(), groups)?, linear_fallbacks, extrapolated })
}

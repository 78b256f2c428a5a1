use nalgebra::Matrix2;
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::funcdata::reconstruct::fit_series;
use crate::funcdata::spline::SplineBasis;
use crate::funcdata::{Grid, MfdSample, ReconstructMethod, SampleSet};
use crate::seed::derived_rng;
use crate::{Error, Result};

pub const SIM2_N1: [usize; 4] = [15, 30, 50, 70];
pub const SIM2_N2: [usize; 4] = [18, 36, 60, 84];
pub const SIM2_N3: [usize; 4] = [24, 48, 80, 112];

/// Diagonal weights of `A_a = w I + (1 - w) 1 1'`.
const MIXING: [f64; 4] = [0.7, 0.5, 0.3, 0.1];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Sim2Scenario {
    /// Additive `N(0, sigma^2)` noise at every point and component.
    S1 { sigma: f64 },
    /// `ceil(a M)` observed points per curve, reconstructed on the grid.
    S2 { a: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sim2Config {
    pub sizes: Vec<usize>,
    #[serde(rename = "M")]
    pub m: usize,
    /// Variance rate of the Brownian increments.
    pub dispersion: f64,
    pub scenario: Sim2Scenario,
    /// Smooth S1 curves with a GCV smoothing spline before testing.
    pub smooth: bool,
    pub seed: u64,
}

impl Default for Sim2Config {
    fn default() -> Self {
        Self {
            sizes: SIM2_N3.to_vec(),
            m: 100,
            dispersion: 0.04,
            scenario: Sim2Scenario::S1 { sigma: 0.9 },
            smooth: true,
            seed: 0,
        }
    }
}

impl Sim2Config {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.sizes.len() < 2 || self.sizes.len() > MIXING.len() {
            return bad(format!("sim2 has 2..={} groups, got {}", MIXING.len(), self.sizes.len()));
        }
        if self.m < 2 {
            return bad(format!("M = {} must be at least 2", self.m));
        }
        if !(self.dispersion >= 0.0) {
            return bad("dispersion must be nonnegative".into());
        }
        match self.scenario {
            Sim2Scenario::S1 { sigma } if !(sigma >= 0.0) => bad(format!("sigma = {sigma} must be nonnegative")),
            Sim2Scenario::S2 { a } if !(a > 0.0 && a <= 1.0) || self.kept_points(a) < 2 => {
                bad(format!("a = {a} must lie in (0, 1] with ceil(a M) >= 2"))
            }
            _ => Ok(()),
        }
    }

    fn kept_points(&self, a: f64) -> usize {
        // guard against 0.1 * 50 = 5.000000000000001
        ((a * self.m as f64) - 1e-9).ceil().max(0.0) as usize
    }
}

/// `A_a = w_a I_2 + (1 - w_a) 1 1'` for group `a` (1-based).
pub fn mixing_matrix(group: usize) -> Matrix2<f64> {
    let w = MIXING[group - 1];
    Matrix2::new(1.0, 1.0 - w, 1.0 - w, 1.0)
}

/// Null curves `A_a (B_1(t), B_2(t))'`, then the scenario's observation step.
pub fn sim2_generate(config: &Sim2Config) -> Result<SampleSet> {
    config.validate()?;
    let grid = Grid::unit(config.m)?;
    let m = config.m;
    let step_sd = (config.dispersion * grid.volume() / (m - 1) as f64).sqrt();
    let smoother = match config.scenario {
        Sim2Scenario::S1 { .. } if config.smooth => Some(SplineBasis::new(grid.points())),
        _ => None,
    };

    let mut groups = Vec::with_capacity(config.sizes.len());
    for (a, &n) in config.sizes.iter().enumerate() {
        let mix = mixing_matrix(a + 1);
        let mut rng = derived_rng(config.seed, a as u64);
        let mut values = vec![0.0; n * m * 2];
        for i in 0..n {
            let curve = &mut values[i * m * 2..(i + 1) * m * 2];
            let (mut b1, mut b2) = (0.0, 0.0);
            for t in 0..m {
                if t > 0 {
                    b1 += step_sd * rng.sample::<f64, _>(StandardNormal);
                    b2 += step_sd * rng.sample::<f64, _>(StandardNormal);
                }
                curve[2 * t] = mix[(0, 0)] * b1 + mix[(0, 1)] * b2;
                curve[2 * t + 1] = mix[(1, 0)] * b1 + mix[(1, 1)] * b2;
            }
            match config.scenario {
                Sim2Scenario::S1 { sigma } => {
                    for v in curve.iter_mut() {
                        *v += sigma * rng.sample::<f64, _>(StandardNormal);
                    }
                    if let Some(basis) = &smoother {
                        for h in 0..2 {
                            let y: Vec<f64> = (0..m).map(|t| curve[2 * t + h]).collect();
                            let (fit, _) =
                                fit_series(grid.points(), &y, &grid, ReconstructMethod::SmoothingSpline, Some(basis));
                            for (t, v) in fit.into_iter().enumerate() {
                                curve[2 * t + h] = v;
                            }
                        }
                    }
                }
                Sim2Scenario::S2 { a: frac } => sparsify(curve, &grid, config.kept_points(frac), &mut rng),
            }
        }
        groups.push(MfdSample::new(format!("{}", a + 1), 2, m, values)?);
    }
    SampleSet::new(grid, groups)
}

/// Keeps `keep` grid points (both endpoints always) shared by the two
/// components and refits the curve on the full grid.
fn sparsify<R: Rng + ?Sized>(curve: &mut [f64], grid: &Grid, keep: usize, rng: &mut R) {
    let m = grid.len();
    let mut idx: Vec<usize> = vec![0, m - 1];
    if keep > 2 {
        idx.extend(sample_indices(rng, m - 2, keep - 2).into_iter().map(|i| i + 1));
    }
    idx.sort_unstable();
    idx.dedup();
    let x: Vec<f64> = idx.iter().map(|&i| grid.points()[i]).collect();
    let basis = (x.len() >= crate::funcdata::reconstruct::SPLINE_MIN_POINTS).then(|| SplineBasis::new(&x));
    for h in 0..2 {
        let y: Vec<f64> = idx.iter().map(|&i| curve[2 * i + h]).collect();
        let (fit, _) = fit_series(&x, &y, grid, ReconstructMethod::SmoothingSpline, basis.as_ref());
        for (t, v) in fit.into_iter().enumerate() {
            curve[2 * t + h] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mixing_matrices() {
        assert!((mixing_matrix(1) - Matrix2::new(1.0, 0.3, 0.3, 1.0)).amax() < 1e-15);
        assert_relative_eq!(mixing_matrix(4)[(0, 1)], 0.9, max_relative = 1e-15);
    }

    #[test]
    fn brownian_starts_at_zero() {
        let cfg = Sim2Config { sizes: vec![4, 5], m: 20, scenario: Sim2Scenario::S1 { sigma: 0.0 }, smooth: false, seed: 3, ..Default::default() };
        let set = sim2_generate(&cfg).unwrap();
        for g in set.groups() {
            for i in 0..g.n() {
                assert_eq!(g.point(i, 0), &[0.0, 0.0]);
            }
        }
    }

    #[test]
    fn brownian_increment_variance() {
        // group 1, component 1 at t = 1: A row (1, 0.3), var = 0.04 (1 + 0.09)
        let cfg = Sim2Config { sizes: vec![4000, 2], m: 11, scenario: Sim2Scenario::S1 { sigma: 0.0 }, smooth: false, seed: 5, ..Default::default() };
        let set = sim2_generate(&cfg).unwrap();
        let g = &set.groups()[0];
        let xs: Vec<f64> = (0..g.n()).map(|i| g.value(i, 0, 10)).collect();
        let var = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        let truth = 0.04 * 1.09;
        assert!((var - truth).abs() < 5.0 * truth * (2.0 / 4000f64).sqrt(), "{var}");
    }

    #[test]
    fn sparse_keeps_endpoints_exactly() {
        let cfg = Sim2Config { sizes: vec![3, 3], m: 30, scenario: Sim2Scenario::S2 { a: 0.1 }, seed: 8, ..Default::default() };
        let set = sim2_generate(&cfg).unwrap();
        for g in set.groups() {
            for i in 0..g.n() {
                // Brownian start survives a spline fit only approximately, but stays small
                assert!(g.point(i, 0).iter().all(|v| v.abs() < 0.5));
            }
        }
        assert_eq!(cfg.kept_points(0.1), 3);
        assert_eq!(Sim2Config { m: 50, ..cfg.clone() }.kept_points(0.1), 5);
    }

    #[test]
    fn deterministic_and_smoothed() {
        let cfg = Sim2Config { sizes: vec![4, 5, 6], m: 25, seed: 2, ..Default::default() };
        let a = sim2_generate(&cfg).unwrap();
        let b = sim2_generate(&cfg).unwrap();
        assert_eq!(a.groups()[2].values(), b.groups()[2].values());
        let raw = sim2_generate(&Sim2Config { smooth: false, ..cfg }).unwrap();
        assert_ne!(a.groups()[0].values(), raw.groups()[0].values());
    }

    #[test]
    fn validation() {
        assert!(Sim2Config { scenario: Sim2Scenario::S2 { a: 0.01 }, m: 50, ..Default::default() }.validate().is_err());
        assert!(Sim2Config { scenario: Sim2Scenario::S1 { sigma: -1.0 }, ..Default::default() }.validate().is_err());
        assert!(Sim2Config { sizes: vec![3; 5], ..Default::default() }.validate().is_err());
    }
}

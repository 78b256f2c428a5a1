use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{error_draw, ErrorDist};
use crate::funcdata::{Grid, MfdSample, SampleSet};
use crate::seed::derived_rng;
use crate::{Error, Result};

pub const SIM1_N1: [usize; 3] = [50, 70, 70];
pub const SIM1_N2: [usize; 3] = [75, 105, 105];
pub const SIM1_N3: [usize; 3] = [100, 140, 140];

/// Number of mean functions available for the first group.
const MAX_P: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sim1Config {
    pub sizes: Vec<usize>,
    #[serde(rename = "M")]
    pub m: usize,
    pub p: usize,
    pub q: usize,
    pub rho: f64,
    pub nu: Vec<f64>,
    pub delta: f64,
    pub error_dist: ErrorDist,
    pub seed: u64,
}

impl Default for Sim1Config {
    fn default() -> Self {
        Self {
            sizes: SIM1_N3.to_vec(),
            m: 50,
            p: 6,
            q: 7,
            rho: 0.5,
            nu: vec![1.0, 2.0, 5.0],
            delta: 0.0,
            error_dist: ErrorDist::Gaussian,
            seed: 0,
        }
    }
}

impl Sim1Config {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad(format!("rho = {} outside (0, 1)", self.rho));
        }
        if !(self.delta >= 0.0) {
            return bad(format!("delta = {} must be nonnegative", self.delta));
        }
        if self.q.is_multiple_of(2) {
            return bad(format!("q = {} must be odd", self.q));
        }
        if self.p == 0 || self.p > MAX_P {
            return bad(format!("p = {} outside 1..={MAX_P}", self.p));
        }
        if self.m < 2 {
            return bad(format!("M = {} must be at least 2", self.m));
        }
        if self.sizes.len() < 2 || self.sizes.len() != self.nu.len() {
            return bad(format!("need matching sizes and nu for k >= 2 groups, got {} and {}", self.sizes.len(), self.nu.len()));
        }
        if self.nu.iter().any(|&v| !(v > 0.0)) {
            return bad("nu must be positive".into());
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::unit(self.m)
    }

    /// `c_l = l / sqrt(1^2 + ... + p^2)`.
    pub fn loadings(&self) -> Vec<f64> {
        let norm = ((1..=self.p).map(|l| (l * l) as f64).sum::<f64>()).sqrt();
        (1..=self.p).map(|l| l as f64 / norm).collect()
    }

    /// `lambda_ar = nu_a rho^r`, `r = 1..q`.
    pub fn eigenvalues(&self, group: usize) -> Vec<f64> {
        (1..=self.q).map(|r| self.nu[group - 1] * self.rho.powi(r as i32)).collect()
    }
}

/// `psi_1 = 1`, `psi_2r = sqrt2 sin(2 pi r t)`, `psi_2r+1 = sqrt2 cos(2 pi r t)`.
pub fn fourier_basis(r: usize, t: f64) -> f64 {
    if r == 1 {
        1.0
    } else if r.is_multiple_of(2) {
        SQRT_2 * (2.0 * PI * (r / 2) as f64 * t).sin()
    } else {
        SQRT_2 * (2.0 * PI * ((r - 1) / 2) as f64 * t).cos()
    }
}

fn eta1(l: usize, t: f64) -> f64 {
    match l {
        1 => (2.0 * PI * t * t).sin().powi(5),
        2 => (2.0 * PI * t * t).cos().powi(5),
        3 => t.cbrt() * (1.0 - t) - 5.0,
        4 => 5f64.sqrt() * t.powf(2.0 / 3.0) * (-7.0 * t).exp(),
        5 => (13.0 * t).sqrt() * (-6.5 * t).exp(),
        6 => 1.0 + 2.3 * t + 3.4 * t * t + 1.5 * t.powi(3),
        _ => unreachable!("component index checked by validate"),
    }
}

/// Mean functions of group `group` (1-based) as a `p x M` matrix.
pub fn sim1_mean(group: usize, config: &Sim1Config) -> Result<DMatrix<f64>> {
    config.validate()?;
    if group == 0 || group > config.sizes.len() {
        return Err(Error::InvalidArgument(format!("group {group} outside 1..={}", config.sizes.len())));
    }
    let grid = config.grid()?;
    let (p, m) = (config.p, config.m);
    let shift = (group - 1) as f64 * config.delta;
    let mut out = DMatrix::zeros(p, m);
    for l in 1..=p {
        let raw: Vec<f64> = grid.points().iter().map(|&t| (m as f64 - 1.0) * t.powi(l as i32) + 1.0).collect();
        let norm = (grid.weight() * raw.iter().map(|v| v * v).sum::<f64>()).sqrt();
        for (j, &t) in grid.points().iter().enumerate() {
            out[(l - 1, j)] = eta1(l, t) + shift * raw[j] / ((p as f64).sqrt() * norm);
        }
    }
    Ok(out)
}

/// `Gamma_a(s, t) = sum_r lambda_ar psi_r(s) psi_r(t) c c'` on the grid, in
/// the `(m p + h)` layout of the dense surfaces.
pub fn sim1_covariance_surface(group: usize, config: &Sim1Config) -> Result<DMatrix<f64>> {
    config.validate()?;
    let grid = config.grid()?;
    let (p, m) = (config.p, config.m);
    let c = config.loadings();
    let lambda = config.eigenvalues(group);
    let k: Vec<f64> = (0..m * m)
        .map(|idx| {
            let (s, t) = (grid.points()[idx / m], grid.points()[idx % m]);
            lambda.iter().enumerate().map(|(r, l)| l * fourier_basis(r + 1, s) * fourier_basis(r + 1, t)).sum()
        })
        .collect();
    Ok(DMatrix::from_fn(p * m, p * m, |i, j| k[(i / p) * m + j / p] * c[i % p] * c[j % p]))
}

/// `y_ai(t) = eta_a(t) + sum_r sqrt(lambda_ar) eps_air phi_r(t)` with
/// `phi_r = c psi_r`; group `a` draws from stream `a` of the seed.
pub fn sim1_generate(config: &Sim1Config) -> Result<SampleSet> {
    config.validate()?;
    let grid = config.grid()?;
    let (p, m, q) = (config.p, config.m, config.q);
    let c = config.loadings();
    let psi: Vec<f64> = (1..=q).flat_map(|r| grid.points().iter().map(move |&t| fourier_basis(r, t))).collect();

    let mut groups = Vec::with_capacity(config.sizes.len());
    for (a, &n) in config.sizes.iter().enumerate() {
        let mean = sim1_mean(a + 1, config)?;
        let root: Vec<f64> = config.eigenvalues(a + 1).iter().map(|l| l.sqrt()).collect();
        let mut rng = derived_rng(config.seed, a as u64);
        let mut values = Vec::with_capacity(n * m * p);
        let mut score = vec![0.0; m];
        for _ in 0..n {
            score.iter_mut().for_each(|s| *s = 0.0);
            for r in 0..q {
                let w = root[r] * error_draw(config.error_dist, &mut rng);
                for (s, b) in score.iter_mut().zip(&psi[r * m..(r + 1) * m]) {
                    *s += w * b;
                }
            }
            for t in 0..m {
                for h in 0..p {
                    values.push(mean[(h, t)] + c[h] * score[t]);
                }
            }
        }
        groups.push(MfdSample::new(format!("{}", a + 1), p, m, values)?);
    }
    SampleSet::new(grid, groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn loadings_normalised() {
        let c = Sim1Config::default().loadings();
        assert_relative_eq!(c.iter().map(|v| v * v).sum::<f64>(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(c[0], 1.0 / 91f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn mean_values_at_zero() {
        let cfg = Sim1Config::default();
        let mu = sim1_mean(1, &cfg).unwrap();
        assert_eq!(mu[(2, 0)], -5.0);
        assert_eq!(mu[(1, 0)], 1.0);
        assert_eq!(mu[(5, 0)], 1.0);
    }

    #[test]
    fn null_means_coincide() {
        let cfg = Sim1Config::default();
        assert_eq!(sim1_mean(1, &cfg).unwrap(), sim1_mean(2, &cfg).unwrap());
        assert_eq!(sim1_mean(1, &cfg).unwrap(), sim1_mean(3, &cfg).unwrap());
    }

    #[test]
    fn shift_direction_has_unit_norm() {
        // ||eta_2 - eta_1||^2 summed over components = delta^2
        let cfg = Sim1Config { delta: 0.3, ..Default::default() };
        let diff = sim1_mean(2, &cfg).unwrap() - sim1_mean(1, &cfg).unwrap();
        let w = cfg.grid().unwrap().weight();
        assert_relative_eq!(w * diff.norm_squared(), 0.09, max_relative = 1e-12);
        let diff3 = sim1_mean(3, &cfg).unwrap() - sim1_mean(1, &cfg).unwrap();
        assert!((diff3 - diff * 2.0).amax() < 1e-12);
    }

    #[test]
    fn basis_orthonormal_on_grid() {
        let grid = Grid::unit(400).unwrap();
        let w = grid.weight();
        let ip = |a: usize, b: usize| w * grid.points().iter().map(|&t| fourier_basis(a, t) * fourier_basis(b, t)).sum::<f64>();
        assert!((ip(2, 2) - 1.0).abs() < 0.01);
        assert!((ip(1, 1) - 1.0).abs() < 1e-12);
        assert!(ip(2, 3).abs() < 0.01);
    }

    #[test]
    fn deterministic() {
        let cfg = Sim1Config { sizes: vec![5, 6, 7], m: 10, seed: 42, ..Default::default() };
        let a = sim1_generate(&cfg).unwrap();
        let b = sim1_generate(&cfg).unwrap();
        for (x, y) in a.groups().iter().zip(b.groups()) {
            assert_eq!(x.values(), y.values());
        }
        let c = sim1_generate(&Sim1Config { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.groups()[0].values(), c.groups()[0].values());
    }

    #[test]
    fn empirical_variance_matches_model() {
        let cfg = Sim1Config { sizes: vec![2000, 2], nu: vec![2.0, 1.0], m: 11, rho: 0.5, seed: 9, ..Default::default() };
        let set = sim1_generate(&cfg).unwrap();
        let g = &set.groups()[0];
        let c = cfg.loadings();
        let lambda = cfg.eigenvalues(1);
        for (t_idx, &t) in set.grid().points().iter().enumerate() {
            for h in [0, 5] {
                let xs: Vec<f64> = (0..2000).map(|i| g.value(i, h, t_idx)).collect();
                let mean = xs.iter().sum::<f64>() / 2000.0;
                let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 1999.0;
                let truth: f64 = lambda.iter().enumerate().map(|(r, l)| l * c[h] * c[h] * fourier_basis(r + 1, t).powi(2)).sum();
                // sd of a Gaussian sample variance is truth * sqrt(2/(n-1))
                assert!((var - truth).abs() < 5.0 * truth * (2.0 / 1999.0f64).sqrt(), "t={t} h={h}: {var} vs {truth}");
            }
        }
    }

    #[test]
    fn covariance_surface_diagonal() {
        let cfg = Sim1Config { m: 5, ..Default::default() };
        let s = sim1_covariance_surface(3, &cfg).unwrap();
        let c = cfg.loadings();
        let expect: f64 = cfg.eigenvalues(3).iter().enumerate().map(|(r, l)| l * fourier_basis(r + 1, 0.25).powi(2)).sum();
        assert_relative_eq!(s[(6 + 2, 6 + 4)], expect * c[2] * c[4], max_relative = 1e-12);
    }

    #[test]
    fn validation() {
        assert!(Sim1Config { rho: 1.0, ..Default::default() }.validate().is_err());
        assert!(Sim1Config { q: 6, ..Default::default() }.validate().is_err());
        assert!(Sim1Config { delta: -0.1, ..Default::default() }.validate().is_err());
        assert!(Sim1Config { p: 7, ..Default::default() }.validate().is_err());
    }
}

//! Slow reference implementations for validation: full covariance surfaces
//! with explicit Riemann sums for the trace functionals, and the spectrum
//! of the discretized null kernel with a Monte Carlo mixture quantile.
//!
//! Compiled only for tests or with the `oracle` feature.

// Index loops spell out the Riemann sums term by term.
#![allow(clippy::needless_range_loop)]

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::distributions::normal_upper_quantile;
use crate::estimators::{TraceSet, RANK_TOL};
use crate::funcdata::{Grid, MfdSample, SampleSet};
use crate::glht::Hypothesis;
use crate::seed::rng_from;
use crate::{Error, Result};

/// Largest `p M` the dense routines accept.
pub const MAX_DENSE_DIM: usize = 600;
/// Eigenvalues below this fraction of the largest are dropped.
pub const SPECTRUM_FLOOR: f64 = 1e-12;

/// `Gamma_hat(s, t)` on the full grid; entry `(m p + h, m' p + h')` is the
/// `(h, h')` element of `Gamma_hat(t_m, t_m')`.
#[derive(Debug, Clone)]
pub struct DenseCovSurface {
    pub p: usize,
    pub m: usize,
    pub matrix: DMatrix<f64>,
}

impl DenseCovSurface {
    pub fn new(p: usize, m: usize, matrix: DMatrix<f64>) -> Result<Self> {
        check_dim(p * m)?;
        if matrix.shape() != (p * m, p * m) {
            return Err(Error::DimensionMismatch(format!("surface must be {0} x {0}", p * m)));
        }
        let scale = matrix.amax().max(f64::MIN_POSITIVE);
        if (&matrix - matrix.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidArgument("covariance surface is not symmetric".into()));
        }
        let min = SymmetricEigen::new(matrix.clone()).eigenvalues.min();
        if min < -1e-10 * scale {
            return Err(Error::InvalidArgument(format!("covariance surface is not PSD (eigenvalue {min:e})")));
        }
        Ok(Self { p, m, matrix })
    }

    /// Sample covariance surface with divisor `n - 1`, by direct summation.
    pub fn from_sample(sample: &MfdSample) -> Result<Self> {
        let (n, p, m) = (sample.n(), sample.p(), sample.m());
        check_dim(p * m)?;
        if n < 2 {
            return Err(Error::SampleSize { group: sample.group_id().to_string(), n, needed: 2 });
        }
        let dim = p * m;
        let mut mean = vec![0.0; dim];
        for i in 0..n {
            for (j, v) in sample.curve(i).iter().enumerate() {
                mean[j] += v / n as f64;
            }
        }
        let mut cov = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..n {
            let c = sample.curve(i);
            for r in 0..dim {
                let zr = c[r] - mean[r];
                for s in 0..dim {
                    cov[(r, s)] += zr * (c[s] - mean[s]);
                }
            }
        }
        cov /= (n - 1) as f64;
        Ok(Self { p, m, matrix: cov })
    }

    pub fn block(&self, s: usize, t: usize) -> DMatrix<f64> {
        self.matrix.view((s * self.p, t * self.p), (self.p, self.p)).into_owned()
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim > MAX_DENSE_DIM {
        return Err(Error::TooLarge { dim, max: MAX_DENSE_DIM });
    }
    Ok(())
}

/// `Omega(t_m) = sum_a h_aa Gamma_a(t_m, t_m) / n_a` from the surfaces' diagonal blocks.
pub fn pointwise_omega(surfaces: &[DenseCovSurface], hyp: &Hypothesis) -> Vec<DMatrix<f64>> {
    let m = surfaces[0].m;
    (0..m)
        .map(|t| {
            surfaces
                .iter()
                .enumerate()
                .fold(DMatrix::zeros(surfaces[0].p, surfaces[0].p), |acc, (a, s)| {
                    acc + s.block(t, t) * (hyp.h()[(a, a)] / hyp.sizes()[a] as f64)
                })
        })
        .collect()
}

/// Symmetric PSD inverse square root on the eigenspace above the rank
/// threshold.
fn inv_sqrt_psd(omega: &DMatrix<f64>) -> DMatrix<f64> {
    let p = omega.nrows();
    let tol = RANK_TOL * omega.trace() / p as f64;
    let eig = SymmetricEigen::new(omega.clone());
    let d = eig.eigenvalues.map(|l| if tol > 0.0 && l > tol { 1.0 / l.sqrt() } else { 0.0 });
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

/// `Gamma*_a(s, t) = Omega^-1/2(s) Gamma_a(s, t) Omega^-1/2(t) / n_a` as dense blocks.
fn standardized(surface: &DenseCovSurface, roots: &[DMatrix<f64>], n: f64) -> Vec<Vec<DMatrix<f64>>> {
    (0..surface.m)
        .map(|s| (0..surface.m).map(|t| &roots[s] * surface.block(s, t) * &roots[t] / n).collect())
        .collect()
}

/// Riemann sums of `int tr Gamma*_a(t,t)`, `int int tr[Gamma*_a(s,t) Gamma*_b(t,s)]`
/// and `int int int tr[Gamma*_a(s,t) Gamma*_b(t,u) Gamma*_c(u,s)]`.
pub fn brute_force_traces(
    surfaces: &[DenseCovSurface],
    omega: &[DMatrix<f64>],
    sizes: &[usize],
    grid: &Grid,
) -> Result<TraceSet> {
    let k = surfaces.len();
    let m = grid.len();
    if sizes.len() != k || omega.len() != m || surfaces.iter().any(|s| s.m != m) {
        return Err(Error::DimensionMismatch("surfaces, Omega, sizes and grid disagree".into()));
    }
    check_dim(surfaces[0].p * m)?;
    let w = grid.weight();
    let roots: Vec<_> = omega.iter().map(inv_sqrt_psd).collect();
    let star: Vec<_> = surfaces.iter().zip(sizes).map(|(s, &n)| standardized(s, &roots, n as f64)).collect();

    let mut out = TraceSet::zeros(k);
    for a in 0..k {
        out.single[a] = w * (0..m).map(|t| star[a][t][t].trace()).sum::<f64>();
    }
    for a in 0..k {
        for b in 0..k {
            let mut acc = 0.0;
            for s in 0..m {
                for t in 0..m {
                    acc += (&star[a][s][t] * &star[b][t][s]).trace();
                }
            }
            out.pair[a * k + b] = w * w * acc;
        }
    }
    for a in 0..k {
        for b in 0..k {
            for c in 0..k {
                let mut acc = 0.0;
                for s in 0..m {
                    for t in 0..m {
                        let st = &star[a][s][t];
                        for u in 0..m {
                            acc += (st * &star[b][t][u] * &star[c][u][s]).trace();
                        }
                    }
                }
                out.triple[(a * k + b) * k + c] = w * w * w * acc;
            }
        }
    }
    Ok(out)
}

/// Nonincreasing, nonnegative weights of `sum_r lambda_r A_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureSpec {
    pub eigenvalues: Vec<f64>,
}

impl MixtureSpec {
    pub fn new(mut eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidArgument("non-finite mixture weight".into()));
        }
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        let top = eigenvalues.first().copied().unwrap_or(0.0);
        eigenvalues.retain(|&l| l > SPECTRUM_FLOOR * top);
        if eigenvalues.is_empty() {
            return Err(Error::InvalidArgument("empty spectrum".into()));
        }
        Ok(Self { eigenvalues })
    }

    pub fn count(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `(sum l, 2 sum l^2, 8 sum l^3)`.
    pub fn cumulants(&self) -> (f64, f64, f64) {
        let (mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0);
        for &l in &self.eigenvalues {
            s1 += l;
            s2 += l * l;
            s3 += l * l * l;
        }
        (s1, 2.0 * s2, 8.0 * s3)
    }
}

/// Spectrum of the discretized kernel `Sigma(s,t) = C diag[Gamma*_a(s,t)] C'`,
/// `C = G~ (x) I_p`, scaled by `v(T)/M`.
pub fn kernel_eigenvalues(surfaces: &[DenseCovSurface], hyp: &Hypothesis, grid: &Grid) -> Result<MixtureSpec> {
    let (p, m) = (surfaces[0].p, grid.len());
    let q = hyp.q();
    check_dim(q * p * m)?;
    let omega = pointwise_omega(surfaces, hyp);
    let roots: Vec<_> = omega.iter().map(inv_sqrt_psd).collect();
    let gt = hyp.g_tilde();
    let dim = q * p * m;
    let mut kernel = DMatrix::<f64>::zeros(dim, dim);
    for (a, surface) in surfaces.iter().enumerate() {
        let star = standardized(surface, &roots, hyp.sizes()[a] as f64);
        for s in 0..m {
            for t in 0..m {
                let blk = &star[s][t];
                for i in 0..q {
                    for j in 0..q {
                        let c = gt[(i, a)] * gt[(j, a)];
                        if c == 0.0 {
                            continue;
                        }
                        for r in 0..p {
                            for u in 0..p {
                                kernel[((s * q + i) * p + r, (t * q + j) * p + u)] += c * blk[(r, u)];
                            }
                        }
                    }
                }
            }
        }
    }
    kernel *= grid.weight();
    kernel.fill_lower_triangle_with_upper_triangle();
    MixtureSpec::new(SymmetricEigen::new(kernel).eigenvalues.iter().copied().collect())
}

/// Monte Carlo upper quantile with a distribution-free order-statistic interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureQuantile {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

pub const MIN_MIXTURE_REPS: usize = 1000;

pub fn null_mixture_quantile(spec: &MixtureSpec, alpha: f64, reps: usize, seed: u64) -> Result<f64> {
    Ok(null_mixture_quantile_ci(spec, alpha, reps, seed, 0.99)?.estimate)
}

/// Upper `alpha` quantile of `sum_r lambda_r A_r`, `A_r ~ chi2_1`, with a
/// `level` confidence interval from the binomial law of the order statistics.
pub fn null_mixture_quantile_ci(
    spec: &MixtureSpec,
    alpha: f64,
    reps: usize,
    seed: u64,
    level: f64,
) -> Result<MixtureQuantile> {
    if reps < MIN_MIXTURE_REPS {
        return Err(Error::InvalidArgument(format!("need at least {MIN_MIXTURE_REPS} replications, got {reps}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) || !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument("alpha and level must lie in (0,1)".into()));
    }
    let mut rng = rng_from(seed);
    let mut draws: Vec<f64> = (0..reps)
        .map(|_| {
            spec.eigenvalues
                .iter()
                .map(|l| {
                    let z: f64 = rng.sample(StandardNormal);
                    l * z * z
                })
                .sum()
        })
        .collect();
    draws.sort_by(f64::total_cmp);
    let r = reps as f64;
    let centre = (1.0 - alpha) * r;
    let half = normal_upper_quantile((1.0 - level) / 2.0) * (r * alpha * (1.0 - alpha)).sqrt();
    let at = |x: f64| draws[(x.ceil() as usize).clamp(1, reps) - 1];
    Ok(MixtureQuantile { estimate: at(centre), lower: at(centre - half), upper: at(centre + half + 1.0) })
}

/// Random fixture for validation: `k` groups of sizes `sizes` with `p`
/// correlated components on the unit grid of `m` points. Each curve is a
/// group-specific smooth mean, three random smooth modes loaded on all
/// components, and white noise, so `Omega(t)` has full rank when the pooled
/// sample is large enough.
pub fn random_sample_set(seed: u64, p: usize, m: usize, sizes: &[usize]) -> Result<SampleSet> {
    let grid = Grid::unit(m)?;
    let mut rng = rng_from(seed);
    let normal = |rng: &mut crate::seed::Rng| -> f64 { rng.sample(StandardNormal) };
    let loadings: Vec<f64> = (0..3 * p).map(|_| normal(&mut rng)).collect();
    let phases: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    let mut groups = Vec::with_capacity(sizes.len());
    for (a, &n) in sizes.iter().enumerate() {
        let level: Vec<f64> = (0..p).map(|_| 0.5 * normal(&mut rng)).collect();
        let mut values = Vec::with_capacity(n * m * p);
        for _ in 0..n {
            let xi: Vec<f64> = (0..3).map(|_| normal(&mut rng)).collect();
            for &t in grid.points() {
                for h in 0..p {
                    let smooth: f64 = (0..3)
                        .map(|r| xi[r] * loadings[r * p + h] * ((r + 1) as f64 * std::f64::consts::PI * t + phases[r]).sin())
                        .sum();
                    values.push(level[h] * (1.0 + t) + smooth + 0.5 * normal(&mut rng));
                }
            }
        }
        groups.push(MfdSample::new((a + 1).to_string(), p, m, values)?);
    }
    SampleSet::new(grid, groups)
}

//! Group moments, the pooled pointwise error matrix `Omega_n(t,t)` and the
//! `Delta` blocks of standardized residual inner products from which every
//! trace functional is computed.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::funcdata::{Grid, MfdSample};
use crate::glht::Hypothesis;
use crate::{Error, Result};

/// Sample mean, residual curves and pointwise covariance of one group.
#[derive(Debug, Clone)]
pub struct GroupMoments {
    pub n: usize,
    pub p: usize,
    pub m: usize,
    /// `ybar(t_m)`, point-major `M x p`.
    pub mean: Vec<f64>,
    /// `z_i(t_m) = y_i(t_m) - ybar(t_m)`, same layout as [`MfdSample`].
    pub residuals: Vec<f64>,
    /// `Gamma_hat(t_m, t_m)` for each grid point.
    pub cov_diag: Vec<DMatrix<f64>>,
}

impl GroupMoments {
    pub fn residual(&self, curve: usize, point: usize) -> &[f64] {
        let off = (curve * self.m + point) * self.p;
        &self.residuals[off..off + self.p]
    }

    pub fn mean_at(&self, point: usize) -> &[f64] {
        &self.mean[point * self.p..(point + 1) * self.p]
    }
}

pub fn group_moments(sample: &MfdSample) -> Result<GroupMoments> {
    moments_from_values(sample.group_id(), sample.values(), sample.n(), sample.p(), sample.m())
}

/// Moments of `n` curves stored point-major in `values`.
pub(crate) fn moments_from_values(group: &str, values: &[f64], n: usize, p: usize, m: usize) -> Result<GroupMoments> {
    if n < 2 {
        return Err(Error::SampleSize { group: group.to_string(), n, needed: 2 });
    }
    let len = m * p;
    let mut mean = vec![0.0; len];
    for curve in values.chunks_exact(len) {
        for (acc, v) in mean.iter_mut().zip(curve) {
            *acc += v;
        }
    }
    let inv_n = 1.0 / n as f64;
    mean.iter_mut().for_each(|v| *v *= inv_n);

    let mut residuals = values.to_vec();
    for curve in residuals.chunks_exact_mut(len) {
        for (r, mu) in curve.iter_mut().zip(&mean) {
            *r -= mu;
        }
    }

    let inv_df = 1.0 / (n - 1) as f64;
    let mut cov_diag = Vec::with_capacity(m);
    for t in 0..m {
        let mut c = DMatrix::<f64>::zeros(p, p);
        for i in 0..n {
            let z = &residuals[(i * m + t) * p..(i * m + t + 1) * p];
            for a in 0..p {
                for b in 0..=a {
                    c[(a, b)] += z[a] * z[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..=a {
                let v = c[(a, b)] * inv_df;
                c[(a, b)] = v;
                c[(b, a)] = v;
            }
        }
        cov_diag.push(c);
    }
    Ok(GroupMoments { n, p, m, mean, residuals, cov_diag })
}

/// How a rank-deficient `Omega_n(t_m, t_m)` is inverted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SingularPolicy {
    /// Moore-Penrose inverse on the eigenspace with eigenvalues above the
    /// rank threshold; the statistic then lives on the range of `Omega`.
    #[default]
    PseudoInverse,
    /// Add `RIDGE_FACTOR * tr/p` to the diagonal, fail if that is not enough.
    Ridge,
}

/// Eigenvalues below `RANK_TOL * tr(Omega)/p` count as zero.
pub const RANK_TOL: f64 = 1e-10;
pub const RIDGE_FACTOR: f64 = 1e-8;
/// Bound on `max |Omega Omega^-1 - I|` accepted by the ridge policy.
pub const INVERSE_CHECK_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OmegaDiagnostics {
    /// Grid points where `Omega` had rank below `p`.
    pub rank_deficient_points: usize,
    pub min_rank: usize,
    /// Grid points where a ridge was added (ridge policy only).
    pub ridged_points: usize,
    /// Largest eigenvalue ratio `max/min` over full-rank points.
    pub max_condition: f64,
}

/// `Omega_n(t_m, t_m) = sum_a h_aa Gamma_a(t_m, t_m) / n_a` with its
/// (pseudo-)inverse and symmetric inverse square root per grid point.
#[derive(Debug, Clone)]
pub struct OmegaHat {
    pub matrices: Vec<DMatrix<f64>>,
    pub inverse: Vec<DMatrix<f64>>,
    pub inv_sqrt: Vec<DMatrix<f64>>,
    pub ranks: Vec<usize>,
    pub diagnostics: OmegaDiagnostics,
}

pub fn build_omega(moments: &[GroupMoments], hyp: &Hypothesis, grid: &Grid, policy: SingularPolicy) -> Result<OmegaHat> {
    if moments.len() != hyp.k() {
        return Err(Error::DimensionMismatch(format!("{} groups but hypothesis has k = {}", moments.len(), hyp.k())));
    }
    let p = moments[0].p;
    let m = grid.len();
    if moments.iter().any(|g| g.p != p || g.m != m) {
        return Err(Error::DimensionMismatch("groups disagree on p or M".into()));
    }
    let weights: Vec<f64> = moments.iter().enumerate().map(|(a, g)| hyp.h()[(a, a)] / g.n as f64).collect();

    let mut out = OmegaHat {
        matrices: Vec::with_capacity(m),
        inverse: Vec::with_capacity(m),
        inv_sqrt: Vec::with_capacity(m),
        ranks: Vec::with_capacity(m),
        diagnostics: OmegaDiagnostics { min_rank: p, ..Default::default() },
    };
    for t in 0..m {
        let mut omega = DMatrix::<f64>::zeros(p, p);
        for (g, w) in moments.iter().zip(&weights) {
            omega += &g.cov_diag[t] * *w;
        }
        let (inv, inv_sqrt, rank, ridged, cond) = invert_psd(&omega, policy).ok_or(Error::Singular { t: grid.points()[t] })?;
        let d = &mut out.diagnostics;
        if rank < p {
            d.rank_deficient_points += 1;
        }
        d.min_rank = d.min_rank.min(rank);
        d.ridged_points += ridged as usize;
        if rank == p {
            d.max_condition = d.max_condition.max(cond);
        }
        out.matrices.push(omega);
        out.inverse.push(inv);
        out.inv_sqrt.push(inv_sqrt);
        out.ranks.push(rank);
    }
    Ok(out)
}

/// Returns `(inverse, inverse square root, rank, ridged, condition)` or
/// `None` when the ridge policy cannot produce a usable inverse.
#[allow(clippy::type_complexity)]
pub(crate) fn invert_psd(
    omega: &DMatrix<f64>,
    policy: SingularPolicy,
) -> Option<(DMatrix<f64>, DMatrix<f64>, usize, bool, f64)> {
    let p = omega.nrows();
    let scale = omega.trace() / p as f64;
    let eig = SymmetricEigen::new(omega.clone());
    let vals = &eig.eigenvalues;
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = RANK_TOL * scale;

    let assemble = |f: &dyn Fn(f64) -> f64| {
        let mut out = DMatrix::<f64>::zeros(p, p);
        for (j, &lam) in vals.iter().enumerate() {
            let s = f(lam);
            if s == 0.0 {
                continue;
            }
            let v = eig.eigenvectors.column(j);
            for a in 0..p {
                for b in 0..p {
                    out[(a, b)] += s * v[a] * v[b];
                }
            }
        }
        out
    };

    match policy {
        SingularPolicy::PseudoInverse => {
            let keep = |lam: f64| scale > 0.0 && lam > tol;
            let rank = vals.iter().filter(|&&l| keep(l)).count();
            let inv = assemble(&|l| if keep(l) { 1.0 / l } else { 0.0 });
            let inv_sqrt = assemble(&|l| if keep(l) { 1.0 / l.sqrt() } else { 0.0 });
            let cond = if rank == p { max / min } else { f64::INFINITY };
            Some((inv, inv_sqrt, rank, false, cond))
        }
        SingularPolicy::Ridge => {
            if !(scale > 0.0) {
                return None;
            }
            let ridge = if min < tol { RIDGE_FACTOR * scale } else { 0.0 };
            let shifted = |l: f64| l.max(0.0) + ridge;
            if vals.iter().any(|&l| !(shifted(l) > 0.0)) {
                return None;
            }
            let inv = assemble(&|l| 1.0 / shifted(l));
            let inv_sqrt = assemble(&|l| 1.0 / shifted(l).sqrt());
            let mut regularised = omega.clone();
            for a in 0..p {
                regularised[(a, a)] += ridge;
            }
            let resid = (&regularised * &inv - DMatrix::<f64>::identity(p, p)).amax();
            if resid > INVERSE_CHECK_TOL {
                return None;
            }
            let cond = (max + ridge) / (min.max(0.0) + ridge);
            Some((inv, inv_sqrt, p, ridge > 0.0, cond))
        }
    }
}

/// All `k x k` blocks `Delta_ab = (delta_ij^ab)`, stored as one symmetric
/// `N x N` matrix with group offsets.
#[derive(Debug, Clone)]
pub struct DeltaMatrices {
    full: DMatrix<f64>,
    offsets: Vec<usize>,
    sizes: Vec<usize>,
}

impl DeltaMatrices {
    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn full(&self) -> &DMatrix<f64> {
        &self.full
    }

    pub fn block(&self, a: usize, b: usize) -> DMatrix<f64> {
        self.full.view((self.offsets[a], self.offsets[b]), (self.sizes[a], self.sizes[b])).into_owned()
    }

    pub fn delta(&self, a: usize, i: usize, b: usize, j: usize) -> f64 {
        self.full[(self.offsets[a] + i, self.offsets[b] + j)]
    }
}

/// `delta_ij^ab = v(T)/M sum_m z_ai(t_m)' Omega^-1(t_m) z_bj(t_m)`, computed as
/// a Gram matrix of the standardized residuals `Omega^-1/2 z`.
pub fn delta_matrices(moments: &[GroupMoments], omega: &OmegaHat, grid: &Grid) -> Result<DeltaMatrices> {
    let m = grid.len();
    let p = moments.first().map(|g| g.p).unwrap_or(0);
    if omega.inv_sqrt.len() != m || moments.iter().any(|g| g.m != m || g.p != p) {
        return Err(Error::DimensionMismatch("moments, Omega and grid disagree".into()));
    }
    let sizes: Vec<usize> = moments.iter().map(|g| g.n).collect();
    let mut offsets = Vec::with_capacity(sizes.len());
    let mut total = 0;
    for &n in &sizes {
        offsets.push(total);
        total += n;
    }
    let root_w = grid.weight().sqrt();
    // row r = curve, columns = (t, h)
    let mut w = DMatrix::<f64>::zeros(total, m * p);
    for (g, off) in moments.iter().zip(&offsets) {
        for i in 0..g.n {
            for t in 0..m {
                let z = g.residual(i, t);
                let s = &omega.inv_sqrt[t];
                for a in 0..p {
                    let mut acc = 0.0;
                    for (b, zb) in z.iter().enumerate() {
                        acc += s[(a, b)] * zb;
                    }
                    w[(off + i, t * p + a)] = acc * root_w;
                }
            }
        }
    }
    let mut full = &w * w.transpose();
    full.fill_lower_triangle_with_upper_triangle();
    Ok(DeltaMatrices { full, offsets, sizes })
}

/// `tr(Gamma*_a)`, `tr(Gamma*_a (x) Gamma*_b)` and
/// `tr(Gamma*_a (x) Gamma*_b (x) Gamma*_c)` for all index tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    pub k: usize,
    pub single: Vec<f64>,
    /// row-major `k x k`
    pub pair: Vec<f64>,
    /// row-major `k x k x k`
    pub triple: Vec<f64>,
}

impl TraceSet {
    pub fn zeros(k: usize) -> Self {
        Self { k, single: vec![0.0; k], pair: vec![0.0; k * k], triple: vec![0.0; k * k * k] }
    }

    pub fn pair(&self, a: usize, b: usize) -> f64 {
        self.pair[a * self.k + b]
    }

    pub fn triple(&self, a: usize, b: usize, c: usize) -> f64 {
        self.triple[(a * self.k + b) * self.k + c]
    }

    /// Largest relative discrepancy against `other`, entrywise with the
    /// scale of each family as the reference.
    pub fn max_rel_diff(&self, other: &TraceSet) -> f64 {
        fn fam(a: &[f64], b: &[f64]) -> f64 {
            let scale = a.iter().chain(b).fold(0.0f64, |s, v| s.max(v.abs()));
            if scale == 0.0 {
                return 0.0;
            }
            a.iter().zip(b).fold(0.0f64, |d, (x, y)| d.max((x - y).abs() / scale))
        }
        fam(&self.single, &other.single).max(fam(&self.pair, &other.pair)).max(fam(&self.triple, &other.triple))
    }
}

pub fn trace_functionals(delta: &DeltaMatrices) -> Result<TraceSet> {
    let sizes = delta.sizes();
    if let Some((a, &n)) = sizes.iter().enumerate().find(|(_, &n)| n < 2) {
        return Err(Error::SampleSize { group: (a + 1).to_string(), n, needed: 2 });
    }
    let k = delta.k();
    let norm: Vec<f64> = sizes.iter().map(|&n| (n * (n - 1)) as f64).collect();
    let mut out = TraceSet::zeros(k);
    let blocks: Vec<Vec<DMatrix<f64>>> = (0..k).map(|a| (0..k).map(|b| delta.block(a, b)).collect()).collect();

    for a in 0..k {
        out.single[a] = blocks[a][a].trace() / norm[a];
    }
    for a in 0..k {
        for b in 0..k {
            out.pair[a * k + b] = blocks[a][b].norm_squared() / (norm[a] * norm[b]);
        }
    }
    for a in 0..k {
        for b in 0..k {
            for c in 0..k {
                // tr(D_ab D_bc D_ca) = sum_il (D_ab D_bc)_il (D_ac)_il
                let prod = &blocks[a][b] * &blocks[b][c];
                let tr = prod.dot(&blocks[a][c]);
                out.triple[(a * k + b) * k + c] = tr / (norm[a] * norm[b] * norm[c]);
            }
        }
    }
    Ok(out)
}

/// `K1_hat = sum_a h_aa tr(Gamma*_a)`; equals `p v(T)` whenever every
/// `Omega(t_m)` has full rank.
pub fn first_cumulant(traces: &TraceSet, hyp: &Hypothesis) -> f64 {
    (0..traces.k).map(|a| hyp.h()[(a, a)] * traces.single[a]).sum()
}

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::hypothesis::h_matrix;
use crate::distributions::{chi2_sf, chi2_upper_quantile, normal_cdf, normal_upper_quantile};
use crate::estimators::{invert_psd, SingularPolicy};
use crate::funcdata::Grid;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerMode {
    /// Normal limit `Phi(-z_alpha + drift / sd)`.
    #[default]
    Normal,
    /// Standardized `chi2_d` form with `d` from the population cumulants.
    FiniteD,
}

/// Population inputs for the local-alternative power.
///
/// `gamma[a]` is the `pM x pM` covariance surface of group `a`, whose
/// `(m, m')` block of size `p x p` is `Gamma_a(t_m, t_m')`.
#[derive(Debug, Clone)]
pub struct AsymptoticPowerInput {
    /// Group mean functions, point-major `M x p` each.
    pub means: Vec<Vec<f64>>,
    pub tau: Vec<f64>,
    pub gamma: Vec<DMatrix<f64>>,
    pub grid: Grid,
    pub g: DMatrix<f64>,
    pub n: f64,
    pub alpha: f64,
    pub mode: PowerMode,
    pub policy: SingularPolicy,
}

pub fn asymptotic_power(input: &AsymptoticPowerInput) -> Result<f64> {
    let k = input.tau.len();
    let m = input.grid.len();
    let (q, gk) = input.g.shape();
    if gk != k || input.means.len() != k || input.gamma.len() != k {
        return Err(Error::DimensionMismatch(format!("G has {gk} columns, tau {k}, means {}, gamma {}", input.means.len(), input.gamma.len())));
    }
    if q == 0 || q >= k {
        return Err(Error::InvalidHypothesis(format!("G must have 1 <= q < k rows, got q = {q}, k = {k}")));
    }
    if input.tau.iter().any(|&t| !(t > 0.0 && t < 1.0)) || (input.tau.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument("tau must lie in (0,1) and sum to 1".into()));
    }
    if !(input.alpha > 0.0 && input.alpha < 1.0) || !(input.n > 0.0) {
        return Err(Error::InvalidArgument("alpha must lie in (0,1) and n must be positive".into()));
    }
    let pm = input.gamma[0].nrows();
    if m == 0 || !pm.is_multiple_of(m) {
        return Err(Error::DimensionMismatch("covariance surface size is not a multiple of M".into()));
    }
    let p = pm / m;
    if input.gamma.iter().any(|s| s.shape() != (pm, pm)) || input.means.iter().any(|mu| mu.len() != pm) {
        return Err(Error::DimensionMismatch("means or covariance surfaces disagree on p M".into()));
    }

    let inv_tau: Vec<f64> = input.tau.iter().map(|t| 1.0 / t).collect();
    let h = h_matrix(&input.g, &inv_tau)?;
    let w = input.grid.weight();

    let mut inv_sqrt = Vec::with_capacity(m);
    let mut drift = 0.0;
    for t in 0..m {
        let mut omega = DMatrix::<f64>::zeros(p, p);
        for a in 0..k {
            let block = input.gamma[a].view((t * p, t * p), (p, p));
            omega += block * (h[(a, a)] / input.tau[a]);
        }
        let (inv, s, rank, _, _) = invert_psd(&omega, input.policy).ok_or(Error::Singular { t: input.grid.points()[t] })?;
        if rank == 0 {
            return Err(Error::Singular { t: input.grid.points()[t] });
        }
        for a in 0..k {
            for b in 0..k {
                let (ma, mb) = (&input.means[a][t * p..(t + 1) * p], &input.means[b][t * p..(t + 1) * p]);
                let mut quad = 0.0;
                for r in 0..p {
                    for c in 0..p {
                        quad += ma[r] * inv[(r, c)] * mb[c];
                    }
                }
                drift += h[(a, b)] * quad;
            }
        }
        inv_sqrt.push(s);
    }
    drift *= input.n * w;

    let mut block_inv = DMatrix::<f64>::zeros(pm, pm);
    for (t, s) in inv_sqrt.iter().enumerate() {
        block_inv.view_mut((t * p, t * p), (p, p)).copy_from(s);
    }
    let standardized: Vec<DMatrix<f64>> =
        (0..k).map(|a| &block_inv * &input.gamma[a] * &block_inv * (1.0 / input.tau[a])).collect();

    let mut k2 = 0.0;
    for a in 0..k {
        for b in 0..k {
            k2 += h[(a, b)].powi(2) * standardized[a].dot(&standardized[b]) * w * w;
        }
    }
    k2 *= 2.0;
    if !(k2 > 0.0) {
        return Err(Error::DegenerateCumulant { k2, k3: f64::NAN });
    }
    let shift = drift / k2.sqrt();

    match input.mode {
        PowerMode::Normal => Ok(normal_cdf(-normal_upper_quantile(input.alpha) + shift)),
        PowerMode::FiniteD => {
            let mut k3 = 0.0;
            for a in 0..k {
                for b in 0..k {
                    let ab = &standardized[a] * &standardized[b];
                    for c in 0..k {
                        k3 += h[(a, b)] * h[(b, c)] * h[(c, a)] * ab.dot(&standardized[c]);
                    }
                }
            }
            k3 *= 8.0 * w.powi(3);
            if !(k3 > 0.0) {
                return Err(Error::DegenerateCumulant { k2, k3 });
            }
            let d = 8.0 * k2.powi(3) / (k3 * k3);
            let x = chi2_upper_quantile(input.alpha, d) - (2.0 * d).sqrt() * shift;
            Ok(if x <= 0.0 { 1.0 } else { chi2_sf(x, d) })
        }
    }
}

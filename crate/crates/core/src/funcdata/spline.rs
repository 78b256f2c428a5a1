//! Natural cubic smoothing splines with the roughness penalty chosen by
//! generalized cross-validation.
//!
//! For knots `x_1 < ... < x_n` the fitted values minimise
//! `sum (y_i - g(x_i))^2 + lambda * int g''^2`, i.e. `g = (I + lambda K)^-1 y`
//! with `K = Q R^-1 Q'` (band matrices `Q`, `R` of the value/second-derivative
//! representation). `K` is diagonalised once per knot set, after which every
//! candidate `lambda` costs `O(n)` and a fit costs `O(n^2)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Number of log-spaced penalty candidates scanned by GCV.
pub const GCV_CANDIDATES: usize = 61;
const LOG10_LAMBDA_MIN: f64 = -12.0;
const LOG10_LAMBDA_MAX: f64 = 3.0;

/// Penalty candidates for knots spanning `range`; `lambda` scales like
/// `range^3` so the set is invariant to the time unit.
pub fn lambda_candidates(range: f64) -> Vec<f64> {
    let step = (LOG10_LAMBDA_MAX - LOG10_LAMBDA_MIN) / (GCV_CANDIDATES - 1) as f64;
    (0..GCV_CANDIDATES)
        .map(|i| range.powi(3) * 10f64.powf(LOG10_LAMBDA_MIN + step * i as f64))
        .collect()
}

/// Knot-set dependent factorisation shared by all series on the same knots.
#[derive(Debug, Clone)]
pub struct SplineBasis {
    x: Vec<f64>,
    /// eigenvectors of K (columns)
    u: DMatrix<f64>,
    /// eigenvalues of K (two are ~0: the linear functions)
    kappa: Vec<f64>,
    /// R^-1 Q', maps fitted values to interior second derivatives
    curvature: DMatrix<f64>,
    lambdas: Vec<f64>,
}

impl SplineBasis {
    /// Requires at least 3 strictly increasing knots.
    pub fn new(x: &[f64]) -> Self {
        let n = x.len();
        assert!(n >= 3, "smoothing spline needs at least 3 knots");
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(h.iter().all(|&d| d > 0.0), "knots must be strictly increasing");

        let mut q = DMatrix::<f64>::zeros(n, n - 2);
        let mut r = DMatrix::<f64>::zeros(n - 2, n - 2);
        for j in 1..n - 1 {
            let c = j - 1;
            q[(j - 1, c)] = 1.0 / h[j - 1];
            q[(j, c)] = -1.0 / h[j - 1] - 1.0 / h[j];
            q[(j + 1, c)] = 1.0 / h[j];
            r[(c, c)] = (h[j - 1] + h[j]) / 3.0;
            if c + 1 < n - 2 {
                r[(c, c + 1)] = h[j] / 6.0;
                r[(c + 1, c)] = h[j] / 6.0;
            }
        }
        let chol = r.cholesky().expect("R is diagonally dominant");
        let curvature = chol.solve(&q.transpose());
        let mut k = &q * &curvature;
        k = (&k + k.transpose()) * 0.5;
        let eig = SymmetricEigen::new(k);
        let mut kappa: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(0.0)).collect();
        // the null space of K (the linear functions) is exactly two-dimensional
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| kappa[a].total_cmp(&kappa[b]));
        for &j in &order[..2] {
            kappa[j] = 0.0;
        }
        Self {
            x: x.to_vec(),
            u: eig.eigenvectors,
            kappa,
            curvature,
            lambdas: lambda_candidates(x[n - 1] - x[0]),
        }
    }

    pub fn knots(&self) -> &[f64] {
        &self.x
    }

    /// Least-squares line through `(x, y)` evaluated at the knots, and the
    /// residual. The smoother leaves lines unchanged, so only the residual
    /// is shrunk; this keeps linear data exact.
    fn split_linear(&self, y: &[f64]) -> (Vec<f64>, DVector<f64>) {
        let n = self.x.len() as f64;
        let xm = self.x.iter().sum::<f64>() / n;
        let ym = y.iter().sum::<f64>() / n;
        let sxx: f64 = self.x.iter().map(|v| (v - xm).powi(2)).sum();
        let sxy: f64 = self.x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
        let slope = sxy / sxx;
        let line: Vec<f64> = self.x.iter().map(|v| ym + slope * (v - xm)).collect();
        let resid = DVector::from_iterator(y.len(), y.iter().zip(&line).map(|(a, b)| a - b));
        (line, resid)
    }

    /// GCV score `n RSS / (n - tr A)^2` at each candidate penalty.
    pub fn gcv_scores(&self, y: &[f64]) -> Vec<(f64, f64)> {
        let n = self.x.len() as f64;
        let coef = self.u.tr_mul(&self.split_linear(y).1);
        self.lambdas
            .iter()
            .map(|&lam| {
                let mut rss = 0.0;
                let mut tr = 0.0;
                for (c, &kap) in coef.iter().zip(&self.kappa) {
                    let shrink = 1.0 / (1.0 + lam * kap);
                    tr += shrink;
                    let res = (1.0 - shrink) * c;
                    rss += res * res;
                }
                let denom = (n - tr).max(1e-12);
                (lam, n * rss / (denom * denom))
            })
            .collect()
    }

    /// Fits with a given penalty.
    pub fn fit(&self, y: &[f64], lambda: f64) -> SmoothingSpline {
        let (line, resid) = self.split_linear(y);
        let mut coef = self.u.tr_mul(&resid);
        for (c, &kap) in coef.iter_mut().zip(&self.kappa) {
            *c /= 1.0 + lambda * kap;
        }
        let g = &self.u * coef + DVector::from_vec(line);
        let gamma_inner = &self.curvature * &g;
        let mut gamma = vec![0.0; self.x.len()];
        gamma[1..self.x.len() - 1].copy_from_slice(gamma_inner.as_slice());
        SmoothingSpline { x: self.x.clone(), g: g.as_slice().to_vec(), gamma, lambda }
    }

    /// Fits with the GCV-optimal penalty among [`lambda_candidates`].
    pub fn fit_gcv(&self, y: &[f64]) -> SmoothingSpline {
        let best = self
            .gcv_scores(y)
            .into_iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(lam, _)| lam)
            .expect("candidate set is non-empty");
        self.fit(y, best)
    }
}

/// A fitted natural cubic spline in value/second-derivative form.
#[derive(Debug, Clone)]
pub struct SmoothingSpline {
    x: Vec<f64>,
    g: Vec<f64>,
    gamma: Vec<f64>,
    lambda: f64,
}

impl SmoothingSpline {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn fitted(&self) -> &[f64] {
        &self.g
    }

    /// Evaluates the spline; outside the knot range the boundary value is
    /// continued as a constant.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.g[0];
        }
        if t >= self.x[n - 1] {
            return self.g[n - 1];
        }
        let i = self.x.partition_point(|&v| v <= t) - 1;
        let (xl, xr) = (self.x[i], self.x[i + 1]);
        let h = xr - xl;
        let (dl, dr) = (t - xl, xr - t);
        (dl * self.g[i + 1] + dr * self.g[i]) / h
            - dl * dr / 6.0 * ((1.0 + dl / h) * self.gamma[i + 1] + (1.0 + dr / h) * self.gamma[i])
    }
}

/// Piecewise-linear interpolation with constant continuation outside the
/// data range. `x` must be strictly increasing with at least 2 entries.
pub fn linear_interpolate(x: &[f64], y: &[f64], t: f64) -> f64 {
    let n = x.len();
    if t <= x[0] {
        return y[0];
    }
    if t >= x[n - 1] {
        return y[n - 1];
    }
    let i = x.partition_point(|&v| v <= t) - 1;
    let w = (t - x[i]) / (x[i + 1] - x[i]);
    y[i] + w * (y[i + 1] - y[i])
}

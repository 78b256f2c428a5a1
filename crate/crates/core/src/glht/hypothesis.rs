use nalgebra::{DMatrix, SymmetricEigen};

use crate::{Error, Result};

/// Relative singular-value cutoff for the rank check on `G`.
const RANK_TOL: f64 = 1e-10;

/// Coefficient matrix `G` together with `D = diag(1/n_a)` and
/// `H = G'(G D G')^-1 G`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    g: DMatrix<f64>,
    sizes: Vec<usize>,
    h: DMatrix<f64>,
}

impl Hypothesis {
    pub fn new(g: &DMatrix<f64>, sizes: &[usize]) -> Result<Self> {
        let (q, k) = g.shape();
        if sizes.len() != k {
            return Err(Error::InvalidHypothesis(format!("G has {k} columns but there are {} groups", sizes.len())));
        }
        if q == 0 || q >= k {
            return Err(Error::InvalidHypothesis(format!("G must have 1 <= q < k rows, got q = {q}, k = {k}")));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidHypothesis("G has non-finite entries".into()));
        }
        if let Some((a, &n)) = sizes.iter().enumerate().find(|(_, &n)| n < 2) {
            return Err(Error::SampleSize { group: (a + 1).to_string(), n, needed: 2 });
        }
        let rank = numerical_rank(g);
        if rank < q {
            return Err(Error::InvalidHypothesis(format!("G is rank deficient: rank {rank} < q = {q}")));
        }
        let weights: Vec<f64> = sizes.iter().map(|&n| 1.0 / n as f64).collect();
        let h = h_matrix(g, &weights)?;
        Ok(Self { g: g.clone(), sizes: sizes.to_vec(), h })
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn q(&self) -> usize {
        self.g.nrows()
    }

    pub fn k(&self) -> usize {
        self.g.ncols()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Diagonal of `D`.
    pub fn d(&self) -> Vec<f64> {
        self.sizes.iter().map(|&n| 1.0 / n as f64).collect()
    }

    /// `(G D G')^-1/2 G`, whose Gram matrix is `H`.
    pub fn g_tilde(&self) -> DMatrix<f64> {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.d()));
        let gdg = &self.g * d * self.g.transpose();
        let eig = SymmetricEigen::new(gdg);
        let inv_sqrt = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
            * eig.eigenvectors.transpose();
        inv_sqrt * &self.g
    }
}

pub fn make_hypothesis(g: &DMatrix<f64>, sizes: &[usize]) -> Result<Hypothesis> {
    Hypothesis::new(g, sizes)
}

fn numerical_rank(g: &DMatrix<f64>) -> usize {
    let sv = g.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * max).count()
}

/// `G' (G diag(w) G')^-1 G` via a Cholesky solve; used with `w = 1/n` for
/// the finite-sample `H` and with `w = 1/tau` for its limit `H*`.
pub(crate) fn h_matrix(g: &DMatrix<f64>, weights: &[f64]) -> Result<DMatrix<f64>> {
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(weights));
    let gdg = g * d * g.transpose();
    let chol = gdg
        .cholesky()
        .ok_or_else(|| Error::InvalidHypothesis("G D G' is not positive definite".into()))?;
    let mut h = g.transpose() * chol.solve(g);
    // exact symmetry
    let k = h.nrows();
    for a in 0..k {
        for b in 0..a {
            let v = 0.5 * (h[(a, b)] + h[(b, a)]);
            h[(a, b)] = v;
            h[(b, a)] = v;
        }
    }
    Ok(h)
}

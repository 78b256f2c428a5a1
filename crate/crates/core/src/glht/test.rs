use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::Hypothesis;
use crate::distributions::{chi2_sf, chi2_upper_quantile};
use crate::estimators::{
    build_omega, delta_matrices, first_cumulant, group_moments, trace_functionals, GroupMoments, OmegaDiagnostics,
    OmegaHat, SingularPolicy, TraceSet,
};
use crate::funcdata::{Grid, SampleSet};
use crate::{Error, Result};

/// Parameters of the approximating law `beta0 + beta1 chi2_d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSqParams {
    pub beta0: f64,
    pub beta1: f64,
    pub d: f64,
    pub k1_hat: f64,
    pub k2_hat: f64,
    pub k3_hat: f64,
}

impl ChiSqParams {
    pub fn from_cumulants(k1: f64, k2: f64, k3: f64) -> Result<Self> {
        if !(k2 > 0.0 && k3 > 0.0 && k2.is_finite() && k3.is_finite()) {
            return Err(Error::DegenerateCumulant { k2, k3 });
        }
        Ok(Self {
            beta0: k1 - 2.0 * k2 * k2 / k3,
            beta1: k3 / (4.0 * k2),
            d: 8.0 * k2.powi(3) / (k3 * k3),
            k1_hat: k1,
            k2_hat: k2,
            k3_hat: k3,
        })
    }

    /// `beta0 + beta1 chi2_d(alpha)`.
    pub fn critical_value(&self, alpha: f64) -> f64 {
        self.beta0 + self.beta1 * chi2_upper_quantile(alpha, self.d)
    }

    /// Upper tail probability of `stat` under the approximating law; 1 below `beta0`.
    pub fn p_value(&self, stat: f64) -> f64 {
        let arg = (stat - self.beta0) / self.beta1;
        if arg < 0.0 {
            1.0
        } else {
            chi2_sf(arg, self.d)
        }
    }
}

/// Parameters with the first cumulant fixed at `p v(T)`.
pub fn chisq_params(k2: f64, k3: f64, p: usize, volume: f64) -> Result<ChiSqParams> {
    ChiSqParams::from_cumulants(p as f64 * volume, k2, k3)
}

/// `K2 = 2 sum h_ab^2 tr(G*_a (x) G*_b)`, `K3 = 8 sum h_ab h_bc h_ca tr(G*_a (x) G*_b (x) G*_c)`.
pub fn cumulant_estimates(traces: &TraceSet, hyp: &Hypothesis) -> Result<(f64, f64)> {
    let k = traces.k;
    if hyp.k() != k {
        return Err(Error::DimensionMismatch(format!("traces for {k} groups, hypothesis for {}", hyp.k())));
    }
    let h = hyp.h();
    let mut k2 = 0.0;
    let mut k3 = 0.0;
    for a in 0..k {
        for b in 0..k {
            k2 += h[(a, b)] * h[(a, b)] * traces.pair(a, b);
            for c in 0..k {
                k3 += h[(a, b)] * h[(b, c)] * h[(c, a)] * traces.triple(a, b, c);
            }
        }
    }
    let (k2, k3) = (2.0 * k2, 8.0 * k3);
    if !(k2 > 0.0 && k3 > 0.0) {
        return Err(Error::DegenerateCumulant { k2, k3 });
    }
    Ok((k2, k3))
}

/// `c_n = 1 + sum_a h_aa^2 (n_a + 1) / (n_a (n_a - 3)) tr(G*_a (x) G*_a)`.
pub fn adjustment_coefficient(traces: &TraceSet, hyp: &Hypothesis, sizes: &[usize]) -> Result<f64> {
    if sizes.len() != traces.k {
        return Err(Error::DimensionMismatch(format!("{} sizes for {} groups", sizes.len(), traces.k)));
    }
    let mut c = 1.0;
    for (a, &n) in sizes.iter().enumerate() {
        if n <= 3 {
            return Err(Error::SampleSize { group: (a + 1).to_string(), n, needed: 4 });
        }
        let n = n as f64;
        let h = hyp.h()[(a, a)];
        c += h * h * (n + 1.0) / (n * (n - 3.0)) * traces.pair(a, a);
    }
    Ok(c)
}

/// Moments and `Omega` for one data set, shared by the statistic and traces.
#[derive(Debug, Clone)]
pub struct Fitted {
    pub hyp: Hypothesis,
    pub moments: Vec<GroupMoments>,
    pub omega: OmegaHat,
}

pub fn fit(set: &SampleSet, g: &DMatrix<f64>, policy: SingularPolicy) -> Result<Fitted> {
    let hyp = Hypothesis::new(g, &set.sizes())?;
    let moments = set.groups().iter().map(group_moments).collect::<Result<Vec<_>>>()?;
    let omega = build_omega(&moments, &hyp, set.grid(), policy)?;
    Ok(Fitted { hyp, moments, omega })
}

/// `T_n = v(T)/M sum_m sum_ab h_ab ybar_a(t_m)' Omega^-1(t_m) ybar_b(t_m)`.
pub fn statistic_from(moments: &[GroupMoments], omega: &OmegaHat, hyp: &Hypothesis, grid: &Grid) -> f64 {
    let k = moments.len();
    let p = moments[0].p;
    let h = hyp.h();
    let mut u = vec![0.0; k * p];
    let mut total = 0.0;
    for t in 0..grid.len() {
        let s = &omega.inv_sqrt[t];
        for (a, g) in moments.iter().enumerate() {
            let mean = g.mean_at(t);
            for r in 0..p {
                u[a * p + r] = (0..p).map(|c| s[(r, c)] * mean[c]).sum();
            }
        }
        for a in 0..k {
            for b in 0..k {
                let dot: f64 = (0..p).map(|r| u[a * p + r] * u[b * p + r]).sum();
                total += h[(a, b)] * dot;
            }
        }
    }
    (total * grid.weight()).max(0.0)
}

pub fn statistic(set: &SampleSet, hyp: &Hypothesis) -> Result<f64> {
    let fitted = fit(set, hyp.g(), SingularPolicy::default())?;
    Ok(statistic_from(&fitted.moments, &fitted.omega, &fitted.hyp, set.grid()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TestOptions {
    /// Divide `T_n` by `c_n`; `false` gives the naive three-cumulant test.
    pub adjusted: bool,
    pub alphas: Vec<f64>,
    pub policy: SingularPolicy,
}

impl Default for TestOptions {
    fn default() -> Self {
        Self { adjusted: true, alphas: vec![0.05], policy: SingularPolicy::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub a: f64,
    pub b: f64,
    #[serde(rename = "M")]
    pub m: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestDiagnostics {
    pub grid: GridInfo,
    pub sizes: Vec<usize>,
    pub p: usize,
    pub policy: SingularPolicy,
    pub omega: OmegaDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    #[serde(rename = "T_n")]
    pub t_n: f64,
    pub c_n: f64,
    pub params: ChiSqParams,
    pub p_value: f64,
    pub reject_at: BTreeMap<String, bool>,
    pub critical_values: BTreeMap<String, f64>,
    pub adjusted: bool,
    pub diagnostics: TestDiagnostics,
}

pub fn run_test(set: &SampleSet, g: &DMatrix<f64>, options: &TestOptions) -> Result<TestReport> {
    if let Some(&a) = options.alphas.iter().find(|&&a| !(a > 0.0 && a < 1.0)) {
        return Err(Error::InvalidArgument(format!("significance level {a} outside (0, 1)")));
    }
    let needed = if options.adjusted { 4 } else { 2 };
    if let Some(g) = set.groups().iter().find(|g| g.n() < needed) {
        return Err(Error::SampleSize { group: g.group_id().to_string(), n: g.n(), needed });
    }
    let fitted = fit(set, g, options.policy)?;
    let t_n = statistic_from(&fitted.moments, &fitted.omega, &fitted.hyp, set.grid());
    let delta = delta_matrices(&fitted.moments, &fitted.omega, set.grid())?;
    let traces = trace_functionals(&delta)?;
    let k1 = first_cumulant(&traces, &fitted.hyp);
    let (k2, k3) = cumulant_estimates(&traces, &fitted.hyp)?;
    let params = ChiSqParams::from_cumulants(k1, k2, k3)?;
    let c_n = if options.adjusted { adjustment_coefficient(&traces, &fitted.hyp, &set.sizes())? } else { 1.0 };
    let p_value = params.p_value(t_n / c_n);

    let mut reject_at = BTreeMap::new();
    let mut critical_values = BTreeMap::new();
    for &alpha in &options.alphas {
        reject_at.insert(alpha_key(alpha), p_value < alpha);
        critical_values.insert(alpha_key(alpha), params.critical_value(alpha));
    }
    let grid = set.grid();
    Ok(TestReport {
        t_n,
        c_n,
        params,
        p_value,
        reject_at,
        critical_values,
        adjusted: options.adjusted,
        diagnostics: TestDiagnostics {
            grid: GridInfo { a: grid.start(), b: grid.end(), m: grid.len() },
            sizes: set.sizes(),
            p: set.p(),
            policy: options.policy,
            omega: fitted.omega.diagnostics.clone(),
        },
    })
}

pub(crate) fn alpha_key(alpha: f64) -> String {
    format!("{alpha}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcdata::MfdSample;
    use approx::assert_relative_eq;

    fn contrast(k: usize) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(1, k);
        g[(0, 0)] = 1.0;
        g[(0, k - 1)] = -1.0;
        g
    }

    #[test]
    fn chisq_params_substitution() {
        let c = chisq_params(8.0, 32.0, 6, 1.0).unwrap();
        assert_relative_eq!(c.beta1, 1.0, max_relative = 1e-15);
        assert_relative_eq!(c.d, 4.0, max_relative = 1e-15);
        assert_relative_eq!(c.beta0, 2.0, max_relative = 1e-15);
        let d = 7.5;
        let pure = chisq_params(2.0 * d, 8.0 * d, 3, 2.0).unwrap();
        assert_relative_eq!(pure.beta1, 1.0, max_relative = 1e-14);
        assert_relative_eq!(pure.d, d, max_relative = 1e-14);
        assert_relative_eq!(pure.beta0, 6.0 - d, max_relative = 1e-14);
    }

    #[test]
    fn chisq_params_degenerate() {
        assert!(matches!(chisq_params(0.0, 1.0, 1, 1.0), Err(Error::DegenerateCumulant { .. })));
        assert!(matches!(chisq_params(1.0, -1.0, 1, 1.0), Err(Error::DegenerateCumulant { .. })));
    }

    #[test]
    fn adjustment_substitution() {
        let hyp = Hypothesis::new(&DMatrix::from_row_slice(1, 2, &[1.0, -1.0]), &[20, 20]).unwrap();
        // h_aa = 10 here
        assert_relative_eq!(hyp.h()[(0, 0)], 10.0, max_relative = 1e-14);
        let mut tr = TraceSet::zeros(2);
        tr.pair = vec![0.01, 0.0, 0.0, 0.01];
        let c = adjustment_coefficient(&tr, &hyp, &[20, 20]).unwrap();
        assert_relative_eq!(c, 1.0 + 2.0 * 100.0 * (21.0 / 340.0) * 0.01, max_relative = 1e-14);
        assert_eq!(adjustment_coefficient(&TraceSet::zeros(2), &hyp, &[20, 20]).unwrap(), 1.0);
        let small = Hypothesis::new(&DMatrix::from_row_slice(1, 2, &[1.0, -1.0]), &[20, 3]).unwrap();
        assert!(matches!(adjustment_coefficient(&tr, &small, &[20, 3]), Err(Error::SampleSize { group, .. }) if group == "2"));
    }

    #[test]
    fn zero_traces_are_degenerate() {
        let hyp = Hypothesis::new(&contrast(3), &[5, 5, 5]).unwrap();
        assert!(matches!(cumulant_estimates(&TraceSet::zeros(3), &hyp), Err(Error::DegenerateCumulant { .. })));
    }

    #[test]
    fn scalar_statistic() {
        let grid = Grid::unit(2).unwrap();
        let g1 = MfdSample::from_fn("1", 3, 1, 2, |i, _, _| i as f64).unwrap();
        let g2 = MfdSample::from_fn("2", 3, 1, 2, |i, _, _| 3.0 + i as f64).unwrap();
        let set = SampleSet::new(grid, vec![g1, g2]).unwrap();
        let hyp = Hypothesis::new(&contrast(2), &[3, 3]).unwrap();
        // means 1 and 4, variances 1: H = 1.5 [[1,-1],[-1,1]], Omega = 1,
        // T = 1/2 * 2 * 1.5 * 9
        assert_relative_eq!(statistic(&set, &hyp).unwrap(), 13.5, max_relative = 1e-13);
    }

    #[test]
    fn equal_means_give_zero_and_unit_p() {
        let grid = Grid::unit(5).unwrap();
        let mk = |name: &str, shift: f64| {
            MfdSample::from_fn(name, 6, 2, 5, move |i, h, t| {
                let base = (t as f64).sin() + h as f64;
                let e = [-2.5, -1.5, 0.5, 1.0, 0.5, 2.0][i] * (1.0 + shift * (t + h) as f64);
                base + e
            })
            .unwrap()
        };
        let set = SampleSet::new(grid, vec![mk("a", 0.1), mk("b", 0.3)]).unwrap();
        let rep = run_test(&set, &contrast(2), &TestOptions::default()).unwrap();
        assert!(rep.t_n.abs() < 1e-12);
        if rep.params.beta0 > 0.0 {
            assert_eq!(rep.p_value, 1.0);
        }
        assert!(!rep.reject_at["0.05"]);
    }

    #[test]
    fn median_gives_half() {
        let p = ChiSqParams::from_cumulants(3.0, 5.0, 11.0).unwrap();
        let med = p.beta0 + p.beta1 * crate::distributions::chi2_quantile(0.5, p.d);
        assert_relative_eq!(p.p_value(med), 0.5, max_relative = 1e-9);
        assert_eq!(p.p_value(p.beta0 - 1.0), 1.0);
    }

    #[test]
    fn rejects_bad_alpha() {
        let grid = Grid::unit(3).unwrap();
        let mk = |name: &str| MfdSample::from_fn(name, 5, 1, 3, |i, _, t| (i * i + t) as f64).unwrap();
        let set = SampleSet::new(grid, vec![mk("a"), mk("b")]).unwrap();
        let opts = TestOptions { alphas: vec![1.5], ..Default::default() };
        assert!(matches!(run_test(&set, &contrast(2), &opts), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn small_group_named_when_adjusting() {
        let grid = Grid::unit(3).unwrap();
        let a = MfdSample::from_fn("big", 6, 1, 3, |i, _, t| (i * i + t) as f64).unwrap();
        let b = MfdSample::from_fn("tiny", 3, 1, 3, |i, _, t| (i + t * t) as f64).unwrap();
        let set = SampleSet::new(grid, vec![a, b]).unwrap();
        let err = run_test(&set, &contrast(2), &TestOptions::default()).unwrap_err();
        assert!(matches!(err, Error::SampleSize { ref group, .. } if group == "tiny"));
        let naive = TestOptions { adjusted: false, ..Default::default() };
        assert!(run_test(&set, &contrast(2), &naive).is_ok());
    }
}

//! Chi-square and normal distribution numerics.
//!
//! `chi2_d` for real `d > 0` is the gamma law with shape `d/2` and scale 2.
//! Its CDF is the regularized lower incomplete gamma function, evaluated by
//! the power series below `x < a + 1` and by a Lentz continued fraction for
//! the upper tail otherwise. Quantiles are found by Newton iteration kept
//! inside a shrinking bracket (bisection when Newton leaves it).

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    if x >= 10.0 {
        // Stirling series; error below 1e-17 relative for x >= 10
        let inv = 1.0 / x;
        let inv2 = inv * inv;
        let series = inv
            * (1.0 / 12.0
                - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))));
        return (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + series;
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

const EPS: f64 = 1e-16;
const MAX_ITER: usize = 100_000;

fn gamma_prefactor(a: f64, x: f64) -> f64 {
    (a * x.ln() - x - ln_gamma(a)).exp()
}

fn lower_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * gamma_prefactor(a, x)
}

fn upper_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h * gamma_prefactor(a, x)
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x.is_infinite() {
        return 1.0;
    }
    if x < a + 1.0 {
        lower_series(a, x).min(1.0)
    } else {
        (1.0 - upper_continued_fraction(a, x)).max(0.0)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    if x < a + 1.0 {
        (1.0 - lower_series(a, x)).max(0.0)
    } else {
        upper_continued_fraction(a, x).min(1.0)
    }
}

pub fn chi2_pdf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let a = 0.5 * df;
    ((a - 1.0) * x.ln() - 0.5 * x - a * 2f64.ln() - ln_gamma(a)).exp()
}

pub fn chi2_cdf(x: f64, df: f64) -> f64 {
    gamma_p(0.5 * df, 0.5 * x)
}

/// Upper tail `Pr(chi2_df > x)`.
pub fn chi2_sf(x: f64, df: f64) -> f64 {
    gamma_q(0.5 * df, 0.5 * x)
}

/// Lower quantile: the `x` with `chi2_cdf(x, df) = p`.
pub fn chi2_quantile(p: f64, df: f64) -> f64 {
    assert!(df > 0.0, "degrees of freedom must be positive");
    assert!((0.0..=1.0).contains(&p), "probability out of range: {p}");
    if p == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    // Work in whichever tail is smaller to keep the residual well conditioned.
    let upper = p > 0.5;
    let target = if upper { 1.0 - p } else { p };
    let resid = |x: f64| {
        if upper {
            target - chi2_sf(x, df)
        } else {
            chi2_cdf(x, df) - target
        }
    };

    // Wilson-Hilferty start.
    let z = normal_quantile(p);
    let k = 2.0 / (9.0 * df);
    let mut x = df * (1.0 - k + z * k.sqrt()).powi(3);
    if !(x.is_finite() && x > 0.0) {
        x = df.max(1e-3);
    }

    let mut lo = 0.0;
    let mut hi = x.max(1.0);
    while resid(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    if x <= lo || x >= hi {
        x = 0.5 * (lo + hi);
    }

    for _ in 0..500 {
        let r = resid(x);
        if r == 0.0 {
            return x;
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let pdf = chi2_pdf(x, df);
        let mut next = if pdf > 0.0 { x - r / pdf } else { f64::NAN };
        if !(next > lo && next < hi) {
            // shrink geometrically while the lower end is still 0 so tiny
            // quantiles (small df, small p) are reached quickly
            next = if lo == 0.0 { 0.1 * hi } else { 0.5 * (lo + hi) };
        }
        if (next - x).abs() <= 1e-15 * x.abs() || hi - lo <= 4.0 * f64::EPSILON * hi {
            return next;
        }
        x = next;
    }
    x
}

/// Upper `alpha` percentile `chi2_df(alpha)`: `Pr(chi2_df > x) = alpha`.
pub fn chi2_upper_quantile(alpha: f64, df: f64) -> f64 {
    chi2_quantile(1.0 - alpha, df)
}

/// Standard normal CDF, through `erf(y) = P(1/2, y^2)`.
pub fn normal_cdf(x: f64) -> f64 {
    let p = gamma_p(0.5, 0.5 * x * x);
    if x >= 0.0 {
        0.5 * (1.0 + p)
    } else {
        0.5 * gamma_q(0.5, 0.5 * x * x)
    }
}

/// Standard normal quantile via Acklam's rational approximation followed
/// by one Halley refinement step.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let plow = 0.02425;
    let x = if p < plow {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - plow {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = normal_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// Upper `alpha` percentile `z_alpha` of N(0, 1).
pub fn normal_upper_quantile(alpha: f64) -> f64 {
    -normal_quantile(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ln_gamma_known_values() {
        assert_relative_eq!(ln_gamma(1.0), 0.0, epsilon = 1e-15);
        assert_relative_eq!(ln_gamma(0.5), PI.sqrt().ln(), epsilon = 1e-14);
        assert_relative_eq!(ln_gamma(5.0), 24f64.ln(), epsilon = 1e-14);
        // 20! = 2432902008176640000 = Gamma(21)
        assert_relative_eq!(ln_gamma(21.0), 2_432_902_008_176_640_000f64.ln(), max_relative = 1e-15);
    }

    #[test]
    fn chi2_closed_forms() {
        // df = 2 is exponential with mean 2
        for x in [0.1, 1.0, 3.0, 10.0, 40.0] {
            assert_relative_eq!(chi2_cdf(x, 2.0), 1.0 - (-x / 2.0).exp(), max_relative = 1e-13);
            assert_relative_eq!(chi2_sf(x, 2.0), (-x / 2.0f64).exp(), max_relative = 1e-12);
        }
        assert_eq!(chi2_cdf(0.0, 3.0), 0.0);
        assert_eq!(chi2_sf(-1.0, 3.0), 1.0);
    }

    #[test]
    fn familiar_critical_values() {
        assert_relative_eq!(chi2_upper_quantile(0.05, 1.0), 3.841_458_820_694_124, max_relative = 1e-10);
        assert_relative_eq!(chi2_upper_quantile(0.05, 10.0), 18.307_038_053_275_146, max_relative = 1e-10);
        assert_relative_eq!(normal_upper_quantile(0.05), 1.644_853_626_951_472_2, max_relative = 1e-12);
        assert_relative_eq!(normal_cdf(1.96), 0.975_002_104_851_780, max_relative = 1e-12);
    }

    #[test]
    fn quantile_of_median_matches_cdf() {
        for df in [0.5, 1.0, 3.7, 50.0, 500.0] {
            let m = chi2_quantile(0.5, df);
            assert_relative_eq!(chi2_cdf(m, df), 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn tiny_and_huge_probabilities() {
        let x = chi2_quantile(1e-6, 0.5);
        assert!(x > 0.0);
        assert_relative_eq!(chi2_cdf(x, 0.5), 1e-6, max_relative = 1e-9);
        let y = chi2_quantile(1.0 - 1e-6, 500.0);
        assert_relative_eq!(chi2_sf(y, 500.0), 1e-6, max_relative = 1e-8);
    }
}

//! Goodness-of-fit statistics used by the experiments.

use alloc::vec::Vec;

use crate::math;
use crate::special::gamma_q;

/// Kolmogorov–Smirnov distance between a sample and a CDF.
///
/// sup over the sorted sample of max(|i/n − F(x_i)|, |(i−1)/n − F(x_i)|).
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut xs: Vec<f64> = sample.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        let hi = math::abs((i as f64 + 1.0) / n - f);
        let lo = math::abs(i as f64 / n - f);
        d = d.max(hi).max(lo);
    }
    d
}

/// Unit-rate exponential CDF 1 − e^{-t}.
pub fn exp_cdf(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        -math::expm1(-t)
    }
}

/// Pearson chi-square statistic for observed counts against expected counts.
pub fn chi_square_stat(observed: &[u64], expected: &[f64]) -> f64 {
    observed
        .iter()
        .zip(expected)
        .map(|(&o, &e)| {
            let d = o as f64 - e;
            d * d / e
        })
        .sum()
}

/// Upper tail P(X ≥ stat) for X ~ chi-square(df).
pub fn chi_square_pvalue(stat: f64, df: u32) -> f64 {
    gamma_q(df as f64 / 2.0, stat / 2.0)
}

/// Sample mean and variance (unbiased).
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ks_on_exact_uniform_grid() {
        // sample = exact quantiles of U(0,1): KS = 1/(2n) shifted by grid; <= 1/n
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_distance(&xs, |x| x.clamp(0.0, 1.0));
        assert!(d <= 1.0 / n as f64 + 1e-12);
    }

    #[test]
    fn ks_detects_shift() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0 * 0.5).collect();
        let d = ks_distance(&xs, |x| x.clamp(0.0, 1.0));
        assert!(d > 0.4);
    }

    #[test]
    fn chi_square_pvalue_reference() {
        // P(chi2_1 >= 3.841...) = 0.05
        assert_relative_eq!(
            chi_square_pvalue(3.841458820694124, 1),
            0.05,
            max_relative = 1e-10
        );
        // df=15 critical used by the sector test
        let p = chi_square_pvalue(37.69729821835383, 15);
        assert_relative_eq!(p, 1e-3, max_relative = 1e-8);
    }

    #[test]
    fn chi_square_stat_perfect_fit_is_zero() {
        let obs = [10u64, 20, 30];
        let exp = [10.0, 20.0, 30.0];
        assert_eq!(chi_square_stat(&obs, &exp), 0.0);
    }
}

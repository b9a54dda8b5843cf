//! Small statistical helpers with fixed summation order.

use serde::{Deserialize, Serialize};

/// Neumaier compensated sum, in slice order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in values {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(n)`; zero when n < 2.
    pub std_error: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Estimate {
        let n = xs.len();
        if n == 0 {
            return Estimate {
                mean: f64::NAN,
                std_error: f64::NAN,
                n,
            };
        }
        let mean = compensated_sum(xs.iter().copied()) / n as f64;
        let std_error = if n < 2 {
            0.0
        } else {
            let ss = compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean)));
            (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        };
        Estimate { mean, std_error, n }
    }

    /// |mean - target| within `k` standard errors. `floor` guards the case
    /// of a degenerate sample whose standard error is exactly zero.
    pub fn within(&self, target: f64, k: f64, floor: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error + floor
    }
}

/// Least-squares slope of log(y) against log(x).
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Limiting Kolmogorov distribution function.
pub fn kolmogorov_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let mut s = 0.0;
    for k in 1..200 {
        let k = k as f64;
        let term = (-2.0 * k * k * x * x).exp();
        s += if (k as i64) % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (1.0 - 2.0 * s).clamp(0.0, 1.0)
}

/// Asymptotic critical value of the one-sample KS statistic at level `alpha`.
pub fn ks_critical(alpha: f64, n: usize) -> f64 {
    let (mut lo, mut hi) = (0.1f64, 5.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_cdf(mid) < 1.0 - alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi) / (n as f64).sqrt()
}

/// KS distance between the empirical law of `samples` and `cdf`, evaluated only
/// at the points of `grid` (ascending). For lattice-valued data the grid is the
/// lattice itself.
pub fn ks_on_grid(samples: &[f64], grid: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut idx = 0usize;
    let mut d = 0.0f64;
    for &g in grid {
        while idx < sorted.len() && sorted[idx] <= g {
            idx += 1;
        }
        d = d.max((idx as f64 / n - cdf(g)).abs());
    }
    d
}

/// Classical KS statistic against a continuous `cdf`.
pub fn ks_continuous(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d
            .max((f - i as f64 / n).abs())
            .max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Pearson chi-square of observed counts against expected probabilities
/// (renormalised). Bins with expected count below `min_expected` are pooled
/// into one. Returns (statistic, degrees of freedom, p-value).
pub fn chi_square(observed: &[u64], probs: &[f64], min_expected: f64) -> (f64, usize, f64) {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let total: u64 = observed.iter().sum();
    let psum: f64 = probs.iter().sum();
    let n = total as f64;
    let mut stat = 0.0;
    let mut bins = 0usize;
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(probs) {
        let e = n * p / psum;
        if e < min_expected {
            pool_o += o as f64;
            pool_e += e;
            continue;
        }
        stat += (o as f64 - e).powi(2) / e;
        bins += 1;
    }
    if pool_e >= min_expected {
        stat += (pool_o - pool_e).powi(2) / pool_e;
        bins += 1;
    }
    let df = bins.saturating_sub(1).max(1);
    let p = 1.0 - ChiSquared::new(df as f64).unwrap().cdf(stat);
    (stat, df, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(xs), 2.0);
    }

    #[test]
    fn estimate_of_constant_has_zero_error() {
        let e = Estimate::from_samples(&[0.25; 10]);
        assert_eq!(e.mean, 0.25);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn ks_critical_matches_table() {
        // 0.1% two-sided point of the Kolmogorov distribution is 1.9495
        assert!((ks_critical(0.001, 1) - 1.9495).abs() < 1e-3);
        assert!((ks_critical(0.05, 1) - 1.3581).abs() < 1e-3);
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [8.0, 16.0, 32.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 / x).collect();
        assert!((log_log_slope(&xs, &ys) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_square_perfect_fit() {
        let (s, df, p) = chi_square(&[100, 100, 100], &[1.0, 1.0, 1.0], 5.0);
        assert_eq!(s, 0.0);
        assert_eq!(df, 2);
        assert!(p > 0.99);
    }
}

//! Small statistics helpers for energy-trace diagnostics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Least-squares slope of `y` against `t`.
pub fn linear_slope(t: &[f64], y: &[f64]) -> f64 {
    assert_eq!(t.len(), y.len());
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (ti, yi) in t.iter().zip(y) {
        sxy += (ti - tm) * (yi - ym);
        sxx += (ti - tm) * (ti - tm);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Largest `|y_k - y_0| / |y_0|`.
pub fn max_relative_excursion(y: &[f64]) -> f64 {
    let y0 = y.first().copied().unwrap_or(0.0);
    if y0 == 0.0 {
        return 0.0;
    }
    y.iter().map(|v| (v - y0).abs()).fold(0.0, f64::max) / y0.abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeInterval {
    pub slope: f64,
    pub lower: f64,
    pub upper: f64,
}

impl SlopeInterval {
    pub fn contains_zero(&self) -> bool {
        self.lower <= 0.0 && 0.0 <= self.upper
    }
}

/// Percentile confidence interval for the trend slope from a moving-block
/// residual bootstrap.
///
/// Residuals of the linear fit are resampled in contiguous blocks so that
/// serial correlation (an oscillating trace) is kept, added back to the
/// fitted line, and refit.
pub fn bootstrap_slope(t: &[f64], y: &[f64], block: usize, resamples: usize, level: f64, seed: u64) -> SlopeInterval {
    let n = t.len();
    assert!(n >= 2 && block >= 1 && resamples >= 1);
    let slope = linear_slope(t, y);
    let tm = t.iter().sum::<f64>() / n as f64;
    let ym = y.iter().sum::<f64>() / n as f64;
    let fit: Vec<f64> = t.iter().map(|ti| ym + slope * (ti - tm)).collect();
    let resid: Vec<f64> = y.iter().zip(&fit).map(|(a, b)| a - b).collect();
    let block = block.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut slopes = Vec::with_capacity(resamples);
    let mut sample = vec![0.0; n];
    for _ in 0..resamples {
        let mut filled = 0;
        while filled < n {
            let start = rng.gen_range(0..=n - block);
            for k in 0..block.min(n - filled) {
                sample[filled + k] = fit[filled + k] + resid[start + k];
            }
            filled += block;
        }
        slopes.push(linear_slope(t, &sample));
    }
    slopes.sort_by(f64::total_cmp);
    let q = |p: f64| slopes[((p * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    let tail = 0.5 * (1.0 - level);
    SlopeInterval { slope, lower: q(tail), upper: q(1.0 - tail) }
}

/// `log2(e(dt) / e(dt/2))` for consecutive entries of errors measured at halving steps.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

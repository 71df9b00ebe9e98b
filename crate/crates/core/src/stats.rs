//! Small statistics helpers shared by the scan and coupling layers.

use alloc::vec::Vec;
use num_traits::Float;

/// Two-pass mean and (population) variance.
pub fn mean_variance(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Median by copy-and-sort; NaN inputs sort last and are never selected
/// unless everything is NaN.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v: Vec<f64> = values.to_vec();
    v.sort_unstable_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median absolute deviation scaled to estimate a Gaussian sigma.
pub fn robust_sigma(values: &[f64]) -> f64 {
    let m = median(values);
    let dev: Vec<f64> = values.iter().map(|v| (v - m).abs()).collect();
    1.4826 * median(&dev)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_variance_two_pass() {
        let v = [1.0, 2.0, 3.0, 4.0];
        let (m, var) = mean_variance(&v);
        assert_eq!(m, 2.5);
        assert_eq!(var, 1.25);
    }

    #[test]
    fn median_odd_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn robust_sigma_of_gaussianish() {
        let v = [-1.0, -0.5, 0.0, 0.5, 1.0];
        assert!((robust_sigma(&v) - 0.7413).abs() < 1e-4);
    }
}

//! Frequency-axis containers shared by the scattering and fitting layers.

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::error::{Error, Result};

fn check_axis(axis: &[f64], n_values: usize) -> Result<()> {
    if axis.len() != n_values {
        return Err(Error::Axis("axis and values have different lengths"));
    }
    if axis.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Axis("axis must be strictly ascending"));
    }
    if axis.iter().any(|x| !x.is_finite()) {
        return Err(Error::Axis("axis contains non-finite samples"));
    }
    Ok(())
}

/// Real-valued intensity samples over a strictly ascending frequency axis (GHz).
#[derive(Debug, Clone, PartialEq)]
pub struct RealSpectrum {
    axis: Vec<f64>,
    values: Vec<f64>,
}

impl RealSpectrum {
    pub fn new(axis: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_axis(&axis, values.len())?;
        Ok(RealSpectrum { axis, values })
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }

    /// Grid spacing if the axis is uniform to 1 part in 10⁶, else None.
    pub fn uniform_spacing(&self) -> Option<f64> {
        uniform_spacing(&self.axis)
    }

    /// Sample index and value of the minimum.
    pub fn argmin(&self) -> Option<(usize, f64)> {
        self.values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, v)| (i, *v))
    }

    /// Sample index and value of the maximum.
    pub fn argmax(&self) -> Option<(usize, f64)> {
        self.values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, v)| (i, *v))
    }

    /// Linear interpolation onto a uniform axis with the same span and
    /// `n` samples.
    pub fn resample_uniform(&self, n: usize) -> Result<RealSpectrum> {
        if self.len() < 2 || n < 2 {
            return Err(Error::Axis("resampling needs at least two samples"));
        }
        let lo = self.axis[0];
        let hi = self.axis[self.len() - 1];
        let step = (hi - lo) / (n - 1) as f64;
        let axis: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
        let values = axis.iter().map(|&x| self.interp(x)).collect();
        RealSpectrum::new(axis, values)
    }

    /// Piecewise-linear interpolation; clamps outside the axis span.
    pub fn interp(&self, x: f64) -> f64 {
        let a = &self.axis;
        if x <= a[0] {
            return self.values[0];
        }
        if x >= a[a.len() - 1] {
            return self.values[a.len() - 1];
        }
        let j = a.partition_point(|&t| t <= x);
        let (x0, x1) = (a[j - 1], a[j]);
        let (y0, y1) = (self.values[j - 1], self.values[j]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

/// Complex amplitude samples over a strictly ascending frequency axis (GHz).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum {
    axis: Vec<f64>,
    values: Vec<Complex64>,
}

impl ComplexSpectrum {
    pub fn new(axis: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        check_axis(&axis, values.len())?;
        Ok(ComplexSpectrum { axis, values })
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Pointwise |amplitude|², optionally scaled.
    pub fn intensity(&self, scale: f64) -> RealSpectrum {
        RealSpectrum {
            axis: self.axis.clone(),
            values: self.values.iter().map(|v| scale * v.norm_sqr()).collect(),
        }
    }
}

pub(crate) fn uniform_spacing(axis: &[f64]) -> Option<f64> {
    if axis.len() < 2 {
        return None;
    }
    let h = (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64;
    if h <= 0.0 {
        return None;
    }
    let ok = axis
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-6 * h);
    ok.then_some(h)
}

/// Evenly spaced axis from `lo` to `hi` inclusive with `n` samples.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return alloc::vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + step * i as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_bad_axes() {
        assert!(RealSpectrum::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(RealSpectrum::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(RealSpectrum::new(vec![1.0, 0.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn uniform_spacing_detection() {
        let s = RealSpectrum::new(linspace(-1.0, 1.0, 21), vec![0.0; 21]).unwrap();
        let h = s.uniform_spacing().unwrap();
        assert!((h - 0.1).abs() < 1e-12);

        let s = RealSpectrum::new(vec![0.0, 0.1, 0.3], vec![0.0; 3]).unwrap();
        assert!(s.uniform_spacing().is_none());
    }

    #[test]
    fn interp_is_exact_on_nodes_and_linear_between() {
        let s = RealSpectrum::new(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 0.0]).unwrap();
        assert_eq!(s.interp(1.0), 2.0);
        assert!((s.interp(0.5) - 1.0).abs() < 1e-15);
        assert_eq!(s.interp(-5.0), 0.0);
        assert_eq!(s.interp(5.0), 0.0);
    }
}

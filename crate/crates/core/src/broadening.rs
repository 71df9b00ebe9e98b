//! Spectral-diffusion broadening.
//!
//! Two models of the slow Gaussian wandering of the emitter frequency:
//!
//! * [`broadened_spectrum`] — discrete convolution of the intensity
//!   spectrum with a unit-mass Gaussian along the detuning axis, the
//!   emitter drive held fixed. This is the form used when fitting
//!   measured spectra.
//! * [`ensemble_spectrum`] — an explicit average over emitter-frequency
//!   realizations. The cavity stays put while the emitter detuning
//!   shifts, and with a [`Drive::PhotonFlux`] drive each realization
//!   saturates according to its own instantaneous critical power. The
//!   power-dependent observables (saturation curves, the effective
//!   critical photon number) come from this model.
//!
//! The two agree at zero drive up to the frozen-cavity approximation and
//! diverge with increasing power; `routerkit spectrum --ensemble-sd`
//! exposes the difference.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::params::{linewidth_from_rate, Drive, SystemParams, TWO_PI};
use crate::scattering::{
    bare_spectrum, critical_photon_number, drop_coefficient_split, saturation_split, spectrum,
};
use crate::spectrum::{linspace, RealSpectrum};

/// Discretized unit-mass Gaussian kernel.
#[derive(Debug, Clone)]
pub struct GaussianKernel {
    pub sigma: f64,
    pub center: f64,
    /// Sample offsets, k·spacing for k in [k_lo, k_hi].
    offsets: Vec<f64>,
    /// Trapezoid weights, renormalized to sum to one.
    weights: Vec<f64>,
    k_lo: i64,
}

impl GaussianKernel {
    /// Build the kernel on a grid of the given spacing, truncated at
    /// center ± 5σ. Errors when the grid undersamples the Gaussian
    /// (spacing > σ/4).
    pub fn build(sigma: f64, center: f64, spacing: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::Domain("kernel sigma must be > 0"));
        }
        if !(spacing > 0.0) {
            return Err(Error::Axis("kernel spacing must be > 0"));
        }
        if spacing > sigma / 4.0 {
            return Err(Error::Axis("axis too coarse: grid spacing > sigma/4"));
        }
        let k_lo = ((center - 5.0 * sigma) / spacing).floor() as i64;
        let k_hi = ((center + 5.0 * sigma) / spacing).ceil() as i64;
        let n = (k_hi - k_lo + 1) as usize;
        let mut offsets = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for k in k_lo..=k_hi {
            let x = k as f64 * spacing;
            offsets.push(x);
            let u = (x - center) / sigma;
            weights.push((-0.5 * u * u).exp());
        }
        weights[0] *= 0.5;
        weights[n - 1] *= 0.5;
        let mass: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= mass;
        }
        Ok(GaussianKernel { sigma, center, offsets, weights, k_lo })
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Apply to uniformly sampled values, clamping at the edges.
    fn apply(&self, values: &[f64]) -> Vec<f64> {
        let n = values.len() as i64;
        let mut out = Vec::with_capacity(values.len());
        for i in 0..n {
            let mut acc = 0.0;
            for (j, w) in self.weights.iter().enumerate() {
                let k = self.k_lo + j as i64;
                let idx = (i - k).clamp(0, n - 1) as usize;
                acc += w * values[idx];
            }
            out.push(acc);
        }
        out
    }
}

/// Convolve an intensity spectrum with a unit-mass Gaussian of width
/// `sigma_ghz` centered at `center_ghz` (0 for pure symmetric broadening).
///
/// The axis must be uniform. A sigma below a quarter of the grid spacing
/// is treated as a delta kernel: the input is returned unchanged with a
/// warning, so fits may wander through tiny widths without erroring.
pub fn convolve_spectrum(
    raw: &RealSpectrum,
    sigma_ghz: f64,
    center_ghz: f64,
) -> Result<RealSpectrum> {
    if !(sigma_ghz >= 0.0) {
        return Err(Error::Domain("sigma must be >= 0"));
    }
    let h = raw
        .uniform_spacing()
        .ok_or(Error::Axis("convolution requires a uniform axis; resample first"))?;
    if sigma_ghz < h / 4.0 {
        if sigma_ghz > 0.0 {
            log::warn!(
                "sigma {sigma_ghz} GHz below grid spacing/4 ({h}/4); returning input unchanged"
            );
        }
        return Ok(raw.clone());
    }
    let kernel = GaussianKernel::build(sigma_ghz, center_ghz, h)?;
    RealSpectrum::new(raw.axis().to_vec(), kernel.apply(raw.values()))
}

/// Convolution that refines the grid internally instead of erroring when
/// the axis is coarser than σ/4. Used by fit models, whose optimizer may
/// visit any sigma.
pub(crate) fn convolve_auto(raw: &RealSpectrum, sigma_ghz: f64) -> Result<RealSpectrum> {
    let h = raw
        .uniform_spacing()
        .ok_or(Error::Axis("convolution requires a uniform axis; resample first"))?;
    if sigma_ghz < h / 4.0 {
        return Ok(raw.clone());
    }
    if h <= sigma_ghz / 4.0 {
        return convolve_spectrum(raw, sigma_ghz, 0.0);
    }
    let refine = (4.0 * h / sigma_ghz).ceil() as usize;
    let n = (raw.len() - 1) * refine + 1;
    let fine = raw.resample_uniform(n)?;
    let conv = convolve_spectrum(&fine, sigma_ghz, 0.0)?;
    let values = raw.axis().iter().map(|&x| conv.interp(x)).collect();
    RealSpectrum::new(raw.axis().to_vec(), values)
}

/// Empirical linear model of the spectral-diffusion width versus
/// emitter–cavity detuning, clamped at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdModel {
    /// GHz of sigma per GHz of detuning.
    pub slope: f64,
    /// GHz.
    pub intercept: f64,
}

impl SdModel {
    pub fn sd_at_detuning(&self, delta_ghz: f64) -> f64 {
        (self.slope * delta_ghz + self.intercept).max(0.0)
    }
}

/// Drop- and bus-port spectra broadened by convolution with the system's
/// σ_sd. Reduces exactly to [`spectrum`] when σ_sd = 0.
pub fn broadened_spectrum(
    axis_ghz: &[f64],
    s: f64,
    p: &SystemParams,
) -> Result<(RealSpectrum, RealSpectrum)> {
    let (drop, bus) = spectrum(axis_ghz, s, p)?;
    if p.sigma_sd == 0.0 {
        return Ok((drop, bus));
    }
    Ok((
        convolve_spectrum(&drop, p.sigma_sd, 0.0)?,
        convolve_spectrum(&bus, p.sigma_sd, 0.0)?,
    ))
}

/// Quadrature grid over emitter-frequency offsets for the ensemble average.
fn wander_grid(sigma: f64) -> (Vec<f64>, Vec<f64>) {
    let h = sigma / 10.0;
    let k = (5.0 * sigma / h).ceil() as i64;
    let mut offsets = Vec::with_capacity((2 * k + 1) as usize);
    let mut weights = Vec::with_capacity((2 * k + 1) as usize);
    for j in -k..=k {
        let x = j as f64 * h;
        offsets.push(x);
        let u = x / sigma;
        weights.push((-0.5 * u * u).exp());
    }
    let n = weights.len();
    weights[0] *= 0.5;
    weights[n - 1] *= 0.5;
    let mass: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= mass;
    }
    (offsets, weights)
}

/// Wandering-emitter ensemble average of the drop and bus intensities.
///
/// Each realization shifts the emitter by ε while the laser–cavity
/// detuning stays fixed; with a flux drive the local saturation is
/// S(ε) = α n_in / n_c evaluated at the realization's own detunings.
pub fn ensemble_spectrum(
    axis_ghz: &[f64],
    drive: Drive,
    p: &SystemParams,
) -> Result<(RealSpectrum, RealSpectrum)> {
    let delta = TWO_PI * p.delta_ghz();
    if p.sigma_sd == 0.0 {
        // the flux branch still needs the pointwise drive conversion below
        if let Drive::Saturation(s) = drive {
            return spectrum(axis_ghz, s, p);
        }
    }
    let (offsets, weights) = if p.sigma_sd > 0.0 {
        wander_grid(p.sigma_sd)
    } else {
        (vec![0.0], vec![1.0])
    };
    let mut drop = Vec::with_capacity(axis_ghz.len());
    let mut bus = Vec::with_capacity(axis_ghz.len());
    for &x in axis_ghz {
        let dw = TWO_PI * x;
        let cav = dw + delta;
        let mut acc_d = 0.0;
        let mut acc_b = 0.0;
        for (o, w) in offsets.iter().zip(&weights) {
            let qd = dw - TWO_PI * o;
            let s = saturation_split(qd, cav, drive, p);
            let t = drop_coefficient_split(qd, cav, s, p);
            acc_d += w * t.norm_sqr();
            acc_b += w * (1.0 + t).norm_sqr();
        }
        drop.push(p.cavity.eta * acc_d);
        bus.push(acc_b);
    }
    Ok((
        RealSpectrum::new(axis_ghz.to_vec(), drop)?,
        RealSpectrum::new(axis_ghz.to_vec(), bus)?,
    ))
}

/// Which spectral-diffusion model to apply to a forward calculation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdMode {
    /// No broadening (σ_sd treated as zero).
    None,
    /// Gaussian convolution of the intensity spectrum.
    Convolved,
    /// Wandering-emitter ensemble average.
    Ensemble,
}

/// Forward-modelled port response together with its emitter-free reference.
#[derive(Debug, Clone)]
pub struct PortResponse {
    pub drop: RealSpectrum,
    pub bus: RealSpectrum,
    pub bare_drop: RealSpectrum,
    pub bare_bus: RealSpectrum,
}

impl PortResponse {
    /// Relative drop-port change (T_drop − T_bare)/T_bare per sample.
    pub fn drop_extinction_curve(&self) -> RealSpectrum {
        let values = self
            .drop
            .values()
            .iter()
            .zip(self.bare_drop.values())
            .map(|(t, b)| (t - b) / b)
            .collect();
        RealSpectrum::new(self.drop.axis().to_vec(), values).expect("axis already validated")
    }

    /// Deepest relative drop-port extinction and its detuning (GHz).
    pub fn max_drop_extinction(&self) -> (f64, f64) {
        let curve = self.drop_extinction_curve();
        let (i, v) = curve.argmin().expect("non-empty spectrum");
        (curve.axis()[i], v)
    }

    /// Relative bus-port change per sample. Diverges where the bare bus
    /// transmission vanishes (near critical coupling on resonance);
    /// prefer [`PortResponse::bus_gain_curve`] there.
    pub fn bus_extinction_curve(&self) -> RealSpectrum {
        let values = self
            .bus
            .values()
            .iter()
            .zip(self.bare_bus.values())
            .map(|(t, b)| (t - b) / b)
            .collect();
        RealSpectrum::new(self.bus.axis().to_vec(), values).expect("axis already validated")
    }

    /// Absolute bus-port gain T_bus − T_bus,bare per sample, the fraction
    /// of the unit input rerouted into the bus port by the emitter.
    pub fn bus_gain_curve(&self) -> RealSpectrum {
        let values = self
            .bus
            .values()
            .iter()
            .zip(self.bare_bus.values())
            .map(|(t, b)| t - b)
            .collect();
        RealSpectrum::new(self.bus.axis().to_vec(), values).expect("axis already validated")
    }

    /// Largest absolute bus gain and its detuning (GHz).
    pub fn max_bus_gain(&self) -> (f64, f64) {
        let curve = self.bus_gain_curve();
        let (i, v) = curve.argmax().expect("non-empty spectrum");
        (curve.axis()[i], v)
    }
}

/// Evaluate the broadened ports plus bare references on an axis.
pub fn port_response(
    axis_ghz: &[f64],
    drive: Drive,
    p: &SystemParams,
    mode: SdMode,
) -> Result<PortResponse> {
    let (bare_drop, bare_bus) = bare_spectrum(axis_ghz, p)?;
    let (drop, bus) = match mode {
        SdMode::None => {
            let mut q = *p;
            q.sigma_sd = 0.0;
            match drive {
                Drive::Saturation(s) => spectrum(axis_ghz, s, &q)?,
                Drive::PhotonFlux(_) => ensemble_spectrum(axis_ghz, drive, &q)?,
            }
        }
        SdMode::Convolved => match drive {
            Drive::Saturation(s) => broadened_spectrum(axis_ghz, s, p)?,
            Drive::PhotonFlux(n_in) => {
                // constant S taken at the emitter resonance
                let s = crate::scattering::saturation_from_flux(n_in, 0.0, p)?;
                broadened_spectrum(axis_ghz, s, p)?
            }
        },
        SdMode::Ensemble => ensemble_spectrum(axis_ghz, drive, p)?,
    };
    Ok(PortResponse { drop, bus, bare_drop, bare_bus })
}

/// Detuning axis that comfortably contains the emitter dip and the
/// broadening kernel for the given system.
pub fn default_axis(p: &SystemParams) -> Vec<f64> {
    let dip_fwhm =
        linewidth_from_rate(p.gamma_total() + 2.0 * p.emitter.gamma_dp).max(1e-3);
    let span = (10.0 * (dip_fwhm + p.sigma_sd)).clamp(6.0, 120.0);
    let scale = if p.sigma_sd > 0.0 { dip_fwhm.min(p.sigma_sd) } else { dip_fwhm };
    let step = (scale / 20.0).clamp(1e-4, 0.05);
    let n = (2.0 * span / step).ceil() as usize + 1;
    linspace(-span, span, n)
}

/// One sample of a power-dependence sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationPoint {
    /// Incident photons per lifetime.
    pub n_in: f64,
    /// Deepest relative drop-port extinction.
    pub drop_extinction: f64,
    /// Largest absolute bus-port gain.
    pub bus_gain: f64,
}

/// Drop-port extinction and bus-port gain versus incident photon flux,
/// using the flux-driven ensemble model.
pub fn saturation_curve(
    n_in: &[f64],
    p: &SystemParams,
    axis_ghz: &[f64],
) -> Result<Vec<SaturationPoint>> {
    n_in
        .iter()
        .map(|&n| {
            let resp = port_response(axis_ghz, Drive::photon_flux(n)?, p, SdMode::Ensemble)?;
            Ok(SaturationPoint {
                n_in: n,
                drop_extinction: resp.max_drop_extinction().1,
                bus_gain: resp.max_bus_gain().1,
            })
        })
        .collect()
}

/// Effective critical photon number: the incident flux at which the
/// broadened drop-port dip is eroded to half its zero-drive depth.
///
/// With σ_sd = 0 this lands on n_c = P_c/γ_tot at the dip; with
/// spectral diffusion it is the number the saturation measurement
/// actually reports.
pub fn effective_critical_flux(p: &SystemParams, axis_ghz: &[f64]) -> Result<f64> {
    let depth_at = |n: f64| -> Result<f64> {
        let resp = port_response(axis_ghz, Drive::PhotonFlux(n), p, SdMode::Ensemble)?;
        Ok(resp.max_drop_extinction().1)
    };
    let zero = port_response(axis_ghz, Drive::Saturation(0.0), p, SdMode::Ensemble)?
        .max_drop_extinction()
        .1;
    if zero >= -1e-12 {
        return Err(Error::Singular("no dip at zero drive"));
    }
    let target = zero / 2.0;

    let mut lo = 1e-4;
    let mut hi = critical_photon_number(0.0, p)?.max(1e-3);
    // expand until the dip is shallower than half depth
    let mut guard = 0;
    while depth_at(hi)? < target {
        hi *= 2.0;
        guard += 1;
        if guard > 60 {
            return Err(Error::Singular("saturation root-find failed to bracket"));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if depth_at(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

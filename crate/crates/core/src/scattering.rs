//! Steady-state scattering of a coherently driven two-level emitter in a
//! waveguide-coupled microdisk: bare-cavity response, drop/bus transmission
//! coefficients, critical power, saturation bookkeeping, and unbroadened
//! spectra.
//!
//! Laser detuning Δω = ω_laser − ω_QD and the emitter–cavity detuning
//! δ = ω_QD − ω_cav combine to the laser–cavity detuning Δω + δ. The
//! emitter-related and cavity-related detunings are kept as separate
//! arguments internally so the spectral-diffusion layer can shift the
//! emitter without moving the cavity.

use alloc::vec::Vec;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{Drive, SystemParams, TWO_PI};
use crate::spectrum::RealSpectrum;

/// Expectation values of the driven two-level system in steady state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochState {
    /// Coherence ⟨S₋⟩.
    pub s: Complex64,
    /// Inversion ⟨S_z⟩ ∈ [−1/2, 0].
    pub s_z: f64,
}

#[inline]
fn ang(ghz: f64) -> f64 {
    TWO_PI * ghz
}

/// t₀ for a laser–cavity detuning given in angular units.
#[inline]
fn t0_angular(cav_det: f64, p: &SystemParams) -> Complex64 {
    let q = p.cavity.q_ratio;
    1.0 / Complex64::new(1.0, q * cav_det / (p.cavity.kappa / 2.0))
}

/// Bare-cavity transmission t₀ = 1 / (1 + i (Q/Q₀)(Δω+δ)/(κ/2)).
pub fn bare_cavity(delta_omega_ghz: f64, p: &SystemParams) -> Complex64 {
    t0_angular(ang(delta_omega_ghz + p.delta_ghz()), p)
}

/// Emitter bracket of the drop coefficient with independent emitter and
/// cavity detunings (angular units).
///
/// Written in a form that stays exact in the ideal-emitter limit
/// γ_leak = γ_dp = 0: dividing the f-form through by f turns
/// f / (f + (1 + 2iΔω/(qΓ₂))(1 + iq(Δω+δ)/(κ/2))) into
/// 1 / (1 + ((Γ₂ + 2iΔω/q)/γ_cav)(1 + iq(Δω+δ)/(κ/2))), which needs no
/// division by Γ₂ at all.
fn qd_bracket(qd_det: f64, cav_det: f64, s: f64, p: &SystemParams) -> Complex64 {
    if p.gamma_cav == 0.0 {
        // no emitter–cavity coupling: bare routing
        return Complex64::new(-1.0, 0.0);
    }
    let q = p.cavity.q_ratio;
    let lorentz = Complex64::new(1.0, q * cav_det / (p.cavity.kappa / 2.0));
    let emitter = Complex64::new(p.gamma_two(), 2.0 * qd_det / q) / p.gamma_cav;
    -1.0 + 1.0 / ((1.0 + s) * (1.0 + emitter * lorentz))
}

pub(crate) fn drop_coefficient_split(
    qd_det: f64,
    cav_det: f64,
    s: f64,
    p: &SystemParams,
) -> Complex64 {
    p.cavity.q_ratio * t0_angular(cav_det, p) * qd_bracket(qd_det, cav_det, s, p)
}

/// Drop-port transmission coefficient t_drop(Δω) at saturation S.
pub fn drop_coefficient(delta_omega_ghz: f64, s: f64, p: &SystemParams) -> Result<Complex64> {
    if !(s >= 0.0) {
        return Err(Error::Domain("saturation parameter must be >= 0"));
    }
    let dw = ang(delta_omega_ghz);
    Ok(drop_coefficient_split(dw, dw + ang(p.delta_ghz()), s, p))
}

/// Bus-port transmission coefficient t_bus = 1 + t_drop.
pub fn bus_coefficient(delta_omega_ghz: f64, s: f64, p: &SystemParams) -> Result<Complex64> {
    Ok(1.0 + drop_coefficient(delta_omega_ghz, s, p)?)
}

/// Critical power P_c (photons/ns) with independent emitter and cavity
/// detunings (angular units).
///
/// Five-term closed form; the 1/f terms drop out analytically in the
/// ideal-emitter limit.
pub(crate) fn critical_power_split(qd_det: f64, cav_det: f64, p: &SystemParams) -> f64 {
    let gc = p.gamma_cav;
    if gc == 0.0 {
        return 0.0;
    }
    let q = p.cavity.q_ratio;
    let kh = p.cavity.kappa / 2.0;
    let cavity_slope = cav_det / kh;
    let cross = -(4.0 * qd_det / gc) * cavity_slope;
    let quad = (2.0 * qd_det / (q * gc)) * (2.0 * qd_det / (q * gc));
    let quad_cav = (2.0 * qd_det / gc) * cavity_slope;
    let base = if p.is_ideal_emitter() {
        1.0
    } else {
        let f = gc / p.gamma_two();
        let one_over = 1.0 + 1.0 / f;
        let t2 = q * cav_det / (f * kh);
        one_over * one_over + t2 * t2
    };
    gc / 4.0 * (base + cross + quad + quad_cav * quad_cav)
}

/// Critical power P_c(Δω) (photons/ns): the drive at which the inversion
/// reaches s_z = −1/4.
pub fn critical_power(delta_omega_ghz: f64, p: &SystemParams) -> f64 {
    let dw = ang(delta_omega_ghz);
    critical_power_split(dw, dw + ang(p.delta_ghz()), p)
}

/// Critical photon number per lifetime, n_c = P_c / γ_tot.
pub fn critical_photon_number(delta_omega_ghz: f64, p: &SystemParams) -> Result<f64> {
    let gt = p.gamma_total();
    if gt <= 0.0 {
        return Err(Error::Singular("gamma_tot must be > 0"));
    }
    Ok(critical_power(delta_omega_ghz, p) / gt)
}

pub(crate) fn critical_photon_number_split(qd_det: f64, cav_det: f64, p: &SystemParams) -> f64 {
    critical_power_split(qd_det, cav_det, p) / p.gamma_total()
}

/// S = α n_in / n_c(Δω).
pub fn saturation_from_flux(n_in: f64, delta_omega_ghz: f64, p: &SystemParams) -> Result<f64> {
    if !(n_in >= 0.0) {
        return Err(Error::Domain("photon flux must be >= 0"));
    }
    let n_c = critical_photon_number(delta_omega_ghz, p)?;
    if n_c <= 0.0 {
        return Err(Error::Singular("critical photon number is zero"));
    }
    Ok(p.cavity.alpha * n_in / n_c)
}

pub(crate) fn saturation_split(qd_det: f64, cav_det: f64, drive: Drive, p: &SystemParams) -> f64 {
    match drive {
        Drive::Saturation(s) => s,
        Drive::PhotonFlux(n_in) => {
            p.cavity.alpha * n_in / critical_photon_number_split(qd_det, cav_det, p)
        }
    }
}

/// Steady-state Bloch vector for an input amplitude b_in with
/// |b_in|² in photons/ns.
pub fn bloch_steady_state(
    delta_omega_ghz: f64,
    b_in: Complex64,
    p: &SystemParams,
) -> Result<BlochState> {
    if !b_in.is_finite() {
        return Err(Error::Domain("b_in must be finite"));
    }
    if p.gamma_cav <= 0.0 {
        return Err(Error::Singular("bloch steady state needs gamma_cav > 0"));
    }
    let dw = ang(delta_omega_ghz);
    let cav = dw + ang(p.delta_ghz());
    let p_c = critical_power_split(dw, cav, p);
    let s_z = -0.5 / (1.0 + b_in.norm_sqr() / p_c);

    // s = -2i sqrt(2/γ_cav) s_z b_in t₀ / (t₀ + 1/f + (2iΔω/γ_cav)(Q₀/Q)),
    // with 1/f written as Γ₂/γ_cav so the ideal limit needs no branch.
    let q = p.cavity.q_ratio;
    let t0 = t0_angular(cav, p);
    let denom = t0 + p.gamma_two() / p.gamma_cav + Complex64::new(0.0, 2.0 * dw / (p.gamma_cav * q));
    let pref = Complex64::new(0.0, -2.0) * num_traits::Float::sqrt(2.0 / p.gamma_cav);
    let s = pref * s_z * b_in * t0 / denom;
    Ok(BlochState { s, s_z })
}

/// Unbroadened drop- and bus-port intensity spectra over a detuning axis
/// (GHz relative to the emitter): T_drop = η|t_drop|², T_bus = |t_bus|².
pub fn spectrum(
    axis_ghz: &[f64],
    s: f64,
    p: &SystemParams,
) -> Result<(RealSpectrum, RealSpectrum)> {
    if !(s >= 0.0) {
        return Err(Error::Domain("saturation parameter must be >= 0"));
    }
    let delta = ang(p.delta_ghz());
    let mut drop = Vec::with_capacity(axis_ghz.len());
    let mut bus = Vec::with_capacity(axis_ghz.len());
    for &x in axis_ghz {
        let dw = ang(x);
        let t = drop_coefficient_split(dw, dw + delta, s, p);
        drop.push(p.cavity.eta * t.norm_sqr());
        bus.push((1.0 + t).norm_sqr());
    }
    Ok((
        RealSpectrum::new(axis_ghz.to_vec(), drop)?,
        RealSpectrum::new(axis_ghz.to_vec(), bus)?,
    ))
}

/// Emitter-free reference spectra: T_drop = η|q t₀|², T_bus = |1 − q t₀|².
pub fn bare_spectrum(axis_ghz: &[f64], p: &SystemParams) -> Result<(RealSpectrum, RealSpectrum)> {
    let delta = ang(p.delta_ghz());
    let q = p.cavity.q_ratio;
    let mut drop = Vec::with_capacity(axis_ghz.len());
    let mut bus = Vec::with_capacity(axis_ghz.len());
    for &x in axis_ghz {
        let t0 = q * t0_angular(ang(x) + delta, p);
        drop.push(p.cavity.eta * t0.norm_sqr());
        bus.push((1.0 - t0).norm_sqr());
    }
    Ok((
        RealSpectrum::new(axis_ghz.to_vec(), drop)?,
        RealSpectrum::new(axis_ghz.to_vec(), bus)?,
    ))
}

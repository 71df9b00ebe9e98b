//! Physical parameter records and unit conventions.
//!
//! Internal convention: decay and dephasing rates are angular (rad/ns,
//! equivalently ns⁻¹), while every public frequency-like quantity
//! (detunings, linewidths, resonance positions, spectral-diffusion width)
//! is an ordinary frequency in GHz. The two are related by a factor 2π:
//! a 1 GHz linewidth corresponds to an angular rate of 2π rad/ns.
//! Conversions happen once, at the API boundary, through
//! [`rate_from_linewidth`] / [`linewidth_from_rate`].

use crate::error::{Error, Result};

pub const TWO_PI: f64 = 2.0 * core::f64::consts::PI;

/// Ordinary-frequency linewidth (GHz) → angular rate (rad/ns).
pub fn rate_from_linewidth(linewidth_ghz: f64) -> Result<f64> {
    if !(linewidth_ghz >= 0.0) {
        return Err(Error::Domain("linewidth must be >= 0"));
    }
    Ok(TWO_PI * linewidth_ghz)
}

/// Angular rate (rad/ns) → ordinary-frequency linewidth (GHz).
pub fn linewidth_from_rate(rate_rad_ns: f64) -> f64 {
    rate_rad_ns / TWO_PI
}

/// Two-level emitter rates.
///
/// All rates are angular (rad/ns); `omega_qd` is the absolute resonance
/// position in ordinary GHz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmitterParams {
    /// Radiative decay rate in bulk (rad/ns).
    pub gamma_bulk: f64,
    /// Decay rate into non-cavity (leaky) modes (rad/ns).
    pub gamma_leak: f64,
    /// Pure-dephasing rate (rad/ns).
    pub gamma_dp: f64,
    /// Emitter resonance frequency (GHz, ordinary).
    pub omega_qd: f64,
}

/// Cavity and waveguide-coupling parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    /// Total loaded cavity linewidth (rad/ns, angular).
    pub kappa: f64,
    /// Cavity resonance frequency (GHz, ordinary).
    pub omega_cav: f64,
    /// Q/Q₀, loaded over waveguide-coupled quality factor, in (0, 1].
    pub q_ratio: f64,
    /// Drop-port intensity scale (dimensionless, >= 0).
    pub eta: f64,
    /// Input coupling efficiency in [0, 1].
    pub alpha: f64,
}

/// Full emitter–cavity–waveguide system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub emitter: EmitterParams,
    pub cavity: CavityParams,
    /// Emission rate into the cavity mode (rad/ns).
    pub gamma_cav: f64,
    /// Spectral-diffusion standard deviation (GHz, ordinary).
    pub sigma_sd: f64,
}

impl SystemParams {
    /// Validate every record invariant at construction time.
    pub fn new(
        emitter: EmitterParams,
        cavity: CavityParams,
        gamma_cav: f64,
        sigma_sd: f64,
    ) -> Result<Self> {
        let p = SystemParams { emitter, cavity, gamma_cav, sigma_sd };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.emitter;
        let c = &self.cavity;
        if !(e.gamma_bulk > 0.0) {
            return Err(Error::Domain("gamma_bulk must be > 0"));
        }
        if !(e.gamma_leak >= 0.0) || !(e.gamma_dp >= 0.0) {
            return Err(Error::Domain("emitter rates must be >= 0"));
        }
        if !(c.kappa > 0.0) {
            return Err(Error::Domain("kappa must be > 0"));
        }
        if !(c.q_ratio > 0.0 && c.q_ratio <= 1.0) {
            return Err(Error::Domain("q_ratio must be in (0, 1]"));
        }
        if !(c.eta >= 0.0) {
            return Err(Error::Domain("eta must be >= 0"));
        }
        if !(c.alpha >= 0.0 && c.alpha <= 1.0) {
            return Err(Error::Domain("alpha must be in [0, 1]"));
        }
        if !(self.gamma_cav >= 0.0) {
            return Err(Error::Domain("gamma_cav must be >= 0"));
        }
        if !(self.sigma_sd >= 0.0) {
            return Err(Error::Domain("sigma_sd must be >= 0"));
        }
        if !self.delta_ghz().is_finite() {
            return Err(Error::Domain("omega_qd - omega_cav must be finite"));
        }
        Ok(())
    }

    /// Emitter–cavity detuning δ = ω_QD − ω_cav (GHz, ordinary).
    ///
    /// Sign convention: Δω + δ = ω_laser − ω_cav for Δω = ω_laser − ω_QD,
    /// so the bare-cavity response peaks at the cavity frequency.
    pub fn delta_ghz(&self) -> f64 {
        self.emitter.omega_qd - self.cavity.omega_cav
    }

    /// f = γ_cav / (γ_leak + 2 γ_dp).
    ///
    /// Undefined when the emitter is ideal (zero leak and dephasing);
    /// callers must use the analytic f → ∞ limit in that regime.
    pub fn f_factor(&self) -> Result<f64> {
        let denom = self.emitter.gamma_leak + 2.0 * self.emitter.gamma_dp;
        if denom <= 0.0 {
            return Err(Error::Singular(
                "gamma_leak + 2*gamma_dp = 0; use the ideal-emitter limit",
            ));
        }
        Ok(self.gamma_cav / denom)
    }

    /// γ_tot = γ_cav + γ_leak (rad/ns), the cavity-enhanced decay rate.
    pub fn gamma_total(&self) -> f64 {
        self.gamma_cav + self.emitter.gamma_leak
    }

    /// γ_leak + 2 γ_dp (rad/ns), the non-cavity broadening sum.
    pub(crate) fn gamma_two(&self) -> f64 {
        self.emitter.gamma_leak + 2.0 * self.emitter.gamma_dp
    }

    /// True when γ_leak = γ_dp = 0, which sends f → ∞. The scattering
    /// formulas switch to the analytically reduced expressions there.
    pub fn is_ideal_emitter(&self) -> bool {
        self.gamma_two() == 0.0
    }
}

/// Drive strength, in whichever unit the caller has: the dimensionless
/// saturation parameter S, or the incident photon flux per emitter
/// lifetime n_in. The variant records which one is authoritative; the
/// conversion S = α n_in / n_c depends on detuning and is performed by
/// the scattering layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Drive {
    Saturation(f64),
    PhotonFlux(f64),
}

impl Drive {
    pub fn saturation(s: f64) -> Result<Self> {
        if !(s >= 0.0) {
            return Err(Error::Domain("saturation parameter must be >= 0"));
        }
        Ok(Drive::Saturation(s))
    }

    pub fn photon_flux(n_in: f64) -> Result<Self> {
        if !(n_in >= 0.0) {
            return Err(Error::Domain("photon flux must be >= 0"));
        }
        Ok(Drive::PhotonFlux(n_in))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::paper_params;

    #[test]
    fn rate_conversion_matches_paper_values() {
        // 0.1 GHz natural linewidth ↔ 0.63 ns⁻¹ bulk decay
        assert!((rate_from_linewidth(0.1).unwrap() - 0.6283).abs() < 5e-4);
        // κ/2π = 36.6 GHz ↔ 229.96 rad/ns
        assert!((rate_from_linewidth(36.6).unwrap() - 229.96).abs() < 5e-2);
        assert_eq!(rate_from_linewidth(0.0).unwrap(), 0.0);
        assert!(rate_from_linewidth(-1.0).is_err());
    }

    #[test]
    fn f_factor_paper_point() {
        let p = paper_params();
        let f = p.f_factor().unwrap();
        assert!((f - 5.74).abs() < 0.01, "f = {f}");
    }

    #[test]
    fn f_factor_limits() {
        let mut p = paper_params();
        p.gamma_cav = 0.0;
        assert_eq!(p.f_factor().unwrap(), 0.0);

        let mut p = paper_params();
        p.emitter.gamma_dp = 0.0;
        p.gamma_cav = p.emitter.gamma_leak;
        assert!((p.f_factor().unwrap() - 1.0).abs() < 1e-15);

        let mut p = paper_params();
        p.emitter.gamma_leak = 0.0;
        p.emitter.gamma_dp = 0.0;
        assert!(p.f_factor().is_err());
        assert!(p.is_ideal_emitter());
    }

    #[test]
    fn gamma_total_paper_point() {
        let p = paper_params();
        assert!((p.gamma_total() - 4.97).abs() < 1e-12);

        let mut q = p;
        q.gamma_cav = 0.0;
        assert_eq!(q.gamma_total(), q.emitter.gamma_leak);

        // F = 1 with gamma_cav = gamma_bulk = gamma_leak gives 2*gamma_bulk
        let mut r = p;
        r.gamma_cav = r.emitter.gamma_bulk;
        r.emitter.gamma_leak = r.emitter.gamma_bulk;
        assert!((r.gamma_total() - 2.0 * r.emitter.gamma_bulk).abs() < 1e-15);
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = paper_params();
        p.cavity.q_ratio = 0.0;
        assert!(p.validate().is_err());
        let mut p = paper_params();
        p.cavity.alpha = 1.5;
        assert!(p.validate().is_err());
        let mut p = paper_params();
        p.sigma_sd = -0.1;
        assert!(p.validate().is_err());
    }

    #[test]
    fn drive_constructors_guard_sign() {
        assert!(Drive::saturation(-0.1).is_err());
        assert!(Drive::photon_flux(-0.1).is_err());
        assert_eq!(Drive::saturation(1.5).unwrap(), Drive::Saturation(1.5));
    }
}

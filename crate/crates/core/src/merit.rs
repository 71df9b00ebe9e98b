//! Figures of merit: Purcell enhancement, coupling efficiency, coupling
//! strength and cooperativity, Bell-analyzer success rates, cavity quantum
//! efficiency, the mode-volume integral, and routing performance versus
//! Purcell factor.

use alloc::vec::Vec;
use num_complex::Complex64;
use num_traits::Float;

use crate::broadening::{default_axis, effective_critical_flux, port_response, SdMode};
use crate::error::{Error, Result};
use crate::params::{Drive, SystemParams, TWO_PI};
use crate::scattering::critical_photon_number;

/// Resonator geometry for the ideal Purcell estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeGeometry {
    /// Free-space wavelength (nm).
    pub lambda_nm: f64,
    /// Refractive index.
    pub n: f64,
    /// Effective mode volume in units of (λ/n)³.
    pub v_eff: f64,
    /// Loaded quality factor.
    pub q_exp: f64,
}

/// F_ideal = (3/4π²) (λ/n)³ Q / V_eff, with V_eff already in (λ/n)³ units.
pub fn purcell_ideal(g: &ModeGeometry) -> Result<f64> {
    if !(g.lambda_nm > 0.0 && g.n > 0.0 && g.v_eff > 0.0 && g.q_exp > 0.0) {
        return Err(Error::Domain("mode geometry fields must be positive"));
    }
    Ok(3.0 / (4.0 * core::f64::consts::PI * core::f64::consts::PI) * g.q_exp / g.v_eff)
}

/// F = γ_fast/γ_bulk − 1 from measured decay rates.
///
/// The bare rate ratio γ_fast/γ_bulk (the "n-fold emission enhancement")
/// is F + 1; report both, they differ by one.
pub fn purcell_from_lifetimes(gamma_fast: f64, gamma_bulk: f64) -> Result<f64> {
    if !(gamma_fast > 0.0 && gamma_bulk > 0.0) {
        return Err(Error::Domain("decay rates must be > 0"));
    }
    Ok(gamma_fast / gamma_bulk - 1.0)
}

/// β = F/(F+1), the fraction of emitter decay routed into the cavity mode.
pub fn beta_factor(purcell: f64) -> Result<f64> {
    if !(purcell >= 0.0) {
        return Err(Error::Domain("purcell factor must be >= 0"));
    }
    Ok(purcell / (purcell + 1.0))
}

/// g = √(F κ γ_bulk)/2 (rad/ns for rad/ns inputs).
pub fn coupling_strength(purcell: f64, kappa: f64, gamma_bulk: f64) -> Result<f64> {
    if !(purcell >= 0.0 && kappa >= 0.0 && gamma_bulk >= 0.0) {
        return Err(Error::Domain("coupling-strength inputs must be >= 0"));
    }
    Ok((purcell * kappa * gamma_bulk).sqrt() / 2.0)
}

/// C = 4 g² / (κ γ_bulk).
pub fn cooperativity(g: f64, kappa: f64, gamma_bulk: f64) -> Result<f64> {
    if !(kappa > 0.0 && gamma_bulk > 0.0) {
        return Err(Error::Domain("kappa and gamma_bulk must be > 0"));
    }
    Ok(4.0 * g * g / (kappa * gamma_bulk))
}

/// Bell-state analyzer flavors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BellScheme {
    /// Cavity-QED gate: success 1 − 1/C, needs C > 1.
    CavityQed,
    /// Passive coherent scatterer: success (2β − 1)/β, needs β > 1/2.
    Passive,
}

/// Success probability of a Bell-state analyzer, clamped to [0, 1].
pub fn bell_success(scheme: BellScheme, x: f64) -> Result<f64> {
    match scheme {
        BellScheme::CavityQed => {
            if !(x > 1.0) {
                return Err(Error::Domain("cavity-QED analyzer needs cooperativity C > 1"));
            }
            Ok((1.0 - 1.0 / x).clamp(0.0, 1.0))
        }
        BellScheme::Passive => {
            if !(x >= 0.5) {
                return Err(Error::Domain("passive analyzer needs beta >= 0.5"));
            }
            Ok(((2.0 * x - 1.0) / x).clamp(0.0, 1.0))
        }
    }
}

/// QE_cavity = QE_bulk (F+1) / (QE_bulk F + 1), clamped to <= 1.
pub fn qe_cavity(qe_bulk: f64, purcell: f64) -> Result<f64> {
    if !(qe_bulk > 0.0 && qe_bulk <= 1.0) {
        return Err(Error::Domain("qe_bulk must be in (0, 1]"));
    }
    if !(purcell >= 0.0) {
        return Err(Error::Domain("purcell factor must be >= 0"));
    }
    Ok((qe_bulk * (purcell + 1.0) / (qe_bulk * purcell + 1.0)).min(1.0))
}

/// Ratio of the spectral-diffusion width to the cavity-enhanced emission
/// rate, σ_sd/(F γ_bulk); drops as 1/F as the Purcell factor grows.
pub fn decoherence_ratio(sigma_sd_ghz: f64, purcell: f64, gamma_bulk: f64) -> Result<f64> {
    if !(purcell > 0.0 && gamma_bulk > 0.0) {
        return Err(Error::Domain("purcell and gamma_bulk must be > 0"));
    }
    Ok(TWO_PI * sigma_sd_ghz / (purcell * gamma_bulk))
}

/// Cylindrical (r, z) field samples of a resonator mode.
///
/// Component arrays are row-major over (r, z): index = ir * nz + iz.
/// Fields use a consistent normalized unit system in which the electric
/// and magnetic amplitudes are directly comparable (η₀·H alongside E);
/// the integral is homogeneous of degree zero in any common field scale.
#[derive(Debug, Clone)]
pub struct FieldGrid {
    pub r_um: Vec<f64>,
    pub z_um: Vec<f64>,
    pub e_r: Vec<Complex64>,
    pub e_z: Vec<Complex64>,
    pub e_phi: Vec<Complex64>,
    pub h_r: Vec<Complex64>,
    pub h_z: Vec<Complex64>,
    pub h_phi: Vec<Complex64>,
    /// Relative permittivity per grid point (> 0).
    pub eps: Vec<f64>,
    /// Relative permeability per grid point.
    pub mu: Vec<f64>,
    /// Refractive index at the field maximum.
    pub n: f64,
}

impl FieldGrid {
    pub fn validate(&self) -> Result<()> {
        let nr = self.r_um.len();
        let nz = self.z_um.len();
        if nr < 2 || nz < 2 {
            return Err(Error::Axis("field grid needs at least 2 samples per axis"));
        }
        if self.r_um.windows(2).any(|w| !(w[1] > w[0]))
            || self.z_um.windows(2).any(|w| !(w[1] > w[0]))
        {
            return Err(Error::Axis("field grid axes must be strictly ascending"));
        }
        let n = nr * nz;
        let arrays = [&self.e_r, &self.e_z, &self.e_phi, &self.h_r, &self.h_z, &self.h_phi];
        if arrays.iter().any(|a| a.len() != n) || self.eps.len() != n || self.mu.len() != n {
            return Err(Error::Axis("field grid arrays must all match the grid shape"));
        }
        if self.eps.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::Domain("permittivity must be > 0"));
        }
        if !(self.n > 0.0) {
            return Err(Error::Domain("refractive index must be > 0"));
        }
        Ok(())
    }
}

/// Mode-volume integral of a (possibly lossy) resonator mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeVolume {
    /// Real part of the volume (µm³) — the reported value.
    pub v_um3: f64,
    /// Imaginary residue (µm³).
    pub v_um3_imag: f64,
}

impl ModeVolume {
    /// |imag|/|real| of the complex volume.
    pub fn imag_fraction(&self) -> f64 {
        if self.v_um3 == 0.0 {
            return f64::INFINITY;
        }
        (self.v_um3_imag / self.v_um3).abs()
    }

    /// Convert to units of (λ/n)³.
    pub fn in_mode_units(&self, lambda_nm: f64, n: f64) -> f64 {
        let cell = lambda_nm * 1e-3 / n; // µm
        self.v_um3 / (cell * cell * cell)
    }
}

fn trapezoid_weights(axis: &[f64]) -> Vec<f64> {
    let n = axis.len();
    let mut w = Vec::with_capacity(n);
    for i in 0..n {
        let left = if i > 0 { axis[i] - axis[i - 1] } else { 0.0 };
        let right = if i + 1 < n { axis[i + 1] - axis[i] } else { 0.0 };
        w.push(0.5 * (left + right));
    }
    w
}

/// V = π ∬ dr dz · r · [ε(−E_r² − E_z² + E_φ²) − µ(H_r² + H_z² − H_φ²)]
///       / (2 n² max(E_r)²)
///
/// Squares are of complex amplitudes (not moduli); the denominator takes
/// the complex value of E_r at its modulus maximum, which makes the
/// result invariant under a global field phase and under any common
/// rescaling of E and H. The real part is the physical volume; an
/// imaginary residue above 1% of it is logged as a warning.
pub fn mode_volume(grid: &FieldGrid) -> Result<ModeVolume> {
    grid.validate()?;
    let nz = grid.z_um.len();
    let wr = trapezoid_weights(&grid.r_um);
    let wz = trapezoid_weights(&grid.z_um);

    let mut integral = Complex64::new(0.0, 0.0);
    let mut peak = Complex64::new(0.0, 0.0);
    let mut peak_norm = 0.0;
    for (ir, &r) in grid.r_um.iter().enumerate() {
        for (iz, _) in grid.z_um.iter().enumerate() {
            let k = ir * nz + iz;
            let er = grid.e_r[k];
            if er.norm_sqr() > peak_norm {
                peak_norm = er.norm_sqr();
                peak = er;
            }
            let e_term = grid.eps[k]
                * (-er * er - grid.e_z[k] * grid.e_z[k] + grid.e_phi[k] * grid.e_phi[k]);
            let h_term = grid.mu[k]
                * (grid.h_r[k] * grid.h_r[k] + grid.h_z[k] * grid.h_z[k]
                    - grid.h_phi[k] * grid.h_phi[k]);
            integral += wr[ir] * wz[iz] * r * (e_term - h_term);
        }
    }
    if peak_norm == 0.0 {
        return Err(Error::DegenerateField);
    }
    let v = core::f64::consts::PI * integral / (2.0 * grid.n * grid.n * peak * peak);
    let out = ModeVolume { v_um3: v.re, v_um3_imag: v.im };
    if out.imag_fraction() > 0.01 {
        log::warn!(
            "mode volume has a large imaginary residue ({:.3e} of the real part)",
            out.imag_fraction()
        );
    }
    Ok(out)
}

/// One sample of the routing-performance curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoutingPoint {
    pub purcell: f64,
    /// Deepest zero-drive drop-port extinction (negative; |·| is the
    /// re-routing efficiency).
    pub extinction: f64,
    /// Critical photon number at the dip: the P_c/γ_tot formula value
    /// without spectral diffusion, the half-depth flux with it.
    pub n_c: f64,
}

/// Maximum drop-port extinction and critical photon number versus Purcell
/// factor: for each F the cavity emission rate is set to γ_cav = F γ_bulk
/// and the broadened zero-drive response evaluated.
pub fn routing_vs_purcell(
    f_axis: &[f64],
    base: &SystemParams,
    with_sd: bool,
) -> Result<Vec<RoutingPoint>> {
    if f_axis.is_empty() || f_axis.windows(2).any(|w| !(w[1] > w[0])) || f_axis[0] <= 0.0 {
        return Err(Error::Axis("purcell axis must be positive and ascending"));
    }
    let mut out = Vec::with_capacity(f_axis.len());
    for &f in f_axis {
        let mut p = *base;
        p.gamma_cav = f * p.emitter.gamma_bulk;
        if !with_sd {
            p.sigma_sd = 0.0;
        }
        let axis = default_axis(&p);
        let mode = if p.sigma_sd > 0.0 { SdMode::Convolved } else { SdMode::None };
        let resp = port_response(&axis, Drive::Saturation(0.0), &p, mode)?;
        let (at, extinction) = resp.max_drop_extinction();
        let n_c = if p.sigma_sd > 0.0 {
            effective_critical_flux(&p, &axis)?
        } else {
            critical_photon_number(at, &p)?
        };
        out.push(RoutingPoint { purcell: f, extinction, n_c });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn purcell_ideal_paper_geometry() {
        let g = ModeGeometry { lambda_nm: 940.0, n: 3.46, v_eff: 18.0, q_exp: 8900.0 };
        let f = purcell_ideal(&g).unwrap();
        assert!((f - 37.57).abs() < 0.01, "F_ideal = {f}");

        let unit = ModeGeometry {
            q_exp: 4.0 * core::f64::consts::PI * core::f64::consts::PI / 3.0,
            v_eff: 1.0,
            ..g
        };
        assert!((purcell_ideal(&unit).unwrap() - 1.0).abs() < 1e-12);

        let second = ModeGeometry { v_eff: 22.0, ..g };
        assert!((purcell_ideal(&second).unwrap() - 30.74).abs() < 0.01);
    }

    #[test]
    fn purcell_from_lifetimes_paper_values() {
        let f = purcell_from_lifetimes(4.97, 0.63).unwrap();
        assert!((f - 6.889).abs() < 1e-3, "F = {f}");
        assert_eq!(purcell_from_lifetimes(0.63, 0.63).unwrap(), 0.0);
        // peak detuning point: 8-fold rate ratio, F = 7.1
        let f = purcell_from_lifetimes(5.11, 0.63).unwrap();
        assert!((f - 7.11).abs() < 0.01);
        assert!((5.11 / 0.63 - 8.11).abs() < 0.01);
    }

    #[test]
    fn beta_reference_points() {
        assert!((beta_factor(6.9).unwrap() - 0.873).abs() < 5e-4);
        assert_eq!(beta_factor(1.0).unwrap(), 0.5);
        assert!((beta_factor(38.0).unwrap() - 0.974).abs() < 5e-4);
    }

    #[test]
    fn coupling_strength_and_cooperativity() {
        let kappa = TWO_PI * 36.6;
        let g = coupling_strength(6.9, kappa, 0.63).unwrap();
        assert!((g / TWO_PI - 2.52).abs() < 0.01, "g/2pi = {}", g / TWO_PI);
        assert_eq!(coupling_strength(0.0, kappa, 0.63).unwrap(), 0.0);

        // algebraic identity: C(g(F)) = F
        let c = cooperativity(g, kappa, 0.63).unwrap();
        assert!((c - 6.9).abs() < 1e-12);
    }

    #[test]
    fn bell_success_reference_points() {
        let c = bell_success(BellScheme::CavityQed, 6.9).unwrap();
        assert!((c - 0.855).abs() < 5e-4);
        let p = bell_success(BellScheme::Passive, 0.97).unwrap();
        assert!((p - 0.969).abs() < 5e-4);
        assert_eq!(bell_success(BellScheme::Passive, 0.5).unwrap(), 0.0);
        assert!(bell_success(BellScheme::CavityQed, 0.9).is_err());
        assert!(bell_success(BellScheme::Passive, 0.4).is_err());
    }

    #[test]
    fn qe_cavity_reference_points() {
        assert_eq!(qe_cavity(1.0, 17.0).unwrap(), 1.0);
        // direct evaluation at F = 6.3 gives 0.985, not yet 0.99
        let qe = qe_cavity(0.9, 6.3).unwrap();
        assert!((qe - 0.985).abs() < 5e-4, "QE = {qe}");
        assert!(qe < 0.99);
        assert!((qe_cavity(0.9, 0.0).unwrap() - 0.9).abs() < 1e-15);
    }

    #[test]
    fn decoherence_ratio_scales_as_one_over_f() {
        let r1 = decoherence_ratio(0.6, 1.0, 0.63).unwrap();
        for &f in &[2.0, 6.9, 20.0, 100.0] {
            let r = decoherence_ratio(0.6, f, 0.63).unwrap();
            assert!((r * f - r1).abs() < 1e-12 * r1);
        }
        // bulk device: sigma/(F gamma_bulk) = 6 at F = 1
        assert!((r1 - 5.98).abs() < 0.02, "ratio = {r1}");
    }

    fn gaussian_grid(phase: Complex64, scale: f64) -> FieldGrid {
        // E_r = phase * scale * exp(-(r-r0)^2/2a^2 - z^2/2b^2)
        let (r0, a, b) = (2.0, 0.2, 0.15);
        let r_um = crate::spectrum::linspace(r0 - 6.0 * a, r0 + 6.0 * a, 121);
        let z_um = crate::spectrum::linspace(-6.0 * b, 6.0 * b, 101);
        let mut e_r = Vec::new();
        for &r in &r_um {
            for &z in &z_um {
                let g = (-0.5 * ((r - r0) / a).powi(2) - 0.5 * (z / b).powi(2)).exp();
                e_r.push(phase * scale * g);
            }
        }
        let n = e_r.len();
        FieldGrid {
            r_um,
            z_um,
            e_r,
            e_z: vec![Complex64::new(0.0, 0.0); n],
            e_phi: vec![Complex64::new(0.0, 0.0); n],
            h_r: vec![Complex64::new(0.0, 0.0); n],
            h_z: vec![Complex64::new(0.0, 0.0); n],
            h_phi: vec![Complex64::new(0.0, 0.0); n],
            eps: vec![11.97; n],
            mu: vec![1.0; n],
            n: 3.46,
        }
    }

    #[test]
    fn mode_volume_matches_separable_gaussian_closed_form() {
        // with E_r = c*G only, V = -pi^2 eps r0 a b / (2 n^2) independent
        // of c (squares cancel)
        let grid = gaussian_grid(Complex64::new(1.0, 0.0), 1.0);
        let v = mode_volume(&grid).unwrap();
        let expected = -core::f64::consts::PI.powi(2) * 11.97 * 2.0 * 0.2 * 0.15
            / (2.0 * 3.46 * 3.46);
        assert!(
            ((v.v_um3 - expected) / expected).abs() < 5e-3,
            "V = {} vs {expected}",
            v.v_um3
        );
        assert!(v.imag_fraction() < 1e-10);
    }

    #[test]
    fn mode_volume_scale_and_phase_invariance() {
        let base = mode_volume(&gaussian_grid(Complex64::new(1.0, 0.0), 1.0)).unwrap();
        let scaled = mode_volume(&gaussian_grid(Complex64::new(1.0, 0.0), 37.5)).unwrap();
        assert!(((scaled.v_um3 - base.v_um3) / base.v_um3).abs() < 1e-12);

        let rotated =
            mode_volume(&gaussian_grid(Complex64::from_polar(1.0, 1.234), 1.0)).unwrap();
        assert!(((rotated.v_um3 - base.v_um3) / base.v_um3).abs() < 1e-9);
    }

    #[test]
    fn mode_volume_rejects_zero_field() {
        let mut grid = gaussian_grid(Complex64::new(1.0, 0.0), 1.0);
        for v in &mut grid.e_r {
            *v = Complex64::new(0.0, 0.0);
        }
        assert_eq!(mode_volume(&grid), Err(Error::DegenerateField));
    }
}

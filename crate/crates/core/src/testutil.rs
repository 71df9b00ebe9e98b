//! Shared fixtures for unit tests.

use crate::params::{CavityParams, EmitterParams, SystemParams, TWO_PI};

/// The measured device configuration used throughout the test suite:
/// γ_bulk = γ_leak = 0.63 ns⁻¹, γ_dp/2π = 0.01 GHz, κ/2π = 36.6 GHz,
/// δ = 0.02 κ, σ_sd/2π = 0.6 GHz, γ_cav = 4.34 ns⁻¹.
pub fn paper_params() -> SystemParams {
    SystemParams {
        emitter: EmitterParams {
            gamma_bulk: 0.63,
            gamma_leak: 0.63,
            gamma_dp: TWO_PI * 0.01,
            omega_qd: 319_000.0 + 0.02 * 36.6,
        },
        cavity: CavityParams {
            kappa: TWO_PI * 36.6,
            omega_cav: 319_000.0,
            q_ratio: 1.0,
            eta: 1.0,
            alpha: 1.0,
        },
        gamma_cav: 4.34,
        sigma_sd: 0.6,
    }
}

/// Same system with spectral diffusion switched off.
pub fn paper_params_no_sd() -> SystemParams {
    let mut p = paper_params();
    p.sigma_sd = 0.0;
    p
}

/// Ideal emitter: no leak, no dephasing, no diffusion, on resonance.
pub fn ideal_params() -> SystemParams {
    let mut p = paper_params();
    p.emitter.gamma_leak = 0.0;
    p.emitter.gamma_dp = 0.0;
    p.emitter.omega_qd = p.cavity.omega_cav;
    p.sigma_sd = 0.0;
    p
}

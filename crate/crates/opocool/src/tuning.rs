//! Closed-form optimal working points that cancel Stokes scattering, for both
//! squeezing routes, and the reduced anti-Stokes rates at those optima.

use num_complex::Complex64;
use thiserror::Error;

use crate::params::wrap_half_turn;
use crate::spectra::CoolingResult;

#[derive(Debug, Error)]
pub enum TuningError {
    #[error("squeezed-input optimum requires positive detuning, got {delta_a_s}")]
    NonPositiveDetuning { delta_a_s: f64 },
}

/// Suppression-point quantities for both squeezing routes.
#[derive(Debug, Clone, Copy)]
pub struct SuppressionOptimum {
    pub phi_opt: f64,
    pub chi_opt: f64,
    pub r_opt: f64,
    pub n_s_opt: f64,
    pub phi_s_opt: f64,
    pub r_s_opt: f64,
}

/// Optimal phase and parametric strength cancelling the Stokes sideband of
/// the internal model: returns `(phi_opt, chi_opt, r_opt)` with the phase in
/// `[0, pi)`. Suppression is only reachable below threshold when `r_opt < 1`.
pub fn internal_optimum(kappa_a: f64, delta_a: f64, omega_m: f64) -> (f64, f64, f64) {
    let chi_opt = kappa_a.hypot(delta_a - omega_m);
    let phi_opt = wrap_half_turn(0.5 * (-(delta_a - omega_m)).atan2(-kappa_a));
    let r_opt = chi_opt / kappa_a.hypot(delta_a);
    (phi_opt, chi_opt, r_opt)
}

/// Optimal input phase and photon number cancelling the Stokes sideband of
/// the squeezed-input model: returns `(phi_s_opt, n_s_opt, r_s_opt)`.
pub fn injected_optimum(
    kappa_a: f64,
    delta_a_s: f64,
    omega_m: f64,
) -> Result<(f64, f64, f64), TuningError> {
    if delta_a_s <= 0.0 {
        return Err(TuningError::NonPositiveDetuning { delta_a_s });
    }
    let lo = kappa_a.hypot(delta_a_s - omega_m);
    let hi = kappa_a.hypot(delta_a_s + omega_m);
    let n_s_opt = lo * lo / (4.0 * delta_a_s * omega_m);
    let num = -(Complex64::new(kappa_a, -delta_a_s).powi(2) + omega_m * omega_m);
    let phi_s_opt = wrap_half_turn(0.5 * num.arg());
    let r_s_opt = (hi - 2.0 * (delta_a_s * omega_m).sqrt()) / lo;
    Ok((phi_s_opt, n_s_opt, r_s_opt))
}

/// Detunings at which the two optimally-suppressed models end up with equal
/// couplings under the frame map: returns `(delta_a_s, delta_a)`.
pub fn equal_coupling_detunings(kappa_a: f64, omega_m: f64) -> (f64, f64) {
    (
        omega_m,
        (kappa_a * kappa_a + 2.0 * omega_m * omega_m) / (2.0 * omega_m),
    )
}

/// Both optima evaluated at the equal-coupling detunings.
pub fn suppression_optimum(kappa_a: f64, omega_m: f64) -> SuppressionOptimum {
    let (delta_a_s, delta_a) = equal_coupling_detunings(kappa_a, omega_m);
    let (phi_opt, chi_opt, r_opt) = internal_optimum(kappa_a, delta_a, omega_m);
    let (phi_s_opt, n_s_opt, r_s_opt) =
        injected_optimum(kappa_a, delta_a_s, omega_m).expect("delta_a_s = omega_m > 0");
    SuppressionOptimum {
        phi_opt,
        chi_opt,
        r_opt,
        n_s_opt,
        phi_s_opt,
        r_s_opt,
    }
}

/// Which model a suppression optimum belongs to, with the parameters the
/// reduced rate formulas need.
#[derive(Debug, Clone, Copy)]
pub enum OptimumModel {
    Internal {
        kappa_a: f64,
        delta_a: f64,
        g_a: f64,
    },
    Injected {
        kappa_a: f64,
        delta_a_s: f64,
        g_a_s: f64,
    },
}

/// Closed-form rates at the suppression optimum: the Stokes rate vanishes and
/// the anti-Stokes rate takes the reduced Lorentzian(-difference) form.
pub fn rates_at_optimum(model: OptimumModel, omega_m: f64, gamma: f64, n_th: f64) -> CoolingResult {
    let a_minus = match model {
        OptimumModel::Internal {
            kappa_a,
            delta_a,
            g_a,
        } => {
            let l = kappa_a.hypot(delta_a - omega_m);
            2.0 * kappa_a * g_a * g_a / (l * l)
        }
        OptimumModel::Injected {
            kappa_a,
            delta_a_s,
            g_a_s,
        } => {
            let lo = kappa_a.hypot(delta_a_s - omega_m);
            let hi = kappa_a.hypot(delta_a_s + omega_m);
            2.0 * kappa_a * g_a_s * g_a_s * (1.0 / (lo * lo) - 1.0 / (hi * hi))
        }
    };
    CoolingResult::from_rates(0.0, a_minus, gamma, n_th)
}

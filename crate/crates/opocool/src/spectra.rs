//! Closed-form force spectra and the perturbative cooling quantities built
//! from them: Stokes/anti-Stokes rates, optical damping, backaction limit and
//! stationary occupancy.

use num_complex::Complex64;
use thiserror::Error;

use crate::params::{InjectedModelParams, LinearizedParams};

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("spectrum denominator degenerate at omega = {omega}")]
    Degenerate { omega: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumKind {
    /// Cavity force spectrum of the internal-squeezing model.
    InternalSa,
    /// Cavity force spectrum of the squeezed-input model.
    InjectedSa,
    /// Pump-mode force spectrum.
    PumpSc,
    /// Cavity-pump cross spectrum (first order in the mode coupling).
    CrossSac,
    /// Resolvent-based auto spectrum of an assembled system.
    NumericAuto,
    /// Resolvent-based symmetrized cross spectrum.
    NumericCross,
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    pub omega_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: SpectrumKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoolingMethod {
    Perturbative,
    Lyapunov,
}

/// Scattering rates and occupancies. `n_o` and `n_st` are absent in the
/// heating regime (`gamma_opt <= 0`), which is a recordable outcome rather
/// than an error. Lyapunov-derived results carry only `n_st`; the rate fields
/// are NaN there since the exact solve does not decompose into sidebands.
#[derive(Debug, Clone, Copy)]
pub struct CoolingResult {
    /// Stokes (heating) rate A+.
    pub a_plus: f64,
    /// Anti-Stokes (cooling) rate A-.
    pub a_minus: f64,
    /// Net optical damping rate A- minus A+.
    pub gamma_opt: f64,
    /// Backaction limit A+/(A- - A+); None when not cooling.
    pub n_o: Option<f64>,
    /// Stationary phonon occupancy; None when not cooling.
    pub n_st: Option<f64>,
    pub method: CoolingMethod,
}

impl CoolingResult {
    pub fn from_rates(a_plus: f64, a_minus: f64, gamma: f64, n_th: f64) -> Self {
        let gamma_opt = a_minus - a_plus;
        let (n_o, n_st) = if gamma_opt > 0.0 {
            (
                Some(a_plus / gamma_opt),
                Some((gamma * n_th + a_plus) / (gamma + gamma_opt)),
            )
        } else {
            (None, None)
        };
        CoolingResult {
            a_plus,
            a_minus,
            gamma_opt,
            n_o,
            n_st,
            method: CoolingMethod::Perturbative,
        }
    }

    pub fn from_lyapunov(n_st: f64) -> Self {
        CoolingResult {
            a_plus: f64::NAN,
            a_minus: f64::NAN,
            gamma_opt: f64::NAN,
            n_o: None,
            n_st: Some(n_st),
            method: CoolingMethod::Lyapunov,
        }
    }

    pub fn is_heating(&self) -> bool {
        self.method == CoolingMethod::Perturbative && self.gamma_opt <= 0.0
    }
}

/// The pair `(nu(omega), zeta(omega))` entering the internal force spectrum:
/// `nu = kappa_a + i(delta_a + omega) + chi e^{2i phi}` and
/// `zeta = (kappa_a - i omega)^2 + delta_a^2 - chi^2`.
pub fn nu_zeta(p: &LinearizedParams, omega: f64) -> (Complex64, Complex64) {
    let nu = Complex64::new(p.kappa_a, p.delta_a + omega)
        + p.chi * Complex64::new(0.0, 2.0 * p.phi).exp();
    let zeta = Complex64::new(p.kappa_a, -omega).powi(2) + p.delta_a * p.delta_a - p.chi * p.chi;
    (nu, zeta)
}

/// Force spectrum of the internal-squeezing cavity, `2 kappa_a |nu/zeta|^2`.
pub fn spectrum_internal(p: &LinearizedParams, omega: f64) -> Result<f64, SpectrumError> {
    let (nu, zeta) = nu_zeta(p, omega);
    let z2 = zeta.norm_sqr();
    if z2 < 1e-300 {
        return Err(SpectrumError::Degenerate { omega });
    }
    Ok(2.0 * p.kappa_a * nu.norm_sqr() / z2)
}

/// Force spectrum of the cavity driven by broadband squeezed input: the
/// two-path interference of the amplified and conjugated sidebands. The
/// coupling is *not* included here; rates are `G^2 S(-/+ omega_m)`.
pub fn spectrum_injected(p: &InjectedModelParams, omega: f64) -> f64 {
    let plus = (1.0 + p.n_s).sqrt() / Complex64::new(p.kappa_a, p.delta_a_s - omega);
    let minus = p.n_s.sqrt() * Complex64::new(0.0, 2.0 * p.phi_s).exp()
        / Complex64::new(p.kappa_a, -(p.delta_a_s + omega));
    2.0 * p.kappa_a * (plus + minus).norm_sqr()
}

/// Lorentzian force spectrum of the pump mode.
pub fn spectrum_pump(p: &LinearizedParams, omega: f64) -> f64 {
    2.0 * p.kappa_c / (p.kappa_c * p.kappa_c + (p.delta_c - omega).powi(2))
}

/// Cavity-pump cross spectrum to first order in the cavity-cavity coupling,
/// pairing the cooling-cavity amplitude with the pump quadrature rotated by
/// the squeezing phase (the combination that back-acts on the mechanics).
pub fn spectrum_cross(p: &LinearizedParams, omega: f64) -> Result<f64, SpectrumError> {
    if p.eps == 0.0 {
        return Ok(0.0);
    }
    let (nu, zeta) = nu_zeta(p, omega);
    let z2 = zeta.norm_sqr();
    if z2 < 1e-300 {
        return Err(SpectrumError::Degenerate { omega });
    }
    let e2ip = Complex64::new(0.0, 2.0 * p.phi).exp();
    let da_bar = Complex64::new(p.kappa_a, -(p.delta_a + omega));
    let dc = Complex64::new(p.kappa_c, p.delta_c - omega);
    let dc_bar = Complex64::new(p.kappa_c, -(p.delta_c + omega));
    let lorentz_c = p.kappa_c * p.kappa_c + (p.delta_c - omega).powi(2);
    let bracket = (p.kappa_c / p.kappa_a) * zeta / lorentz_c - da_bar / dc - p.chi * e2ip / dc_bar;
    Ok((2.0 * p.kappa_a * p.eps / z2) * 2.0 * (nu * e2ip.conj() * bracket).re)
}

/// Perturbative rates of the internal model. With `include_pump` the pump's
/// direct and cross contributions (proportional to `g_c^2` and `g_a g_c`) are
/// added to the cavity rates.
pub fn cooling_perturbative(
    p: &LinearizedParams,
    include_pump: bool,
) -> Result<CoolingResult, SpectrumError> {
    let rate = |omega: f64| -> Result<f64, SpectrumError> {
        let mut r = p.g_a * p.g_a * spectrum_internal(p, omega)?;
        if include_pump {
            r += p.g_c * p.g_c * spectrum_pump(p, omega);
            r += p.g_a * p.g_c * spectrum_cross(p, omega)?;
        }
        Ok(r)
    };
    let a_plus = rate(-p.omega_m)?;
    let a_minus = rate(p.omega_m)?;
    Ok(CoolingResult::from_rates(a_plus, a_minus, p.gamma, p.n_th))
}

/// Perturbative rates of the squeezed-input model.
pub fn cooling_injected(p: &InjectedModelParams) -> CoolingResult {
    let g2 = p.g_a_s * p.g_a_s;
    let a_plus = g2 * spectrum_injected(p, -p.omega_m);
    let a_minus = g2 * spectrum_injected(p, p.omega_m);
    CoolingResult::from_rates(a_plus, a_minus, p.gamma, p.n_th)
}

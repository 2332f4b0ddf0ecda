//! Parameter sets for the three linear model variants.
//!
//! Conventions used throughout the crate: every rate and frequency is quoted
//! in units of the mechanical frequency (so `omega_m = 1.0` in all shipped
//! configurations, but the formulas keep the symbol), quadratures are
//! `X = o + o^dag`, `Y = -i(o - o^dag)`, and the covariance matrix is the
//! symmetrized second moment with vacuum variance 1.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parameter `{name}` must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("parameter `{name}` out of range: {why} (got {value})")]
    OutOfRange {
        name: &'static str,
        why: &'static str,
        value: f64,
    },
    #[error("squeezed-input pairing m_s={m_s} inconsistent with n_s={n_s} (expected {expected})")]
    InconsistentPairing { m_s: f64, n_s: f64, expected: f64 },
    #[error("pump renormalization drives the cooling-cavity linewidth non-positive (kappa_a' = {kappa_a})")]
    LinewidthCollapse { kappa_a: f64 },
}

fn finite(name: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonFinite { name, value })
    }
}

fn positive(name: &'static str, value: f64) -> Result<(), ModelError> {
    finite(name, value)?;
    if value > 0.0 {
        Ok(())
    } else {
        Err(ModelError::OutOfRange {
            name,
            why: "must be > 0",
            value,
        })
    }
}

fn non_negative(name: &'static str, value: f64) -> Result<(), ModelError> {
    finite(name, value)?;
    if value >= 0.0 {
        Ok(())
    } else {
        Err(ModelError::OutOfRange {
            name,
            why: "must be >= 0",
            value,
        })
    }
}

/// Reduce an angle modulo pi into `[0, pi)`.
///
/// Squeezing phases only enter the dynamics through `e^{2i*phase}`, so this is
/// the natural principal branch for reporting them.
pub fn wrap_half_turn(angle: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let mut a = angle % pi;
    if a < 0.0 {
        a += pi;
    }
    // `% pi` can return exactly pi after the correction when angle is a tiny
    // negative number; fold it back.
    if a >= pi {
        a -= pi;
    }
    a
}

/// Single-photon-level description of the driven two-cavity + mechanics
/// system, before any mean-field expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct FullModelParams {
    /// Mechanical frequency (the unit of every other rate; normally 1.0).
    pub omega_m: f64,
    /// Mechanical energy damping rate.
    pub gamma: f64,
    /// Mean thermal phonon number of the mechanical bath.
    pub n_th: f64,
    /// Half-linewidth of the cooling cavity mode.
    pub kappa_a: f64,
    /// Half-linewidth of the pump cavity mode.
    pub kappa_c: f64,
    /// Bare detuning of the cooling mode (before the static mechanical shift).
    pub delta_a_bar: f64,
    /// Bare detuning of the pump mode.
    pub delta_c_bar: f64,
    /// Single-photon optomechanical coupling of the cooling mode.
    pub g_a: f64,
    /// Single-photon optomechanical coupling of the pump mode.
    pub g_c: f64,
    /// Single-photon parametric (down-conversion) nonlinearity.
    pub chi_0: f64,
    /// Complex drive amplitude on the cooling mode.
    pub drive_a: Complex64,
    /// Complex drive amplitude on the pump mode.
    pub drive_c: Complex64,
}

impl FullModelParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        positive("omega_m", self.omega_m)?;
        positive("gamma", self.gamma)?;
        non_negative("n_th", self.n_th)?;
        positive("kappa_a", self.kappa_a)?;
        positive("kappa_c", self.kappa_c)?;
        finite("delta_a_bar", self.delta_a_bar)?;
        finite("delta_c_bar", self.delta_c_bar)?;
        finite("g_a", self.g_a)?;
        finite("g_c", self.g_c)?;
        non_negative("chi_0", self.chi_0)?;
        finite("drive_a.re", self.drive_a.re)?;
        finite("drive_a.im", self.drive_a.im)?;
        finite("drive_c.re", self.drive_c.re)?;
        finite("drive_c.im", self.drive_c.im)?;
        Ok(())
    }
}

/// Effective parameters of the linearized fluctuation dynamics.
///
/// `g_a`/`g_c` here are the *effective* couplings (single-photon coupling
/// times steady amplitude); `chi` and `eps` are the effective parametric and
/// mode-coupling strengths. All four are real and non-negative by the phase
/// convention that makes the cooling-mode amplitude real, with the leftover
/// pump phase stored in `phi`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedParams {
    pub omega_m: f64,
    pub gamma: f64,
    pub n_th: f64,
    pub kappa_a: f64,
    pub kappa_c: f64,
    /// Shifted detuning of the cooling mode.
    pub delta_a: f64,
    /// Shifted detuning of the pump mode.
    pub delta_c: f64,
    /// Effective optomechanical coupling of the cooling mode.
    pub g_a: f64,
    /// Effective optomechanical coupling of the pump mode.
    pub g_c: f64,
    /// Effective parametric strength.
    pub chi: f64,
    /// Effective cavity-cavity coupling (pump depletion channel).
    pub eps: f64,
    /// Squeezing phase in radians (pi-periodic).
    pub phi: f64,
}

impl LinearizedParams {
    /// Workhorse configuration: unresolved-sideband-edge cavity with
    /// `kappa_a = delta_a = omega_m`, coupling 0.1, high-Q thermal mechanics.
    pub fn reference() -> Self {
        LinearizedParams {
            omega_m: 1.0,
            gamma: 0.25e-6,
            n_th: 1000.0,
            kappa_a: 1.0,
            kappa_c: 500.0,
            delta_a: 1.0,
            delta_c: 0.0,
            g_a: 0.1,
            g_c: 0.0,
            chi: 0.0,
            eps: 0.0,
            phi: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        positive("omega_m", self.omega_m)?;
        positive("gamma", self.gamma)?;
        non_negative("n_th", self.n_th)?;
        positive("kappa_a", self.kappa_a)?;
        positive("kappa_c", self.kappa_c)?;
        finite("delta_a", self.delta_a)?;
        finite("delta_c", self.delta_c)?;
        non_negative("g_a", self.g_a)?;
        non_negative("g_c", self.g_c)?;
        non_negative("chi", self.chi)?;
        non_negative("eps", self.eps)?;
        finite("phi", self.phi)?;
        Ok(())
    }
}

/// Parameters of the equivalent model driven by broadband squeezed input.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectedModelParams {
    pub omega_m: f64,
    pub gamma: f64,
    pub n_th: f64,
    pub kappa_a: f64,
    /// Mapped detuning of the cavity in the squeezed frame.
    pub delta_a_s: f64,
    /// Mapped optomechanical coupling.
    pub g_a_s: f64,
    /// Photon number of the squeezed input field.
    pub n_s: f64,
    /// Pair-correlation strength of the input; pure squeezing requires
    /// `m_s = sqrt(n_s (n_s + 1))`.
    pub m_s: f64,
    /// Squeezing phase of the input field (pi-periodic).
    pub phi_s: f64,
}

/// Pair-correlation strength of a pure squeezed input with `n_s` photons.
pub fn pure_pairing(n_s: f64) -> f64 {
    (n_s * (n_s + 1.0)).sqrt()
}

impl InjectedModelParams {
    /// Construct a pure (minimum-uncertainty) squeezed-input model.
    #[allow(clippy::too_many_arguments)]
    pub fn pure(
        kappa_a: f64,
        delta_a_s: f64,
        g_a_s: f64,
        n_s: f64,
        phi_s: f64,
        omega_m: f64,
        gamma: f64,
        n_th: f64,
    ) -> Self {
        InjectedModelParams {
            omega_m,
            gamma,
            n_th,
            kappa_a,
            delta_a_s,
            g_a_s,
            n_s,
            m_s: pure_pairing(n_s),
            phi_s,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        positive("omega_m", self.omega_m)?;
        positive("gamma", self.gamma)?;
        non_negative("n_th", self.n_th)?;
        positive("kappa_a", self.kappa_a)?;
        finite("delta_a_s", self.delta_a_s)?;
        non_negative("g_a_s", self.g_a_s)?;
        non_negative("n_s", self.n_s)?;
        non_negative("m_s", self.m_s)?;
        finite("phi_s", self.phi_s)?;
        let expected = pure_pairing(self.n_s);
        // Tolerance on the pure-squeezing constraint; scaled so large n_s does
        // not trip on rounding.
        let tol = 1e-12 * (1.0 + expected);
        if (self.m_s - expected).abs() > tol {
            return Err(ModelError::InconsistentPairing {
                m_s: self.m_s,
                n_s: self.n_s,
                expected,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_set_is_valid() {
        LinearizedParams::reference().validate().unwrap();
    }

    #[test]
    fn rejects_nonfinite_and_negative() {
        let mut p = LinearizedParams::reference();
        p.delta_a = f64::NAN;
        assert!(matches!(p.validate(), Err(ModelError::NonFinite { .. })));
        let mut p = LinearizedParams::reference();
        p.chi = -0.1;
        assert!(matches!(p.validate(), Err(ModelError::OutOfRange { .. })));
        let mut p = LinearizedParams::reference();
        p.kappa_a = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn pure_pairing_example() {
        // n_s = 0.25 -> m_s = sqrt(0.25 * 1.25)
        assert_relative_eq!(pure_pairing(0.25), 0.559016994374947, epsilon = 1e-14);
    }

    #[test]
    fn pairing_consistency_enforced() {
        let mut p = InjectedModelParams::pure(1.0, 1.0, 0.1, 0.25, 0.3, 1.0, 1e-6, 0.0);
        p.validate().unwrap();
        p.m_s += 1e-6;
        assert!(matches!(
            p.validate(),
            Err(ModelError::InconsistentPairing { .. })
        ));
    }

    #[test]
    fn half_turn_wrapping() {
        let pi = std::f64::consts::PI;
        assert_relative_eq!(wrap_half_turn(pi + 0.3), 0.3, epsilon = 1e-14);
        assert_relative_eq!(wrap_half_turn(-0.1), pi - 0.1, epsilon = 1e-14);
        assert!(wrap_half_turn(-1e-300) < pi);
        assert_eq!(wrap_half_turn(0.0), 0.0);
    }
}

//! Bogoliubov frame map between the internal-squeezing model and the model
//! driven by broadband squeezed input, plus the numerical equivalence
//! certificate and the two squeezing measures.

use thiserror::Error;

use crate::lyapunov::{phonon_number, steady_covariance, LyapunovError};
use crate::model::{build_injected_system, build_internal_system};
use crate::params::{wrap_half_turn, InjectedModelParams, LinearizedParams, ModelError};

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("no squeezed frame exists for chi={chi} >= |delta_a|={delta_a_abs}")]
    NotEquivalentRegime { chi: f64, delta_a_abs: f64 },
    #[error("external squeezing ratio {ratio} is at/above threshold")]
    AboveThreshold { ratio: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lyapunov(#[from] LyapunovError),
}

/// The frame data of the map: squeezing magnitude `s`, frame rotation
/// `phi_prime`, and the parameters of the resulting squeezed-input model.
#[derive(Debug, Clone, Copy)]
pub struct SqueezedFrameParams {
    pub s: f64,
    pub phi_prime: f64,
    pub phi_s: f64,
    pub n_s: f64,
    pub m_s: f64,
    pub delta_a_s: f64,
    pub g_a_s: f64,
}

/// Compute the squeezed-frame data for an internal-squeezing parameter set.
///
/// Exists for `chi < |delta_a|`; `chi = 0` gives the identity frame. Negative
/// detuning yields a negative squeezing parameter internally; the reported
/// pairing is normalized to `m_s >= 0` by shifting `phi_s` a quarter turn.
pub fn squeezed_frame(p: &LinearizedParams) -> Result<SqueezedFrameParams, FrameError> {
    p.validate()?;
    if p.chi >= p.delta_a.abs() {
        return Err(FrameError::NotEquivalentRegime {
            chi: p.chi,
            delta_a_abs: p.delta_a.abs(),
        });
    }
    let x = if p.chi == 0.0 { 0.0 } else { p.chi / p.delta_a };
    // artanh(x)/2 via the log form
    let s = 0.25 * ((1.0 + x) / (1.0 - x)).ln();
    let (sh, ch) = (s.sinh(), s.cosh());
    let n_s = sh * sh;
    let mut m_s = sh * ch;
    let phi_prime = (sh * (2.0 * p.phi).cos()).atan2(ch + sh * (2.0 * p.phi).sin());
    let mut phi_s = -(phi_prime + p.phi + std::f64::consts::FRAC_PI_4);
    let delta_a_s = p.delta_a / (2.0 * n_s + 1.0);
    let g_a_s = (p.g_a * (ch * phi_prime.cos() + sh * (phi_prime + 2.0 * p.phi).sin())).abs();
    if m_s < 0.0 {
        m_s = -m_s;
        phi_s += std::f64::consts::FRAC_PI_2;
    }
    Ok(SqueezedFrameParams {
        s,
        phi_prime,
        phi_s: wrap_half_turn(phi_s),
        n_s,
        m_s,
        delta_a_s,
        g_a_s,
    })
}

/// Map an internal-squeezing parameter set to the equivalent squeezed-input
/// model. Thermal/mechanical parameters carry over unchanged.
pub fn map_internal_to_injected(p: &LinearizedParams) -> Result<InjectedModelParams, FrameError> {
    let f = squeezed_frame(p)?;
    Ok(InjectedModelParams {
        omega_m: p.omega_m,
        gamma: p.gamma,
        n_th: p.n_th,
        kappa_a: p.kappa_a,
        delta_a_s: f.delta_a_s,
        g_a_s: f.g_a_s,
        n_s: f.n_s,
        m_s: f.m_s,
        phi_s: f.phi_s,
    })
}

#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub n_st_internal: f64,
    pub n_st_injected: f64,
    pub relative_difference: f64,
    pub pass: bool,
    pub mapped: InjectedModelParams,
}

/// Solve both models exactly and compare their stationary phonon numbers.
pub fn equivalence_certificate(
    p: &LinearizedParams,
    tol: f64,
) -> Result<EquivalenceReport, FrameError> {
    let mapped = map_internal_to_injected(p)?;
    let internal = steady_covariance(&build_internal_system(p, false)?)?;
    let injected = steady_covariance(&build_injected_system(&mapped)?)?;
    let n_int = phonon_number(&internal);
    let n_inj = phonon_number(&injected);
    let relative_difference = (n_int - n_inj).abs() / n_inj.abs().max(f64::MIN_POSITIVE);
    Ok(EquivalenceReport {
        n_st_internal: n_int,
        n_st_injected: n_inj,
        relative_difference,
        pass: relative_difference <= tol,
        mapped,
    })
}

/// Internal squeezing measure `R = chi / sqrt(kappa_a^2 + delta_a^2)`;
/// `R = 1` is the OPO threshold.
pub fn squeezing_ratio(p: &LinearizedParams) -> f64 {
    p.chi / p.kappa_a.hypot(p.delta_a)
}

/// Photon number emitted by an external sub-threshold OPO with ratio `r_s`.
pub fn external_input_photons(r_s: f64) -> Result<f64, FrameError> {
    if !(0.0..1.0).contains(&r_s) {
        return Err(FrameError::AboveThreshold { ratio: r_s });
    }
    let d = r_s * r_s - 1.0;
    Ok(4.0 * r_s * r_s / (d * d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn sample() -> LinearizedParams {
        let mut p = LinearizedParams::reference();
        p.delta_a = 1.5;
        p.chi = 1.118033988749895; // hypot(1, 0.5): the suppression optimum
        p.phi = 0.5 * (-(0.5f64)).atan2(-1.0) + std::f64::consts::PI;
        p
    }

    #[test]
    fn identity_at_zero_squeezing() {
        let mut p = LinearizedParams::reference();
        p.chi = 0.0;
        let f = squeezed_frame(&p).unwrap();
        assert_eq!(f.s, 0.0);
        assert_eq!(f.n_s, 0.0);
        assert_eq!(f.m_s, 0.0);
        assert_relative_eq!(f.delta_a_s, p.delta_a, epsilon = 1e-15);
        assert_relative_eq!(f.g_a_s, p.g_a, epsilon = 1e-15);
    }

    #[test]
    fn rejects_outside_equivalent_regime() {
        let mut p = LinearizedParams::reference();
        p.chi = 1.01 * p.delta_a.abs();
        assert!(matches!(
            squeezed_frame(&p),
            Err(FrameError::NotEquivalentRegime { .. })
        ));
    }

    /// tanh(2s) = chi/delta_a and the n_s photon count at the worked example.
    #[test]
    fn frame_magnitude_example() {
        let p = sample();
        let f = squeezed_frame(&p).unwrap();
        assert_relative_eq!((2.0 * f.s).tanh(), p.chi / p.delta_a, epsilon = 1e-12);
        assert_relative_eq!(f.n_s, 0.25, epsilon = 1e-12);
        assert_relative_eq!(f.delta_a_s, 1.0, epsilon = 1e-12);
        // pure squeezed input comes out exactly minimum-uncertainty
        assert_relative_eq!(f.m_s, (f.n_s * (f.n_s + 1.0)).sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn round_trip_recovers_internal_parameters() {
        let mut p = LinearizedParams::reference();
        p.delta_a = 2.3;
        p.chi = 1.7;
        p.phi = 0.9;
        let f = squeezed_frame(&p).unwrap();
        let delta_back = f.delta_a_s * (2.0 * f.n_s + 1.0);
        let chi_back = delta_back * (2.0 * f.s).tanh();
        assert_relative_eq!(delta_back, p.delta_a, epsilon = 1e-12);
        assert_relative_eq!(chi_back, p.chi, epsilon = 1e-12);
    }

    #[test]
    fn mapped_coupling_closed_form() {
        // G^s = G sqrt(2 n_s + 1 + 2 m_s sin 2phi) with the *signed* pairing
        for (delta, chi, phi) in [(1.9, 1.2, 0.31), (0.8, 0.5, 2.9), (-1.5, 0.7, 1.1)] {
            let mut p = LinearizedParams::reference();
            p.delta_a = delta;
            p.chi = chi;
            p.phi = phi;
            let f = squeezed_frame(&p).unwrap();
            let ms_signed = f.s.sinh() * f.s.cosh();
            let direct = p.g_a * (2.0 * f.n_s + 1.0 + 2.0 * ms_signed * (2.0 * phi).sin()).sqrt();
            assert_relative_eq!(f.g_a_s, direct, epsilon = 1e-12);
        }
    }

    #[test]
    fn certificate_passes_at_sample_point() {
        let rep = equivalence_certificate(&sample(), 1e-8).unwrap();
        assert!(rep.pass, "relative difference {}", rep.relative_difference);
    }

    /// Blue detuning flips the sign of the squeezing parameter; the
    /// normalized map must still reproduce the exact occupancy.
    #[test]
    fn certificate_passes_at_negative_detuning() {
        let mut p = LinearizedParams::reference();
        p.delta_a = -2.0;
        p.chi = 0.5;
        p.phi = 0.9;
        p.g_a = 0.01;
        p.gamma = 0.05; // damping-dominated so the heating point stays stable
        p.n_th = 1.0;
        let rep = equivalence_certificate(&p, 1e-8).unwrap();
        assert!(rep.pass, "relative difference {}", rep.relative_difference);
        assert_relative_eq!(rep.n_st_internal, 1.002906822507502, max_relative = 1e-9);
    }

    #[test]
    fn squeezing_measures() {
        let mut p = LinearizedParams::reference();
        p.chi = 1.0;
        assert_relative_eq!(
            squeezing_ratio(&p),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-15
        );
        let r_s = 5f64.sqrt() - 2.0;
        assert_relative_eq!(external_input_photons(r_s).unwrap(), 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(external_input_photons(0.0).unwrap(), 0.0);
        assert!(external_input_photons(1.0).is_err());
        assert!(external_input_photons(-0.1).is_err());
    }
}

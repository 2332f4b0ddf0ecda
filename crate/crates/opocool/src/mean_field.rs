//! Classical steady state of the driven nonlinear three-mode system and the
//! extraction of linearized fluctuation parameters around it.
//!
//! The stationary amplitudes satisfy three coupled fixed-point relations
//! (cooling cavity, pump cavity, mechanics) in which the mechanical
//! displacement shifts both cavity detunings. They are solved by a damped
//! Picard iteration started from several seeds; disagreeing converged seeds
//! flag multistability near the parametric threshold.

use num_complex::Complex64;
use thiserror::Error;

use crate::params::{wrap_half_turn, FullModelParams, LinearizedParams, ModelError};

/// Damping factor of the fixed-point iteration. 0.5 trades speed for
/// robustness near threshold, where the undamped map overshoots.
const DAMPING: f64 = 0.5;
/// Relative disagreement between converged seeds that flags multistability.
const BRANCH_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum MeanFieldError {
    #[error("fixed-point iteration did not converge (best residual {residual:.3e})")]
    NotConverged { residual: f64 },
    #[error("operation requires a converged mean-field solution")]
    Unconverged,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Stationary classical amplitudes and the displacement-shifted detunings.
///
/// The global drive phase is gauged away so that `a_st` is real and
/// non-negative; the pump amplitude `c_st` carries the remaining relative
/// phase, which is what the squeezing phase of the linearized model reads.
#[derive(Debug, Clone)]
pub struct MeanFieldSolution {
    pub a_st: Complex64,
    pub c_st: Complex64,
    pub b_st: Complex64,
    /// Shifted cooling-cavity detuning: bare value minus `2 g_a Re b_st`.
    pub delta_a: f64,
    /// Shifted pump-cavity detuning: bare value minus `2 g_c Re b_st`.
    pub delta_c: f64,
    /// Largest scaled residual of the three stationarity relations.
    pub residual: f64,
    pub converged: bool,
    /// True when independently seeded runs converged to amplitudes that
    /// disagree beyond a relative tolerance, signalling bistability.
    pub multiple_solutions: bool,
}

/// Requested linearized couplings for [`invert_targets`]: effective
/// optomechanical coupling of the cooling cavity, parametric strength, and
/// squeezing phase.
#[derive(Debug, Clone, Copy)]
pub struct TargetCouplings {
    pub g_a: f64,
    pub chi: f64,
    pub phi: f64,
}

struct PicardRun {
    a: Complex64,
    c: Complex64,
    b: Complex64,
    residual: f64,
    converged: bool,
}

fn shifted_detunings(p: &FullModelParams, b: Complex64) -> (f64, f64) {
    (
        p.delta_a_bar - 2.0 * p.g_a * b.re,
        p.delta_c_bar - 2.0 * p.g_c * b.re,
    )
}

fn scaled_residual(p: &FullModelParams, a: Complex64, c: Complex64, b: Complex64) -> f64 {
    let (da, dc) = shifted_detunings(p, b);
    let la = Complex64::new(p.kappa_a, da) * a;
    let r1 = (-la + p.chi_0 * a.conj() * c + p.drive_a).norm();
    let s1 = 1f64.max(la.norm()).max(p.drive_a.norm());
    let lc = Complex64::new(p.kappa_c, dc) * c;
    let r2 = (-lc - 0.5 * p.chi_0 * a * a + p.drive_c).norm();
    let s2 = 1f64.max(lc.norm()).max(p.drive_c.norm());
    let lb = Complex64::new(0.5 * p.gamma, p.omega_m) * b;
    let force = Complex64::new(0.0, p.g_a * a.norm_sqr() + p.g_c * c.norm_sqr());
    let r3 = (-lb + force).norm();
    let s3 = 1f64.max(lb.norm());
    (r1 / s1).max(r2 / s2).max(r3 / s3)
}

fn picard(
    p: &FullModelParams,
    seed: (Complex64, Complex64, Complex64),
    tol: f64,
    max_iter: usize,
) -> PicardRun {
    let (mut a, mut c, mut b) = seed;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let (da, dc) = shifted_detunings(p, b);
        let c_next = (p.drive_c - 0.5 * p.chi_0 * a * a) / Complex64::new(p.kappa_c, dc);
        let den = p.kappa_a * p.kappa_a + da * da - p.chi_0 * p.chi_0 * c.norm_sqr();
        let a_next =
            (p.drive_a * Complex64::new(p.kappa_a, -da) + p.drive_a.conj() * p.chi_0 * c) / den;
        let b_next = Complex64::new(0.0, p.g_a * a.norm_sqr() + p.g_c * c.norm_sqr())
            / Complex64::new(0.5 * p.gamma, p.omega_m);
        a += DAMPING * (a_next - a);
        c += DAMPING * (c_next - c);
        b += DAMPING * (b_next - b);
        if !(a.is_finite() && c.is_finite() && b.is_finite()) {
            return PicardRun {
                a,
                c,
                b,
                residual: f64::INFINITY,
                converged: false,
            };
        }
        residual = scaled_residual(p, a, c, b);
        if residual < tol {
            return PicardRun {
                a,
                c,
                b,
                residual,
                converged: true,
            };
        }
    }
    PicardRun {
        a,
        c,
        b,
        residual,
        converged: false,
    }
}

/// Solve the three stationarity relations by damped fixed-point iteration
/// from four seeds (zero, the decoupled linear-cavity amplitudes, and the
/// latter scaled by 0.9 and 1.1). Returns the lowest-residual converged
/// solution, gauged so `a_st` is real and non-negative.
pub fn solve_mean_field(
    p: &FullModelParams,
    tol: f64,
    max_iter: usize,
) -> Result<MeanFieldSolution, MeanFieldError> {
    p.validate()?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(ModelError::OutOfRange {
            name: "tol",
            why: "must be > 0",
            value: tol,
        }
        .into());
    }
    if max_iter == 0 {
        return Err(ModelError::OutOfRange {
            name: "max_iter",
            why: "must be >= 1",
            value: 0.0,
        }
        .into());
    }

    let zero = Complex64::ZERO;
    let a_dec = p.drive_a * Complex64::new(p.kappa_a, -p.delta_a_bar)
        / (p.kappa_a * p.kappa_a + p.delta_a_bar * p.delta_a_bar);
    let c_dec = p.drive_c / Complex64::new(p.kappa_c, p.delta_c_bar);
    let seeds = [
        (zero, zero, zero),
        (a_dec, c_dec, zero),
        (0.9 * a_dec, 0.9 * c_dec, zero),
        (1.1 * a_dec, 1.1 * c_dec, zero),
    ];

    let runs: Vec<PicardRun> = seeds.iter().map(|s| picard(p, *s, tol, max_iter)).collect();
    let best = runs
        .iter()
        .filter(|r| r.converged)
        .min_by(|x, y| x.residual.total_cmp(&y.residual));
    let Some(best) = best else {
        let residual = runs
            .iter()
            .map(|r| r.residual)
            .fold(f64::INFINITY, f64::min);
        return Err(MeanFieldError::NotConverged { residual });
    };

    let scale_a = 1.0 + best.a.norm();
    let scale_c = 1.0 + best.c.norm();
    let multiple_solutions = runs.iter().filter(|r| r.converged).any(|r| {
        (r.a.norm() - best.a.norm()).abs() / scale_a > BRANCH_TOL
            || (r.c.norm() - best.c.norm()).abs() / scale_c > BRANCH_TOL
    });

    // Gauge: rotate the global drive phase out of the amplitudes. The
    // mechanical amplitude only depends on moduli, so it is untouched.
    let theta = best.a.arg();
    let a_st = Complex64::new(best.a.norm(), 0.0);
    let c_st = best.c * Complex64::from_polar(1.0, -2.0 * theta);
    let (delta_a, delta_c) = shifted_detunings(p, best.b);
    Ok(MeanFieldSolution {
        a_st,
        c_st,
        b_st: best.b,
        delta_a,
        delta_c,
        residual: best.residual,
        converged: true,
        multiple_solutions,
    })
}

/// Fluctuation parameters around a converged mean field: couplings scale
/// with the stationary moduli and the squeezing phase is half the pump
/// amplitude's argument.
pub fn linearize(
    p: &FullModelParams,
    mf: &MeanFieldSolution,
) -> Result<LinearizedParams, MeanFieldError> {
    if !mf.converged {
        return Err(MeanFieldError::Unconverged);
    }
    let lin = LinearizedParams {
        omega_m: p.omega_m,
        gamma: p.gamma,
        n_th: p.n_th,
        kappa_a: p.kappa_a,
        kappa_c: p.kappa_c,
        delta_a: mf.delta_a,
        delta_c: mf.delta_c,
        g_a: p.g_a * mf.a_st.norm(),
        g_c: p.g_c * mf.c_st.norm(),
        chi: p.chi_0 * mf.c_st.norm(),
        eps: p.chi_0 * mf.a_st.norm(),
        phi: wrap_half_turn(0.5 * mf.c_st.arg()),
    };
    lin.validate()?;
    Ok(lin)
}

/// Closed-form inversion: choose drive amplitudes so that the converged mean
/// field realizes the requested couplings (with `a_st` real), keeping every
/// other parameter of `p`. The returned parameter set is verified by solving
/// and comparing against the targets.
pub fn invert_targets(
    targets: &TargetCouplings,
    p: &FullModelParams,
) -> Result<FullModelParams, MeanFieldError> {
    p.validate()?;
    for (name, value) in [("target g_a", targets.g_a), ("target chi", targets.chi)] {
        if !(value.is_finite() && value >= 0.0) {
            return Err(ModelError::OutOfRange {
                name,
                why: "must be finite and >= 0",
                value,
            }
            .into());
        }
    }
    let a_mag = if targets.g_a == 0.0 {
        0.0
    } else {
        if p.g_a == 0.0 {
            return Err(ModelError::OutOfRange {
                name: "g_a",
                why: "single-photon coupling must be nonzero to realize a finite target",
                value: 0.0,
            }
            .into());
        }
        targets.g_a / p.g_a
    };
    let c_st = if targets.chi == 0.0 {
        Complex64::ZERO
    } else {
        if p.chi_0 == 0.0 {
            return Err(ModelError::OutOfRange {
                name: "chi_0",
                why: "nonlinearity must be nonzero to realize a finite target",
                value: 0.0,
            }
            .into());
        }
        Complex64::from_polar(targets.chi / p.chi_0, 2.0 * targets.phi)
    };
    let b_st = Complex64::new(0.0, p.g_a * a_mag * a_mag + p.g_c * c_st.norm_sqr())
        / Complex64::new(0.5 * p.gamma, p.omega_m);
    let (da, dc) = shifted_detunings(p, b_st);
    let drive_a = Complex64::new(p.kappa_a, da) * a_mag - p.chi_0 * a_mag * c_st;
    let drive_c = Complex64::new(p.kappa_c, dc) * c_st + 0.5 * p.chi_0 * a_mag * a_mag;

    let mut inverted = p.clone();
    inverted.drive_a = drive_a;
    inverted.drive_c = drive_c;

    let mf = solve_mean_field(&inverted, 1e-12, 20_000)?;
    let g_a_rec = p.g_a * mf.a_st.norm();
    let chi_rec = p.chi_0 * mf.c_st.norm();
    let ok = (g_a_rec - targets.g_a).abs() <= 1e-8 * (1.0 + targets.g_a)
        && (chi_rec - targets.chi).abs() <= 1e-8 * (1.0 + targets.chi);
    if !ok {
        return Err(MeanFieldError::NotConverged {
            residual: (g_a_rec - targets.g_a)
                .abs()
                .max((chi_rec - targets.chi).abs()),
        });
    }
    Ok(inverted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::FRAC_PI_2;

    fn base_full() -> FullModelParams {
        FullModelParams {
            omega_m: 1.0,
            gamma: 0.25e-6,
            n_th: 1000.0,
            kappa_a: 1.0,
            kappa_c: 500.0,
            delta_a_bar: 1.0,
            delta_c_bar: 0.0,
            g_a: 1e-6,
            g_c: 1e-6,
            chi_0: 1e-4,
            drive_a: Complex64::ZERO,
            drive_c: Complex64::ZERO,
        }
    }

    #[test]
    fn undriven_system_is_empty() {
        let mf = solve_mean_field(&base_full(), 1e-12, 100).unwrap();
        assert_eq!(mf.a_st, Complex64::ZERO);
        assert_eq!(mf.c_st, Complex64::ZERO);
        assert_eq!(mf.b_st, Complex64::ZERO);
        assert!(mf.converged);
        assert!(!mf.multiple_solutions);
        assert_eq!(mf.delta_a, 1.0);
    }

    #[test]
    fn decoupled_cavities_match_closed_form() {
        let mut p = base_full();
        p.g_a = 0.0;
        p.g_c = 0.0;
        p.chi_0 = 0.0;
        p.kappa_a = 2.0;
        p.delta_a_bar = 1.5;
        p.kappa_c = 3.0;
        p.delta_c_bar = -0.5;
        p.drive_a = Complex64::new(3.0, 4.0);
        p.drive_c = Complex64::new(-1.0, 2.0);
        let mf = solve_mean_field(&p, 1e-13, 10_000).unwrap();
        let a_exact = p.drive_a / Complex64::new(2.0, 1.5);
        let c_exact = p.drive_c / Complex64::new(3.0, -0.5);
        let theta = a_exact.arg();
        assert_relative_eq!(mf.a_st.re, a_exact.norm(), max_relative = 1e-12);
        assert_abs_diff_eq!(mf.a_st.im, 0.0, epsilon = 1e-14);
        let c_gauged = c_exact * Complex64::from_polar(1.0, -2.0 * theta);
        assert_relative_eq!(mf.c_st.re, c_gauged.re, max_relative = 1e-12);
        assert_relative_eq!(mf.c_st.im, c_gauged.im, max_relative = 1e-12);
        assert_eq!(mf.b_st, Complex64::ZERO);
    }

    /// With no cooling-cavity drive the pump settles at the shifted-detuning
    /// linear response and the mechanics at the radiation-pressure offset.
    #[test]
    fn pump_only_drive() {
        let mut p = base_full();
        p.kappa_c = 2.0;
        p.delta_a_bar = 0.5;
        p.delta_c_bar = 1.5;
        p.g_c = 2e-6;
        p.drive_c = Complex64::new(100.0, 0.0);
        let mf = solve_mean_field(&p, 1e-12, 10_000).unwrap();
        assert_eq!(mf.a_st, Complex64::ZERO);
        assert_relative_eq!(mf.c_st.re, 32.000000196578895, max_relative = 1e-9);
        assert_relative_eq!(mf.c_st.im, -23.99999994263417, max_relative = 1e-9);
        assert_relative_eq!(mf.b_st.re, 0.003200000019430829, max_relative = 1e-6);
        let c_lin = p.drive_c / Complex64::new(p.kappa_c, mf.delta_c);
        assert_relative_eq!(mf.c_st.norm(), c_lin.norm(), max_relative = 1e-12);
    }

    #[test]
    fn inversion_reproduces_reference_drives() {
        let mut p = base_full();
        // Bare detunings chosen so the displacement shift lands the
        // effective values on (1, 0).
        p.delta_a_bar = 1.0202;
        p.delta_c_bar = 0.0202;
        let targets = TargetCouplings {
            g_a: 0.1,
            chi: 1.0,
            phi: FRAC_PI_2,
        };
        let inv = invert_targets(&targets, &p).unwrap();
        assert_relative_eq!(inv.drive_a.re, 2.0e5, max_relative = 1e-10);
        assert_relative_eq!(inv.drive_a.im, 1.0e5, max_relative = 1e-10);
        assert_relative_eq!(inv.drive_c.re, -4.5e6, max_relative = 1e-10);
        assert_abs_diff_eq!(inv.drive_c.im, 0.0, epsilon = 1e-4);

        let mf = solve_mean_field(&inv, 1e-12, 10_000).unwrap();
        assert!(!mf.multiple_solutions);
        let lin = linearize(&inv, &mf).unwrap();
        assert_relative_eq!(lin.g_a, 0.1, max_relative = 1e-9);
        assert_relative_eq!(lin.chi, 1.0, max_relative = 1e-9);
        assert_relative_eq!(lin.phi, FRAC_PI_2, max_relative = 1e-8);
        assert_relative_eq!(lin.delta_a, 1.0, max_relative = 1e-8);
        assert_abs_diff_eq!(lin.delta_c, 0.0, epsilon = 1e-8);
        assert_relative_eq!(lin.eps, 10.0, max_relative = 1e-9);
        assert_relative_eq!(lin.g_c, 1e-2, max_relative = 1e-9);
    }

    #[test]
    fn inversion_trivial_and_guard_paths() {
        let p = base_full();
        let zero = TargetCouplings {
            g_a: 0.0,
            chi: 0.0,
            phi: 0.0,
        };
        let inv = invert_targets(&zero, &p).unwrap();
        assert_eq!(inv.drive_a, Complex64::ZERO);
        assert_eq!(inv.drive_c, Complex64::ZERO);

        let mut no_chi = base_full();
        no_chi.chi_0 = 0.0;
        let t = TargetCouplings {
            g_a: 0.0,
            chi: 0.5,
            phi: 0.0,
        };
        assert!(invert_targets(&t, &no_chi).is_err());
    }

    #[test]
    fn not_converged_and_unconverged_guards() {
        let mut p = base_full();
        p.delta_a_bar = 1.0202;
        p.delta_c_bar = 0.0202;
        p.drive_a = Complex64::new(2.0e5, 1.0e5);
        p.drive_c = Complex64::new(-4.5e6, 0.0);
        let err = solve_mean_field(&p, 1e-12, 2).unwrap_err();
        match err {
            MeanFieldError::NotConverged { residual } => assert!(residual.is_finite()),
            other => panic!("expected NotConverged, got {other:?}"),
        }

        let mf = MeanFieldSolution {
            a_st: Complex64::ZERO,
            c_st: Complex64::ZERO,
            b_st: Complex64::ZERO,
            delta_a: 1.0,
            delta_c: 0.0,
            residual: 1.0,
            converged: false,
            multiple_solutions: false,
        };
        assert!(matches!(
            linearize(&p, &mf),
            Err(MeanFieldError::Unconverged)
        ));
    }

    /// Ramping the pump drive towards the parametric threshold keeps the
    /// solver convergent and the recovered strength below threshold.
    #[test]
    fn near_threshold_convergence() {
        for scale in [0.5, 0.9, 0.99] {
            let mut p = base_full();
            p.drive_a = Complex64::new(1.0, 0.0);
            let chi_target = scale * 2f64.sqrt();
            p.drive_c = Complex64::new(p.kappa_c * chi_target / p.chi_0, 0.0);
            let mf = solve_mean_field(&p, 1e-12, 10_000).unwrap();
            let lin = linearize(&p, &mf).unwrap();
            assert_relative_eq!(lin.chi, chi_target, max_relative = 1e-3);
            assert!(lin.chi < p.kappa_a.hypot(lin.delta_a));
        }
    }
}

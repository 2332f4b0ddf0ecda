//! Exact stationary second moments of a stable linear system, via a direct
//! Bartels-Stewart solve of `A V + V A^T + D = 0`, plus resolvent-based
//! numeric spectra used to cross-check every closed-form spectrum.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::model::{max_real_eigenvalue, LinearSystem, ModeLabel, Quadrature, STABILITY_MARGIN};
use crate::spectra::{SpectrumKind, SpectrumResult};

/// Relative residual bound accepted for a Lyapunov solve.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum LyapunovError {
    #[error("drift matrix is not strictly stable (max real eigenvalue {max_real:e})")]
    Unstable { max_real: f64 },
    #[error("Lyapunov solve ill-conditioned (relative residual {residual:e})")]
    IllConditioned { residual: f64 },
}

/// Stationary covariance with its backward-error residual and the row labels
/// copied from the originating system.
#[derive(Debug, Clone)]
pub struct SteadyCovariance {
    pub matrix: DMatrix<f64>,
    pub ordering: Vec<(ModeLabel, Quadrature)>,
    /// `max |A V + V A^T + D|` relative to `max |D|`.
    pub residual: f64,
}

/// Which spectrum of the system to evaluate: the auto-spectrum of one rotated
/// quadrature `cos(angle) X + sin(angle) Y`, or the ordering-symmetrized cross
/// spectrum between two of them.
#[derive(Debug, Clone, Copy)]
pub enum SpectrumSelection {
    Auto {
        mode: ModeLabel,
        angle: f64,
    },
    Cross {
        mode_u: ModeLabel,
        angle_u: f64,
        mode_v: ModeLabel,
        angle_v: f64,
    },
}

/// Solve `A V + V A^T + D = 0` for the stationary covariance.
pub fn steady_covariance(sys: &LinearSystem) -> Result<SteadyCovariance, LyapunovError> {
    let max_real = max_real_eigenvalue(&sys.drift);
    if max_real >= -STABILITY_MARGIN {
        return Err(LyapunovError::Unstable { max_real });
    }

    let (q, t) = sys.drift.clone().schur().unpack();
    // Rotate into the Schur basis: T W + W T^T = -Q^T D Q.
    let c = -(q.transpose() * &sys.diffusion * &q);
    let w = solve_quasi_triangular(&t, &c)?;
    let mut v = &q * w * q.transpose();
    // The exact solution is symmetric; fold rounding noise back.
    let vt = v.transpose();
    v = (v + vt) * 0.5;

    let resid = &sys.drift * &v + &v * sys.drift.transpose() + &sys.diffusion;
    let d_scale = sys.diffusion.amax().max(f64::MIN_POSITIVE);
    let residual = resid.amax() / d_scale;
    if residual > RESIDUAL_TOL {
        return Err(LyapunovError::IllConditioned { residual });
    }
    Ok(SteadyCovariance {
        matrix: v,
        ordering: sys.ordering.clone(),
        residual,
    })
}

/// Back-substitution for `T W + W T^T = C` with `T` upper quasi-triangular
/// (real Schur form). Processes trailing block-columns first; each unknown
/// block is at most 2x2 and is solved through its (at most 4x4) Kronecker
/// system.
fn solve_quasi_triangular(
    t: &DMatrix<f64>,
    c: &DMatrix<f64>,
) -> Result<DMatrix<f64>, LyapunovError> {
    let n = t.nrows();
    // Block partition along the diagonal: a nonzero subdiagonal entry marks a
    // 2x2 block (complex eigenvalue pair).
    let mut blocks = Vec::new();
    let mut k = 0;
    while k < n {
        let size = if k + 1 < n && t[(k + 1, k)] != 0.0 {
            2
        } else {
            1
        };
        blocks.push((k, size));
        k += size;
    }

    let mut w = DMatrix::zeros(n, n);
    for &(j0, q) in blocks.iter().rev() {
        for &(i0, p) in blocks.iter().rev() {
            // rhs = C_IJ - sum_{K>I} T_IK W_KJ - sum_{L>J} W_IL T_JL^T
            let mut rhs = c.view((i0, j0), (p, q)).clone_owned();
            if i0 + p < n {
                let t_right = t.view((i0, i0 + p), (p, n - i0 - p));
                let w_below = w.view((i0 + p, j0), (n - i0 - p, q));
                rhs -= t_right * w_below;
            }
            if j0 + q < n {
                let w_right = w.view((i0, j0 + q), (p, n - j0 - q));
                let t_j_right = t.view((j0, j0 + q), (q, n - j0 - q));
                rhs -= w_right * t_j_right.transpose();
            }

            let tii = t.view((i0, i0), (p, p));
            let tjj = t.view((j0, j0), (q, q));
            // Kronecker system (I_q (x) T_II + T_JJ (x) I_p) vec(W_IJ) = vec(rhs),
            // column-major vec.
            let m = p * q;
            let mut kron = DMatrix::zeros(m, m);
            for a in 0..p {
                for b in 0..p {
                    for col in 0..q {
                        kron[(col * p + a, col * p + b)] += tii[(a, b)];
                    }
                }
            }
            for a in 0..q {
                for b in 0..q {
                    for row in 0..p {
                        kron[(a * p + row, b * p + row)] += tjj[(a, b)];
                    }
                }
            }
            let vec_rhs = DVector::from_fn(m, |idx, _| rhs[(idx % p, idx / p)]);
            let sol = kron
                .lu()
                .solve(&vec_rhs)
                .ok_or(LyapunovError::IllConditioned {
                    residual: f64::INFINITY,
                })?;
            for col in 0..q {
                for row in 0..p {
                    w[(i0 + row, j0 + col)] = sol[col * p + row];
                }
            }
        }
    }
    Ok(w)
}

/// Mean phonon number of the mechanical mode read from a covariance matrix.
pub fn phonon_number(cov: &SteadyCovariance) -> f64 {
    let o = cov
        .ordering
        .iter()
        .position(|&(m, q)| m == ModeLabel::Mechanical && q == Quadrature::X)
        .expect("system has no mechanical mode");
    (cov.matrix[(o, o)] + cov.matrix[(o + 1, o + 1)] - 2.0) / 4.0
}

fn direction(sys: &LinearSystem, mode: ModeLabel, angle: f64) -> DVector<f64> {
    let o = sys
        .mode_offset(mode)
        .expect("selected mode not present in system");
    let mut u = DVector::zeros(sys.dim());
    u[o] = angle.cos();
    u[o + 1] = angle.sin();
    u
}

/// Stationary spectrum of the selected quadrature(s) from the resolvent of
/// the drift matrix, with the ordered-correlation correction `D + iJ`.
///
/// Auto-spectra return `Re S_uu(omega)`; cross selections return the
/// pair-ordering symmetrization `S_uv + S_vu = 2 Re S_uv(omega)`, matching the
/// closed-form cross spectrum's normalization.
pub fn numeric_spectrum(
    sys: &LinearSystem,
    selection: SpectrumSelection,
    omega_grid: &[f64],
) -> Result<SpectrumResult, LyapunovError> {
    let max_real = max_real_eigenvalue(&sys.drift);
    if max_real >= -STABILITY_MARGIN {
        return Err(LyapunovError::Unstable { max_real });
    }
    let n = sys.dim();
    let a: DMatrix<Complex64> = sys.drift.map(|x| Complex64::new(x, 0.0));
    let c: DMatrix<Complex64> = DMatrix::from_fn(n, n, |i, j| {
        Complex64::new(sys.diffusion[(i, j)], sys.commutator[(i, j)])
    });

    let (u, v, kind) = match selection {
        SpectrumSelection::Auto { mode, angle } => {
            let u = direction(sys, mode, angle);
            (u.clone(), u, SpectrumKind::NumericAuto)
        }
        SpectrumSelection::Cross {
            mode_u,
            angle_u,
            mode_v,
            angle_v,
        } => (
            direction(sys, mode_u, angle_u),
            direction(sys, mode_v, angle_v),
            SpectrumKind::NumericCross,
        ),
    };
    let uc: DVector<Complex64> = u.map(|x| Complex64::new(x, 0.0));
    let vc: DVector<Complex64> = v.map(|x| Complex64::new(x, 0.0));

    let eye: DMatrix<Complex64> = DMatrix::identity(n, n);
    let mut values = Vec::with_capacity(omega_grid.len());
    for &omega in omega_grid {
        let iw = Complex64::new(0.0, omega);
        // S_uv = u^T (A + iw)^-1 C (A^T - iw)^-1 v, evaluated right-to-left.
        let m_right = a.transpose() - &eye * iw;
        let r = m_right
            .lu()
            .solve(&vc)
            .ok_or(LyapunovError::IllConditioned {
                residual: f64::INFINITY,
            })?;
        let cr = &c * r;
        let m_left = &a + &eye * iw;
        let s = m_left
            .lu()
            .solve(&cr)
            .ok_or(LyapunovError::IllConditioned {
                residual: f64::INFINITY,
            })?;
        let s_uv: Complex64 = uc.iter().zip(s.iter()).map(|(a, b)| a * b).sum();
        values.push(match selection {
            SpectrumSelection::Auto { .. } => s_uv.re,
            SpectrumSelection::Cross { .. } => 2.0 * s_uv.re,
        });
    }
    Ok(SpectrumResult {
        omega_grid: omega_grid.to_vec(),
        values,
        kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_internal_system;
    use crate::params::LinearizedParams;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn base() -> LinearizedParams {
        LinearizedParams::reference()
    }

    #[test]
    fn vacuum_and_thermal_fixed_points() {
        let mut p = base();
        p.g_a = 0.0;
        p.n_th = 0.0;
        let cov = steady_covariance(&build_internal_system(&p, false).unwrap()).unwrap();
        assert_abs_diff_eq!(cov.matrix, DMatrix::identity(4, 4), epsilon = 1e-12);

        p.n_th = 1000.0;
        let cov = steady_covariance(&build_internal_system(&p, false).unwrap()).unwrap();
        assert_relative_eq!(cov.matrix[(2, 2)], 2001.0, epsilon = 1e-10);
        assert_relative_eq!(cov.matrix[(3, 3)], 2001.0, epsilon = 1e-10);
        assert_relative_eq!(phonon_number(&cov), 1000.0, epsilon = 1e-10);
    }

    #[test]
    fn squeezed_quadrature_variance() {
        for r in [0.1, 0.5, 0.9] {
            let mut p = base();
            p.g_a = 0.0;
            p.delta_a = 0.0;
            p.phi = std::f64::consts::FRAC_PI_2;
            p.chi = r * p.kappa_a;
            let cov = steady_covariance(&build_internal_system(&p, false).unwrap()).unwrap();
            assert_relative_eq!(cov.matrix[(0, 0)], 1.0 / (1.0 + r), epsilon = 1e-10);
        }
    }

    /// Frozen reference-solution values for the workhorse configuration.
    #[test]
    fn reference_occupancies() {
        let mut p = base();
        let cov = steady_covariance(&build_internal_system(&p, false).unwrap()).unwrap();
        assert_relative_eq!(
            phonon_number(&cov),
            0.2708491172811691,
            max_relative = 1e-12
        );

        p.chi = 1.0;
        p.phi = std::f64::consts::FRAC_PI_2;
        let cov = steady_covariance(&build_internal_system(&p, false).unwrap()).unwrap();
        assert_relative_eq!(
            phonon_number(&cov),
            0.017834477574727114,
            max_relative = 1e-12
        );
    }

    #[test]
    fn refuses_unstable_drift() {
        let mut p = base();
        p.g_a = 0.0;
        p.chi = 1.01 * p.kappa_a.hypot(p.delta_a);
        let sys = build_internal_system(&p, false).unwrap();
        assert!(matches!(
            steady_covariance(&sys),
            Err(LyapunovError::Unstable { .. })
        ));
        assert!(matches!(
            numeric_spectrum(
                &sys,
                SpectrumSelection::Auto {
                    mode: ModeLabel::CoolingCavity,
                    angle: 0.0
                },
                &[0.0]
            ),
            Err(LyapunovError::Unstable { .. })
        ));
    }

    #[test]
    fn six_mode_solve_residual() {
        let mut p = base();
        p.chi = 1.0;
        p.phi = std::f64::consts::FRAC_PI_2;
        p.g_c = 0.01;
        p.eps = 10.0;
        p.kappa_a = 1.2; // keep clear of the renormalized threshold
        let sys = build_internal_system(&p, true).unwrap();
        let cov = steady_covariance(&sys).unwrap();
        assert!(cov.residual <= RESIDUAL_TOL);
        assert!(phonon_number(&cov) > 0.0);
    }

    #[test]
    fn lorentzian_peak_of_bare_cavity() {
        let mut p = base();
        p.g_a = 0.0;
        p.kappa_a = 1.3;
        p.delta_a = 0.7;
        let sys = build_internal_system(&p, false).unwrap();
        let grid = [0.7, 0.0, -1.0];
        let s = numeric_spectrum(
            &sys,
            SpectrumSelection::Auto {
                mode: ModeLabel::CoolingCavity,
                angle: 0.0,
            },
            &grid,
        )
        .unwrap();
        for (i, &w) in grid.iter().enumerate() {
            let expect = 2.0 * p.kappa_a / (p.kappa_a.powi(2) + (p.delta_a - w).powi(2));
            assert_relative_eq!(s.values[i], expect, max_relative = 1e-12);
        }
        // peak value 2/kappa at omega = delta
        assert_relative_eq!(s.values[0], 2.0 / 1.3, max_relative = 1e-12);
    }

    /// The ordered-spectrum trapezoid integral reproduces the covariance
    /// diagonal of the mechanical mode (its spectrum decays fast enough for a
    /// finite window; the cavity tails fall off only as 1/omega^2).
    #[test]
    fn mechanical_spectrum_integrates_to_variance() {
        let mut p = base();
        p.kappa_a = 1.3;
        p.delta_a = 0.9;
        p.chi = 0.5;
        p.phi = 0.77;
        p.g_a = 0.12;
        // Broad mechanical line (width ~ gamma + Gamma_opt) so the uniform
        // grid resolves the peaks at +-omega_m.
        p.gamma = 0.1;
        p.n_th = 5.0;
        let sys = build_internal_system(&p, false).unwrap();
        let cov = steady_covariance(&sys).unwrap();
        let n = 12_001;
        let (lo, hi) = (-30.0, 30.0);
        let grid: Vec<f64> = (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect();
        let s = numeric_spectrum(
            &sys,
            SpectrumSelection::Auto {
                mode: ModeLabel::Mechanical,
                angle: 0.0,
            },
            &grid,
        )
        .unwrap();
        let h = (hi - lo) / (n - 1) as f64;
        let mut integral = 0.0;
        for i in 0..n - 1 {
            integral += 0.5 * (s.values[i] + s.values[i + 1]) * h;
        }
        integral /= 2.0 * std::f64::consts::PI;
        let mech_x = cov.matrix[(2, 2)];
        assert_relative_eq!(integral, mech_x, max_relative = 0.01);
    }
}

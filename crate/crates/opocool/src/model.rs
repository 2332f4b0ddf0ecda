//! Quadrature-space assembly of the linear models: drift, diffusion and
//! commutator matrices plus stability verdicts.
//!
//! Mode ordering is (cooling cavity, [pump cavity,] mechanics), two rows per
//! mode in (X, Y) order, so the mechanical block always sits last.

use nalgebra::DMatrix;

use crate::params::{InjectedModelParams, LinearizedParams, ModelError};

/// Margin used to classify a drift matrix as effectively unstable: eigenvalues
/// with real part above `-STABILITY_MARGIN` produce steady covariances too
/// large/ill-conditioned to be meaningful (OPO threshold).
pub const STABILITY_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeLabel {
    CoolingCavity,
    PumpCavity,
    Mechanical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    X,
    Y,
}

/// A linear quadrature model `dR = A R dt + noise` with stationary input
/// correlations encoded by the (symmetric) diffusion matrix `D` and the
/// antisymmetric commutator correction `J` (so that ordered input
/// correlations are `(D + iJ)/2` in the convention used by the spectra).
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub drift: DMatrix<f64>,
    pub diffusion: DMatrix<f64>,
    /// Commutator matrix: per-mode blocks `s * [[0, 1], [-1, 0]]` with `s`
    /// the input noise strength (2*kappa for a cavity, gamma for mechanics).
    pub commutator: DMatrix<f64>,
    /// Row labels, one `(mode, quadrature)` pair per matrix row.
    pub ordering: Vec<(ModeLabel, Quadrature)>,
}

impl LinearSystem {
    pub fn dim(&self) -> usize {
        self.drift.nrows()
    }

    /// Row index of the X quadrature of the first mode with this label.
    pub fn mode_offset(&self, label: ModeLabel) -> Option<usize> {
        self.ordering
            .iter()
            .position(|&(m, q)| m == label && q == Quadrature::X)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StabilityReport {
    pub stable: bool,
    pub max_real_eigenvalue: f64,
    /// OPO threshold ratio `R = chi / sqrt(kappa_a^2 + delta_a^2)`.
    pub opo_threshold_ratio: f64,
}

/// Largest real part over the eigenvalues of a real matrix.
pub fn max_real_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn mode_list(labels_scales: &[(ModeLabel, f64)]) -> (Vec<(ModeLabel, Quadrature)>, DMatrix<f64>) {
    let n = 2 * labels_scales.len();
    let mut ordering = Vec::with_capacity(n);
    let mut j = DMatrix::zeros(n, n);
    for (k, &(label, scale)) in labels_scales.iter().enumerate() {
        ordering.push((label, Quadrature::X));
        ordering.push((label, Quadrature::Y));
        j[(2 * k, 2 * k + 1)] = scale;
        j[(2 * k + 1, 2 * k)] = -scale;
    }
    (ordering, j)
}

/// Assemble the internal-squeezing model. With `include_pump = false` the pump
/// mode is adiabatically absent and the system is the reduced 4x4 model; with
/// `include_pump = true` the explicit pump mode enters (6x6), coupled to the
/// cooling mode with strength `eps` and to the mechanics with `g_c`.
pub fn build_internal_system(
    p: &LinearizedParams,
    include_pump: bool,
) -> Result<LinearSystem, ModelError> {
    p.validate()?;
    let (s2, c2) = (2.0 * p.phi).sin_cos();
    let therm = p.gamma * (2.0 * p.n_th + 1.0);

    if !include_pump {
        let mut a = DMatrix::zeros(4, 4);
        a[(0, 0)] = -p.kappa_a + p.chi * c2;
        a[(0, 1)] = p.delta_a + p.chi * s2;
        a[(1, 0)] = -p.delta_a + p.chi * s2;
        a[(1, 1)] = -p.kappa_a - p.chi * c2;
        a[(1, 2)] = 2.0 * p.g_a;
        a[(2, 2)] = -p.gamma / 2.0;
        a[(2, 3)] = p.omega_m;
        a[(3, 2)] = -p.omega_m;
        a[(3, 3)] = -p.gamma / 2.0;
        a[(3, 0)] = 2.0 * p.g_a;

        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            2.0 * p.kappa_a,
            2.0 * p.kappa_a,
            therm,
            therm,
        ]));
        let (ordering, j) = mode_list(&[
            (ModeLabel::CoolingCavity, 2.0 * p.kappa_a),
            (ModeLabel::Mechanical, p.gamma),
        ]);
        return Ok(LinearSystem {
            drift: a,
            diffusion: d,
            commutator: j,
            ordering,
        });
    }

    let mut a = DMatrix::zeros(6, 6);
    // cooling cavity block, rows 0-1
    a[(0, 0)] = -p.kappa_a + p.chi * c2;
    a[(0, 1)] = p.delta_a + p.chi * s2;
    a[(1, 0)] = -p.delta_a + p.chi * s2;
    a[(1, 1)] = -p.kappa_a - p.chi * c2;
    a[(1, 4)] = 2.0 * p.g_a;
    // pump block, rows 2-3
    a[(2, 2)] = -p.kappa_c;
    a[(2, 3)] = p.delta_c;
    a[(3, 2)] = -p.delta_c;
    a[(3, 3)] = -p.kappa_c;
    // cavity-cavity coupling
    a[(0, 2)] = p.eps;
    a[(1, 3)] = p.eps;
    a[(2, 0)] = -p.eps;
    a[(3, 1)] = -p.eps;
    // pump <- mechanics (phase-rotated by the squeezing phase)
    a[(2, 4)] = -2.0 * p.g_c * s2;
    a[(3, 4)] = 2.0 * p.g_c * c2;
    // mechanical block, rows 4-5
    a[(4, 4)] = -p.gamma / 2.0;
    a[(4, 5)] = p.omega_m;
    a[(5, 4)] = -p.omega_m;
    a[(5, 5)] = -p.gamma / 2.0;
    a[(5, 0)] = 2.0 * p.g_a;
    a[(5, 2)] = 2.0 * p.g_c * c2;
    a[(5, 3)] = 2.0 * p.g_c * s2;

    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        2.0 * p.kappa_a,
        2.0 * p.kappa_a,
        2.0 * p.kappa_c,
        2.0 * p.kappa_c,
        therm,
        therm,
    ]));
    let (ordering, j) = mode_list(&[
        (ModeLabel::CoolingCavity, 2.0 * p.kappa_a),
        (ModeLabel::PumpCavity, 2.0 * p.kappa_c),
        (ModeLabel::Mechanical, p.gamma),
    ]);
    Ok(LinearSystem {
        drift: a,
        diffusion: d,
        commutator: j,
        ordering,
    })
}

/// Assemble the squeezed-input model (4x4). The drift is the plain detuned
/// cavity + mechanics; all squeezing lives in the optical diffusion block.
pub fn build_injected_system(p: &InjectedModelParams) -> Result<LinearSystem, ModelError> {
    p.validate()?;
    let mut a = DMatrix::zeros(4, 4);
    a[(0, 0)] = -p.kappa_a;
    a[(0, 1)] = p.delta_a_s;
    a[(1, 0)] = -p.delta_a_s;
    a[(1, 1)] = -p.kappa_a;
    a[(1, 2)] = 2.0 * p.g_a_s;
    a[(2, 2)] = -p.gamma / 2.0;
    a[(2, 3)] = p.omega_m;
    a[(3, 2)] = -p.omega_m;
    a[(3, 3)] = -p.gamma / 2.0;
    a[(3, 0)] = 2.0 * p.g_a_s;

    let (c2, s2) = ((2.0 * p.phi_s).cos(), (2.0 * p.phi_s).sin());
    let therm = p.gamma * (2.0 * p.n_th + 1.0);
    let mut d = DMatrix::zeros(4, 4);
    d[(0, 0)] = 2.0 * p.kappa_a * (1.0 + 2.0 * p.n_s + 2.0 * p.m_s * c2);
    d[(1, 1)] = 2.0 * p.kappa_a * (1.0 + 2.0 * p.n_s - 2.0 * p.m_s * c2);
    d[(0, 1)] = -4.0 * p.kappa_a * p.m_s * s2;
    d[(1, 0)] = d[(0, 1)];
    d[(2, 2)] = therm;
    d[(3, 3)] = therm;

    let (ordering, j) = mode_list(&[
        (ModeLabel::CoolingCavity, 2.0 * p.kappa_a),
        (ModeLabel::Mechanical, p.gamma),
    ]);
    Ok(LinearSystem {
        drift: a,
        diffusion: d,
        commutator: j,
        ordering,
    })
}

/// Stability verdict for an assembled system, with the OPO threshold ratio of
/// the originating parameters attached for context.
pub fn stability(sys: &LinearSystem, p: &LinearizedParams) -> StabilityReport {
    let max_re = max_real_eigenvalue(&sys.drift);
    StabilityReport {
        stable: max_re < 0.0,
        max_real_eigenvalue: max_re,
        opo_threshold_ratio: p.chi / p.kappa_a.hypot(p.delta_a),
    }
}

/// Compensate the static back-action of the pump mode on the cooling cavity.
///
/// Returns a copy whose `(kappa_a, delta_a)` are shifted such that building
/// the *full* model with the returned values yields effective reduced dynamics
/// matching the original `(kappa_a, delta_a)` to first order in
/// `eps^2 / (kappa_c^2 + delta_c^2)`.
pub fn renormalize_for_pump(p: &LinearizedParams) -> Result<LinearizedParams, ModelError> {
    p.validate()?;
    let denom = p.kappa_c * p.kappa_c + p.delta_c * p.delta_c;
    let shift = p.eps * p.eps / denom;
    let kappa_a = p.kappa_a - p.kappa_c * shift;
    if kappa_a <= 0.0 {
        return Err(ModelError::LinewidthCollapse { kappa_a });
    }
    let mut out = p.clone();
    out.kappa_a = kappa_a;
    out.delta_a = p.delta_a + p.delta_c * shift;
    Ok(out)
}

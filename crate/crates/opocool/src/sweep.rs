//! Grid sweeps and constrained occupancy minimization over a string-keyed
//! parameter bag, shared by the library callers and the command-line front
//! end. Every grid point produces a record — failures are statuses, never
//! panics — and output order is row-major over the axes regardless of how
//! the work is scheduled.

use std::collections::BTreeMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::lyapunov::{phonon_number, steady_covariance, LyapunovError};
use crate::model::{
    build_injected_system, build_internal_system, max_real_eigenvalue, LinearSystem,
};
use crate::optimize::{minimize, mix_seed, MinimizeOptions};
use crate::params::{wrap_half_turn, InjectedModelParams, LinearizedParams, ModelError};
use crate::spectra::{cooling_injected, cooling_perturbative};

/// Squeezing-ratio coordinates are clamped below threshold so that Lyapunov
/// solves stay well conditioned on sweep grids that nominally touch R = 1.
pub const R_CLAMP: f64 = 0.999;

const PENALTY_INVALID: f64 = 1e12;
const PENALTY_SOLVE: f64 = 1e10;
const PENALTY_UNSTABLE: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Two-mode model: cavity with internal parametric gain + mechanics.
    InternalReduced,
    /// Three-mode model with the pump cavity kept explicit.
    InternalFull,
    /// Cavity driven by externally squeezed input noise.
    Injected,
    /// Plain sideband-cooling baseline (no squeezing of any kind).
    NoSqueezing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Perturbative,
    Lyapunov,
    Both,
}

impl Method {
    fn wants_pert(self) -> bool {
        matches!(self, Method::Perturbative | Method::Both)
    }
    fn wants_lyap(self) -> bool {
        matches!(self, Method::Lyapunov | Method::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisScale {
    Linear,
    Log,
}

#[derive(Debug, Clone)]
pub struct Axis {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub scale: AxisScale,
}

impl Axis {
    pub fn value(&self, index: usize) -> f64 {
        let t = index as f64 / (self.count - 1) as f64;
        match self.scale {
            AxisScale::Linear => self.start + t * (self.stop - self.start),
            AxisScale::Log => self.start * (self.stop / self.start).powf(t),
        }
    }
}

/// One free parameter of an inner minimization, with box bounds.
#[derive(Debug, Clone)]
pub struct FreeParam {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub model: ModelKind,
    pub method: Method,
    /// Fixed parameter overrides applied on top of the defaults.
    pub fixed: Vec<(String, f64)>,
    /// One or two swept axes; the last axis varies fastest in the output.
    pub axes: Vec<Axis>,
    /// When nonempty, each grid point minimizes the exact occupancy over
    /// these parameters before recording.
    pub minimize_over: Vec<FreeParam>,
    /// Base seed for the per-point minimizer start sampling.
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordStatus {
    Ok,
    Unstable,
    Heating,
    NotConverged,
}

impl RecordStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RecordStatus::Ok => "ok",
            RecordStatus::Unstable => "unstable",
            RecordStatus::Heating => "heating",
            RecordStatus::NotConverged => "not_converged",
        }
    }
}

/// Everything recorded at one grid point. Absent values mean the quantity is
/// undefined there (heating, instability, or a method that was not run).
#[derive(Debug, Clone)]
pub struct SweepRecord {
    /// Swept-axis values, outer axis first.
    pub coordinates: Vec<f64>,
    pub n_st_pert: Option<f64>,
    pub n_st_lyap: Option<f64>,
    pub a_plus: Option<f64>,
    pub a_minus: Option<f64>,
    pub gamma_opt: Option<f64>,
    pub n_o: Option<f64>,
    pub stable: bool,
    /// `(name, value)` of each inner-minimizer parameter at the reported
    /// point; empty without `minimize_over`.
    pub minimizer: Vec<(String, f64)>,
    pub status: RecordStatus,
}

impl SweepRecord {
    fn blank() -> Self {
        SweepRecord {
            coordinates: Vec::new(),
            n_st_pert: None,
            n_st_lyap: None,
            a_plus: None,
            a_minus: None,
            gamma_opt: None,
            n_o: None,
            stable: false,
            minimizer: Vec::new(),
            status: RecordStatus::NotConverged,
        }
    }
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep spec: {0}")]
    Config(String),
    #[error("no stable point found within the optimization bounds")]
    NoStablePoint,
}

/// Parameter names understood by the bag. `r` and `r_s` are squeezing-ratio
/// coordinates translated into `chi` / `n_s` when a model is built; for the
/// injected model the internal names double as aliases for their `_s`
/// counterparts so that mixed-model sweeps can share one axis name.
pub const KNOWN_PARAMS: &[&str] = &[
    "omega_m",
    "gamma",
    "n_th",
    "kappa_a",
    "delta_a",
    "g_a",
    "chi",
    "phi",
    "r",
    "kappa_c",
    "delta_c",
    "g_c",
    "eps",
    "delta_a_s",
    "g_a_s",
    "n_s",
    "phi_s",
    "r_s",
];

/// String-keyed parameter overrides on top of the reference defaults.
#[derive(Debug, Clone, Default)]
pub struct ParamBag {
    values: BTreeMap<String, f64>,
}

impl ParamBag {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert a value, rejecting names no model understands.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), SweepError> {
        if !KNOWN_PARAMS.contains(&name) {
            return Err(SweepError::Config(format!(
                "unknown parameter `{name}` (known: {})",
                KNOWN_PARAMS.join(", ")
            )));
        }
        self.values.insert(name.to_string(), value);
        Ok(())
    }

    fn insert_known(&mut self, name: &str, value: f64) {
        self.values.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    fn get_or(&self, name: &str, default: f64) -> f64 {
        self.get(name).unwrap_or(default)
    }

    /// All `(name, value)` pairs in deterministic (sorted) order.
    pub fn entries(&self) -> Vec<(String, f64)> {
        self.values.iter().map(|(k, v)| (k.clone(), *v)).collect()
    }
}

fn ratio_to_photons(r_s: f64) -> f64 {
    let r = r_s.clamp(0.0, R_CLAMP);
    let r2 = r * r;
    4.0 * r2 / ((r2 - 1.0) * (r2 - 1.0))
}

/// Build internal-model parameters from a bag, defaults matching
/// [`LinearizedParams::reference`]. A present `r` key wins over `chi`.
pub fn internal_params_from_bag(bag: &ParamBag) -> Result<LinearizedParams, ModelError> {
    let kappa_a = bag.get_or("kappa_a", 1.0);
    let delta_a = bag.get_or("delta_a", 1.0);
    let chi = match bag.get("r") {
        Some(r) => r.clamp(0.0, R_CLAMP) * kappa_a.hypot(delta_a),
        None => bag.get_or("chi", 0.0),
    };
    let p = LinearizedParams {
        omega_m: bag.get_or("omega_m", 1.0),
        gamma: bag.get_or("gamma", 0.25e-6),
        n_th: bag.get_or("n_th", 1000.0),
        kappa_a,
        kappa_c: bag.get_or("kappa_c", 500.0),
        delta_a,
        delta_c: bag.get_or("delta_c", 0.0),
        g_a: bag.get_or("g_a", 0.1),
        g_c: bag.get_or("g_c", 0.0),
        chi,
        eps: bag.get_or("eps", 0.0),
        phi: wrap_half_turn(bag.get_or("phi", 0.0)),
    };
    p.validate()?;
    Ok(p)
}

/// Internal parameters with every squeezing and pump channel removed.
pub fn baseline_params_from_bag(bag: &ParamBag) -> Result<LinearizedParams, ModelError> {
    let mut stripped = bag.clone();
    stripped.insert_known("chi", 0.0);
    stripped.insert_known("g_c", 0.0);
    stripped.insert_known("eps", 0.0);
    stripped.values.remove("r");
    internal_params_from_bag(&stripped)
}

/// Build injected-model parameters from a bag. The `_s` keys win when
/// present; otherwise the internal names are read so shared axes work.
/// `r_s` (or `r`) converts to the input photon number of a pure squeezed
/// field; the pairing is always pure.
pub fn injected_params_from_bag(bag: &ParamBag) -> Result<InjectedModelParams, ModelError> {
    let delta = bag
        .get("delta_a_s")
        .or_else(|| bag.get("delta_a"))
        .unwrap_or(1.0);
    let g = bag.get("g_a_s").or_else(|| bag.get("g_a")).unwrap_or(0.1);
    let phi_s = bag.get("phi_s").or_else(|| bag.get("phi")).unwrap_or(0.0);
    let n_s = match bag.get("r_s").or_else(|| bag.get("r")) {
        Some(r_s) => ratio_to_photons(r_s),
        None => bag.get_or("n_s", 0.0),
    };
    let p = InjectedModelParams::pure(
        bag.get_or("kappa_a", 1.0),
        delta,
        g,
        n_s,
        wrap_half_turn(phi_s),
        bag.get_or("omega_m", 1.0),
        bag.get_or("gamma", 0.25e-6),
        bag.get_or("n_th", 1000.0),
    );
    p.validate()?;
    Ok(p)
}

fn build_system(model: ModelKind, bag: &ParamBag) -> Result<LinearSystem, ModelError> {
    match model {
        ModelKind::Injected => build_injected_system(&injected_params_from_bag(bag)?),
        ModelKind::InternalReduced => build_internal_system(&internal_params_from_bag(bag)?, false),
        ModelKind::InternalFull => build_internal_system(&internal_params_from_bag(bag)?, true),
        ModelKind::NoSqueezing => build_internal_system(&baseline_params_from_bag(bag)?, false),
    }
}

/// Evaluate one parameter point: stability, perturbative rates, and/or the
/// exact occupancy, depending on `method`. Coordinates and minimizer slots
/// are left empty for the caller to fill.
pub fn evaluate_point(model: ModelKind, bag: &ParamBag, method: Method) -> SweepRecord {
    let mut rec = SweepRecord::blank();
    let sys = match build_system(model, bag) {
        Ok(sys) => sys,
        Err(_) => return rec,
    };
    let max_re = max_real_eigenvalue(&sys.drift);
    rec.stable = max_re < 0.0;

    let mut pert_failed = false;
    if method.wants_pert() {
        let cooling = match model {
            ModelKind::Injected => injected_params_from_bag(bag)
                .map(|p| cooling_injected(&p))
                .map_err(|_| ()),
            ModelKind::InternalReduced => internal_params_from_bag(bag)
                .map_err(|_| ())
                .and_then(|p| cooling_perturbative(&p, false).map_err(|_| ())),
            ModelKind::InternalFull => internal_params_from_bag(bag)
                .map_err(|_| ())
                .and_then(|p| cooling_perturbative(&p, true).map_err(|_| ())),
            ModelKind::NoSqueezing => baseline_params_from_bag(bag)
                .map_err(|_| ())
                .and_then(|p| cooling_perturbative(&p, false).map_err(|_| ())),
        };
        match cooling {
            Ok(c) => {
                rec.a_plus = Some(c.a_plus);
                rec.a_minus = Some(c.a_minus);
                rec.gamma_opt = Some(c.gamma_opt);
                rec.n_o = c.n_o;
                rec.n_st_pert = c.n_st;
            }
            Err(()) => pert_failed = true,
        }
    }

    let mut lyap_failed = false;
    if method.wants_lyap() && rec.stable {
        match steady_covariance(&sys) {
            Ok(cov) => rec.n_st_lyap = Some(phonon_number(&cov)),
            Err(LyapunovError::Unstable { .. }) => rec.stable = false,
            Err(LyapunovError::IllConditioned { .. }) => lyap_failed = true,
        }
    }

    rec.status = if !rec.stable {
        RecordStatus::Unstable
    } else if pert_failed || lyap_failed {
        RecordStatus::NotConverged
    } else if method.wants_pert() && rec.gamma_opt.is_some_and(|g| g <= 0.0) {
        RecordStatus::Heating
    } else {
        RecordStatus::Ok
    };
    rec
}

/// Exact-occupancy objective with penalty terms: invalid parameters and
/// failed solves dominate instability, which dominates any physical value,
/// and the instability penalty grows with the leading eigenvalue so the
/// minimizer is pulled back towards the stable region.
fn occupancy_objective(model: ModelKind, bag: &ParamBag) -> f64 {
    let sys = match build_system(model, bag) {
        Ok(sys) => sys,
        Err(_) => return PENALTY_INVALID,
    };
    let max_re = max_real_eigenvalue(&sys.drift);
    if max_re >= 0.0 {
        return PENALTY_UNSTABLE * (1.0 + max_re);
    }
    match steady_covariance(&sys) {
        Ok(cov) => phonon_number(&cov),
        Err(LyapunovError::Unstable { max_real }) => PENALTY_UNSTABLE * (1.0 + max_real.max(0.0)),
        Err(LyapunovError::IllConditioned { .. }) => PENALTY_SOLVE,
    }
}

fn apply_free(bag: &ParamBag, free: &[FreeParam], x: &[f64]) -> ParamBag {
    let mut out = bag.clone();
    for (fp, &v) in free.iter().zip(x) {
        out.insert_known(&fp.name, v);
    }
    out
}

fn minimize_at_point(
    model: ModelKind,
    base: &ParamBag,
    free: &[FreeParam],
    method: Method,
    seed: u64,
) -> SweepRecord {
    let bounds: Vec<(f64, f64)> = free.iter().map(|fp| (fp.lo, fp.hi)).collect();
    let mut objective = |x: &[f64]| occupancy_objective(model, &apply_free(base, free, x));
    let options = MinimizeOptions {
        seed,
        ..MinimizeOptions::default()
    };
    let best = minimize(&mut objective, &bounds, &options);
    let bag = apply_free(base, free, &best.x);
    let mut rec = evaluate_point(model, &bag, method);
    rec.minimizer = free
        .iter()
        .zip(&best.x)
        .map(|(fp, &v)| (fp.name.clone(), v))
        .collect();
    rec
}

fn check_name(name: &str) -> Result<(), SweepError> {
    if KNOWN_PARAMS.contains(&name) {
        Ok(())
    } else {
        Err(SweepError::Config(format!("unknown parameter `{name}`")))
    }
}

fn validate_spec(spec: &SweepSpec) -> Result<(), SweepError> {
    if spec.axes.is_empty() || spec.axes.len() > 2 {
        return Err(SweepError::Config(format!(
            "need 1 or 2 axes, got {}",
            spec.axes.len()
        )));
    }
    for axis in &spec.axes {
        check_name(&axis.name)?;
        if axis.count < 2 {
            return Err(SweepError::Config(format!(
                "axis `{}` needs count >= 2",
                axis.name
            )));
        }
        if !(axis.start.is_finite() && axis.stop.is_finite()) {
            return Err(SweepError::Config(format!(
                "axis `{}` has non-finite bounds",
                axis.name
            )));
        }
        if axis.scale == AxisScale::Log && !(axis.start > 0.0 && axis.stop > 0.0) {
            return Err(SweepError::Config(format!(
                "log axis `{}` needs positive bounds",
                axis.name
            )));
        }
    }
    if spec.axes.len() == 2 && spec.axes[0].name == spec.axes[1].name {
        return Err(SweepError::Config(format!(
            "duplicate axis `{}`",
            spec.axes[0].name
        )));
    }
    for (name, value) in &spec.fixed {
        check_name(name)?;
        if !value.is_finite() {
            return Err(SweepError::Config(format!("fixed `{name}` is not finite")));
        }
    }
    for fp in &spec.minimize_over {
        check_name(&fp.name)?;
        if !(fp.lo.is_finite() && fp.hi.is_finite() && fp.lo < fp.hi) {
            return Err(SweepError::Config(format!(
                "free parameter `{}` needs finite ordered bounds",
                fp.name
            )));
        }
        if spec.axes.iter().any(|a| a.name == fp.name) {
            return Err(SweepError::Config(format!(
                "`{}` cannot be both an axis and a free parameter",
                fp.name
            )));
        }
    }
    Ok(())
}

fn bag_from_fixed(fixed: &[(String, f64)]) -> ParamBag {
    let mut bag = ParamBag::new();
    for (name, value) in fixed {
        bag.insert_known(name, *value);
    }
    bag
}

/// Run the sweep on the global worker pool. Record order is row-major over
/// the axes (last axis fastest) and independent of scheduling; per-point
/// minimizer seeds derive from `spec.seed` and the flat grid index.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRecord>, SweepError> {
    validate_spec(spec)?;
    let base = bag_from_fixed(&spec.fixed);
    let counts: Vec<usize> = spec.axes.iter().map(|a| a.count).collect();
    let total: usize = counts.iter().product();

    let records: Vec<SweepRecord> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut rest = flat;
            let mut indices = vec![0usize; counts.len()];
            for (slot, &count) in indices.iter_mut().zip(&counts).rev() {
                *slot = rest % count;
                rest /= count;
            }
            let mut bag = base.clone();
            let coordinates: Vec<f64> = spec
                .axes
                .iter()
                .zip(&indices)
                .map(|(axis, &i)| {
                    let v = axis.value(i);
                    bag.insert_known(&axis.name, v);
                    v
                })
                .collect();
            let mut rec = if spec.minimize_over.is_empty() {
                evaluate_point(spec.model, &bag, spec.method)
            } else {
                minimize_at_point(
                    spec.model,
                    &bag,
                    &spec.minimize_over,
                    spec.method,
                    mix_seed(spec.seed, flat as u64),
                )
            };
            rec.coordinates = coordinates;
            rec
        })
        .collect();
    Ok(records)
}

/// Minimize the exact stationary occupancy over the free parameters, holding
/// everything else at the bag values. The exact (Lyapunov) objective is used
/// regardless of what a subsequent sweep would report, because perturbative
/// occupancies lose validity exactly where the optima live.
pub fn optimize_nst(
    model: ModelKind,
    free: &[FreeParam],
    fixed: &ParamBag,
    seed: u64,
) -> Result<SweepRecord, SweepError> {
    if free.is_empty() {
        return Err(SweepError::Config("no free parameters given".into()));
    }
    for fp in free {
        check_name(&fp.name)?;
        if !(fp.lo.is_finite() && fp.hi.is_finite() && fp.lo < fp.hi) {
            return Err(SweepError::Config(format!(
                "free parameter `{}` needs finite ordered bounds",
                fp.name
            )));
        }
    }
    let rec = minimize_at_point(model, fixed, free, Method::Lyapunov, seed);
    if !rec.stable || rec.n_st_lyap.is_none() {
        return Err(SweepError::NoStablePoint);
    }
    Ok(rec)
}

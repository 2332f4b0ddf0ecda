//! Stationary phonon occupation of a mechanical resonator cooled by squeezed
//! cavity light.
//!
//! The library models a laser-driven optomechanical cavity whose field is
//! squeezed either by an internal parametric medium or by injected squeezed
//! input noise, linearizes the dynamics around the classical steady state,
//! and computes cooling performance three independent ways:
//!
//! * closed-form scattering-rate spectra and the perturbative occupancy
//!   ([`spectra`]),
//! * the exact Gaussian steady state via a dense Lyapunov solve
//!   ([`lyapunov`]),
//! * closed-form optimal working points where Stokes heating vanishes
//!   ([`tuning`]).
//!
//! The two squeezing routes are connected by an explicit Bogoliubov frame
//! map with a numerical equivalence certificate ([`frame`]), and the reduced
//! two-mode description is validated against the full three-mode model with
//! an explicit pump ([`model`], [`mean_field`]). Parameter sweeps and
//! occupancy minimization live in [`sweep`].
//!
//! Conventions: frequencies and rates in units of the mechanical frequency,
//! quadratures `X = o + o^dag`, `Y = -i(o - o^dag)` (vacuum variance 1),
//! phases pi-periodic.

pub mod frame;
pub mod lyapunov;
pub mod mean_field;
pub mod model;
pub mod optimize;
pub mod params;
pub mod spectra;
pub mod sweep;
pub mod tuning;

pub use frame::{EquivalenceReport, FrameError, SqueezedFrameParams};
pub use lyapunov::{LyapunovError, SpectrumSelection, SteadyCovariance};
pub use mean_field::{MeanFieldError, MeanFieldSolution, TargetCouplings};
pub use model::{LinearSystem, ModeLabel, Quadrature, StabilityReport};
pub use optimize::{MinimizeOptions, MinimizeResult};
pub use params::{FullModelParams, InjectedModelParams, LinearizedParams, ModelError};
pub use spectra::{CoolingMethod, CoolingResult, SpectrumError, SpectrumKind, SpectrumResult};
pub use sweep::{
    Axis, AxisScale, FreeParam, Method, ModelKind, ParamBag, RecordStatus, SweepError, SweepRecord,
    SweepSpec,
};
pub use tuning::{SuppressionOptimum, TuningError};

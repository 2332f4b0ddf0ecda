//! Command-line front end: steady-state occupancies, spectra, parameter
//! sweeps, occupancy minimization, frame mapping, figure datasets, and
//! stability reports.
//!
//! Exit codes: 0 on success, 2 when any emitted panel is partial (some grid
//! points carry a non-ok status), 1 on configuration errors.

use clap::{Parser, Subcommand, ValueEnum};
use opocool::frame::equivalence_certificate;
use opocool::lyapunov::numeric_spectrum;
use opocool::model::{
    build_injected_system, build_internal_system, max_real_eigenvalue, renormalize_for_pump,
};
use opocool::spectra::{spectrum_injected, spectrum_internal};
use opocool::sweep::{
    baseline_params_from_bag, evaluate_point, injected_params_from_bag, internal_params_from_bag,
    optimize_nst, run_sweep,
};
use opocool::{
    Method, ModeLabel, ModelKind, ParamBag, RecordStatus, SpectrumSelection, SweepError,
    SweepRecord,
};
use opocool_cli::config::{self, ConfigError, FileConfig};
use opocool_cli::figures;
use opocool_cli::output::{sweep_csv, Emitter, Field};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    Internal,
    InternalFull,
    Injected,
    None,
}

impl From<ModelArg> for ModelKind {
    fn from(arg: ModelArg) -> Self {
        match arg {
            ModelArg::Internal => ModelKind::InternalReduced,
            ModelArg::InternalFull => ModelKind::InternalFull,
            ModelArg::Injected => ModelKind::Injected,
            ModelArg::None => ModelKind::NoSqueezing,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Pert,
    Lyap,
    Both,
}

impl From<MethodArg> for Method {
    fn from(arg: MethodArg) -> Self {
        match arg {
            MethodArg::Pert => Method::Perturbative,
            MethodArg::Lyap => Method::Lyapunov,
            MethodArg::Both => Method::Both,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "opocool",
    version,
    about = "Stationary phonon occupation of a resonator cooled by squeezed cavity light"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Model variant (overrides the config file).
    #[arg(long, global = true, value_enum)]
    model: Option<ModelArg>,
    /// TOML config with [system], [sweep], [optimize] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV/JSON artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Occupancy method (overrides the config file).
    #[arg(long, global = true, value_enum)]
    method: Option<MethodArg>,
    /// Worker threads for grid evaluation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Parameter overrides, e.g. --set kappa_a=10 (repeatable; wins over the
    /// config file). Frequencies are in units of omega_m.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Steady-state occupancy at one parameter point.
    Nst,
    /// Optical quadrature noise spectrum on a frequency grid.
    Spectrum {
        #[arg(long, default_value_t = -3.0)]
        omega_min: f64,
        #[arg(long, default_value_t = 3.0)]
        omega_max: f64,
        #[arg(long, default_value_t = 601)]
        points: usize,
        /// Quadrature angle (0 = amplitude).
        #[arg(long, default_value_t = 0.0)]
        angle: f64,
    },
    /// Grid sweep defined by the [sweep] config section.
    Sweep,
    /// Minimize the exact occupancy over the [optimize] free parameters.
    Optimize,
    /// Map internal-squeezing parameters to the equivalent injected model.
    MapFrame {
        /// Certificate tolerance on the relative occupancy difference.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Emit the dataset behind one report figure.
    Figure { id: u8 },
    /// Stability report at one parameter point.
    Stability,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // Ignore the error when a pool already exists (e.g. repeated calls in
        // tests); the first configuration wins.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    Figure(#[from] figures::FigureError),
    #[error(transparent)]
    Output(#[from] opocool_cli::output::OutputError),
    #[error("{0}")]
    Invalid(String),
}

fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    let file_config = match &cli.config {
        Some(path) => config::load(path)?,
        None => FileConfig::default(),
    };
    let sets = cli
        .sets
        .iter()
        .map(|s| config::parse_set(s))
        .collect::<Result<Vec<_>, _>>()?;
    let (bag, omega_m_hz) = config::system_bag(&file_config, &sets)?;
    let model = cli.model.map(ModelKind::from);
    let method = cli.method.map(Method::from);
    let out_dir = cli.out.clone();

    match &cli.command {
        Command::Nst => {
            let model = model.unwrap_or(ModelKind::InternalReduced);
            let method = method.unwrap_or(Method::Both);
            let record = evaluate_point(model, &bag, method);
            print_record(model, &record, omega_m_hz);
            Ok(ExitCode::SUCCESS)
        }
        Command::Spectrum {
            omega_min,
            omega_max,
            points,
            angle,
        } => {
            let model = model.unwrap_or(ModelKind::InternalReduced);
            if *points < 2
                || !omega_min.is_finite()
                || !omega_max.is_finite()
                || omega_min >= omega_max
            {
                return Err(CliError::Invalid(
                    "spectrum needs points >= 2 and omega_min < omega_max".into(),
                ));
            }
            let dir = out_dir.unwrap_or_else(|| PathBuf::from("."));
            spectrum_command(model, &bag, *omega_min, *omega_max, *points, *angle, &dir)
        }
        Command::Sweep => {
            let spec = config::sweep_spec(&file_config, &bag, model, method)?;
            let records = run_sweep(&spec)?;
            let dir = out_dir.unwrap_or_else(|| PathBuf::from("."));
            let mut emitter = Emitter::new(&dir, "sweep")?;
            emitter.manifest.parameters = bag.entries();
            emitter.manifest.omega_m_hz = omega_m_hz;
            emitter.manifest.seed = spec.seed;
            let axis_names: Vec<&str> = spec.axes.iter().map(|a| a.name.as_str()).collect();
            let text = sweep_csv(&axis_names, &records);
            let statuses: Vec<RecordStatus> = records.iter().map(|r| r.status).collect();
            emitter.panel("sweep.csv", &text, &statuses, vec![])?;
            let partial = emitter.finish()?;
            eprintln!("wrote {}", dir.join("sweep.csv").display());
            Ok(if partial {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Optimize => {
            let (free, section_model, seed) = config::optimize_free(&file_config)?;
            let model = model
                .or(section_model)
                .unwrap_or(ModelKind::InternalReduced);
            match optimize_nst(model, &free, &bag, seed) {
                Ok(record) => {
                    print_record(model, &record, omega_m_hz);
                    if let Some(dir) = out_dir {
                        let mut emitter = Emitter::new(&dir, "optimize")?;
                        emitter.manifest.parameters = bag.entries();
                        emitter.manifest.omega_m_hz = omega_m_hz;
                        emitter.manifest.seed = seed;
                        let text = sweep_csv(&[], std::slice::from_ref(&record));
                        emitter.panel("optimize.csv", &text, &[record.status], vec![])?;
                        emitter.finish()?;
                    }
                    Ok(ExitCode::SUCCESS)
                }
                Err(SweepError::NoStablePoint) => {
                    eprintln!("no stable point found within the given bounds");
                    Ok(ExitCode::from(2))
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::MapFrame { tol } => {
            let p = internal_params_from_bag(&bag).map_err(|e| CliError::Invalid(e.to_string()))?;
            let report =
                equivalence_certificate(&p, *tol).map_err(|e| CliError::Invalid(e.to_string()))?;
            let m = &report.mapped;
            println!("delta_a_s = {:.12e}", m.delta_a_s);
            println!("g_a_s     = {:.12e}", m.g_a_s);
            println!("n_s       = {:.12e}", m.n_s);
            println!("m_s       = {:.12e}", m.m_s);
            println!("phi_s     = {:.12e}", m.phi_s);
            println!("n_st_internal = {:.12e}", report.n_st_internal);
            println!("n_st_injected = {:.12e}", report.n_st_injected);
            println!("relative_difference = {:.3e}", report.relative_difference);
            println!(
                "certificate = {}",
                if report.pass { "PASS" } else { "FAIL" }
            );
            Ok(if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Figure { id } => {
            let dir = out_dir.unwrap_or_else(|| PathBuf::from(format!("figures/fig{id}")));
            let partial = figures::reproduce(*id, &bag, &dir)?;
            eprintln!("wrote figure {id} dataset to {}", dir.display());
            Ok(if partial {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Stability => {
            let model = model.unwrap_or(ModelKind::InternalReduced);
            stability_command(model, &bag)
        }
    }
}

fn print_record(model: ModelKind, record: &SweepRecord, omega_m_hz: Option<f64>) {
    let label = match model {
        ModelKind::InternalReduced => "internal",
        ModelKind::InternalFull => "internal-full",
        ModelKind::Injected => "injected",
        ModelKind::NoSqueezing => "none",
    };
    println!("model = {label}");
    if let Some(hz) = omega_m_hz {
        println!("omega_m = {hz:.6e} Hz (all rates in units of omega_m)");
    }
    let show = |name: &str, value: Option<f64>| match value {
        Some(v) => println!("{name} = {v:.12e}"),
        None => println!("{name} = n/a"),
    };
    show("a_plus", record.a_plus);
    show("a_minus", record.a_minus);
    show("gamma_opt", record.gamma_opt);
    show("n_o", record.n_o);
    show("n_st_pert", record.n_st_pert);
    show("n_st_lyap", record.n_st_lyap);
    for (name, value) in &record.minimizer {
        println!("opt_{name} = {value:.12e}");
    }
    println!("stable = {}", record.stable);
    println!("status = {}", record.status.as_str());
}

fn spectrum_command(
    model: ModelKind,
    bag: &ParamBag,
    omega_min: f64,
    omega_max: f64,
    points: usize,
    angle: f64,
    dir: &Path,
) -> Result<ExitCode, CliError> {
    let omega: Vec<f64> = (0..points)
        .map(|i| omega_min + (omega_max - omega_min) * i as f64 / (points - 1) as f64)
        .collect();
    let invalid = |e: opocool::ModelError| CliError::Invalid(e.to_string());
    let (sys, analytic): (_, Box<dyn Fn(f64) -> Option<f64>>) = match model {
        ModelKind::InternalReduced => {
            let p = internal_params_from_bag(bag).map_err(invalid)?;
            let sys = build_internal_system(&p, false).map_err(invalid)?;
            (sys, Box::new(move |w| spectrum_internal(&p, w).ok()))
        }
        ModelKind::InternalFull => {
            let p = internal_params_from_bag(bag).map_err(invalid)?;
            let sys = build_internal_system(&p, true).map_err(invalid)?;
            // No closed form covers the coupled three-mode spectrum.
            (sys, Box::new(|_| None))
        }
        ModelKind::Injected => {
            let p = injected_params_from_bag(bag).map_err(invalid)?;
            let sys = build_injected_system(&p).map_err(invalid)?;
            (sys, Box::new(move |w| Some(spectrum_injected(&p, w))))
        }
        ModelKind::NoSqueezing => {
            let p = baseline_params_from_bag(bag).map_err(invalid)?;
            let sys = build_internal_system(&p, false).map_err(invalid)?;
            (sys, Box::new(move |w| spectrum_internal(&p, w).ok()))
        }
    };
    let numeric = numeric_spectrum(
        &sys,
        SpectrumSelection::Auto {
            mode: ModeLabel::CoolingCavity,
            angle,
        },
        &omega,
    )
    .map_err(|e| CliError::Invalid(e.to_string()))?;

    let mut emitter = Emitter::new(dir, "spectrum")?;
    emitter.manifest.parameters = bag.entries();
    let mut rows = Vec::new();
    let mut statuses = Vec::new();
    for (i, &w) in omega.iter().enumerate() {
        rows.push((
            vec![
                Field::Number(w),
                Field::Number(numeric.values[i]),
                analytic(w).into(),
            ],
            RecordStatus::Ok,
        ));
        statuses.push(RecordStatus::Ok);
    }
    let text = opocool_cli::output::render_csv(&["omega", "s_numeric", "s_analytic"], &rows);
    emitter.panel("spectrum.csv", &text, &statuses, vec![])?;
    emitter.finish()?;
    eprintln!("wrote {}", dir.join("spectrum.csv").display());
    Ok(ExitCode::SUCCESS)
}

fn stability_command(model: ModelKind, bag: &ParamBag) -> Result<ExitCode, CliError> {
    let invalid = |e: opocool::ModelError| CliError::Invalid(e.to_string());
    let (drift, note) = match model {
        ModelKind::InternalReduced => {
            let p = internal_params_from_bag(bag).map_err(invalid)?;
            let sys = build_internal_system(&p, false).map_err(invalid)?;
            let ratio = p.chi / p.kappa_a.hypot(p.delta_a);
            (sys.drift, format!("threshold_ratio = {ratio:.12e}"))
        }
        ModelKind::InternalFull => {
            let p = internal_params_from_bag(bag).map_err(invalid)?;
            let sys = build_internal_system(&p, true).map_err(invalid)?;
            let note = match renormalize_for_pump(&p) {
                Ok(q) => format!(
                    "compensated kappa_a = {:.12e}, delta_a = {:.12e}",
                    q.kappa_a, q.delta_a
                ),
                Err(e) => format!("compensation fails: {e}"),
            };
            (sys.drift, note)
        }
        ModelKind::Injected => {
            let p = injected_params_from_bag(bag).map_err(invalid)?;
            let sys = build_injected_system(&p).map_err(invalid)?;
            (sys.drift, String::new())
        }
        ModelKind::NoSqueezing => {
            let p = baseline_params_from_bag(bag).map_err(invalid)?;
            let sys = build_internal_system(&p, false).map_err(invalid)?;
            (sys.drift, String::new())
        }
    };
    let max_re = max_real_eigenvalue(&drift);
    println!("max_real_eigenvalue = {max_re:.12e}");
    println!("stable = {}", max_re < 0.0);
    if !note.is_empty() {
        println!("{note}");
    }
    Ok(ExitCode::SUCCESS)
}

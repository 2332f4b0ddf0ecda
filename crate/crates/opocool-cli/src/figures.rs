//! Canned datasets behind the six report figures.
//!
//! Each recipe writes one CSV per panel plus `manifest.json` into the output
//! directory. Panels that contain any non-`ok` row are flagged partial in the
//! manifest (and the process exit code), never silently dropped.
//!
//! Shared defaults: `omega_m = 1` sets the unit system, `gamma = 0.25e-6`,
//! `n_th = 1000`, `g_a = 0.1`, `delta_a = 1`. User overrides from the config
//! file or `--set` are applied on top, except for the parameters a figure
//! scans or fixes structurally (those are noted in the manifest).

use crate::output::{render_csv, sweep_csv, Emitter, Field, OutputError};
use opocool::lyapunov::numeric_spectrum;
use opocool::model::build_internal_system;
use opocool::spectra::spectrum_internal;
use opocool::sweep::{evaluate_point, run_sweep};
use opocool::tuning::{equal_coupling_detunings, injected_optimum, internal_optimum};
use opocool::{
    Axis, AxisScale, FreeParam, LinearizedParams, Method, ModeLabel, ModelKind, ParamBag,
    RecordStatus, SpectrumSelection, SweepError, SweepRecord, SweepSpec,
};
use std::f64::consts::PI;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum FigureError {
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("sweep failed: {0}")]
    Sweep(#[from] SweepError),
    #[error("unknown figure id {0} (expected 1..=6)")]
    UnknownId(u8),
}

/// Base seed per figure; fixed so repeated runs are byte-identical.
fn figure_seed(id: u8) -> u64 {
    1000 + id as u64
}

/// Figure defaults, then user overrides (user wins), minus `locked` keys.
fn merged_bag(
    defaults: &[(&str, f64)],
    user: &ParamBag,
    locked: &[&str],
    notes: &mut Vec<String>,
) -> ParamBag {
    let mut bag = ParamBag::new();
    for (name, value) in defaults {
        bag.set(name, *value).expect("figure defaults are known");
    }
    for (name, value) in user.entries() {
        if locked.contains(&name.as_str()) {
            notes.push(format!(
                "override {name}={value} ignored: the figure fixes this parameter"
            ));
            continue;
        }
        bag.set(&name, value).expect("user bag entries are known");
    }
    bag
}

fn axis(name: &str, start: f64, stop: f64, count: usize, scale: AxisScale) -> Axis {
    Axis {
        name: name.into(),
        start,
        stop,
        count,
        scale,
    }
}

/// The seven shared record columns, in CSV order.
const RECORD_COLUMNS: [&str; 7] = [
    "n_st_pert",
    "n_st_lyap",
    "a_plus",
    "a_minus",
    "gamma_opt",
    "n_o",
    "stable",
];

fn record_fields(r: &SweepRecord) -> Vec<Field> {
    vec![
        r.n_st_pert.into(),
        r.n_st_lyap.into(),
        r.a_plus.into(),
        r.a_minus.into(),
        r.gamma_opt.into(),
        r.n_o.into(),
        Field::Bool(r.stable),
    ]
}

/// One labeled curve of a stacked panel. `extra` holds per-row values for
/// columns beyond the shared record set (inset data, minimizer values).
struct Curve {
    label: &'static str,
    records: Vec<SweepRecord>,
    extra: Vec<Vec<Field>>,
}

impl Curve {
    fn plain(label: &'static str, records: Vec<SweepRecord>) -> Self {
        Curve {
            label,
            records,
            extra: Vec::new(),
        }
    }
}

/// Stack curves into one CSV: `model on the left, then the axis coordinates,
/// the shared record columns, any extra columns, and status last.
fn stacked_csv(
    axis_names: &[&str],
    extra_names: &[&str],
    curves: &[Curve],
) -> (String, Vec<RecordStatus>) {
    let mut columns: Vec<&str> = vec!["model"];
    columns.extend(axis_names);
    columns.extend(RECORD_COLUMNS);
    columns.extend(extra_names);
    let mut rows = Vec::new();
    let mut statuses = Vec::new();
    for curve in curves {
        for (i, record) in curve.records.iter().enumerate() {
            let mut fields: Vec<Field> = vec![curve.label.into()];
            fields.extend(record.coordinates.iter().map(|&c| Field::from(c)));
            fields.extend(record_fields(record));
            match curve.extra.get(i) {
                Some(extra) => fields.extend(extra.iter().cloned()),
                None => fields.extend(extra_names.iter().map(|_| Field::Missing)),
            }
            rows.push((fields, record.status));
            statuses.push(record.status);
        }
    }
    (render_csv(&columns, &rows), statuses)
}

/// Best stable exact occupancy in a record list; falls back to the
/// perturbative value when no exact one exists.
fn argmin_occupancy(records: &[SweepRecord]) -> Option<usize> {
    let key = |r: &SweepRecord| r.n_st_lyap.or(r.n_st_pert);
    records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.stable && key(r).is_some())
        .min_by(|(_, a), (_, b)| key(a).unwrap().total_cmp(&key(b).unwrap()))
        .map(|(i, _)| i)
}

fn sweep_1d(
    model: ModelKind,
    method: Method,
    bag: &ParamBag,
    ax: Axis,
    seed: u64,
) -> Result<Vec<SweepRecord>, SweepError> {
    run_sweep(&SweepSpec {
        model,
        method,
        fixed: bag.entries(),
        axes: vec![ax],
        minimize_over: Vec::new(),
        seed,
    })
}

pub fn reproduce(id: u8, user: &ParamBag, out_dir: &Path) -> Result<bool, FigureError> {
    let mut emitter = Emitter::new(out_dir, format!("figure {id}"))?;
    emitter.manifest.seed = figure_seed(id);
    match id {
        1 => fig1(&mut emitter, user)?,
        2 => fig2(&mut emitter, user)?,
        3 => fig3(&mut emitter, user)?,
        4 => fig45(&mut emitter, user, 10.0, 0.62, 0.47)?,
        5 => fig45(&mut emitter, user, 100.0, 0.63, 0.45)?,
        6 => fig6(&mut emitter, user)?,
        other => return Err(FigureError::UnknownId(other)),
    }
    Ok(emitter.finish()?)
}

// ---------------------------------------------------------------------------
// Figure 1: force spectrum and occupancy vs phase, squeezing, and coupling
// at kappa_a = delta_a = omega_m.
// ---------------------------------------------------------------------------

fn fig1(emitter: &mut Emitter, user: &ParamBag) -> Result<(), FigureError> {
    let mut notes = Vec::new();
    let bag = merged_bag(
        &[
            ("kappa_a", 1.0),
            ("delta_a", 1.0),
            ("g_a", 0.1),
            ("gamma", 0.25e-6),
            ("n_th", 1000.0),
        ],
        user,
        &["chi", "phi", "r"],
        &mut notes,
    );
    let kappa_a = bag.get("kappa_a").unwrap();
    let delta_a = bag.get("delta_a").unwrap();
    let (phi_opt, chi_opt, r_opt) = internal_optimum(kappa_a, delta_a, 1.0);
    if r_opt >= 1.0 {
        return Err(FigureError::Sweep(SweepError::Config(format!(
            "the suppression optimum sits above threshold (r_opt = {r_opt:.4}) at \
             kappa_a = {kappa_a}, delta_a = {delta_a}; choose a larger detuning"
        ))));
    }
    emitter.manifest.parameters = bag.entries();
    emitter.manifest.notes.append(&mut notes);
    emitter.manifest.notes.push(format!(
        "suppression optimum: phi = {phi_opt:.6}, chi = {chi_opt:.6}, r = {r_opt:.6}"
    ));
    let seed = figure_seed(1);

    // Panel (a): cavity force spectrum, suppressed vs unsqueezed, both routes.
    {
        let mut p = LinearizedParams::reference();
        p.kappa_a = kappa_a;
        p.delta_a = delta_a;
        p.gamma = bag.get("gamma").unwrap();
        p.n_th = bag.get("n_th").unwrap();
        p.g_a = 0.0; // bare cavity: the force spectrum seen by the resonator
        p.chi = chi_opt;
        p.phi = phi_opt;
        let mut bare = p.clone();
        bare.chi = 0.0;
        bare.phi = 0.0;

        let omega: Vec<f64> = (0..601).map(|i| -3.0 + 6.0 * i as f64 / 600.0).collect();
        let numeric = |q: &LinearizedParams| {
            let sys = build_internal_system(q, false).expect("fig1 params are valid");
            numeric_spectrum(
                &sys,
                SpectrumSelection::Auto {
                    mode: ModeLabel::CoolingCavity,
                    angle: 0.0,
                },
                &omega,
            )
            .expect("fig1 spectrum point is stable")
            .values
        };
        let numeric_suppressed = numeric(&p);
        let numeric_bare = numeric(&bare);
        let columns = [
            "omega",
            "s_numeric",
            "s_analytic",
            "s_numeric_unsqueezed",
            "s_analytic_unsqueezed",
        ];
        let mut rows = Vec::new();
        let mut statuses = Vec::new();
        for (i, &w) in omega.iter().enumerate() {
            let analytic = spectrum_internal(&p, w);
            let analytic_bare = spectrum_internal(&bare, w);
            let status = if analytic.is_ok() && analytic_bare.is_ok() {
                RecordStatus::Ok
            } else {
                RecordStatus::NotConverged
            };
            rows.push((
                vec![
                    Field::Number(w),
                    Field::Number(numeric_suppressed[i]),
                    analytic.ok().into(),
                    Field::Number(numeric_bare[i]),
                    analytic_bare.ok().into(),
                ],
                status,
            ));
            statuses.push(status);
        }
        let text = render_csv(&columns, &rows);
        emitter.panel("fig1_a.csv", &text, &statuses, vec![])?;
    }

    // Panels (b)-(d): occupancy scans with the unsqueezed baseline stacked in.
    type Scan<'a> = (&'a str, &'a str, Axis, Vec<(&'a str, f64)>);
    let scans: [Scan; 3] = [
        (
            "fig1_b.csv",
            "phi",
            axis("phi", 0.0, PI, 181, AxisScale::Linear),
            vec![("r", r_opt)],
        ),
        (
            "fig1_c.csv",
            "r",
            axis("r", 0.0, 0.999, 200, AxisScale::Linear),
            vec![("phi", phi_opt)],
        ),
        (
            "fig1_d.csv",
            "g_a",
            axis("g_a", 0.002, 0.5, 125, AxisScale::Linear),
            vec![("phi", phi_opt), ("r", r_opt)],
        ),
    ];
    for (file, axis_name, ax, fixed) in scans {
        let mut point = bag.clone();
        for (name, value) in fixed {
            point.set(name, value).expect("fig1 fixed keys are known");
        }
        let internal = sweep_1d(
            ModelKind::InternalReduced,
            Method::Both,
            &point,
            ax.clone(),
            seed,
        )?;
        let none = sweep_1d(ModelKind::NoSqueezing, Method::Both, &point, ax, seed)?;
        let (text, statuses) = stacked_csv(
            &[axis_name],
            &[],
            &[
                Curve::plain("internal", internal),
                Curve::plain("none", none),
            ],
        );
        emitter.panel(file, &text, &statuses, vec![])?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Figures 2 and 3: occupancy vs phase, detuning, coupling, and squeezing for
// the internal, injected, and unsqueezed models.
// ---------------------------------------------------------------------------

/// One row of the figure-2 layout at a given cavity linewidth, writing four
/// panels named by `files`.
fn fig2_row(
    emitter: &mut Emitter,
    base: &ParamBag,
    kappa_a: f64,
    files: [&str; 4],
) -> Result<(), FigureError> {
    let seed = emitter.manifest.seed;
    let mut bag = base.clone();
    bag.set("kappa_a", kappa_a).expect("known key");
    let delta_ref = 1.0;
    let (phi_opt, _, _) = internal_optimum(kappa_a, delta_ref, 1.0);
    let (phi_s_opt, _, _) = injected_optimum(kappa_a, delta_ref, 1.0).expect("delta_ref > 0");

    // Column 4 first: squeezing scans provide the argmin R used by column 1.
    let r_axis = axis("r", 0.0, 0.995, 200, AxisScale::Linear);
    let col4_internal = {
        let mut b = bag.clone();
        b.set("delta_a", delta_ref).unwrap();
        b.set("phi", phi_opt).unwrap();
        sweep_1d(
            ModelKind::InternalReduced,
            Method::Both,
            &b,
            r_axis.clone(),
            seed,
        )?
    };
    let col4_injected = {
        let mut b = bag.clone();
        b.set("delta_a", delta_ref).unwrap();
        b.set("phi", phi_s_opt).unwrap();
        sweep_1d(ModelKind::Injected, Method::Both, &b, r_axis.clone(), seed)?
    };
    let col4_none = {
        let mut b = bag.clone();
        b.set("delta_a", delta_ref).unwrap();
        sweep_1d(ModelKind::NoSqueezing, Method::Both, &b, r_axis, seed)?
    };
    let r_star_internal = argmin_occupancy(&col4_internal)
        .map(|i| col4_internal[i].coordinates[0])
        .unwrap_or(0.0);
    let r_star_injected = argmin_occupancy(&col4_injected)
        .map(|i| col4_injected[i].coordinates[0])
        .unwrap_or(0.0);

    // Column 1: phase scans at the argmin squeezing of column 4.
    let phi_axis = axis("phi", 0.0, PI, 181, AxisScale::Linear);
    let col1_internal = {
        let mut b = bag.clone();
        b.set("delta_a", delta_ref).unwrap();
        b.set("r", r_star_internal).unwrap();
        sweep_1d(
            ModelKind::InternalReduced,
            Method::Both,
            &b,
            phi_axis.clone(),
            seed,
        )?
    };
    let col1_injected = {
        let mut b = bag.clone();
        b.set("delta_a", delta_ref).unwrap();
        b.set("r", r_star_injected).unwrap();
        sweep_1d(
            ModelKind::Injected,
            Method::Both,
            &b,
            phi_axis.clone(),
            seed,
        )?
    };
    let col1_none = {
        let mut b = bag.clone();
        b.set("delta_a", delta_ref).unwrap();
        sweep_1d(ModelKind::NoSqueezing, Method::Both, &b, phi_axis, seed)?
    };
    // Stability window along the phase scan (narrow near threshold): report
    // the stable interval boundaries for the internal curve.
    let mut window_notes = vec![format!(
        "phase scans at r = {r_star_internal:.6} (internal), r_s = {r_star_injected:.6} (injected)"
    )];
    {
        let mut boundaries = Vec::new();
        for pair in col1_internal.windows(2) {
            if pair[0].stable != pair[1].stable {
                boundaries.push(0.5 * (pair[0].coordinates[0] + pair[1].coordinates[0]));
            }
        }
        if !boundaries.is_empty() {
            window_notes.push(format!(
                "internal stability boundaries at phi/pi = {:?}",
                boundaries.iter().map(|b| b / PI).collect::<Vec<_>>()
            ));
        }
    }
    let (text, statuses) = stacked_csv(
        &["phi"],
        &[],
        &[
            Curve::plain("internal", col1_internal),
            Curve::plain("injected", col1_injected),
            Curve::plain("none", col1_none),
        ],
    );
    emitter.panel(files[0], &text, &statuses, window_notes)?;

    // Column 2: detuning scans under per-point suppression tuning. The phase
    // and squeezing used at each detuning are recorded as inset columns.
    let delta_max = 3.0f64.max(6.0 * kappa_a);
    let delta_values: Vec<f64> = (0..161)
        .map(|i| 0.2 + (delta_max - 0.2) * i as f64 / 160.0)
        .collect();
    let mut col2_curves: Vec<Curve> = Vec::new();
    {
        let mut records = Vec::new();
        let mut extra = Vec::new();
        for &delta in &delta_values {
            let (phi, _, r) = internal_optimum(kappa_a, delta, 1.0);
            let mut b = bag.clone();
            b.set("delta_a", delta).unwrap();
            b.set("phi", phi).unwrap();
            b.set("r", r.min(0.999)).unwrap();
            let mut rec = evaluate_point(ModelKind::InternalReduced, &b, Method::Both);
            rec.coordinates = vec![delta];
            records.push(rec);
            extra.push(vec![Field::Number(phi), Field::Number(r)]);
        }
        col2_curves.push(Curve {
            label: "internal",
            records,
            extra,
        });
    }
    {
        let mut records = Vec::new();
        let mut extra = Vec::new();
        for &delta in &delta_values {
            let mut rec = match injected_optimum(kappa_a, delta, 1.0) {
                Ok((phi_s, n_s, r_s)) => {
                    let mut b = bag.clone();
                    b.set("delta_a_s", delta).unwrap();
                    b.set("phi_s", phi_s).unwrap();
                    b.set("n_s", n_s).unwrap();
                    extra.push(vec![Field::Number(phi_s), Field::Number(r_s)]);
                    evaluate_point(ModelKind::Injected, &b, Method::Both)
                }
                Err(_) => {
                    extra.push(vec![Field::Missing, Field::Missing]);
                    SweepRecord {
                        coordinates: Vec::new(),
                        ..blank_record()
                    }
                }
            };
            rec.coordinates = vec![delta];
            records.push(rec);
        }
        col2_curves.push(Curve {
            label: "injected",
            records,
            extra,
        });
    }
    {
        let mut records = Vec::new();
        for &delta in &delta_values {
            let mut b = bag.clone();
            b.set("delta_a", delta).unwrap();
            let mut rec = evaluate_point(ModelKind::NoSqueezing, &b, Method::Both);
            rec.coordinates = vec![delta];
            records.push(rec);
        }
        col2_curves.push(Curve::plain("none", records));
    }
    let delta_star_none = argmin_occupancy(&col2_curves[2].records)
        .map(|i| col2_curves[2].records[i].coordinates[0])
        .unwrap_or(delta_ref);
    let (text, statuses) = stacked_csv(&["delta_a"], &["phi_used", "r_used"], &col2_curves);
    emitter.panel(files[1], &text, &statuses, vec![])?;

    // Column 3: coupling scans at matched detunings, where internal and
    // injected suppression-tuned curves coincide.
    let (delta_s_eq, delta_eq) = equal_coupling_detunings(kappa_a, 1.0);
    let g_axis = axis("g_a", 1e-3, 1.0, 121, AxisScale::Log);
    let col3_internal = {
        let (phi, _, r) = internal_optimum(kappa_a, delta_eq, 1.0);
        let mut b = bag.clone();
        b.set("delta_a", delta_eq).unwrap();
        b.set("phi", phi).unwrap();
        b.set("r", r.min(0.999)).unwrap();
        sweep_1d(
            ModelKind::InternalReduced,
            Method::Both,
            &b,
            g_axis.clone(),
            seed,
        )?
    };
    let col3_injected = {
        let (phi_s, n_s, _) = injected_optimum(kappa_a, delta_s_eq, 1.0).expect("omega_m > 0");
        let mut b = bag.clone();
        b.set("delta_a_s", delta_s_eq).unwrap();
        b.set("phi_s", phi_s).unwrap();
        b.set("n_s", n_s).unwrap();
        sweep_1d(ModelKind::Injected, Method::Both, &b, g_axis.clone(), seed)?
    };
    let col3_none = {
        let mut b = bag.clone();
        b.set("delta_a", delta_star_none).unwrap();
        sweep_1d(ModelKind::NoSqueezing, Method::Both, &b, g_axis, seed)?
    };
    let (text, statuses) = stacked_csv(
        &["g_a"],
        &[],
        &[
            Curve::plain("internal", col3_internal),
            Curve::plain("injected", col3_injected),
            Curve::plain("none", col3_none),
        ],
    );
    emitter.panel(
        files[2],
        &text,
        &statuses,
        vec![format!(
            "matched detunings: delta_a = {delta_eq:.6} (internal), delta_a_s = {delta_s_eq:.6} \
             (injected); unsqueezed curve at its own best detuning {delta_star_none:.6}"
        )],
    )?;

    // Column 4 panel (already computed above).
    let (text, statuses) = stacked_csv(
        &["r"],
        &[],
        &[
            Curve::plain("internal", col4_internal),
            Curve::plain("injected", col4_injected),
            Curve::plain("none", col4_none),
        ],
    );
    emitter.panel(files[3], &text, &statuses, vec![])?;
    Ok(())
}

fn blank_record() -> SweepRecord {
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

fn fig2(emitter: &mut Emitter, user: &ParamBag) -> Result<(), FigureError> {
    let mut notes = Vec::new();
    let base = merged_bag(
        &[("g_a", 0.1), ("gamma", 0.25e-6), ("n_th", 1000.0)],
        user,
        &["kappa_a", "chi", "phi", "r", "delta_a"],
        &mut notes,
    );
    emitter.manifest.parameters = base.entries();
    emitter.manifest.notes.append(&mut notes);
    fig2_row(
        emitter,
        &base,
        0.1,
        ["fig2_a.csv", "fig2_b.csv", "fig2_c.csv", "fig2_d.csv"],
    )?;
    fig2_row(
        emitter,
        &base,
        1.0,
        ["fig2_e.csv", "fig2_f.csv", "fig2_g.csv", "fig2_h.csv"],
    )?;
    fig2_row(
        emitter,
        &base,
        10.0,
        ["fig2_i.csv", "fig2_j.csv", "fig2_k.csv", "fig2_l.csv"],
    )?;
    Ok(())
}

fn fig3(emitter: &mut Emitter, user: &ParamBag) -> Result<(), FigureError> {
    let mut notes = Vec::new();
    let base = merged_bag(
        &[("g_a", 0.1), ("gamma", 0.25e-6)],
        user,
        &["kappa_a", "chi", "phi", "r", "delta_a", "n_th"],
        &mut notes,
    );
    emitter.manifest.parameters = base.entries();
    emitter.manifest.notes.append(&mut notes);
    let mut cold = base.clone();
    cold.set("n_th", 0.1).unwrap();
    fig2_row(
        emitter,
        &cold,
        1.0,
        ["fig3_a.csv", "fig3_b.csv", "fig3_c.csv", "fig3_d.csv"],
    )?;
    let mut hot = base.clone();
    hot.set("n_th", 1e5).unwrap();
    fig2_row(
        emitter,
        &hot,
        1.0,
        ["fig3_e.csv", "fig3_f.csv", "fig3_g.csv", "fig3_h.csv"],
    )?;
    emitter
        .manifest
        .notes
        .push("panels a-d: n_th = 0.1; panels e-h: n_th = 1e5".into());
    Ok(())
}

// ---------------------------------------------------------------------------
// Figures 4 and 5: occupancy landscape over (phase, squeezing) minimized over
// detuning and coupling at each point, plus cuts at the best phase.
// ---------------------------------------------------------------------------

fn fig45(
    emitter: &mut Emitter,
    user: &ParamBag,
    kappa_a: f64,
    nominal_phi_over_pi: f64,
    nominal_phi_s_over_pi: f64,
) -> Result<(), FigureError> {
    let mut notes = Vec::new();
    let base = merged_bag(
        &[("gamma", 0.25e-6), ("n_th", 1000.0)],
        user,
        &["kappa_a", "chi", "phi", "r", "delta_a", "g_a"],
        &mut notes,
    );
    let mut bag = base.clone();
    bag.set("kappa_a", kappa_a).unwrap();
    emitter.manifest.parameters = bag.entries();
    emitter.manifest.notes.append(&mut notes);
    let seed = emitter.manifest.seed;

    let delta_hi = 6.0 * kappa_a;
    let g_hi = 8.0;
    let contour_axes = |phase_name: &str, r_name: &str| {
        vec![
            axis(phase_name, 0.0, PI, 31, AxisScale::Linear),
            axis(r_name, 0.0, 0.999, 31, AxisScale::Linear),
        ]
    };
    let free = |delta_name: &str, g_name: &str| {
        vec![
            FreeParam {
                name: delta_name.into(),
                lo: 0.05,
                hi: delta_hi,
            },
            FreeParam {
                name: g_name.into(),
                lo: 0.01,
                hi: g_hi,
            },
        ]
    };

    // Panels (a)/(b): the minimized landscapes.
    let contour_internal = run_sweep(&SweepSpec {
        model: ModelKind::InternalReduced,
        method: Method::Lyapunov,
        fixed: bag.entries(),
        axes: contour_axes("phi", "r"),
        minimize_over: free("delta_a", "g_a"),
        seed,
    })?;
    let text = sweep_csv(&["phi", "r"], &contour_internal);
    let statuses: Vec<RecordStatus> = contour_internal.iter().map(|r| r.status).collect();
    emitter.panel(
        if kappa_a >= 100.0 {
            "fig5_a.csv"
        } else {
            "fig4_a.csv"
        },
        &text,
        &statuses,
        vec![],
    )?;

    let contour_injected = run_sweep(&SweepSpec {
        model: ModelKind::Injected,
        method: Method::Lyapunov,
        fixed: bag.entries(),
        axes: contour_axes("phi_s", "r_s"),
        minimize_over: free("delta_a_s", "g_a_s"),
        seed,
    })?;
    let text = sweep_csv(&["phi_s", "r_s"], &contour_injected);
    let statuses: Vec<RecordStatus> = contour_injected.iter().map(|r| r.status).collect();
    emitter.panel(
        if kappa_a >= 100.0 {
            "fig5_b.csv"
        } else {
            "fig4_b.csv"
        },
        &text,
        &statuses,
        vec![],
    )?;

    // Cut phase = the phase of the landscape's global minimum.
    let phi_star = argmin_occupancy(&contour_internal)
        .map(|i| contour_internal[i].coordinates[0])
        .unwrap_or(nominal_phi_over_pi * PI);
    let phi_s_star = argmin_occupancy(&contour_injected)
        .map(|i| contour_injected[i].coordinates[0])
        .unwrap_or(nominal_phi_s_over_pi * PI);
    emitter.manifest.notes.push(format!(
        "internal cut at phi = {:.4} pi (reported value {:.2} pi, difference {:+.4} pi)",
        phi_star / PI,
        nominal_phi_over_pi,
        phi_star / PI - nominal_phi_over_pi
    ));
    emitter.manifest.notes.push(format!(
        "injected cut at phi_s = {:.4} pi (reported value {:.2} pi, difference {:+.4} pi)",
        phi_s_star / PI,
        nominal_phi_s_over_pi,
        phi_s_star / PI - nominal_phi_s_over_pi
    ));

    // Panels (c)-(e): occupancy and minimizer values along the cuts.
    let cut_axis = |name: &str| vec![axis(name, 0.0, 0.999, 121, AxisScale::Linear)];
    let cut_internal = {
        let mut b = bag.clone();
        b.set("phi", phi_star).unwrap();
        run_sweep(&SweepSpec {
            model: ModelKind::InternalReduced,
            method: Method::Lyapunov,
            fixed: b.entries(),
            axes: cut_axis("r"),
            minimize_over: free("delta_a", "g_a"),
            seed,
        })?
    };
    let cut_injected = {
        let mut b = bag.clone();
        b.set("phi_s", phi_s_star).unwrap();
        run_sweep(&SweepSpec {
            model: ModelKind::Injected,
            method: Method::Lyapunov,
            fixed: b.entries(),
            axes: cut_axis("r_s"),
            minimize_over: free("delta_a_s", "g_a_s"),
            seed,
        })?
    };
    let minimizer_fields = |records: &[SweepRecord]| -> Vec<Vec<Field>> {
        records
            .iter()
            .map(|r| {
                let mut out = vec![Field::Missing, Field::Missing];
                for (name, value) in &r.minimizer {
                    if name.starts_with("delta") {
                        out[0] = Field::Number(*value);
                    } else {
                        out[1] = Field::Number(*value);
                    }
                }
                out
            })
            .collect()
    };
    let curves = [
        Curve {
            label: "internal",
            extra: minimizer_fields(&cut_internal),
            records: cut_internal,
        },
        Curve {
            label: "injected",
            extra: minimizer_fields(&cut_injected),
            records: cut_injected,
        },
    ];
    let prefix = if kappa_a >= 100.0 { "fig5" } else { "fig4" };
    let (text, statuses) = stacked_csv(&["r"], &["opt_delta", "opt_g"], &curves);
    emitter.panel(&format!("{prefix}_c.csv"), &text, &statuses, vec![])?;
    // Panels (d) and (e) are thin projections of the same cut data.
    // Panels (d) and (e) are thin projections of the same cut data.
    for (file, column, slot) in [("_d.csv", "opt_delta", 0usize), ("_e.csv", "opt_g", 1usize)] {
        let mut rows = Vec::new();
        let mut statuses = Vec::new();
        for curve in &curves {
            for (record, extra) in curve.records.iter().zip(&curve.extra) {
                rows.push((
                    vec![
                        Field::from(curve.label),
                        Field::Number(record.coordinates[0]),
                        extra[slot].clone(),
                    ],
                    record.status,
                ));
                statuses.push(record.status);
            }
        }
        let text = render_csv(&["model", "r", column], &rows);
        emitter.panel(&format!("{prefix}{file}"), &text, &statuses, vec![])?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Figure 6: pump-mode corrections. Full three-mode model (with the static
// back-action compensated) against the reduced model.
// ---------------------------------------------------------------------------

fn fig6(emitter: &mut Emitter, user: &ParamBag) -> Result<(), FigureError> {
    let mut notes = Vec::new();
    let bag = merged_bag(
        &[
            ("kappa_a", 1.0),
            ("delta_a", 1.0),
            ("g_a", 0.1),
            ("gamma", 0.25e-6),
            ("n_th", 1000.0),
            ("kappa_c", 500.0),
            ("delta_c", 0.0),
        ],
        user,
        &["chi", "phi", "r", "eps", "g_c"],
        &mut notes,
    );
    let kappa_a = bag.get("kappa_a").unwrap();
    let delta_a = bag.get("delta_a").unwrap();
    let kappa_c = bag.get("kappa_c").unwrap();
    let delta_c = bag.get("delta_c").unwrap();
    let g_a_big = bag.get("g_a").unwrap();
    let (phi_opt, chi_opt, _) = internal_optimum(kappa_a, delta_a, 1.0);
    emitter.manifest.parameters = bag.entries();
    emitter.manifest.notes.append(&mut notes);

    // Single-photon scales: the linearized couplings follow from them via
    // G_c = g_c * chi / chi_0 and eps = chi_0 * G_a / g_a.
    let g_a_single = 1e-6;
    let g_c_single_a = 1e-6; // panel (a)
    let chi_0_b = 1e-4; // panel (b)

    // Loss of the cooling mode into the pump mode caps chi_0.
    let eps_collapse = (kappa_a * (kappa_c * kappa_c + delta_c * delta_c) / kappa_c).sqrt();
    let chi_0_collapse = eps_collapse * g_a_single / g_a_big;
    emitter.manifest.notes.push(format!(
        "compensation breaks down (effective linewidth reaches zero) at chi_0 = {chi_0_collapse:.6e}"
    ));

    let reduced_bag = {
        let mut b = bag.clone();
        b.set("chi", chi_opt).unwrap();
        b.set("phi", phi_opt).unwrap();
        b
    };
    let reduced = evaluate_point(ModelKind::InternalReduced, &reduced_bag, Method::Both);

    let eval_full = |chi_0: f64, g_c_single: f64| -> (SweepRecord, f64, f64, Option<f64>) {
        let eps = chi_0 * g_a_big / g_a_single;
        let g_c_big = g_c_single * chi_opt / chi_0;
        let mut p = LinearizedParams::reference();
        p.kappa_a = kappa_a;
        p.delta_a = delta_a;
        p.g_a = g_a_big;
        p.gamma = bag.get("gamma").unwrap();
        p.n_th = bag.get("n_th").unwrap();
        p.chi = chi_opt;
        p.phi = phi_opt;
        p.kappa_c = kappa_c;
        p.delta_c = delta_c;
        p.g_c = g_c_big;
        p.eps = eps;
        match opocool::model::renormalize_for_pump(&p) {
            Ok(q) => {
                let mut b = ParamBag::new();
                for (name, value) in [
                    ("kappa_a", q.kappa_a),
                    ("delta_a", q.delta_a),
                    ("g_a", q.g_a),
                    ("gamma", q.gamma),
                    ("n_th", q.n_th),
                    ("chi", q.chi),
                    ("phi", q.phi),
                    ("kappa_c", q.kappa_c),
                    ("delta_c", q.delta_c),
                    ("g_c", q.g_c),
                    ("eps", q.eps),
                ] {
                    b.set(name, value).expect("known keys");
                }
                let rec = evaluate_point(ModelKind::InternalFull, &b, Method::Both);
                (rec, eps, g_c_big, Some(q.kappa_a))
            }
            Err(_) => (blank_record(), eps, g_c_big, None),
        }
    };

    let panel = |values: &[f64],
                 axis_name: &str,
                 point: &dyn Fn(f64) -> (SweepRecord, f64, f64, Option<f64>)|
     -> (String, Vec<RecordStatus>) {
        let columns = [
            axis_name,
            "eps",
            "g_c_linearized",
            "kappa_a_compensated",
            "n_full_pert",
            "n_full_lyap",
            "n_reduced_pert",
            "n_reduced_lyap",
        ];
        let mut rows = Vec::new();
        let mut statuses = Vec::new();
        for &v in values {
            let (rec, eps, g_c_big, kappa_eff) = point(v);
            let status = rec.status;
            rows.push((
                vec![
                    Field::Number(v),
                    Field::Number(eps),
                    Field::Number(g_c_big),
                    kappa_eff.into(),
                    rec.n_st_pert.into(),
                    rec.n_st_lyap.into(),
                    reduced.n_st_pert.into(),
                    reduced.n_st_lyap.into(),
                ],
                status,
            ));
            statuses.push(status);
        }
        (render_csv(&columns, &rows), statuses)
    };

    let log_grid = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
        (0..n)
            .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
            .collect()
    };

    let chi_0_values = log_grid(1e-6, 2.2e-4, 100);
    let (text, statuses) = panel(&chi_0_values, "chi_0", &|chi_0| {
        eval_full(chi_0, g_c_single_a)
    });
    emitter.panel(
        "fig6_a.csv",
        &text,
        &statuses,
        vec![format!("g_c = {g_c_single_a:.0e}")],
    )?;

    let g_c_values = log_grid(1e-7, 1e-4, 100);
    let (text, statuses) = panel(&g_c_values, "g_c", &|g_c| eval_full(chi_0_b, g_c));
    emitter.panel(
        "fig6_b.csv",
        &text,
        &statuses,
        vec![format!("chi_0 = {chi_0_b:.0e}")],
    )?;

    // Demonstrate that drive amplitudes reproducing the working point exist:
    // reconstruct them from the mean-field inversion and record the result.
    {
        use opocool::mean_field::{invert_targets, solve_mean_field, TargetCouplings};
        use opocool::params::FullModelParams;
        let q = g_a_single * (g_a_big / g_a_single).powi(2)
            + g_c_single_a * (chi_opt / chi_0_b).powi(2);
        let gamma = bag.get("gamma").unwrap();
        let n_th = bag.get("n_th").unwrap();
        let shift = |g: f64| 2.0 * g * q; // static mechanical displacement pull
        let template = FullModelParams {
            omega_m: 1.0,
            gamma,
            n_th,
            kappa_a,
            kappa_c,
            delta_a_bar: delta_a + shift(g_a_single),
            delta_c_bar: delta_c + shift(g_c_single_a),
            g_a: g_a_single,
            g_c: g_c_single_a,
            chi_0: chi_0_b,
            drive_a: num_complex::Complex64::ZERO,
            drive_c: num_complex::Complex64::ZERO,
        };
        let targets = TargetCouplings {
            g_a: g_a_big,
            chi: chi_opt,
            phi: phi_opt,
        };
        match invert_targets(&targets, &template) {
            Ok(full) => {
                let mf = solve_mean_field(&full, 1e-12, 20_000);
                let residual = mf.as_ref().map(|m| m.residual).unwrap_or(f64::NAN);
                emitter.manifest.notes.push(format!(
                    "drive reconstruction: E_a = {:.6e}{:+.6e}i, E_c = {:.6e}{:+.6e}i \
                     (mean-field residual {residual:.2e})",
                    full.drive_a.re, full.drive_a.im, full.drive_c.re, full.drive_c.im
                ));
            }
            Err(e) => {
                emitter
                    .manifest
                    .notes
                    .push(format!("drive reconstruction failed: {e}"));
            }
        }
    }
    Ok(())
}

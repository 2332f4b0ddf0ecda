//! End-to-end acceptance checks for the cooling library and the figure
//! pipeline. Each test prints one PASS/FAIL line with its wall-clock cost and
//! enforces a runtime budget, so this target doubles as a quick health report
//! of the numerical claims the crate is built around.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::{Duration, Instant};

use opocool::frame::equivalence_certificate;
use opocool::lyapunov::{numeric_spectrum, phonon_number, steady_covariance};
use opocool::model::{build_injected_system, build_internal_system, renormalize_for_pump};
use opocool::spectra::{cooling_perturbative, spectrum_injected, spectrum_internal, spectrum_pump};
use opocool::sweep::{optimize_nst, FreeParam, ModelKind, ParamBag};
use opocool::tuning::internal_optimum;
use opocool::{InjectedModelParams, LinearizedParams, ModeLabel, SpectrumSelection};
use opocool_cli::figures::reproduce;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Print the criterion verdict and turn any failure into a test panic.
fn report(index: u32, name: &str, start: Instant, budget: Duration, failures: &[String]) {
    let elapsed = start.elapsed();
    let verdict = if failures.is_empty() && elapsed <= budget {
        "PASS"
    } else {
        "FAIL"
    };
    println!(
        "acceptance {index} ({name}): {verdict} [{:.2} s of {:.0} s budget]",
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    for f in failures {
        println!("  - {f}");
    }
    assert!(failures.is_empty(), "acceptance {index} ({name}) failed");
    assert!(
        elapsed <= budget,
        "acceptance {index} ({name}) exceeded its budget: {elapsed:?} > {budget:?}"
    );
}

fn free(name: &str, lo: f64, hi: f64) -> FreeParam {
    FreeParam {
        name: name.into(),
        lo,
        hi,
    }
}

fn exact_occupancy(p: &LinearizedParams, include_pump: bool) -> Result<f64, String> {
    let sys = build_internal_system(p, include_pump).map_err(|e| e.to_string())?;
    let cov = steady_covariance(&sys).map_err(|e| e.to_string())?;
    Ok(phonon_number(&cov))
}

#[test]
fn c1_tuned_gain_cancels_the_stokes_sideband() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut failures = Vec::new();
    let mut checked = 0usize;
    while checked < 1000 {
        let kappa_a = rng.random_range(0.05..20.0);
        // delta_a > omega_m / 2 guarantees the optimum sits below threshold.
        let delta_a = rng.random_range(0.55..10.0);
        let (phi, chi, r_opt) = internal_optimum(kappa_a, delta_a, 1.0);
        if r_opt >= 1.0 {
            continue;
        }
        checked += 1;
        let mut p = LinearizedParams::reference();
        p.kappa_a = kappa_a;
        p.delta_a = delta_a;
        p.chi = chi;
        p.phi = phi;
        p.g_a = 0.0;
        match spectrum_internal(&p, -p.omega_m) {
            Ok(s) if s.abs() <= 1e-12 => {}
            Ok(s) => failures.push(format!(
                "S(-omega_m) = {s:.3e} at kappa_a = {kappa_a:.4}, delta_a = {delta_a:.4}"
            )),
            Err(e) => failures.push(format!(
                "spectrum failed at kappa_a = {kappa_a:.4}, delta_a = {delta_a:.4}: {e}"
            )),
        }
        if failures.len() > 5 {
            break;
        }
    }
    report(
        1,
        "tuned gain zeroes the heating sideband",
        start,
        Duration::from_secs(1),
        &failures,
    );
}

#[test]
fn c2_reference_point_rates_match_hand_values() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut check = |label: &str, got: f64, want: f64, tol: f64| {
        if (got - want).abs() > tol {
            failures.push(format!(
                "{label}: got {got:.12}, want {want} within {tol:.0e}"
            ));
        }
    };

    let plain = cooling_perturbative(&LinearizedParams::reference(), false).unwrap();
    check("plain-cavity A+", plain.a_plus, 0.004, 1e-9);
    check("plain-cavity A-", plain.a_minus, 0.02, 1e-9);
    check(
        "plain-cavity n_o",
        plain.n_o.unwrap_or(f64::NAN),
        0.25,
        1e-9,
    );
    check(
        "plain-cavity N_st",
        plain.n_st.unwrap_or(f64::NAN),
        0.26562,
        1e-4,
    );

    let mut q = LinearizedParams::reference();
    let (phi, chi, _) = internal_optimum(q.kappa_a, q.delta_a, q.omega_m);
    q.chi = chi;
    q.phi = phi;
    let tuned = cooling_perturbative(&q, false).unwrap();
    check("suppressed net rate", tuned.gamma_opt, 0.02, 1e-9);
    check(
        "suppressed N_st",
        tuned.n_st.unwrap_or(f64::NAN),
        0.012500,
        1e-5,
    );

    report(
        2,
        "reference-point sideband rates",
        start,
        Duration::from_secs(1),
        &failures,
    );
}

#[test]
fn c3_perturbative_tracks_exact_then_departs_at_strong_coupling() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let discrepancy = |g_a: f64| -> Result<f64, String> {
        let mut p = LinearizedParams::reference();
        p.g_a = g_a;
        let pert = cooling_perturbative(&p, false)
            .map_err(|e| e.to_string())?
            .n_st
            .ok_or_else(|| format!("heating at g_a = {g_a}"))?;
        let lyap = exact_occupancy(&p, false)?;
        Ok((pert - lyap).abs() / lyap)
    };

    let weak = match discrepancy(0.1) {
        Ok(d) => {
            if d > 0.05 {
                failures.push(format!("relative gap {:.3}% > 5% at g_a = 0.1", 100.0 * d));
            }
            d
        }
        Err(e) => {
            failures.push(e);
            f64::NAN
        }
    };

    let grid = [0.32, 0.35, 0.38, 0.42, 0.45];
    let mut previous = weak;
    for g_a in grid {
        match discrepancy(g_a) {
            Ok(d) => {
                let growing = d.is_finite() && d > previous;
                if !growing {
                    failures.push(format!(
                        "gap is not growing: {:.3}% at g_a = {g_a} after {:.3}%",
                        100.0 * d,
                        100.0 * previous
                    ));
                }
                previous = d;
            }
            Err(e) => failures.push(e),
        }
    }

    report(
        3,
        "perturbative validity window",
        start,
        Duration::from_secs(5),
        &failures,
    );
}

#[test]
fn c4_squeezed_frame_certificates_pass_on_a_random_grid() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut failures = Vec::new();
    for _ in 0..125 {
        let mut p = LinearizedParams::reference();
        p.kappa_a = rng.random_range(0.2..5.0);
        p.delta_a = rng.random_range(0.3..3.0);
        // The frame mapping needs chi < |delta_a|.
        p.chi = rng.random_range(0.05..0.95) * p.delta_a.abs();
        p.phi = rng.random_range(0.0..PI);
        p.g_a = rng.random_range(0.01..0.2);
        match equivalence_certificate(&p, 1e-8) {
            Ok(rep) if rep.pass => {}
            Ok(rep) => failures.push(format!(
                "relative gap {:.3e} at kappa_a = {:.4}, delta_a = {:.4}, chi = {:.4}, phi = {:.4}",
                rep.relative_difference, p.kappa_a, p.delta_a, p.chi, p.phi
            )),
            Err(e) => failures.push(format!(
                "certificate failed at kappa_a = {:.4}, delta_a = {:.4}, chi = {:.4}: {e}",
                p.kappa_a, p.delta_a, p.chi
            )),
        }
        if failures.len() > 5 {
            break;
        }
    }
    report(
        4,
        "squeezed-frame equivalence certificates",
        start,
        Duration::from_secs(10),
        &failures,
    );
}

#[test]
fn c5_optimized_squeezing_beats_the_backaction_limit_far_from_resolved() {
    let start = Instant::now();
    let mut failures = Vec::new();

    // A plain cavity at kappa_a = 10 omega_m bottoms out at n_o = 25.
    let mut p = LinearizedParams::reference();
    p.kappa_a = 10.0;
    let plain = cooling_perturbative(&p, false).unwrap();
    let n_o = plain.n_o.unwrap_or(f64::NAN);
    if (n_o - 25.0).abs() > 1e-6 {
        failures.push(format!("plain backaction limit: got {n_o:.9}, want 25"));
    }

    let base_bag = |kappa_a: f64| -> ParamBag {
        let mut bag = ParamBag::new();
        bag.set("omega_m", 1.0).unwrap();
        bag.set("gamma", 0.25e-6).unwrap();
        bag.set("n_th", 1000.0).unwrap();
        bag.set("kappa_a", kappa_a).unwrap();
        bag
    };

    // With gain, detuning, phase, and coupling free, the same cavity cools
    // below one phonon.
    let internal_free = |hi_delta: f64, hi_g: f64| {
        vec![
            free("delta_a", 0.2, hi_delta),
            free("g_a", 0.01, hi_g),
            free("phi", 0.0, PI),
            free("r", 0.0, 0.999),
        ]
    };
    match optimize_nst(
        ModelKind::InternalReduced,
        &internal_free(50.0, 5.0),
        &base_bag(10.0),
        505,
    ) {
        Ok(rec) => {
            let n = rec.n_st_lyap.unwrap_or(f64::NAN);
            let cooled = n.is_finite() && n < 1.0;
            if !cooled {
                failures.push(format!("optimized N_st = {n:.4} at kappa_a = 10, want < 1"));
            }
        }
        Err(e) => failures.push(format!("kappa_a = 10 optimization failed: {e}")),
    }

    // At kappa_a = 100 omega_m internal gain holds an advantage over injected
    // squeezing because its effective cavity response narrows.
    let internal_best = optimize_nst(
        ModelKind::InternalReduced,
        &internal_free(600.0, 8.0),
        &base_bag(100.0),
        506,
    );
    let injected_free = vec![
        free("delta_a_s", 0.2, 600.0),
        free("g_a_s", 0.01, 8.0),
        free("phi_s", 0.0, PI),
        free("r_s", 0.0, 0.999),
    ];
    let injected_best = optimize_nst(ModelKind::Injected, &injected_free, &base_bag(100.0), 507);
    match (internal_best, injected_best) {
        (Ok(int_rec), Ok(inj_rec)) => {
            let n_int = int_rec.n_st_lyap.unwrap_or(f64::NAN);
            let n_inj = inj_rec.n_st_lyap.unwrap_or(f64::NAN);
            let ordered = n_int.is_finite() && n_inj.is_finite() && n_int <= n_inj;
            if !ordered {
                failures.push(format!(
                    "internal optimum {n_int:.4} exceeds injected optimum {n_inj:.4} at kappa_a = 100"
                ));
            }
        }
        (Err(e), _) => failures.push(format!("kappa_a = 100 internal optimization failed: {e}")),
        (_, Err(e)) => failures.push(format!("kappa_a = 100 injected optimization failed: {e}")),
    }

    report(
        5,
        "unresolved-sideband cooling advantage",
        start,
        Duration::from_secs(300),
        &failures,
    );
}

#[test]
fn c6_explicit_pump_mode_converges_to_the_reduced_model() {
    let start = Instant::now();
    let mut failures = Vec::new();

    let (phi, chi, _) = internal_optimum(1.0, 1.0, 1.0);
    let mut reduced = LinearizedParams::reference();
    reduced.chi = chi;
    reduced.phi = phi;
    let n_reduced = exact_occupancy(&reduced, false).unwrap();

    // Single-photon scales chi_0 and g_c fix the pump-mode parameters through
    // eps = chi_0 g_a / g_a0 and G_c = g_c chi / chi_0; the pump-induced loss
    // is pre-compensated so both models target the same effective cavity.
    let g_a0 = 1e-6;
    let chi_0 = 1e-4;
    let full_occupancy = |g_c0: f64| -> Result<f64, String> {
        let mut p = reduced.clone();
        p.kappa_c = 500.0;
        p.delta_c = 0.0;
        p.eps = chi_0 * p.g_a / g_a0;
        p.g_c = g_c0 * chi / chi_0;
        let q = renormalize_for_pump(&p).map_err(|e| e.to_string())?;
        exact_occupancy(&q, true)
    };

    let mut gaps = Vec::new();
    for g_c0 in [1e-6, 3e-6, 1e-5, 3e-5] {
        match full_occupancy(g_c0) {
            Ok(n_full) => gaps.push((n_full - n_reduced).abs() / n_reduced),
            Err(e) => failures.push(format!("full model failed at g_c = {g_c0:.1e}: {e}")),
        }
    }
    if let Some(&base) = gaps.first() {
        if base > 0.02 {
            failures.push(format!(
                "full-vs-reduced gap {:.3}% > 2% at g_c = 1e-6",
                100.0 * base
            ));
        }
    }
    if !gaps.windows(2).all(|w| w[0] < w[1]) {
        failures.push(format!("gap does not grow with g_c: {gaps:?}"));
    }

    report(
        6,
        "pump-mode correction limit",
        start,
        Duration::from_secs(60),
        &failures,
    );
}

#[test]
fn c7_resolvent_spectra_match_the_closed_forms() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut failures = Vec::new();
    let grid: Vec<f64> = (0..201).map(|i| -3.0 + 6.0 * i as f64 / 200.0).collect();

    // Pointwise tolerance: 1e-10 of the local value, with a floor far below
    // the curve scale so interference zeros do not divide by zero.
    let compare = |label: &str, numeric: &[f64], analytic: &[f64], failures: &mut Vec<String>| {
        let peak = analytic.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (i, (n, a)) in numeric.iter().zip(analytic).enumerate() {
            if (n - a).abs() > 1e-10 * a.abs().max(1e-3 * peak) {
                failures.push(format!(
                    "{label}: |{n:.6e} - {a:.6e}| at omega = {:.3} (peak {peak:.3e})",
                    grid[i]
                ));
                break;
            }
        }
    };

    for draw in 0..100 {
        // Cavity with internal gain, decoupled from the mechanics.
        let mut p = LinearizedParams::reference();
        p.kappa_a = rng.random_range(0.3..3.0);
        p.delta_a = rng.random_range(-2.0..2.0);
        p.chi = rng.random_range(0.0..0.9) * p.kappa_a.hypot(p.delta_a);
        p.phi = rng.random_range(0.0..PI);
        p.g_a = 0.0;
        let sys = build_internal_system(&p, false).unwrap();
        let numeric = numeric_spectrum(
            &sys,
            SpectrumSelection::Auto {
                mode: ModeLabel::CoolingCavity,
                angle: 0.0,
            },
            &grid,
        )
        .unwrap();
        let analytic: Vec<f64> = grid
            .iter()
            .map(|&w| spectrum_internal(&p, w).unwrap())
            .collect();
        compare(
            &format!("internal draw {draw}"),
            &numeric.values,
            &analytic,
            &mut failures,
        );

        // Cavity driven by squeezed input noise, decoupled as well.
        let inj = InjectedModelParams::pure(
            rng.random_range(0.3..3.0),
            rng.random_range(-2.0..2.0),
            0.0,
            rng.random_range(0.0..2.0),
            rng.random_range(0.0..PI),
            1.0,
            0.25e-6,
            1000.0,
        );
        let sys = build_injected_system(&inj).unwrap();
        let numeric = numeric_spectrum(
            &sys,
            SpectrumSelection::Auto {
                mode: ModeLabel::CoolingCavity,
                angle: 0.0,
            },
            &grid,
        )
        .unwrap();
        let analytic: Vec<f64> = grid.iter().map(|&w| spectrum_injected(&inj, w)).collect();
        compare(
            &format!("injected draw {draw}"),
            &numeric.values,
            &analytic,
            &mut failures,
        );

        // Bare pump mode of the three-mode system.
        let mut p = LinearizedParams::reference();
        p.g_a = 0.0;
        p.kappa_c = rng.random_range(50.0..500.0);
        p.delta_c = rng.random_range(-100.0..100.0);
        let sys = build_internal_system(&p, true).unwrap();
        let numeric = numeric_spectrum(
            &sys,
            SpectrumSelection::Auto {
                mode: ModeLabel::PumpCavity,
                angle: 0.0,
            },
            &grid,
        )
        .unwrap();
        let analytic: Vec<f64> = grid.iter().map(|&w| spectrum_pump(&p, w)).collect();
        compare(
            &format!("pump draw {draw}"),
            &numeric.values,
            &analytic,
            &mut failures,
        );

        if failures.len() > 5 {
            break;
        }
    }

    report(
        7,
        "resolvent spectra vs closed forms",
        start,
        Duration::from_secs(30),
        &failures,
    );
}

#[test]
fn c8_below_threshold_gain_squeezes_to_the_known_variance() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for r in [0.1, 0.5, 0.9] {
        let mut p = LinearizedParams::reference();
        p.delta_a = 0.0;
        p.phi = FRAC_PI_2;
        p.chi = r * p.kappa_a;
        p.g_a = 0.0;
        let sys = build_internal_system(&p, false).unwrap();
        let cov = steady_covariance(&sys).unwrap();
        let got = cov.matrix[(0, 0)];
        let want = 1.0 / (1.0 + r);
        if (got - want).abs() > 1e-10 {
            failures.push(format!("V_xx = {got:.12} at R = {r}, want {want:.12}"));
        }
    }
    report(
        8,
        "squeezed variance law",
        start,
        Duration::from_secs(1),
        &failures,
    );
}

#[test]
fn c9_figure_datasets_are_deterministic() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let bag = ParamBag::new();
    for (label, dir) in [("first", &dir_a), ("second", &dir_b)] {
        if let Err(e) = reproduce(1, &bag, dir.path()) {
            failures.push(format!("{label} run failed: {e}"));
        }
    }
    for name in ["fig1_a.csv", "fig1_b.csv", "fig1_c.csv", "fig1_d.csv"] {
        let a = std::fs::read(dir_a.path().join(name)).unwrap_or_default();
        let b = std::fs::read(dir_b.path().join(name)).unwrap_or_default();
        if a.is_empty() {
            failures.push(format!("{name}: first run produced no data"));
        } else if a != b {
            failures.push(format!("{name}: runs differ byte-for-byte"));
        }
    }
    report(
        9,
        "figure datasets are deterministic",
        start,
        Duration::from_secs(30),
        &failures,
    );
}

//! Experiment implementations: each consumes a validated config, writes its
//! artifacts under the output directory, and returns a structured report.
//! Runs are deterministic given the config (the seed drives every randomized
//! suite).

use crate::config::{ExperimentConfig, ExperimentTag};
use crate::report::RunReport;
use nlslab::blowup::{
    blowup_rate_fit_series, concentration_scan_analytic, concentration_scan_trajectory,
    estimate_blowup_time, minimal_mass_initial, momentum_bound_check, pseudo_conformal_field,
    renormalize_snapshot, virial_series_check, trajectory_from_fields, PseudoConformalParams,
    WindowRule,
};
use nlslab::cartesian::CartesianGrid;
use nlslab::evolution::{dt_stability_limit, evolve, EvolveOptions, StopReason, Trajectory};
use nlslab::functionals::hardy_sharpness_probe;
use nlslab::ground_state::{
    gn_constant_report, solve_ground_state, translated_bump_supremum, GroundState,
    GroundStateMethod,
};
use nlslab::params::ProblemParams;
use nlslab::profile::DecompositionLedger;
use nlslab::RadialField;
use nlslab::num_complex::Complex64;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

pub struct RunContext {
    pub out_dir: PathBuf,
    pub threads: usize,
}

pub fn run(config: ExperimentConfig, ctx: &RunContext) -> Result<RunReport, String> {
    std::fs::create_dir_all(&ctx.out_dir)
        .map_err(|e| format!("cannot create {}: {e}", ctx.out_dir.display()))?;
    let started = Instant::now();
    let mut report = match config.experiment {
        ExperimentTag::GroundState => run_ground_state(&config, ctx)?,
        ExperimentTag::GnSweep => run_gn_sweep(&config, ctx)?,
        ExperimentTag::Evolve => run_evolve(&config, ctx)?,
        ExperimentTag::MinimalMassBlowup => run_minimal_mass(&config, ctx)?,
        ExperimentTag::ProfileDemo => run_profile_demo(&config, ctx)?,
        ExperimentTag::VirialCheck => run_virial_check(&config, ctx)?,
    };
    report.wall_time_s = started.elapsed().as_secs_f64();
    let path = ctx.out_dir.join("report.json");
    report.write(&path).map_err(|e| format!("report write: {e}"))?;
    println!(
        "{}: {} ({} checks, {:.2}s) -> {}",
        config.experiment.name(),
        report.status,
        report.checks.len(),
        report.wall_time_s,
        path.display()
    );
    Ok(report)
}

fn method_from(config: &ExperimentConfig) -> Result<GroundStateMethod, String> {
    match config.method.as_deref().unwrap_or("shooting") {
        "shooting" => Ok(GroundStateMethod::Shooting),
        "gradient-flow" => Ok(GroundStateMethod::GradientFlow),
        other => Err(format!("method: unknown solver '{other}'")),
    }
}

fn solve_for(
    config: &ExperimentConfig,
    params: ProblemParams,
    ctx: &RunContext,
    label: &str,
) -> Result<(GroundState, Vec<PathBuf>), String> {
    let grid = config
        .grid
        .as_ref()
        .ok_or("grid: missing")?
        .build(params)
        .map_err(|e| e.to_string())?;
    let method = method_from(config)?;
    let tol = config.solver_tol.unwrap_or(1e-12);
    let q = solve_ground_state(params, &grid, method, tol).map_err(|e| e.to_string())?;
    let field_csv = ctx.out_dir.join(format!("{label}.csv"));
    let field_json = ctx.out_dir.join(format!("{label}.json"));
    let diag_json = ctx.out_dir.join(format!("{label}_diagnostics.json"));
    q.field().write_csv(&field_csv).map_err(|e| e.to_string())?;
    q.field().write_json(&field_json).map_err(|e| e.to_string())?;
    q.write_diagnostics(&diag_json).map_err(|e| e.to_string())?;
    Ok((q, vec![field_csv, field_json, diag_json]))
}

fn ground_state_checks(report: &mut RunReport, q: &GroundState, residual_tol: f64, prefix: &str) {
    let (rho1, rho2) = q.pohozaev_residuals();
    let gap = gn_constant_report(q).relative_gap();
    report.check_le(
        &format!("{prefix}elliptic_residual"),
        q.elliptic_residual(),
        residual_tol,
        "criterion 2: discrete L2 defect of the elliptic equation",
    );
    report.check_le(
        &format!("{prefix}pohozaev_rho1"),
        rho1,
        1e-4,
        "criterion 2: |M - (2/d) h1c| / M",
    );
    report.check_le(
        &format!("{prefix}pohozaev_rho2"),
        rho2,
        1e-4,
        "criterion 2: |M - (2/(d+2)) Lq| / M",
    );
    report.check_le(
        &format!("{prefix}gn_agreement"),
        gap,
        1e-4,
        "criterion 2: |J_c(Q) - (d+2)/d M^{-2/d}| / C",
    );
}

fn run_ground_state(config: &ExperimentConfig, ctx: &RunContext) -> Result<RunReport, String> {
    let params = config.params()?;
    let mut report = RunReport::new(config.clone());
    let (q, artifacts) = solve_for(config, params, ctx, "ground_state")?;
    for a in &artifacts {
        report.add_artifact(a);
    }
    ground_state_checks(&mut report, &q, config.residual_tol, "");

    if let Some(probe) = &config.hardy_probe {
        let p0 = ProblemParams::new(config.d, 0.0).map_err(|e| e.to_string())?;
        let grid = nlslab::grid::RadialGrid::build(
            p0,
            probe.r_max,
            probe.n,
            nlslab::grid::GridScheme::Graded {
                rmin_ratio: probe.rmin_ratio,
            },
        )
        .map_err(|e| e.to_string())?;
        let mut ratios = Vec::new();
        for &eps in &probe.epsilons {
            ratios.push(hardy_sharpness_probe(&grid, eps).map_err(|e| e.to_string())?);
        }
        let lam = p0.hardy_constant();
        let monotone = ratios.windows(2).all(|w| w[1] < w[0]);
        report.check_that(
            "hardy_probe_monotone",
            monotone,
            &format!("criterion 1: ratios {ratios:?} decrease toward {lam}"),
        );
        let final_err = (ratios.last().unwrap() - lam).abs() / lam;
        report.check_le(
            "hardy_probe_final",
            final_err,
            0.10,
            "criterion 1: final probe within 10% of the sharp constant",
        );
    }

    if let Some(na) = &config.nonattainment {
        if params.c >= 0.0 {
            return Err("nonattainment: requires c < 0".into());
        }
        let p0 = ProblemParams::new(config.d, 0.0).map_err(|e| e.to_string())?;
        let ref_grid = na.reference_grid.build(p0)?;
        let q0 = solve_ground_state(p0, &ref_grid, GroundStateMethod::Shooting, 1e-12)
            .map_err(|e| e.to_string())?;
        let cgn0 = q0.gn_constant();
        let cart = CartesianGrid::build(params, na.box_half_extent, na.box_n)
            .map_err(|e| e.to_string())?;
        let samples = translated_bump_supremum(params, &q0, &cart, &na.shifts)
            .map_err(|e| e.to_string())?;
        let values: Vec<f64> = samples.iter().map(|s| s.weinstein).collect();
        let increasing = values.windows(2).all(|w| w[1] > w[0]);
        let below = values.iter().all(|&j| j < cgn0);
        report.check_that(
            "nonattainment_monotone",
            increasing && below,
            &format!("criterion 4: J sequence {values:?} increasing, all below C_GN(0) = {cgn0:.6}"),
        );
        let final_gap = (cgn0 - values.last().unwrap()) / cgn0;
        report.check_le(
            "nonattainment_final_gap",
            final_gap,
            0.05,
            "criterion 4: gap to C_GN(0) at the largest shift",
        );
    }
    Ok(report)
}

/// Independent runs along a coupling axis; members run concurrently up to the
/// thread budget and errors isolate to their own row.
pub fn sweep_coupling(
    config: &ExperimentConfig,
    values: &[f64],
    threads: usize,
) -> Vec<Result<(f64, GroundState), String>> {
    let run_one = |c: f64| -> Result<(f64, GroundState), String> {
        let params = ProblemParams::new(config.d, c).map_err(|e| format!("c = {c}: {e}"))?;
        let grid = config
            .grid
            .as_ref()
            .ok_or("grid: missing")?
            .build(params)
            .map_err(|e| format!("c = {c}: {e}"))?;
        let method = match config.method.as_deref().unwrap_or("shooting") {
            "shooting" => GroundStateMethod::Shooting,
            "gradient-flow" => GroundStateMethod::GradientFlow,
            other => return Err(format!("method: unknown solver '{other}'")),
        };
        let q = solve_ground_state(params, &grid, method, config.solver_tol.unwrap_or(1e-12))
            .map_err(|e| format!("c = {c}: {e}"))?;
        Ok((c, q))
    };

    let mut out: Vec<Option<Result<(f64, GroundState), String>>> =
        (0..values.len()).map(|_| None).collect();
    let chunk = threads.max(1);
    for batch in values.chunks(chunk).enumerate() {
        let (bi, cs) = batch;
        std::thread::scope(|scope| {
            let handles: Vec<_> = cs.iter().map(|&c| scope.spawn(move || run_one(c))).collect();
            for (k, h) in handles.into_iter().enumerate() {
                out[bi * chunk + k] = Some(h.join().expect("sweep worker panicked"));
            }
        });
    }
    out.into_iter().map(|r| r.unwrap()).collect()
}

fn run_gn_sweep(config: &ExperimentConfig, ctx: &RunContext) -> Result<RunReport, String> {
    let values = config.sweep_values.clone().unwrap_or_default();
    let mut report = RunReport::new(config.clone());
    if values.is_empty() {
        report.check_that("sweep_nonempty", true, "empty sweep: nothing to run");
        return Ok(report);
    }
    let results = sweep_coupling(config, &values, ctx.threads);

    // reference mass for the radial ordering when negative couplings appear
    let q0_mass = if values.iter().any(|&c| c < 0.0) {
        let p0 = ProblemParams::new(config.d, 0.0).map_err(|e| e.to_string())?;
        let grid = config.grid.as_ref().unwrap().build(p0)?;
        Some(
            solve_ground_state(p0, &grid, GroundStateMethod::Shooting, 1e-12)
                .map_err(|e| e.to_string())?
                .mass(),
        )
    } else {
        None
    };

    let csv = ctx.out_dir.join("sweep.csv");
    let mut rows = String::from("c,mass,gn_constant,rho1,rho2,residual\n");
    for res in &results {
        match res {
            Ok((c, q)) => {
                let (rho1, rho2) = q.pohozaev_residuals();
                rows.push_str(&format!(
                    "{c},{},{},{rho1},{rho2},{}\n",
                    q.mass(),
                    q.gn_constant(),
                    q.elliptic_residual()
                ));
                report.check_le(
                    &format!("pohozaev_rho1[c={c}]"),
                    rho1,
                    1e-4,
                    "criterion 2: Pohozaev identity along the sweep",
                );
                if let Some(m0) = q0_mass {
                    if *c < 0.0 {
                        report.check_that(
                            &format!("radial_mass_above_reference[c={c}]"),
                            q.mass() > m0,
                            &format!(
                                "criterion 3: M_gs_rad = {} > |Q_0|^2 = {m0}",
                                q.mass()
                            ),
                        );
                    }
                }
            }
            Err(e) => {
                report.check_that(&format!("run[{e}]"), false, "sweep member failed");
            }
        }
    }
    std::fs::write(&csv, rows).map_err(|e| e.to_string())?;
    report.add_artifact(&csv);
    Ok(report)
}

fn evolve_with(
    config: &ExperimentConfig,
    params: ProblemParams,
    u0: &RadialField,
) -> Result<Trajectory, String> {
    let e = config.evolve.as_ref().ok_or("evolve: missing")?;
    let limit = dt_stability_limit(u0.grid());
    if e.dt > limit && !e.allow_dt_above_rule {
        return Err(format!(
            "evolve.dt: {} violates the default rule dt <= 0.5 h_min^2 = {limit:.3e} (set allow_dt_above_rule to override)",
            e.dt
        ));
    }
    evolve(
        u0,
        params,
        EvolveOptions {
            dt: e.dt,
            t_end: e.t_end,
            blowup_threshold: e.blowup_threshold,
            snapshot_stride: e.snapshot_stride,
            enforce_dt_rule: !e.allow_dt_above_rule,
            min_focus_cells: e.min_focus_cells,
        },
    )
    .map_err(|e| e.to_string())
}

fn export_trajectory(
    traj: &Trajectory,
    dump_fields: bool,
    ctx: &RunContext,
    report: &mut RunReport,
) -> Result<(), String> {
    let series = ctx.out_dir.join("series.csv");
    let manifest = ctx.out_dir.join("run_manifest.json");
    traj.write_series_csv(&series).map_err(|e| e.to_string())?;
    traj.write_manifest(&manifest).map_err(|e| e.to_string())?;
    report.add_artifact(&series);
    report.add_artifact(&manifest);
    if dump_fields {
        let dir = ctx.out_dir.join("fields");
        traj.write_fields(&dir).map_err(|e| e.to_string())?;
        report.add_artifact(&dir);
    }
    Ok(())
}

fn run_evolve(config: &ExperimentConfig, ctx: &RunContext) -> Result<RunReport, String> {
    let params = config.params()?;
    let mut report = RunReport::new(config.clone());
    // standing-wave conservation run: the initial datum is the discrete
    // ground state of the evolution grid itself
    let grid = config.grid.as_ref().unwrap().build(params)?;
    let q = solve_ground_state(params, &grid, GroundStateMethod::GradientFlow, 1e-13)
        .map_err(|e| e.to_string())?;
    let traj = evolve_with(config, params, q.field())?;
    export_trajectory(&traj, config.evolve.as_ref().unwrap().dump_fields, ctx, &mut report)?;
    report.check_that(
        "completed",
        traj.stop_reason == StopReason::Completed,
        &format!("criterion 5: run completed ({})", traj.stop_detail),
    );
    report.check_le(
        "mass_drift",
        traj.mass_drift(),
        1e-8,
        "criterion 5: |M(t) - M(0)| / M(0) over retained snapshots",
    );
    report.check_le(
        "energy_drift",
        traj.energy_drift(),
        1e-6,
        "criterion 5: |E(t) - E(0)| relative over retained snapshots",
    );
    Ok(report)
}

fn run_minimal_mass(config: &ExperimentConfig, ctx: &RunContext) -> Result<RunReport, String> {
    let params = config.params()?;
    let b = config.blowup.as_ref().unwrap().clone();
    let mut report = RunReport::new(config.clone());

    let qgrid = b.ground_grid.build(params)?;
    let q = Arc::new(
        solve_ground_state(params, &qgrid, GroundStateMethod::Shooting, 1e-12)
            .map_err(|e| e.to_string())?,
    );
    let pc = PseudoConformalParams::new(Arc::clone(&q), b.t_blowup, b.theta, b.lambda)
        .map_err(|e| e.to_string())?;

    let egrid = config.grid.as_ref().unwrap().build(params)?;
    let u0 = minimal_mass_initial(&pc, &egrid).map_err(|e| e.to_string())?;
    let mut cfg = config.clone();
    if let Some(e) = cfg.evolve.as_mut() {
        e.t_end = b.t_end_fraction * b.t_blowup;
    }
    let traj = evolve_with(&cfg, params, &u0)?;
    export_trajectory(&traj, config.evolve.as_ref().unwrap().dump_fields, ctx, &mut report)?;

    // criterion 6: field agreement with the exact solution
    for (target, tol) in [(0.5 * b.t_blowup, 0.01), (b.t_end_fraction * b.t_blowup, 0.05)] {
        let snap = traj
            .snapshots
            .iter()
            .min_by(|x, y| (x.t - target).abs().partial_cmp(&(y.t - target).abs()).unwrap())
            .unwrap();
        let exact = pseudo_conformal_field(&pc, snap.t, &egrid).map_err(|e| e.to_string())?;
        let mut err2 = 0.0;
        let mut nrm2 = 0.0;
        for j in 0..egrid.len() {
            let d = snap.field.values()[j] - exact.values()[j];
            err2 += egrid.weights()[j] * d.norm_sqr();
            nrm2 += egrid.weights()[j] * exact.values()[j].norm_sqr();
        }
        report.check_le(
            &format!("l2_match_t{:.2}", snap.t),
            (err2 / nrm2).sqrt(),
            tol,
            "criterion 6: relative L2 distance to the exact blow-up solution",
        );
    }

    // criterion 6: rate constancy over the tail + the lower-bound witness
    let tail: Vec<_> = traj
        .snapshots
        .iter()
        .filter(|s| s.t >= 0.875 * b.t_end_fraction * b.t_blowup)
        .collect();
    let times: Vec<f64> = tail.iter().map(|s| s.t).collect();
    let grads: Vec<f64> = tail.iter().map(|s| s.grad_norm).collect();
    let fit = blowup_rate_fit_series(&times, &grads, b.t_blowup, times.len())
        .map_err(|e| e.to_string())?;
    report.check_le(
        "rate_linear_spread",
        fit.linear_spread,
        0.02,
        "criterion 6: grad_norm (T-t) constant over the tail",
    );
    report.check_that(
        "rate_lower_bound",
        fit.c_lower > 0.0,
        &format!("rate witness C = {:.4} > 0", fit.c_lower),
    );
    let t_est = estimate_blowup_time(&traj).map_err(|e| e.to_string())?;
    let fit_json = ctx.out_dir.join("rate_fit.json");
    let fit_rec = serde_json::json!({
        "t_est_extrapolated": t_est,
        "t_blowup": b.t_blowup,
        "c_lower": fit.c_lower,
        "linear_constant": fit.linear_constant,
        "linear_spread": fit.linear_spread,
        "tolerance_spread": 0.02,
    });
    std::fs::write(&fit_json, serde_json::to_string_pretty(&fit_rec).unwrap())
        .map_err(|e| e.to_string())?;
    report.add_artifact(&fit_json);

    // criterion 7: virial identities
    let vf = virial_series_check(&traj).map_err(|e| e.to_string())?;
    let e0 = vf.energy_u0;
    report.check_le(
        "virial_second_difference",
        (vf.second_difference - 16.0 * e0).abs() / (16.0 * e0),
        0.01,
        "criterion 7: d2/dt2 of the virial series vs 16 E(u0)",
    );
    report.check_le(
        "virial_fit_quadratic",
        (vf.fit_quadratic[2] - 8.0 * e0).abs() / (8.0 * e0),
        0.01,
        "criterion 7: quadratic coefficient vs 8 E(u0)",
    );
    report.check_le(
        "virial_fit_linear",
        (vf.fit_quadratic[1] + 4.0 * vf.momentum_term).abs() / (4.0 * vf.momentum_term.abs()),
        0.01,
        "criterion 7: linear coefficient vs -4 momentum",
    );
    report.check_le(
        "virial_fit_constant",
        (vf.fit_quadratic[0] - vf.virial0).abs() / vf.virial0,
        0.01,
        "criterion 7: constant coefficient vs the initial virial",
    );
    let virial_json = ctx.out_dir.join("virial_fit.json");
    std::fs::write(&virial_json, serde_json::to_string_pretty(&vf).unwrap())
        .map_err(|e| e.to_string())?;
    report.add_artifact(&virial_json);

    // criterion 8: concentration witness (analytic tail) + solver cross-check
    let diag = nlslab::grid::RadialGrid::build(
        params,
        egrid.r_max(),
        16384,
        nlslab::grid::GridScheme::Graded { rmin_ratio: 1e-6 },
    )
    .map_err(|e| e.to_string())?;
    let scan_times: Vec<f64> = [0.5, 0.8, 0.9, 0.95].iter().map(|f| f * b.t_blowup).collect();
    let scan = concentration_scan_analytic(&pc, &scan_times, &diag, WindowRule::SqrtRemaining)
        .map_err(|e| e.to_string())?;
    let captured_frac = scan.captured.last().unwrap() / q.mass();
    report.check_that(
        "concentration_tail",
        captured_frac >= 0.99,
        &format!("criterion 8: captured {captured_frac:.4} of the ground mass at t = 0.95 T"),
    );
    let scan_csv = ctx.out_dir.join("concentration.csv");
    scan.write_csv(&scan_csv).map_err(|e| e.to_string())?;
    report.add_artifact(&scan_csv);
    let scan_num = concentration_scan_trajectory(&traj, b.t_blowup, WindowRule::SqrtRemaining, q.mass())
        .map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (k, &t) in scan_num.times.iter().enumerate() {
        if t < 0.3 * b.t_blowup {
            continue;
        }
        let reference =
            concentration_scan_analytic(&pc, &[t], &egrid, WindowRule::SqrtRemaining)
                .map_err(|e| e.to_string())?;
        worst = worst.max(((scan_num.captured[k] - reference.captured[0]) / reference.captured[0]).abs());
    }
    report.check_le(
        "concentration_cross_check",
        worst,
        0.05,
        "criterion 8: solver capture within 5% of the analytic values",
    );
    let scan_num_csv = ctx.out_dir.join("concentration_solver.csv");
    scan_num.write_csv(&scan_num_csv).map_err(|e| e.to_string())?;
    report.add_artifact(&scan_num_csv);

    // criterion 9: renormalized snapshots approach the profile
    let m = traj.snapshots.len();
    let mut dists = Vec::new();
    let mut energies = Vec::new();
    for idx in [m - 3, m - 2, m - 1] {
        let rn = renormalize_snapshot(&traj, idx, &q).map_err(|e| e.to_string())?;
        dists.push(rn.phase_aligned_h1_distance);
        energies.push(rn.energy);
    }
    report.check_that(
        "limiting_profile_distance",
        dists[1] < dists[0] && dists[2] < dists[1],
        &format!("criterion 9: phase-aligned H1 distances {dists:?} decrease"),
    );
    report.check_that(
        "limiting_profile_energy",
        energies[1] < energies[0] && energies[2] < energies[1] && energies[2] > -1e-6,
        &format!("criterion 9: E(v_n) {energies:?} decreases toward 0"),
    );

    // criterion 11: momentum bound matrix at minimal mass
    let scales = if b.momentum_bound_scales.is_empty() {
        vec![1.0, 4.0, 16.0]
    } else {
        b.momentum_bound_scales.clone()
    };
    let mut worst_margin = f64::INFINITY;
    let mut all_hold = true;
    let modulated = RadialField::new(
        Arc::clone(&qgrid),
        qgrid
            .nodes()
            .iter()
            .zip(q.field().values())
            .map(|(&r, v)| v * Complex64::from_polar(1.0, 0.5 * r * r))
            .collect(),
    )
    .map_err(|e| e.to_string())?;
    let u0q = minimal_mass_initial(&pc, &qgrid).map_err(|e| e.to_string())?;
    for u in [q.field(), &u0q, &modulated] {
        for &big_r in &scales {
            let chk = momentum_bound_check(u, params, q.mass(), big_r).map_err(|e| e.to_string())?;
            all_hold &= chk.holds_with_slack(1e-6);
            if chk.rhs > 0.0 {
                worst_margin = worst_margin.min((chk.rhs - chk.lhs) / chk.rhs);
            }
        }
    }
    report.check_that(
        "momentum_bound_matrix",
        all_hold,
        &format!("criterion 11: no violation beyond 1e-6 slack (worst margin {worst_margin:.2e})"),
    );
    Ok(report)
}

fn run_profile_demo(config: &ExperimentConfig, ctx: &RunContext) -> Result<RunReport, String> {
    let mut suite = config.suite.clone().unwrap();
    suite.seed = config.seed;
    let mut report = RunReport::new(config.clone());
    let (_, result, rep) = suite.run().map_err(|e| e.to_string())?;

    let expected = suite.profiles.len();
    report.check_that(
        "extraction_count",
        result.profiles.len() == expected,
        &format!(
            "criterion 10: extracted {} profiles (expected {expected}), content history {:?}",
            result.profiles.len(),
            result.eta_history
        ),
    );
    let mut recovery_worst: f64 = 0.0;
    for s in &result.scores {
        recovery_worst = recovery_worst.max(s.rel_l2_error);
    }
    report.check_le(
        "recovery_error",
        recovery_worst,
        0.02,
        "criterion 10: worst relative L2 distance to a true profile",
    );
    report.check_le(
        "l2_expansion_residual",
        *rep.l2_residual_rel.last().unwrap(),
        0.01,
        "criterion 10: L2 Pythagorean residual at the last member",
    );
    report.check_le(
        "h1c_expansion_residual",
        *rep.h1c_residual_rel.last().unwrap(),
        0.01,
        "criterion 10: H1c Pythagorean residual at the last member",
    );
    report.check_le(
        "remainder_lq",
        *rep.remainder_lq_rel.last().unwrap(),
        0.10,
        "criterion 10: remainder critical-Lebesgue mass vs the largest member",
    );

    let ledger = DecompositionLedger::assemble(&result, &rep);
    let ledger_json = ctx.out_dir.join("decomposition.json");
    ledger.write_json(&ledger_json).map_err(|e| e.to_string())?;
    report.add_artifact(&ledger_json);
    for (j, p) in result.profiles.iter().enumerate() {
        let path = ctx.out_dir.join(format!("profile_{j}.json"));
        nlslab::profile::write_profile_field(&p.field, &path).map_err(|e| e.to_string())?;
        report.add_artifact(&path);
    }
    Ok(report)
}

fn run_virial_check(config: &ExperimentConfig, ctx: &RunContext) -> Result<RunReport, String> {
    // analytic route: virial identities on exact blow-up snapshots
    let params = config.params()?;
    let b = config.blowup.as_ref().unwrap().clone();
    let mut report = RunReport::new(config.clone());
    let qgrid = b.ground_grid.build(params)?;
    let q = Arc::new(
        solve_ground_state(params, &qgrid, GroundStateMethod::Shooting, 1e-12)
            .map_err(|e| e.to_string())?,
    );
    let pc = PseudoConformalParams::new(Arc::clone(&q), b.t_blowup, b.theta, b.lambda)
        .map_err(|e| e.to_string())?;
    let grid = config.grid.as_ref().unwrap().build(params)?;
    let times: Vec<f64> = (0..9).map(|k| 0.1 * k as f64 * b.t_blowup).collect();
    let fields: Vec<(f64, RadialField)> = times
        .iter()
        .map(|&t| Ok((t, pseudo_conformal_field(&pc, t, &grid).map_err(|e| e.to_string())?)))
        .collect::<Result<_, String>>()?;
    let traj = trajectory_from_fields(params, fields).map_err(|e| e.to_string())?;
    let vf = virial_series_check(&traj).map_err(|e| e.to_string())?;
    let e0 = vf.energy_u0;
    report.check_le(
        "virial_second_difference",
        (vf.second_difference - 16.0 * e0).abs() / (16.0 * e0),
        0.01,
        "criterion 7: central second difference vs 16 E(u0)",
    );
    report.check_le(
        "virial_fit_quadratic",
        (vf.fit_quadratic[2] - 8.0 * e0).abs() / (8.0 * e0),
        0.01,
        "criterion 7: quadratic coefficient vs 8 E(u0)",
    );
    report.check_le(
        "virial_fit_linear",
        (vf.fit_quadratic[1] + 4.0 * vf.momentum_term).abs() / (4.0 * vf.momentum_term.abs()),
        0.01,
        "criterion 7: linear coefficient vs -4 momentum",
    );
    report.check_le(
        "virial_fit_constant",
        (vf.fit_quadratic[0] - vf.virial0).abs() / vf.virial0,
        0.01,
        "criterion 7: constant coefficient vs the initial virial",
    );
    report.check_le(
        "virial_extrapolates_to_zero",
        vf.fit_at(b.t_blowup).abs() / vf.virial0,
        0.02,
        "criterion 7: the fitted quadratic vanishes at the blow-up time",
    );
    let path = ctx.out_dir.join("virial_fit.json");
    std::fs::write(&path, serde_json::to_string_pretty(&vf).unwrap()).map_err(|e| e.to_string())?;
    report.add_artifact(&path);
    Ok(report)
}

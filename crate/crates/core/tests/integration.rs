//! Cross-module runs: blow-up detection on the exact solution, trajectory
//! exports, rate-fit plumbing, and error paths that need a full stack.

use nlslab::blowup::{
    blowup_rate_fit, estimate_blowup_time, minimal_mass_initial, pseudo_conformal_field,
    renormalize_field, trajectory_from_fields, PseudoConformalParams, WindowRule,
};
use nlslab::evolution::{dt_stability_limit, evolve, EvolveOptions, StopReason};
use nlslab::grid::{GridScheme, RadialGrid};
use nlslab::ground_state::{solve_ground_state, GroundStateMethod};
use nlslab::params::ProblemParams;
use nlslab::{Error, RadialField};
use std::sync::{Arc, OnceLock};

fn ground() -> &'static Arc<nlslab::GroundState> {
    static CELL: OnceLock<Arc<nlslab::GroundState>> = OnceLock::new();
    CELL.get_or_init(|| {
        let p = ProblemParams::new(3, 0.125).unwrap();
        let g = RadialGrid::build(p, 24.0, 16384, GridScheme::Graded { rmin_ratio: 1e-6 }).unwrap();
        Arc::new(solve_ground_state(p, &g, GroundStateMethod::Shooting, 1e-12).unwrap())
    })
}

#[test]
fn minimal_mass_run_is_detected_as_blowup_before_t_blowup() {
    let params = ProblemParams::new(3, 0.125).unwrap();
    let q = ground();
    let pc = PseudoConformalParams::new(Arc::clone(q), 1.0, 0.0, 1.0).unwrap();
    let grid = RadialGrid::build(params, 20.0, 2048, GridScheme::UniformShifted).unwrap();
    let u0 = minimal_mass_initial(&pc, &grid).unwrap();
    let dt = 0.9 * dt_stability_limit(&grid);
    let grad0 = nlslab::functionals::functionals(&u0, params)
        .unwrap()
        .grad_norm();
    let traj = evolve(
        &u0,
        params,
        EvolveOptions {
            dt,
            t_end: 1.0, // at/after the blow-up time: detection must fire first
            blowup_threshold: 6.0 * grad0,
            snapshot_stride: 500,
            enforce_dt_rule: true,
            min_focus_cells: 5.0,
        },
    )
    .unwrap();
    assert_eq!(traj.stop_reason, StopReason::BlowupDetected, "{}", traj.stop_detail);
    let t_stop = traj.last().t;
    assert!(t_stop < 1.0, "detected at t = {t_stop}");
    // gradient norms increase along the retained tail
    let grads: Vec<f64> = traj.snapshots.iter().map(|s| s.grad_norm).collect();
    for w in grads.windows(2).skip(grads.len() / 2) {
        assert!(w[1] > w[0] * 0.999, "grad_norm should grow near blow-up");
    }

    // the rate fit applies to a detected run; the estimated blow-up time is
    // close to the exact one
    let t_est = estimate_blowup_time(&traj).unwrap();
    assert!(
        (t_est - 1.0).abs() < 0.05,
        "extrapolated blow-up time {t_est}"
    );
    let fit = blowup_rate_fit(&traj, t_est, 8).unwrap();
    assert!(fit.c_lower > 0.0);

    // exports: time-series CSV with the fixed column order plus a manifest
    let dir = std::env::temp_dir().join(format!("nlslab_traj_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let series = dir.join("series.csv");
    traj.write_series_csv(&series).unwrap();
    let text = std::fs::read_to_string(&series).unwrap();
    assert!(text.starts_with("t,mass,energy,grad_norm,hardy,virial\n"));
    let manifest_path = dir.join("run_manifest.json");
    traj.write_manifest(&manifest_path).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&manifest_path).unwrap()).unwrap();
    assert_eq!(manifest["stop_reason"], "blowup-detected");
    assert_eq!(manifest["d"], 3);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn rate_fit_refuses_completed_runs() {
    let params = ProblemParams::new(3, 0.125).unwrap();
    let g = RadialGrid::build(params, 16.0, 512, GridScheme::UniformShifted).unwrap();
    let q = solve_ground_state(params, &g, GroundStateMethod::GradientFlow, 1e-12).unwrap();
    let traj = evolve(
        q.field(),
        params,
        EvolveOptions {
            dt: 0.9 * dt_stability_limit(&g),
            t_end: 0.01,
            blowup_threshold: 1e9,
            snapshot_stride: 5,
            enforce_dt_rule: true,
            min_focus_cells: 0.0,
        },
    )
    .unwrap();
    assert_eq!(traj.stop_reason, StopReason::Completed);
    assert!(matches!(
        blowup_rate_fit(&traj, 1.0, 5),
        Err(Error::NotApplicable { .. })
    ));
}

#[test]
fn renormalization_rejects_out_of_range_rescaling() {
    // a reference grid wider than the source domain forces the regrid error
    let params = ProblemParams::new(3, 0.125).unwrap();
    let q = ground();
    let pc = PseudoConformalParams::new(Arc::clone(q), 1.0, 0.0, 1.0).unwrap();
    let small = RadialGrid::build(params, 6.0, 1024, GridScheme::UniformShifted).unwrap();
    let field = pseudo_conformal_field(&pc, 0.7, &small).unwrap();
    // λ ≈ (T - t) = 0.3, reference r_max = 24: 0.3 * 24 > 6
    let err = renormalize_field(&field, 0.7, params, q);
    assert!(matches!(err, Err(Error::Regrid { .. })), "{err:?}");
}

#[test]
fn window_rules_cover_the_shipped_family() {
    assert!((WindowRule::SqrtRemaining.radius(0.25) - 0.5).abs() < 1e-15);
    assert!((WindowRule::FourthRootRemaining.radius(0.0016) - 0.2).abs() < 1e-12);
    let custom = WindowRule::Custom(|rem| 2.0 * rem);
    assert_eq!(custom.radius(0.3), 0.6);
    // the fourth-root window shrinks slower, so it captures at least as much
    let q = ground();
    let pc = PseudoConformalParams::new(Arc::clone(q), 1.0, 0.0, 1.0).unwrap();
    let grid = q.grid();
    let sqrt_scan = nlslab::blowup::concentration_scan_analytic(
        &pc,
        &[0.9],
        grid,
        WindowRule::SqrtRemaining,
    )
    .unwrap();
    let quarter_scan = nlslab::blowup::concentration_scan_analytic(
        &pc,
        &[0.9],
        grid,
        WindowRule::FourthRootRemaining,
    )
    .unwrap();
    assert!(quarter_scan.captured[0] >= sqrt_scan.captured[0]);
}

#[test]
fn assembled_trajectories_validate_time_ordering() {
    let params = ProblemParams::new(3, 0.125).unwrap();
    let q = ground();
    let pc = PseudoConformalParams::new(Arc::clone(q), 1.0, 0.0, 1.0).unwrap();
    let g = RadialGrid::build(params, 20.0, 1024, GridScheme::UniformShifted).unwrap();
    let f0 = pseudo_conformal_field(&pc, 0.2, &g).unwrap();
    let f1 = pseudo_conformal_field(&pc, 0.1, &g).unwrap();
    let err = trajectory_from_fields(params, vec![(0.2, f0), (0.1, f1)]);
    assert!(matches!(err, Err(Error::Domain { .. })));
}

#[test]
fn field_json_record_has_the_documented_shape() {
    let params = ProblemParams::new(3, -1.0).unwrap();
    let g = RadialGrid::build(params, 10.0, 64, GridScheme::graded_default()).unwrap();
    let u = RadialField::from_real_fn(Arc::clone(&g), |r| (-r).exp()).unwrap();
    let record = serde_json::to_value(u.to_json_record()).unwrap();
    for key in ["d", "c", "r_max", "n", "scheme", "samples"] {
        assert!(record.get(key).is_some(), "field record missing {key}");
    }
    assert_eq!(record["scheme"], "graded");
    assert_eq!(record["samples"].as_array().unwrap().len(), 64);
}

#[test]
fn gn_constant_stable_under_domain_doubling() {
    // recomputing on a domain twice as large moves both sharp-constant
    // routes by well under 1e-3 relative
    let params = ProblemParams::new(3, 0.125).unwrap();
    let mut reports = Vec::new();
    for r_max in [22.0, 44.0] {
        let g = RadialGrid::build(params, r_max, 16384, GridScheme::Graded { rmin_ratio: 1e-6 })
            .unwrap();
        let q = solve_ground_state(params, &g, GroundStateMethod::Shooting, 1e-12).unwrap();
        reports.push(nlslab::ground_state::gn_constant_report(&q));
    }
    let rel_mass = (reports[0].c_from_mass - reports[1].c_from_mass).abs() / reports[0].c_from_mass;
    let rel_wein =
        (reports[0].c_from_weinstein - reports[1].c_from_weinstein).abs() / reports[0].c_from_weinstein;
    assert!(rel_mass < 1e-3, "C_from_mass moved {rel_mass:.2e}");
    assert!(rel_wein < 1e-3, "C_from_weinstein moved {rel_wein:.2e}");
}

#[test]
fn standing_wave_modulus_constant_over_unit_time() {
    // u0 = discrete ground state evolves as a pure phase rotation: |u(t, r)|
    // stays within 1e-6 of |Q| in the weighted norm over t in [0, 1]
    let params = ProblemParams::new(3, 0.125).unwrap();
    let g = RadialGrid::build(params, 20.0, 1024, GridScheme::UniformShifted).unwrap();
    let q = solve_ground_state(params, &g, GroundStateMethod::GradientFlow, 1e-13).unwrap();
    let dt = 0.9 * dt_stability_limit(&g);
    let traj = evolve(
        q.field(),
        params,
        EvolveOptions {
            dt,
            t_end: 1.0,
            blowup_threshold: 1e6,
            snapshot_stride: 1000,
            enforce_dt_rule: true,
            min_focus_cells: 0.0,
        },
    )
    .unwrap();
    assert_eq!(traj.stop_reason, StopReason::Completed);
    let mut worst: f64 = 0.0;
    let norm2: f64 = g
        .weights()
        .iter()
        .zip(q.values())
        .map(|(w, &v)| w * v * v)
        .sum();
    for s in &traj.snapshots {
        let dev2: f64 = g
            .weights()
            .iter()
            .zip(s.field.values().iter().zip(q.values()))
            .map(|(w, (u, &qv))| w * (u.norm() - qv) * (u.norm() - qv))
            .sum();
        worst = worst.max((dev2 / norm2).sqrt());
    }
    assert!(worst < 1e-6, "modulus drifted {worst:.2e}");
}

mod common;

use std::sync::Arc;

use nlw_core::functionals::sampler::shell_bump;
use nlw_core::functionals::{energy, hdot1_inner, FieldState, RadialGrid};
use nlw_core::groundstate::{eval_w, soliton_field, Sign, SolitonParams};
use nlw_core::linwave::propagate_linear;
use nlw_core::nlwsolver::{
    classify_dynamic, classify_static, concentration_report, evolve, modulated_bubble_trajectory,
    singular_support_scan, Budget, DynamicVerdict, ScanOptions, ScatterCriterion, SolverSettings, StaticThresholds,
    StaticVerdict, Termination, Trajectory,
};
use nlw_core::{Dimension, NlwError};

fn uniform(dim: Dimension, r_max: f64, m: usize) -> Arc<RadialGrid> {
    RadialGrid::uniform(dim, r_max, m).unwrap().into_shared()
}

fn scaled_w(grid: &Arc<RadialGrid>, a: f64) -> FieldState {
    soliton_field(&SolitonParams::radial(Sign::Plus, 1.0).unwrap(), grid.clone(), 1)
        .unwrap()
        .scaled(a)
}

fn bump_field(grid: &Arc<RadialGrid>, amp: f64, center: f64, width: f64) -> FieldState {
    let u = grid.nodes().iter().map(|&r| amp * shell_bump(r, center, width)).collect();
    FieldState::new(grid.clone(), u, vec![0.0; grid.len()], 0.0).unwrap()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

fn dichotomy_grid() -> Arc<RadialGrid> {
    uniform(Dimension::FIVE, 80.0, 4097)
}

fn with_scatter() -> SolverSettings {
    SolverSettings {
        scatter: Some(ScatterCriterion::default()),
        ..SolverSettings::default()
    }
}

#[test]
fn ground_state_is_stationary() {
    let g = uniform(Dimension::FIVE, 40.0, 4097);
    let w = scaled_w(&g, 1.0);
    let traj = evolve(
        &w,
        &SolverSettings {
            horizon: 5.0,
            ..SolverSettings::default()
        },
    )
    .unwrap();
    assert_eq!(traj.termination, Termination::HorizonReached);
    let norm = hdot1_inner(&g, &w.u, &w.u).sqrt();
    let mut worst = 0.0f64;
    for s in &traj.states {
        let d: Vec<f64> = s.u.iter().zip(&w.u).map(|(a, b)| a - b).collect();
        worst = worst.max(hdot1_inner(&g, &d, &d).sqrt() / norm);
    }
    eprintln!("W stationarity: max relative H1 drift {worst:.3e}");
    assert!(worst <= 5e-3, "{worst}");
    assert!(traj.max_drift() <= 1e-3);
}

#[test]
fn zero_data_stays_zero() {
    let g = uniform(Dimension::THREE, 20.0, 257);
    let traj = evolve(
        &FieldState::zeros(g),
        &SolverSettings {
            horizon: 5.0,
            ..SolverSettings::default()
        },
    )
    .unwrap();
    assert_eq!(traj.termination, Termination::HorizonReached);
    assert!(traj.states.iter().all(|s| s.u.iter().chain(&s.ut).all(|v| *v == 0.0)));
}

#[test]
fn small_data_follow_the_free_flow() {
    let g = uniform(Dimension::THREE, 40.0, 1601);
    let s = bump_field(&g, 1e-2, 2.0, 1.5);
    let traj = evolve(
        &s,
        &SolverSettings {
            horizon: 12.0,
            save_interval: 3.0,
            ..SolverSettings::default()
        },
    )
    .unwrap();
    let peak = max_abs(&s.u);
    for st in traj.states.iter().skip(1) {
        let lin = propagate_linear(&s, st.time).unwrap();
        let err = max_diff(&st.u, &lin.u).max(max_diff(&st.ut, &lin.ut));
        assert!(err <= 1e-4 * peak, "t={}: {err:.3e}", st.time);
    }
}

#[test]
fn energy_is_conserved_until_explosion() {
    let g = dichotomy_grid();
    for a in [0.8, 1.2] {
        let traj = evolve(&scaled_w(&g, a), &with_scatter()).unwrap();
        let settings = SolverSettings::default();
        let drift = traj
            .records
            .iter()
            .filter(|r| r.norm_ratio <= settings.blowup_norm_factor)
            .map(|r| r.drift)
            .fold(0.0, f64::max);
        eprintln!("a={a}: pre-explosion drift {drift:.3e}");
        assert!(drift <= 1e-3, "a={a}: {drift}");
    }
}

#[test]
fn mesh_halving_converges_at_second_order() {
    let dim = Dimension::FIVE;
    let horizon = 2.0;
    let runs: Vec<FieldState> = [1025, 2049, 4097]
        .iter()
        .map(|&m| {
            let g = uniform(dim, 40.0, m);
            let traj = evolve(
                &scaled_w(&g, 0.8),
                &SolverSettings {
                    horizon,
                    save_interval: horizon,
                    ..SolverSettings::default()
                },
            )
            .unwrap();
            let last = traj.final_state().clone();
            assert!((last.time - horizon).abs() < 1e-12);
            last
        })
        .collect();
    let coarse = |s: &FieldState, stride: usize| -> Vec<f64> { s.u.iter().step_by(stride).copied().collect() };
    let (u1, u2, u4) = (coarse(&runs[0], 1), coarse(&runs[1], 2), coarse(&runs[2], 4));
    let e12 = max_diff(&u1, &u2);
    let e24 = max_diff(&u2, &u4);
    let factor = e12 / e24;
    eprintln!("convergence: {e12:.3e} / {e24:.3e} = {factor:.3}");
    assert!(factor >= 3.5, "{factor}");
}

#[test]
fn nonlinear_waves_respect_the_light_cone() {
    let g = uniform(Dimension::FIVE, 40.0, 2049);
    let h = g.spacing().unwrap();
    let rho = 4.0;
    let s = bump_field(&g, 0.5, 2.0, 2.0);
    let peak = max_abs(&s.u);
    let traj = evolve(
        &s,
        &SolverSettings {
            horizon: 10.0,
            save_interval: 2.5,
            ..SolverSettings::default()
        },
    )
    .unwrap();
    for st in &traj.states {
        for (i, &r) in g.nodes().iter().enumerate() {
            if r > rho + st.time + 4.0 * h {
                assert!(st.u[i].abs() <= 1e-6 * peak, "t={} r={r}: {}", st.time, st.u[i]);
            }
        }
    }
}

#[test]
fn static_classifier_on_scaled_ground_states() {
    let g = dichotomy_grid();
    let th = StaticThresholds::from_fixtures(&common::fixtures(), Dimension::FIVE).unwrap();
    assert_eq!(classify_static(&scaled_w(&g, 0.8), &th).unwrap(), StaticVerdict::ScatterPredicted);
    assert_eq!(classify_static(&scaled_w(&g, 1.2), &th).unwrap(), StaticVerdict::BlowUpPredicted);

    let e = energy(&scaled_w(&g, 1.2)).unwrap().energy;
    let oracle = common::scaled_w_energy_ratio(1.2, Dimension::FIVE) * common::grad_sq(Dimension::FIVE);
    assert!((e - oracle).abs() < 1e-3 * common::grad_sq(Dimension::FIVE), "{e} vs {oracle}");
    assert!((oracle / common::grad_sq(Dimension::FIVE) - 0.169_117_797_7).abs() < 1e-9);

    let calibrated = StaticThresholds::calibrated(&g).unwrap();
    assert_eq!(classify_static(&scaled_w(&g, 1.0), &calibrated).unwrap(), StaticVerdict::ThresholdCase);
    assert_eq!(
        classify_static(&scaled_w(&g, 1.0 + 1e-3), &calibrated).unwrap(),
        StaticVerdict::BlowUpPredicted
    );
    let kicked = {
        let mut s = scaled_w(&g, 0.9);
        s.ut = s.u.iter().map(|v| 2.0 * v).collect();
        s
    };
    assert_eq!(classify_static(&kicked, &th).unwrap(), StaticVerdict::OutsideRegime);
}

#[test]
fn static_and_dynamic_verdicts_agree_on_the_library() {
    let g = dichotomy_grid();
    let th = StaticThresholds::from_fixtures(&common::fixtures(), Dimension::FIVE).unwrap();
    let mut library: Vec<(String, FieldState)> = [0.5, 0.8, 0.95, 1.05, 1.2, 1.5]
        .iter()
        .map(|&a| (format!("{a}W"), scaled_w(&g, a)))
        .collect();
    library.push(("bump 0.2".into(), bump_field(&g, 0.2, 1.0, 1.5)));
    library.push(("bump -0.3".into(), bump_field(&g, -0.3, 2.0, 1.0)));
    let budget = Budget::default();
    for (name, data) in &library {
        let (v, traj) = classify_dynamic(data, &th, &budget, &SolverSettings::default()).unwrap();
        eprintln!("{name}: {:?} / {:?} ({:?})", v.static_verdict, v.dynamic_verdict, traj.termination);
        let expected = match v.static_verdict {
            StaticVerdict::ScatterPredicted => DynamicVerdict::Scattered,
            StaticVerdict::BlowUpPredicted => DynamicVerdict::BlewUp,
            other => panic!("{name}: library datum is not in the sub-threshold regime: {other:?}"),
        };
        assert_eq!(v.dynamic_verdict, expected, "{name}");
        if let Termination::BlowUpDetected { t_est } = traj.termination {
            assert!(t_est.is_finite() && t_est > 0.0);
        }
    }
}

#[test]
fn dichotomy_examples() {
    let g = dichotomy_grid();
    let s = evolve(&scaled_w(&g, 0.8), &with_scatter()).unwrap();
    assert!(matches!(s.termination, Termination::ScatterDetected { t } if t <= 30.0), "{:?}", s.termination);
    let last = s.records.last().unwrap();
    assert!(last.local_fraction < 1e-3);

    let b = evolve(&scaled_w(&g, 1.2), &with_scatter()).unwrap();
    let Termination::BlowUpDetected { t_est } = b.termination else {
        panic!("{:?}", b.termination)
    };
    assert!(t_est.is_finite() && t_est < 30.0);
    let last = b.records.last().unwrap();
    assert!(last.norm_ratio > SolverSettings::default().blowup_norm_factor);
    let dt0 = b.dt_history[0].1;
    assert!(last.dt < dt0 / 2f64.powi(SolverSettings::default().max_refinements as i32) * 1.0001);
}

#[test]
fn dynamic_blowup_is_not_type_ii() {
    let g = dichotomy_grid();
    let traj = evolve(&scaled_w(&g, 1.2), &with_scatter()).unwrap();
    let rep = concentration_report(&traj, common::grad_sq(Dimension::FIVE)).unwrap();
    assert!(!rep.type_ii_like);
    assert!(rep.precondition_failed);
}

fn ansatz_grid() -> Arc<RadialGrid> {
    RadialGrid::stretched(Dimension::FIVE, 10.0, 4001, 1e-8).unwrap().into_shared()
}

fn late_times(n: usize, last_gap: f64) -> Vec<f64> {
    // Geometric approach to t = 1.
    let first: f64 = 1.0;
    (0..n)
        .map(|i| 1.0 - first * (last_gap / first).powf(i as f64 / (n - 1) as f64))
        .map(|t| t.max(0.0))
        .collect()
}

#[test]
fn modulated_bubble_concentrates_in_the_cone() {
    let g = ansatz_grid();
    let gw = common::grad_sq(Dimension::FIVE);
    let times = late_times(60, 1e-4);
    let traj = modulated_bubble_trajectory(&g, &times, 1.0, |t| {
        let s = 1.0 - t;
        (s.powf(1.5), -1.5 * s.sqrt())
    })
    .unwrap();
    let rep = concentration_report(&traj, gw).unwrap();
    eprintln!(
        "ansatz: liminf A = {:.6} G, limsup B = {:.6} G",
        rep.liminf_a / gw,
        rep.limsup_b / gw
    );
    assert!(rep.a_bound_holds(1e-2 * gw), "{} vs {}", rep.liminf_a, rep.threshold_a);
    assert!(rep.b_bound_holds(1e-2 * gw));
    assert!(rep.type_ii_like && rep.concentrating && !rep.precondition_failed);
}

#[test]
fn fixed_bubble_leaves_the_cone_empty() {
    let g = ansatz_grid();
    let gw = common::grad_sq(Dimension::FIVE);
    let times = late_times(60, 1e-4);
    let traj = modulated_bubble_trajectory(&g, &times, 1.0, |_| (1.0, 0.0)).unwrap();
    let rep = concentration_report(&traj, gw).unwrap();
    assert!(rep.a.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    assert!(*rep.a.last().unwrap() < 1e-6 * gw, "{}", rep.a.last().unwrap());
    assert!(!rep.a_bound_holds(1e-2 * gw));
    assert!(rep.precondition_failed);
}

#[test]
fn concentration_report_needs_blowup() {
    let g = uniform(Dimension::FIVE, 20.0, 257);
    let traj = evolve(
        &bump_field(&g, 0.01, 1.0, 1.0),
        &SolverSettings {
            horizon: 1.0,
            ..SolverSettings::default()
        },
    )
    .unwrap();
    assert!(matches!(
        concentration_report(&traj, 1.0),
        Err(NlwError::InvalidArgument(_))
    ));
}

fn shell_bubble_trajectory(g: &Arc<RadialGrid>, r1: f64) -> Trajectory {
    let dim = g.dim();
    let times = late_times(40, 1e-3);
    let mut traj = modulated_bubble_trajectory(g, &times, 1.0, |t| {
        let s = 1.0 - t;
        (s.powf(1.5), -1.5 * s.sqrt())
    })
    .unwrap();
    for st in traj.states.iter_mut() {
        let lam = (1.0 - st.time).powf(1.5);
        for (i, &r) in g.nodes().iter().enumerate() {
            let y = (r - r1) / lam;
            // one-dimensional profile carried on the sphere r = r1
            st.u[i] += lam.powf(-0.5) * eval_w(y.abs(), dim).unwrap();
        }
    }
    traj
}

#[test]
fn singular_scan_finds_the_origin_bubble() {
    let g = ansatz_grid();
    let times = late_times(40, 1e-3);
    let traj = modulated_bubble_trajectory(&g, &times, 1.0, |t| {
        let s = 1.0 - t;
        (s.powf(1.5), -1.5 * s.sqrt())
    })
    .unwrap();
    let found = singular_support_scan(&traj, &ScanOptions::default());
    assert_eq!(found, vec![0.0]);
}

#[test]
fn singular_scan_is_empty_for_bounded_solutions() {
    let g = uniform(Dimension::FIVE, 40.0, 1025);
    let traj = evolve(
        &bump_field(&g, 0.2, 1.0, 1.5),
        &SolverSettings {
            horizon: 6.0,
            ..SolverSettings::default()
        },
    )
    .unwrap();
    assert!(singular_support_scan(&traj, &ScanOptions::default()).is_empty());
}

#[test]
fn singular_scan_separates_two_concentration_points() {
    let g = ansatz_grid();
    let r1 = 3.0;
    let traj = shell_bubble_trajectory(&g, r1);
    let found = singular_support_scan(&traj, &ScanOptions::default());
    assert_eq!(found.len(), 2, "{found:?}");
    assert_eq!(found[0], 0.0);
    assert!((found[1] - r1).abs() <= 0.05, "{found:?}");
}

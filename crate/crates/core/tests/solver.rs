mod common;

use frametv::frames::FrameDescriptor;
use frametv::grid::TvFlavor;
use frametv::noise::{observe, NoiseSpec};
use frametv::solver::{solve_frame_constrained_tv, solve_rof, Formulation, SolverConfig};
use frametv::truth::TruthSpec;

fn step_obs(seed: u64, frame: &FrameDescriptor) -> frametv::noise::Observations {
    let truth = TruthSpec::named("step1d").build(1, 64).unwrap();
    observe(
        &truth.signal,
        frame,
        &NoiseSpec::new(0.2, 64, seed),
        2f64.sqrt(),
    )
    .unwrap()
}

#[test]
fn constrained_matches_lp_on_wavelet_basis() {
    let cfg = SolverConfig::default();
    for seed in 0..3 {
        let obs = step_obs(seed, &FrameDescriptor::wavelet(4));
        let res = solve_frame_constrained_tv(&obs, &cfg).unwrap();
        assert!(res.converged);
        let (obj, _) = common::lp_constrained_tv(&obs, cfg.beta(64));
        assert!(
            (res.objective - obj).abs() <= 1e-4 * obj,
            "seed {seed}: {} vs {obj}",
            res.objective
        );
        let dist = common::distance_to_optimal_set(
            &obs,
            cfg.beta(64),
            obj * (1.0 + 1e-6),
            res.estimate().values(),
        );
        assert!(dist <= 1e-3, "seed {seed}: {dist}");
    }
}

#[test]
fn grid_formulation_agrees_with_coefficient_formulation() {
    let obs = step_obs(7, &FrameDescriptor::wavelet(2));
    let auto = solve_frame_constrained_tv(&obs, &SolverConfig::default()).unwrap();
    let cfg = SolverConfig {
        formulation: Formulation::Grid,
        max_iters: 200_000,
        ..Default::default()
    };
    let grid = solve_frame_constrained_tv(&obs, &cfg).unwrap();
    assert!(auto.converged && grid.converged);
    assert!((auto.objective - grid.objective).abs() <= 2e-6 * (1.0 + auto.objective));
}

#[test]
fn madic_frame_matches_lp() {
    let obs = step_obs(1, &FrameDescriptor::madic(2, 1));
    let cfg = SolverConfig {
        max_iters: 200_000,
        ..Default::default()
    };
    let res = solve_frame_constrained_tv(&obs, &cfg).unwrap();
    let (obj, _) = common::lp_constrained_tv(&obs, cfg.beta(64));
    assert!(res.converged);
    assert!(res.max_residual <= obs.gamma * (1.0 + cfg.feas_tol));
    assert!(
        (res.objective - obj).abs() <= 1e-4 * obj.max(1e-12),
        "{} vs {obj}",
        res.objective
    );
}

#[test]
fn constrained_two_dimensional_matches_lp() {
    let truth = TruthSpec::named("square2d").build(2, 16).unwrap();
    let obs = observe(
        &truth.signal,
        &FrameDescriptor::wavelet(2),
        &NoiseSpec::new(0.3, 256, 4),
        2f64.sqrt(),
    )
    .unwrap();
    let cfg = SolverConfig::default();
    let res = solve_frame_constrained_tv(&obs, &cfg).unwrap();
    let (obj, _) = common::lp_constrained_tv(&obs, cfg.beta(256));
    assert!(res.converged);
    assert!((res.objective - obj).abs() <= 1e-4 * obj);
}

#[test]
fn rof_matches_qp() {
    let truth = TruthSpec::named("step1d").build(1, 64).unwrap();
    let cfg = SolverConfig {
        max_iters: 100_000,
        ..Default::default()
    };
    for (seed, lambda) in [(0, 0.01), (1, 0.05), (2, 0.2)] {
        let pixels =
            frametv::noise::simulate_pixels(&truth.signal, &NoiseSpec::new(0.2, 64, seed)).unwrap();
        let res = solve_rof(&pixels, lambda, &cfg).unwrap();
        let (obj, _) = common::qp_rof(&pixels, lambda);
        assert!(res.converged);
        assert!(
            (res.objective - obj).abs() <= 1e-5 * obj,
            "lambda {lambda}: {} vs {obj}",
            res.objective
        );
    }
}

#[test]
fn isotropic_flavor_runs_in_two_dimensions() {
    let truth = TruthSpec::named("disc2d").build(2, 32).unwrap();
    let obs = observe(
        &truth.signal,
        &FrameDescriptor::wavelet(2),
        &NoiseSpec::new(0.2, 1024, 0),
        2f64.sqrt(),
    )
    .unwrap();
    let cfg = SolverConfig {
        tv_flavor: TvFlavor::Isotropic,
        rel_obj_tol: 1e-4,
        ..Default::default()
    };
    let res = solve_frame_constrained_tv(&obs, &cfg).unwrap();
    assert!(res.converged);
    assert!(res.objective <= truth.signal.bv_seminorm(TvFlavor::Isotropic) * (1.0 + 1e-3));
}

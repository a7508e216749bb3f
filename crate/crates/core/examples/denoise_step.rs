//! Constrained TV estimate of a noisy 1D step.

use frametv::frames::{build_frame, FrameDescriptor};
use frametv::grid::TvFlavor;
use frametv::noise::{observe_with, NoiseSpec};
use frametv::solver::{solve_frame_constrained_tv, SolverConfig};
use frametv::truth::TruthSpec;

fn main() -> frametv::Result<()> {
    let side = 1024;
    let truth = TruthSpec::named("step1d").build(1, side)?;
    let frame = build_frame(&FrameDescriptor::wavelet(4), 1, side as u64, side)?;
    let noise = NoiseSpec::new(0.3, side as u64, 42);
    let obs = observe_with(&truth.signal, frame, &noise, std::f64::consts::SQRT_2, 0)?;

    let cfg = SolverConfig {
        rel_obj_tol: 1e-4,
        ..Default::default()
    };
    let res = solve_frame_constrained_tv(&obs, &cfg)?;
    let est = res.estimate();
    println!("gamma            {:.5}", obs.gamma);
    println!("truth feasible   {}", obs.is_feasible(&truth.signal)?);
    println!(
        "TV truth / est   {:.4} / {:.4}",
        truth.bv,
        est.bv_seminorm(TvFlavor::Anisotropic)
    );
    println!(
        "L2 error         {:.4}",
        est.sub(&truth.signal)?.lq_norm(2.0)?
    );
    println!(
        "noisy L2 error   {:.4}",
        obs.pixels.sub(&truth.signal)?.lq_norm(2.0)?
    );
    println!(
        "iterations       {} (converged: {})",
        res.iterations, res.converged
    );
    Ok(())
}

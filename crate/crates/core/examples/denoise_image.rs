//! Denoises a 2D cartoon with the isotropic TV and writes PGM files.

use frametv::frames::{build_frame, FrameDescriptor};
use frametv::grid::TvFlavor;
use frametv::io::write_signal;
use frametv::noise::{observe_with, NoiseSpec};
use frametv::solver::{solve_frame_constrained_tv, SolverConfig};
use frametv::truth::TruthSpec;

fn main() -> frametv::Result<()> {
    let side = 128;
    let n = (side * side) as u64;
    let truth = TruthSpec::named("cartoon2d").build(2, side)?;
    let frame = build_frame(&FrameDescriptor::wavelet(4), 2, n, side)?;
    let obs = observe_with(
        &truth.signal,
        frame,
        &NoiseSpec::new(0.25, n, 7),
        std::f64::consts::SQRT_2,
        0,
    )?;

    let cfg = SolverConfig {
        tv_flavor: TvFlavor::Isotropic,
        rel_obj_tol: 1e-3,
        ..Default::default()
    };
    let res = solve_frame_constrained_tv(&obs, &cfg)?;

    let dir = std::env::temp_dir().join("frametv-denoise-image");
    std::fs::create_dir_all(&dir)?;
    write_signal(&dir.join("truth.pgm"), &truth.signal)?;
    write_signal(&dir.join("noisy.pgm"), &obs.pixels)?;
    write_signal(&dir.join("estimate.pgm"), res.estimate())?;
    println!(
        "L2 error {:.4} (noisy {:.4}), {} iterations, images in {}",
        res.estimate().sub(&truth.signal)?.lq_norm(2.0)?,
        obs.pixels.sub(&truth.signal)?.lq_norm(2.0)?,
        res.iterations,
        dir.display()
    );
    Ok(())
}

//! Local-means constraints from the m-adic frame instead of wavelets.

use frametv::frames::{build_frame, FrameDescriptor};
use frametv::noise::{observe_with, NoiseSpec};
use frametv::solver::{solve_frame_constrained_tv, SolverConfig};
use frametv::truth::TruthSpec;

fn main() -> frametv::Result<()> {
    let side = 256;
    let truth = TruthSpec::named("blocks1d").build(1, side)?;
    let noise = NoiseSpec::new(0.3, side as u64, 5);
    let cfg = SolverConfig {
        rel_obj_tol: 1e-3,
        ..Default::default()
    };
    for desc in [FrameDescriptor::wavelet(4), FrameDescriptor::madic(2, 1)] {
        let frame = build_frame(&desc, 1, side as u64, side)?;
        let card = frame.len();
        let obs = observe_with(&truth.signal, frame, &noise, std::f64::consts::SQRT_2, 0)?;
        let res = solve_frame_constrained_tv(&obs, &cfg)?;
        println!(
            "{:<14} #Ω = {card:<6} gamma {:.4}  L2 error {:.4}  iterations {} (converged: {})",
            desc.label(),
            obs.gamma,
            res.estimate().sub(&truth.signal)?.lq_norm(2.0)?,
            res.iterations,
            res.converged
        );
    }
    Ok(())
}

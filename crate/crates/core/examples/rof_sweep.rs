//! ROF over a grid of λ with the oracle choice.

use frametv::noise::{simulate_pixels, NoiseSpec};
use frametv::solver::{oracle_lambda_sweep, SolverConfig, SweepLoss};
use frametv::truth::TruthSpec;

fn main() -> frametv::Result<()> {
    let truth = TruthSpec::named("square2d").build(2, 64)?.signal;
    let pixels = simulate_pixels(&truth, &NoiseSpec::new(0.3, 64 * 64, 3))?;
    let lambdas: Vec<f64> = (0..10).map(|i| 1e-3 * 2f64.powi(i)).collect();
    for loss in [SweepLoss::L2, SweepLoss::BregmanTv] {
        let sweep = oracle_lambda_sweep(&pixels, &truth, &lambdas, loss, &SolverConfig::default())?;
        println!("{loss:?}: best lambda {:.4}", sweep.best_lambda);
        for (l, v) in sweep.lambdas.iter().zip(&sweep.losses) {
            println!("  {l:>8.4}  {v:.5}");
        }
    }
    Ok(())
}

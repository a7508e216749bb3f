//! Frame-constrained TV against the ROF oracle, hard wavelet thresholding
//! and the raw data on one small ladder.

use frametv::analysis::{estimate_risk, Estimator, ExperimentSpec};
use frametv::truth::TruthSpec;

fn main() -> frametv::Result<()> {
    let ladder = vec![256, 512, 1024, 2048];
    for est in [
        Estimator::FrameTv,
        Estimator::RofOracle,
        Estimator::WaveletThreshold,
        Estimator::Identity,
    ] {
        let mut spec = ExperimentSpec::new(
            1,
            2.0,
            TruthSpec::named("step_ramp1d"),
            0.5,
            ladder.clone(),
            6,
        );
        spec.estimator = est;
        spec.solver.rel_obj_tol = 5e-2;
        spec.lambdas = (0..9).map(|i| 1e-3 * 2f64.powi(i)).collect();
        let rep = estimate_risk(&spec)?;
        let risks: Vec<String> = rep
            .rows
            .iter()
            .map(|r| format!("{:.4}", r.mean_risk))
            .collect();
        let slope = rep
            .fit
            .as_ref()
            .map(|f| f.preferred().slope)
            .unwrap_or(f64::NAN);
        println!(
            "{:<18} {}  slope {slope:+.3}",
            est.label(),
            risks.join("  ")
        );
    }
    Ok(())
}

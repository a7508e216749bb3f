//! Monte Carlo risk ladder in d = 1 with a rate fit and SVG plot.

use frametv::analysis::{estimate_risk_all, risk_plot_svg, ExperimentSpec};
use frametv::truth::TruthSpec;

fn main() -> frametv::Result<()> {
    let ladder = (10..=14).map(|e| 1u64 << e).collect();
    let mut spec = ExperimentSpec::new(1, 2.0, TruthSpec::named("step_ramp1d"), 0.5, ladder, 8);
    spec.extra_q = vec![8.0];
    spec.solver.rel_obj_tol = 5e-2;
    spec.seed = 2024;

    let reports = estimate_risk_all(&spec)?;
    for rep in &reports {
        print!("{}", rep.to_csv());
        if let Some(fit) = &rep.fit {
            let f = fit.preferred();
            println!(
                "q = {}: slope {:.3} ± {:.3}, target {:.3}\n",
                rep.q, f.slope, f.stderr, rep.target_exponent
            );
        }
    }
    let path = std::env::temp_dir().join("frametv-rate-ladder.svg");
    std::fs::write(&path, risk_plot_svg(&reports))?;
    println!("plot written to {}", path.display());
    Ok(())
}

//! Sign-flip hard instances for the lower bound.

use frametv::analysis::{assouad_family, balanced_gamma};
use frametv::grid::{TorusSignal, TvFlavor};

fn main() -> frametv::Result<()> {
    let (dim, side, j, l) = (2, 128, 4, 1.0);
    let g0 = TorusSignal::zeros(dim, side)?;
    let gamma = balanced_gamma(dim, side, j, l, 2)?;
    let fam = assouad_family(dim, j, gamma, &g0, 8, l, 2)?;
    println!("{} atoms at scale {j}, gamma = {gamma:.5}", fam.len());
    for (eps, s) in fam.patterns.iter().zip(&fam.signals) {
        let head: String = eps
            .iter()
            .take(4)
            .map(|e| if *e > 0 { '+' } else { '-' })
            .collect();
        println!(
            "  {head}..  sup {:.4}  bv {:.4}",
            s.sup_norm(),
            s.bv_seminorm(TvFlavor::Anisotropic)
        );
    }
    let d01 = fam.signals[0].sub(&fam.signals[1])?.lq_norm(2.0)?;
    println!(
        "single flip L2 distance {d01:.5} (2 gamma = {:.5})",
        2.0 * gamma
    );
    for q in [1.0, 2.0, 4.0] {
        println!("separation q = {q}: {:.5}", fam.separation(q)?);
    }
    Ok(())
}

//! Jackson bound: full-depth Besov norm against the coefficients kept in Ω_n.

use frametv::analysis::{jackson_check, wavelet_l1_constant};
use frametv::truth::random_cartoon;

fn main() -> frametv::Result<()> {
    for (dim, side, n) in [(1, 1024, 64u64), (2, 64, 256)] {
        println!("d = {dim}: C = {:.4}", wavelet_l1_constant(4, dim, side)?);
        for seed in 0..4 {
            let s = random_cartoon(dim, side, seed, 5)?;
            let r = jackson_check(&s, 4, n)?;
            println!(
                "  seed {seed}: besov {:.4e} <= {:.4e} + {:.4e}  {}",
                r.besov,
                r.omega_max,
                r.remainder,
                if r.holds { "ok" } else { "VIOLATED" }
            );
        }
    }
    Ok(())
}

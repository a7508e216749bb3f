//! Minimax exponents across dimension and risk exponent.

use frametv::analysis::{phase_boundary, target_exponent};

fn main() -> frametv::Result<()> {
    let qs = [1.0, 1.5, 2.0, 3.0, 4.0, 8.0, 16.0];
    print!("d \\ q ");
    for q in qs {
        print!("{q:>8}");
    }
    println!("   boundary");
    for d in 1..=3 {
        print!("{d:<6}");
        for q in qs {
            print!("{:>8.4}", target_exponent(d, q)?);
        }
        println!("   q = {:.3}", phase_boundary(d));
    }
    Ok(())
}

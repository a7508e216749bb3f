//! Interpolation ratios on single signals and the frozen-corpus constant.

use frametv::analysis::{check_interpolation, interpolation_corpus};
use frametv::truth::TruthSpec;

fn main() -> frametv::Result<()> {
    let disc = TruthSpec::named("disc2d").build(2, 128)?.signal;
    let rep = check_interpolation(&disc, 2.0, 128 * 128)?;
    println!(
        "disc: L2 {:.4}, besov {:.4e}, BV norm {:.4}, ratio {:.4}",
        rep.lq,
        rep.besov,
        rep.l1 + rep.bv,
        rep.ratio
    );
    let doubled = check_interpolation(&disc.scaled(2.0), 2.0, 128 * 128)?;
    println!("scaled by 2: ratio {:.4}", doubled.ratio);

    for (dim, side) in [(1, 1024), (2, 64)] {
        let corpus = interpolation_corpus(dim, side, 2.0, 100, 1, 4)?;
        println!(
            "d = {dim}: empirical constant over {} cartoons = {:.6}",
            corpus.ratios.len(),
            corpus.max_ratio
        );
    }
    Ok(())
}

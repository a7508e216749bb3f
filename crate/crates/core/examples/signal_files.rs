//! Round trips through the CSV, PGM and `.tsig` formats.

use frametv::io::{read_signal, write_signal};
use frametv::truth::random_cartoon;

fn main() -> frametv::Result<()> {
    let dir = std::env::temp_dir().join("frametv-signal-files");
    std::fs::create_dir_all(&dir)?;
    let line = random_cartoon(1, 256, 1, 3)?;
    let image = random_cartoon(2, 64, 2, 4)?;
    for (name, s) in [
        ("line.csv", &line),
        ("image.pgm", &image),
        ("image.tsig", &image),
    ] {
        let path = dir.join(name);
        write_signal(&path, s)?;
        let back = read_signal(&path)?;
        println!("{name:<11} max deviation {:.3e}", back.sub(s)?.sup_norm());
    }
    Ok(())
}

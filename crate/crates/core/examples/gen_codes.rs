//! Regenerates the shipped parity-check matrices.
//!
//! `cargo run -p scma-ntn --example gen_codes -- crates/core/data`

use std::path::PathBuf;

use scma_ntn::coding::{HIGH_MOTHER, LOW_MOTHER};

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    for mother in [HIGH_MOTHER, LOW_MOTHER] {
        let path = dir.join(format!("ldpc_{}_{}.alist", mother.n, mother.k));
        std::fs::write(&path, mother.construct().to_alist())?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

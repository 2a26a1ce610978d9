//! Writes the CSV data behind every figure into `results/`.
//!
//! `cargo run --release --example reproduce_figures -- full` uses the full
//! 10^4-node setting instead of the 2000-node desk scale.

use std::path::Path;

use collabsense::harness::figures::{reproduce_figure, Scale, FIGURES};

fn main() -> collabsense::Result<()> {
    env_logger::init();
    let scale: Scale = std::env::args().nth(1).as_deref().unwrap_or("desk").parse()?;
    for name in FIGURES {
        for path in reproduce_figure(name, scale, Path::new("results"), 1)? {
            println!("{}", path.display());
        }
    }
    Ok(())
}

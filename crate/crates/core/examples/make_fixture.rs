//! Regenerates `tests/fixtures/acas_like_tiny.nnet`.

use negsel_core::model::{random_network, save_nnet};

fn main() -> negsel_core::Result<()> {
    let net = random_network::<f64>(&[5, 8, 8, 5], 2024)?;
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/acas_like_tiny.nnet");
    save_nnet(&net, path)?;
    println!("wrote {path}");
    Ok(())
}

//! Reconstructs the generating curve and prints part of its CSV.
use hyperforge::pipeline::{self, RunConfig, SpaceName};

fn main() -> hyperforge::Result<()> {
    let k = pipeline::construct(&RunConfig::new(SpaceName::Ch2, -4.0))?;
    println!("{} nodes, model residual {:.1e}", k.curve.len(), k.curve.model_residual());
    for line in k.curve.to_csv_string()?.lines().step_by(50) {
        println!("{line}");
    }
    Ok(())
}

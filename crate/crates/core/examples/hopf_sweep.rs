//! Direction sweep at a fixed point, tabulating the non-Hopf margin.
use hyperforge::pipeline::{self, RunConfig, SpaceName};

fn main() -> hyperforge::Result<()> {
    let mut cfg = RunConfig::new(SpaceName::Cp2, 4.0);
    cfg.grid = [10, 6];
    cfg.out = std::env::temp_dir().join("hyperforge-hopf-sweep");
    let (_, rows) = pipeline::cmd_sweep(&cfg, 12)?;
    for r in rows {
        println!("w_angle {:.4}  {:>10}  pass {:>5}  min b {:.4}", r.w_angle, r.status, r.pass, r.min_b);
    }
    Ok(())
}

//! Sweeps the curve by the torus and certifies two principal curvatures.
use hyperforge::curvatureflow::Branch;
use hyperforge::pipeline::{self, RunConfig, SpaceName};

fn main() -> hyperforge::Result<()> {
    for (space, c) in [(SpaceName::Cp2, 4.0), (SpaceName::Ch2, -4.0)] {
        for branch in [Branch::BetaDouble, Branch::AlphaDouble] {
            let mut cfg = RunConfig::new(space, c);
            cfg.branch = branch;
            let k = pipeline::construct(&cfg)?;
            let (samples, r) = pipeline::verify(&cfg, &k.trajectory, &k.curve)?;
            println!(
                "c = {c}, {branch}: {} samples, pass {}, spread {:.1e}, curvature {:.1e}, Hopf angle {:.1e}, min b {:.3}",
                samples.len(),
                r.pass,
                r.max_spread,
                r.max_double_residual.max(r.max_simple_residual),
                r.max_hopf_residual,
                r.min_b
            );
        }
    }
    Ok(())
}

//! Integrates the principal-curvature flow from orbit data at a section point.
use hyperforge::curvatureflow::{self, Branch, FlowConfig};
use hyperforge::pipeline::{RunConfig, SpaceName};

fn main() -> hyperforge::Result<()> {
    let cfg = RunConfig::new(SpaceName::Cp2, 4.0);
    let space = cfg.space_form()?;
    let p = cfg.section_point(&space)?;
    let w = cfg.direction(&space, &p);
    for branch in [Branch::BetaDouble, Branch::AlphaDouble] {
        let init = curvatureflow::initial_conditions_from_orbit(&space, &p, &w, branch, 1e-4)?;
        let tr = curvatureflow::integrate_about(init.state, 4.0, (0.0, 0.5), 1e-12, &FlowConfig::default())?;
        println!("{branch}: {} nodes, halt {:?}", tr.len(), tr.halt);
        for k in (0..tr.len()).step_by(100) {
            let s = tr.states[k];
            println!("  t = {:.3}  alpha {:+.6}  beta {:+.6}  phi {:.6}", tr.t[k], s.alpha, s.beta, s.phi);
        }
    }
    Ok(())
}

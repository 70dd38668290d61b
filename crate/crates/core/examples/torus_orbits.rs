//! Numeric geometry of torus orbits and recovery of their parameters.
use hyperforge::orbits::{self, OrbitPoint};
use hyperforge::spaceform::{RVec3, SpaceForm};

fn main() -> hyperforge::Result<()> {
    for c in [4.0, -4.0] {
        let space = SpaceForm::from_curvature(c)?;
        let p = space.section_project(RVec3::new(1.0, 0.35, 0.5))?;
        let q = OrbitPoint { section_base: p, angles: (0.4, -1.2) };
        let g = orbits::numeric_orbit_geometry(&space, &q, 1e-4)?;
        let (pmc, _) = orbits::parallel_mean_curvature_residual(&space, &q, 1e-4, 1e-4)?;
        println!(
            "c = {c}: Lagrangian {:.1e}, Gauss curvature {:.1e}, parallel mean curvature {:.1e}",
            g.lagrangian_residual, g.gauss_curvature, pmc
        );
        let fit = orbits::fit_orbit_params(c, &g)?;
        println!("  fitted r = {:.6}, s = {:.6}, residual {:.1e}", fit.params.r(), fit.params.s(), fit.residual);
        for th in [0.0f64, 1.0, 2.0] {
            let (hi, lo) = orbits::orbit_principal_curvatures(&fit.params, th)?;
            println!("  normal angle {th}: principal curvatures {hi:.6}, {lo:.6}");
        }
    }
    Ok(())
}

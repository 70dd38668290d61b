//! The non-compact two-parameter orbits of CH2 and their fitted parameters.
use hyperforge::orbits;
use hyperforge::spaceform::SpaceForm;

fn main() -> hyperforge::Result<()> {
    let space = SpaceForm::from_curvature(-4.0)?;
    for (r, s) in [(1.0, 0.3), (2.0, -1.0), (0.8, 2.0)] {
        let g = orbits::hirakawa_geometry(&space, r, s, (0.3, -0.2), 1e-4)?;
        let fit = orbits::fit_orbit_params(-4.0, &g)?;
        println!(
            "r = {r}, s = {s}: Lagrangian {:.1e}, K {:.1e}, fitted r {:.6}",
            g.lagrangian_residual,
            g.gauss_curvature,
            fit.params.r()
        );
    }
    Ok(())
}

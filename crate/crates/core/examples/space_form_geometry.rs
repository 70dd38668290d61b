//! Distances, geodesics and curvature in CP2(4) and CH2(-4).
use hyperforge::spaceform::{RVec3, SpaceForm};

fn main() -> hyperforge::Result<()> {
    for c in [4.0, -4.0] {
        let space = SpaceForm::from_curvature(c)?;
        let p = space.section_embed(&space.section_project(RVec3::new(1.0, 0.3, 0.2))?)?;
        let q = space.section_embed(&space.section_project(RVec3::new(1.0, -0.4, 0.5))?)?;
        let d = space.distance(&p, &q);
        println!("c = {c}: radius {:.4}, d(p, q) = {d:.6}", space.radius());

        let u = space.section_unit_tangent(&space.section_project(RVec3::new(1.0, 0.3, 0.2))?, RVec3::new(0.0, 1.0, -0.5))?;
        let v = space.section_tangent_embed(&space.section_project(RVec3::new(1.0, 0.3, 0.2))?, &u)?;
        let g = space.geodesic(&p, &v, 0.25)?;
        println!("  unit-speed geodesic reaches distance {:.12} at t = 0.25", space.distance(&p, &g));

        let jv = space.apply_j(&v)?;
        println!("  holomorphic sectional curvature {:.12}", space.curvature_tensor(&v, &jv, &jv, &v)?);
    }
    Ok(())
}

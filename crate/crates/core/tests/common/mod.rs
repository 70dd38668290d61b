#![allow(dead_code)]

use rand::Rng;

use hyperforge::curvebuilder::GeneratingCurve;
use hyperforge::orbits;
use hyperforge::spaceform::{RVec3, SectionPoint, SpaceForm};

/// Outer step for the parallel mean curvature check.
pub const PMC_OUTER_STEP: f64 = 1e-4;

/// A section point with every coordinate modulus at least a tenth of the radius.
pub fn random_regular_point<R: Rng>(space: &SpaceForm, rng: &mut R) -> SectionPoint {
    let r = space.radius() / 2.0;
    loop {
        let x = RVec3::new(1.0, rng.random_range(-1.5..1.5) * r, rng.random_range(-1.5..1.5) * r);
        let Ok(p) = space.section_project(x) else { continue };
        if orbits::min_coordinate_modulus(&p) > 0.1 * r {
            return p;
        }
    }
}

pub fn max_pointwise_distance(a: &GeneratingCurve, b: &GeneratingCurve) -> f64 {
    a.samples
        .iter()
        .zip(&b.samples)
        .map(|(x, y)| a.space.section_distance(&x.pos, &y.pos))
        .fold(0.0, f64::max)
}

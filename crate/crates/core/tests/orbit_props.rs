mod common;

use std::f64::consts::PI;

use nalgebra::SymmetricEigen;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hyperforge::orbits::{self, OrbitParams, OrbitPoint};
use hyperforge::spaceform::SpaceForm;

fn eig_desc(m: nalgebra::Matrix2<f64>) -> (f64, f64) {
    let e = SymmetricEigen::new(m).eigenvalues;
    (e[0].max(e[1]), e[0].min(e[1]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn closed_form_eigenvalues_match_eigensolve(neg in any::<bool>(), r in -2.0f64..2.0, s in -PI..PI, th in -PI..PI) {
        let c = if neg { -4.0 } else { 4.0 };
        prop_assume!(c + 8.0 * r * r >= 0.0);
        let op = OrbitParams::new(c, r, s).unwrap();
        let (hi, lo) = orbits::orbit_principal_curvatures(&op, th).unwrap();
        let (ehi, elo) = eig_desc(orbits::shape_operator_matrices(&op).along(th));
        prop_assert!((hi - ehi).abs() < 1e-12 && (lo - elo).abs() < 1e-12);
    }
}

#[test]
fn principal_curvatures_are_distinct_on_a_grid() {
    let mut min_gap = f64::INFINITY;
    for i in -20..=20 {
        for j in 0..24 {
            for k in 0..24 {
                let r = 0.1 * i as f64;
                let (s, th) = (2.0 * PI * j as f64 / 24.0, 2.0 * PI * k as f64 / 24.0);
                let op = OrbitParams::new(4.0, r, s).unwrap();
                let (hi, lo) = orbits::orbit_principal_curvatures(&op, th).unwrap();
                min_gap = min_gap.min(hi - lo);
            }
        }
    }
    assert!(min_gap > 1e-3 * 2.0, "min gap {min_gap}");
}

#[test]
fn numeric_orbit_matches_fitted_family() {
    for c in [4.0, -4.0] {
        let space = SpaceForm::from_curvature(c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let p = common::random_regular_point(&space, &mut rng);
            let g = orbits::numeric_orbit_geometry(&space, &OrbitPoint { section_base: p, angles: (0.3, -1.1) }, 1e-4).unwrap();
            let fit = orbits::fit_orbit_params(c, &g).unwrap();
            for th in [0.0f64, 0.9, 2.5, -1.7] {
                let nu = g.normal[0] * num_complex::Complex64::new(th.cos(), 0.0) + g.normal[1] * num_complex::Complex64::new(th.sin(), 0.0);
                let (hi, lo) = g.principal_curvatures(&space, &nu);
                let (fhi, flo) = orbits::orbit_principal_curvatures(&fit.params, fit.normal_angle(&space, &g, &nu)).unwrap();
                assert!((hi - fhi).abs() < 1e-5 && (lo - flo).abs() < 1e-5, "c {c}: {hi} {lo} vs {fhi} {flo}");
            }
        }
    }
}

#[test]
fn extrinsic_data_is_constant_along_the_orbit() {
    let space = SpaceForm::from_curvature(4.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let p = common::random_regular_point(&space, &mut rng);
    let at = |a: (f64, f64)| orbits::numeric_orbit_geometry(&space, &OrbitPoint { section_base: p, angles: a }, 1e-4).unwrap();
    let base = at((0.0, 0.0));
    for a in [(1.0, 2.0), (-2.5, 0.4), (3.0, -3.0)] {
        let g = at(a);
        assert!((g.shape[0] - base.shape[0]).abs().max() < 1e-7);
        assert!((g.shape[1] - base.shape[1]).abs().max() < 1e-7);
        assert!(g.gauss_curvature.abs() < 1e-6 && g.lagrangian_residual < 1e-12);
    }
}

#[test]
fn hirakawa_orbit_is_a_flat_lagrangian_torus_instance() {
    let space = SpaceForm::from_curvature(-4.0).unwrap();
    let g = orbits::hirakawa_geometry(&space, 1.0, 0.3, (0.2, -0.4), 1e-4).unwrap();
    assert!(g.lagrangian_residual < 1e-9);
    assert!(g.gauss_curvature.abs() < 1e-5);
    let fit = orbits::fit_orbit_params(-4.0, &g).unwrap();
    assert!((fit.params.r() - 1.0).abs() < 1e-4);
}

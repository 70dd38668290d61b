use nalgebra::Vector3;
use num_complex::Complex64;

use hyperforge::curvebuilder;
use hyperforge::hypersurface::{self, Hypersurface, Tolerances};
use hyperforge::orbits::{self, OrbitPoint};
use hyperforge::pipeline::{self, Construction, RunConfig, SpaceName};
use hyperforge::spaceform::complexify;

fn build(space: SpaceName, c: f64) -> Construction {
    pipeline::construct(&RunConfig::new(space, c)).unwrap()
}

fn cases() -> Vec<Construction> {
    vec![build(SpaceName::Cp2, 4.0), build(SpaceName::Ch2, -4.0)]
}

#[test]
fn grid_contract_and_normal_along_the_curve() {
    for k in cases() {
        let samples = hypersurface::sample_hypersurface(&k.curve, (5, 4), 1e-4).unwrap();
        assert_eq!(samples.len(), 5 * 16);
        for s in samples.iter().filter(|s| s.params.1 == 0.0 && s.params.2 == 0.0) {
            let xi = complexify(&k.curve.samples[s.node].normal);
            assert!((s.normal - xi).norm() < 1e-8, "normal off the curve normal by {}", (s.normal - xi).norm());
        }
        for s in &samples {
            let mut vecs = s.frame.to_vec();
            vecs.push(s.normal);
            for a in 0..4 {
                for b in 0..4 {
                    let g = k.space.real_inner(&vecs[a], &vecs[b]);
                    assert!((g - f64::from(a == b)).abs() < 1e-9);
                }
            }
            assert!(s.asymmetry < 1e-7);
        }
    }
}

#[test]
fn tangent_space_contains_the_orbit() {
    for k in cases() {
        let hs = Hypersurface::new(&k.curve, 1e-4).unwrap();
        let s = hs.sample(80, (0.4, 1.3)).unwrap();
        let g = orbits::numeric_orbit_geometry(&k.space, &OrbitPoint { section_base: k.curve.samples[80].pos, angles: (0.4, 1.3) }, 1e-4).unwrap();
        for t in &g.tangent {
            let rest = t - hyperforge::lift::project_onto(&k.space, t, &s.frame);
            assert!(k.space.real_inner(&rest, &rest).sqrt() < 1e-9);
        }
    }
}

#[test]
fn shape_operator_restricts_to_the_orbit_second_fundamental_form() {
    for k in cases() {
        let hs = Hypersurface::new(&k.curve, 1e-4).unwrap();
        let s = hs.sample(120, (2.0, -0.6)).unwrap();
        let g = orbits::numeric_orbit_geometry(&k.space, &OrbitPoint { section_base: k.curve.samples[120].pos, angles: (2.0, -0.6) }, 1e-4).unwrap();
        let expected = g.shape_along(&k.space, &s.normal);
        let comp = |v: &hyperforge::spaceform::CVec3| Vector3::from_fn(|m, _| k.space.real_inner(v, &s.frame[m]));
        for i in 0..2 {
            for j in 0..2 {
                let got = comp(&g.tangent[i]).dot(&(s.shape * comp(&g.tangent[j])));
                assert!((got - expected[(i, j)]).abs() < 1e-4, "({i},{j}): {got} vs {}", expected[(i, j)]);
            }
        }
    }
}

#[test]
fn shape_operator_converges_at_second_order() {
    let k = build(SpaceName::Cp2, 4.0);
    let hs = Hypersurface::new(&k.curve, 1e-4).unwrap();
    let at = |h| hs.shape_at(60, (0.9, 0.2), h).unwrap().matrix;
    let (a, b, c) = (at(1e-3), at(5e-4), at(2.5e-4));
    let ratio = (a - b).abs().max() / (b - c).abs().max();
    assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
    assert!(hs.shape_at(60, (0.9, 0.2), 1e-4).unwrap().asymmetry < 1e-7);
}

#[test]
fn hopf_frame_relations() {
    for k in cases() {
        let samples = hypersurface::sample_hypersurface(&k.curve, (6, 5), 1e-4).unwrap();
        for s in &samples {
            let h = s.hopf.expect("generic sample");
            assert!((h.a * h.a + h.b * h.b - 1.0).abs() < 1e-10);
            assert!(h.a > 0.0 && h.b > 0.0);
            assert!(h.relation_residual < 1e-6, "relations {}", h.relation_residual);
            // <JA, xi> alone
            let amb = h.a_dir.iter().enumerate().fold(hyperforge::spaceform::CVec3::zeros(), |acc, (m, x)| acc + s.frame[m] * Complex64::new(*x, 0.0));
            assert!(k.space.real_inner(&(amb * Complex64::i()), &s.normal).abs() < 1e-8);
            if s.params.1 == 0.0 && s.params.2 == 0.0 {
                assert!((h.phi - s.state.phi).abs() < 1e-4);
            }
        }
    }
}

#[test]
fn residuals_do_not_depend_on_the_torus_angles() {
    let k = build(SpaceName::Cp2, 4.0);
    let samples = hypersurface::sample_hypersurface(&k.curve, (4, 6), 1e-4).unwrap();
    let r = hypersurface::verify_two_curvatures(&samples, &k.trajectory, &Tolerances::for_curvature(4.0));
    assert!(r.pass, "{}", r.diagnostic);
    for leaf in r.samples.chunks(36) {
        let (d0, s0) = (leaf[0].double_residual, leaf[0].simple_residual);
        for row in leaf {
            assert!((row.double_residual - d0).abs() < 1e-6 && (row.simple_residual - s0).abs() < 1e-6);
        }
    }
}

#[test]
fn split_is_stable_under_step_halving() {
    let k = build(SpaceName::Ch2, -4.0);
    let a = hypersurface::sample_hypersurface(&k.curve, (5, 4), 2e-4).unwrap();
    let b = hypersurface::sample_hypersurface(&k.curve, (5, 4), 1e-4).unwrap();
    for (x, y) in a.iter().zip(&b) {
        let sx = hypersurface::split_eigenvalues(&x.eigs).unwrap().0;
        let sy = hypersurface::split_eigenvalues(&y.eigs).unwrap().0;
        assert_eq!(sx, sy);
    }
}

#[test]
fn passing_run_stays_non_hopf() {
    for k in cases() {
        let samples = hypersurface::sample_hypersurface(&k.curve, (8, 6), 1e-4).unwrap();
        let r = hypersurface::verify_two_curvatures(&samples, &k.trajectory, &Tolerances::for_curvature(k.space.c()));
        assert!(r.pass && r.min_b > 1e-3, "min b {}", r.min_b);
    }
}

#[test]
fn leaves_are_flat_totally_real_orbits() {
    for k in cases() {
        for node in [0, 100, 200] {
            let q = OrbitPoint { section_base: k.curve.samples[node].pos, angles: (0.5, 1.5) };
            let g = orbits::numeric_orbit_geometry(&k.space, &q, 1e-4).unwrap();
            assert!(g.lagrangian_residual < 1e-9 && g.gauss_curvature.abs() < 1e-5);
        }
    }
}

#[test]
fn leaf_distances() {
    let k = build(SpaceName::Cp2, 4.0);
    let samples = hypersurface::sample_hypersurface(&k.curve, (11, 4), 1e-4).unwrap();
    let ts: Vec<f64> = samples.iter().step_by(16).map(|s| s.params.0).collect();
    let same = hypersurface::check_equidistance(&k.space, &samples, ts[3], ts[3]).unwrap();
    assert!(same.distances.iter().all(|d| *d < 1e-7));
    let mut last = 0.0;
    for t in &ts[1..5] {
        let e = hypersurface::check_equidistance(&k.space, &samples, ts[0], *t).unwrap();
        assert!(e.mean > last && e.relative_spread < 1e-3);
        last = e.mean;
    }
    assert!(hypersurface::check_equidistance(&k.space, &samples, ts[0], 0.123456).is_err());
}

#[test]
fn gauss_and_codazzi_equations() {
    for k in cases() {
        let hs = Hypersurface::new(&k.curve, 1e-3).unwrap();
        let s = hs.sample(100, (0.7, 2.1)).unwrap();
        let coarse = hypersurface::gauss_codazzi_residual(&hs, &s, 1e-3, None).unwrap();
        assert!(coarse.gauss < 1e-3 && coarse.codazzi < 1e-3, "{coarse:?}");
        let fine = hypersurface::gauss_codazzi_residual(&hs, &s, 5e-4, None).unwrap();
        let ratio = coarse.gauss / fine.gauss;
        assert!((3.0..5.0).contains(&ratio), "gauss refinement ratio {ratio}");
        let bad = hypersurface::gauss_codazzi_residual(&hs, &s, 1e-3, Some((0, 0, 0.1))).unwrap();
        assert!(bad.gauss.max(bad.codazzi) > 1e-2);
    }
}

#[test]
fn geodesic_generator_fails_verification() {
    let k = build(SpaceName::Ch2, -4.0);
    let geo = curvebuilder::reconstruct_with_curvature(&k.space, &k.trajectory, &k.p, &k.w, &k.init.xi, 0.0).unwrap();
    let samples = hypersurface::sample_hypersurface(&geo, (6, 4), 1e-4).unwrap();
    let r = hypersurface::verify_two_curvatures(&samples, &k.trajectory, &Tolerances::for_curvature(-4.0));
    assert!(!r.pass);
    assert!(r.diagnostic.contains("three distinct"));
}

#[test]
fn mesh_export_round_trip() {
    let k = build(SpaceName::Cp2, 4.0);
    let samples = hypersurface::sample_hypersurface(&k.curve, (3, 3), 1e-4).unwrap();
    let rows = hypersurface::samples_to_rows(&samples);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    hypersurface::write_samples_csv(&rows, &path).unwrap();
    let back = hypersurface::read_samples_csv(&path).unwrap();
    assert_eq!(back, rows);
    let mesh = hypersurface::rows_to_mesh(&back).unwrap();
    assert_eq!(mesh.dims, [3, 3, 3]);
    assert_eq!(mesh.vertices.len(), 27);
    assert!(hypersurface::rows_to_mesh(&back[..26]).is_err());
}

//! Acceptance suite: one line per criterion, nonzero exit on any failure.

mod common;

use std::f64::consts::{FRAC_PI_4, PI};
use std::time::Instant;

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hyperforge::curvatureflow::{self, Branch, CurvatureState, FlowConfig, Trajectory};
use hyperforge::curvebuilder;
use hyperforge::hypersurface::{self, Tolerances};
use hyperforge::orbits::{self, OrbitParams, OrbitPoint};
use hyperforge::pipeline::{self, RunConfig, SpaceName};

type Outcome = (bool, String);

/// Two distinct eigenvalues from the closed form, checked against a direct
/// symmetric eigensolve.
fn c1_eigenvalue_formula() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut min_gap: f64 = f64::INFINITY;
    let mut bound_ok = true;
    for c in [4.0f64, -4.0] {
        for _ in 0..1000 {
            let r = loop {
                let r: f64 = rng.random_range(-2.0..2.0);
                if c + 8.0 * r * r >= 1e-6 {
                    break r;
                }
            };
            let s: f64 = rng.random_range(-PI..PI);
            let th: f64 = rng.random_range(-PI..PI);
            let op = OrbitParams::new(c, r, s).unwrap();
            let (hi, lo) = orbits::orbit_principal_curvatures(&op, th).unwrap();
            let e = SymmetricEigen::new(orbits::shape_operator_matrices(&op).along(th)).eigenvalues;
            let (ehi, elo) = (e[0].max(e[1]), e[0].min(e[1]));
            worst = worst.max((hi - ehi).abs()).max((lo - elo).abs());
            min_gap = min_gap.min(hi - lo);
        }
        bound_ok &= min_gap > 1e-3 * c.abs().sqrt();
    }
    (worst < 1e-12 && bound_ok, format!("max formula error {worst:.2e} (< 1e-12), min gap {min_gap:.3e} (> 2e-3)"))
}

/// Torus orbits are flat, Lagrangian, with parallel mean curvature.
fn c2_orbit_characterization() -> Outcome {
    let h = 1e-4;
    let (mut lag, mut gauss, mut pmc): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for c in [4.0, -4.0] {
        let space = hyperforge::spaceform::SpaceForm::from_curvature(c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let p = common::random_regular_point(&space, &mut rng);
            let angles = (rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI));
            let q = OrbitPoint { section_base: p, angles };
            let g = orbits::numeric_orbit_geometry(&space, &q, h).unwrap();
            lag = lag.max(g.lagrangian_residual);
            gauss = gauss.max(g.gauss_curvature.abs());
            let (res, _) = orbits::parallel_mean_curvature_residual(&space, &q, h, common::PMC_OUTER_STEP).unwrap();
            pmc = pmc.max(res);
        }
    }
    (
        lag < 1e-9 && gauss < 1e-5 && pmc < 1e-4,
        format!("Lagrangian {lag:.2e} (< 1e-9), |K| {gauss:.2e} (< 1e-5), parallel H {pmc:.2e} (< 1e-4)"),
    )
}

/// Hand-evaluated right-hand side and fourth-order self-convergence.
fn c3_ode() -> Outcome {
    let d = curvatureflow::ode_rhs(&CurvatureState::new(2.0, 0.0, FRAC_PI_4), 4.0).unwrap();
    let hand = (d[0] - 4.5).abs().max((d[1] + 1.5).abs()).max((d[2] + 0.25).abs());
    let init = CurvatureState::new(2.0, 0.0, FRAC_PI_4);
    let end = |step: f64| {
        let cfg = FlowConfig { step, ..FlowConfig::default() };
        let tr = curvatureflow::integrate_with(init, 4.0, (0.0, 0.3), 1e3, &cfg).unwrap();
        assert!(tr.halt.is_completed(), "halted: {:?}", tr.halt);
        let s = tr.states.last().unwrap();
        [s.alpha, s.beta, s.phi]
    };
    let (y1, y2, y3) = (end(0.05), end(0.025), end(0.0125));
    let dist = |a: [f64; 3], b: [f64; 3]| (0..3).map(|k| (a[k] - b[k]).abs()).fold(0.0, f64::max);
    let ratio = dist(y1, y2) / dist(y2, y3);
    (
        hand < 1e-12 && (12.0..=20.0).contains(&ratio),
        format!("rhs error {hand:.2e} (< 1e-12), halving ratio {ratio:.2} (in [12, 20])"),
    )
}

/// Finite-difference derivatives along trajectories against the three laws.
fn c4_identities() -> Outcome {
    let step = 1e-4;
    let mut worst: f64 = 0.0;
    let cfg = FlowConfig { step, ..FlowConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut runs = 0;
    while runs < 10 {
        let c = if runs % 2 == 0 { 4.0 } else { -4.0 };
        let init = CurvatureState::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(0.3..1.2));
        if (init.alpha - init.beta).abs() < 0.5 {
            continue;
        }
        let tr = curvatureflow::integrate_with(init, c, (0.0, 0.05), 1e-13, &cfg).unwrap();
        if tr.len() < 50 {
            continue;
        }
        runs += 1;
        worst = worst.max(law_residual(&tr, c, step));
    }
    (worst < 1e-8, format!("max law residual {worst:.2e} over 10 trajectories (< 1e-8)"))
}

fn law_residual(tr: &Trajectory, c: f64, h: f64) -> f64 {
    let series = |f: &dyn Fn(&CurvatureState) -> f64| tr.states.iter().map(f).collect::<Vec<_>>();
    let cosp = series(&|s| s.phi.cos());
    let beta = series(&|s| s.beta);
    let alpha = series(&|s| s.alpha);
    let d5 = |v: &[f64], k: usize| (v[k - 2] - 8.0 * v[k - 1] + 8.0 * v[k + 1] - v[k + 2]) / (12.0 * h);
    let mut worst: f64 = 0.0;
    for k in 2..tr.len() - 2 {
        let st = &tr.states[k];
        worst = worst
            .max((d5(&cosp, k) - curvatureflow::cos_phi_law(st, c)).abs())
            .max((d5(&beta, k) - curvatureflow::beta_law(st, c)).abs())
            .max((d5(&alpha, k) - curvatureflow::alpha_law(st, c)).abs());
    }
    worst
}

fn acceptance_tolerances() -> Tolerances {
    Tolerances { tol_mult: 1e-3, curvature: 5e-3, hopf: 1e-3 }
}

/// Both branches in both spaces split two-one and match the flow.
fn c5_end_to_end() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for (space, c) in [(SpaceName::Cp2, 4.0), (SpaceName::Ch2, -4.0)] {
        let mut curves = Vec::new();
        for branch in [Branch::BetaDouble, Branch::AlphaDouble] {
            let mut cfg = RunConfig::new(space, c);
            cfg.branch = branch;
            cfg.grid = [20, 12];
            let k = pipeline::construct(&cfg).unwrap();
            let samples = hypersurface::sample_hypersurface(&k.curve, (20, 12), cfg.fd_step).unwrap();
            let r = hypersurface::verify_two_curvatures(&samples, &k.trajectory, &acceptance_tolerances());
            ok &= r.pass && k.trajectory.halt.is_completed() && samples.len() == 20 * 144;
            parts.push(format!(
                "c={c} {branch}: spread {:.1e} curvature {:.1e} hopf {:.1e}",
                r.max_spread,
                r.max_double_residual.max(r.max_simple_residual),
                r.max_hopf_residual
            ));
            curves.push(k);
        }
        let sep = common::max_pointwise_distance(&curves[0].curve, &curves[1].curve);
        ok &= sep > 1e-4;
        parts.push(format!("c={c} branch separation {sep:.3e}"));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 300.0;
    (ok, format!("{}; {secs:.1}s", parts.join("; ")))
}

/// A section geodesic sweeps a hypersurface with three principal curvatures.
fn c6_negative_control() -> Outcome {
    let cfg = RunConfig::new(SpaceName::Cp2, 4.0);
    let k = pipeline::construct(&cfg).unwrap();
    let geo = curvebuilder::reconstruct_with_curvature(&k.space, &k.trajectory, &k.p, &k.w, &k.init.xi, 0.0).unwrap();
    let samples = hypersurface::sample_hypersurface(&geo, (20, 12), cfg.fd_step).unwrap();
    let r = hypersurface::verify_two_curvatures(&samples, &k.trajectory, &acceptance_tolerances());
    let distinct = r.samples.iter().filter(|s| s.min_gap > 1e-2).count();
    let frac = distinct as f64 / r.samples.len() as f64;
    (
        !r.pass && frac >= 0.9,
        format!("report pass = {}, {distinct}/{} samples with pairwise gaps > 1e-2", r.pass, r.samples.len()),
    )
}

/// Leaves at separation 0.1 are equidistant.
fn c7_equidistance() -> Outcome {
    let mut cfg = RunConfig::new(SpaceName::Cp2, 4.0);
    cfg.grid = [21, 12];
    let k = pipeline::construct(&cfg).unwrap();
    let samples = hypersurface::sample_hypersurface(&k.curve, (21, 12), cfg.fd_step).unwrap();
    let r = hypersurface::verify_two_curvatures(&samples, &k.trajectory, &acceptance_tolerances());
    let t1 = samples[0].params.0;
    let t2 = samples.iter().map(|s| s.params.0).min_by(|a, b| (a - 0.1).abs().total_cmp(&(b - 0.1).abs())).unwrap();
    let e = hypersurface::check_equidistance(&k.space, &samples, t1, t2).unwrap();
    (
        r.pass && (t2 - t1 - 0.1).abs() < 1e-9 && e.relative_spread < 1e-3,
        format!("run pass = {}, separation {:.4}, mean distance {:.5}, spread/mean {:.2e} (< 1e-3)", r.pass, t2 - t1, e.mean, e.relative_spread),
    )
}

/// Most sweep directions stay away from the Hopf condition.
fn c8_non_hopf() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::new(SpaceName::Cp2, 4.0);
    cfg.out = dir.path().to_path_buf();
    let (_, rows) = pipeline::cmd_sweep(&cfg, 8).unwrap();
    let good = rows.iter().filter(|r| r.min_b > 1e-3).count();
    let min_b: Vec<String> = rows.iter().map(|r| format!("{:.3}", r.min_b)).collect();
    (rows.len() == 8 && good >= 6, format!("{good}/8 directions with min b > 1e-3 [{}]", min_b.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("C1 eigenvalue formula", c1_eigenvalue_formula),
        ("C2 orbit characterization", c2_orbit_characterization),
        ("C3 ode correctness", c3_ode),
        ("C4 derivative identities", c4_identities),
        ("C5 end-to-end two curvatures", c5_end_to_end),
        ("C6 geodesic negative control", c6_negative_control),
        ("C7 equidistant leaves", c7_equidistance),
        ("C8 non-Hopf genericity", c8_non_hopf),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let (ok, detail) = f();
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        failed += usize::from(!ok);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

//! The swept hypersurface `M = H . gamma` and its numerical certification.
//!
//! `M` is parametrized by `(t, t1, t2) -> diag(1, e^{i t1}, e^{i t2}) gamma(t)`.
//! The unit normal is recovered from finite-difference tangents and the shape
//! operator from central differences of the normal field, both in the lift
//! space with the fibre direction removed.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvatureflow::{CurvatureState, Trajectory};
use crate::curvebuilder::GeneratingCurve;
use crate::error::{Error, Result};
use crate::lift;
use crate::orbits::{self, FD_STEP_RANGE};
use crate::spaceform::{complexify, re, AmbientPoint, CVec3, SpaceForm};

/// Asymmetry of the raw shape operator above which the estimate is rejected.
pub const ASYMMETRY_LIMIT: f64 = 1e-5;
/// Below this value of `b = sin(phi)` the Hopf frame is undefined.
pub const HOPF_DEGENERACY: f64 = 1e-6;

/// Hopf frame `J xi = a U + b V`, `A` completing the double eigenspace.
/// Vectors are components in the sample's orthonormal tangent frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HopfFrame {
    pub a: f64,
    pub b: f64,
    pub phi: f64,
    pub u: [f64; 3],
    pub v: [f64; 3],
    pub a_dir: [f64; 3],
    /// `max(|<JU, V>|, |<JA, xi>|, |<JV, A> - a|)`.
    pub relation_residual: f64,
}

#[derive(Clone, Debug)]
pub struct HypersurfaceSample {
    pub params: (f64, f64, f64),
    /// Index of the curve node the sample sits on.
    pub node: usize,
    pub point: AmbientPoint,
    pub frame: [CVec3; 3],
    pub normal: CVec3,
    pub shape: Matrix3<f64>,
    pub asymmetry: f64,
    /// Sorted descending.
    pub eigs: [f64; 3],
    /// Columns are unit eigenvectors in frame components, same order as `eigs`.
    pub eigvecs: Matrix3<f64>,
    /// `None` at Hopf points or when the eigenvalue split is ambiguous.
    pub hopf: Option<HopfFrame>,
    /// Curvature ODE state carried by the curve node.
    pub state: CurvatureState,
}

/// Finite-difference view of `M` built over a generating curve.
#[derive(Clone, Copy)]
pub struct Hypersurface<'a> {
    pub curve: &'a GeneratingCurve,
    pub h: f64,
}

/// Shape operator estimate with its raw asymmetry.
#[derive(Clone, Copy, Debug)]
pub struct ShapeEstimate {
    pub matrix: Matrix3<f64>,
    pub asymmetry: f64,
}

struct LocalJet {
    z: CVec3,
    xh: [CVec3; 3],
    lam: [f64; 3],
    li: DMatrix<f64>,
    frame: [CVec3; 3],
    normal: CVec3,
}

fn check_step(h: f64) -> Result<()> {
    if !(h >= FD_STEP_RANGE.0 && h <= FD_STEP_RANGE.1) {
        return Err(Error::InvalidStep(h));
    }
    Ok(())
}

impl<'a> Hypersurface<'a> {
    pub fn new(curve: &'a GeneratingCurve, h: f64) -> Result<Self> {
        check_step(h)?;
        Ok(Self { curve, h })
    }

    fn space(&self) -> &SpaceForm {
        &self.curve.space
    }

    /// Lift of the parametrization, expanded around curve node `anchor`.
    fn chart(&self, anchor: usize, u: &[f64]) -> CVec3 {
        let s = self.curve.eval_from(anchor, u[0]).expect("curve evaluation near a valid node");
        orbits::torus_apply((u[1], u[2]), &complexify(&s.pos.x))
    }

    /// `chart(u + v) - chart(u)` without cancellation.
    fn chart_delta(&self, anchor: usize, u: &[f64], v: &[f64]) -> CVec3 {
        let inc = |t: f64| self.curve.position_increment(anchor, t).expect("curve evaluation near a valid node");
        let (iu, iv) = (inc(u[0]), inc(u[0] + v[0]));
        let x = complexify(&(self.curve.samples[anchor].pos.x + iv));
        let d = x.component_mul(&orbits::torus_increment((v[1], v[2]))) + complexify(&(iv - iu));
        orbits::torus_apply((u[1], u[2]), &d)
    }

    /// Pushed-forward curve normal, used only to orient the numeric normal.
    fn reference_normal(&self, anchor: usize, u: &[f64]) -> CVec3 {
        let s = self.curve.eval_from(anchor, u[0]).expect("curve evaluation near a valid node");
        orbits::torus_apply((u[1], u[2]), &complexify(&s.normal))
    }

    fn jet(&self, anchor: usize, u: &[f64], h: f64) -> Result<LocalJet> {
        let space = self.space();
        let z = self.chart(anchor, u);
        let f = |v: &[f64]| self.chart_delta(anchor, u, v);
        let d: Vec<CVec3> = (0..3).map(|a| lift::first_diff(&f, &[0.0; 3], a, h)).collect();
        let xh = [space.horizontal(&z, &d[0]), space.horizontal(&z, &d[1]), space.horizontal(&z, &d[2])];
        let lam = [space.vertical_rate(&z, &d[0]), space.vertical_rate(&z, &d[1]), space.vertical_rate(&z, &d[2])];
        let li = lift::inverse_cholesky(&lift::gram(space, &xh))?;
        let e = lift::combine(&li, &xh);
        let frame = [e[0], e[1], e[2]];
        let mut normal = lift::normal_completion(space, &z, &frame)?;
        if space.real_inner(&normal, &self.reference_normal(anchor, u)) < 0.0 {
            normal = -normal;
        }
        Ok(LocalJet { z, xh, lam, li, frame, normal })
    }

    /// Coordinate second fundamental form `B_ab = <S X_a, X_b>` (unsymmetrized).
    fn coordinate_shape(&self, anchor: usize, u: &[f64], h: f64, inner: f64) -> Result<(LocalJet, Matrix3<f64>)> {
        let space = self.space();
        let jet = self.jet(anchor, u, inner)?;
        let i = Complex64::i();
        let mut b = Matrix3::zeros();
        for a in 0..3 {
            let mut up = u.to_vec();
            let mut dn = u.to_vec();
            up[a] += h;
            dn[a] -= h;
            let np = self.jet(anchor, &up, inner)?.normal;
            let nm = self.jet(anchor, &dn, inner)?.normal;
            let dnu = (np - nm) / re(2.0 * h) - jet.normal * (i * jet.lam[a]);
            let dnu = space.horizontal(&jet.z, &dnu);
            for c in 0..3 {
                b[(a, c)] = -space.real_inner(&dnu, &jet.xh[c]);
            }
        }
        Ok((jet, b))
    }

    fn to_frame(li: &DMatrix<f64>, b: &Matrix3<f64>) -> Matrix3<f64> {
        let l = Matrix3::from_fn(|i, j| li[(i, j)]);
        l * b * l.transpose()
    }

    /// Shape operator at curve node `node` and torus angles `theta`.
    pub fn shape_at(&self, node: usize, theta: (f64, f64), h: f64) -> Result<ShapeEstimate> {
        check_step(h)?;
        let u = [self.curve.samples[node].t, theta.0, theta.1];
        let (jet, b) = self.coordinate_shape(node, &u, h, h)?;
        Ok(finish_shape(Self::to_frame(&jet.li, &b)))
    }

    /// Builds a full sample at curve node `node`.
    pub fn sample(&self, node: usize, theta: (f64, f64)) -> Result<HypersurfaceSample> {
        let space = self.space();
        let cs = &self.curve.samples[node];
        let u = [cs.t, theta.0, theta.1];
        let (jet, b) = self.coordinate_shape(node, &u, self.h, self.h)?;
        let est = finish_shape(Self::to_frame(&jet.li, &b));
        if est.asymmetry > ASYMMETRY_LIMIT {
            return Err(Error::Asymmetry(est.asymmetry));
        }
        let (eigs, eigvecs) = sorted_eigen(&est.matrix);
        let mut s = HypersurfaceSample {
            params: (cs.t, theta.0, theta.1),
            node,
            point: space.point(jet.z).or_else(|_| space.normalize(jet.z))?,
            frame: jet.frame,
            normal: jet.normal,
            shape: est.matrix,
            asymmetry: est.asymmetry,
            eigs,
            eigvecs,
            hopf: None,
            state: cs.state,
        };
        s.hopf = hopf_frame(space, &s).ok();
        Ok(s)
    }
}

fn finish_shape(s: Matrix3<f64>) -> ShapeEstimate {
    let asymmetry = (s - s.transpose()).abs().max();
    ShapeEstimate { matrix: (s + s.transpose()) * 0.5, asymmetry }
}

fn sorted_eigen(m: &Matrix3<f64>) -> ([f64; 3], Matrix3<f64>) {
    let e = SymmetricEigen::new(*m);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&i, &j| e.eigenvalues[j].total_cmp(&e.eigenvalues[i]));
    let eigs = [e.eigenvalues[idx[0]], e.eigenvalues[idx[1]], e.eigenvalues[idx[2]]];
    let vecs = Matrix3::from_fn(|r, c| e.eigenvectors[(r, idx[c])]);
    (eigs, vecs)
}

/// Two-one split of a descending triple: `(simple_index, pair, spread)`.
pub fn split_eigenvalues(eigs: &[f64; 3]) -> Result<(usize, (usize, usize), f64)> {
    let g01 = eigs[0] - eigs[1];
    let g12 = eigs[1] - eigs[2];
    let scale = eigs.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if (g01 - g12).abs() <= 1e-12 * scale {
        return Err(Error::AmbiguousSplit);
    }
    Ok(if g01 < g12 { (2, (0, 1), g01) } else { (0, (1, 2), g12) })
}

pub fn sample_hypersurface(curve: &GeneratingCurve, grid: (usize, usize), h: f64) -> Result<Vec<HypersurfaceSample>> {
    let (n_t, n_theta) = grid;
    if n_t < 3 || n_theta < 3 {
        return Err(Error::GridMismatch(format!("grid ({n_t}, {n_theta}) must be at least 3 in each direction")));
    }
    if curve.len() < n_t {
        return Err(Error::GridMismatch(format!("curve has {} nodes, grid needs {n_t}", curve.len())));
    }
    let hs = Hypersurface::new(curve, h)?;
    let nodes = grid_nodes(curve.len(), n_t);
    let mut jobs = Vec::with_capacity(n_t * n_theta * n_theta);
    for &k in &nodes {
        for i in 0..n_theta {
            for j in 0..n_theta {
                let th = (2.0 * PI * i as f64 / n_theta as f64, 2.0 * PI * j as f64 / n_theta as f64);
                jobs.push((k, th));
            }
        }
    }
    jobs.par_iter().map(|&(k, th)| hs.sample(k, th)).collect()
}

/// `n` node indices spread evenly over `len` curve nodes.
pub fn grid_nodes(len: usize, n: usize) -> Vec<usize> {
    if n == 1 {
        return vec![0];
    }
    (0..n).map(|i| ((i * (len - 1)) as f64 / (n - 1) as f64).round() as usize).collect()
}

/// Shape operator of `s` re-estimated with step `h`.
pub fn numeric_shape_operator(hs: &Hypersurface<'_>, s: &HypersurfaceSample, h: f64) -> Result<ShapeEstimate> {
    let est = hs.shape_at(s.node, (s.params.1, s.params.2), h)?;
    if est.asymmetry > ASYMMETRY_LIMIT {
        return Err(Error::Asymmetry(est.asymmetry));
    }
    Ok(est)
}

/// Decomposes `J xi` against the simple and double eigenspaces.
pub fn hopf_frame(space: &SpaceForm, s: &HypersurfaceSample) -> Result<HopfFrame> {
    let (k, _, _) = split_eigenvalues(&s.eigs)?;
    let i = Complex64::i();
    let jxi_amb = s.normal * i;
    let jxi = Vector3::from_fn(|m, _| space.real_inner(&jxi_amb, &s.frame[m]));
    let mut u: Vector3<f64> = s.eigvecs.column(k).into();
    let mut a = jxi.dot(&u);
    if a < 0.0 {
        u = -u;
        a = -a;
    }
    let rest = jxi - u * a;
    let b = rest.norm();
    if !(b >= HOPF_DEGENERACY) {
        return Err(Error::HopfDegenerate(b));
    }
    let v = rest / b;
    let mut adir = u.cross(&v);
    let amb = |x: &Vector3<f64>| s.frame[0] * re(x[0]) + s.frame[1] * re(x[1]) + s.frame[2] * re(x[2]);
    let (ua, va) = (amb(&u), amb(&v));
    if space.real_inner(&(ua * i), &amb(&adir)) > 0.0 {
        adir = -adir;
    }
    let aa = amb(&adir);
    let r1 = space.real_inner(&(ua * i), &va).abs();
    let r2 = space.real_inner(&(aa * i), &s.normal).abs();
    let r3 = (space.real_inner(&(va * i), &aa) - a).abs();
    Ok(HopfFrame {
        a,
        b,
        phi: b.atan2(a),
        u: u.into(),
        v: v.into(),
        a_dir: adir.into(),
        relation_residual: r1.max(r2).max(r3),
    })
}

// ---- verification ----

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Largest allowed spread inside the double pair.
    pub tol_mult: f64,
    /// Largest allowed mismatch against the ODE curvatures.
    pub curvature: f64,
    /// Largest allowed Hopf-angle mismatch.
    pub hopf: f64,
}

impl Tolerances {
    pub fn for_curvature(c: f64) -> Self {
        Self { tol_mult: 1e-3 * c.abs().max(1.0), curvature: 5e-3, hopf: 1e-3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleResidual {
    pub t: f64,
    pub theta: (f64, f64),
    pub eigs: [f64; 3],
    /// Index of the simple eigenvalue, `None` for an ambiguous split.
    pub simple_index: Option<usize>,
    pub spread: f64,
    pub min_gap: f64,
    pub double_residual: f64,
    pub simple_residual: f64,
    pub hopf_residual: Option<f64>,
    pub b: Option<f64>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub tolerances: Tolerances,
    pub samples: Vec<SampleResidual>,
    pub max_spread: f64,
    pub max_double_residual: f64,
    pub max_simple_residual: f64,
    pub max_hopf_residual: f64,
    pub mean_double_residual: f64,
    pub mean_simple_residual: f64,
    pub min_b: f64,
    pub min_gap: f64,
    pub failures: usize,
    pub pass: bool,
    pub diagnostic: String,
}

pub fn verify_two_curvatures(samples: &[HypersurfaceSample], traj: &Trajectory, tols: &Tolerances) -> CurvatureReport {
    let rows: Vec<SampleResidual> = samples
        .iter()
        .map(|s| {
            let st = traj.states[traj.nearest(s.params.0)];
            let min_gap = (s.eigs[0] - s.eigs[1]).min(s.eigs[1] - s.eigs[2]);
            match split_eigenvalues(&s.eigs) {
                Ok((k, (p, q), spread)) => {
                    let pair = 0.5 * (s.eigs[p] + s.eigs[q]);
                    let dres = (pair - st.beta).abs();
                    let sres = (s.eigs[k] - st.alpha).abs();
                    let hres = s.hopf.map(|h| (h.phi - st.phi).abs());
                    let pass = spread < tols.tol_mult
                        && dres < tols.curvature
                        && sres < tols.curvature
                        && hres.is_some_and(|r| r < tols.hopf);
                    SampleResidual {
                        t: s.params.0,
                        theta: (s.params.1, s.params.2),
                        eigs: s.eigs,
                        simple_index: Some(k),
                        spread,
                        min_gap,
                        double_residual: dres,
                        simple_residual: sres,
                        hopf_residual: hres,
                        b: s.hopf.map(|h| h.b),
                        pass,
                    }
                }
                Err(_) => SampleResidual {
                    t: s.params.0,
                    theta: (s.params.1, s.params.2),
                    eigs: s.eigs,
                    simple_index: None,
                    spread: f64::INFINITY,
                    min_gap,
                    double_residual: f64::INFINITY,
                    simple_residual: f64::INFINITY,
                    hopf_residual: None,
                    b: None,
                    pass: false,
                },
            }
        })
        .collect();
    let n = rows.len().max(1) as f64;
    let fmax = |f: &dyn Fn(&SampleResidual) -> f64| rows.iter().map(f).fold(0.0f64, f64::max);
    let max_spread = fmax(&|r| r.spread);
    let max_double_residual = fmax(&|r| r.double_residual);
    let max_simple_residual = fmax(&|r| r.simple_residual);
    let max_hopf_residual = fmax(&|r| r.hopf_residual.unwrap_or(f64::INFINITY));
    let min_b = rows.iter().map(|r| r.b.unwrap_or(0.0)).fold(f64::INFINITY, f64::min);
    let min_gap = rows.iter().map(|r| r.min_gap).fold(f64::INFINITY, f64::min);
    let failures = rows.iter().filter(|r| !r.pass).count();
    let pass = failures == 0 && !rows.is_empty();
    let diagnostic = if pass {
        format!("{} samples split two-one and match the curvature flow", rows.len())
    } else {
        let three = rows.iter().filter(|r| r.min_gap > tols.tol_mult).count();
        format!(
            "{failures} of {} samples fail; {three} show three distinct principal curvatures (min pair spread {:.3e})",
            rows.len(),
            rows.iter().map(|r| r.spread).fold(f64::INFINITY, f64::min)
        )
    };
    CurvatureReport {
        tolerances: *tols,
        mean_double_residual: rows.iter().map(|r| r.double_residual).sum::<f64>() / n,
        mean_simple_residual: rows.iter().map(|r| r.simple_residual).sum::<f64>() / n,
        samples: rows,
        max_spread,
        max_double_residual,
        max_simple_residual,
        max_hopf_residual,
        min_b,
        min_gap,
        failures,
        pass,
        diagnostic,
    }
}

// ---- equidistance of the leaves t = const ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquidistanceReport {
    pub distances: Vec<f64>,
    pub mean: f64,
    /// `max - min` of the distances.
    pub spread: f64,
    /// `spread / mean`, zero when the mean vanishes.
    pub relative_spread: f64,
}

/// Maximum number of coordinate sweeps in the leaf distance minimization.
pub const EQUIDISTANCE_MAX_ITER: usize = 200;

/// Distance from `p` to the torus orbit through `q`.
pub fn distance_to_orbit(space: &SpaceForm, p: &AmbientPoint, q: &AmbientPoint) -> Result<f64> {
    let eta = space.eta();
    let a: Vec<Complex64> = (0..3).map(|k| p.z[k] * q.z[k].conj() * eta[k]).collect();
    let hyperbolic = space.kind() == crate::spaceform::SpaceKind::Hyperbolic;
    let mut ph = [Complex64::new(1.0, 0.0); 3];
    let total = |ph: &[Complex64; 3]| a[0] * ph[0] + a[1] * ph[1] + a[2] * ph[2];
    let mut converged = false;
    for _ in 0..EQUIDISTANCE_MAX_ITER {
        let before = total(&ph).norm();
        for k in 1..3 {
            let rest = total(&ph) - a[k] * ph[k];
            if a[k].norm() == 0.0 || rest.norm() == 0.0 {
                continue;
            }
            let dir = rest / rest.norm() / (a[k] / a[k].norm());
            ph[k] = if hyperbolic { -dir } else { dir };
        }
        let after = total(&ph).norm();
        if (after - before).abs() <= 1e-15 * after.max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::MinimizationFailed(EQUIDISTANCE_MAX_ITER));
    }
    // h(p, D q) = sum a_k conj(d_k), so the optimal torus element is conj(ph)
    let d = CVec3::new(ph[0].conj(), ph[1].conj(), ph[2].conj());
    let moved = AmbientPoint { z: q.z.component_mul(&d) };
    Ok(space.distance(p, &moved))
}

/// Distances from every sample of the leaf at `t1` to the leaf at `t2`.
pub fn check_equidistance(space: &SpaceForm, samples: &[HypersurfaceSample], t1: f64, t2: f64) -> Result<EquidistanceReport> {
    let on = |t: f64| samples.iter().filter(move |s| (s.params.0 - t).abs() < 1e-12);
    let target = on(t2)
        .next()
        .ok_or_else(|| Error::GridMismatch(format!("no samples at t = {t2}")))?;
    let distances: Vec<f64> = on(t1)
        .map(|s| distance_to_orbit(space, &s.point, &target.point))
        .collect::<Result<_>>()?;
    if distances.is_empty() {
        return Err(Error::GridMismatch(format!("no samples at t = {t1}")));
    }
    let mean = distances.iter().sum::<f64>() / distances.len() as f64;
    let max = distances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = max - min;
    Ok(EquidistanceReport { relative_spread: if mean > 0.0 { spread / mean } else { 0.0 }, distances, mean, spread })
}

// ---- Gauss and Codazzi equations ----

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussCodazziResidual {
    pub gauss: f64,
    pub codazzi: f64,
}

/// Step of the innermost tangent differences, kept small so that the two
/// outer difference levels do not amplify its truncation error.
pub const GC_INNER_STEP: f64 = 1e-5;

type T3 = [[[f64; 3]; 3]; 3];

/// Residuals of the Gauss and Codazzi equations at `s`. Derivatives of the
/// metric and of the second fundamental form are central differences of step `h`. `perturb = (i, j, delta)` adds `delta`
/// to the `(i, j)` and `(j, i)` entries of the orthonormal-frame shape operator
/// on the whole neighbourhood.
pub fn gauss_codazzi_residual(
    hs: &Hypersurface<'_>,
    s: &HypersurfaceSample,
    h: f64,
    perturb: Option<(usize, usize, f64)>,
) -> Result<GaussCodazziResidual> {
    check_step(h)?;
    let space = *hs.space();
    let anchor = s.node;
    let inner = GC_INNER_STEP.min(h);
    let u0 = [s.params.0, s.params.1, s.params.2];
    let at = |u: &[f64; 3], a: usize, d: f64| {
        let mut v = *u;
        v[a] += d;
        v
    };

    let metric = |u: &[f64; 3]| -> Result<Matrix3<f64>> {
        let jet = hs.jet(anchor, u, inner)?;
        Ok(Matrix3::from_fn(|a, b| space.real_inner(&jet.xh[a], &jet.xh[b])))
    };
    let second = |u: &[f64; 3]| -> Result<Matrix3<f64>> {
        let (jet, b) = hs.coordinate_shape(anchor, u, h, inner)?;
        let mut b = (b + b.transpose()) * 0.5;
        if let Some((i, j, delta)) = perturb {
            let l = lower_factor(&jet.li);
            let mut e = Matrix3::zeros();
            e[(i, j)] += delta;
            if i != j {
                e[(j, i)] += delta;
            }
            b += l * e * l.transpose();
        }
        Ok(b)
    };
    let christoffel = |u: &[f64; 3]| -> Result<T3> {
        let g = metric(u)?;
        let gi = g.try_inverse().ok_or_else(|| Error::DegenerateFrame("singular metric".into()))?;
        let mut dg = [Matrix3::zeros(); 3];
        for (e, d) in dg.iter_mut().enumerate() {
            *d = (metric(&at(u, e, h))? - metric(&at(u, e, -h))?) / (2.0 * h);
        }
        let mut gam = [[[0.0; 3]; 3]; 3];
        for d in 0..3 {
            for a in 0..3 {
                for b in 0..3 {
                    let mut acc = 0.0;
                    for e in 0..3 {
                        acc += gi[(d, e)] * (dg[a][(e, b)] + dg[b][(e, a)] - dg[e][(a, b)]);
                    }
                    gam[d][a][b] = 0.5 * acc;
                }
            }
        }
        Ok(gam)
    };

    let jet = hs.jet(anchor, &u0, inner)?;
    let g = metric(&u0)?;
    let b = second(&u0)?;
    let gam = christoffel(&u0)?;
    let mut dgam = [[[[0.0; 3]; 3]; 3]; 3]; // dgam[e][d][a][b] = d_e Gamma^d_ab
    let mut db = [Matrix3::zeros(); 3];
    for e in 0..3 {
        let gp = christoffel(&at(&u0, e, h))?;
        let gm = christoffel(&at(&u0, e, -h))?;
        for d in 0..3 {
            for a in 0..3 {
                for c in 0..3 {
                    dgam[e][d][a][c] = (gp[d][a][c] - gm[d][a][c]) / (2.0 * h);
                }
            }
        }
        db[e] = (second(&at(&u0, e, h))? - second(&at(&u0, e, -h))?) / (2.0 * h);
    }

    // intrinsic R_abcd = <R(d_a, d_b) d_c, d_d>
    let mut riem = [[[[0.0; 3]; 3]; 3]; 3];
    for a in 0..3 {
        for bb in 0..3 {
            for c in 0..3 {
                let mut up = [0.0; 3];
                for (d, v) in up.iter_mut().enumerate() {
                    let mut r = dgam[a][d][bb][c] - dgam[bb][d][a][c];
                    for e in 0..3 {
                        r += gam[d][a][e] * gam[e][bb][c] - gam[d][bb][e] * gam[e][a][c];
                    }
                    *v = r;
                }
                for d in 0..3 {
                    riem[a][bb][c][d] = (0..3).map(|e| g[(d, e)] * up[e]).sum();
                }
            }
        }
    }
    let x = &jet.xh;
    let mut gauss = [[[[0.0; 3]; 3]; 3]; 3];
    let mut codazzi = [[[0.0; 3]; 3]; 3];
    for a in 0..3 {
        for bb in 0..3 {
            for c in 0..3 {
                for d in 0..3 {
                    let amb = space.curvature_raw(&x[a], &x[bb], &x[c], &x[d]);
                    gauss[a][bb][c][d] = riem[a][bb][c][d] - amb - b[(bb, c)] * b[(a, d)] + b[(a, c)] * b[(bb, d)];
                }
                let cov = |p: usize, q: usize, r: usize| -> f64 {
                    let mut v = db[p][(q, r)];
                    for d in 0..3 {
                        v -= gam[d][p][q] * b[(d, r)] + gam[d][p][r] * b[(q, d)];
                    }
                    v
                };
                let amb = space.curvature_raw(&x[a], &x[bb], &x[c], &jet.normal);
                codazzi[a][bb][c] = amb - (cov(a, bb, c) - cov(bb, a, c));
            }
        }
    }
    let li = Matrix3::from_fn(|i, j| jet.li[(i, j)]);
    let mut gmax: f64 = 0.0;
    let mut cmax: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                let mut cv = 0.0;
                for a in 0..3 {
                    for bb in 0..3 {
                        for c in 0..3 {
                            cv += li[(i, a)] * li[(j, bb)] * li[(k, c)] * codazzi[a][bb][c];
                        }
                    }
                }
                cmax = cmax.max(cv.abs());
                for l in 0..3 {
                    let mut gv = 0.0;
                    for a in 0..3 {
                        for bb in 0..3 {
                            for c in 0..3 {
                                for d in 0..3 {
                                    gv += li[(i, a)] * li[(j, bb)] * li[(k, c)] * li[(l, d)] * gauss[a][bb][c][d];
                                }
                            }
                        }
                    }
                    gmax = gmax.max(gv.abs());
                }
            }
        }
    }
    Ok(GaussCodazziResidual { gauss: gmax, codazzi: cmax })
}

fn lower_factor(li: &DMatrix<f64>) -> Matrix3<f64> {
    let m = Matrix3::from_fn(|i, j| li[(i, j)]);
    m.try_inverse().expect("inverse Cholesky factor is invertible")
}

// ---- export ----

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct SampleRow {
    pub t: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub z0_re: f64,
    pub z0_im: f64,
    pub z1_re: f64,
    pub z1_im: f64,
    pub z2_re: f64,
    pub z2_im: f64,
    pub eig0: f64,
    pub eig1: f64,
    pub eig2: f64,
    /// Numeric Hopf angle; empty at degenerate samples.
    pub phi: Option<f64>,
}

impl From<&HypersurfaceSample> for SampleRow {
    fn from(s: &HypersurfaceSample) -> Self {
        let z = s.point.z;
        Self {
            t: s.params.0,
            theta1: s.params.1,
            theta2: s.params.2,
            z0_re: z[0].re,
            z0_im: z[0].im,
            z1_re: z[1].re,
            z1_im: z[1].im,
            z2_re: z[2].re,
            z2_im: z[2].im,
            eig0: s.eigs[0],
            eig1: s.eigs[1],
            eig2: s.eigs[2],
            phi: s.hopf.map(|h| h.phi),
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct MeshScalars {
    pub eig0: Vec<f64>,
    pub eig1: Vec<f64>,
    pub eig2: Vec<f64>,
    pub phi: Vec<Option<f64>>,
}

/// Vertex mesh for external plotting. Each vertex is
/// `(re z0, im z0, re z1, im z1, re z2, im z2)`; `dims` is `(n_t, n_theta, n_theta)`.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct JsonMesh {
    pub dims: [usize; 3],
    pub vertices: Vec<[f64; 6]>,
    pub scalars: MeshScalars,
}

pub fn samples_to_rows(samples: &[HypersurfaceSample]) -> Vec<SampleRow> {
    samples.iter().map(SampleRow::from).collect()
}

pub fn write_samples_csv(rows: &[SampleRow], path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_samples_csv(path: &Path) -> Result<Vec<SampleRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn rows_to_mesh(rows: &[SampleRow]) -> Result<JsonMesh> {
    if rows.is_empty() {
        return Err(Error::GridMismatch("no samples to export".into()));
    }
    let mut ts: Vec<f64> = Vec::new();
    for r in rows {
        if !ts.contains(&r.t) {
            ts.push(r.t);
        }
    }
    let n_t = ts.len();
    let per = rows.len() / n_t;
    let n_theta = (per as f64).sqrt().round() as usize;
    if n_t * n_theta * n_theta != rows.len() {
        return Err(Error::GridMismatch(format!("{} rows do not form an n_t x n_theta^2 grid", rows.len())));
    }
    Ok(JsonMesh {
        dims: [n_t, n_theta, n_theta],
        vertices: rows.iter().map(|r| [r.z0_re, r.z0_im, r.z1_re, r.z1_im, r.z2_re, r.z2_im]).collect(),
        scalars: MeshScalars {
            eig0: rows.iter().map(|r| r.eig0).collect(),
            eig1: rows.iter().map(|r| r.eig1).collect(),
            eig2: rows.iter().map(|r| r.eig2).collect(),
            phi: rows.iter().map(|r| r.phi).collect(),
        },
    })
}

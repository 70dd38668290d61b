//! Generating curves in the section with prescribed geodesic curvature.
//!
//! The curve lives on the section model embedded in flat `R^3` (Euclidean
//! for the sphere, Lorentzian for the hyperboloid) and follows the Frenet
//! system `pos' = T`, `T' = kappa N - (c/4) pos`, `N' = -kappa T`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::curvatureflow::{self, Branch, CurvatureState, Trajectory};
use crate::error::{Error, Result};
use crate::spaceform::{RVec3, SectionPoint, SpaceForm};

/// Frame tolerance for curve inputs.
pub const FRAME_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FramedCurveSample {
    pub t: f64,
    pub pos: SectionPoint,
    pub tangent: RVec3,
    pub normal: RVec3,
    pub state: CurvatureState,
    /// Geodesic curvature used by the Frenet system at this node.
    pub kappa: f64,
}

/// How the Frenet system obtains its curvature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CurvatureSource {
    /// `kappa = beta` from the co-integrated curvature ODE.
    Flow,
    /// Fixed curvature; the curvature ODE is still carried for reference.
    Constant(f64),
}

#[derive(Clone, Debug)]
pub struct GeneratingCurve {
    pub space: SpaceForm,
    pub branch: Branch,
    pub source: CurvatureSource,
    pub samples: Vec<FramedCurveSample>,
}

/// Derivatives `(pos', T', N')` of the Frenet system.
pub fn frenet_rhs(sample: &FramedCurveSample, kappa: f64, c: f64) -> [RVec3; 3] {
    [
        sample.tangent,
        sample.normal * kappa - sample.pos.x * (c / 4.0),
        -sample.tangent * kappa,
    ]
}

type Joint = [f64; 12];

fn pack(st: &CurvatureState, pos: &RVec3, t: &RVec3, n: &RVec3) -> Joint {
    [st.alpha, st.beta, st.phi, pos[0], pos[1], pos[2], t[0], t[1], t[2], n[0], n[1], n[2]]
}

fn v3(y: &Joint, o: usize) -> RVec3 {
    RVec3::new(y[o], y[o + 1], y[o + 2])
}

fn joint_rhs(y: &Joint, c: f64, source: CurvatureSource) -> Joint {
    let d = curvatureflow::rhs_unchecked([y[0], y[1], y[2]], c);
    let kappa = match source {
        CurvatureSource::Flow => y[1],
        CurvatureSource::Constant(k) => k,
    };
    let (pos, t, n) = (v3(y, 3), v3(y, 6), v3(y, 9));
    let dt = n * kappa - pos * (c / 4.0);
    let dn = -t * kappa;
    [d[0], d[1], d[2], t[0], t[1], t[2], dt[0], dt[1], dt[2], dn[0], dn[1], dn[2]]
}

/// Projects `(pos, T, N)` back onto the model and re-orthonormalizes the frame.
pub fn renormalize(space: &SpaceForm, pos: RVec3, t: RVec3, n: RVec3) -> Result<(SectionPoint, RVec3, RVec3)> {
    let level = space.quadric_level();
    let pn = space.section_inner(&pos, &pos);
    if !(pn * level > 0.0) {
        return Err(Error::DegenerateFrame("curve left the section model".into()));
    }
    let pos = pos * (level / pn).sqrt();
    let p = SectionPoint { x: pos };
    let t = space
        .section_unit_tangent(&p, t)
        .map_err(|_| Error::DegenerateFrame("tangent collapsed".into()))?;
    let n = n - t * space.section_inner(&n, &t);
    let n = space
        .section_unit_tangent(&p, n)
        .map_err(|_| Error::DegenerateFrame("normal collapsed".into()))?;
    Ok((p, t, n))
}

fn check_frame(space: &SpaceForm, p: &SectionPoint, w: &RVec3, xi: &RVec3) -> Result<()> {
    space.section_point(p.x)?;
    let g = |a: &RVec3, b: &RVec3| space.section_inner(a, b);
    let worst = [g(w, w) - 1.0, g(xi, xi) - 1.0, g(w, xi), g(w, &p.x), g(xi, &p.x)]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if worst > FRAME_TOL * space.radius().max(1.0) {
        return Err(Error::DegenerateFrame(format!("initial frame defect {worst:.3e}")));
    }
    Ok(())
}

pub fn reconstruct_curve(space: &SpaceForm, traj: &Trajectory, p: &SectionPoint, w: &RVec3, xi: &RVec3) -> Result<GeneratingCurve> {
    reconstruct(space, traj, p, w, xi, CurvatureSource::Flow)
}

/// Reconstruction with constant curvature `kappa` (a section geodesic for
/// `kappa = 0`). The trajectory states are still attached to the samples.
pub fn reconstruct_with_curvature(
    space: &SpaceForm,
    traj: &Trajectory,
    p: &SectionPoint,
    w: &RVec3,
    xi: &RVec3,
    kappa: f64,
) -> Result<GeneratingCurve> {
    reconstruct(space, traj, p, w, xi, CurvatureSource::Constant(kappa))
}

fn reconstruct(
    space: &SpaceForm,
    traj: &Trajectory,
    p: &SectionPoint,
    w: &RVec3,
    xi: &RVec3,
    source: CurvatureSource,
) -> Result<GeneratingCurve> {
    check_frame(space, p, w, xi)?;
    if traj.t.len() != traj.states.len() || traj.t.is_empty() {
        return Err(Error::GridMismatch("times and states differ in length".into()));
    }
    if traj.t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::GridMismatch("trajectory grid must be strictly increasing".into()));
    }
    let k0 = traj
        .t
        .iter()
        .position(|t| t.abs() < 1e-14)
        .ok_or_else(|| Error::GridMismatch("no node at t = 0".into()))?;
    let c = space.c();
    let kappa_at = |st: &CurvatureState| match source {
        CurvatureSource::Flow => st.beta,
        CurvatureSource::Constant(k) => k,
    };
    let n = traj.t.len();
    let mut out: Vec<Option<FramedCurveSample>> = vec![None; n];
    let start = FramedCurveSample { t: traj.t[k0], pos: *p, tangent: *w, normal: *xi, state: traj.states[k0], kappa: kappa_at(&traj.states[k0]) };
    out[k0] = Some(start);
    let f = |y: &Joint| joint_rhs(y, c, source);
    let mut drift: f64 = 0.0;
    for dir in [1isize, -1] {
        let mut cur = start;
        let mut k = k0 as isize;
        loop {
            let next = k + dir;
            if next < 0 || next >= n as isize {
                break;
            }
            let kn = next as usize;
            let dt = traj.t[kn] - cur.t;
            let y = pack(&traj.states[k as usize], &cur.pos.x, &cur.tangent, &cur.normal);
            let y = curvatureflow::rk4_step(&f, y, 0.5 * dt);
            let y = curvatureflow::rk4_step(&f, y, 0.5 * dt);
            let (pos, t, nn) = (v3(&y, 3), v3(&y, 6), v3(&y, 9));
            let (pos2, t2, n2) = renormalize(space, pos, t, nn)?;
            drift = drift.max((pos2.x - pos).norm()).max((t2 - t).norm()).max((n2 - nn).norm());
            let st = traj.states[kn];
            cur = FramedCurveSample { t: traj.t[kn], pos: pos2, tangent: t2, normal: n2, state: st, kappa: kappa_at(&st) };
            out[kn] = Some(cur);
            k = next;
        }
    }
    log::debug!("curve frame drift before re-orthonormalization {drift:.3e}");
    Ok(GeneratingCurve {
        space: *space,
        branch: traj.branch,
        source,
        samples: out.into_iter().map(|s| s.expect("every node visited")).collect(),
    })
}

impl GeneratingCurve {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Index of the node nearest to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        let mut best = 0;
        for (k, s) in self.samples.iter().enumerate() {
            if (s.t - t).abs() < (self.samples[best].t - t).abs() {
                best = k;
            }
        }
        best
    }

    /// Curve data at `t` from one Runge-Kutta step off node `anchor`. Using a
    /// fixed anchor makes the result a smooth function of `t`.
    pub fn eval_from(&self, anchor: usize, t: f64) -> Result<FramedCurveSample> {
        let s = &self.samples[anchor];
        let dt = t - s.t;
        if dt == 0.0 {
            return Ok(*s);
        }
        let c = self.space.c();
        let source = self.source;
        let f = |y: &Joint| joint_rhs(y, c, source);
        let y = curvatureflow::rk4_step(&f, pack(&s.state, &s.pos.x, &s.tangent, &s.normal), dt);
        let (pos, tan, nor) = renormalize(&self.space, v3(&y, 3), v3(&y, 6), v3(&y, 9))?;
        let state = CurvatureState::new(y[0], y[1], y[2]);
        let kappa = match source {
            CurvatureSource::Flow => state.beta,
            CurvatureSource::Constant(k) => k,
        };
        Ok(FramedCurveSample { t, pos, tangent: tan, normal: nor, state, kappa })
    }

    /// `eval_from(anchor, t).pos - pos(anchor)`, formed without cancellation so
    /// that differences of nearby increments keep full relative accuracy.
    pub fn position_increment(&self, anchor: usize, t: f64) -> Result<RVec3> {
        let s = &self.samples[anchor];
        let dt = t - s.t;
        if dt == 0.0 {
            return Ok(RVec3::zeros());
        }
        let c = self.space.c();
        let source = self.source;
        let f = |y: &Joint| joint_rhs(y, c, source);
        let d = curvatureflow::rk4_increment(&f, pack(&s.state, &s.pos.x, &s.tangent, &s.normal), dt);
        let (x0, dx) = (s.pos.x, v3(&d, 3));
        let level = self.space.quadric_level();
        let g = |a: &RVec3, b: &RVec3| self.space.section_inner(a, b);
        // renormalization factor lambda = (level / <x, x>)^(1/2), as lambda - 1
        let eps = (2.0 * g(&x0, &dx) + g(&dx, &dx) + (g(&x0, &x0) - level)) / level;
        if !(eps > -1.0) {
            return Err(Error::DegenerateFrame("curve left the section model".into()));
        }
        let lm1 = (-0.5 * eps.ln_1p()).exp_m1();
        Ok(dx + (x0 + dx) * lm1)
    }

    pub fn eval(&self, t: f64) -> Result<FramedCurveSample> {
        self.eval_from(self.nearest(t), t)
    }

    /// Largest section-model norm residual over the nodes, relative to `R^2`.
    pub fn model_residual(&self) -> f64 {
        let level = self.space.quadric_level();
        self.samples
            .iter()
            .map(|s| (self.space.section_inner(&s.pos.x, &s.pos.x) - level).abs() / level.abs())
            .fold(0.0, f64::max)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path)?;
        for s in &self.samples {
            wtr.serialize(CurveRow::from(s))?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        for s in &self.samples {
            wtr.serialize(CurveRow::from(s))?;
        }
        let bytes = wtr.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Reads a curve written by [`Self::write_csv`]. The curvature source is
    /// inferred from the `kappa` column.
    pub fn read_csv(space: &SpaceForm, branch: Branch, path: &Path) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut samples = Vec::new();
        for row in rdr.deserialize() {
            let row: CurveRow = row?;
            samples.push(row.into_sample());
        }
        if samples.is_empty() {
            return Err(Error::GridMismatch("curve file has no samples".into()));
        }
        let flow = samples.iter().all(|s| s.kappa == s.state.beta);
        let k0 = samples[0].kappa;
        let source = if flow {
            CurvatureSource::Flow
        } else if samples.iter().all(|s| s.kappa == k0) {
            CurvatureSource::Constant(k0)
        } else {
            return Err(Error::GridMismatch("kappa column is neither beta nor constant".into()));
        };
        Ok(Self { space: *space, branch, source, samples })
    }
}

#[derive(Serialize, Deserialize)]
struct CurveRow {
    t: f64,
    pos_x: f64,
    pos_y: f64,
    pos_z: f64,
    tangent_x: f64,
    tangent_y: f64,
    tangent_z: f64,
    normal_x: f64,
    normal_y: f64,
    normal_z: f64,
    alpha: f64,
    beta: f64,
    phi: f64,
    kappa: f64,
}

impl From<&FramedCurveSample> for CurveRow {
    fn from(s: &FramedCurveSample) -> Self {
        Self {
            t: s.t,
            pos_x: s.pos.x[0],
            pos_y: s.pos.x[1],
            pos_z: s.pos.x[2],
            tangent_x: s.tangent[0],
            tangent_y: s.tangent[1],
            tangent_z: s.tangent[2],
            normal_x: s.normal[0],
            normal_y: s.normal[1],
            normal_z: s.normal[2],
            alpha: s.state.alpha,
            beta: s.state.beta,
            phi: s.state.phi,
            kappa: s.kappa,
        }
    }
}

impl CurveRow {
    fn into_sample(self) -> FramedCurveSample {
        FramedCurveSample {
            t: self.t,
            pos: SectionPoint { x: RVec3::new(self.pos_x, self.pos_y, self.pos_z) },
            tangent: RVec3::new(self.tangent_x, self.tangent_y, self.tangent_z),
            normal: RVec3::new(self.normal_x, self.normal_y, self.normal_z),
            state: CurvatureState::new(self.alpha, self.beta, self.phi),
            kappa: self.kappa,
        }
    }
}

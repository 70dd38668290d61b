//! The curvature ODE for `(alpha, beta, phi)`:
//!
//! ```text
//! alpha' = (c (2 - 3 sin^2 phi) + 4 alpha (alpha - beta)) tan(phi) / 4
//! beta'  = -(3c / 8) sin(2 phi)
//! phi'   = beta + c (1 - 3 sin^2 phi) / (4 (alpha - beta))
//! ```
//!
//! `alpha` is the simple principal curvature, `beta` the double one and
//! `phi` the angle between `J xi` and the simple eigenline. Both branches of
//! the construction integrate the same system; they differ only in which
//! orbit eigenvalue seeds the `beta` slot.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbits::{self, OrbitPoint};
use crate::spaceform::{RVec3, SectionPoint, SpaceForm};

pub const GAP_EPS: f64 = 1e-8;
pub const ANGLE_MARGIN: f64 = 1e-8;
pub const DEFAULT_STEP: f64 = 1e-3;
/// Maximum number of interval halvings before the integrator gives up.
pub const MAX_HALVINGS: u32 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureState {
    pub alpha: f64,
    pub beta: f64,
    pub phi: f64,
}

impl CurvatureState {
    pub fn new(alpha: f64, beta: f64, phi: f64) -> Self {
        Self { alpha, beta, phi }
    }

    pub fn a(&self) -> f64 {
        self.phi.cos()
    }

    pub fn b(&self) -> f64 {
        self.phi.sin()
    }

    fn to_array(self) -> [f64; 3] {
        [self.alpha, self.beta, self.phi]
    }

    fn from_array(v: [f64; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    /// Checks the gap and the angle margin, naming the first violation.
    pub fn check(&self, gap_eps: f64, margin: f64) -> Result<()> {
        if !(self.alpha.is_finite() && self.beta.is_finite() && self.phi.is_finite()) {
            return Err(Error::InvalidState("non-finite component".into()));
        }
        if !((self.alpha - self.beta).abs() > gap_eps) {
            return Err(Error::Singularity(format!(
                "curvature gap |alpha - beta| = {:.3e} below {gap_eps:.1e}",
                (self.alpha - self.beta).abs()
            )));
        }
        if !(self.phi > margin && self.phi < FRAC_PI_2 - margin) {
            return Err(Error::Singularity(format!(
                "Hopf angle phi = {:.6} outside the open interval (0, pi/2)",
                self.phi
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// The larger orbit curvature along the reference normal is simple.
    BetaDouble,
    /// Roles swapped.
    AlphaDouble,
}

impl std::str::FromStr for Branch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beta-double" => Ok(Self::BetaDouble),
            "alpha-double" => Ok(Self::AlphaDouble),
            other => Err(Error::Config(format!("unknown branch `{other}`"))),
        }
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::BetaDouble => "beta-double",
            Self::AlphaDouble => "alpha-double",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HaltReason {
    Completed,
    GapCollapse,
    HopfLocus,
    StepUnderflow,
}

impl HaltReason {
    pub fn is_completed(&self) -> bool {
        matches!(self, Self::Completed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowConfig {
    pub step: f64,
    pub gap_eps: f64,
    pub angle_margin: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self { step: DEFAULT_STEP, gap_eps: GAP_EPS, angle_margin: ANGLE_MARGIN }
    }
}

/// Solution on a grid. Grids produced by [`integrate`] are monotone in the
/// direction of integration; [`integrate_about`] always yields an increasing grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "TrajectoryFile", into = "TrajectoryFile")]
pub struct Trajectory {
    pub c: f64,
    pub branch: Branch,
    pub t: Vec<f64>,
    pub states: Vec<CurvatureState>,
    pub halt: HaltReason,
}

#[derive(Serialize, Deserialize)]
struct TrajectoryFile {
    c: f64,
    branch: Branch,
    t: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    phi: Vec<f64>,
    halt_reason: HaltReason,
}

impl From<Trajectory> for TrajectoryFile {
    fn from(tr: Trajectory) -> Self {
        Self {
            c: tr.c,
            branch: tr.branch,
            alpha: tr.states.iter().map(|s| s.alpha).collect(),
            beta: tr.states.iter().map(|s| s.beta).collect(),
            phi: tr.states.iter().map(|s| s.phi).collect(),
            t: tr.t,
            halt_reason: tr.halt,
        }
    }
}

impl From<TrajectoryFile> for Trajectory {
    fn from(f: TrajectoryFile) -> Self {
        let n = f.t.len().min(f.alpha.len()).min(f.beta.len()).min(f.phi.len());
        Self {
            c: f.c,
            branch: f.branch,
            states: (0..n).map(|k| CurvatureState::new(f.alpha[k], f.beta[k], f.phi[k])).collect(),
            t: f.t[..n].to_vec(),
            halt: f.halt_reason,
        }
    }
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn with_branch(mut self, branch: Branch) -> Self {
        self.branch = branch;
        self
    }

    /// Index of the node nearest to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        let mut best = 0;
        for (k, tk) in self.t.iter().enumerate() {
            if (tk - t).abs() < (self.t[best] - t).abs() {
                best = k;
            }
        }
        best
    }
}

pub fn ode_rhs(st: &CurvatureState, c: f64) -> Result<[f64; 3]> {
    ode_rhs_with(st, c, &FlowConfig::default())
}

pub fn ode_rhs_with(st: &CurvatureState, c: f64, cfg: &FlowConfig) -> Result<[f64; 3]> {
    st.check(cfg.gap_eps, cfg.angle_margin)?;
    Ok(rhs_unchecked(st.to_array(), c))
}

/// Right-hand side without precondition checks.
pub(crate) fn rhs_unchecked(y: [f64; 3], c: f64) -> [f64; 3] {
    let [al, be, ph] = y;
    let s2 = ph.sin().powi(2);
    [
        0.25 * (c * (2.0 - 3.0 * s2) + 4.0 * al * (al - be)) * ph.tan(),
        -0.375 * c * (2.0 * ph).sin(),
        be + c * (1.0 - 3.0 * s2) / (4.0 * (al - be)),
    ]
}

// ---- derivative laws in the frame-function form ----

/// `d(cos phi)/dt = b c (2b^2 - a^2) / (4 (alpha - beta)) - b beta`.
pub fn cos_phi_law(st: &CurvatureState, c: f64) -> f64 {
    let (a, b) = (st.a(), st.b());
    b * c * (2.0 * b * b - a * a) / (4.0 * (st.alpha - st.beta)) - b * st.beta
}

/// `d beta/dt = -3 a b c / 4`.
pub fn beta_law(st: &CurvatureState, c: f64) -> f64 {
    -0.75 * st.a() * st.b() * c
}

/// `d alpha/dt = (b / 4a) (c (3a^2 - 1) + 4 alpha (alpha - beta))`.
pub fn alpha_law(st: &CurvatureState, c: f64) -> f64 {
    let (a, b) = (st.a(), st.b());
    b / (4.0 * a) * (c * (3.0 * a * a - 1.0) + 4.0 * st.alpha * (st.alpha - st.beta))
}

// ---- integration ----

pub(crate) fn rk4_step<const N: usize, F>(f: &F, y: [f64; N], h: f64) -> [f64; N]
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let d = rk4_increment(f, y, h);
    let mut o = y;
    for i in 0..N {
        o[i] += d[i];
    }
    o
}

/// The increment `y(h) - y(0)` of one classical Runge-Kutta step.
pub(crate) fn rk4_increment<const N: usize, F>(f: &F, y: [f64; N], h: f64) -> [f64; N]
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let add = |a: &[f64; N], b: &[f64; N], s: f64| -> [f64; N] {
        let mut o = *a;
        for i in 0..N {
            o[i] += s * b[i];
        }
        o
    };
    let k1 = f(&y);
    let k2 = f(&add(&y, &k1, 0.5 * h));
    let k3 = f(&add(&y, &k2, 0.5 * h));
    let k4 = f(&add(&y, &k3, h));
    let mut o = [0.0; N];
    for i in 0..N {
        o[i] = h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    o
}

fn classify(e: &Error) -> HaltReason {
    match e {
        Error::Singularity(msg) if msg.contains("gap") => HaltReason::GapCollapse,
        _ => HaltReason::HopfLocus,
    }
}

/// Advances over one grid interval using step halving. The accepted value
/// is the pair of half steps, so the method stays fourth order.
fn advance(y: [f64; 3], c: f64, dt: f64, tol: f64, cfg: &FlowConfig) -> std::result::Result<[f64; 3], HaltReason> {
    let f = |v: &[f64; 3]| rhs_unchecked(*v, c);
    let mut pieces = 1u32;
    loop {
        let h = dt / pieces as f64;
        let mut y_full = y;
        let mut y_half = y;
        let mut err: f64 = 0.0;
        for _ in 0..pieces {
            let full = rk4_step(&f, y_full, h);
            let mid = rk4_step(&f, y_half, 0.5 * h);
            if let Err(e) = CurvatureState::from_array(mid).check(cfg.gap_eps, cfg.angle_margin) {
                return Err(classify(&e));
            }
            let half = rk4_step(&f, mid, 0.5 * h);
            for i in 0..3 {
                err = err.max((half[i] - full[i]).abs() / 15.0);
            }
            y_full = half;
            y_half = half;
        }
        if err.is_finite() && err <= tol {
            return Ok(y_half);
        }
        if pieces >= 1 << MAX_HALVINGS {
            return Err(if err.is_finite() { HaltReason::StepUnderflow } else { HaltReason::HopfLocus });
        }
        pieces *= 2;
    }
}

pub fn integrate(init: CurvatureState, c: f64, t_span: (f64, f64), tol: f64) -> Result<Trajectory> {
    integrate_with(init, c, t_span, tol, &FlowConfig::default())
}

/// Integrates from `t_span.0` (where the state is `init`) to `t_span.1`.
pub fn integrate_with(
    init: CurvatureState,
    c: f64,
    t_span: (f64, f64),
    tol: f64,
    cfg: &FlowConfig,
) -> Result<Trajectory> {
    if !(tol > 0.0) {
        return Err(Error::InvalidTolerance(tol));
    }
    if !(cfg.step > 0.0) {
        return Err(Error::InvalidStep(cfg.step));
    }
    init.check(cfg.gap_eps, cfg.angle_margin)?;
    let (t0, t1) = t_span;
    let span = t1 - t0;
    let n = (span.abs() / cfg.step - 1e-9).ceil().max(0.0) as usize;
    let mut tr = Trajectory { c, branch: Branch::BetaDouble, t: vec![t0], states: vec![init], halt: HaltReason::Completed };
    if n == 0 {
        return Ok(tr);
    }
    let dt = span / n as f64;
    let mut y = init.to_array();
    for k in 1..=n {
        match advance(y, c, dt, tol, cfg) {
            Ok(next) => {
                let st = CurvatureState::from_array(next);
                if let Err(e) = st.check(cfg.gap_eps, cfg.angle_margin) {
                    tr.halt = classify(&e);
                    break;
                }
                y = next;
                tr.t.push(if k == n { t1 } else { t0 + dt * k as f64 });
                tr.states.push(st);
            }
            Err(reason) => {
                tr.halt = reason;
                break;
            }
        }
    }
    if !tr.halt.is_completed() {
        log::debug!("integration halted at t = {:.6}: {:?}", tr.t.last().unwrap(), tr.halt);
    }
    Ok(tr)
}

/// Integrates both ways from `t = 0` over `[lo, hi]` with `lo <= 0 <= hi`
/// and joins the halves into one increasing grid.
pub fn integrate_about(init: CurvatureState, c: f64, span: (f64, f64), tol: f64, cfg: &FlowConfig) -> Result<Trajectory> {
    let (lo, hi) = span;
    if !(lo <= 0.0 && hi >= 0.0) {
        return Err(Error::Config(format!("span ({lo}, {hi}) must contain 0")));
    }
    let back = integrate_with(init, c, (0.0, lo), tol, cfg)?;
    let fwd = integrate_with(init, c, (0.0, hi), tol, cfg)?;
    let mut t: Vec<f64> = back.t.iter().rev().copied().collect();
    let mut states: Vec<CurvatureState> = back.states.iter().rev().copied().collect();
    t.extend_from_slice(&fwd.t[1..]);
    states.extend_from_slice(&fwd.states[1..]);
    let halt = if !back.halt.is_completed() { back.halt } else { fwd.halt };
    Ok(Trajectory { c, branch: Branch::BetaDouble, t, states, halt })
}

// ---- initial data from the orbit through p ----

/// Result of [`initial_conditions_from_orbit`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialData {
    pub state: CurvatureState,
    /// Section normal of the curve at `p`, orthogonal to `w`.
    pub xi: RVec3,
    /// Unit eigenvector of the simple curvature, in the orbit's orthonormal frame.
    pub simple_direction: [f64; 2],
}

/// Reads `(alpha_0, beta_0, phi_0)` off the orbit through `p`.
pub fn initial_conditions_from_orbit(
    space: &SpaceForm,
    p: &SectionPoint,
    w: &RVec3,
    branch: Branch,
    h: f64,
) -> Result<InitialData> {
    orbits::check_regular(p)?;
    let w = space.section_unit_tangent(p, *w)?;
    let xi0 = space.section_rotate(p, &w);
    let g = orbits::numeric_orbit_geometry(space, &OrbitPoint { section_base: *p, angles: (0.0, 0.0) }, h)?;
    let xi_amb = space.section_tangent_embed(p, &xi0)?;
    let shape = g.shape_along(space, &xi_amb.v);
    let eig = nalgebra::SymmetricEigen::new(shape);
    let (hi, lo) = if eig.eigenvalues[0] >= eig.eigenvalues[1] { (0, 1) } else { (1, 0) };
    let (k_simple, k_double) = match branch {
        Branch::BetaDouble => (hi, lo),
        Branch::AlphaDouble => (lo, hi),
    };
    let u2 = [eig.eigenvectors[(0, k_simple)], eig.eigenvectors[(1, k_simple)]];
    let u = g.tangent[0] * crate::spaceform::re(u2[0]) + g.tangent[1] * crate::spaceform::re(u2[1]);
    let i = num_complex::Complex64::i();
    let a = space.real_inner(&(xi_amb.v * i), &u);
    let jw = space.section_tangent_embed(p, &w)?.v * i;
    let orient = space.real_inner(&jw, &(u * crate::spaceform::re(a)));
    if orient == 0.0 {
        return Err(Error::Singularity("J w is orthogonal to the simple eigenline".into()));
    }
    let sign = if orient > 0.0 { 1.0 } else { -1.0 };
    let state = CurvatureState::new(
        sign * eig.eigenvalues[k_simple],
        sign * eig.eigenvalues[k_double],
        a.abs().min(1.0).acos(),
    );
    if !(state.phi > ANGLE_MARGIN && state.phi < FRAC_PI_2 - ANGLE_MARGIN) {
        return Err(Error::Singularity(format!("Hopf initial data (phi = {:.3e})", state.phi)));
    }
    Ok(InitialData { state, xi: xi0 * sign, simple_direction: u2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn hand_evaluated_rhs() {
        let d = ode_rhs(&CurvatureState::new(2.0, 0.0, FRAC_PI_4), 4.0).unwrap();
        assert!((d[0] - 4.5).abs() < 1e-12);
        assert!((d[1] + 1.5).abs() < 1e-12);
        assert!((d[2] + 0.25).abs() < 1e-12);
    }

    #[test]
    fn special_angles() {
        let phi = (1.0f64 / 3.0).sqrt().asin();
        let st = CurvatureState::new(0.3, -0.9, phi);
        let d = ode_rhs(&st, -4.0).unwrap();
        assert!((d[2] - st.beta).abs() < 1e-15);
        let d = ode_rhs(&CurvatureState::new(0.3, -0.9, FRAC_PI_4), 7.0).unwrap();
        assert!((d[1] + 3.0 * 7.0 / 8.0).abs() < 1e-14);
    }

    #[test]
    fn singular_states_are_named() {
        let e = ode_rhs(&CurvatureState::new(1.0, 1.0, 0.5), 4.0).unwrap_err();
        assert!(e.to_string().contains("gap"));
        let e = ode_rhs(&CurvatureState::new(1.0, 0.0, FRAC_PI_2), 4.0).unwrap_err();
        assert!(e.to_string().contains("phi"));
    }

    #[test]
    fn empty_span() {
        let init = CurvatureState::new(2.0, 0.0, FRAC_PI_4);
        let tr = integrate(init, 4.0, (0.0, 0.0), 1e-10).unwrap();
        assert_eq!(tr.len(), 1);
        assert_eq!(tr.states[0], init);
    }

    #[test]
    fn rejects_bad_tolerance() {
        let init = CurvatureState::new(2.0, 0.0, FRAC_PI_4);
        assert!(matches!(integrate(init, 4.0, (0.0, 0.1), 0.0), Err(Error::InvalidTolerance(_))));
    }

    #[test]
    fn forward_backward_round_trip() {
        let init = CurvatureState::new(2.0, 0.0, FRAC_PI_4);
        let fwd = integrate(init, 4.0, (0.0, 0.3), 1e-12).unwrap();
        assert!(fwd.halt.is_completed());
        let end = *fwd.states.last().unwrap();
        let back = integrate(end, 4.0, (0.3, 0.0), 1e-12).unwrap();
        let r = back.states.last().unwrap();
        assert!((r.alpha - init.alpha).abs() < 1e-9);
        assert!((r.beta - init.beta).abs() < 1e-9);
        assert!((r.phi - init.phi).abs() < 1e-9);
        assert_eq!(*back.t.last().unwrap(), 0.0);
    }

    #[test]
    fn laws_agree_with_rhs() {
        let st = CurvatureState::new(0.7, -1.3, 0.9);
        let c = -4.0;
        let d = ode_rhs(&st, c).unwrap();
        assert!((alpha_law(&st, c) - d[0]).abs() < 1e-13);
        assert!((beta_law(&st, c) - d[1]).abs() < 1e-13);
        assert!((cos_phi_law(&st, c) + st.b() * d[2]).abs() < 1e-13);
    }

    #[test]
    fn halts_at_hopf_locus() {
        // phi decreases towards 0 quickly from a small angle
        let init = CurvatureState::new(0.0, -3.0, 0.05);
        let tr = integrate(init, 4.0, (0.0, 1.0), 1e-10).unwrap();
        assert!(!tr.halt.is_completed());
        for st in &tr.states {
            assert!(st.check(GAP_EPS, ANGLE_MARGIN).is_ok());
        }
    }

    #[test]
    fn json_layout() {
        let init = CurvatureState::new(2.0, 0.0, FRAC_PI_4);
        let tr = integrate(init, 4.0, (0.0, 0.01), 1e-10).unwrap().with_branch(Branch::AlphaDouble);
        let v: serde_json::Value = serde_json::to_value(&tr).unwrap();
        for key in ["c", "branch", "t", "alpha", "beta", "phi", "halt_reason"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["branch"], "alpha-double");
        assert_eq!(v["halt_reason"], "completed");
        let back: Trajectory = serde_json::from_value(v).unwrap();
        assert_eq!(back, tr);
    }
}

//! Principal orbits of the polar torus action `diag(1, e^{i t1}, e^{i t2})`
//! and their extrinsic geometry.
//!
//! Every principal orbit is a flat Lagrangian torus with parallel mean
//! curvature. In an adapted orthonormal tangent frame `(e1, e2)` with normals
//! `e3 = J e2`, `e4 = J e1` its shape operators depend on two numbers `r`, `s`:
//!
//! ```text
//! S3 = [[r + x cos s, x sin s], [x sin s, 3r - x cos s]]
//! S4 = [[-x sin s, r + x cos s], [r + x cos s, x sin s]]     x = sqrt(c + 8 r^2) / (2 sqrt 2)
//! ```
//!
//! [`numeric_orbit_geometry`] measures the second fundamental form by finite
//! differences and [`fit_orbit_params`] recovers `(r, s)` together with the
//! rotation of the adapted frame.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{Matrix2, Matrix3, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lift;
use crate::spaceform::{re, AmbientPoint, CVec3, SectionPoint, SpaceForm, SpaceKind};

/// Minimum coordinate modulus of a regular point.
pub const REGULAR_TOL: f64 = 1e-6;
/// Allowed finite-difference steps.
pub const FD_STEP_RANGE: (f64, f64) = (1e-6, 1e-3);
/// Fit residual above which a surface is rejected as outside the family,
/// measured relative to `max(1, max |C_ijk|)`.
pub const FIT_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitParams {
    c: f64,
    r: f64,
    s: f64,
    rprime: f64,
}

impl OrbitParams {
    pub fn new(c: f64, r: f64, s: f64) -> Result<Self> {
        let q = c + 8.0 * r * r;
        if !(q >= 0.0) {
            return Err(Error::UndefinedRPrime(q));
        }
        Ok(Self { c, r, s, rprime: q.sqrt() })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn rprime(&self) -> f64 {
        self.rprime
    }

    /// `r' / (2 sqrt 2)`.
    fn x(&self) -> f64 {
        self.rprime * 0.5 * FRAC_1_SQRT_2
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapeOperatorPair {
    pub s3: Matrix2<f64>,
    pub s4: Matrix2<f64>,
}

impl ShapeOperatorPair {
    /// Shape operator for the unit normal `cos(theta) e3 + sin(theta) e4`.
    pub fn along(&self, theta: f64) -> Matrix2<f64> {
        self.s3 * theta.cos() + self.s4 * theta.sin()
    }
}

pub fn shape_operator_matrices(op: &OrbitParams) -> ShapeOperatorPair {
    let (r, x) = (op.r, op.x());
    let (sn, cs) = op.s.sin_cos();
    ShapeOperatorPair {
        s3: Matrix2::new(r + x * cs, x * sn, x * sn, 3.0 * r - x * cs),
        s4: Matrix2::new(-x * sn, r + x * cs, r + x * cs, x * sn),
    }
}

/// Principal curvatures for the normal at angle `theta`, larger first.
pub fn orbit_principal_curvatures(op: &OrbitParams, theta: f64) -> Result<(f64, f64)> {
    let (r, rp) = (op.r, op.rprime);
    let rad = rp * rp / 8.0 + r * r - r * rp * FRAC_1_SQRT_2 * (op.s + 2.0 * theta).cos();
    if rad < -1e-12 {
        return Err(Error::NegativeRadicand(rad));
    }
    let root = rad.max(0.0).sqrt();
    let m = 2.0 * r * theta.cos();
    Ok((m + root, m - root))
}

// ---- the torus action ----

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitPoint {
    pub section_base: SectionPoint,
    pub angles: (f64, f64),
}

pub fn min_coordinate_modulus(p: &SectionPoint) -> f64 {
    p.x.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
}

pub fn check_regular(p: &SectionPoint) -> Result<()> {
    let modulus = min_coordinate_modulus(p);
    if !(modulus > REGULAR_TOL) {
        return Err(Error::NonRegular { modulus });
    }
    Ok(())
}

/// Diagonal phases of the torus element with the given angles.
pub fn torus_phases(angles: (f64, f64)) -> CVec3 {
    CVec3::new(
        Complex64::new(1.0, 0.0),
        Complex64::from_polar(1.0, angles.0),
        Complex64::from_polar(1.0, angles.1),
    )
}

/// `torus_phases(angles) - 1` without cancellation for small angles.
pub fn torus_increment(angles: (f64, f64)) -> CVec3 {
    let em1 = |a: f64| Complex64::new(-2.0 * (0.5 * a).sin().powi(2), a.sin());
    CVec3::new(Complex64::new(0.0, 0.0), em1(angles.0), em1(angles.1))
}

/// Applies the torus element to a lift vector.
pub fn torus_apply(angles: (f64, f64), v: &CVec3) -> CVec3 {
    v.component_mul(&torus_phases(angles))
}

pub fn torus_orbit_point(space: &SpaceForm, q: &OrbitPoint) -> Result<AmbientPoint> {
    check_regular(&q.section_base)?;
    let base = space.section_embed(&q.section_base)?;
    Ok(AmbientPoint { z: torus_apply(q.angles, &base.z) })
}

// ---- numeric extrinsic geometry of a parametrized surface ----

/// Second-order extrinsic data of a surface at one point, in an orthonormal
/// tangent frame and the normal frame `(J e1, J e2)`.
#[derive(Clone, Debug)]
pub struct OrbitGeometry {
    pub point: AmbientPoint,
    /// Horizontal coordinate tangents.
    pub coordinate_tangent: [CVec3; 2],
    pub tangent: [CVec3; 2],
    pub normal: [CVec3; 2],
    /// `II(e_i, e_j)` as normal vectors.
    pub second_fundamental: [[CVec3; 2]; 2],
    /// Shape operators with respect to `normal[0]` and `normal[1]`.
    pub shape: [Matrix2<f64>; 2],
    pub mean_curvature: CVec3,
    pub gauss_curvature: f64,
    pub lagrangian_residual: f64,
}

impl OrbitGeometry {
    /// Shape operator for an arbitrary normal vector.
    pub fn shape_along(&self, space: &SpaceForm, nu: &CVec3) -> Matrix2<f64> {
        let ii = &self.second_fundamental;
        Matrix2::from_fn(|i, j| space.real_inner(&ii[i][j], nu))
    }

    /// Mean curvature vector in the normal frame.
    pub fn mean_curvature_coeffs(&self, space: &SpaceForm) -> [f64; 2] {
        [
            space.real_inner(&self.mean_curvature, &self.normal[0]),
            space.real_inner(&self.mean_curvature, &self.normal[1]),
        ]
    }

    /// Eigenvalues of the shape operator along `nu`, larger first.
    pub fn principal_curvatures(&self, space: &SpaceForm, nu: &CVec3) -> (f64, f64) {
        let e = SymmetricEigen::new(self.shape_along(space, nu)).eigenvalues;
        (e[0].max(e[1]), e[0].min(e[1]))
    }
}

fn check_step(h: f64) -> Result<()> {
    if !(h >= FD_STEP_RANGE.0 && h <= FD_STEP_RANGE.1) {
        return Err(Error::InvalidStep(h));
    }
    Ok(())
}

/// Finite-difference geometry of `g` at `u`. Derivatives of the fibre
/// coordinate are removed so that the result belongs to the base.
pub fn surface_geometry<F>(space: &SpaceForm, g: &F, u: [f64; 2], h: f64) -> Result<OrbitGeometry>
where
    F: Fn(&[f64]) -> CVec3,
{
    let z = g(&u);
    let delta = |v: &[f64]| g(&[u[0] + v[0], u[1] + v[1]]) - z;
    surface_geometry_local(space, &z, &delta, h)
}

/// As [`surface_geometry`], from the increment chart `delta(v) = g(u + v) - g(u)`.
/// Supplying the increment directly avoids the cancellation in `g(u + v) - g(u)`,
/// which dominates second differences at small `h`.
pub fn surface_geometry_local<F>(space: &SpaceForm, z: &CVec3, delta: &F, h: f64) -> Result<OrbitGeometry>
where
    F: Fn(&[f64]) -> CVec3,
{
    let z = *z;
    let g = delta;
    let u = [0.0, 0.0];
    let point = space.point(z).or_else(|_| space.normalize(z))?;
    let d: Vec<CVec3> = (0..2).map(|a| lift::first_diff(g, &u, a, h)).collect();
    let xh: Vec<CVec3> = d.iter().map(|v| space.horizontal(&z, v)).collect();
    let lam: Vec<f64> = d.iter().map(|v| space.vertical_rate(&z, v)).collect();
    let li = lift::inverse_cholesky(&lift::gram(space, &xh))?;
    let e = lift::combine(&li, &xh);
    let tangent = [e[0], e[1]];

    let i = Complex64::i();
    let n0 = space.horizontal(&z, &(e[0] * i));
    let n0 = n0 - lift::project_onto(space, &n0, &e);
    let n0n = space.real_inner(&n0, &n0).sqrt();
    let mut n1 = space.horizontal(&z, &(e[1] * i));
    n1 -= lift::project_onto(space, &n1, &e);
    n1 -= n0 * Complex64::new(space.real_inner(&n1, &n0) / (n0n * n0n), 0.0);
    let n1n = space.real_inner(&n1, &n1).sqrt();
    if !(n0n > 1e-6 && n1n > 1e-6) {
        return Err(Error::DegenerateFrame("J-image of the tangent plane is not transverse".into()));
    }
    let normal = [n0 / Complex64::new(n0n, 0.0), n1 / Complex64::new(n1n, 0.0)];

    let mut coord = [[CVec3::zeros(); 2]; 2];
    for a in 0..2 {
        for b in a..2 {
            let dd = lift::second_diff(g, &u, a, b, h);
            let v = dd - xh[a] * (i * lam[b]) - xh[b] * (i * lam[a]);
            let v = space.horizontal(&z, &v);
            let v = v - lift::project_onto(space, &v, &e);
            coord[a][b] = v;
            coord[b][a] = v;
        }
    }
    let mut ii = [[CVec3::zeros(); 2]; 2];
    for p in 0..2 {
        for q in 0..2 {
            let mut acc = CVec3::zeros();
            for a in 0..2 {
                for b in 0..2 {
                    acc += coord[a][b] * Complex64::new(li[(p, a)] * li[(q, b)], 0.0);
                }
            }
            ii[p][q] = acc;
        }
    }
    let shape = [
        Matrix2::from_fn(|p, q| space.real_inner(&ii[p][q], &normal[0])),
        Matrix2::from_fn(|p, q| space.real_inner(&ii[p][q], &normal[1])),
    ];
    let mean_curvature = (ii[0][0] + ii[1][1]) * Complex64::new(0.5, 0.0);
    let ambient = space.curvature_raw(&e[0], &e[1], &e[1], &e[0]);
    let gauss_curvature = ambient + space.real_inner(&ii[0][0], &ii[1][1])
        - space.real_inner(&ii[0][1], &ii[0][1]);
    let mut lagrangian_residual: f64 = 0.0;
    for p in 0..2 {
        for q in 0..2 {
            lagrangian_residual = lagrangian_residual.max(space.real_inner(&(e[p] * i), &e[q]).abs());
        }
    }
    Ok(OrbitGeometry {
        point,
        coordinate_tangent: [xh[0], xh[1]],
        tangent,
        normal,
        second_fundamental: ii,
        shape,
        mean_curvature,
        gauss_curvature,
        lagrangian_residual,
    })
}

/// Parametrization `(t1, t2) -> diag(1, e^{i t1}, e^{i t2}) x` of the orbit through `p`.
pub fn torus_chart(p: &SectionPoint) -> impl Fn(&[f64]) -> CVec3 + '_ {
    move |u: &[f64]| torus_apply((u[0], u[1]), &crate::spaceform::complexify(&p.x))
}

pub fn numeric_orbit_geometry(space: &SpaceForm, q: &OrbitPoint, h: f64) -> Result<OrbitGeometry> {
    check_step(h)?;
    check_regular(&q.section_base)?;
    space.section_point(q.section_base.x)?;
    let z = torus_apply(q.angles, &crate::spaceform::complexify(&q.section_base.x));
    surface_geometry_local(space, &z, &|v: &[f64]| z.component_mul(&torus_increment((v[0], v[1]))), h)
}

/// Departure of the mean curvature vector from being parallel: the largest
/// arc-length derivative of its coefficients in the normal frame along the
/// two orbit directions. Derivatives use central differences with step
/// `outer` in the torus angles. Also returns the largest deviation of the
/// neighbouring normal frames from the pushed-forward base frame.
pub fn parallel_mean_curvature_residual(
    space: &SpaceForm,
    q: &OrbitPoint,
    h: f64,
    outer: f64,
) -> Result<(f64, f64)> {
    let base = numeric_orbit_geometry(space, q, h)?;
    let mut residual: f64 = 0.0;
    let mut drift: f64 = 0.0;
    for a in 0..2 {
        let mut coeffs = [[0.0; 2]; 2];
        for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
            let mut angles = q.angles;
            let delta = sign * outer;
            if a == 0 {
                angles.0 += delta;
            } else {
                angles.1 += delta;
            }
            let shift = if a == 0 { (delta, 0.0) } else { (0.0, delta) };
            let g = numeric_orbit_geometry(space, &OrbitPoint { angles, ..*q }, h)?;
            for m in 0..2 {
                drift = drift.max((g.normal[m] - torus_apply(shift, &base.normal[m])).norm());
            }
            coeffs[k] = g.mean_curvature_coeffs(space);
        }
        let speed = space.real_inner(&base.coordinate_tangent[a], &base.coordinate_tangent[a]).sqrt();
        for m in 0..2 {
            let d = (coeffs[0][m] - coeffs[1][m]) / (2.0 * outer * speed);
            residual = residual.max(d.abs());
        }
    }
    log::debug!("normal frame drift {drift:.3e}");
    Ok((residual, drift))
}

// ---- inversion of the shape-operator family ----

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitFit {
    pub params: OrbitParams,
    /// Rotation `psi` of the adapted frame: `e1' = cos(psi) e1 + sin(psi) e2`.
    pub frame_angle: f64,
    pub residual: f64,
}

impl OrbitFit {
    /// Angle `theta` of a unit normal `nu = cos(theta) e3' + sin(theta) e4'`
    /// in the adapted frame of `g`.
    pub fn normal_angle(&self, space: &SpaceForm, g: &OrbitGeometry, nu: &CVec3) -> f64 {
        let (sn, cs) = self.frame_angle.sin_cos();
        let i = Complex64::i();
        let e1 = g.tangent[0] * re(cs) + g.tangent[1] * re(sn);
        let e2 = -g.tangent[0] * re(sn) + g.tangent[1] * re(cs);
        let e3 = e2 * i;
        let e4 = e1 * i;
        space.real_inner(nu, &e4).atan2(space.real_inner(nu, &e3))
    }
}

/// Cubic form `C_ijk = <II(e_i, e_j), J e_k>` from the two normal-frame matrices.
fn cubic_entries(shape: &[Matrix2<f64>; 2]) -> [[[f64; 2]; 2]; 2] {
    let mut c = [[[0.0; 2]; 2]; 2];
    for (i, ci) in c.iter_mut().enumerate() {
        for (j, cij) in ci.iter_mut().enumerate() {
            for (k, v) in cij.iter_mut().enumerate() {
                *v = shape[k][(i, j)];
            }
        }
    }
    c
}

/// Cubic form entries `(C111, C112, C122, C222)` of the family in a frame
/// rotated by `-psi`.
fn model_entries(op: &OrbitParams, psi: f64) -> [f64; 4] {
    let (r, x) = (op.r, op.x());
    let phi3 = 3.0 * psi + op.s;
    let (a1, b1) = (-3.0 * r * psi.sin(), 3.0 * r * psi.cos());
    let (a3, b3) = (-x * phi3.sin(), x * phi3.cos());
    let m = a1 / 3.0 - a3;
    let p = a1 + a3;
    let q = b1 / 3.0 + b3;
    let n = b1 - b3;
    [p, q, m, n]
}

/// Least-squares inversion of the shape-operator family.
pub fn fit_orbit_params(c: f64, g: &OrbitGeometry) -> Result<OrbitFit> {
    let cf = cubic_entries(&g.shape);
    let p = cf[0][0][0];
    let q = (cf[0][0][1] + cf[0][1][0] + cf[1][0][0]) / 3.0;
    let m = (cf[0][1][1] + cf[1][0][1] + cf[1][1][0]) / 3.0;
    let n = cf[1][1][1];
    let (a1, b1) = (0.75 * (p + m), 0.75 * (q + n));
    let (a3, b3) = (0.25 * (p - 3.0 * m), 0.25 * (3.0 * q - n));
    let rho1 = a1.hypot(b1);
    let rho3 = a3.hypot(b3);

    let r = fit_radius(c, rho1, rho3);
    let phi3 = (-a3).atan2(b3);
    let (psi, s) = if r > 1e-9 {
        let psi = (-a1).atan2(b1);
        (psi, wrap_angle(phi3 - 3.0 * psi))
    } else {
        (phi3 / 3.0, 0.0)
    };
    let params = OrbitParams::new(c, r, s)?;
    let model = model_entries(&params, psi);
    let idx = |i: usize, j: usize, k: usize| model[i + j + k];
    let mut residual: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                residual = residual.max((cf[i][j][k] - idx(i, j, k)).abs());
                scale = scale.max(cf[i][j][k].abs());
            }
        }
    }
    // relative to the size of the cubic form once it exceeds one
    residual /= scale;
    if !(residual <= FIT_TOL) {
        return Err(Error::NotInFamily { residual });
    }
    Ok(OrbitFit { params, frame_angle: psi, residual })
}

fn fit_radius(c: f64, rho1: f64, rho3: f64) -> f64 {
    let lo = if c < 0.0 { (-c / 8.0).sqrt() } else { 0.0 };
    let cost = |r: f64| (rho1 - 3.0 * r).powi(2) + (rho3 - (c / 8.0 + r * r).max(0.0).sqrt()).powi(2);
    let hi = lo + rho1 / 3.0 + rho3 + 1.0;
    let n = 400;
    let mut best = lo;
    for k in 0..=n {
        let r = lo + (hi - lo) * k as f64 / n as f64;
        if cost(r) < cost(best) {
            best = r;
        }
    }
    let step = (hi - lo) / n as f64;
    let (mut a, mut b) = ((best - step).max(lo), (best + step).min(hi));
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let x1 = b - gr * (b - a);
        let x2 = a + gr * (b - a);
        if cost(x1) <= cost(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    let r = 0.5 * (a + b);
    if cost(lo) <= cost(r) { lo } else { r }
}

fn wrap_angle(a: f64) -> f64 {
    let t = (a + PI).rem_euclid(2.0 * PI) - PI;
    if t <= -PI { t + 2.0 * PI } else { t }
}

// ---- orbits through the hyperboloid base point (hyperbolic case) ----

/// Commuting generators `X`, `Y` in `u(1,2)` of the abelian subgroup whose
/// orbit through `o = (R, 0, 0)` realizes the parameters `(r, s)`.
pub fn hirakawa_generators(c: f64, r: f64, s: f64) -> Result<(Matrix3<Complex64>, Matrix3<Complex64>)> {
    if !(c < 0.0) {
        return Err(Error::InvalidParams("generators are defined for c < 0".into()));
    }
    let op = OrbitParams::new(c, r, s)?;
    let rp = op.rprime;
    let q = Complex64::new((-c).sqrt(), 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let k = Complex64::new(2.0 * 2f64.sqrt() * r, 0.0);
    let em = Complex64::from_polar(rp, -s);
    let ep = Complex64::from_polar(rp, s);
    let x = Matrix3::new(zero, q, q, q, zero, k + em, q, -k - ep, zero);
    let i = Complex64::i();
    let y = Matrix3::new(zero, q, -q, -q, k * 2.0, em - k, q, ep - k, k * 2.0) * i;
    Ok((x, y))
}

pub fn hirakawa_base_point(space: &SpaceForm) -> AmbientPoint {
    AmbientPoint {
        z: CVec3::new(Complex64::new(space.radius(), 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
    }
}

/// `exp(t X + u Y) o`.
pub fn ch2_hirakawa_orbit(space: &SpaceForm, r: f64, s: f64, t: f64, u: f64) -> Result<AmbientPoint> {
    if space.kind() != SpaceKind::Hyperbolic {
        return Err(Error::InvalidParams("hyperbolic space required".into()));
    }
    if !(t.abs() <= 50.0 && u.abs() <= 50.0) {
        return Err(Error::ExponentialOverflow);
    }
    let (x, y) = hirakawa_generators(space.c(), r, s)?;
    let m = (x * Complex64::new(t, 0.0) + y * Complex64::new(u, 0.0)).exp();
    let z = m * hirakawa_base_point(space).z;
    let level = space.quadric_level();
    let residual = (space.herm(&z, &z).re - level).abs() / level.abs();
    if !(residual <= 1e-10) {
        return Err(Error::NormViolation { residual });
    }
    space.normalize(z)
}

/// Finite-difference geometry of the generator orbit at `exp(t X + u Y) o`.
pub fn hirakawa_geometry(space: &SpaceForm, r: f64, s: f64, at: (f64, f64), h: f64) -> Result<OrbitGeometry> {
    check_step(h)?;
    let (x, y) = hirakawa_generators(space.c(), r, s)?;
    let o = hirakawa_base_point(space).z;
    let chart = move |u: &[f64]| (x * Complex64::new(u[0], 0.0) + y * Complex64::new(u[1], 0.0)).exp() * o;
    surface_geometry(space, &chart, [at.0, at.1], h)
}

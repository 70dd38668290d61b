//! Complex space forms of complex dimension two, modeled as quotients of a
//! quadric in `C^3`.
//!
//! For `c > 0` points are lifted to the sphere `|z|^2 = R^2` with the standard
//! Hermitian form; for `c < 0` to the hyperboloid `-|z0|^2 + |z1|^2 + |z2|^2 = -R^2`.
//! With `R = 2 / sqrt(|c|)` the base has holomorphic sectional curvature `c`.
//! Tangent vectors are horizontal lifts: vectors orthogonal to `z` and `iz`
//! for the real part of the Hermitian form. `J` is multiplication by `i`.
//!
//! The section is the set of all-real points. It is a sphere (double cover
//! of the real projective plane) or a hyperboloid, of curvature `c / 4`.

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CVec3 = Vector3<Complex64>;
pub type RVec3 = Vector3<f64>;

/// Tolerance on the quadric constraint, relative to `R^2`.
pub const NORM_TOL: f64 = 1e-12;
/// Tolerance on horizontality, relative to `|v| R`.
pub const HORIZONTAL_TOL: f64 = 1e-10;
/// Base-point equality tolerance used by [`SpaceForm::same_point`].
pub const SAME_POINT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceKind {
    Projective,
    Hyperbolic,
}

/// A complex space form `M(c)`, carrying the sign of the lift form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceForm {
    kind: SpaceKind,
    c: f64,
}

/// A point of the lift quadric. Two lifts represent the same base point iff
/// they differ by a unit complex factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmbientPoint {
    pub z: CVec3,
}

/// A horizontal tangent vector attached to a lift.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentVec {
    pub base: AmbientPoint,
    pub v: CVec3,
}

/// A point of the section model (sphere or hyperboloid of curvature `c / 4`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionPoint {
    pub x: RVec3,
}

impl SpaceForm {
    pub fn new(kind: SpaceKind, c: f64) -> Result<Self> {
        if !c.is_finite() || c == 0.0 {
            return Err(Error::InvalidParams(format!("c must be finite and nonzero, got {c}")));
        }
        let ok = match kind {
            SpaceKind::Projective => c > 0.0,
            SpaceKind::Hyperbolic => c < 0.0,
        };
        if !ok {
            return Err(Error::InvalidParams(format!("sign of c = {c} does not match {kind:?}")));
        }
        Ok(Self { kind, c })
    }

    /// Chooses the model from the sign of `c`.
    pub fn from_curvature(c: f64) -> Result<Self> {
        let kind = if c > 0.0 { SpaceKind::Projective } else { SpaceKind::Hyperbolic };
        Self::new(kind, c)
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn radius(&self) -> f64 {
        2.0 / self.c.abs().sqrt()
    }

    /// Diagonal signature of the lift form.
    pub fn eta(&self) -> [f64; 3] {
        match self.kind {
            SpaceKind::Projective => [1.0, 1.0, 1.0],
            SpaceKind::Hyperbolic => [-1.0, 1.0, 1.0],
        }
    }

    /// Value of `h(z, z)` on the quadric: `R^2` or `-R^2`.
    pub fn quadric_level(&self) -> f64 {
        let r = self.radius();
        match self.kind {
            SpaceKind::Projective => r * r,
            SpaceKind::Hyperbolic => -r * r,
        }
    }

    // ---- Hermitian algebra on C^3 ----

    /// Hermitian form `sum eta_k v_k conj(w_k)`.
    pub fn herm(&self, v: &CVec3, w: &CVec3) -> Complex64 {
        let eta = self.eta();
        (0..3).map(|k| v[k] * w[k].conj() * eta[k]).sum()
    }

    /// Real part of the Hermitian form; on horizontal vectors this is the metric.
    pub fn real_inner(&self, v: &CVec3, w: &CVec3) -> f64 {
        self.herm(v, w).re
    }

    /// Horizontal projection at `z`: removes the components along `z` and `iz`.
    pub fn horizontal(&self, z: &CVec3, v: &CVec3) -> CVec3 {
        let k = self.herm(v, z) / self.herm(z, z);
        v - z * k
    }

    /// Rate of motion along the fibre: `Im(h(dz, z) / h(z, z))`.
    pub fn vertical_rate(&self, z: &CVec3, dz: &CVec3) -> f64 {
        (self.herm(dz, z) / self.herm(z, z)).im
    }

    // ---- points and vectors ----

    pub fn point(&self, z: CVec3) -> Result<AmbientPoint> {
        let level = self.quadric_level();
        let residual = (self.herm(&z, &z).re - level).abs() / level.abs();
        if !residual.is_finite() || residual > NORM_TOL {
            return Err(Error::NormViolation { residual });
        }
        Ok(AmbientPoint { z })
    }

    /// Rescales `z` onto the quadric. `z` must be on the correct side of the
    /// light cone in the hyperbolic case.
    pub fn normalize(&self, z: CVec3) -> Result<AmbientPoint> {
        let n = self.herm(&z, &z).re;
        if !(n * self.quadric_level() > 0.0) {
            return Err(Error::NormViolation { residual: f64::INFINITY });
        }
        let scale = (self.quadric_level() / n).sqrt();
        Ok(AmbientPoint { z: z * Complex64::new(scale, 0.0) })
    }

    pub fn tangent(&self, base: AmbientPoint, v: CVec3) -> Result<TangentVec> {
        let scale = v.norm().max(f64::MIN_POSITIVE) * self.radius();
        let residual = self.herm(&v, &base.z).norm() / scale;
        if !(residual <= HORIZONTAL_TOL) {
            return Err(Error::NotHorizontal { residual });
        }
        Ok(TangentVec { base, v })
    }

    /// Horizontal projection followed by attachment to `base`.
    pub fn project_tangent(&self, base: AmbientPoint, v: CVec3) -> TangentVec {
        TangentVec { base, v: self.horizontal(&base.z, &v) }
    }

    fn check_same_base(&self, a: &TangentVec, b: &TangentVec) -> Result<()> {
        if (a.base.z - b.base.z).norm() > 1e-12 * self.radius() {
            return Err(Error::BaseMismatch);
        }
        Ok(())
    }

    fn check_horizontal(&self, x: &TangentVec) -> Result<()> {
        self.tangent(x.base, x.v).map(|_| ())
    }

    pub fn metric(&self, x: &TangentVec, y: &TangentVec) -> Result<f64> {
        self.check_same_base(x, y)?;
        Ok(self.real_inner(&x.v, &y.v))
    }

    pub fn norm(&self, x: &TangentVec) -> f64 {
        self.real_inner(&x.v, &x.v).max(0.0).sqrt()
    }

    pub fn apply_j(&self, x: &TangentVec) -> Result<TangentVec> {
        self.check_horizontal(x)?;
        Ok(TangentVec { base: x.base, v: x.v * Complex64::i() })
    }

    /// `<R(X,Y)V, W>` for the constant holomorphic curvature tensor.
    pub fn curvature_tensor(
        &self,
        x: &TangentVec,
        y: &TangentVec,
        v: &TangentVec,
        w: &TangentVec,
    ) -> Result<f64> {
        self.check_same_base(x, y)?;
        self.check_same_base(x, v)?;
        self.check_same_base(x, w)?;
        Ok(self.curvature_raw(&x.v, &y.v, &v.v, &w.v))
    }

    /// Curvature tensor on raw horizontal vectors; no base checks.
    pub fn curvature_raw(&self, x: &CVec3, y: &CVec3, v: &CVec3, w: &CVec3) -> f64 {
        let g = |a: &CVec3, b: &CVec3| self.real_inner(a, b);
        let i = Complex64::i();
        let jx = x * i;
        let jy = y * i;
        let jv = v * i;
        self.c / 4.0
            * (g(y, v) * g(x, w) - g(x, v) * g(y, w) + g(&jy, v) * g(&jx, w) - g(&jx, v) * g(&jy, w)
                - 2.0 * g(&jx, y) * g(&jv, w))
    }

    // ---- geodesics and distance ----

    /// Closed-form geodesic `exp_p(t v)`.
    pub fn geodesic(&self, p: &AmbientPoint, v: &TangentVec, t: f64) -> Result<AmbientPoint> {
        self.geodesic_with_velocity(p, v, t).map(|(q, _)| q)
    }

    /// Geodesic point together with its (parallel) velocity.
    pub fn geodesic_with_velocity(
        &self,
        p: &AmbientPoint,
        v: &TangentVec,
        t: f64,
    ) -> Result<(AmbientPoint, TangentVec)> {
        let speed = self.norm(v);
        if !(speed > 0.0) {
            return Err(Error::ZeroVector);
        }
        self.tangent(*p, v.v)?;
        let r = self.radius();
        let u = v.v / Complex64::new(speed, 0.0);
        let s = speed * t / r;
        let (z, dz) = match self.kind {
            SpaceKind::Projective => {
                let (sn, cs) = s.sin_cos();
                (p.z * re(cs) + u * re(r * sn), (-p.z * re(sn / r) + u * re(cs)) * re(speed))
            }
            SpaceKind::Hyperbolic => {
                let (sn, cs) = (s.sinh(), s.cosh());
                (p.z * re(cs) + u * re(r * sn), (p.z * re(sn / r) + u * re(cs)) * re(speed))
            }
        };
        let q = self.normalize(z)?;
        Ok((q, TangentVec { base: q, v: self.horizontal(&q.z, &dz) }))
    }

    /// Riemannian distance between base points.
    pub fn distance(&self, p: &AmbientPoint, q: &AmbientPoint) -> f64 {
        let r = self.radius();
        let hq = self.herm(&q.z, &p.z);
        let m = hq.norm();
        // phase chosen so that h(q', p) is real with the sign of h(p, p)
        let phase = if m > 0.0 { hq.conj() / m } else { Complex64::new(1.0, 0.0) };
        let phase = match self.kind {
            SpaceKind::Projective => phase,
            SpaceKind::Hyperbolic => -phase,
        };
        let d = q.z * phase - p.z;
        match self.kind {
            SpaceKind::Projective => {
                let chord = d.norm();
                2.0 * r * (chord / (2.0 * r)).min(1.0).asin()
            }
            SpaceKind::Hyperbolic => {
                let chord = self.real_inner(&d, &d).max(0.0).sqrt();
                2.0 * r * (chord / (2.0 * r)).asinh()
            }
        }
    }

    /// Base-point equality through `|h(p, q)| = R^2`.
    pub fn same_point(&self, p: &AmbientPoint, q: &AmbientPoint, tol: f64) -> bool {
        let r2 = self.radius().powi(2);
        (self.herm(&p.z, &q.z).norm() - r2).abs() <= tol * r2
    }

    // ---- the real section ----

    /// Inner product of the section's flat embedding (Euclidean or Lorentzian).
    pub fn section_inner(&self, u: &RVec3, v: &RVec3) -> f64 {
        let eta = self.eta();
        eta[0] * u[0] * v[0] + eta[1] * u[1] * v[1] + eta[2] * u[2] * v[2]
    }

    pub fn section_point(&self, x: RVec3) -> Result<SectionPoint> {
        let level = self.quadric_level();
        let residual = (self.section_inner(&x, &x) - level).abs() / level.abs();
        if !residual.is_finite() || residual > NORM_TOL {
            return Err(Error::NormViolation { residual });
        }
        if self.kind == SpaceKind::Hyperbolic && x[0] <= 0.0 {
            return Err(Error::NormViolation { residual: f64::INFINITY });
        }
        Ok(SectionPoint { x })
    }

    /// Closest model point to `x` along the radial direction. In the
    /// hyperbolic case the first coordinate is recomputed from the others.
    pub fn section_project(&self, x: RVec3) -> Result<SectionPoint> {
        let r = self.radius();
        match self.kind {
            SpaceKind::Projective => {
                let n = x.norm();
                if !(n > 0.0) {
                    return Err(Error::ZeroVector);
                }
                Ok(SectionPoint { x: x * (r / n) })
            }
            SpaceKind::Hyperbolic => {
                let x0 = (r * r + x[1] * x[1] + x[2] * x[2]).sqrt();
                Ok(SectionPoint { x: RVec3::new(x0, x[1], x[2]) })
            }
        }
    }

    /// Removes the component of `u` along `p` and returns a unit section tangent.
    pub fn section_unit_tangent(&self, p: &SectionPoint, u: RVec3) -> Result<RVec3> {
        let t = u - p.x * (self.section_inner(&u, &p.x) / self.quadric_level());
        let n = self.section_inner(&t, &t);
        if !(n > 1e-24) {
            return Err(Error::ZeroVector);
        }
        Ok(t / n.sqrt())
    }

    /// Orthonormal basis of the section tangent plane at `p`, fixed by the model.
    pub fn section_basis(&self, p: &SectionPoint) -> [RVec3; 2] {
        let x = p.x;
        let r = self.radius();
        match self.kind {
            SpaceKind::Projective => {
                let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
                if rho > 1e-9 * r {
                    let e1 = RVec3::new(-x[1], x[0], 0.0) / rho;
                    let e2 = RVec3::new(-x[0] * x[2] / rho, -x[1] * x[2] / rho, rho) / r;
                    return [e1, e2];
                }
            }
            SpaceKind::Hyperbolic => {
                let rho = (x[1] * x[1] + x[2] * x[2]).sqrt();
                if rho > 1e-9 * r {
                    let e1 = RVec3::new(0.0, -x[2], x[1]) / rho;
                    let e2 = RVec3::new(rho, x[0] * x[1] / rho, x[0] * x[2] / rho) / r;
                    return [e1, e2];
                }
            }
        }
        // poles of the chart above: Gram-Schmidt on coordinate axes
        let mut out: Vec<RVec3> = Vec::with_capacity(2);
        for k in 0..3 {
            let mut v = RVec3::zeros();
            v[k] = 1.0;
            let mut v = v - x * (self.section_inner(&v, &x) / self.quadric_level());
            for b in &out {
                v -= b * self.section_inner(&v, b);
            }
            let n = self.section_inner(&v, &v);
            if n > 1e-6 {
                out.push(v / n.sqrt());
            }
            if out.len() == 2 {
                break;
            }
        }
        [out[0], out[1]]
    }

    /// The quarter-turn of `u` inside `T_p Sigma` with respect to [`Self::section_basis`].
    pub fn section_rotate(&self, p: &SectionPoint, u: &RVec3) -> RVec3 {
        let [e1, e2] = self.section_basis(p);
        e2 * self.section_inner(u, &e1) - e1 * self.section_inner(u, &e2)
    }

    pub fn section_embed(&self, p: &SectionPoint) -> Result<AmbientPoint> {
        self.section_point(p.x)?;
        Ok(AmbientPoint { z: complexify(&p.x) })
    }

    pub fn section_tangent_embed(&self, p: &SectionPoint, u: &RVec3) -> Result<TangentVec> {
        let base = self.section_embed(p)?;
        let scale = (u.norm() * self.radius()).max(f64::MIN_POSITIVE);
        let residual = self.section_inner(u, &p.x).abs() / scale;
        if residual > HORIZONTAL_TOL {
            return Err(Error::NotHorizontal { residual });
        }
        Ok(TangentVec { base, v: complexify(u) })
    }

    /// Intrinsic distance in the section model.
    pub fn section_distance(&self, p: &SectionPoint, q: &SectionPoint) -> f64 {
        let r = self.radius();
        let d = q.x - p.x;
        let chord = self.section_inner(&d, &d).max(0.0).sqrt();
        match self.kind {
            SpaceKind::Projective => 2.0 * r * (chord / (2.0 * r)).min(1.0).asin(),
            SpaceKind::Hyperbolic => 2.0 * r * (chord / (2.0 * r)).asinh(),
        }
    }

    /// Section geodesic from `p` with unit initial direction `u`.
    pub fn section_geodesic(&self, p: &SectionPoint, u: &RVec3, t: f64) -> SectionPoint {
        let r = self.radius();
        let s = t / r;
        let x = match self.kind {
            SpaceKind::Projective => p.x * s.cos() + u * (r * s.sin()),
            SpaceKind::Hyperbolic => p.x * s.cosh() + u * (r * s.sinh()),
        };
        SectionPoint { x }
    }
}

/// Real scalar as a complex number, for scaling complex vectors.
#[inline]
pub fn re(f: f64) -> Complex64 {
    Complex64::new(f, 0.0)
}

pub fn complexify(x: &RVec3) -> CVec3 {
    x.map(|v| Complex64::new(v, 0.0))
}

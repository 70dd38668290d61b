//! Finite-difference jets of parametrized maps into the lift space and the
//! horizontal frame algebra shared by orbit and hypersurface estimators.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spaceform::{CVec3, SpaceForm};

/// Relative norm below which a Gram-Schmidt candidate counts as degenerate.
pub const DEGENERATE_TOL: f64 = 1e-8;

fn shifted(u: &[f64], a: usize, d: f64) -> Vec<f64> {
    let mut v = u.to_vec();
    v[a] += d;
    v
}

/// Central first difference of `f` along coordinate `a`.
pub fn first_diff<F: Fn(&[f64]) -> CVec3>(f: &F, u: &[f64], a: usize, h: f64) -> CVec3 {
    (f(&shifted(u, a, h)) - f(&shifted(u, a, -h))) / Complex64::new(2.0 * h, 0.0)
}

/// Central second difference of `f` along coordinates `a`, `b`.
pub fn second_diff<F: Fn(&[f64]) -> CVec3>(f: &F, u: &[f64], a: usize, b: usize, h: f64) -> CVec3 {
    if a == b {
        let c = f(u);
        return (f(&shifted(u, a, h)) - c * Complex64::new(2.0, 0.0) + f(&shifted(u, a, -h))) / Complex64::new(h * h, 0.0);
    }
    let pp = f(&shifted(&shifted(u, a, h), b, h));
    let pm = f(&shifted(&shifted(u, a, h), b, -h));
    let mp = f(&shifted(&shifted(u, a, -h), b, h));
    let mm = f(&shifted(&shifted(u, a, -h), b, -h));
    (pp - pm - mp + mm) / Complex64::new(4.0 * h * h, 0.0)
}

/// Gram matrix of `vecs` under the real part of the lift form.
pub fn gram(space: &SpaceForm, vecs: &[CVec3]) -> DMatrix<f64> {
    let n = vecs.len();
    DMatrix::from_fn(n, n, |i, j| space.real_inner(&vecs[i], &vecs[j]))
}

/// Inverse Cholesky factor `L^{-1}` of a Gram matrix `G = L L^T`. Rows of
/// `L^{-1}` give the Gram-Schmidt frame in terms of the original vectors.
pub fn inverse_cholesky(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let scale = g.diagonal().max().max(f64::MIN_POSITIVE);
    let chol = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::DegenerateFrame("Gram matrix is not positive definite".into()))?;
    let l = chol.l();
    let min_pivot = l.diagonal().iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if min_pivot * min_pivot < DEGENERATE_TOL * DEGENERATE_TOL * scale {
        return Err(Error::DegenerateFrame(format!("Cholesky pivot {min_pivot:.3e}")));
    }
    l.try_inverse()
        .ok_or_else(|| Error::DegenerateFrame("singular Cholesky factor".into()))
}

/// Combines `vecs` with the rows of `m`: `out_i = sum_a m_ia vecs_a`.
pub fn combine(m: &DMatrix<f64>, vecs: &[CVec3]) -> Vec<CVec3> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols()).fold(CVec3::zeros(), |acc, a| acc + vecs[a] * Complex64::new(m[(i, a)], 0.0))
        })
        .collect()
}

/// Orthonormal horizontal frame obtained from `vecs` in order.
pub fn horizontal_frame(space: &SpaceForm, z: &CVec3, vecs: &[CVec3]) -> Result<Vec<CVec3>> {
    let hor: Vec<CVec3> = vecs.iter().map(|v| space.horizontal(z, v)).collect();
    let li = inverse_cholesky(&gram(space, &hor))?;
    Ok(combine(&li, &hor))
}

/// Unit horizontal vector orthogonal to a three-vector orthonormal frame.
/// The horizontal space is four-dimensional, so this is unique up to sign.
pub fn normal_completion(space: &SpaceForm, z: &CVec3, frame: &[CVec3]) -> Result<CVec3> {
    let mut best: Option<(CVec3, f64)> = None;
    for k in 0..3 {
        for f in [Complex64::new(1.0, 0.0), Complex64::i()] {
            let mut e = CVec3::zeros();
            e[k] = f;
            let mut w = space.horizontal(z, &e);
            for b in frame {
                w -= b * Complex64::new(space.real_inner(&w, b), 0.0);
            }
            let n = space.real_inner(&w, &w);
            if best.as_ref().is_none_or(|(_, m)| n > *m) {
                best = Some((w, n));
            }
        }
    }
    let (w, n) = best.expect("six candidates");
    if !(n > 1e-12) {
        return Err(Error::DegenerateFrame("no normal direction".into()));
    }
    Ok(w / Complex64::new(n.sqrt(), 0.0))
}

/// Orthogonal projection of `v` onto the real span of an orthonormal horizontal set.
pub fn project_onto(space: &SpaceForm, v: &CVec3, basis: &[CVec3]) -> CVec3 {
    basis
        .iter()
        .fold(CVec3::zeros(), |acc, b| acc + b * Complex64::new(space.real_inner(v, b), 0.0))
}

/// Components of `v` along an orthonormal set.
pub fn coefficients(space: &SpaceForm, v: &CVec3, basis: &[CVec3]) -> DVector<f64> {
    DVector::from_iterator(basis.len(), basis.iter().map(|b| space.real_inner(v, b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaceform::SpaceKind;

    #[test]
    fn frame_is_orthonormal_and_horizontal() {
        let s = SpaceForm::new(SpaceKind::Hyperbolic, -4.0).unwrap();
        let z = s
            .normalize(CVec3::new(
                Complex64::new(1.5, 0.2),
                Complex64::new(0.3, 0.1),
                Complex64::new(-0.2, 0.4),
            ))
            .unwrap()
            .z;
        let vs = [
            CVec3::new(Complex64::new(0.0, 1.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
            CVec3::new(Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(1.0, 0.0)),
            CVec3::new(Complex64::new(0.3, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, -1.0)),
        ];
        let frame = horizontal_frame(&s, &z, &vs).unwrap();
        let n = normal_completion(&s, &z, &frame).unwrap();
        let mut all = frame.clone();
        all.push(n);
        for i in 0..4 {
            assert!(s.herm(&all[i], &z).norm() < 1e-12);
            for j in 0..4 {
                let g = s.real_inner(&all[i], &all[j]);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_input_is_reported() {
        let s = SpaceForm::new(SpaceKind::Projective, 4.0).unwrap();
        let z = CVec3::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        let v = CVec3::new(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        assert!(horizontal_frame(&s, &z, &[v, v * Complex64::new(2.0, 0.0)]).is_err());
    }
}

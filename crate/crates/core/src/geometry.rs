//! Exact geometry of the closed upper half-sphere
//! `S^n_+ = { x in R^{n+1} : |x| = 1, x_{n+1} >= 0 }`.
//!
//! Points are stored as ambient unit vectors. Whether a point lies on the
//! boundary sphere `{x_{n+1} = 0}` is decided once, when the point is built,
//! and carried as a flag from then on.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Tolerance on `|x| = 1` for points handed in by callers.
pub const UNIT_TOL: f64 = 1e-12;
/// Points with `|x_{n+1}| <= BOUNDARY_TOL` are boundary points.
pub const BOUNDARY_TOL: f64 = 1e-9;
/// Tolerance on `<v, x> = 0` for tangent vectors.
pub const TANGENT_TOL: f64 = 1e-10;

/// A point of the closed upper half-sphere, as a unit vector of `R^{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePoint {
    coords: DVector<f64>,
    boundary: bool,
}

impl SpherePoint {
    /// Validates `coords` as a point of the closed upper half-sphere.
    ///
    /// Boundary points get their last coordinate snapped to exactly zero
    /// (followed by renormalisation), so that every later boundary
    /// computation works in the hyperplane `x_{n+1} = 0`.
    pub fn new(coords: DVector<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: coords.len() });
        }
        let norm = coords.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotUnit { norm });
        }
        Self::classify(coords)
    }

    /// Normalises `coords` first, then behaves like [`SpherePoint::new`].
    pub fn from_unnormalized(coords: DVector<f64>) -> Result<Self> {
        let norm = coords.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NotUnit { norm });
        }
        Self::new(coords / norm)
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(coords))
    }

    fn classify(mut coords: DVector<f64>) -> Result<Self> {
        let last = coords[coords.len() - 1];
        if last < -BOUNDARY_TOL {
            return Err(Error::BelowEquator { last });
        }
        let boundary = last.abs() <= BOUNDARY_TOL;
        if boundary {
            let k = coords.len() - 1;
            coords[k] = 0.0;
            let norm = coords.norm();
            coords /= norm;
        }
        Ok(Self { coords, boundary })
    }

    /// The north pole `e_{n+1}` of `S^n`.
    pub fn north_pole(n: usize) -> Self {
        Self::basis(n, n)
    }

    /// The ambient basis vector `e_{k+1}` (zero based `k`) as a point of `S^n`.
    pub fn basis(n: usize, k: usize) -> Self {
        assert!(k <= n, "basis index {k} out of range for S^{n}");
        let mut v = DVector::zeros(n + 1);
        v[k] = 1.0;
        Self::classify(v).expect("basis vectors lie on the closed half-sphere")
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    /// The sphere dimension `n` (ambient dimension is `n + 1`).
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn is_boundary(&self) -> bool {
        self.boundary
    }

    /// Height above the boundary hyperplane.
    pub fn height(&self) -> f64 {
        self.coords[self.coords.len() - 1]
    }

    /// Geodesic distance to the boundary sphere, `arcsin(x_{n+1})`.
    pub fn distance_to_boundary(&self) -> f64 {
        self.height().clamp(-1.0, 1.0).asin()
    }

    pub fn dot(&self, other: &SpherePoint) -> f64 {
        self.coords.dot(&other.coords)
    }

    /// Mirror image across the boundary hyperplane. The result lies on the
    /// lower half-sphere, so it is returned as a raw vector.
    pub fn reflected(&self) -> DVector<f64> {
        let mut r = self.coords.clone();
        let k = r.len() - 1;
        r[k] = -r[k];
        r
    }
}

/// A vector tangent to the sphere at `base`, in ambient coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    base: SpherePoint,
    vec: DVector<f64>,
}

impl TangentVector {
    pub fn new(base: SpherePoint, vec: DVector<f64>) -> Result<Self> {
        if vec.len() != base.coords.len() {
            return Err(Error::DimensionMismatch { expected: base.coords.len(), got: vec.len() });
        }
        let inner = vec.dot(&base.coords);
        if inner.abs() > TANGENT_TOL * vec.norm().max(1.0) {
            return Err(Error::NotTangent { inner });
        }
        Ok(Self { base, vec })
    }

    /// Builds a vector tangent to the boundary sphere at a boundary point.
    pub fn new_boundary(base: SpherePoint, vec: DVector<f64>) -> Result<Self> {
        if !base.is_boundary() {
            return Err(Error::NotOnBoundary { last: base.height() });
        }
        let last = vec[vec.len() - 1];
        if last.abs() > TANGENT_TOL * vec.norm().max(1.0) {
            return Err(Error::NotTangent { inner: last });
        }
        Self::new(base, vec)
    }

    pub fn zero(base: SpherePoint) -> Self {
        let vec = DVector::zeros(base.coords.len());
        Self { base, vec }
    }

    pub(crate) fn from_parts_unchecked(base: SpherePoint, vec: DVector<f64>) -> Self {
        Self { base, vec }
    }

    pub fn base(&self) -> &SpherePoint {
        &self.base
    }

    pub fn vec(&self) -> &DVector<f64> {
        &self.vec
    }

    pub fn into_vec(self) -> DVector<f64> {
        self.vec
    }

    pub fn norm(&self) -> f64 {
        self.vec.norm()
    }
}

/// Geodesic (great-circle) distance in radians.
///
/// Evaluated as `2 atan2(|a - b|, |a + b|)`, which equals `arccos <a, b>` on
/// the unit sphere, always lands in `[0, pi]` and keeps full relative accuracy
/// for nearby points.
pub fn geodesic_distance(a: &SpherePoint, b: &SpherePoint) -> f64 {
    chord_to_angle(&a.coords, &b.coords)
}

pub(crate) fn chord_to_angle(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let diff = (a - b).norm();
    let sum = (a + b).norm();
    2.0 * diff.atan2(sum)
}

/// `x - <x, z> z`, the component of `x` tangent to the sphere at `z`.
pub fn tangent_project(x: &SpherePoint, z: &SpherePoint) -> TangentVector {
    let vec = project_tangent(x.coords(), z.coords());
    TangentVector::from_parts_unchecked(z.clone(), vec)
}

pub(crate) fn project_tangent(v: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
    v - z * v.dot(z)
}

/// Removes the normal direction to `z` and the `e_{n+1}` direction.
pub(crate) fn project_boundary_tangent(v: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
    let mut w = project_tangent(v, z);
    let k = w.len() - 1;
    w[k] = 0.0;
    w
}

/// Exponential map of the round sphere: `cos|v| z + sin|v| v/|v|`.
pub fn exp_map(z: &SpherePoint, v: &TangentVector) -> Result<SpherePoint> {
    if v.base.coords.len() != z.coords.len() {
        return Err(Error::DimensionMismatch { expected: z.coords.len(), got: v.vec.len() });
    }
    let t = v.norm();
    if t >= std::f64::consts::PI {
        return Err(Error::OutOfChart { norm: t });
    }
    if t == 0.0 {
        return Ok(z.clone());
    }
    let coords = z.coords() * t.cos() + v.vec() * (t.sin() / t);
    SpherePoint::from_unnormalized(coords)
}

/// Normalised Euclidean mean of a cluster of points.
///
/// The result `a` satisfies `sum_i (a_i - <a_i, a> a) = 0`.
pub fn cluster_barycenter(points: &[SpherePoint]) -> Result<SpherePoint> {
    let first = points.first().ok_or(Error::Empty("cluster"))?;
    let mut sum = DVector::zeros(first.coords.len());
    for p in points {
        if p.coords.len() != sum.len() {
            return Err(Error::DimensionMismatch { expected: sum.len(), got: p.coords.len() });
        }
        sum += &p.coords;
    }
    let mean = sum / points.len() as f64;
    let norm = mean.norm();
    if norm < 1e-8 {
        return Err(Error::DegenerateBarycenter { norm });
    }
    SpherePoint::from_unnormalized(mean)
}

/// `|sum_i (a_i - <a_i, c> c)|`, zero when `c` is the barycenter of the `a_i`.
pub fn barycenter_residual(points: &[SpherePoint], center: &SpherePoint) -> f64 {
    let mut acc = DVector::zeros(center.coords.len());
    for p in points {
        acc += project_tangent(&p.coords, &center.coords);
    }
    acc.norm()
}

/// Orthonormal basis (as columns) of `T_x S^n`.
///
/// The frame is a deterministic function of `x`: Gram-Schmidt over the
/// ambient basis vectors, always taking the candidate with the largest
/// remaining component.
pub fn tangent_frame(x: &SpherePoint) -> DMatrix<f64> {
    complement_frame(&[x.coords().clone()], x.coords.len())
}

/// Orthonormal basis of `T_z (boundary sphere)`: orthogonal to both `z`
/// and `e_{n+1}`.
pub fn boundary_frame(z: &SpherePoint) -> Result<DMatrix<f64>> {
    if !z.is_boundary() {
        return Err(Error::NotOnBoundary { last: z.height() });
    }
    let dim = z.coords.len();
    let mut e_top = DVector::zeros(dim);
    e_top[dim - 1] = 1.0;
    Ok(complement_frame(&[z.coords().clone(), e_top], dim))
}

fn complement_frame(fixed: &[DVector<f64>], dim: usize) -> DMatrix<f64> {
    let mut basis: Vec<DVector<f64>> = fixed.to_vec();
    let mut candidates: Vec<DVector<f64>> = (0..dim)
        .map(|k| {
            let mut e = DVector::zeros(dim);
            e[k] = 1.0;
            e
        })
        .collect();
    let target = dim - fixed.len();
    let mut frame = Vec::with_capacity(target);
    while frame.len() < target {
        // two passes of modified Gram-Schmidt against everything accepted so far
        for c in candidates.iter_mut() {
            for _ in 0..2 {
                for b in basis.iter() {
                    let proj = c.dot(b);
                    c.axpy(-proj, b, 1.0);
                }
            }
        }
        let (best, _) = candidates.iter().enumerate().map(|(i, c)| (i, c.norm())).fold((0, -1.0), |acc, (i, nrm)| {
            if nrm > acc.1 {
                (i, nrm)
            } else {
                acc
            }
        });
        let chosen = candidates.swap_remove(best);
        let unit = chosen.normalize();
        basis.push(unit.clone());
        frame.push(unit);
    }
    DMatrix::from_columns(&frame)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn pt(c: &[f64]) -> SpherePoint {
        SpherePoint::from_unnormalized(DVector::from_column_slice(c)).unwrap()
    }

    #[test]
    fn distance_identity_and_right_angle() {
        let a = pt(&[0.3, 0.4, 0.5, 0.2, 0.6]);
        assert_eq!(geodesic_distance(&a, &a), 0.0);
        let north = SpherePoint::north_pole(4);
        let eq = pt(&[0.6, 0.8, 0.0, 0.0, 0.0]);
        assert!((geodesic_distance(&north, &eq) - FRAC_PI_2).abs() < 1e-15);
        let e1 = SpherePoint::basis(4, 0);
        let m1 = pt(&[-1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!((geodesic_distance(&e1, &m1) - PI).abs() < 1e-15);
    }

    #[test]
    fn rejects_points_below_equator_and_non_unit() {
        let below = DVector::from_column_slice(&[0.0, 0.6, -0.8]);
        assert!(matches!(SpherePoint::new(below), Err(Error::BelowEquator { .. })));
        let long = DVector::from_column_slice(&[0.0, 0.0, 1.1]);
        assert!(matches!(SpherePoint::new(long), Err(Error::NotUnit { .. })));
    }

    #[test]
    fn boundary_flag_is_frozen_and_snapped() {
        let p = pt(&[1.0, 0.0, 0.0, 0.0, 5e-10]);
        assert!(p.is_boundary());
        assert_eq!(p.height(), 0.0);
        let q = pt(&[1.0, 0.0, 0.0, 0.0, 1e-6]);
        assert!(!q.is_boundary());
    }

    #[test]
    fn tangent_projection_cases() {
        let z = SpherePoint::basis(4, 0);
        assert_eq!(tangent_project(&z, &z).norm(), 0.0);
        let x = SpherePoint::basis(4, 2);
        let t = tangent_project(&x, &z);
        assert!((t.vec() - x.coords()).norm() < 1e-16);

        // x = cos t z + sin t e with e orthogonal to z
        let e = DVector::from_column_slice(&[0.0, 0.6, 0.0, 0.8, 0.0]);
        let angle: f64 = 0.3;
        let x = SpherePoint::new(z.coords() * angle.cos() + &e * angle.sin()).unwrap();
        let t = tangent_project(&x, &z);
        assert!((t.vec() - &e * angle.sin()).norm() < 1e-15);
    }

    #[test]
    fn exp_map_cases() {
        let z = SpherePoint::basis(5, 1);
        let zero = TangentVector::zero(z.clone());
        assert_eq!(exp_map(&z, &zero).unwrap(), z);

        let mut v = DVector::zeros(6);
        v[3] = FRAC_PI_2;
        let quarter = exp_map(&z, &TangentVector::new(z.clone(), v).unwrap()).unwrap();
        assert!(quarter.dot(&z).abs() < 1e-15);

        let mut w = DVector::zeros(6);
        w[0] = 0.06;
        w[2] = -0.08;
        let tv = TangentVector::new(z.clone(), w.clone()).unwrap();
        let y = exp_map(&z, &tv).unwrap();
        let back = tangent_project(&y, &z);
        let expected = &w * (0.1f64.sin() / 0.1);
        assert!((back.vec() - expected).norm() < 1e-15);
        assert!((geodesic_distance(&z, &y) - 0.1).abs() < 1e-15);

        let mut far = DVector::zeros(6);
        far[0] = PI;
        let out = exp_map(&z, &TangentVector::new(z.clone(), far).unwrap());
        assert!(matches!(out, Err(Error::OutOfChart { .. })));
    }

    #[test]
    fn barycenter_cases() {
        let a = pt(&[0.2, 0.5, 0.1, 0.3, 0.7]);
        let b = cluster_barycenter(std::slice::from_ref(&a)).unwrap();
        assert!((b.coords() - a.coords()).norm() < 1e-15);

        // symmetric pair about the boundary point e1
        let z = SpherePoint::basis(4, 0);
        let p = pt(&[0.9, 0.3, 0.0, 0.0, 0.0]);
        let q = pt(&[0.9, -0.3, 0.0, 0.0, 0.0]);
        let c = cluster_barycenter(&[p, q]).unwrap();
        assert!((c.coords() - z.coords()).norm() < 1e-15);
        assert!(c.is_boundary());

        // three points on a small geodesic circle around z
        let frame = boundary_frame(&z).unwrap();
        let pts: Vec<SpherePoint> = (0..3)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / 3.0 + 0.4;
                let v = frame.column(0) * (0.05 * th.cos()) + frame.column(1) * (0.05 * th.sin());
                exp_map(&z, &TangentVector::new(z.clone(), v.into_owned()).unwrap()).unwrap()
            })
            .collect();
        let c = cluster_barycenter(&pts).unwrap();
        assert!(barycenter_residual(&pts, &c) < 1e-10);

        let e = pt(&[1.0, 0.0, 0.0, 0.0, 0.0]);
        let f = pt(&[-1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(matches!(cluster_barycenter(&[e, f]), Err(Error::DegenerateBarycenter { .. })));
        assert!(matches!(cluster_barycenter(&[]), Err(Error::Empty(_))));
    }

    #[test]
    fn frames_are_orthonormal_complements() {
        let x = pt(&[0.1, -0.4, 0.2, 0.5, 0.3, 0.6]);
        let f = tangent_frame(&x);
        assert_eq!(f.ncols(), 5);
        let gram = f.transpose() * &f;
        assert!((gram - DMatrix::identity(5, 5)).norm() < 1e-14);
        assert!((f.transpose() * x.coords()).norm() < 1e-14);

        let z = pt(&[0.3, -0.4, 0.5, 0.2, 0.6, 0.0]);
        let g = boundary_frame(&z).unwrap();
        assert_eq!(g.ncols(), 4);
        assert!((g.transpose() * &g - DMatrix::identity(4, 4)).norm() < 1e-14);
        assert!((g.transpose() * z.coords()).norm() < 1e-14);
        assert!(g.row(5).norm() < 1e-14);
        assert!(boundary_frame(&x).is_err());
    }
}

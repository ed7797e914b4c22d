//! Prescribed curvature `K` as an ambient polynomial restricted to `S^n`.
//!
//! Derivatives are intrinsic: for the restriction `u = P|_{S^n}` at `x`,
//!
//! * `grad u = grad P - <grad P, x> x`
//! * `Hess u = Pi (D^2 P - <grad P, x> I) Pi` with `Pi = I - x x^T`
//! * `Lap u = tr D^2 P - x^T D^2 P x - n <grad P, x>`
//!
//! The boundary restriction `K_1` lives on `{x_{n+1} = 0}`; its gradient
//! drops the `e_{n+1}` component as well. The normal derivative uses the
//! inward normal `e_{n+1}`, so `dK/dnu > 0` means `K` grows into the
//! half-sphere.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    boundary_frame, geodesic_distance, project_boundary_tangent, project_tangent, tangent_frame, SpherePoint,
    TangentVector,
};
use crate::sampling::{boundary_samples, halfsphere_samples};

/// One monomial `coeff * prod_k x_k^{powers[k]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

/// On-disk form of a curvature field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub n: usize,
    pub terms: Vec<Term>,
    pub positivity_floor: f64,
}

/// Number of quasi-random points used to certify `K >= floor`.
pub const POSITIVITY_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    n: usize,
    terms: Vec<Term>,
    positivity_floor: Option<f64>,
}

impl CurvatureField {
    /// Builds the polynomial without the positivity certificate. Useful
    /// for fields such as the height function that vanish on the boundary.
    pub fn new(n: usize, terms: Vec<Term>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidField(format!("dimension n = {n} is too small")));
        }
        for (i, t) in terms.iter().enumerate() {
            if t.powers.len() != n + 1 {
                return Err(Error::InvalidField(format!(
                    "terms[{i}].powers has length {}, expected {}",
                    t.powers.len(),
                    n + 1
                )));
            }
            if !t.coeff.is_finite() {
                return Err(Error::InvalidField(format!("terms[{i}].coeff is not finite")));
            }
        }
        Ok(Self { n, terms, positivity_floor: None })
    }

    /// Builds and certifies a field from configuration: `n >= 5` and
    /// `K >= positivity_floor` on a quasi-random sample of the half-sphere.
    pub fn from_config(cfg: FieldConfig) -> Result<Self> {
        if cfg.n < 5 {
            return Err(Error::InvalidField(format!("dimension n = {} must be at least 5", cfg.n)));
        }
        if !(cfg.positivity_floor > 0.0 && cfg.positivity_floor.is_finite()) {
            return Err(Error::InvalidField(format!("positivity_floor = {} must be positive", cfg.positivity_floor)));
        }
        let mut field = Self::new(cfg.n, cfg.terms)?;
        field.certify_positive(cfg.positivity_floor)?;
        Ok(field)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: FieldConfig = serde_json::from_str(text).map_err(|e| Error::InvalidField(e.to_string()))?;
        Self::from_config(cfg)
    }

    /// Constant field `K = c`.
    pub fn constant(n: usize, c: f64) -> Self {
        Self::new(n, vec![Term { coeff: c, powers: vec![0; n + 1] }]).expect("valid constant field")
    }

    /// `c + sum_k lin[k] x_k + sum_k quad[k] x_k^2`, a convenient builder
    /// for tests and shipped scenarios.
    pub fn affine_quadratic(n: usize, c: f64, lin: &[(usize, f64)], quad: &[(usize, f64)]) -> Self {
        let mut terms = vec![Term { coeff: c, powers: vec![0; n + 1] }];
        for &(k, a) in lin {
            let mut p = vec![0; n + 1];
            p[k] = 1;
            terms.push(Term { coeff: a, powers: p });
        }
        for &(k, a) in quad {
            let mut p = vec![0; n + 1];
            p[k] = 2;
            terms.push(Term { coeff: a, powers: p });
        }
        Self::new(n, terms).expect("valid polynomial field")
    }

    pub fn certify_positive(&mut self, floor: f64) -> Result<()> {
        let mut pts = halfsphere_samples(self.n, POSITIVITY_SAMPLES, 0);
        pts.extend(boundary_samples(self.n, POSITIVITY_SAMPLES / 10, 0));
        let worst =
            pts.iter().map(|p| (self.value(p), p)).min_by(|a, b| a.0.total_cmp(&b.0)).expect("samples are nonempty");
        if !(worst.0 >= floor) {
            return Err(Error::InvalidField(format!(
                "K = {} < positivity_floor = {floor} at {:?}",
                worst.0,
                worst.1.coords().as_slice()
            )));
        }
        self.positivity_floor = Some(floor);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn positivity_floor(&self) -> Option<f64> {
        self.positivity_floor
    }

    pub fn to_config(&self) -> FieldConfig {
        FieldConfig { n: self.n, terms: self.terms.clone(), positivity_floor: self.positivity_floor.unwrap_or(0.0) }
    }

    fn check(&self, x: &DVector<f64>) {
        assert_eq!(x.len(), self.n + 1, "point dimension does not match the field");
    }

    /// `P(x)` at an arbitrary ambient vector.
    pub fn ambient_value(&self, x: &DVector<f64>) -> f64 {
        self.check(x);
        self.terms
            .iter()
            .map(|t| t.coeff * t.powers.iter().enumerate().map(|(k, &m)| x[k].powi(m as i32)).product::<f64>())
            .sum()
    }

    pub fn ambient_gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.check(x);
        let dim = self.n + 1;
        let mut g = DVector::zeros(dim);
        for t in &self.terms {
            for j in 0..dim {
                let mj = t.powers[j];
                if mj == 0 {
                    continue;
                }
                let mut v = t.coeff * mj as f64;
                for (k, &m) in t.powers.iter().enumerate() {
                    let e = if k == j { m - 1 } else { m };
                    v *= x[k].powi(e as i32);
                }
                g[j] += v;
            }
        }
        g
    }

    pub fn ambient_hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        self.check(x);
        let dim = self.n + 1;
        let mut h = DMatrix::zeros(dim, dim);
        for t in &self.terms {
            for i in 0..dim {
                for j in i..dim {
                    let mut pw = t.powers.clone();
                    let mut c = t.coeff;
                    for &d in &[i, j] {
                        if pw[d] == 0 {
                            c = 0.0;
                            break;
                        }
                        c *= pw[d] as f64;
                        pw[d] -= 1;
                    }
                    if c == 0.0 {
                        continue;
                    }
                    let v = c * pw.iter().enumerate().map(|(k, &m)| x[k].powi(m as i32)).product::<f64>();
                    h[(i, j)] += v;
                    if i != j {
                        h[(j, i)] += v;
                    }
                }
            }
        }
        h
    }

    /// `K(x)`.
    pub fn value(&self, x: &SpherePoint) -> f64 {
        self.ambient_value(x.coords())
    }

    /// Intrinsic gradient of `K` at `x`, as an ambient tangent vector.
    pub fn gradient(&self, x: &SpherePoint) -> TangentVector {
        let g = self.ambient_gradient(x.coords());
        TangentVector::from_parts_unchecked(x.clone(), project_tangent(&g, x.coords()))
    }

    /// Riemannian Hessian of `K` at `x`, as an ambient `(n+1) x (n+1)`
    /// operator supported on `T_x S^n`.
    pub fn hessian_ambient(&self, x: &SpherePoint) -> DMatrix<f64> {
        let dim = self.n + 1;
        let xc = x.coords();
        let g = self.ambient_gradient(xc);
        let h = self.ambient_hessian(xc) - DMatrix::identity(dim, dim) * g.dot(xc);
        let pi = DMatrix::identity(dim, dim) - xc * xc.transpose();
        &pi * h * &pi
    }

    /// Riemannian Hessian in the orthonormal frame returned by [`tangent_frame`].
    pub fn hessian(&self, x: &SpherePoint) -> DMatrix<f64> {
        let e = tangent_frame(x);
        self.hessian_in_frame(x, &e)
    }

    fn hessian_in_frame(&self, x: &SpherePoint, e: &DMatrix<f64>) -> DMatrix<f64> {
        let dim = self.n + 1;
        let xc = x.coords();
        let g = self.ambient_gradient(xc);
        let h = self.ambient_hessian(xc) - DMatrix::identity(dim, dim) * g.dot(xc);
        let out = e.transpose() * h * e;
        (&out + out.transpose()) * 0.5
    }

    /// Laplace-Beltrami operator of `K` at `x`.
    pub fn laplacian(&self, x: &SpherePoint) -> f64 {
        let xc = x.coords();
        let g = self.ambient_gradient(xc);
        let h = self.ambient_hessian(xc);
        h.trace() - (xc.transpose() * &h * xc)[(0, 0)] - self.n as f64 * g.dot(xc)
    }

    /// Derivative along the inward normal `e_{n+1}` at a boundary point.
    pub fn normal_derivative(&self, z: &SpherePoint) -> Result<f64> {
        if !z.is_boundary() {
            return Err(Error::NotOnBoundary { last: z.height() });
        }
        Ok(self.ambient_gradient(z.coords())[self.n])
    }

    /// `K_1(z)`, the value of the boundary restriction.
    pub fn boundary_value(&self, z: &SpherePoint) -> Result<f64> {
        if !z.is_boundary() {
            return Err(Error::NotOnBoundary { last: z.height() });
        }
        Ok(self.value(z))
    }

    /// Gradient of `K_1` on the boundary sphere, as an ambient vector
    /// orthogonal to `z` and `e_{n+1}`.
    pub fn boundary_gradient(&self, z: &SpherePoint) -> Result<TangentVector> {
        if !z.is_boundary() {
            return Err(Error::NotOnBoundary { last: z.height() });
        }
        let g = self.ambient_gradient(z.coords());
        Ok(TangentVector::from_parts_unchecked(z.clone(), project_boundary_tangent(&g, z.coords())))
    }

    /// `D^2 K_1(z)` in the frame returned by [`boundary_frame`].
    pub fn boundary_hessian(&self, z: &SpherePoint) -> Result<DMatrix<f64>> {
        let f = boundary_frame(z)?;
        Ok(self.hessian_in_frame(z, &f))
    }

    /// `D^2 K_1(z)` as an ambient operator supported on the boundary tangent space.
    pub fn boundary_hessian_ambient(&self, z: &SpherePoint) -> Result<DMatrix<f64>> {
        let f = boundary_frame(z)?;
        let h = self.hessian_in_frame(z, &f);
        Ok(&f * h * f.transpose())
    }

    /// Intrinsic gradient norm of `K` (interior) or `K_1` (boundary).
    pub fn gradient_norm(&self, x: &SpherePoint, kind: PointKind) -> Result<f64> {
        match kind {
            PointKind::Interior => Ok(self.gradient(x).norm()),
            PointKind::Boundary => Ok(self.boundary_gradient(x)?.norm()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Interior,
    Boundary,
}

impl std::fmt::Display for PointKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PointKind::Interior => "interior",
            PointKind::Boundary => "boundary",
        })
    }
}

/// A nondegenerate critical point of `K` (interior) or `K_1` (boundary).
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPointRecord {
    pub location: SpherePoint,
    pub kind: PointKind,
    /// `Lap K`, meaningful for interior points.
    pub laplacian: f64,
    /// Inward `dK/dnu`, meaningful for boundary points.
    pub normal_derivative: f64,
    /// `Hess K` (n x n) or `D^2 K_1` ((n-1) x (n-1)) in the canonical frame.
    pub hessian_tangential: DMatrix<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub min_singular_value: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct CriticalSearchOptions {
    pub grad_tol: f64,
    pub singular_tol: f64,
    pub dedup_tol: f64,
    pub starts: usize,
    pub seed: u64,
    pub max_iter: usize,
}

impl Default for CriticalSearchOptions {
    fn default() -> Self {
        Self { grad_tol: 1e-9, singular_tol: 1e-8, dedup_tol: 1e-6, starts: 256, seed: 0, max_iter: 100 }
    }
}

/// Outcome of [`find_critical_points`].
#[derive(Debug, Clone, Default)]
pub struct CriticalSearch {
    pub records: Vec<CriticalPointRecord>,
    /// Converged points whose Hessian fails the singular value test.
    pub degenerate: Vec<SpherePoint>,
    /// Starts that did not converge.
    pub failed: usize,
    /// Interior runs that converged onto the boundary sphere.
    pub left_domain: usize,
}

impl CurvatureField {
    /// Builds the record at `x`, validating the record invariants.
    pub fn critical_record(
        &self,
        x: &SpherePoint,
        kind: PointKind,
        opts: &CriticalSearchOptions,
    ) -> Result<CriticalPointRecord> {
        let (hess, gnorm) = match kind {
            PointKind::Interior => {
                if x.is_boundary() {
                    return Err(Error::OnBoundary);
                }
                (self.hessian(x), self.gradient(x).norm())
            }
            PointKind::Boundary => (self.boundary_hessian(x)?, self.boundary_gradient(x)?.norm()),
        };
        let smin = hess.singular_values().min();
        if gnorm >= opts.grad_tol {
            return Err(Error::Precondition(format!("gradient norm {gnorm:e} is not below {:e}", opts.grad_tol)));
        }
        if smin <= opts.singular_tol {
            return Err(Error::Precondition(format!("degenerate critical point: smallest singular value {smin:e}")));
        }
        Ok(CriticalPointRecord {
            location: x.clone(),
            kind,
            laplacian: self.laplacian(x),
            normal_derivative: if x.is_boundary() { self.normal_derivative(x)? } else { 0.0 },
            hessian_tangential: hess,
            value: self.value(x),
            gradient_norm: gnorm,
            min_singular_value: smin,
        })
    }
}

enum RunEnd {
    Converged(SpherePoint),
    Failed,
}

fn newton_run(field: &CurvatureField, start: SpherePoint, kind: PointKind, max_iter: usize) -> RunEnd {
    let mut x = start;
    let grad = |p: &SpherePoint| -> (DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
        let frame = match kind {
            PointKind::Interior => tangent_frame(p),
            PointKind::Boundary => boundary_frame(p).expect("iterate stays on the boundary"),
        };
        let g = frame.transpose() * field.ambient_gradient(p.coords());
        let h = field.hessian_in_frame(p, &frame);
        (frame, g, h)
    };
    for _ in 0..max_iter {
        let (frame, g, h) = grad(&x);
        let gn = g.norm();
        if gn < 1e-14 * (1.0 + field.value(&x).abs()) {
            break;
        }
        let svd = h.clone().svd(true, true);
        let cut = 1e-12 * svd.singular_values.max().max(1e-300);
        let step = match svd.pseudo_inverse(cut) {
            Ok(pinv) => -(pinv * &g),
            Err(_) => return RunEnd::Failed,
        };
        // backtracking on the gradient norm
        let mut t = 1.0;
        let mut accepted = None;
        while t >= 1e-6 {
            let v = &frame * (&step * t);
            let cand = retract(&x, &v, kind);
            if let Some(c) = cand {
                let (_, gc, _) = grad(&c);
                if gc.norm() < gn {
                    accepted = Some(c);
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some(c) => x = c,
            None => break,
        }
    }
    RunEnd::Converged(x)
}

fn retract(x: &SpherePoint, v: &DVector<f64>, kind: PointKind) -> Option<SpherePoint> {
    let t = v.norm();
    if t >= std::f64::consts::PI {
        return None;
    }
    let mut y = if t == 0.0 { x.coords().clone() } else { x.coords() * t.cos() + v * (t.sin() / t) };
    if kind == PointKind::Boundary {
        let k = y.len() - 1;
        y[k] = 0.0;
    }
    let norm = y.norm();
    y /= norm;
    if kind == PointKind::Interior && y[y.len() - 1] < -crate::geometry::BOUNDARY_TOL {
        // the step would leave the closed half-sphere
        return None;
    }
    SpherePoint::new(y).ok()
}

/// Multistart Newton search for critical points of `K` in the open
/// half-sphere (`Interior`) or of `K_1` on the boundary sphere (`Boundary`).
///
/// Results are deduplicated within `opts.dedup_tol` and sorted by
/// coordinates, so the output does not depend on thread scheduling.
pub fn find_critical_points(field: &CurvatureField, kind: PointKind, opts: &CriticalSearchOptions) -> CriticalSearch {
    let starts = match kind {
        PointKind::Interior => halfsphere_samples(field.n, opts.starts, opts.seed),
        PointKind::Boundary => boundary_samples(field.n, opts.starts, opts.seed),
    };
    let ends: Vec<RunEnd> = starts.into_par_iter().map(|s| newton_run(field, s, kind, opts.max_iter)).collect();

    let mut out = CriticalSearch::default();
    let mut good: Vec<SpherePoint> = Vec::new();
    let mut degenerate: Vec<SpherePoint> = Vec::new();
    for end in ends {
        let x = match end {
            RunEnd::Converged(x) => x,
            RunEnd::Failed => {
                out.failed += 1;
                continue;
            }
        };
        if kind == PointKind::Interior && x.is_boundary() {
            out.left_domain += 1;
            continue;
        }
        let gnorm = field.gradient_norm(&x, kind).unwrap_or(f64::INFINITY);
        if !(gnorm < opts.grad_tol) {
            out.failed += 1;
            continue;
        }
        let hess = match kind {
            PointKind::Interior => field.hessian(&x),
            PointKind::Boundary => field.boundary_hessian(&x).expect("boundary iterate"),
        };
        let target = if hess.singular_values().min() > opts.singular_tol { &mut good } else { &mut degenerate };
        if !target.iter().any(|p| geodesic_distance(p, &x) < opts.dedup_tol) {
            target.push(x);
        }
    }
    sort_points(&mut good);
    sort_points(&mut degenerate);
    out.records = good.iter().filter_map(|x| field.critical_record(x, kind, opts).ok()).collect();
    out.degenerate = degenerate;
    out
}

fn sort_points(points: &mut [SpherePoint]) {
    points.sort_by(|a, b| {
        for (x, y) in a.coords().iter().zip(b.coords().iter()) {
            // coordinates closer than the dedup scale compare equal
            if (x - y).abs() > 1e-7 {
                return x.total_cmp(y);
            }
        }
        std::cmp::Ordering::Equal
    });
}

/// `|K_1(a)^{-n/2} dK_1(a)[h - <a,h>a] + K_1(h)^{-n/2} dK_1(h)[a - <a,h>h]|`.
pub fn symmetry_defect_der_k(field: &CurvatureField, a: &SpherePoint, h: &SpherePoint) -> Result<f64> {
    let n = field.n as f64;
    let ga = field.boundary_gradient(a)?;
    let gh = field.boundary_gradient(h)?;
    let ah = a.dot(h);
    let va = h.coords() - a.coords() * ah;
    let vh = a.coords() - h.coords() * ah;
    let ka = field.value(a);
    let kh = field.value(h);
    Ok((ka.powf(-n / 2.0) * ga.vec().dot(&va) + kh.powf(-n / 2.0) * gh.vec().dot(&vh)).abs())
}

/// `|dK_1(a)[e - <a,e>a]/K_1(a) - D^2K_1(z)(a - <a,z>z, e - <e,z>z)/K_1(z)|`.
pub fn second_identity_defect(
    field: &CurvatureField,
    a: &SpherePoint,
    z: &SpherePoint,
    e: &SpherePoint,
) -> Result<f64> {
    let ga = field.boundary_gradient(a)?;
    let hz = field.boundary_hessian_ambient(z)?;
    let lhs = ga.vec().dot(&(e.coords() - a.coords() * a.dot(e))) / field.value(a);
    let u = a.coords() - z.coords() * a.dot(z);
    let w = e.coords() - z.coords() * e.dot(z);
    let rhs = (u.transpose() * hz * w)[(0, 0)] / field.value(z);
    Ok((lhs - rhs).abs())
}

//! Standard bubbles, interaction coefficients and their derivatives.
//!
//! All chord quantities use `1 - cos d(a, b) = |a - b|^2 / 2`, which keeps
//! full precision for nearby points.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::constants::c0;
use crate::error::{Error, Result};
use crate::geometry::{project_tangent, SpherePoint, TangentVector};

/// Default interaction smallness.
pub const DEFAULT_TAU: f64 = 0.1;
/// Default lower bound on concentration rates.
pub const DEFAULT_LAMBDA_FLOOR: f64 = 10.0;

/// One concentration triple `(a, lambda, alpha)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BubbleParam {
    pub a: SpherePoint,
    pub lambda: f64,
    pub alpha: f64,
    pub boundary: bool,
}

impl BubbleParam {
    /// The boundary flag is inherited from the point.
    pub fn new(a: SpherePoint, lambda: f64, alpha: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Precondition(format!("lambda = {lambda} must be positive")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Precondition(format!("alpha = {alpha} must be positive")));
        }
        let boundary = a.is_boundary();
        Ok(Self { a, lambda, alpha, boundary })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// Checks the neighbourhood condition `lambda > 1/tau`.
    pub fn validate(&self, tau: f64) -> Result<()> {
        if self.lambda <= 1.0 / tau {
            return Err(Error::Precondition(format!("lambda = {} does not exceed 1/tau = {}", self.lambda, 1.0 / tau)));
        }
        if self.boundary && self.a.height().abs() > crate::geometry::BOUNDARY_TOL {
            return Err(Error::NotOnBoundary { last: self.a.height() });
        }
        Ok(())
    }
}

fn half_chord2(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    // 1 - cos d(a, b)
    0.5 * (a - b).norm_squared()
}

/// `delta_{a,lambda}(x)`.
pub fn bubble_value(a: &SpherePoint, lambda: f64, x: &SpherePoint) -> f64 {
    let n = a.dim() as f64;
    let one_minus_cos = half_chord2(a.coords(), x.coords());
    let denom = 2.0 + (lambda * lambda - 1.0) * one_minus_cos;
    c0(a.dim()) * (lambda / denom).powf((n - 2.0) / 2.0)
}

fn eps_core(li: f64, lj: f64, one_minus_cos: f64) -> f64 {
    li / lj + lj / li + 0.5 * li * lj * one_minus_cos
}

/// `eps_ij = (lambda_i/lambda_j + lambda_j/lambda_i + lambda_i lambda_j (1 - cos d)/2)^{(2-n)/2}`.
pub fn interaction_eps(pi: &BubbleParam, pj: &BubbleParam) -> f64 {
    let n = pi.dim() as f64;
    let x = eps_core(pi.lambda, pj.lambda, half_chord2(pi.a.coords(), pj.a.coords()));
    x.powf((2.0 - n) / 2.0)
}

/// `lambda_i d eps_ij / d lambda_i`.
pub fn d_eps_d_lambda(pi: &BubbleParam, pj: &BubbleParam) -> f64 {
    let n = pi.dim() as f64;
    let (li, lj) = (pi.lambda, pj.lambda);
    let omc = half_chord2(pi.a.coords(), pj.a.coords());
    let x = eps_core(li, lj, omc);
    let num = li / lj - lj / li + 0.5 * li * lj * omc;
    (2.0 - n) / 2.0 * x.powf((2.0 - n) / 2.0) * num / x
}

/// `d eps_ij / d a_i`, the gradient on the sphere at `a_i`.
///
/// The ambient derivative `(n-2)/4 lambda_i lambda_j eps^{n/(n-2)} a_j` is
/// projected onto `T_{a_i} S^n`. When both points lie on the boundary the
/// result is tangent to the boundary sphere as well.
pub fn d_eps_d_a(pi: &BubbleParam, pj: &BubbleParam) -> TangentVector {
    let vec = d_eps_d_a_vec(pi, pj);
    TangentVector::from_parts_unchecked(pi.a.clone(), vec)
}

fn d_eps_d_a_vec(pi: &BubbleParam, pj: &BubbleParam) -> DVector<f64> {
    let n = pi.dim() as f64;
    let eps = interaction_eps(pi, pj);
    let scale = (n - 2.0) / 4.0 * pi.lambda * pj.lambda * eps.powf(n / (n - 2.0));
    project_tangent(pj.a.coords(), pi.a.coords()) * scale
}

/// Far-field form `(lambda_i lambda_j d^2 / 4)^{(2-n)/2}` of `eps_ij`.
pub fn far_field_eps(n: usize, li: f64, lj: f64, d: f64) -> f64 {
    (li * lj * d * d / 4.0).powf((2.0 - n as f64) / 2.0)
}

/// Pairing of the `a`-derivatives with the directions towards `h`:
/// `d eps/d a_i (h - <a_i,h> a_i) + d eps/d a_j (h - <a_j,h> a_j)`.
pub fn barycentric_pairing(pi: &BubbleParam, pj: &BubbleParam, h: &SpherePoint) -> f64 {
    let n = pi.dim() as f64;
    let eps = interaction_eps(pi, pj);
    let scale = (n - 2.0) / 4.0 * pi.lambda * pj.lambda * eps.powf(n / (n - 2.0));
    let omc = half_chord2(pi.a.coords(), pj.a.coords());
    // <a_j, h - <a_i,h>a_i> + <a_i, h - <a_j,h>a_j> = (<a_i,h> + <a_j,h>)(1 - <a_i,a_j>)
    scale * (pi.a.dot(h) + pj.a.dot(h)) * omc
}

/// Pairwise interaction data of a bubble configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    pub eps: DMatrix<f64>,
    /// `lambda_i d eps_ij / d lambda_i` (row `i`, column `j`).
    pub dlam: DMatrix<f64>,
    /// `(1/lambda_i) d eps_ij / d a_i`, ambient tangent vectors at `a_i`.
    pub da: Vec<Vec<DVector<f64>>>,
}

impl InteractionMatrix {
    pub fn assemble(params: &[BubbleParam]) -> Self {
        let n = params.len();
        let dim = params.first().map_or(0, |p| p.dim() + 1);
        let rows: Vec<(Vec<f64>, Vec<f64>, Vec<DVector<f64>>)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut e = vec![0.0; n];
                let mut l = vec![0.0; n];
                let mut d = vec![DVector::zeros(dim); n];
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    e[j] = interaction_eps(&params[i], &params[j]);
                    l[j] = d_eps_d_lambda(&params[i], &params[j]);
                    d[j] = d_eps_d_a_vec(&params[i], &params[j]) / params[i].lambda;
                }
                (e, l, d)
            })
            .collect();
        let mut eps = DMatrix::zeros(n, n);
        let mut dlam = DMatrix::zeros(n, n);
        let mut da = Vec::with_capacity(n);
        for (i, (e, l, d)) in rows.into_iter().enumerate() {
            for j in 0..n {
                eps[(i, j)] = e[j];
                dlam[(i, j)] = l[j];
            }
            da.push(d);
        }
        // enforce exact symmetry
        for i in 0..n {
            for j in 0..i {
                eps[(i, j)] = eps[(j, i)];
            }
        }
        Self { eps, dlam, da }
    }

    /// Checks `0 < eps_ij < tau` off the diagonal.
    pub fn check_small(&self, tau: f64) -> Result<()> {
        let n = self.eps.nrows();
        for i in 0..n {
            for j in 0..n {
                if i != j && !(self.eps[(i, j)] > 0.0 && self.eps[(i, j)] < tau) {
                    return Err(Error::Precondition(format!(
                        "eps[{i}][{j}] = {} outside (0, {tau})",
                        self.eps[(i, j)]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Regular part of the Neumann Green function of the half-sphere:
/// `H(a, b) = (1 - <a*, b>)^{(2-n)/2}` with `a*` the mirror image of `a`
/// across the boundary hyperplane.
///
/// Through stereographic projection this is the image-charge term of the
/// half-space Neumann Green function, carried back with the conformal
/// factors; `delta + c0 H / lambda^{(n-2)/2}` is then the first correction
/// of a bubble towards its Neumann projection.
pub fn green_regular_part(a: &SpherePoint, b: &SpherePoint) -> Result<f64> {
    if a.is_boundary() || b.is_boundary() {
        return Err(Error::OnBoundary);
    }
    Ok(green_image(a, b))
}

fn green_image(a: &SpherePoint, x: &SpherePoint) -> f64 {
    let n = a.dim() as f64;
    let inner = a.dot(x) - 2.0 * a.height() * x.height();
    (1.0 - inner).powf((2.0 - n) / 2.0)
}

/// Bounds and first-order expansion of the projected bubble at `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub lower: f64,
    pub upper: f64,
    /// `delta + c0 H(a, x) / lambda^{(n-2)/2}`.
    pub approx: f64,
    /// The `H` correction alone.
    pub correction: f64,
    /// Size allowed for the second-order remainder of the expansion.
    pub slack: f64,
    /// `lambda d(a, boundary)`; infinite for boundary centres.
    pub lambda_d: f64,
}

impl Envelope {
    pub fn contains_approx(&self) -> bool {
        self.approx >= self.lower && self.approx <= self.upper + self.slack
    }
}

/// Envelope `delta <= phi <= 2 delta` of the projected bubble together with
/// its expansion. For a boundary centre the bubble already satisfies the
/// Neumann condition and everything collapses to `delta`.
///
/// Near the boundary hyperplane the expansion can overshoot `2 delta` by a
/// relative amount of order `(lambda d_a)^{-2}`; `slack` is
/// `4(n-2)/(lambda d_a)^2` times the correction.
pub fn projected_bubble_envelope(a: &SpherePoint, lambda: f64, x: &SpherePoint) -> Envelope {
    let delta = bubble_value(a, lambda, x);
    if a.is_boundary() {
        return Envelope {
            lower: delta,
            upper: delta,
            approx: delta,
            correction: 0.0,
            slack: 0.0,
            lambda_d: f64::INFINITY,
        };
    }
    let nd = a.dim();
    let n = nd as f64;
    let correction = c0(nd) * green_image(a, x) / lambda.powf((n - 2.0) / 2.0);
    let lambda_d = lambda * a.distance_to_boundary();
    let slack = 4.0 * (n - 2.0) / (lambda_d * lambda_d) * correction;
    Envelope { lower: delta, upper: 2.0 * delta, approx: delta + correction, correction, slack, lambda_d }
}

/// Defect of the first-order expansion of `delta^{-eps}` at `x`:
/// `|delta^{-eps} - c0^{-eps} lambda^{-eps(n-2)/2} (1 + (n-2)/2 eps L)|`,
/// `L = ln(2 + (lambda^2 - 1)(1 - cos d))`.
pub fn subcritical_expansion_check(a: &SpherePoint, lambda: f64, eps: f64, x: &SpherePoint) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(Error::Precondition(format!("eps = {eps} must be nonnegative")));
    }
    if !(lambda > 0.0) {
        return Err(Error::Precondition(format!("lambda = {lambda} must be positive")));
    }
    if eps * lambda.ln() >= 0.1 {
        return Err(Error::Precondition(format!("eps ln(lambda) = {} is not below 0.1", eps * lambda.ln())));
    }
    let nd = a.dim();
    let n = nd as f64;
    let log_term = (2.0 + (lambda * lambda - 1.0) * half_chord2(a.coords(), x.coords())).ln();
    let u = eps * (n - 2.0) / 2.0 * log_term;
    let prefactor = c0(nd).powf(-eps) * lambda.powf(-eps * (n - 2.0) / 2.0);
    // e^u - 1 - u without cancellation
    Ok(prefactor * (u.exp_m1() - u).abs())
}

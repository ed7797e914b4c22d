//! The Kirchhoff-Routh function
//!
//! `F(xi_1, .., xi_m) = 1/2 sum_i Q xi_i . xi_i + sum_{i<j} |xi_i - xi_j|^{2-n}`
//!
//! on `m` distinct points of `R^{n-1}` (intrinsic coordinates of the tangent
//! space of the boundary sphere at a point `z`), with `Q = D^2 K_1(z)`.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{boundary_frame, SpherePoint};

/// Separation below which a configuration counts as coincident.
pub const COINCIDENT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct KirchhoffRouth {
    n: usize,
    q: DMatrix<f64>,
}

impl KirchhoffRouth {
    pub fn new(n: usize, q: DMatrix<f64>) -> Result<Self> {
        if n < 3 {
            return Err(Error::Precondition(format!("dimension n = {n} is too small")));
        }
        let d = n - 1;
        if q.nrows() != d || q.ncols() != d {
            return Err(Error::InvalidMatrix(format!("Q is {}x{}, expected {d}x{d}", q.nrows(), q.ncols())));
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix("Q has non-finite entries".into()));
        }
        let asym = (&q - q.transpose()).amax();
        if asym > 1e-12 {
            return Err(Error::InvalidMatrix(format!("Q is not symmetric (max |Q - Q^T| = {asym:e})")));
        }
        Ok(Self { n, q })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Intrinsic dimension `n - 1`.
    pub fn d(&self) -> usize {
        self.n - 1
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// Spectral norm of `Q`.
    pub fn q_norm(&self) -> f64 {
        self.q.clone().symmetric_eigenvalues().amax()
    }

    /// `(m (n-2) / |Q|)^{1/n}`, the length scale fixed by the virial identity.
    pub fn length_scale(&self, m: usize) -> f64 {
        (m as f64 * (self.n as f64 - 2.0) / self.q_norm()).powf(1.0 / self.n as f64)
    }

    fn check(&self, xi: &[DVector<f64>]) -> Result<()> {
        for x in xi {
            if x.len() != self.d() {
                return Err(Error::DimensionMismatch { expected: self.d(), got: x.len() });
            }
        }
        let sep = min_separation(xi);
        if sep < COINCIDENT_TOL {
            return Err(Error::CoincidentPoints { separation: sep });
        }
        Ok(())
    }

    pub fn energy(&self, xi: &[DVector<f64>]) -> Result<f64> {
        self.check(xi)?;
        let (quad, inter) = self.parts(xi);
        Ok(0.5 * quad + inter)
    }

    /// `(sum_i Q xi_i . xi_i, sum_{i<j} |xi_i - xi_j|^{2-n})`.
    pub fn parts(&self, xi: &[DVector<f64>]) -> (f64, f64) {
        let p = 2.0 - self.n as f64;
        let quad = xi.iter().map(|x| (&self.q * x).dot(x)).sum();
        let mut inter = 0.0;
        for (i, j) in (0..xi.len()).tuple_combinations() {
            inter += (&xi[i] - &xi[j]).norm().powf(p);
        }
        (quad, inter)
    }

    /// `Q xi_i - (n-2) sum_{j != i} (xi_i - xi_j)/|xi_i - xi_j|^n`.
    pub fn gradient(&self, xi: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
        self.check(xi)?;
        Ok(self.gradient_unchecked(xi))
    }

    fn gradient_unchecked(&self, xi: &[DVector<f64>]) -> Vec<DVector<f64>> {
        let nf = self.n as f64;
        let mut g: Vec<DVector<f64>> = xi.iter().map(|x| &self.q * x).collect();
        for (i, j) in (0..xi.len()).tuple_combinations() {
            let diff = &xi[i] - &xi[j];
            let r = diff.norm();
            let f = diff * ((nf - 2.0) / r.powf(nf));
            g[i] -= &f;
            g[j] += &f;
        }
        g
    }

    /// Hessian of `F` as an `m(n-1)` square matrix, blocks ordered by point.
    pub fn hessian(&self, xi: &[DVector<f64>]) -> Result<DMatrix<f64>> {
        self.check(xi)?;
        Ok(self.hessian_unchecked(xi))
    }

    fn hessian_unchecked(&self, xi: &[DVector<f64>]) -> DMatrix<f64> {
        let d = self.d();
        let m = xi.len();
        let nf = self.n as f64;
        let mut h = DMatrix::zeros(m * d, m * d);
        for i in 0..m {
            h.view_mut((i * d, i * d), (d, d)).copy_from(&self.q);
        }
        for (i, j) in (0..m).tuple_combinations() {
            let diff = &xi[i] - &xi[j];
            let r = diff.norm();
            let u = &diff / r;
            // Hessian of r^{2-n} with respect to xi_i
            let block = (DMatrix::identity(d, d) - &u * u.transpose() * nf) * ((2.0 - nf) / r.powf(nf));
            let mut ii = h.view_mut((i * d, i * d), (d, d));
            ii += &block;
            let mut jj = h.view_mut((j * d, j * d), (d, d));
            jj += &block;
            let mut ij = h.view_mut((i * d, j * d), (d, d));
            ij -= &block;
            let mut ji = h.view_mut((j * d, i * d), (d, d));
            ji -= &block;
        }
        h
    }

    /// `sum_i Q xi_i . xi_i - (n-2) sum_{i<j} |xi_i - xi_j|^{2-n}`, which equals
    /// `d/dt F(t xi)` at `t = 1` and vanishes at every critical point.
    pub fn virial_residual(&self, xi: &[DVector<f64>]) -> f64 {
        let (quad, inter) = self.parts(xi);
        quad - (self.n as f64 - 2.0) * inter
    }
}

pub fn min_separation(xi: &[DVector<f64>]) -> f64 {
    (0..xi.len()).tuple_combinations().map(|(i, j)| (&xi[i] - &xi[j]).norm()).fold(f64::INFINITY, f64::min)
}

pub fn flatten(xi: &[DVector<f64>]) -> DVector<f64> {
    let d = xi.first().map_or(0, |x| x.len());
    let mut out = DVector::zeros(xi.len() * d);
    for (i, x) in xi.iter().enumerate() {
        out.rows_mut(i * d, d).copy_from(x);
    }
    out
}

pub fn unflatten(x: &DVector<f64>, d: usize) -> Vec<DVector<f64>> {
    (0..x.len() / d).map(|i| x.rows(i * d, d).into_owned()).collect()
}

/// `m` points in the tangent space of the boundary sphere at `z`, in the
/// intrinsic coordinates of `boundary_frame(z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VortexConfiguration {
    pub z: SpherePoint,
    pub xi: Vec<DVector<f64>>,
    pub q: DMatrix<f64>,
    frame: DMatrix<f64>,
}

impl VortexConfiguration {
    pub fn new(z: SpherePoint, xi: Vec<DVector<f64>>, q: DMatrix<f64>) -> Result<Self> {
        let frame = boundary_frame(&z)?;
        let kr = KirchhoffRouth::new(z.dim(), q.clone())?;
        kr.check(&xi)?;
        Ok(Self { z, xi, q, frame })
    }

    /// Builds the configuration from ambient tangent vectors at `z`.
    pub fn from_ambient(z: SpherePoint, vecs: &[DVector<f64>], q: DMatrix<f64>) -> Result<Self> {
        let frame = boundary_frame(&z)?;
        let mut xi = Vec::with_capacity(vecs.len());
        for v in vecs {
            if v.len() != z.dim() + 1 {
                return Err(Error::DimensionMismatch { expected: z.dim() + 1, got: v.len() });
            }
            let local = frame.transpose() * v;
            let back = &frame * &local;
            let off = (v - back).norm();
            if off > 1e-10 * v.norm().max(1.0) {
                return Err(Error::NotTangent { inner: off });
            }
            xi.push(local);
        }
        Self::new(z, xi, q)
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    /// The points as ambient vectors tangent to the boundary sphere at `z`.
    pub fn ambient(&self) -> Vec<DVector<f64>> {
        self.xi.iter().map(|x| &self.frame * x).collect()
    }

    pub fn functional(&self) -> KirchhoffRouth {
        KirchhoffRouth::new(self.z.dim(), self.q.clone()).expect("validated at construction")
    }
}

/// Result of one damped Newton run.
#[derive(Debug, Clone)]
pub struct NewtonTrace {
    pub iterates: Vec<DVector<f64>>,
    pub grad_norms: Vec<f64>,
    pub outcome: NewtonOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NewtonOutcome {
    Converged,
    Stalled,
    Diverged,
    Collapsed,
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub grad_tol: f64,
    pub max_iter: usize,
    pub min_step: f64,
    pub separation_guard: f64,
    /// Runs leaving the ball of this radius are declared divergent.
    pub divergence_radius: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { grad_tol: 1e-10, max_iter: 200, min_step: 1e-12, separation_guard: 1e-8, divergence_radius: 1e6 }
    }
}

/// Damped Newton iteration on `grad F = 0`.
///
/// Steps use the SVD pseudo-inverse of the Hessian, since isotropic `Q`
/// leaves rotation zero modes. Step lengths are halved until `|grad F|`
/// decreases and no pair comes closer than `opts.separation_guard`.
pub fn newton_solve(kr: &KirchhoffRouth, start: &[DVector<f64>], opts: &NewtonOptions) -> NewtonTrace {
    let d = kr.d();
    let mut x = flatten(start);
    let mut iterates = vec![x.clone()];
    let mut grad_norms = Vec::new();
    let grad_at = |x: &DVector<f64>| flatten(&kr.gradient_unchecked(&unflatten(x, d)));
    let mut g = grad_at(&x);
    let mut gn = g.norm();
    grad_norms.push(gn);
    let mut outcome = NewtonOutcome::Stalled;
    for _ in 0..opts.max_iter {
        if gn < opts.grad_tol * 1e-3 {
            outcome = NewtonOutcome::Converged;
            break;
        }
        let h = kr.hessian_unchecked(&unflatten(&x, d));
        let svd = h.svd(true, true);
        let cut = 1e-12 * svd.singular_values.max().max(1e-300);
        let step = match svd.pseudo_inverse(cut) {
            Ok(p) => -(p * &g),
            Err(_) => break,
        };
        let mut t = 1.0;
        let mut next = None;
        while t >= opts.min_step {
            let cand = &x + &step * t;
            if min_separation(&unflatten(&cand, d)) >= opts.separation_guard {
                let gc = grad_at(&cand);
                let gcn = gc.norm();
                if gcn.is_finite() && gcn < gn {
                    next = Some((cand, gc, gcn));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((cand, gc, gcn)) = next else {
            break;
        };
        x = cand;
        g = gc;
        gn = gcn;
        iterates.push(x.clone());
        grad_norms.push(gn);
        if x.amax() > opts.divergence_radius {
            outcome = NewtonOutcome::Diverged;
            break;
        }
    }
    if outcome == NewtonOutcome::Stalled && gn < opts.grad_tol {
        // no further decrease possible, but already below tolerance
        outcome = NewtonOutcome::Converged;
    }
    if outcome != NewtonOutcome::Diverged && min_separation(&unflatten(&x, d)) < 1e-6 {
        outcome = NewtonOutcome::Collapsed;
    }
    NewtonTrace { iterates, grad_norms, outcome }
}

/// A critical point reported by [`find_critical_points`].
#[derive(Debug, Clone, PartialEq)]
pub struct VortexCritical {
    pub xi: Vec<DVector<f64>>,
    pub energy: f64,
    pub virial_residual: f64,
    pub grad_norm: f64,
    pub morse_index: usize,
    /// Hessian eigenvalues within `1e-8 |H|` of zero (symmetry directions).
    pub nullity: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchDiagnostics {
    pub starts: usize,
    pub converged: usize,
    pub diverged: usize,
    pub stalled: usize,
    pub collapsed: usize,
    pub virial_rejected: usize,
    pub duplicates: usize,
}

#[derive(Debug, Clone)]
pub struct VortexSearch {
    pub points: Vec<VortexCritical>,
    pub diagnostics: SearchDiagnostics,
    pub length_scale: f64,
}

/// Acceptance thresholds of the search.
pub const ACCEPT_GRAD: f64 = 1e-10;
pub const ACCEPT_SEPARATION: f64 = 1e-6;
pub const VIRIAL_REJECT: f64 = 1e-6;

/// Random start: each point has a uniform direction and a radius uniform in
/// `[0.3 rho, 3 rho]`. Every start index uses its own ChaCha stream.
pub fn random_start(d: usize, m: usize, rho: f64, seed: u64, index: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    (0..m)
        .map(|_| {
            let dir = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            let r = rng.random_range(0.3 * rho..=3.0 * rho);
            let nrm = dir.norm().max(1e-300);
            dir * (r / nrm)
        })
        .collect()
}

/// Multistart damped Newton search for critical points of `F` with `m` points.
///
/// Accepted points have `|grad F| < 1e-10`, minimal separation above `1e-6`
/// and virial residual within `1e-6`. Duplicates are merged modulo
/// relabelling and modulo orthogonal maps commuting with `Q`; output is
/// sorted by energy, then coordinates.
pub fn find_critical_points(kr: &KirchhoffRouth, m: usize, starts: usize, seed: u64) -> Result<VortexSearch> {
    if m == 0 {
        return Err(Error::Empty("vortex count m"));
    }
    let eig = kr.q.clone().symmetric_eigenvalues();
    if eig.amin() <= 1e-12 * eig.amax().max(1.0) {
        return Err(Error::InvalidMatrix("Q is degenerate".into()));
    }
    let d = kr.d();
    let rho = kr.length_scale(m);
    let opts = NewtonOptions { divergence_radius: 1e3 * rho, ..NewtonOptions::default() };
    let traces: Vec<NewtonTrace> = (0..starts as u64)
        .into_par_iter()
        .map(|k| newton_solve(kr, &random_start(d, m, rho, seed, k), &opts))
        .collect();

    let mut diag = SearchDiagnostics { starts, ..Default::default() };
    let mut found: Vec<VortexCritical> = Vec::new();
    let sym = QSymmetry::new(&kr.q);
    for tr in traces {
        match tr.outcome {
            NewtonOutcome::Diverged => {
                diag.diverged += 1;
                continue;
            }
            NewtonOutcome::Collapsed => {
                diag.collapsed += 1;
                continue;
            }
            NewtonOutcome::Stalled => {
                diag.stalled += 1;
                continue;
            }
            NewtonOutcome::Converged => {}
        }
        let xi = unflatten(tr.iterates.last().expect("trace holds the start"), d);
        let gnorm = *tr.grad_norms.last().expect("trace holds a gradient");
        if !(gnorm < ACCEPT_GRAD) || min_separation(&xi) <= ACCEPT_SEPARATION {
            diag.stalled += 1;
            continue;
        }
        let virial = kr.virial_residual(&xi);
        if virial.abs() > VIRIAL_REJECT {
            diag.virial_rejected += 1;
            continue;
        }
        diag.converged += 1;
        if found.iter().any(|f| sym.equivalent(&f.xi, &xi, 1e-6 * rho.max(1.0))) {
            diag.duplicates += 1;
            continue;
        }
        let h = kr.hessian_unchecked(&xi);
        let ev = h.symmetric_eigenvalues();
        let scale = ev.amax().max(1e-300);
        found.push(VortexCritical {
            energy: kr.energy(&xi)?,
            virial_residual: virial,
            grad_norm: gnorm,
            morse_index: ev.iter().filter(|&&v| v < -1e-8 * scale).count(),
            nullity: ev.iter().filter(|&&v| v.abs() <= 1e-8 * scale).count(),
            xi,
        });
    }
    found.sort_by(|a, b| {
        a.energy.total_cmp(&b.energy).then_with(|| {
            flatten(&a.xi)
                .iter()
                .zip(flatten(&b.xi).iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    Ok(VortexSearch { points: found, diagnostics: diag, length_scale: rho })
}

/// Orthogonal maps commuting with `Q`: block-orthogonal in `Q`'s eigenspaces.
struct QSymmetry {
    q: DMatrix<f64>,
    basis: DMatrix<f64>,
    blocks: Vec<(usize, usize)>,
}

impl QSymmetry {
    fn new(q: &DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(q.clone());
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let d = order.len();
        let mut basis = DMatrix::zeros(d, d);
        for (c, &k) in order.iter().enumerate() {
            basis.set_column(c, &eig.eigenvectors.column(k));
        }
        let vals: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        let mut blocks = Vec::new();
        let mut start = 0;
        for k in 1..=d {
            if k == d || (vals[k] - vals[k - 1]).abs() > 1e-10 * scale {
                blocks.push((start, k - start));
                start = k;
            }
        }
        Self { q: q.clone(), basis, blocks }
    }

    /// Best map `R` commuting with `Q` sending `y_i` to `x_i` (Procrustes per eigenspace).
    fn align(&self, x: &[DVector<f64>], y: &[DVector<f64>]) -> DMatrix<f64> {
        let d = self.basis.nrows();
        let bt = self.basis.transpose();
        let xs: Vec<DVector<f64>> = x.iter().map(|v| &bt * v).collect();
        let ys: Vec<DVector<f64>> = y.iter().map(|v| &bt * v).collect();
        let mut r = DMatrix::zeros(d, d);
        for &(s, len) in &self.blocks {
            let mut m = DMatrix::zeros(len, len);
            for (a, b) in xs.iter().zip(ys.iter()) {
                m += a.rows(s, len) * b.rows(s, len).transpose();
            }
            let svd = m.svd(true, true);
            let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
            r.view_mut((s, s), (len, len)).copy_from(&(u * vt));
        }
        &self.basis * r * &bt
    }

    fn equivalent(&self, x: &[DVector<f64>], y: &[DVector<f64>], tol: f64) -> bool {
        if x.len() != y.len() {
            return false;
        }
        for perm in (0..y.len()).permutations(y.len()) {
            let yp: Vec<DVector<f64>> = perm.iter().map(|&k| y[k].clone()).collect();
            let direct = x.iter().zip(&yp).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            if direct < tol {
                return true;
            }
            let r = self.align(x, &yp);
            if (&self.q * &r - &r * &self.q).amax() >= 1e-10 * self.q.amax().max(1.0) {
                continue;
            }
            let err = x.iter().zip(&yp).map(|(a, b)| (a - &r * b).norm()).fold(0.0, f64::max);
            if err < tol {
                return true;
            }
        }
        false
    }
}

/// Radius `gamma` of the collinear three-point critical point
/// `(gamma e, 0, -gamma e)` for an eigenvalue `sigma > 0` of `Q`.
pub fn collinear_three_radius(n: usize, sigma: f64) -> f64 {
    let nf = n as f64;
    ((nf - 2.0) * (1.0 + 2f64.powf(1.0 - nf)) / sigma).powf(1.0 / nf)
}

/// Radius `|b|` of the symmetric pair `(b, -b)` for `Q = sigma I`.
pub fn symmetric_pair_radius(n: usize, sigma: f64) -> f64 {
    let nf = n as f64;
    ((nf - 2.0) / (2f64.powf(nf - 1.0) * sigma)).powf(1.0 / nf)
}

//! Dimensional constants `c0, c2, ..., c6` and the rate constants
//! `kappa1, kappa2, kappa3`.
//!
//! Every constant is an integral over `R^n` or the half-space `R^n_+` of a
//! radial function (times `x_n` for `c3`). The angular part is done in
//! closed form; the radial part `int_0^inf g(r) dr` is mapped to
//! `[0, pi/2)` by `r = tan(theta)` and integrated adaptively.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::{Arc, OnceLock, RwLock};

use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_doubled, Estimate, QuadOptions};

/// Default absolute tolerance of the radial integrals.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsTable {
    pub n: usize,
    pub c0: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    /// Absolute error estimates, in the order c2, c3, c4, c5, c6.
    pub error_estimates: [f64; 5],
}

impl ConstantsTable {
    /// `(name, value, error estimate)` rows in a fixed order. `c0` and the
    /// kappas carry a propagated first-order error bound.
    pub fn rows(&self) -> Vec<(&'static str, f64, f64)> {
        let [e2, e3, e4, e5, e6] = self.error_estimates;
        let rel = |e: f64, v: f64| (e / v).abs();
        let k1 = self.kappa1 * (rel(e4, self.c4) + rel(e5, self.c5));
        let k2 = self.kappa2 * (rel(e3, self.c3) + rel(e5, self.c5));
        let nf = self.n as f64;
        let k3 = self.kappa3
            * ((rel(e2, self.c2) + rel(e6, self.c6)) / nf + (nf - 2.0) / nf * (rel(e5, self.c5) + rel(e3, self.c3)));
        vec![
            ("c0", self.c0, 0.0),
            ("c2", self.c2, e2),
            ("c3", self.c3, e3),
            ("c4", self.c4, e4),
            ("c5", self.c5, e5),
            ("c6", self.c6, e6),
            ("kappa1", self.kappa1, k1),
            ("kappa2", self.kappa2, k2),
            ("kappa3", self.kappa3, k3),
        ]
    }
}

/// `c0 = (n(n-2))^{(n-2)/4}`.
pub fn c0(n: usize) -> f64 {
    let nf = n as f64;
    (nf * (nf - 2.0)).powf((nf - 2.0) / 4.0)
}

/// Critical exponent plus one, `2n/(n-2)`.
pub fn critical_exponent(n: usize) -> f64 {
    let nf = n as f64;
    2.0 * nf / (nf - 2.0)
}

/// Area of the unit sphere `S^{n-1}` in `R^n`.
pub fn sphere_area(n: usize) -> f64 {
    let nf = n as f64;
    2.0 * PI.powf(nf / 2.0) / gamma(nf / 2.0)
}

/// `int_{S^{n-1}, theta_n > 0} theta_n dsigma`.
pub fn hemisphere_moment(n: usize) -> f64 {
    let nf = n as f64;
    PI.powf((nf - 1.0) / 2.0) / gamma((nf + 1.0) / 2.0)
}

/// Integrand of a radial integral, expressed in `theta` after `r = tan(theta)`.
///
/// Represents `int_0^inf r^k (r^2 - 1)^shift (1 + r^2)^{-s} [ln(1 + r^2)]^log dr`
/// with `shift, log` in `{0, 1}`.
#[derive(Debug, Clone, Copy)]
pub struct Radial {
    pub k: f64,
    pub s: f64,
    pub shifted: bool,
    pub log: bool,
}

impl Radial {
    fn theta_integrand(self, theta: f64) -> f64 {
        let (sin, cos) = theta.sin_cos();
        if cos <= 0.0 {
            return 0.0;
        }
        // r^k (1+r^2)^{-s} dr = sin^k cos^{2s-2-k} dtheta
        let mut v = sin.powf(self.k) * cos.powf(2.0 * self.s - 2.0 - self.k);
        if self.shifted {
            // r^2 - 1 = (sin^2 - cos^2) / cos^2
            v *= (sin * sin - cos * cos) / (cos * cos);
        }
        if self.log {
            v *= -2.0 * cos.ln();
        }
        v
    }

    pub fn integrate(self, opts: QuadOptions) -> Result<Estimate> {
        integrate(|t| self.theta_integrand(t), 0.0, FRAC_PI_2, opts)
    }

    /// Re-evaluates on `partition` with every piece halved.
    pub fn integrate_doubled(self, partition: &[(f64, f64)]) -> f64 {
        integrate_doubled(|t| self.theta_integrand(t), partition)
    }
}

/// Relative change of `c2 .. c6` when the nodes of the final adaptive
/// partition are doubled.
pub fn node_doubling_changes(n: usize, tol: f64) -> Result<[f64; 5]> {
    let opts = QuadOptions { abs_tol: tol, ..QuadOptions::default() };
    let mut out = [0.0; 5];
    for (i, part) in radial_parts(n).into_iter().enumerate() {
        let est = part.integrate(opts)?;
        let doubled = part.integrate_doubled(&est.partition);
        out[i] = ((doubled - est.value) / est.value).abs();
    }
    Ok(out)
}

/// Radial parts (`c2, c3, c4, c5, c6` order) for dimension `n`.
pub fn radial_parts(n: usize) -> [Radial; 5] {
    let nf = n as f64;
    [
        Radial { k: nf - 1.0, s: (nf + 2.0) / 2.0, shifted: false, log: false },
        Radial { k: nf, s: nf + 1.0, shifted: true, log: false },
        Radial { k: nf + 1.0, s: nf + 1.0, shifted: true, log: false },
        Radial { k: nf - 1.0, s: nf + 1.0, shifted: true, log: true },
        Radial { k: nf + 1.0, s: nf + 1.0, shifted: false, log: false },
    ]
}

/// Prefactors that turn the radial integrals into `c2 .. c6`.
pub fn prefactors(n: usize) -> [f64; 5] {
    let nf = n as f64;
    let cp = c0(n).powf(critical_exponent(n));
    let area = sphere_area(n);
    [
        cp * area,
        (nf - 2.0) * cp * hemisphere_moment(n),
        (nf - 2.0) / (2.0 * nf) * cp * area,
        (nf - 2.0) * (nf - 2.0) / 4.0 * cp * area / 2.0,
        (nf - 2.0) / nf * cp * area / 2.0,
    ]
}

/// Computes the table with the radial integrals at absolute tolerance `tol`,
/// starting each adaptive run from `initial_pieces` equal subintervals.
pub fn compute_constants_with(n: usize, tol: f64, initial_pieces: usize) -> Result<ConstantsTable> {
    if n < 5 {
        return Err(Error::Precondition(format!("dimension n = {n} must be at least 5")));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::Precondition(format!("tolerance {tol} must be positive")));
    }
    let opts = QuadOptions { abs_tol: tol, initial_pieces, ..QuadOptions::default() };
    let pre = prefactors(n);
    let parts = radial_parts(n);
    let mut vals = [0.0; 5];
    let mut errs = [0.0; 5];
    for i in 0..5 {
        let est = parts[i].integrate(opts)?;
        vals[i] = pre[i] * est.value;
        errs[i] = pre[i] * est.error;
    }
    let [c2, c3, c4, c5, c6] = vals;
    let names = ["c2", "c3", "c4", "c5", "c6"];
    for (name, v) in names.iter().zip(vals) {
        if !(v > 0.0) {
            return Err(Error::NonPositiveConstant { name, value: v });
        }
    }
    let (kappa1, kappa2, kappa3) = kappas(n, c2, c3, c4, c5, c6)?;
    Ok(ConstantsTable { n, c0: c0(n), c2, c3, c4, c5, c6, kappa1, kappa2, kappa3, error_estimates: errs })
}

pub fn compute_constants(n: usize, tol: f64) -> Result<ConstantsTable> {
    compute_constants_with(n, tol, 1)
}

fn kappas(n: usize, c2: f64, c3: f64, c4: f64, c5: f64, c6: f64) -> Result<(f64, f64, f64)> {
    let nf = n as f64;
    let k1 = c4 / (2.0 * c5);
    let k2 = c3 / c5;
    let k3 = 2f64.powf((nf - 3.0) / nf) * (c2 / c6).powf(1.0 / nf) * (c5 / c3).powf((nf - 2.0) / nf);
    for (name, v) in [("kappa1", k1), ("kappa2", k2), ("kappa3", k3)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::NonPositiveConstant { name, value: v });
        }
    }
    Ok((k1, k2, k3))
}

/// `(kappa1, kappa2, kappa3)` recomputed from a table's `c` values.
pub fn kappa_table(table: &ConstantsTable) -> Result<(f64, f64, f64)> {
    kappas(table.n, table.c2, table.c3, table.c4, table.c5, table.c6)
}

type Cache = RwLock<HashMap<(usize, u64), Arc<ConstantsTable>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Memoised [`compute_constants`] at the default tolerance.
pub fn constants(n: usize) -> Result<Arc<ConstantsTable>> {
    constants_at(n, DEFAULT_TOL)
}

pub fn constants_at(n: usize, tol: f64) -> Result<Arc<ConstantsTable>> {
    let key = (n, tol.to_bits());
    if let Some(t) = cache().read().expect("constants cache poisoned").get(&key) {
        return Ok(Arc::clone(t));
    }
    let table = Arc::new(compute_constants(n, tol)?);
    let mut w = cache().write().expect("constants cache poisoned");
    Ok(Arc::clone(w.entry(key).or_insert(table)))
}

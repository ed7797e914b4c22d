use std::f64::consts::PI;

use bubblekit_core::constants::{
    c0, compute_constants, compute_constants_with, constants, kappa_table, node_doubling_changes, DEFAULT_TOL,
};
use statrs::function::gamma::{digamma, ln_gamma};

// Oracles written from scratch: after r = tan(theta), every radial integral
// int_0^inf r^k (1+r^2)^{-s} dr is half a Beta function, here expanded
// through log-Gamma.
fn half_beta(k: f64, s: f64) -> f64 {
    let a = (k + 1.0) / 2.0;
    let b = s - a;
    0.5 * (ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)).exp()
}

// d/ds of the same integral gives the log moment:
// int r^k (1+r^2)^{-s} ln(1+r^2) dr = half_beta(k,s) (psi(s) - psi(s-a)).
fn half_beta_log(k: f64, s: f64) -> f64 {
    let a = (k + 1.0) / 2.0;
    half_beta(k, s) * (digamma(s) - digamma(s - a))
}

fn cp(n: usize) -> f64 {
    let nf = n as f64;
    c0(n).powf(2.0 * nf / (nf - 2.0))
}

fn area(n: usize) -> f64 {
    let nf = n as f64;
    2.0 * PI.powf(nf / 2.0) / ln_gamma(nf / 2.0).exp()
}

struct Oracle {
    c2: f64,
    c3: f64,
    c4: f64,
    c5: f64,
    c6: f64,
}

fn oracle(n: usize) -> Oracle {
    let nf = n as f64;
    let s = nf + 1.0;
    // half-space moment of theta_n over the unit sphere
    let moment = PI.powf((nf - 1.0) / 2.0) / ln_gamma((nf + 1.0) / 2.0).exp();
    Oracle {
        c2: cp(n) * PI.powf(nf / 2.0) / ln_gamma(nf / 2.0 + 1.0).exp(),
        c3: (nf - 2.0) * cp(n) * moment * (half_beta(nf + 2.0, s) - half_beta(nf, s)),
        c4: (nf - 2.0) / (2.0 * nf) * cp(n) * area(n) * (half_beta(nf + 3.0, s) - half_beta(nf + 1.0, s)),
        c5: (nf - 2.0).powi(2) / 8.0 * cp(n) * area(n) * (half_beta_log(nf + 1.0, s) - half_beta_log(nf - 1.0, s)),
        c6: (nf - 2.0) / (2.0 * nf) * cp(n) * area(n) * half_beta(nf + 1.0, s),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

#[test]
fn c0_example() {
    assert!((c0(5) - 15f64.powf(0.75)).abs() < 1e-14);
}

#[test]
fn c2_closed_form() {
    // c2 = c0^{2n/(n-2)} pi^{n/2} / Gamma(n/2 + 1)
    for n in 5..=10 {
        let t = compute_constants(n, 1e-10).unwrap();
        assert!(rel(t.c2, oracle(n).c2) < 1e-10, "n = {n}");
    }
}

#[test]
fn rational_constants_match_beta_oracles() {
    for n in 5..=10 {
        let t = compute_constants(n, 1e-10).unwrap();
        let o = oracle(n);
        for (name, v, w) in [("c3", t.c3, o.c3), ("c4", t.c4, o.c4), ("c6", t.c6, o.c6)] {
            assert!(rel(v, w) < 1e-8, "n = {n} {name}: {v} vs {w}");
        }
    }
}

#[test]
fn log_constant_matches_digamma_form() {
    for n in 5..=10 {
        let t = compute_constants(n, 1e-10).unwrap();
        assert!(rel(t.c5, oracle(n).c5) < 1e-8, "n = {n}");
    }
}

#[test]
fn reported_errors_cover_the_true_error() {
    for n in 5..=10 {
        let t = compute_constants(n, 1e-10).unwrap();
        let o = oracle(n);
        let vals = [(t.c2, o.c2), (t.c3, o.c3), (t.c4, o.c4), (t.c5, o.c5), (t.c6, o.c6)];
        for (i, (v, w)) in vals.iter().enumerate() {
            assert!((v - w).abs() <= 10.0 * t.error_estimates[i] + 1e-12 * w.abs(), "n = {n} constant {i}");
        }
    }
}

#[test]
fn node_doubling_is_stable() {
    for n in 5..=10 {
        let t = compute_constants(n, DEFAULT_TOL).unwrap();
        let changes = node_doubling_changes(n, DEFAULT_TOL).unwrap();
        let values = [t.c2, t.c3, t.c4, t.c5, t.c6];
        for i in 0..5 {
            assert!(changes[i] < 1e-8, "n = {n} constant {i}");
            assert!(changes[i] * values[i] <= 10.0 * t.error_estimates[i] + 1e-13 * values[i]);
        }
    }
}

#[test]
fn refinement_moves_kappas_little() {
    for n in 5..=10 {
        let a = compute_constants(n, 1e-10).unwrap();
        let b = compute_constants(n, 1e-12).unwrap();
        assert!(rel(a.kappa1, b.kappa1) < 1e-8);
        assert!(rel(a.kappa2, b.kappa2) < 1e-8);
        assert!(rel(a.kappa3, b.kappa3) < 1e-8);
    }
}

#[test]
fn c3_sign_is_stable() {
    // the c3 integrand changes sign at r = 1; its sign is a computed fact
    for n in 5..=10 {
        let coarse = compute_constants_with(n, 1e-6, 1).unwrap();
        let fine = compute_constants_with(n, 1e-12, 4).unwrap();
        assert!(coarse.c3 > 0.0 && fine.c3 > 0.0);
    }
}

#[test]
fn kappa_definitions() {
    for n in 5..=10 {
        let t = constants(n).unwrap();
        let nf = n as f64;
        assert!(t.kappa1 > 0.0 && t.kappa2 > 0.0 && t.kappa3 > 0.0);
        assert!(rel(t.kappa1, t.c4 / (2.0 * t.c5)) < 1e-15);
        assert!(rel(t.kappa2, t.c3 / t.c5) < 1e-15);
        let k3 = 2f64.powf((nf - 3.0) / nf) * (t.c2 / t.c6).powf(1.0 / nf) * (t.c5 / t.c3).powf((nf - 2.0) / nf);
        assert!(rel(t.kappa3, k3) < 1e-14);
        assert_eq!(kappa_table(&t).unwrap(), (t.kappa1, t.kappa2, t.kappa3));
    }
}

#[test]
fn kappa1_closed_form() {
    // c4/(2 c5) simplifies to 4/(n-2)^2 once both are reduced to Beta
    // functions; a useful cross-check of the log integral.
    for n in 5..=10 {
        let t = constants(n).unwrap();
        let nf = n as f64;
        assert!(rel(t.kappa1, 4.0 / (nf - 2.0).powi(2)) < 1e-9, "n = {n}");
    }
}

#[test]
fn table_rows_have_fixed_shape() {
    let t = constants(5).unwrap();
    let names: Vec<&str> = t.rows().iter().map(|r| r.0).collect();
    assert_eq!(names, ["c0", "c2", "c3", "c4", "c5", "c6", "kappa1", "kappa2", "kappa3"]);
}

#[test]
fn low_dimensions_rejected() {
    assert!(compute_constants(4, 1e-10).is_err());
    assert!(compute_constants(5, 0.0).is_err());
}

use bubblekit_core::bubbles::{
    barycentric_pairing, bubble_value, d_eps_d_a, d_eps_d_lambda, far_field_eps, green_regular_part, interaction_eps,
    projected_bubble_envelope, subcritical_expansion_check, BubbleParam, InteractionMatrix,
};
use bubblekit_core::constants::c0;
use bubblekit_core::geometry::{exp_map, geodesic_distance, SpherePoint, TangentVector};
use bubblekit_core::sampling::{boundary_samples, halfsphere_samples};
use bubblekit_core::Error;
use nalgebra::DVector;
use proptest::prelude::*;

fn at(a: &SpherePoint, lambda: f64) -> BubbleParam {
    BubbleParam::new(a.clone(), lambda, 1.0).unwrap()
}

fn offset(z: &SpherePoint, v: &[(usize, f64)]) -> SpherePoint {
    let mut w = DVector::zeros(z.dim() + 1);
    for &(k, c) in v {
        w[k] = c;
    }
    exp_map(z, &TangentVector::new(z.clone(), w).unwrap()).unwrap()
}

#[test]
fn bubble_examples() {
    let n = 5;
    let a = SpherePoint::north_pole(n);
    assert!((bubble_value(&a, 2.0, &a) - c0(n)).abs() < 1e-13);
    let e1 = SpherePoint::basis(n, 0);
    assert!((bubble_value(&a, 2.0, &e1) - c0(n) * 0.4f64.powf(1.5)).abs() < 1e-13);
    for x in halfsphere_samples(n, 30, 2) {
        assert!((bubble_value(&a, 1.0, &x) - c0(n) / 2f64.powf(1.5)).abs() < 1e-13);
        assert!(bubble_value(&a, 50.0, &x) > 0.0);
    }
}

#[test]
fn interaction_examples() {
    let n = 5;
    let a = SpherePoint::north_pole(n);
    let p = at(&a, 7.0);
    assert!((interaction_eps(&p, &p) - 2f64.powf(-1.5)).abs() < 1e-15);
    let q = at(&SpherePoint::basis(n, 0), 10.0);
    let r = at(&a, 10.0);
    assert!((interaction_eps(&r, &q) - 52f64.powf(-1.5)).abs() < 1e-16);
    assert_eq!(interaction_eps(&r, &q), interaction_eps(&q, &r));
}

#[test]
fn derivative_examples() {
    let a = SpherePoint::basis(6, 0);
    let p = at(&a, 20.0);
    assert_eq!(d_eps_d_a(&p, &p).norm(), 0.0);
    let b = offset(&a, &[(1, 0.3), (6, 0.1)]);
    let q = at(&b, 20.0);
    assert!((d_eps_d_lambda(&p, &q) - d_eps_d_lambda(&q, &p)).abs() < 1e-18);
}

#[test]
fn derivatives_match_finite_differences() {
    let n = 6;
    let pts = halfsphere_samples(n, 80, 12);
    let h: f64 = 1e-6;
    for w in pts.chunks(2) {
        let (ai, aj) = (&w[0], &w[1]);
        for (li, lj) in [(20.0, 35.0), (300.0, 40.0), (15.0, 15.0)] {
            let p = at(ai, li);
            let q = at(aj, lj);
            let eps = |l: f64| interaction_eps(&at(ai, l), &q);
            let fd = (eps(li * h.exp()) - eps(li * (-h).exp())) / (2.0 * h);
            let exact = d_eps_d_lambda(&p, &q);
            assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1e-3 * interaction_eps(&p, &q)));

            let g = d_eps_d_a(&p, &q);
            for k in 0..n {
                let mut t = DVector::zeros(n + 1);
                t[k] = 1.0;
                t -= ai.coords() * ai.coords()[k];
                if t.norm() < 1e-3 {
                    continue;
                }
                t.normalize_mut();
                // keep the probe inside the closed half-sphere
                let moved = |s: f64| {
                    let x = ai.coords() * s.cos() + &t * s.sin();
                    SpherePoint::from_unnormalized(x).ok()
                };
                let (Some(up), Some(down)) = (moved(h), moved(-h)) else { continue };
                let fd = (interaction_eps(&at(&up, li), &q) - interaction_eps(&at(&down, li), &q)) / (2.0 * h);
                let exact = g.vec().dot(&t);
                assert!((fd - exact).abs() <= 1e-6 * g.norm().max(1e-12), "{fd} vs {exact}");
            }
        }
    }
}

#[test]
fn far_field_limit() {
    // 2 + lambda^2 (1 - cos d) / 2 ~ (lambda d)^2 / 4 once lambda d is large
    let n = 7;
    let z = SpherePoint::basis(n, 0);
    for (l, d) in [(1e5, 1e-2), (1e6, 1e-3), (3e6, 1e-3)] {
        let b = offset(&z, &[(1, d)]);
        let p = at(&z, l);
        let q = at(&b, l);
        let dd = geodesic_distance(&z, &b);
        let eps = interaction_eps(&p, &q);
        assert!((eps / far_field_eps(n, l, l, dd) - 1.0).abs() < 1e-4);
        // the d^2/2 normalisation is off by exactly 2^{(n-2)/2}
        let half = (l * l * dd * dd / 2.0).powf((2.0 - n as f64) / 2.0);
        assert!((eps / half - 2f64.powf((n as f64 - 2.0) / 2.0)).abs() < 1e-3);
    }
}

#[test]
fn symmetric_pairing_doubles_one_side() {
    let n = 6;
    let h = SpherePoint::basis(n, 0);
    let a = offset(&h, &[(1, 0.05)]);
    let b = offset(&h, &[(1, -0.05)]);
    let p = at(&a, 80.0);
    let q = at(&b, 80.0);
    let one = d_eps_d_a(&p, &q).vec().dot(&(h.coords() - a.coords() * a.dot(&h)));
    let e = barycentric_pairing(&p, &q, &h);
    assert!(e > 0.0);
    assert!((e - 2.0 * one).abs() < 1e-12 * e);
}

#[test]
fn green_regular_part_examples() {
    let n = 5;
    let a = offset(&SpherePoint::north_pole(n), &[(0, 0.4), (1, 0.3)]);
    let b = offset(&SpherePoint::north_pole(n), &[(2, -0.5)]);
    let hab = green_regular_part(&a, &b).unwrap();
    assert!((hab - green_regular_part(&b, &a).unwrap()).abs() < 1e-10);
    let haa = green_regular_part(&a, &a).unwrap();
    let hbb = green_regular_part(&b, &b).unwrap();
    assert!(haa > 0.0 && hab < haa + hbb);
    assert!(matches!(green_regular_part(&SpherePoint::basis(n, 0), &a), Err(Error::OnBoundary)));

    // H(a,a) d_a^{n-2} -> 2^{(2-n)/2} as a approaches the boundary
    let z = SpherePoint::basis(n, 0);
    let mut prev = f64::INFINITY;
    for d in [0.2, 0.1, 0.05] {
        let a = offset(&z, &[(n, d)]);
        let scaled = green_regular_part(&a, &a).unwrap() * d.powf(n as f64 - 2.0);
        let limit = 2f64.powf((2.0 - n as f64) / 2.0);
        let gap = (scaled - limit).abs();
        assert!(gap < prev);
        prev = gap;
    }
    assert!(prev < 2e-3);
}

#[test]
fn envelope_examples() {
    let n = 6;
    let z = SpherePoint::basis(n, 0);
    let x = offset(&z, &[(1, 0.2)]);
    let flat = projected_bubble_envelope(&z, 40.0, &x);
    assert_eq!(flat.lower, flat.upper);
    assert_eq!(flat.approx, bubble_value(&z, 40.0, &x));

    // lambda d_a = 50
    let lambda = 500.0;
    let a = offset(&z, &[(n, 0.1)]);
    for x in halfsphere_samples(n, 2000, 8) {
        let env = projected_bubble_envelope(&a, lambda, &x);
        assert!((env.lambda_d - 50.0).abs() < 1e-9);
        assert!(env.correction > 0.0);
        assert!(env.contains_approx(), "{env:?}");
    }
}

#[test]
fn subcritical_examples() {
    let n = 6;
    let a = SpherePoint::north_pole(n);
    let x = offset(&a, &[(0, 0.2)]);
    assert_eq!(subcritical_expansion_check(&a, 100.0, 0.0, &x).unwrap(), 0.0);
    assert!(subcritical_expansion_check(&a, 100.0, 0.03, &x).is_err());

    // at x = a the log term is ln 2 and delta^{-eps} is explicit
    let (lambda, eps) = (100.0f64, 1e-2);
    let nf = n as f64;
    let p = c0(n).powf(-eps) * lambda.powf(-eps * (nf - 2.0) / 2.0);
    let u = eps * (nf - 2.0) / 2.0 * 2f64.ln();
    let direct = (p * 2f64.powf(eps * (nf - 2.0) / 2.0) - p * (1.0 + u)).abs();
    let got = subcritical_expansion_check(&a, lambda, eps, &a).unwrap();
    assert!((got - direct).abs() < 1e-9 * direct);

    let ratios: Vec<f64> =
        [1e-2, 1e-3, 1e-4].iter().map(|&e| subcritical_expansion_check(&a, lambda, e, &x).unwrap() / (e * e)).collect();
    assert!(ratios.iter().all(|r| *r < 2.0 * ratios[2]));
}

#[test]
fn interaction_matrix_shape() {
    let n = 6;
    let z = SpherePoint::basis(n, 0);
    let params: Vec<BubbleParam> =
        [0.3, -0.2, 0.5].iter().map(|&s| at(&offset(&z, &[(1, s)]), 200.0 + 100.0 * s)).collect();
    let m = InteractionMatrix::assemble(&params);
    for i in 0..3 {
        assert_eq!(m.eps[(i, i)], 0.0);
        for j in 0..3 {
            assert_eq!(m.eps[(i, j)], m.eps[(j, i)]);
            if i != j {
                assert_eq!(m.eps[(i, j)], interaction_eps(&params[i], &params[j]));
                assert_eq!(m.dlam[(i, j)], d_eps_d_lambda(&params[i], &params[j]));
                let expect = d_eps_d_a(&params[i], &params[j]).into_vec() / params[i].lambda;
                assert!((&m.da[i][j] - expect).norm() < 1e-18);
            }
        }
    }
    assert!(m.check_small(0.1).is_ok());
    let close = [at(&z, 10.0), at(&z, 11.0)];
    assert!(InteractionMatrix::assemble(&close).check_small(0.1).is_err());
}

fn log_lambda() -> impl Strategy<Value = f64> {
    (10f64.ln()..1e4f64.ln()).prop_map(f64::exp)
}

proptest! {
    #[test]
    fn scaling_law(li in log_lambda(), ratio in 0.2f64..5.0, t in 1e-4f64..1.0, s in 0.5f64..2.0) {
        // fix lambda_i/lambda_j and lambda_i lambda_j (1 - cos d)
        let n = 7;
        let z = SpherePoint::basis(n, 0);
        let lj = li / ratio;
        let product = li * lj * (1.0 - t.cos());
        let li2 = li * s;
        let lj2 = lj * s;
        // 1 - cos t = 2 sin^2(t/2) avoids cancellation for small angles
        let half = product / (2.0 * li2 * lj2);
        prop_assume!(half < 1.0);
        let t2 = 2.0 * half.sqrt().asin();
        let e1 = interaction_eps(&at(&z, li), &at(&offset(&z, &[(1, t)]), lj));
        let e2 = interaction_eps(&at(&z, li2), &at(&offset(&z, &[(2, t2)]), lj2));
        prop_assert!((e1 - e2).abs() <= 1e-10 * e1, "{e1} vs {e2}");
    }

    #[test]
    fn lambda_derivative_signs(li in log_lambda(), lj in log_lambda(), seed in 0u64..1000) {
        let n = 6;
        let pts = boundary_samples(n, 2, seed);
        let p = at(&pts[0], li);
        let q = at(&pts[1], lj);
        let e = interaction_eps(&p, &q);
        let di = d_eps_d_lambda(&p, &q);
        let dj = d_eps_d_lambda(&q, &p);
        prop_assert!(-di - dj >= -1e-15 * e);
        if li >= lj {
            prop_assert!(di <= 0.0);
        }
        if li >= 2.0 * lj {
            prop_assert!(-di >= 0.1 * e);
        }
    }
}

//! Shared fixtures for the benchmarks.

use bubblekit_core::bubbles::BubbleParam;
use bubblekit_core::geometry::{exp_map, SpherePoint, TangentVector};
use bubblekit_core::predictor::BlowupScenario;
use bubblekit_core::verify::SHIPPED_SCENARIOS;
use bubblekit_core::vortex::KirchhoffRouth;
use nalgebra::{DMatrix, DVector};

/// `count` boundary bubbles spread along a great circle through `e_1`.
pub fn bubble_ring(n: usize, count: usize) -> Vec<BubbleParam> {
    let z = SpherePoint::basis(n, 0);
    (0..count)
        .map(|k| {
            let t = 3.0 * k as f64 / count as f64;
            let mut v = DVector::zeros(n + 1);
            v[1] = t;
            let a = exp_map(&z, &TangentVector::new_boundary(z.clone(), v).unwrap()).unwrap();
            BubbleParam::new(a, 200.0 + 10.0 * k as f64, 1.0).unwrap()
        })
        .collect()
}

/// Kirchhoff-Routh functional with a mildly anisotropic `Q`.
pub fn anisotropic(n: usize) -> KirchhoffRouth {
    let d = n - 1;
    let q = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 + 0.25 * i as f64 } else { 0.05 });
    KirchhoffRouth::new(n, q).unwrap()
}

pub fn scenario(name: &str) -> BlowupScenario {
    let text = SHIPPED_SCENARIOS.iter().find(|(n, _)| *n == name).expect("shipped scenario").1;
    BlowupScenario::from_json(text).unwrap()
}

//! Globally adaptive Gauss-Kronrod (7/15) quadrature on a finite interval.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// Kronrod abscissae and weights; the odd entries (1, 3, 5, 7) are the Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Value and error estimate of an integral.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    /// Final partition of the interval, sorted by left endpoint.
    pub partition: Vec<(f64, f64)>,
}

impl Estimate {
    pub fn intervals(&self) -> usize {
        self.partition.len()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    /// Number of equal pieces the interval is cut into before adaptation.
    pub initial_pieces: usize,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-10, initial_pieces: 1, max_intervals: 20_000 }
    }
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 15-point Kronrod rule on `[a, b]` with the embedded 7-point Gauss
/// rule; the error estimate is `|K15 - G7|`.
pub fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive integration of `f` over `[a, b]` to an absolute tolerance.
///
/// The piece with the largest error estimate is bisected until the summed
/// estimate drops below `opts.abs_tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Estimate> {
    let pieces = opts.initial_pieces.max(1);
    let width = (b - a) / pieces as f64;
    let mut heap = BinaryHeap::with_capacity(pieces * 4);
    for k in 0..pieces {
        let lo = a + width * k as f64;
        let hi = if k + 1 == pieces { b } else { lo + width };
        let (value, error) = gauss_kronrod_15(&f, lo, hi);
        heap.push(Piece { a: lo, b: hi, value, error });
    }
    loop {
        let (value, error) = totals(&heap);
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::QuadratureNotConverged { value, error, tol: opts.abs_tol });
        }
        if error <= opts.abs_tol {
            let mut partition: Vec<(f64, f64)> = heap.iter().map(|p| (p.a, p.b)).collect();
            partition.sort_by(|x, y| x.0.total_cmp(&y.0));
            return Ok(Estimate { value, error, partition });
        }
        if heap.len() >= opts.max_intervals {
            return Err(Error::QuadratureNotConverged { value, error, tol: opts.abs_tol });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval cannot be split further in floating point
            return Err(Error::QuadratureNotConverged { value, error, tol: opts.abs_tol });
        }
        for (lo, hi) in [(worst.a, mid), (mid, worst.b)] {
            let (v, e) = gauss_kronrod_15(&f, lo, hi);
            heap.push(Piece { a: lo, b: hi, value: v, error: e });
        }
    }
}

/// Applies the 15-point rule on every piece of `partition`, each cut in
/// half: twice the nodes of the partition an adaptive run ended with.
pub fn integrate_doubled<F: Fn(f64) -> f64>(f: F, partition: &[(f64, f64)]) -> f64 {
    partition
        .iter()
        .map(|&(a, b)| {
            let mid = 0.5 * (a + b);
            gauss_kronrod_15(&f, a, mid).0 + gauss_kronrod_15(&f, mid, b).0
        })
        .sum()
}

fn totals(heap: &BinaryHeap<Piece>) -> (f64, f64) {
    // sum in a fixed order so results do not depend on heap layout
    let mut items: Vec<(f64, f64, f64)> = heap.iter().map(|p| (p.a, p.value, p.error)).collect();
    items.sort_by(|x, y| x.0.total_cmp(&y.0));
    items.iter().fold((0.0, 0.0), |(v, e), it| (v + it.1, e + it.2))
}

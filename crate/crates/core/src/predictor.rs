//! Leading-order blow-up predictions and their balancing residuals.
//!
//! A scenario declares interior blow-up points `y` (critical points of `K`
//! with `Lap K < 0`), simple boundary points `z` (critical points of `K_1`
//! with `dK/dnu > 0`) and boundary clusters `(z, m, bbar)` with `bbar` a
//! critical point of the Kirchhoff-Routh function at `z`. For each `eps`
//! the predictor produces concentration parameters from the rate laws
//!
//! * interior: `lambda^2 = kappa1 (-Lap K) / (K eps)`
//! * boundary: `lambda = kappa2 dK/dnu / (K eps)`
//! * gluing: `alpha = (lambda^{eps(n-2)/2} / K(a))^{(n-2)/4}`
//!
//! and the residual report measures how far these parameters are from
//! solving the full balancing equations in `lambda` and `a`.

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::bubbles::{green_regular_part, BubbleParam, InteractionMatrix, DEFAULT_TAU};
use crate::constants::ConstantsTable;
use crate::curvature::{CriticalPointRecord, CriticalSearchOptions, CurvatureField, FieldConfig, PointKind};
use crate::error::{Error, Result};
use crate::geometry::{cluster_barycenter, exp_map, geodesic_distance, project_tangent, SpherePoint, TangentVector};
use crate::vortex::{KirchhoffRouth, VortexConfiguration};

/// Default comparability threshold of the `mu` classes.
pub const DEFAULT_MU_THRESHOLD: f64 = 1e3;
/// Tolerance on `|grad F|` for a declared cluster configuration.
pub const BBAR_GRAD_TOL: f64 = 1e-10;

/// On-disk form of a scenario.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub field: FieldConfig,
    #[serde(default)]
    pub interior: Vec<Vec<f64>>,
    #[serde(default)]
    pub boundary_simple: Vec<Vec<f64>>,
    #[serde(default)]
    pub clusters: Vec<ClusterConfig>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    pub z: Vec<f64>,
    pub m: usize,
    /// Either `n-1` intrinsic coordinates in the canonical boundary frame at
    /// `z`, or `n+1` ambient coordinates of a vector tangent to the boundary
    /// sphere at `z`.
    pub bbar: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub record: CriticalPointRecord,
    pub m: usize,
    pub bbar: VortexConfiguration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupScenario {
    pub field: CurvatureField,
    pub interior_points: Vec<CriticalPointRecord>,
    pub simple_boundary_points: Vec<CriticalPointRecord>,
    pub clusters: Vec<Cluster>,
}

fn point(coords: &[f64], what: &str) -> Result<SpherePoint> {
    SpherePoint::from_slice(coords).map_err(|e| Error::InvalidScenario(format!("{what}: {e}")))
}

impl BlowupScenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| Error::InvalidScenario(e.to_string()))?;
        Self::from_config(cfg)
    }

    /// Validates every declared point: nondegenerate critical point, the
    /// sign condition of its kind, and criticality of each cluster's `bbar`.
    pub fn from_config(cfg: ScenarioConfig) -> Result<Self> {
        let field = CurvatureField::from_config(cfg.field)?;
        let n = field.dim();
        let opts = CriticalSearchOptions::default();
        let check_len = |c: &[f64], what: &str| -> Result<()> {
            if c.len() != n + 1 {
                return Err(Error::InvalidScenario(format!("{what} has {} coordinates, expected {}", c.len(), n + 1)));
            }
            Ok(())
        };
        let mut interior_points = Vec::new();
        for (i, c) in cfg.interior.iter().enumerate() {
            let what = format!("interior[{i}]");
            check_len(c, &what)?;
            let y = point(c, &what)?;
            let rec = field
                .critical_record(&y, PointKind::Interior, &opts)
                .map_err(|e| Error::InvalidScenario(format!("{what}: {e}")))?;
            if !(rec.laplacian < 0.0) {
                return Err(Error::InvalidScenario(format!("{what}: Lap K = {} is not negative", rec.laplacian)));
            }
            interior_points.push(rec);
        }
        let boundary_record = |c: &[f64], what: &str| -> Result<CriticalPointRecord> {
            check_len(c, what)?;
            let z = point(c, what)?;
            let rec = field
                .critical_record(&z, PointKind::Boundary, &opts)
                .map_err(|e| Error::InvalidScenario(format!("{what}: {e}")))?;
            if !(rec.normal_derivative > 0.0) {
                return Err(Error::InvalidScenario(format!(
                    "{what}: dK/dnu = {} is not positive",
                    rec.normal_derivative
                )));
            }
            Ok(rec)
        };
        let mut simple_boundary_points = Vec::new();
        for (i, c) in cfg.boundary_simple.iter().enumerate() {
            simple_boundary_points.push(boundary_record(c, &format!("boundary_simple[{i}]"))?);
        }
        let mut clusters = Vec::new();
        for (i, cl) in cfg.clusters.iter().enumerate() {
            let what = format!("clusters[{i}]");
            let record = boundary_record(&cl.z, &format!("{what}.z"))?;
            if cl.m < 2 {
                return Err(Error::InvalidScenario(format!("{what}.m = {} must be at least 2", cl.m)));
            }
            if cl.bbar.len() != cl.m {
                return Err(Error::InvalidScenario(format!(
                    "{what}.bbar has {} points, expected m = {}",
                    cl.bbar.len(),
                    cl.m
                )));
            }
            let q = record.hessian_tangential.clone();
            let z = record.location.clone();
            let cfgv = if cl.bbar.iter().all(|b| b.len() == n - 1) {
                let xi = cl.bbar.iter().map(|b| DVector::from_column_slice(b)).collect();
                VortexConfiguration::new(z, xi, q)
            } else if cl.bbar.iter().all(|b| b.len() == n + 1) {
                let v: Vec<DVector<f64>> = cl.bbar.iter().map(|b| DVector::from_column_slice(b)).collect();
                VortexConfiguration::from_ambient(z, &v, q)
            } else {
                return Err(Error::InvalidScenario(format!(
                    "{what}.bbar entries must all have length {} or {}",
                    n - 1,
                    n + 1
                )));
            }
            .map_err(|e| Error::InvalidScenario(format!("{what}.bbar: {e}")))?;
            let kr = cfgv.functional();
            let g = crate::vortex::flatten(&kr.gradient(&cfgv.xi)?).norm();
            if !(g < BBAR_GRAD_TOL) {
                return Err(Error::InvalidScenario(format!("{what}.bbar is not a critical point: |grad F| = {g:e}")));
            }
            clusters.push(Cluster { record, m: cl.m, bbar: cfgv });
        }
        Ok(Self { field, interior_points, simple_boundary_points, clusters })
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn bubble_count(&self) -> usize {
        self.interior_points.len()
            + self.simple_boundary_points.len()
            + self.clusters.iter().map(|c| c.m).sum::<usize>()
    }
}

/// `sqrt(-kappa1 Lap K / (K eps))`.
pub fn predict_interior_lambda(record: &CriticalPointRecord, eps: f64, consts: &ConstantsTable) -> Result<f64> {
    check_eps(eps)?;
    if !(record.laplacian < 0.0) {
        return Err(Error::Precondition(format!("Lap K = {} must be negative", record.laplacian)));
    }
    Ok((-consts.kappa1 * record.laplacian / (record.value * eps)).sqrt())
}

/// `kappa2 dK/dnu / (K eps)`.
pub fn predict_boundary_lambda(record: &CriticalPointRecord, eps: f64, consts: &ConstantsTable) -> Result<f64> {
    check_eps(eps)?;
    if !(record.normal_derivative > 0.0) {
        return Err(Error::Precondition(format!("dK/dnu = {} must be positive", record.normal_derivative)));
    }
    Ok(consts.kappa2 * record.normal_derivative / (record.value * eps))
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Precondition(format!("eps = {eps} must be positive")));
    }
    Ok(())
}

/// `alpha = (lambda^{eps(n-2)/2} / K(a))^{(n-2)/4}`.
pub fn predict_alpha(param: &BubbleParam, field: &CurvatureField, eps: f64) -> f64 {
    let n = field.dim() as f64;
    let k = field.value(&param.a);
    (param.lambda.powf(eps * (n - 2.0) / 2.0) / k).powf((n - 2.0) / 4.0)
}

/// Tangent scale `s` with `a_i - <a_i,z>z = s bbar_i` to first order:
/// `s = kappa3 eps^{(n-2)/n} K(z)^{(n-1)/n} / (dK/dnu(z))^{(n-2)/n}`.
///
/// `kappa3` multiplies here. This is the placement under which the
/// interaction and curvature terms of the position equations cancel at
/// leading order with `bbar` a critical point of the unit Kirchhoff-Routh
/// function.
pub fn cluster_scale(record: &CriticalPointRecord, eps: f64, consts: &ConstantsTable) -> f64 {
    let n = consts.n as f64;
    consts.kappa3 * eps.powf((n - 2.0) / n) * record.value.powf((n - 1.0) / n)
        / record.normal_derivative.powf((n - 2.0) / n)
}

/// Predicted cluster points with the bookkeeping of the chart correction.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterPlacement {
    pub points: Vec<SpherePoint>,
    pub scale: f64,
    /// Ambient tangent offsets `v_i = s bbar_i` at `z`.
    pub offsets: Vec<DVector<f64>>,
    /// `|bbar_i| (1 - sin|v_i|/|v_i|)`: the gap between the exponential
    /// chart used for placement and the projection used by the forward map.
    pub chart_correction: Vec<f64>,
    /// `|b_i - (sin|v_i|/|v_i|) bbar_i|` with `b_i` recomputed from `a_i` by
    /// the forward map, i.e. what is left once the chart correction is taken out.
    pub roundtrip_error: Vec<f64>,
}

pub fn predict_cluster_positions(cluster: &Cluster, eps: f64, consts: &ConstantsTable) -> Result<ClusterPlacement> {
    check_eps(eps)?;
    let z = &cluster.record.location;
    let s = cluster_scale(&cluster.record, eps, consts);
    let bbar = cluster.bbar.ambient();
    let mut points = Vec::with_capacity(bbar.len());
    let mut offsets = Vec::with_capacity(bbar.len());
    let mut chart = Vec::with_capacity(bbar.len());
    let mut roundtrip = Vec::with_capacity(bbar.len());
    for b in &bbar {
        let v = b * s;
        let t = v.norm();
        if t >= std::f64::consts::PI {
            return Err(Error::OutOfChart { norm: t });
        }
        let a = exp_map(z, &TangentVector::new_boundary(z.clone(), v.clone())?)?;
        if !a.is_boundary() {
            return Err(Error::NotOnBoundary { last: a.height() });
        }
        let sinc = if t == 0.0 { 1.0 } else { t.sin() / t };
        chart.push(b.norm() * (1.0 - sinc));
        let forward = project_tangent(a.coords(), z.coords()) / s;
        roundtrip.push((forward - b * sinc).norm());
        offsets.push(v);
        points.push(a);
    }
    Ok(ClusterPlacement { points, scale: s, offsets, chart_correction: chart, roundtrip_error: roundtrip })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BubbleKind {
    Interior { point: usize },
    BoundarySimple { point: usize },
    Cluster { cluster: usize, member: usize },
}

impl BubbleKind {
    pub fn label(&self) -> &'static str {
        match self {
            BubbleKind::Interior { .. } => "interior",
            BubbleKind::BoundarySimple { .. } => "boundary",
            BubbleKind::Cluster { .. } => "cluster",
        }
    }

    pub fn is_boundary(&self) -> bool {
        !matches!(self, BubbleKind::Interior { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub eps: f64,
    pub bubbles: Vec<BubbleParam>,
    pub kinds: Vec<BubbleKind>,
    pub mu: Vec<f64>,
    pub cluster_offsets: Vec<ClusterPlacement>,
    /// True when every bubble satisfies `lambda > 1/tau` and `eps ln lambda < tau`.
    pub in_neighbourhood: bool,
}

/// Leading-order parameters of every declared bubble at `eps`.
///
/// Interior bubbles sit exactly at `y_i` and simple boundary bubbles
/// exactly at `z_i`; cluster members carry the rate of their cluster point.
pub fn predict(scenario: &BlowupScenario, eps: f64, consts: &ConstantsTable, tau: f64) -> Result<Prediction> {
    check_eps(eps)?;
    if consts.n != scenario.dim() {
        return Err(Error::DimensionMismatch { expected: scenario.dim(), got: consts.n });
    }
    let field = &scenario.field;
    let mut raw: Vec<(SpherePoint, f64, BubbleKind)> = Vec::new();
    for (i, rec) in scenario.interior_points.iter().enumerate() {
        raw.push((rec.location.clone(), predict_interior_lambda(rec, eps, consts)?, BubbleKind::Interior { point: i }));
    }
    for (i, rec) in scenario.simple_boundary_points.iter().enumerate() {
        raw.push((
            rec.location.clone(),
            predict_boundary_lambda(rec, eps, consts)?,
            BubbleKind::BoundarySimple { point: i },
        ));
    }
    let mut placements = Vec::new();
    for (c, cl) in scenario.clusters.iter().enumerate() {
        let lambda = predict_boundary_lambda(&cl.record, eps, consts)?;
        let place = predict_cluster_positions(cl, eps, consts)?;
        for (k, a) in place.points.iter().enumerate() {
            raw.push((a.clone(), lambda, BubbleKind::Cluster { cluster: c, member: k }));
        }
        placements.push(place);
    }
    let mut bubbles = Vec::with_capacity(raw.len());
    let mut kinds = Vec::with_capacity(raw.len());
    let mut ok = true;
    for (a, lambda, kind) in raw {
        let mut p = BubbleParam::new(a, lambda, 1.0)?;
        p.alpha = predict_alpha(&p, field, eps);
        ok &= lambda > 1.0 / tau && eps * lambda.ln() < tau;
        bubbles.push(p);
        kinds.push(kind);
    }
    let mu = mu_values(&bubbles);
    Ok(Prediction { eps, bubbles, kinds, mu, cluster_offsets: placements, in_neighbourhood: ok })
}

fn mu_values(bubbles: &[BubbleParam]) -> Vec<f64> {
    bubbles.iter().map(|b| if b.boundary { b.lambda } else { b.lambda * b.lambda }).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MuPartition {
    /// `mu_i` in input order.
    pub mu: Vec<f64>,
    /// Indices sorted by increasing `mu`.
    pub order: Vec<usize>,
    pub boundary: Vec<usize>,
    pub interior: Vec<usize>,
    /// Comparability classes, each listed in increasing `mu`.
    pub classes: Vec<Vec<usize>>,
    pub threshold: f64,
}

/// `mu_i = lambda_i` (boundary) or `lambda_i^2` (interior), grouped into
/// classes: a new class starts when `mu` exceeds `threshold` times the
/// smallest `mu` of the current class.
pub fn mu_partition(bubbles: &[BubbleParam], threshold: f64) -> Result<MuPartition> {
    if bubbles.is_empty() {
        return Err(Error::Empty("bubbles"));
    }
    let mu = mu_values(bubbles);
    let mut order: Vec<usize> = (0..mu.len()).collect();
    order.sort_by(|&a, &b| mu[a].total_cmp(&mu[b]).then(a.cmp(&b)));
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut base = f64::NAN;
    for &i in &order {
        match classes.last_mut() {
            Some(cls) if mu[i] <= threshold * base => cls.push(i),
            _ => {
                base = mu[i];
                classes.push(vec![i]);
            }
        }
    }
    let boundary = (0..bubbles.len()).filter(|&i| bubbles[i].boundary).collect();
    let interior = (0..bubbles.len()).filter(|&i| !bubbles[i].boundary).collect();
    Ok(MuPartition { mu, order, boundary, interior, classes, threshold })
}

/// Residuals of the balancing equations at one bubble.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexResidual {
    pub index: usize,
    pub kind: BubbleKind,
    /// Largest single term of the `lambda`-equation.
    pub leading_term: f64,
    pub residual_e: f64,
    /// Norm of the position equation (for interior bubbles `|grad K|/lambda`).
    pub residual_f: f64,
    pub ratio_e: f64,
    /// Position residual over the largest single term of the position
    /// equation, or over `leading_term` when that equation has no terms.
    pub ratio_f: f64,
    /// Remainder scale the `lambda`-equation is allowed to leave.
    pub theoretical_remainder: f64,
    /// Remainder scale of the position equation.
    pub remainder_f: f64,
}

impl IndexResidual {
    pub fn ratio(&self) -> f64 {
        self.ratio_e.max(self.ratio_f)
    }
}

/// Barycentric pairing of the position equations of one cluster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairingCheck {
    pub cluster: usize,
    /// `|sum_i alpha_i lambda_i <F_i, abar - <a_i,abar> a_i>|`.
    pub value: f64,
    /// `sum_i alpha_i lambda_i d(a_i, abar) (1/lambda_i^2 + R_{a_i})`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub eps: f64,
    pub rows: Vec<IndexResidual>,
    pub pairings: Vec<PairingCheck>,
}

impl ResidualReport {
    /// Worst ratio over all indices.
    pub fn ratio(&self) -> f64 {
        self.rows.iter().map(IndexResidual::ratio).fold(0.0, f64::max)
    }
}

fn ln_inv(x: f64) -> f64 {
    if x > 0.0 {
        -x.ln()
    } else {
        0.0
    }
}

/// Assembles the balancing equations at the predicted parameters.
///
/// Boundary `i`: the `lambda`-equation
/// `-(c2/2) sum_{j in B} alpha_j lambda_i d_lambda eps_ij - alpha_i/K [c3 dK/dnu/lambda_i - c5 K eps]`
/// and the position equation
/// `-(c2/2) sum_j alpha_j (1/lambda_i) d_a eps_ij - alpha_i c6 grad K_1/(K lambda_i)`,
/// where the sum runs over the other members of the same cluster, or over
/// all boundary bubbles for a simple point.
///
/// Interior `i`: `-c2 sum_j alpha_j lambda_i d_lambda eps_ij
/// + c2 (n-2)/2 sum_{j interior} alpha_j H(a_i,a_j)/(lambda_i lambda_j)^{(n-2)/2}
/// + alpha_i (c4 Lap K/(lambda_i^2 K) + 2 c5 eps)`, with `j = i` included in
/// the `H` sum.
pub fn balancing_residual(
    scenario: &BlowupScenario,
    prediction: &Prediction,
    consts: &ConstantsTable,
) -> Result<ResidualReport> {
    let field = &scenario.field;
    let b = &prediction.bubbles;
    let nb = b.len();
    let nd = scenario.dim();
    let n = nd as f64;
    let eps = prediction.eps;
    let im = InteractionMatrix::assemble(b);
    let (c2, c3, c4, c5, c6) = (consts.c2, consts.c3, consts.c4, consts.c5, consts.c6);

    // remainder scales
    let mut r = eps;
    for (i, p) in b.iter().enumerate() {
        let g = if p.boundary { field.boundary_gradient(&p.a)?.norm() } else { field.gradient(&p.a).norm() };
        r += g / p.lambda + 1.0 / (p.lambda * p.lambda);
        for j in 0..nb {
            if j == i {
                continue;
            }
            let e = im.eps[(i, j)];
            r += if nd >= 6 {
                e.powf((n + 2.0) / (2.0 * (n - 2.0))) * ln_inv(e).powf((n + 2.0) / (2.0 * n))
            } else {
                e * ln_inv(e).powf(0.6)
            };
        }
        if !p.boundary {
            let ld = p.lambda * p.a.distance_to_boundary();
            r += if nd >= 6 { ld.ln().max(0.0) / ld.powf((n + 2.0) / 2.0) } else { ld.powi(-3) };
        }
    }
    let mut r1 = r * r;
    for i in 0..nb {
        for j in 0..nb {
            if i != j {
                let e = im.eps[(i, j)];
                r1 += e.powf(n / (n - 2.0)) * ln_inv(e);
            }
        }
    }
    let mut r2 = r1;
    for p in b.iter().filter(|p| !p.boundary) {
        let ld = p.lambda * p.a.distance_to_boundary();
        r2 += ld.ln().max(0.0) / ld.powf(n);
    }

    let group = |i: usize| -> Vec<usize> {
        match prediction.kinds[i] {
            BubbleKind::Cluster { cluster, .. } => (0..nb)
                .filter(|&j| {
                    j != i && matches!(prediction.kinds[j], BubbleKind::Cluster { cluster: c, .. } if c == cluster)
                })
                .collect(),
            BubbleKind::BoundarySimple { .. } => (0..nb).filter(|&j| j != i && b[j].boundary).collect(),
            BubbleKind::Interior { .. } => Vec::new(),
        }
    };

    let mut rows = Vec::with_capacity(nb);
    let mut f_vectors: Vec<DVector<f64>> = vec![DVector::zeros(nd + 1); nb];
    for i in 0..nb {
        let p = &b[i];
        let k = field.value(&p.a);
        let mut e_terms: Vec<f64> = Vec::new();
        let (residual_f, f_max, remainder_f, remainder_e);
        if p.boundary {
            for j in (0..nb).filter(|&j| j != i && b[j].boundary) {
                e_terms.push(-0.5 * c2 * b[j].alpha * im.dlam[(i, j)]);
            }
            let nu = field.normal_derivative(&p.a)?;
            e_terms.push(-p.alpha / k * c3 * nu / p.lambda);
            e_terms.push(p.alpha * c5 * eps);

            let mut f = DVector::zeros(nd + 1);
            let mut fmax: f64 = 0.0;
            for j in group(i) {
                let mut t = &im.da[i][j] * (-0.5 * c2 * b[j].alpha);
                t[nd] = 0.0;
                fmax = fmax.max(t.norm());
                f += t;
            }
            let t = field.boundary_gradient(&p.a)?.into_vec() * (-p.alpha * c6 / (k * p.lambda));
            fmax = fmax.max(t.norm());
            f += t;
            residual_f = f.norm();
            f_max = fmax;
            f_vectors[i] = f;

            let interior_eps: f64 = (0..nb).filter(|&j| !b[j].boundary).map(|j| im.eps[(i, j)]).sum();
            remainder_e = 1.0 / (p.lambda * p.lambda) + interior_eps + r1;
            let mut rai = r1;
            for j in (0..nb).filter(|&j| j != i && b[j].boundary) {
                rai += im.eps[(i, j)].powf((n + 1.0) / (n - 2.0)) * b[j].lambda * geodesic_distance(&p.a, &b[j].a);
            }
            remainder_f = 1.0 / (p.lambda * p.lambda) + interior_eps + rai;
        } else {
            for j in (0..nb).filter(|&j| j != i) {
                e_terms.push(-c2 * b[j].alpha * im.dlam[(i, j)]);
            }
            for j in (0..nb).filter(|&j| !b[j].boundary) {
                let h = green_regular_part(&p.a, &b[j].a)?;
                e_terms.push(c2 * (n - 2.0) / 2.0 * b[j].alpha * h / (p.lambda * b[j].lambda).powf((n - 2.0) / 2.0));
            }
            e_terms.push(p.alpha * c4 * field.laplacian(&p.a) / (p.lambda * p.lambda * k));
            e_terms.push(p.alpha * 2.0 * c5 * eps);
            residual_f = field.gradient(&p.a).norm() / p.lambda;
            f_max = 0.0;
            remainder_e = r2;
            let ld = p.lambda * p.a.distance_to_boundary();
            let other: f64 = (0..nb).filter(|&j| j != i).map(|j| im.eps[(i, j)]).sum();
            remainder_f = p.lambda.powi(-3) + ld.powf(2.0 - n) + other + r * r;
        }
        let residual_e: f64 = e_terms.iter().sum::<f64>().abs();
        let leading = e_terms.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        let ratio_e = if leading > 0.0 { residual_e / leading } else { 0.0 };
        let ratio_f = if f_max > 0.0 {
            residual_f / f_max
        } else if leading > 0.0 {
            residual_f / leading
        } else {
            0.0
        };
        rows.push(IndexResidual {
            index: i,
            kind: prediction.kinds[i],
            leading_term: leading,
            residual_e,
            residual_f,
            ratio_e,
            ratio_f,
            theoretical_remainder: remainder_e,
            remainder_f,
        });
    }

    let mut pairings = Vec::new();
    for c in 0..scenario.clusters.len() {
        let members: Vec<usize> = (0..nb)
            .filter(|&i| matches!(prediction.kinds[i], BubbleKind::Cluster { cluster, .. } if cluster == c))
            .collect();
        let pts: Vec<SpherePoint> = members.iter().map(|&i| b[i].a.clone()).collect();
        let abar = cluster_barycenter(&pts)?;
        let mut value = 0.0;
        let mut bound = 0.0;
        for &i in &members {
            let dir = project_tangent(abar.coords(), b[i].a.coords());
            value += b[i].alpha * b[i].lambda * f_vectors[i].dot(&dir);
            bound += b[i].alpha * b[i].lambda * geodesic_distance(&b[i].a, &abar) * rows[i].remainder_f;
        }
        pairings.push(PairingCheck { cluster: c, value: value.abs(), bound });
    }
    Ok(ResidualReport { eps, rows, pairings })
}

/// Predictions and residual reports over a list of `eps`, computed in
/// parallel and returned in input order.
pub fn sweep(
    scenario: &BlowupScenario,
    eps_list: &[f64],
    consts: &ConstantsTable,
) -> Result<Vec<(Prediction, ResidualReport)>> {
    use rayon::prelude::*;
    eps_list
        .par_iter()
        .map(|&e| {
            let p = predict(scenario, e, consts, DEFAULT_TAU)?;
            let r = balancing_residual(scenario, &p, consts)?;
            Ok((p, r))
        })
        .collect()
}

/// Kirchhoff-Routh functional of a cluster, with `Q = D^2 K_1(z)`.
pub fn cluster_functional(cluster: &Cluster) -> KirchhoffRouth {
    cluster.bbar.functional()
}

/// `D^2 K_1(z)` of a cluster in its intrinsic frame.
pub fn cluster_hessian(cluster: &Cluster) -> &DMatrix<f64> {
    &cluster.record.hessian_tangential
}

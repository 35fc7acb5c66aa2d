//! Closed-form rigid 2D pose estimation from matched point pairs.
//!
//! Both estimators solve `p_world ≈ R(θ)·p_body + t`:
//!
//! * DLT linearizes the model as `A·m = b` with `m = (cos θ, sin θ, t_x, t_y)`
//!   left unconstrained, solves it by least squares, and reads off
//!   `θ = atan2(m₂, m₁)`, `t = (m₃, m₄)`. The recovered `(m₁, m₂)` need not
//!   have unit norm.
//! * Kabsch centers both sets, takes the SVD of the 2×2 cross-covariance
//!   `H = Σ q_body q_worldᵀ = U Σ Vᵀ`, sets `R = V Uᵀ` (flipping the second
//!   column of `V` if that yields a reflection), and aligns the centroids.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Matrix4, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point2, Pose2D};

/// Minimum number of pairs: two distinct pairs fix the 3 DOF of a rigid transform.
pub const MIN_PAIRS: usize = 2;

/// Relative spread below which the body points count as coincident.
const DEGENERATE_SPREAD: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("body and world point lists differ in length ({body} vs {world})")]
    LengthMismatch { body: usize, world: usize },
    #[error("need at least {MIN_PAIRS} point pairs, got {0}")]
    TooFewPairs(usize),
    #[error("degenerate geometry: body points are coincident, rotation is unobservable")]
    Degenerate,
    #[error("estimate is not finite")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Dlt,
    #[default]
    Kabsch,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Dlt => "dlt",
            Estimator::Kabsch => "kabsch",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dlt" => Ok(Estimator::Dlt),
            "kabsch" => Ok(Estimator::Kabsch),
            other => Err(format!("unknown estimator {other:?}")),
        }
    }
}

/// Borrowed, length-checked body/world correspondences.
#[derive(Debug, Clone, Copy)]
pub struct PointPairSet<'a> {
    body: &'a [Point2],
    world: &'a [Point2],
}

impl<'a> PointPairSet<'a> {
    pub fn new(body: &'a [Point2], world: &'a [Point2]) -> Result<Self, EstimationError> {
        if body.len() != world.len() {
            return Err(EstimationError::LengthMismatch { body: body.len(), world: world.len() });
        }
        if body.len() < MIN_PAIRS {
            return Err(EstimationError::TooFewPairs(body.len()));
        }
        Ok(Self { body, world })
    }

    pub fn body(&self) -> &'a [Point2] {
        self.body
    }

    pub fn world(&self) -> &'a [Point2] {
        self.world
    }

    pub fn len(&self) -> usize {
        self.body.len()
    }

    pub fn is_empty(&self) -> bool {
        self.body.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseEstimate {
    pub pose: Pose2D,
    /// RMS of post-fit pair distances.
    pub residual_rms: f64,
    pub method: Estimator,
}

pub fn estimate_pose(pairs: &PointPairSet<'_>, method: Estimator) -> Result<PoseEstimate, EstimationError> {
    match method {
        Estimator::Dlt => estimate_pose_dlt(pairs),
        Estimator::Kabsch => estimate_pose_kabsch(pairs),
    }
}

/// RMS distance between `pose·body_i` and `world_i`.
pub fn residual_rms(pose: &Pose2D, body: &[Point2], world: &[Point2]) -> f64 {
    if body.is_empty() {
        return 0.0;
    }
    let ss: f64 = body
        .iter()
        .zip(world)
        .map(|(b, w)| {
            let d = pose.transform_point(b) - *w;
            d.x * d.x + d.y * d.y
        })
        .sum();
    (ss / body.len() as f64).sqrt()
}

fn centroid(pts: &[Point2]) -> Point2 {
    let n = pts.len() as f64;
    let s = pts.iter().fold(Point2::ORIGIN, |acc, p| acc + *p);
    Point2::new(s.x / n, s.y / n)
}

fn is_degenerate(body: &[Point2]) -> bool {
    let c = centroid(body);
    let spread: f64 = body.iter().map(|p| (*p - c).norm().powi(2)).sum();
    let scale: f64 = body.iter().map(|p| p.norm().powi(2)).sum();
    spread <= DEGENERATE_SPREAD * (1.0 + scale)
}

fn finish(pose: Option<Pose2D>, pairs: &PointPairSet<'_>, method: Estimator) -> Result<PoseEstimate, EstimationError> {
    let pose = pose.ok_or(EstimationError::NonFinite)?;
    let residual_rms = residual_rms(&pose, pairs.body, pairs.world);
    if !residual_rms.is_finite() {
        return Err(EstimationError::NonFinite);
    }
    Ok(PoseEstimate { pose, residual_rms, method })
}

/// Least-squares solution of the stacked `2n × 4` linear system via its normal equations.
pub fn estimate_pose_dlt(pairs: &PointPairSet<'_>) -> Result<PoseEstimate, EstimationError> {
    if is_degenerate(pairs.body) {
        return Err(EstimationError::Degenerate);
    }
    // Rows (x, -y, 1, 0) -> X and (y, x, 0, 1) -> Y, accumulated as AᵀA and Aᵀb.
    let mut ata = Matrix4::<f64>::zeros();
    let mut atb = Vector4::<f64>::zeros();
    for (b, w) in pairs.body.iter().zip(pairs.world) {
        let r1 = Vector4::new(b.x, -b.y, 1.0, 0.0);
        let r2 = Vector4::new(b.y, b.x, 0.0, 1.0);
        ata += r1 * r1.transpose() + r2 * r2.transpose();
        atb += r1 * w.x + r2 * w.y;
    }
    let m = ata.cholesky().ok_or(EstimationError::Degenerate)?.solve(&atb);
    let pose = Pose2D::try_new(m[2], m[3], m[1].atan2(m[0]));
    finish(pose, pairs, Estimator::Dlt)
}

/// SVD of a 2×2 matrix: `m = u · diag(sigma) · vᵀ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Svd2 {
    pub u: Matrix2<f64>,
    /// Nonnegative, descending.
    pub sigma: [f64; 2],
    pub v: Matrix2<f64>,
}

/// Closed-form 2×2 SVD.
///
/// Any 2×2 matrix factors as `Rot(φ)·diag(s₁, s₂)·Rot(ψ)` with
/// `s₁ = Q + R`, `s₂ = Q - R`, where `Q`, `R` are the norms of its
/// similarity and anti-similarity parts. A negative `s₂` is absorbed by
/// flipping the second column of `U`.
pub fn svd2(m: &Matrix2<f64>) -> Svd2 {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let e = (a + d) / 2.0;
    let f = (a - d) / 2.0;
    let g = (c + b) / 2.0;
    let h = (c - b) / 2.0;
    let q = e.hypot(h);
    let r = f.hypot(g);
    let a1 = g.atan2(f);
    let a2 = h.atan2(e);
    let psi = (a2 - a1) / 2.0;
    let phi = (a2 + a1) / 2.0;

    let mut u = crate::geometry::rotation_matrix(phi);
    let v = crate::geometry::rotation_matrix(-psi);
    let mut s2 = q - r;
    if s2 < 0.0 {
        s2 = -s2;
        u.set_column(1, &(-u.column(1)));
    }
    Svd2 { u, sigma: [q + r, s2], v }
}

/// Kabsch rotation `R = V Uᵀ` for a cross-covariance `H`, reflection-corrected.
pub fn kabsch_rotation(h: &Matrix2<f64>) -> Matrix2<f64> {
    let Svd2 { u, mut v, .. } = svd2(h);
    let r = v * u.transpose();
    if r.determinant() < 0.0 {
        v.set_column(1, &(-v.column(1)));
        v * u.transpose()
    } else {
        r
    }
}

fn cross_covariance(body: &[Point2], world: &[Point2], cb: Point2, cw: Point2) -> Matrix2<f64> {
    body.iter().zip(world).fold(Matrix2::zeros(), |h, (b, w)| {
        let qb = *b - cb;
        let qw = *w - cw;
        h + Matrix2::new(qb.x * qw.x, qb.x * qw.y, qb.y * qw.x, qb.y * qw.y)
    })
}

pub fn estimate_pose_kabsch(pairs: &PointPairSet<'_>) -> Result<PoseEstimate, EstimationError> {
    if is_degenerate(pairs.body) {
        return Err(EstimationError::Degenerate);
    }
    let cb = centroid(pairs.body);
    let cw = centroid(pairs.world);
    let r = kabsch_rotation(&cross_covariance(pairs.body, pairs.world, cb, cw));
    let t = cw - Point2::new(r[(0, 0)] * cb.x + r[(0, 1)] * cb.y, r[(1, 0)] * cb.x + r[(1, 1)] * cb.y);
    let pose = Pose2D::try_new(t.x, t.y, r[(1, 0)].atan2(r[(0, 0)]));
    finish(pose, pairs, Estimator::Kabsch)
}

/// Best rigid transform taking `src` onto `dst`; never fails.
///
/// Falls back to a pure centroid translation when the rotation is
/// unobservable (fewer than two distinct source points).
pub fn fit_rigid(src: &[Point2], dst: &[Point2]) -> Pose2D {
    debug_assert_eq!(src.len(), dst.len());
    if src.is_empty() {
        return Pose2D::IDENTITY;
    }
    if let Ok(est) = PointPairSet::new(src, dst).and_then(|p| estimate_pose_kabsch(&p)) {
        return est.pose;
    }
    let t = centroid(dst) - centroid(src);
    Pose2D::new(t.x, t.y, 0.0)
}

//! Planar rigid-body primitives.

use std::f64::consts::{PI, TAU};
use std::fmt;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let mut r = theta.rem_euclid(TAU);
    // rem_euclid may round up to exactly TAU
    if r >= TAU {
        r -= TAU;
    }
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Signed shortest angular difference `a - b`, in `(-π, π]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    normalize_angle(a - b)
}

/// `[[cos θ, -sin θ], [sin θ, cos θ]]`.
pub fn rotation_matrix(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl std::ops::Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

impl std::ops::Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// A planar pose `(t_x, t_y, θ)` mapping body coordinates into the world frame.
///
/// The heading is normalized to `(-π, π]` on construction and can only be read
/// back through [`Pose2D::theta`], so a stored pose is always canonical.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "RawPose", into = "RawPose")]
pub struct Pose2D {
    x: f64,
    y: f64,
    theta: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPose {
    x: f64,
    y: f64,
    theta: f64,
}

impl From<RawPose> for Pose2D {
    fn from(raw: RawPose) -> Self {
        Pose2D::new(raw.x, raw.y, raw.theta)
    }
}

impl From<Pose2D> for RawPose {
    fn from(p: Pose2D) -> Self {
        RawPose { x: p.x, y: p.y, theta: p.theta }
    }
}

impl Pose2D {
    pub const IDENTITY: Pose2D = Pose2D { x: 0.0, y: 0.0, theta: 0.0 };

    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        debug_assert!(
            x.is_finite() && y.is_finite() && theta.is_finite(),
            "non-finite pose ({x}, {y}, {theta})"
        );
        Self { x, y, theta: normalize_angle(theta) }
    }

    /// Like [`Pose2D::new`] but returns `None` instead of accepting non-finite input.
    pub fn try_new(x: f64, y: f64, theta: f64) -> Option<Self> {
        (x.is_finite() && y.is_finite() && theta.is_finite()).then(|| Self::new(x, y, theta))
    }

    pub fn from_translation(t: Point2, theta: f64) -> Self {
        Self::new(t.x, t.y, theta)
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn translation(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn rotation(&self) -> Matrix2<f64> {
        rotation_matrix(self.theta)
    }

    /// `R(θ)·p + t`.
    pub fn transform_point(&self, p: &Point2) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        Point2::new(c * p.x - s * p.y + self.x, s * p.x + c * p.y + self.y)
    }

    /// `R(θ)ᵀ·(p - t)`.
    pub fn inverse_transform_point(&self, p: &Point2) -> Point2 {
        let (s, c) = self.theta.sin_cos();
        let dx = p.x - self.x;
        let dy = p.y - self.y;
        Point2::new(c * dx + s * dy, -s * dx + c * dy)
    }

    pub fn inverse(&self) -> Pose2D {
        let t = Pose2D::new(0.0, 0.0, -self.theta).transform_point(&-self.translation());
        Pose2D::new(t.x, t.y, -self.theta)
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Pose2D) -> Pose2D {
        let t = self.transform_point(&other.translation());
        Pose2D::new(t.x, t.y, self.theta + other.theta)
    }

    /// The pose reached by rotating the field 180° about its center.
    pub fn point_reflected(&self) -> Pose2D {
        Pose2D::new(-self.x, -self.y, self.theta + PI)
    }
}

impl fmt::Display for Pose2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6}, {:.6} rad)", self.x, self.y, self.theta)
    }
}

/// Maps body-frame points into the world frame, preserving order.
pub fn transform_to_world(pose: &Pose2D, pts: &[Point2]) -> Vec<Point2> {
    pts.iter().map(|p| pose.transform_point(p)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseError {
    pub position: f64,
    pub orientation: f64,
}

/// Euclidean translation error and absolute wrapped heading error in `[0, π]`.
pub fn pose_error(a: &Pose2D, b: &Pose2D) -> PoseError {
    PoseError {
        position: a.translation().distance(&b.translation()),
        orientation: angle_diff(a.theta, b.theta).abs(),
    }
}

/// Heading of the weighted circular mean `atan2(Σ wᵢ sin θᵢ, Σ wᵢ cos θᵢ)`.
pub fn circular_mean<I>(angles: I) -> f64
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let (s, c) = angles
        .into_iter()
        .fold((0.0, 0.0), |(s, c), (theta, w)| (s + w * theta.sin(), c + w * theta.cos()));
    s.atan2(c)
}

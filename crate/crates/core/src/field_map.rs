//! The a-priori landmark map of the field and its on-disk format.
//!
//! Map files are TOML:
//!
//! ```toml
//! version = 1
//! units = "m"
//! field_length = 14.0
//! field_width = 9.0
//!
//! [[landmarks]]
//! id = 0
//! class = "L"
//! x = -7.0
//! y = -4.5
//! ```
//!
//! Coordinates are field-centered, `x` along the length. Class codes are
//! `L` (corner), `T` (T-intersection), `X` (cross) and `G` (goal post).

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Point2;

pub const MAP_FORMAT_VERSION: u32 = 1;
pub const MIN_LANDMARKS: usize = 4;
/// How far outside the field rectangle a landmark may sit (the border strip).
pub const BOUNDARY_MARGIN: f64 = 1.0;
const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("cannot read map file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse map file {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("unsupported map format version {0} (expected {MAP_FORMAT_VERSION})")]
    Version(u32),
    #[error("unsupported units {0:?} (expected \"m\")")]
    Units(String),
    #[error("field dimensions must be positive, got {length} x {width}")]
    Dimensions { length: f64, width: f64 },
    #[error("map needs at least {MIN_LANDMARKS} landmarks, got {0}")]
    TooFewLandmarks(usize),
    #[error("duplicate landmark id {0}")]
    DuplicateId(u32),
    #[error("landmark {id} at {position} lies outside the field bounds")]
    OutOfBounds { id: u32, position: Point2 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum LandmarkClass {
    Corner,
    TIntersection,
    Cross,
    GoalPost,
}

impl LandmarkClass {
    pub const ALL: [LandmarkClass; 4] =
        [LandmarkClass::Corner, LandmarkClass::TIntersection, LandmarkClass::Cross, LandmarkClass::GoalPost];

    pub fn code(self) -> char {
        match self {
            LandmarkClass::Corner => 'L',
            LandmarkClass::TIntersection => 'T',
            LandmarkClass::Cross => 'X',
            LandmarkClass::GoalPost => 'G',
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for LandmarkClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

impl FromStr for LandmarkClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "L" => Ok(LandmarkClass::Corner),
            "T" => Ok(LandmarkClass::TIntersection),
            "X" => Ok(LandmarkClass::Cross),
            "G" => Ok(LandmarkClass::GoalPost),
            other => Err(format!("unknown landmark class {other:?} (expected one of L, T, X, G)")),
        }
    }
}

impl TryFrom<String> for LandmarkClass {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<LandmarkClass> for String {
    fn from(c: LandmarkClass) -> String {
        c.code().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Landmark {
    pub id: u32,
    pub class: LandmarkClass,
    #[serde(flatten)]
    pub position: Point2,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapFile {
    version: u32,
    units: String,
    field_length: f64,
    field_width: f64,
    landmarks: Vec<Landmark>,
}

/// A validated, immutable landmark map.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldMap {
    landmarks: Vec<Landmark>,
    field_length: f64,
    field_width: f64,
    by_class: [Vec<usize>; 4],
}

impl FieldMap {
    pub fn new(landmarks: Vec<Landmark>, field_length: f64, field_width: f64) -> Result<Self, MapError> {
        if !(field_length > 0.0 && field_width > 0.0 && field_length.is_finite() && field_width.is_finite()) {
            return Err(MapError::Dimensions { length: field_length, width: field_width });
        }
        if landmarks.len() < MIN_LANDMARKS {
            return Err(MapError::TooFewLandmarks(landmarks.len()));
        }
        let mut seen = HashSet::with_capacity(landmarks.len());
        let half_l = field_length / 2.0 + BOUNDARY_MARGIN;
        let half_w = field_width / 2.0 + BOUNDARY_MARGIN;
        for lm in &landmarks {
            if !seen.insert(lm.id) {
                return Err(MapError::DuplicateId(lm.id));
            }
            let p = lm.position;
            if !p.is_finite() || p.x.abs() > half_l || p.y.abs() > half_w {
                return Err(MapError::OutOfBounds { id: lm.id, position: p });
            }
        }
        let mut by_class: [Vec<usize>; 4] = Default::default();
        for (i, lm) in landmarks.iter().enumerate() {
            by_class[lm.class.index()].push(i);
        }
        Ok(Self { landmarks, field_length, field_width, by_class })
    }

    pub fn landmarks(&self) -> &[Landmark] {
        &self.landmarks
    }

    pub fn len(&self) -> usize {
        self.landmarks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.landmarks.is_empty()
    }

    pub fn field_length(&self) -> f64 {
        self.field_length
    }

    pub fn field_width(&self) -> f64 {
        self.field_width
    }

    /// Indices into [`FieldMap::landmarks`] of every landmark of `class`.
    pub fn indices_of_class(&self, class: LandmarkClass) -> &[usize] {
        &self.by_class[class.index()]
    }

    pub fn landmark_by_id(&self, id: u32) -> Option<&Landmark> {
        self.landmarks.iter().find(|l| l.id == id)
    }

    pub fn contains(&self, p: &Point2) -> bool {
        p.x.abs() <= self.field_length / 2.0 && p.y.abs() <= self.field_width / 2.0
    }

    /// Ids of landmarks without a same-class partner under 180° rotation about the center.
    pub fn symmetry_violations(&self) -> Vec<u32> {
        self.landmarks
            .iter()
            .filter(|a| {
                !self.landmarks.iter().any(|b| {
                    b.class == a.class && b.position.distance(&-a.position) <= SYMMETRY_TOL
                })
            })
            .map(|a| a.id)
            .collect()
    }

    pub fn to_toml_string(&self) -> String {
        let file = MapFile {
            version: MAP_FORMAT_VERSION,
            units: "m".into(),
            field_length: self.field_length,
            field_width: self.field_width,
            landmarks: self.landmarks.clone(),
        };
        toml::to_string(&file).expect("map serialization is infallible")
    }

    pub fn from_toml_str(s: &str) -> Result<Self, MapError> {
        Self::parse(s, Path::new("<string>"))
    }

    fn parse(s: &str, path: &Path) -> Result<Self, MapError> {
        let file: MapFile = toml::from_str(s)
            .map_err(|e| MapError::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        if file.version != MAP_FORMAT_VERSION {
            return Err(MapError::Version(file.version));
        }
        if file.units != "m" {
            return Err(MapError::Units(file.units));
        }
        FieldMap::new(file.landmarks, file.field_length, file.field_width)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), MapError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml_string())
            .map_err(|source| MapError::Io { path: path.to_path_buf(), source })
    }
}

/// Reads and validates a map file. Asymmetric maps load with a warning.
pub fn load_map(path: impl AsRef<Path>) -> Result<FieldMap, MapError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| MapError::Io { path: path.to_path_buf(), source })?;
    let map = FieldMap::parse(&text, path)?;
    let asym = map.symmetry_violations();
    if !asym.is_empty() {
        log::warn!(
            "map {} is not symmetric under 180° rotation; landmarks without a twin: {:?}",
            path.display(),
            asym
        );
    }
    Ok(map)
}

/// Reference dimensions of the AdultSize field every feature is scaled from.
const REF_LENGTH: f64 = 14.0;
const REF_WIDTH: f64 = 9.0;
const GOAL_WIDTH: f64 = 2.6;
const GOAL_AREA_DEPTH: f64 = 1.0;
const GOAL_AREA_WIDTH: f64 = 4.0;
const PENALTY_AREA_DEPTH: f64 = 3.0;
const PENALTY_AREA_WIDTH: f64 = 6.0;
const PENALTY_MARK_DISTANCE: f64 = 2.1;
const CENTER_CIRCLE_RADIUS: f64 = 1.5;

/// Builds the point-landmark layout of a RoboCup Humanoid AdultSize field.
///
/// Line features scale with the requested dimensions (lengths along `x` by
/// `field_length / 14`, along `y` by `field_width / 9`). The result is
/// symmetric under 180° rotation by construction: every feature is emitted
/// together with its negated twin.
pub fn generate_default_map(field_length: f64, field_width: f64) -> Result<FieldMap, MapError> {
    if !(field_length > 0.0 && field_width > 0.0 && field_length.is_finite() && field_width.is_finite()) {
        return Err(MapError::Dimensions { length: field_length, width: field_width });
    }
    use LandmarkClass::*;

    let sx = field_length / REF_LENGTH;
    let sy = field_width / REF_WIDTH;
    let hl = field_length / 2.0;
    let hw = field_width / 2.0;
    let goal_area_x = hl - GOAL_AREA_DEPTH * sx;
    let goal_area_y = GOAL_AREA_WIDTH * sy / 2.0;
    let penalty_area_x = hl - PENALTY_AREA_DEPTH * sx;
    let penalty_area_y = PENALTY_AREA_WIDTH * sy / 2.0;
    let penalty_mark_x = hl - PENALTY_MARK_DISTANCE * sx;
    let circle_r = CENTER_CIRCLE_RADIUS * sx.min(sy);
    let post_y = GOAL_WIDTH * sy / 2.0;

    // One representative per symmetric pair (the twin is added below).
    let features: [(LandmarkClass, f64, f64); 15] = [
        (Corner, -hl, -hw),
        (Corner, -hl, hw),
        (Corner, -goal_area_x, -goal_area_y),
        (Corner, -goal_area_x, goal_area_y),
        (Corner, -penalty_area_x, -penalty_area_y),
        (Corner, -penalty_area_x, penalty_area_y),
        (TIntersection, -hl, -goal_area_y),
        (TIntersection, -hl, goal_area_y),
        (TIntersection, -hl, -penalty_area_y),
        (TIntersection, -hl, penalty_area_y),
        (TIntersection, 0.0, -hw),
        (Cross, -penalty_mark_x, 0.0),
        (Cross, 0.0, -circle_r),
        (GoalPost, -hl, -post_y),
        (GoalPost, -hl, post_y),
    ];

    let mut landmarks = Vec::with_capacity(2 * features.len() + 1);
    let mut push = |class, x: f64, y: f64| {
        let id = landmarks.len() as u32;
        landmarks.push(Landmark { id, class, position: Point2::new(x, y) });
    };
    for &(class, x, y) in &features {
        push(class, x, y);
    }
    for &(class, x, y) in &features {
        push(class, -x, -y);
    }
    push(Cross, 0.0, 0.0);

    FieldMap::new(landmarks, field_length, field_width)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_map() -> FieldMap {
        generate_default_map(14.0, 9.0).unwrap()
    }

    #[test]
    fn default_map_is_point_symmetric() {
        let m = default_map();
        assert!(m.symmetry_violations().is_empty());
        let mut a: Vec<_> = m
            .landmarks()
            .iter()
            .map(|l| (l.class, (l.position.x * 1e6).round() as i64, (l.position.y * 1e6).round() as i64))
            .collect();
        let mut b: Vec<_> = a.iter().map(|&(c, x, y)| (c, -x, -y)).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn default_map_has_field_corners() {
        let m = default_map();
        for (x, y) in [(7.0, 4.5), (7.0, -4.5), (-7.0, 4.5), (-7.0, -4.5)] {
            assert!(
                m.landmarks()
                    .iter()
                    .any(|l| l.class == LandmarkClass::Corner && l.position == Point2::new(x, y)),
                "missing corner ({x}, {y})"
            );
        }
    }

    #[test]
    fn default_map_is_deterministic() {
        assert_eq!(default_map(), default_map());
        assert_eq!(default_map().len(), 31);
        assert_eq!(default_map().indices_of_class(LandmarkClass::GoalPost).len(), 4);
    }

    #[test]
    fn rejects_nonpositive_dimensions() {
        assert!(matches!(generate_default_map(0.0, 9.0), Err(MapError::Dimensions { .. })));
        assert!(matches!(generate_default_map(14.0, -1.0), Err(MapError::Dimensions { .. })));
    }

    #[test]
    fn round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        for (l, w) in [(14.0, 9.0), (9.0, 6.0), (22.0, 14.0)] {
            let m = generate_default_map(l, w).unwrap();
            let path = dir.path().join("map.toml");
            m.save(&path).unwrap();
            assert_eq!(load_map(&path).unwrap(), m);
        }
    }

    #[test]
    fn duplicate_id_is_named() {
        let text = default_map().to_toml_string().replacen("id = 1\n", "id = 0\n", 1);
        let err = FieldMap::from_toml_str(&text).unwrap_err();
        assert!(matches!(err, MapError::DuplicateId(0)));
        assert!(err.to_string().contains("id 0"));
    }

    #[test]
    fn empty_landmark_list_rejected() {
        let text = "version = 1\nunits = \"m\"\nfield_length = 14.0\nfield_width = 9.0\nlandmarks = []\n";
        assert!(matches!(FieldMap::from_toml_str(text), Err(MapError::TooFewLandmarks(0))));
    }

    #[test]
    fn asymmetric_map_loads() {
        let lms = vec![
            Landmark { id: 0, class: LandmarkClass::Corner, position: Point2::new(0.0, 0.0) },
            Landmark { id: 1, class: LandmarkClass::Corner, position: Point2::new(1.0, 0.0) },
            Landmark { id: 2, class: LandmarkClass::Cross, position: Point2::new(1.0, 1.0) },
            Landmark { id: 3, class: LandmarkClass::GoalPost, position: Point2::new(0.0, 2.0) },
        ];
        let m = FieldMap::new(lms, 14.0, 9.0).unwrap();
        assert_eq!(m.symmetry_violations(), vec![1, 2, 3]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("asym.toml");
        m.save(&path).unwrap();
        assert_eq!(load_map(&path).unwrap(), m);
    }

    #[test]
    fn rejects_bad_header_and_class() {
        let good = default_map().to_toml_string();
        assert!(matches!(
            FieldMap::from_toml_str(&good.replace("version = 1", "version = 2")),
            Err(MapError::Version(2))
        ));
        assert!(matches!(
            FieldMap::from_toml_str(&good.replacen("class = \"L\"", "class = \"Q\"", 1)),
            Err(MapError::Parse { .. })
        ));
        assert!(matches!(
            FieldMap::from_toml_str(&good.replacen("x = -7.0", "x = -70.0", 1)),
            Err(MapError::OutOfBounds { id: 0, .. })
        ));
    }

    #[test]
    fn missing_file_names_path() {
        let err = load_map("/nonexistent/field.toml").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/field.toml"));
    }
}

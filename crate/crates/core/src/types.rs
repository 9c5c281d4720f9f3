//! Sensor grids, class palette, labels and evaluation buckets.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Smallest depth a valid pixel may carry; 0.0 is reserved for "missing".
pub const MIN_VALID_DEPTH_M: f32 = 0.05;

/// Largest depth representable in the 16-bit millimetre encoding.
pub const MAX_STORED_DEPTH_M: f32 = 65.535;

/// An RGB-D capture: 8-bit RGB plus per-pixel depth in metres.
///
/// Grids are row-major. A depth of exactly `0.0` marks a missing reading;
/// every other depth is at least [`MIN_VALID_DEPTH_M`].
#[derive(Debug, Clone, PartialEq)]
pub struct RgbdFrame {
    frame_id: String,
    width: usize,
    height: usize,
    rgb: Vec<u8>,
    depth: Vec<f32>,
}

impl RgbdFrame {
    /// Builds a frame, clamping positive depths up to [`MIN_VALID_DEPTH_M`].
    pub fn new(
        frame_id: impl Into<String>,
        width: usize,
        height: usize,
        rgb: Vec<u8>,
        mut depth: Vec<f32>,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DimensionMismatch(format!(
                "frame must be non-empty, got {width}x{height}"
            )));
        }
        let n = width * height;
        if rgb.len() != n * 3 {
            return Err(Error::DimensionMismatch(format!(
                "rgb has {} bytes, expected {}",
                rgb.len(),
                n * 3
            )));
        }
        if depth.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "depth has {} values, expected {n}",
                depth.len()
            )));
        }
        for d in &mut depth {
            if !d.is_finite() {
                return Err(Error::NonFinite("depth"));
            }
            if *d < 0.0 {
                return Err(Error::Invalid(format!("negative depth {d}")));
            }
            if *d > 0.0 && *d < MIN_VALID_DEPTH_M {
                *d = MIN_VALID_DEPTH_M;
            }
        }
        Ok(Self {
            frame_id: frame_id.into(),
            width,
            height,
            rgb,
            depth,
        })
    }

    pub fn frame_id(&self) -> &str {
        &self.frame_id
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn rgb(&self) -> &[u8] {
        &self.rgb
    }

    pub fn depth(&self) -> &[f32] {
        &self.depth
    }

    pub fn rgb_at(&self, row: usize, col: usize) -> [u8; 3] {
        let i = (row * self.width + col) * 3;
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    pub fn depth_at(&self, row: usize, col: usize) -> f32 {
        self.depth[row * self.width + col]
    }

    pub fn with_id(mut self, frame_id: impl Into<String>) -> Self {
        self.frame_id = frame_id.into();
        self
    }

    /// Depth as millimetre integers, 0 = missing. Values beyond 65.535 m saturate.
    pub fn depth_mm(&self) -> Vec<u16> {
        self.depth.iter().map(|&d| depth_to_mm(d)).collect()
    }

    /// Snaps every depth onto the millimetre grid used on disk and on the wire,
    /// so that a save/load round trip is bit-exact.
    pub fn quantized(&self) -> Self {
        let depth = self
            .depth
            .iter()
            .map(|&d| depth_from_mm(depth_to_mm(d)))
            .collect();
        Self {
            depth,
            ..self.clone()
        }
    }

    /// Rebuilds a frame from millimetre depth.
    pub fn from_depth_mm(
        frame_id: impl Into<String>,
        width: usize,
        height: usize,
        rgb: Vec<u8>,
        depth_mm: &[u16],
    ) -> Result<Self> {
        let depth = depth_mm.iter().map(|&mm| depth_from_mm(mm)).collect();
        Self::new(frame_id, width, height, rgb, depth)
    }

    /// Fraction of pixels with missing depth.
    pub fn missing_depth_fraction(&self) -> f64 {
        let missing = self.depth.iter().filter(|&&d| d == 0.0).count();
        missing as f64 / self.depth.len() as f64
    }
}

pub fn depth_to_mm(d: f32) -> u16 {
    if d <= 0.0 {
        0
    } else {
        let mm = (d.min(MAX_STORED_DEPTH_M) * 1000.0).round();
        (mm as u16).max((MIN_VALID_DEPTH_M * 1000.0) as u16)
    }
}

pub fn depth_from_mm(mm: u16) -> f32 {
    mm as f32 / 1000.0
}

/// Whether a label map came from the generator or from a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    GroundTruth,
    Predicted,
}

/// Per-pixel class indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticMap {
    width: usize,
    height: usize,
    labels: Vec<u8>,
    provenance: Provenance,
}

impl SemanticMap {
    pub fn new(
        width: usize,
        height: usize,
        labels: Vec<u8>,
        provenance: Provenance,
    ) -> Result<Self> {
        if labels.len() != width * height || labels.is_empty() {
            return Err(Error::DimensionMismatch(format!(
                "semantic map has {} labels, expected {width}x{height}",
                labels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
            provenance,
        })
    }

    pub fn filled(width: usize, height: usize, class: u8, provenance: Provenance) -> Self {
        Self {
            width,
            height,
            labels: vec![class; width * height],
            provenance,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn at(&self, row: usize, col: usize) -> u8 {
        self.labels[row * self.width + col]
    }

    /// Checks every index against a class count.
    pub fn validate(&self, classes: usize) -> Result<()> {
        match self.labels.iter().find(|&&l| l as usize >= classes) {
            Some(&bad) => Err(Error::ClassOutOfRange {
                index: bad as usize,
                classes,
            }),
            None => Ok(()),
        }
    }

    pub fn matches(&self, frame: &RgbdFrame) -> bool {
        self.width == frame.width() && self.height == frame.height()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub name: String,
    pub color: [u8; 3],
}

/// Ordered class palette. Index 0 is always `floor`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ClassEntry>", into = "Vec<ClassEntry>")]
pub struct ClassTable {
    entries: Vec<ClassEntry>,
}

impl ClassTable {
    pub const FLOOR: u8 = 0;

    pub fn new(entries: Vec<ClassEntry>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::Invalid(format!(
                "class table needs at least 2 classes, got {}",
                entries.len()
            )));
        }
        if entries.len() > 256 {
            return Err(Error::Invalid("class table exceeds 256 classes".into()));
        }
        if entries[0].name != "floor" {
            return Err(Error::Invalid(format!(
                "class 0 must be \"floor\", got {:?}",
                entries[0].name
            )));
        }
        let mut seen = HashSet::new();
        for e in &entries {
            if e.name.is_empty()
                || e
                    .name
                    .chars()
                    .any(|c| c.is_whitespace() || c == ',' || c == '=')
            {
                return Err(Error::Invalid(format!("bad class name {:?}", e.name)));
            }
            if !seen.insert(e.name.as_str()) {
                return Err(Error::Invalid(format!("duplicate class name {:?}", e.name)));
            }
        }
        Ok(Self { entries })
    }

    /// Builds a table from names with a generated palette.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let entries = names
            .iter()
            .enumerate()
            .map(|(i, n)| ClassEntry {
                name: n.as_ref().to_string(),
                color: palette_color(i),
            })
            .collect();
        Self::new(entries)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[ClassEntry] {
        &self.entries
    }

    pub fn name(&self, index: u8) -> Option<&str> {
        self.entries.get(index as usize).map(|e| e.name.as_str())
    }

    pub fn color(&self, index: u8) -> Option<[u8; 3]> {
        self.entries.get(index as usize).map(|e| e.color)
    }

    pub fn index_of(&self, name: &str) -> Option<u8> {
        self.entries
            .iter()
            .position(|e| e.name == name)
            .map(|i| i as u8)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.name.as_str())
    }
}

/// The default ten-class desk-scale taxonomy.
impl Default for ClassTable {
    fn default() -> Self {
        Self::new(vec![
            entry("floor", [128, 118, 104]),
            entry("wall", [200, 196, 186]),
            entry("ceiling", [226, 226, 222]),
            entry("sky", [135, 185, 235]),
            entry("person", [190, 60, 60]),
            entry("furniture", [110, 80, 50]),
            entry("bin", [60, 120, 70]),
            entry("curb", [150, 140, 128]),
            entry("glass", [170, 215, 225]),
            entry("pole", [70, 70, 90]),
        ])
        .expect("default class table is valid")
    }
}

fn entry(name: &str, color: [u8; 3]) -> ClassEntry {
    ClassEntry {
        name: name.to_string(),
        color,
    }
}

fn palette_color(i: usize) -> [u8; 3] {
    // golden-ratio hue walk, good enough for debug views
    let h = (i as f64 * 0.618_033_988_75).fract();
    let sector = (h * 6.0) as usize;
    let f = h * 6.0 - sector as f64;
    let (r, g, b) = match sector {
        0 => (1.0, f, 0.0),
        1 => (1.0 - f, 1.0, 0.0),
        2 => (0.0, 1.0, f),
        3 => (0.0, 1.0 - f, 1.0),
        4 => (f, 0.0, 1.0),
        _ => (1.0, 0.0, 1.0 - f),
    };
    let s = |v: f64| (40.0 + v * 180.0) as u8;
    [s(r), s(g), s(b)]
}

impl TryFrom<Vec<ClassEntry>> for ClassTable {
    type Error = Error;

    fn try_from(entries: Vec<ClassEntry>) -> Result<Self> {
        Self::new(entries)
    }
}

impl From<ClassTable> for Vec<ClassEntry> {
    fn from(t: ClassTable) -> Self {
        t.entries
    }
}

/// Walk instruction. The ordinals are part of every serialized format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
#[repr(u8)]
pub enum ActionLabel {
    TurnLeft = 0,
    GoStraight = 1,
    TurnRight = 2,
}

impl ActionLabel {
    pub const ALL: [ActionLabel; 3] = [
        ActionLabel::TurnLeft,
        ActionLabel::GoStraight,
        ActionLabel::TurnRight,
    ];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(ordinal: usize) -> Option<Self> {
        Self::ALL.get(ordinal).copied()
    }

    /// Left/right swap; straight is its own mirror image.
    pub fn mirrored(self) -> Self {
        match self {
            ActionLabel::TurnLeft => ActionLabel::TurnRight,
            ActionLabel::GoStraight => ActionLabel::GoStraight,
            ActionLabel::TurnRight => ActionLabel::TurnLeft,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ActionLabel::TurnLeft => "turn_left",
            ActionLabel::GoStraight => "go_straight",
            ActionLabel::TurnRight => "turn_right",
        }
    }
}

impl TryFrom<u8> for ActionLabel {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        Self::from_ordinal(v as usize).ok_or_else(|| format!("unknown action ordinal {v}"))
    }
}

impl From<ActionLabel> for u8 {
    fn from(a: ActionLabel) -> u8 {
        a as u8
    }
}

impl fmt::Display for ActionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActionLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown action {s:?}")))
    }
}

/// Evaluation scenario, one per report row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bucket {
    IndoorDay,
    IndoorNight,
    OutdoorDay,
    OutdoorNight,
    PoorDepth,
    LowObstacle,
}

impl Bucket {
    pub const ALL: [Bucket; 6] = [
        Bucket::IndoorDay,
        Bucket::IndoorNight,
        Bucket::OutdoorDay,
        Bucket::OutdoorNight,
        Bucket::PoorDepth,
        Bucket::LowObstacle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Bucket::IndoorDay => "indoor_day",
            Bucket::IndoorNight => "indoor_night",
            Bucket::OutdoorDay => "outdoor_day",
            Bucket::OutdoorNight => "outdoor_night",
            Bucket::PoorDepth => "poor_depth",
            Bucket::LowObstacle => "low_obstacle",
        }
    }

    /// Row label in the accuracy report.
    pub fn title(self) -> &'static str {
        match self {
            Bucket::IndoorDay => "Indoor Day",
            Bucket::IndoorNight => "Indoor Night",
            Bucket::OutdoorDay => "Outdoor Day",
            Bucket::OutdoorNight => "Outdoor Night",
            Bucket::PoorDepth => "Poor depth",
            Bucket::LowObstacle => "Low obstacle",
        }
    }
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Bucket {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown bucket {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

/// One labelled capture.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub frame: RgbdFrame,
    pub semantic_gt: SemanticMap,
    pub action: ActionLabel,
    pub bucket: Bucket,
}

/// Horizontal image third.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Third {
    Left,
    Center,
    Right,
}

/// Assigns column `col` of a `width`-wide image to a third by its pixel centre.
///
/// The split is mirror-symmetric: `col` and `width - 1 - col` always land in
/// opposite outer thirds (or both in the centre), which plain `3 * col / width`
/// does not guarantee when `width` is not a multiple of 3.
pub fn column_third(col: usize, width: usize) -> Third {
    let centre2 = 3 * (2 * col + 1);
    if centre2 < 2 * width {
        Third::Left
    } else if centre2 > 4 * width {
        Third::Right
    } else {
        Third::Center
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_clamps_tiny_depths_and_keeps_missing() {
        let f = RgbdFrame::new("f", 2, 1, vec![0; 6], vec![0.0, 0.01]).unwrap();
        assert_eq!(f.depth(), &[0.0, MIN_VALID_DEPTH_M]);
    }

    #[test]
    fn frame_rejects_bad_grids() {
        assert!(RgbdFrame::new("f", 2, 1, vec![0; 5], vec![1.0, 1.0]).is_err());
        assert!(RgbdFrame::new("f", 2, 1, vec![0; 6], vec![1.0]).is_err());
        assert!(matches!(
            RgbdFrame::new("f", 1, 1, vec![0; 3], vec![f32::NAN]),
            Err(Error::NonFinite(_))
        ));
        assert!(RgbdFrame::new("f", 1, 1, vec![0; 3], vec![-1.0]).is_err());
    }

    #[test]
    fn quantized_depth_survives_mm_round_trip() {
        let f = RgbdFrame::new("f", 3, 1, vec![0; 9], vec![0.0, 1.23456, 70.0]).unwrap();
        let q = f.quantized();
        let back = RgbdFrame::from_depth_mm("f", 3, 1, vec![0; 9], &q.depth_mm()).unwrap();
        assert_eq!(q, back);
        assert_eq!(q.depth_mm(), vec![0, 1235, 65535]);
    }

    #[test]
    fn class_table_rules() {
        assert!(ClassTable::from_names(&["floor"]).is_err());
        assert!(ClassTable::from_names(&["wall", "floor"]).is_err());
        assert!(ClassTable::from_names(&["floor", "a", "a"]).is_err());
        assert!(ClassTable::from_names(&["floor", "two words"]).is_err());
        let t = ClassTable::default();
        assert_eq!(t.len(), 10);
        assert_eq!(t.index_of("glass"), Some(8));
        assert_eq!(t.name(ClassTable::FLOOR), Some("floor"));
    }

    #[test]
    fn action_ordinals_are_fixed() {
        assert_eq!(ActionLabel::TurnLeft as u8, 0);
        assert_eq!(ActionLabel::GoStraight as u8, 1);
        assert_eq!(ActionLabel::TurnRight as u8, 2);
        assert_eq!(serde_json::to_string(&ActionLabel::TurnRight).unwrap(), "2");
        assert!(serde_json::from_str::<ActionLabel>("3").is_err());
    }

    #[test]
    fn bucket_names_round_trip() {
        for b in Bucket::ALL {
            assert_eq!(b.as_str().parse::<Bucket>().unwrap(), b);
            let json = serde_json::to_string(&b).unwrap();
            assert_eq!(json, format!("\"{}\"", b.as_str()));
        }
        assert!(serde_json::from_str::<Bucket>("\"underwater\"").is_err());
    }

    #[test]
    fn thirds_are_mirror_symmetric() {
        for width in 1..200 {
            for col in 0..width {
                let a = column_third(col, width);
                let b = column_third(width - 1 - col, width);
                let expect = match a {
                    Third::Left => Third::Right,
                    Third::Right => Third::Left,
                    Third::Center => Third::Center,
                };
                assert_eq!(b, expect, "width {width} col {col}");
            }
        }
        assert_eq!(column_third(0, 128), Third::Left);
        assert_eq!(column_third(64, 128), Third::Center);
        assert_eq!(column_third(127, 128), Third::Right);
    }
}

//! Shared domain types: gaze samples, AOIs, time windows, grouping, scopes,
//! and the matrix/grid containers every analysis produces.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Logical group id. Zero means "ungrouped".
pub type Gid = u32;

/// Sample id used by a [`Twi`] that applies to every sample.
pub const ALL_SAMPLES: &str = "*";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazePoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl GazePoint {
    pub fn new(t: f64, x: f64, y: f64) -> Self {
        Self { t, x, y }
    }
}

/// One recording: time-ordered gaze points of a participant or condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    pub id: String,
    pub label: String,
    pub points: Vec<GazePoint>,
    pub group_id: Gid,
}

impl GazeSample {
    pub fn new(id: impl Into<String>, points: Vec<GazePoint>) -> Self {
        let id = id.into();
        Self {
            label: id.clone(),
            id,
            points,
            group_id: 0,
        }
    }

    /// `(t_first, t_last)` of the recording, or `None` when empty.
    pub fn time_span(&self) -> Option<(f64, f64)> {
        Some((self.points.first()?.t, self.points.last()?.t))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixation {
    pub index: usize,
    pub cx: f64,
    pub cy: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub duration: f64,
    /// Half-open range into the owning sample's points.
    pub point_span: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Saccade {
    pub from_fixation: usize,
    pub to_fixation: usize,
    pub length: f64,
    pub duration: f64,
    /// Direction of the centroid displacement, radians.
    pub angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Shape {
    Rect { x: f64, y: f64, w: f64, h: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
}

impl Shape {
    pub fn rect(x: f64, y: f64, w: f64, h: f64) -> Self {
        Shape::Rect { x, y, w, h }
    }

    pub fn polygon(vertices: impl IntoIterator<Item = (f64, f64)>) -> Self {
        Shape::Polygon {
            vertices: vertices.into_iter().map(|(x, y)| [x, y]).collect(),
        }
    }

    /// Describes why the shape cannot be used as an AOI, if it cannot.
    pub fn degeneracy(&self) -> Option<String> {
        match self {
            Shape::Rect { x, y, w, h } => {
                if ![x, y, w, h].iter().all(|v| v.is_finite()) {
                    Some("non-finite rect coordinate".into())
                } else if *w <= 0.0 || *h <= 0.0 {
                    Some(format!("degenerate rect (w={w}, h={h})"))
                } else {
                    None
                }
            }
            Shape::Polygon { vertices } => {
                if vertices.len() < 3 {
                    Some(format!("degenerate polygon ({} vertices)", vertices.len()))
                } else if vertices.iter().flatten().any(|v| !v.is_finite()) {
                    Some("non-finite polygon vertex".into())
                } else if polygon_area(vertices) == 0.0 {
                    Some("degenerate polygon (zero area)".into())
                } else {
                    None
                }
            }
        }
    }

    /// Axis-aligned bounding box as `(min_x, min_y, max_x, max_y)`.
    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        match self {
            Shape::Rect { x, y, w, h } => (*x, *y, x + w, y + h),
            Shape::Polygon { vertices } => vertices.iter().fold(
                (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
                |(a, b, c, d), [x, y]| (a.min(*x), b.min(*y), c.max(*x), d.max(*y)),
            ),
        }
    }
}

fn polygon_area(vertices: &[[f64; 2]]) -> f64 {
    let n = vertices.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let [x0, y0] = vertices[i];
            let [x1, y1] = vertices[(i + 1) % n];
            x0 * y1 - x1 * y0
        })
        .sum();
    twice.abs() / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aoi {
    pub id: String,
    /// Display name; defaults to the id.
    #[serde(default)]
    pub name: String,
    pub shape: Shape,
    /// Lower rank wins when AOIs overlap.
    pub precedence: i64,
    #[serde(rename = "gid", default)]
    pub group_id: Gid,
}

impl Aoi {
    pub fn new(id: impl Into<String>, shape: Shape, precedence: i64) -> Self {
        let id = id.into();
        Self {
            name: id.clone(),
            id,
            shape,
            precedence,
            group_id: 0,
        }
    }

    pub fn with_group(mut self, gid: Gid) -> Self {
        self.group_id = gid;
        self
    }
}

/// Time window of interest, `[t_start, t_end)` in milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Twi {
    pub id: String,
    /// Owning sample, or [`ALL_SAMPLES`].
    pub sample_id: String,
    pub t_start: f64,
    pub t_end: f64,
    #[serde(rename = "gid", default)]
    pub group_id: Gid,
}

impl Twi {
    pub fn shared(id: impl Into<String>, t_start: f64, t_end: f64) -> Self {
        Self {
            id: id.into(),
            sample_id: ALL_SAMPLES.to_string(),
            t_start,
            t_end,
            group_id: 0,
        }
    }

    pub fn with_group(mut self, gid: Gid) -> Self {
        self.group_id = gid;
        self
    }

    pub fn applies_to(&self, sample_id: &str) -> bool {
        self.sample_id == ALL_SAMPLES || self.sample_id == sample_id
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_start && t < self.t_end
    }
}

/// Entity id → gid assignments, as imported from or exported to `groups.json`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupTable {
    #[serde(default)]
    pub samples: BTreeMap<String, Gid>,
    #[serde(default)]
    pub aois: BTreeMap<String, Gid>,
    #[serde(default)]
    pub twis: BTreeMap<String, Gid>,
}

impl GroupTable {
    pub fn sample_gid(&self, id: &str) -> Gid {
        self.samples.get(id).copied().unwrap_or(0)
    }

    pub fn aoi_gid(&self, id: &str) -> Gid {
        self.aois.get(id).copied().unwrap_or(0)
    }

    pub fn twi_gid(&self, id: &str) -> Gid {
        self.twis.get(id).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dimension {
    Sample,
    Aoi,
    Twi,
}

/// One axis of a [`Scope`]: everything, one group, or one entity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selector {
    #[default]
    All,
    Group(Gid),
    One(String),
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selector::All => f.write_str("all"),
            Selector::Group(g) => write!(f, "group:{g}"),
            Selector::One(id) => write!(f, "one:{id}"),
        }
    }
}

impl FromStr for Selector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("all") {
            return Ok(Selector::All);
        }
        if let Some(g) = s.strip_prefix("group:") {
            return g
                .parse()
                .map(Selector::Group)
                .map_err(|_| format!("invalid gid in selector `{s}`"));
        }
        if let Some(id) = s.strip_prefix("one:") {
            if !id.is_empty() {
                return Ok(Selector::One(id.to_string()));
            }
        }
        Err(format!("invalid selector `{s}` (expected all | group:<gid> | one:<id>)"))
    }
}

/// The (sample, TWI) filter pair that determines the level of detail.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Scope {
    pub samples: Selector,
    pub twis: Selector,
}

impl Scope {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn new(samples: Selector, twis: Selector) -> Self {
        Self { samples, twis }
    }
}

/// Textual form `<samples>,<twis>`, e.g. `group:4,group:2` or `one:P21,all`.
impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.samples, self.twis)
    }
}

impl FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| format!("invalid scope `{s}` (expected <samples>,<twis>)"))?;
        Ok(Scope::new(a.parse()?, b.parse()?))
    }
}

/// Entity dimension of a matrix axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityDim {
    Sample,
    SampleGroup,
    Aoi,
    AoiGroup,
    Twi,
    TwiGroup,
}

impl EntityDim {
    pub fn is_group(self) -> bool {
        matches!(self, EntityDim::SampleGroup | EntityDim::AoiGroup | EntityDim::TwiGroup)
    }

    pub fn base(self) -> Dimension {
        match self {
            EntityDim::Sample | EntityDim::SampleGroup => Dimension::Sample,
            EntityDim::Aoi | EntityDim::AoiGroup => Dimension::Aoi,
            EntityDim::Twi | EntityDim::TwiGroup => Dimension::Twi,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EntityDim::Sample => "sample",
            EntityDim::SampleGroup => "sample_group",
            EntityDim::Aoi => "aoi",
            EntityDim::AoiGroup => "aoi_group",
            EntityDim::Twi => "twi",
            EntityDim::TwiGroup => "twi_group",
        }
    }
}

impl fmt::Display for EntityDim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityDim {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "sample" | "samples" => EntityDim::Sample,
            "sample_group" | "sample_groups" => EntityDim::SampleGroup,
            "aoi" | "aois" => EntityDim::Aoi,
            "aoi_group" | "aoi_groups" => EntityDim::AoiGroup,
            "twi" | "twis" => EntityDim::Twi,
            "twi_group" | "twi_groups" => EntityDim::TwiGroup,
            _ => return Err(format!("unknown dimension `{s}`")),
        })
    }
}

/// Relationship matrix between two entity dimensions.
///
/// `values` is stored in the order of `row_ids`/`col_ids` and never mutated by
/// reordering; `row_order`/`col_order` hold the display permutation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricMatrix {
    pub row_dim: EntityDim,
    pub col_dim: EntityDim,
    pub metric_id: String,
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
    pub values: Vec<Vec<f64>>,
    pub symmetric: bool,
    pub row_order: Vec<usize>,
    pub col_order: Vec<usize>,
}

impl MetricMatrix {
    pub fn new(
        row_dim: EntityDim,
        col_dim: EntityDim,
        metric_id: impl Into<String>,
        row_ids: Vec<String>,
        col_ids: Vec<String>,
        values: Vec<Vec<f64>>,
        symmetric: bool,
    ) -> Self {
        debug_assert_eq!(values.len(), row_ids.len());
        debug_assert!(values.iter().all(|r| r.len() == col_ids.len()));
        Self {
            row_order: (0..row_ids.len()).collect(),
            col_order: (0..col_ids.len()).collect(),
            row_dim,
            col_dim,
            metric_id: metric_id.into(),
            row_ids,
            col_ids,
            values,
            symmetric,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_ids.len()
    }

    pub fn get(&self, row: &str, col: &str) -> Option<f64> {
        let r = self.row_ids.iter().position(|id| id == row)?;
        let c = self.col_ids.iter().position(|id| id == col)?;
        Some(self.values[r][c])
    }

    pub fn display_row_ids(&self) -> Vec<&str> {
        self.row_order.iter().map(|&i| self.row_ids[i].as_str()).collect()
    }

    pub fn display_col_ids(&self) -> Vec<&str> {
        self.col_order.iter().map(|&i| self.col_ids[i].as_str()).collect()
    }

    /// Values in display order.
    pub fn display_values(&self) -> Vec<Vec<f64>> {
        self.row_order
            .iter()
            .map(|&r| self.col_order.iter().map(|&c| self.values[r][c]).collect())
            .collect()
    }

    /// Identifier used for file names and ordering storage.
    pub fn matrix_id(&self) -> String {
        format!("{}__{}__{}", self.row_dim, self.col_dim, sanitize_id(&self.metric_id))
    }
}

fn sanitize_id(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' })
        .collect()
}

/// Attention-density raster over a region of the stimulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub origin: (f64, f64),
    pub cell_size: f64,
    pub width: usize,
    pub height: usize,
    /// Row-major, `height` rows of `width` cells.
    pub mass: Vec<f64>,
    pub total_mass: f64,
}

impl DensityGrid {
    pub fn at(&self, col: usize, row: usize) -> f64 {
        self.mass[row * self.width + col]
    }

    pub fn same_geometry(&self, other: &DensityGrid) -> bool {
        self.origin == other.origin
            && self.cell_size == other.cell_size
            && self.width == other.width
            && self.height == other.height
    }

    /// `(col, row)` of the heaviest cell; ties resolve to the first in row-major order.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &m) in self.mass.iter().enumerate() {
            if m > self.mass[best] {
                best = i;
            }
        }
        (best % self.width, best / self.width)
    }

    pub fn cell_center(&self, col: usize, row: usize) -> (f64, f64) {
        (
            self.origin.0 + (col as f64 + 0.5) * self.cell_size,
            self.origin.1 + (row as f64 + 0.5) * self.cell_size,
        )
    }
}

/// The complete set of entities an analysis works on.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub samples: Vec<GazeSample>,
    pub aois: Vec<Aoi>,
    pub twis: Vec<Twi>,
}

impl Dataset {
    pub fn sample(&self, id: &str) -> Option<&GazeSample> {
        self.samples.iter().find(|s| s.id == id)
    }

    pub fn aoi(&self, id: &str) -> Option<&Aoi> {
        self.aois.iter().find(|a| a.id == id)
    }

    pub fn twi(&self, id: &str) -> Option<&Twi> {
        self.twis.iter().find(|t| t.id == id)
    }

    /// Current gid assignments of every entity.
    pub fn group_table(&self) -> GroupTable {
        GroupTable {
            samples: self.samples.iter().map(|s| (s.id.clone(), s.group_id)).collect(),
            aois: self.aois.iter().map(|a| (a.id.clone(), a.group_id)).collect(),
            twis: self.twis.iter().map(|t| (t.id.clone(), t.group_id)).collect(),
        }
    }

    /// Overwrites every entity's gid from `table`; unlisted entities fall back to 0.
    pub fn apply_groups(&mut self, table: &GroupTable) {
        for s in &mut self.samples {
            s.group_id = table.sample_gid(&s.id);
        }
        for a in &mut self.aois {
            a.group_id = table.aoi_gid(&a.id);
        }
        for t in &mut self.twis {
            t.group_id = table.twi_gid(&t.id);
        }
    }

    /// Distinct gids used in a dimension, always including 0, ascending.
    pub fn gids(&self, dim: Dimension) -> BTreeSet<Gid> {
        let mut out: BTreeSet<Gid> = match dim {
            Dimension::Sample => self.samples.iter().map(|s| s.group_id).collect(),
            Dimension::Aoi => self.aois.iter().map(|a| a.group_id).collect(),
            Dimension::Twi => self.twis.iter().map(|t| t.group_id).collect(),
        };
        out.insert(0);
        out
    }

    /// AOIs ordered by precedence rank, best first.
    pub fn aois_by_precedence(&self) -> Vec<&Aoi> {
        let mut v: Vec<&Aoi> = self.aois.iter().collect();
        v.sort_by_key(|a| a.precedence);
        v
    }
}

/// One invariant violation found by [`dataset_validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub dimension: Dimension,
    pub entity: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dim = match self.dimension {
            Dimension::Sample => "sample",
            Dimension::Aoi => "aoi",
            Dimension::Twi => "twi",
        };
        write!(f, "{dim} `{}`: {}", self.entity, self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn contains(&self, needle: &str) -> bool {
        self.violations.iter().any(|v| v.message.contains(needle))
    }

    fn push(&mut self, dimension: Dimension, entity: &str, message: impl Into<String>) {
        self.violations.push(Violation {
            dimension,
            entity: entity.to_string(),
            message: message.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

fn id_problem(id: &str) -> Option<&'static str> {
    if id.is_empty() {
        Some("empty id")
    } else if id.contains(['/', '\\', '\t', '\n', '\r', ',']) {
        Some("id contains a reserved character (/ \\ , tab or newline)")
    } else {
        None
    }
}

/// Checks every model invariant and reports all violations at once.
pub fn dataset_validate(
    samples: &[GazeSample],
    aois: &[Aoi],
    twis: &[Twi],
    groups: &GroupTable,
) -> ValidationReport {
    let mut report = ValidationReport::default();

    let mut seen = HashSet::new();
    for s in samples {
        if let Some(p) = id_problem(&s.id) {
            report.push(Dimension::Sample, &s.id, p);
        }
        if !seen.insert(s.id.as_str()) {
            report.push(Dimension::Sample, &s.id, "duplicate sample id");
        }
        for (i, p) in s.points.iter().enumerate() {
            if !(p.t.is_finite() && p.t >= 0.0) {
                report.push(Dimension::Sample, &s.id, format!("invalid timestamp at index {i}"));
            }
            if !(p.x.is_finite() && p.y.is_finite()) {
                report.push(Dimension::Sample, &s.id, format!("non-finite coordinate at index {i}"));
            }
            if i > 0 && p.t <= s.points[i - 1].t {
                report.push(Dimension::Sample, &s.id, format!("non-increasing timestamp at index {i}"));
            }
        }
    }

    let mut seen = HashSet::new();
    let mut ranks = HashSet::new();
    for a in aois {
        if let Some(p) = id_problem(&a.id) {
            report.push(Dimension::Aoi, &a.id, p);
        }
        if !seen.insert(a.id.as_str()) {
            report.push(Dimension::Aoi, &a.id, "duplicate aoi id");
        }
        if !ranks.insert(a.precedence) {
            report.push(Dimension::Aoi, &a.id, format!("duplicate precedence rank {}", a.precedence));
        }
        if let Some(why) = a.shape.degeneracy() {
            report.push(Dimension::Aoi, &a.id, why);
        }
    }

    let sample_ids: HashSet<&str> = samples.iter().map(|s| s.id.as_str()).collect();
    let mut seen = HashSet::new();
    for t in twis {
        if let Some(p) = id_problem(&t.id) {
            report.push(Dimension::Twi, &t.id, p);
        }
        if !seen.insert(t.id.as_str()) {
            report.push(Dimension::Twi, &t.id, "duplicate twi id");
        }
        if !(t.t_start.is_finite() && t.t_end.is_finite()) || t.t_start >= t.t_end {
            report.push(
                Dimension::Twi,
                &t.id,
                format!("inverted window [{}, {})", t.t_start, t.t_end),
            );
        }
        if t.sample_id != ALL_SAMPLES && !sample_ids.contains(t.sample_id.as_str()) {
            report.push(Dimension::Twi, &t.id, format!("unknown owning sample `{}`", t.sample_id));
        }
    }

    let aoi_ids: HashSet<&str> = aois.iter().map(|a| a.id.as_str()).collect();
    let twi_ids: HashSet<&str> = twis.iter().map(|t| t.id.as_str()).collect();
    for id in groups.samples.keys().filter(|id| !sample_ids.contains(id.as_str())) {
        report.push(Dimension::Sample, id, "dangling group reference");
    }
    for id in groups.aois.keys().filter(|id| !aoi_ids.contains(id.as_str())) {
        report.push(Dimension::Aoi, id, "dangling group reference");
    }
    for id in groups.twis.keys().filter(|id| !twi_ids.contains(id.as_str())) {
        report.push(Dimension::Twi, id, "dangling group reference");
    }

    report
}

impl Dataset {
    pub fn validate(&self) -> ValidationReport {
        dataset_validate(&self.samples, &self.aois, &self.twis, &self.group_table())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(id: &str, ts: &[f64]) -> GazeSample {
        GazeSample::new(id, ts.iter().map(|&t| GazePoint::new(t, 1.0, 2.0)).collect())
    }

    #[test]
    fn valid_dataset_has_empty_report() {
        let samples = vec![sample("P1", &[0.0, 10.0, 20.0]), sample("P2", &[0.0, 5.0])];
        let aois = vec![Aoi::new("A", Shape::rect(0.0, 0.0, 10.0, 10.0), 0)];
        let report = dataset_validate(&samples, &aois, &[], &GroupTable::default());
        assert!(report.is_empty(), "{report}");
    }

    #[test]
    fn repeated_timestamp_is_reported() {
        let samples = vec![sample("P1", &[0.0, 10.0, 10.0])];
        let report = dataset_validate(&samples, &[], &[], &GroupTable::default());
        assert!(report.contains("non-increasing timestamp at index 2"), "{report}");
    }

    #[test]
    fn two_vertex_polygon_is_degenerate() {
        let aois = vec![Aoi::new("A", Shape::polygon([(0.0, 0.0), (1.0, 1.0)]), 0)];
        let report = dataset_validate(&[], &aois, &[], &GroupTable::default());
        assert!(report.contains("degenerate polygon"), "{report}");
    }

    #[test]
    fn collinear_polygon_and_flat_rect_are_degenerate() {
        let aois = vec![
            Aoi::new("A", Shape::polygon([(0.0, 0.0), (1.0, 1.0), (2.0, 2.0)]), 0),
            Aoi::new("B", Shape::rect(0.0, 0.0, 0.0, 5.0), 1),
        ];
        let report = dataset_validate(&[], &aois, &[], &GroupTable::default());
        assert!(report.contains("zero area"));
        assert!(report.contains("degenerate rect"));
    }

    #[test]
    fn duplicates_and_dangling_refs_are_reported() {
        let samples = vec![sample("P1", &[0.0]), sample("P1", &[0.0])];
        let aois = vec![
            Aoi::new("A", Shape::rect(0.0, 0.0, 1.0, 1.0), 0),
            Aoi::new("B", Shape::rect(0.0, 0.0, 1.0, 1.0), 0),
        ];
        let twis = vec![Twi::shared("w", 5.0, 3.0)];
        let mut groups = GroupTable::default();
        groups.samples.insert("ghost".into(), 3);
        let report = dataset_validate(&samples, &aois, &twis, &groups);
        assert!(report.contains("duplicate sample id"));
        assert!(report.contains("duplicate precedence rank 0"));
        assert!(report.contains("inverted window"));
        assert!(report.contains("dangling group reference"));
    }

    #[test]
    fn scope_text_form() {
        let s: Scope = "group:4,one:t1".parse().unwrap();
        assert_eq!(s, Scope::new(Selector::Group(4), Selector::One("t1".into())));
        assert_eq!(s.to_string(), "group:4,one:t1");
        assert!("all".parse::<Scope>().is_err());
        assert!("all,grp:1".parse::<Scope>().is_err());
    }

    #[test]
    fn apply_groups_defaults_to_zero() {
        let mut ds = Dataset {
            samples: vec![sample("P1", &[0.0]), sample("P2", &[0.0])],
            ..Default::default()
        };
        ds.samples[1].group_id = 9;
        let mut t = GroupTable::default();
        t.samples.insert("P1".into(), 4);
        ds.apply_groups(&t);
        assert_eq!(ds.samples[0].group_id, 4);
        assert_eq!(ds.samples[1].group_id, 0);
        assert_eq!(ds.gids(Dimension::Sample).into_iter().collect::<Vec<_>>(), vec![0, 4]);
    }
}

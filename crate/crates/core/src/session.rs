//! Versioned analysis sessions: scope resolution, time-animate filtering and
//! group/AOI edits.
//!
//! A [`Session`] is an immutable snapshot. Every edit returns a new snapshot
//! with a higher version; derived data (fixations, labels) is computed lazily
//! once per snapshot and shared with later versions whenever the edit does not
//! affect it.

use std::collections::{BTreeMap, HashSet};
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aoi::{self, LabeledFixation};
use crate::fixation::{self, DetectionError, DetectionParams};
use crate::metrics::PctDenominator;
use crate::model::{
    Aoi, Dataset, Dimension, Fixation, GazeSample, Gid, GroupTable, Saccade, Scope, Selector, Shape, Twi,
    ValidationReport,
};
use crate::seriation::Reordering;
use crate::similarity::NwScoring;
use crate::spatial::{BundleParams, KdeParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error("unknown scope target: {0}")]
    UnknownScopeTarget(String),
    #[error("unknown {dimension:?} id `{id}`")]
    UnknownId { dimension: Dimension, id: String },
    #[error("degenerate shape: {0}")]
    DegenerateShape(String),
    #[error("dataset is invalid:\n{0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
}

/// Analysis parameters other than fixation detection.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AnalysisParams {
    pub kde: KdeParams,
    pub bundle: BundleParams,
    pub nw: NwScoring,
    pub pct_denominator: PctDenominator,
}

#[derive(Debug)]
struct Detected {
    fixations: Vec<Fixation>,
    saccades: Vec<Saccade>,
}

type Lazy<T> = Arc<OnceLock<Arc<T>>>;

/// A free-text annotation placed on a sample's stimulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Note {
    pub text: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone)]
pub struct Session {
    version: u64,
    dataset: Arc<Dataset>,
    detection: DetectionParams,
    params: AnalysisParams,
    scope: Scope,
    time_fraction: f64,
    orderings: BTreeMap<String, Reordering>,
    notes: Arc<BTreeMap<String, Vec<Note>>>,
    detected: Lazy<Vec<Detected>>,
    labels: Lazy<Vec<Vec<LabeledFixation>>>,
}

impl Default for Session {
    fn default() -> Self {
        Self {
            version: 0,
            dataset: Arc::default(),
            detection: DetectionParams::default(),
            params: AnalysisParams::default(),
            scope: Scope::all(),
            time_fraction: 1.0,
            orderings: BTreeMap::new(),
            notes: Arc::default(),
            detected: Lazy::default(),
            labels: Lazy::default(),
        }
    }
}

/// Fixations of one sample restricted to a scope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScopedSample {
    pub sample_id: String,
    pub group_id: Gid,
    pub fixations: Vec<LabeledFixation>,
    /// Saccades whose two fixations are both in scope.
    pub saccades: Vec<Saccade>,
    /// Selected windows; `None` means the whole recording.
    pub windows: Option<Vec<(f64, f64)>>,
    /// `(t_min, t_max)` of the scoped span.
    pub span: (f64, f64),
    /// Total selected time (union of windows, or the recording span).
    pub scoped_duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScopedView {
    pub scope: Scope,
    pub samples: Vec<ScopedSample>,
}

impl ScopedView {
    pub fn fixation_count(&self) -> usize {
        self.samples.iter().map(|s| s.fixations.len()).sum()
    }

    pub fn sample(&self, id: &str) -> Option<&ScopedSample> {
        self.samples.iter().find(|s| s.sample_id == id)
    }
}

fn union_length(windows: &[(f64, f64)]) -> f64 {
    let mut w = windows.to_vec();
    w.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (s, e) in w {
        match cur {
            Some((cs, ce)) if s <= ce => cur = Some((cs, ce.max(e))),
            Some((cs, ce)) => {
                total += ce - cs;
                cur = Some((s, e));
            }
            None => cur = Some((s, e)),
        }
    }
    if let Some((cs, ce)) = cur {
        total += ce - cs;
    }
    total
}

impl Session {
    /// A session over a validated dataset.
    pub fn new(dataset: Dataset) -> Result<Self, SessionError> {
        let report = dataset.validate();
        if !report.is_empty() {
            return Err(SessionError::Invalid(report));
        }
        Ok(Self {
            dataset: Arc::new(dataset),
            ..Self::default()
        })
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn detection(&self) -> DetectionParams {
        self.detection
    }

    pub fn params(&self) -> &AnalysisParams {
        &self.params
    }

    pub fn scope(&self) -> &Scope {
        &self.scope
    }

    pub fn time_fraction(&self) -> f64 {
        self.time_fraction
    }

    pub fn orderings(&self) -> &BTreeMap<String, Reordering> {
        &self.orderings
    }

    /// Notes per sample id.
    pub fn notes(&self) -> &BTreeMap<String, Vec<Note>> {
        &self.notes
    }

    fn detected(&self) -> &Arc<Vec<Detected>> {
        self.detected.get_or_init(|| {
            Arc::new(
                self.dataset
                    .samples
                    .iter()
                    .map(|s| {
                        let fixations = fixation::detect_fixations(&s.points, &self.detection);
                        let saccades = fixation::derive_saccades(&fixations);
                        Detected { fixations, saccades }
                    })
                    .collect(),
            )
        })
    }

    fn all_labels(&self) -> &Arc<Vec<Vec<LabeledFixation>>> {
        self.labels.get_or_init(|| {
            Arc::new(
                self.detected()
                    .iter()
                    .map(|d| aoi::label_fixations(&d.fixations, &self.dataset.aois))
                    .collect(),
            )
        })
    }

    fn sample_index(&self, id: &str) -> Option<usize> {
        self.dataset.samples.iter().position(|s| s.id == id)
    }

    /// All fixations of a sample, unscoped.
    pub fn fixations(&self, sample_id: &str) -> Option<&[Fixation]> {
        let i = self.sample_index(sample_id)?;
        Some(&self.detected()[i].fixations)
    }

    pub fn saccades(&self, sample_id: &str) -> Option<&[Saccade]> {
        let i = self.sample_index(sample_id)?;
        Some(&self.detected()[i].saccades)
    }

    /// AOI labels of all fixations of a sample, unscoped.
    pub fn labels(&self, sample_id: &str) -> Option<&[LabeledFixation]> {
        let i = self.sample_index(sample_id)?;
        Some(&self.all_labels()[i])
    }

    /// Samples picked by a selector, in dataset order.
    pub fn select_samples(&self, sel: &Selector) -> Result<Vec<&GazeSample>, SessionError> {
        match sel {
            Selector::All => Ok(self.dataset.samples.iter().collect()),
            Selector::Group(g) => {
                if !self.dataset.gids(Dimension::Sample).contains(g) {
                    return Err(SessionError::UnknownScopeTarget(format!("sample group {g}")));
                }
                Ok(self.dataset.samples.iter().filter(|s| s.group_id == *g).collect())
            }
            Selector::One(id) => self
                .dataset
                .sample(id)
                .map(|s| vec![s])
                .ok_or_else(|| SessionError::UnknownScopeTarget(format!("sample `{id}`"))),
        }
    }

    /// TWIs picked by a selector; `None` means no temporal filtering.
    pub fn select_twis(&self, sel: &Selector) -> Result<Option<Vec<&Twi>>, SessionError> {
        match sel {
            Selector::All => Ok(None),
            Selector::Group(g) => {
                if !self.dataset.gids(Dimension::Twi).contains(g) {
                    return Err(SessionError::UnknownScopeTarget(format!("twi group {g}")));
                }
                Ok(Some(self.dataset.twis.iter().filter(|t| t.group_id == *g).collect()))
            }
            Selector::One(id) => self
                .dataset
                .twi(id)
                .map(|t| Some(vec![t]))
                .ok_or_else(|| SessionError::UnknownScopeTarget(format!("twi `{id}`"))),
        }
    }

    /// Restricts one sample's events to the windows that apply to it.
    pub fn scope_sample(&self, sample: &GazeSample, twis: Option<&[&Twi]>) -> ScopedSample {
        let i = self.sample_index(&sample.id).expect("sample belongs to this session");
        let labels = &self.all_labels()[i];
        let saccades = &self.detected()[i].saccades;
        let (t0, t1) = sample.time_span().unwrap_or((0.0, 0.0));

        let windows: Option<Vec<(f64, f64)>> = twis.map(|ts| {
            ts.iter()
                .filter(|t| t.applies_to(&sample.id))
                .map(|t| (t.t_start, t.t_end))
                .collect()
        });
        let in_scope = |f: &Fixation| match &windows {
            None => true,
            Some(ws) => ws.iter().any(|&(s, e)| f.t_start >= s && f.t_start < e),
        };
        let fixations: Vec<LabeledFixation> = labels.iter().filter(|l| in_scope(&l.fixation)).cloned().collect();
        let kept: HashSet<usize> = fixations.iter().map(|l| l.fixation.index).collect();
        let saccades = saccades
            .iter()
            .filter(|s| kept.contains(&s.from_fixation) && kept.contains(&s.to_fixation))
            .cloned()
            .collect();
        let (span, scoped_duration) = match &windows {
            None => ((t0, t1), t1 - t0),
            Some(ws) if ws.is_empty() => ((0.0, 0.0), 0.0),
            Some(ws) => {
                let lo = ws.iter().map(|w| w.0).fold(f64::INFINITY, f64::min);
                let hi = ws.iter().map(|w| w.1).fold(f64::NEG_INFINITY, f64::max);
                ((lo, hi), union_length(ws))
            }
        };
        ScopedSample {
            sample_id: sample.id.clone(),
            group_id: sample.group_id,
            fixations,
            saccades,
            windows,
            span,
            scoped_duration,
        }
    }

    /// Applies a (samples, TWIs) scope to the whole dataset.
    ///
    /// A fixation is in scope when its start time lies inside a selected
    /// window that applies to its sample.
    pub fn resolve_scope(&self, scope: &Scope) -> Result<ScopedView, SessionError> {
        let samples = self.select_samples(&scope.samples)?;
        let twis = self.select_twis(&scope.twis)?;
        Ok(ScopedView {
            scope: scope.clone(),
            samples: samples.into_iter().map(|s| self.scope_sample(s, twis.as_deref())).collect(),
        })
    }

    /// The session's own scope, with its time fraction applied.
    pub fn current_view(&self) -> Result<ScopedView, SessionError> {
        Ok(time_fraction_filter(&self.resolve_scope(&self.scope)?, self.time_fraction))
    }

    fn bumped(&self) -> Self {
        let mut next = self.clone();
        next.version = self.version + 1;
        next
    }

    fn with_dataset(&self, dataset: Dataset, samples_changed: bool, aois_changed: bool) -> Result<Self, SessionError> {
        let report = dataset.validate();
        if !report.is_empty() {
            return Err(SessionError::Invalid(report));
        }
        let mut next = self.bumped();
        next.dataset = Arc::new(dataset);
        if samples_changed {
            next.detected = Lazy::default();
        }
        if samples_changed || aois_changed {
            next.labels = Lazy::default();
        }
        Ok(next)
    }

    /// Reassigns gids in one dimension.
    pub fn edit_groups(&self, dimension: Dimension, assignments: &BTreeMap<String, Gid>) -> Result<Self, SessionError> {
        let mut ds = (*self.dataset).clone();
        for (id, &gid) in assignments {
            let slot = match dimension {
                Dimension::Sample => ds.samples.iter_mut().find(|s| &s.id == id).map(|s| &mut s.group_id),
                Dimension::Aoi => ds.aois.iter_mut().find(|a| &a.id == id).map(|a| &mut a.group_id),
                Dimension::Twi => ds.twis.iter_mut().find(|t| &t.id == id).map(|t| &mut t.group_id),
            };
            *slot.ok_or_else(|| SessionError::UnknownId {
                dimension,
                id: id.clone(),
            })? = gid;
        }
        self.with_dataset(ds, false, false)
    }

    /// Replaces every gid from a groups table.
    pub fn set_groups(&self, table: &GroupTable) -> Result<Self, SessionError> {
        let report = crate::model::dataset_validate(&self.dataset.samples, &self.dataset.aois, &self.dataset.twis, table);
        if !report.is_empty() {
            return Err(SessionError::Invalid(report));
        }
        let mut ds = (*self.dataset).clone();
        ds.apply_groups(table);
        self.with_dataset(ds, false, false)
    }

    pub fn edit_aoi_geometry(&self, aoi_id: &str, shape: Shape) -> Result<Self, SessionError> {
        if let Some(why) = shape.degeneracy() {
            return Err(SessionError::DegenerateShape(why));
        }
        let mut ds = (*self.dataset).clone();
        let aoi = ds.aois.iter_mut().find(|a| a.id == aoi_id).ok_or_else(|| SessionError::UnknownId {
            dimension: Dimension::Aoi,
            id: aoi_id.to_string(),
        })?;
        aoi.shape = shape;
        self.with_dataset(ds, false, true)
    }

    pub fn set_aois(&self, aois: Vec<Aoi>) -> Result<Self, SessionError> {
        let mut ds = (*self.dataset).clone();
        ds.aois = aois;
        self.with_dataset(ds, false, true)
    }

    pub fn set_twis(&self, twis: Vec<Twi>) -> Result<Self, SessionError> {
        let mut ds = (*self.dataset).clone();
        ds.twis = twis;
        let mut next = self.with_dataset(ds, false, false)?;
        next.scope = next.valid_scope_or_all(&self.scope);
        Ok(next)
    }

    /// Adds a sample (replacing one with the same id) and its inline windows.
    pub fn upsert_sample(&self, sample: GazeSample, twis: Vec<Twi>) -> Result<Self, SessionError> {
        let mut ds = (*self.dataset).clone();
        match ds.samples.iter_mut().find(|s| s.id == sample.id) {
            Some(slot) => {
                let gid = slot.group_id;
                *slot = sample;
                slot.group_id = gid;
            }
            None => ds.samples.push(sample),
        }
        for t in twis {
            ds.twis.retain(|old| old.id != t.id);
            ds.twis.push(t);
        }
        self.with_dataset(ds, true, true)
    }

    pub fn remove_sample(&self, id: &str) -> Result<Self, SessionError> {
        let mut ds = (*self.dataset).clone();
        let before = ds.samples.len();
        ds.samples.retain(|s| s.id != id);
        if ds.samples.len() == before {
            return Err(SessionError::UnknownId {
                dimension: Dimension::Sample,
                id: id.to_string(),
            });
        }
        ds.twis.retain(|t| t.sample_id != id);
        let mut next = self.with_dataset(ds, true, true)?;
        if next.notes.contains_key(id) {
            Arc::make_mut(&mut next.notes).remove(id);
        }
        next.scope = next.valid_scope_or_all(&self.scope);
        Ok(next)
    }

    fn valid_scope_or_all(&self, scope: &Scope) -> Scope {
        let samples = if self.select_samples(&scope.samples).is_ok() { scope.samples.clone() } else { Selector::All };
        let twis = if self.select_twis(&scope.twis).is_ok() { scope.twis.clone() } else { Selector::All };
        Scope::new(samples, twis)
    }

    pub fn set_detection(&self, params: DetectionParams) -> Result<Self, SessionError> {
        params.check()?;
        let mut next = self.bumped();
        next.detection = params;
        next.detected = Lazy::default();
        next.labels = Lazy::default();
        Ok(next)
    }

    pub fn set_params(&self, params: AnalysisParams) -> Result<Self, SessionError> {
        params.kde.check().map_err(|e| SessionError::InvalidParam(e.to_string()))?;
        params.bundle.check().map_err(|e| SessionError::InvalidParam(e.to_string()))?;
        params.nw.check().map_err(|e| SessionError::InvalidParam(e.to_string()))?;
        let mut next = self.bumped();
        next.params = params;
        Ok(next)
    }

    pub fn set_scope(&self, scope: Scope) -> Result<Self, SessionError> {
        self.select_samples(&scope.samples)?;
        self.select_twis(&scope.twis)?;
        let mut next = self.bumped();
        next.scope = scope;
        Ok(next)
    }

    pub fn set_time_fraction(&self, f: f64) -> Result<Self, SessionError> {
        if !(0.0..=1.0).contains(&f) {
            return Err(SessionError::InvalidParam(format!("time fraction {f} outside [0, 1]")));
        }
        let mut next = self.bumped();
        next.time_fraction = f;
        Ok(next)
    }

    /// Replaces the notes of one sample; an empty list removes them.
    pub fn set_notes(&self, sample_id: &str, notes: Vec<Note>) -> Result<Self, SessionError> {
        if self.sample_index(sample_id).is_none() {
            return Err(SessionError::UnknownId {
                dimension: Dimension::Sample,
                id: sample_id.to_string(),
            });
        }
        if let Some(n) = notes.iter().find(|n| !(n.x.is_finite() && n.y.is_finite())) {
            return Err(SessionError::InvalidParam(format!("note `{}` has a non-finite position", n.text)));
        }
        let mut next = self.bumped();
        let map = Arc::make_mut(&mut next.notes);
        if notes.is_empty() {
            map.remove(sample_id);
        } else {
            map.insert(sample_id.to_string(), notes);
        }
        Ok(next)
    }

    /// Stores a display ordering for a matrix id.
    pub fn set_ordering(&self, matrix_id: &str, ordering: Reordering) -> Self {
        let mut next = self.bumped();
        next.orderings.insert(matrix_id.to_string(), ordering);
        next
    }

    /// The same snapshot with its version raised to at least `floor`.
    pub fn at_least_version(mut self, floor: u64) -> Self {
        self.version = self.version.max(floor);
        self
    }

    /// Rebuilds a session from exported state without revalidating parameters twice.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn restore(
        dataset: Dataset,
        version: u64,
        detection: DetectionParams,
        params: AnalysisParams,
        scope: Scope,
        time_fraction: f64,
        orderings: BTreeMap<String, Reordering>,
        notes: BTreeMap<String, Vec<Note>>,
    ) -> Result<Self, SessionError> {
        let s = Self::new(dataset)?
            .set_detection(detection)?
            .set_params(params)?
            .set_scope(scope)?
            .set_time_fraction(time_fraction)?;
        if let Some(id) = notes.keys().find(|id| s.sample_index(id).is_none()) {
            return Err(SessionError::UnknownId {
                dimension: Dimension::Sample,
                id: id.clone(),
            });
        }
        let mut s = Self {
            orderings,
            notes: Arc::new(notes),
            ..s
        };
        s.version = version;
        Ok(s)
    }
}

/// Keeps, per sample, the fixations that start before the fraction `f` of
/// the sample's scoped span has elapsed. `f = 1` keeps everything and
/// `f = 0` keeps nothing.
pub fn time_fraction_filter(view: &ScopedView, f: f64) -> ScopedView {
    let f = f.clamp(0.0, 1.0);
    if f >= 1.0 {
        return view.clone();
    }
    let samples = view
        .samples
        .iter()
        .map(|s| {
            let cutoff = s.span.0 + f * (s.span.1 - s.span.0);
            let fixations: Vec<LabeledFixation> =
                s.fixations.iter().filter(|l| l.fixation.t_start < cutoff).cloned().collect();
            let kept: HashSet<usize> = fixations.iter().map(|l| l.fixation.index).collect();
            let saccades = s
                .saccades
                .iter()
                .filter(|c| kept.contains(&c.from_fixation) && kept.contains(&c.to_fixation))
                .cloned()
                .collect();
            ScopedSample {
                fixations,
                saccades,
                ..s.clone()
            }
        })
        .collect();
    ScopedView {
        scope: view.scope.clone(),
        samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GazePoint;

    /// Sample with one fixation every 200 ms at alternating positions:
    /// 10 points 10 ms apart per fixation, then a 110 ms jump.
    fn sample(id: &str, n_fix: usize, gid: Gid) -> GazeSample {
        let mut points = Vec::new();
        for k in 0..n_fix {
            let x = if k % 2 == 0 { 5.0 } else { 50.0 };
            for i in 0..10 {
                points.push(GazePoint::new(k as f64 * 200.0 + i as f64 * 10.0 + 1.0, x, 5.0));
            }
        }
        let mut s = GazeSample::new(id, points);
        s.group_id = gid;
        s
    }

    fn params() -> DetectionParams {
        DetectionParams::new(5.0, 50.0).unwrap()
    }

    fn session() -> Session {
        let ds = Dataset {
            samples: vec![sample("P1", 6, 4), sample("P2", 4, 4), sample("P21", 2, 0)],
            aois: vec![Aoi::new("L", Shape::rect(0.0, 0.0, 10.0, 10.0), 0)],
            twis: vec![
                Twi::shared("w1", 0.0, 400.0).with_group(2),
                Twi::shared("w2", 400.0, 800.0).with_group(3),
                Twi::shared("w3", 800.0, 1200.0).with_group(2),
            ],
        };
        Session::new(ds).unwrap().set_detection(params()).unwrap()
    }

    #[test]
    fn all_all_is_identity() {
        let s = session();
        let v = s.resolve_scope(&Scope::all()).unwrap();
        assert_eq!(v.samples.len(), 3);
        assert_eq!(v.fixation_count(), 12);
        for ss in &v.samples {
            assert_eq!(ss.fixations.len(), s.fixations(&ss.sample_id).unwrap().len());
            assert_eq!(ss.saccades.len(), s.saccades(&ss.sample_id).unwrap().len());
        }
    }

    #[test]
    fn group_and_window_scope() {
        let s = session();
        let v = s.resolve_scope(&Scope::new(Selector::Group(4), Selector::Group(2))).unwrap();
        let ids: Vec<&str> = v.samples.iter().map(|x| x.sample_id.as_str()).collect();
        assert_eq!(ids, ["P1", "P2"]);
        // Windows [0,400) and [800,1200): fixations start at 1, 201, 801, 1001.
        let starts: Vec<f64> = v.samples[0].fixations.iter().map(|l| l.fixation.t_start).collect();
        assert_eq!(starts, vec![1.0, 201.0, 801.0, 1001.0]);
        assert_eq!(v.samples[0].scoped_duration, 800.0);
        // Saccades 0->1 and 4->5 only (1->2 crosses out of scope).
        let pairs: Vec<(usize, usize)> = v.samples[0].saccades.iter().map(|c| (c.from_fixation, c.to_fixation)).collect();
        assert_eq!(pairs, vec![(0, 1), (4, 5)]);
    }

    #[test]
    fn single_sample_scope_and_errors() {
        let s = session();
        let v = s.resolve_scope(&Scope::new(Selector::One("P21".into()), Selector::All)).unwrap();
        assert_eq!(v.samples.len(), 1);
        assert_eq!(v.samples[0].fixations.len(), 2);
        assert!(matches!(
            s.resolve_scope(&Scope::new(Selector::One("nope".into()), Selector::All)),
            Err(SessionError::UnknownScopeTarget(_))
        ));
        assert!(matches!(
            s.resolve_scope(&Scope::new(Selector::All, Selector::Group(99))),
            Err(SessionError::UnknownScopeTarget(_))
        ));
    }

    #[test]
    fn time_fraction_examples() {
        let s = session();
        let v = s.resolve_scope(&Scope::new(Selector::One("P1".into()), Selector::All)).unwrap();
        assert_eq!(time_fraction_filter(&v, 1.0), v);
        assert_eq!(time_fraction_filter(&v, 0.0).fixation_count(), 0);
        // Span [1, 1091]; fixations start at relative 0, 0.2, ..., so f = 0.5 keeps starts < 546.
        let half = time_fraction_filter(&v, 0.5);
        let starts: Vec<f64> = half.samples[0].fixations.iter().map(|l| l.fixation.t_start).collect();
        assert_eq!(starts, vec![1.0, 201.0, 401.0]);
        assert_eq!(half.samples[0].saccades.len(), 2);
    }

    #[test]
    fn group_edit_moves_outlier_out() {
        let s = session().edit_groups(Dimension::Sample, &BTreeMap::from([("P2".into(), 0)])).unwrap();
        let v = s.resolve_scope(&Scope::new(Selector::Group(4), Selector::All)).unwrap();
        assert_eq!(v.samples.len(), 1);
        let same = s.edit_groups(Dimension::Sample, &BTreeMap::from([("P2".into(), 0)])).unwrap();
        assert_eq!(same.version(), s.version() + 1);
        assert_eq!(same.resolve_scope(&Scope::all()).unwrap(), s.resolve_scope(&Scope::all()).unwrap());
        assert!(matches!(
            s.edit_groups(Dimension::Twi, &BTreeMap::from([("zz".into(), 1)])),
            Err(SessionError::UnknownId { .. })
        ));
    }

    #[test]
    fn aoi_edits_relabel_lazily() {
        let s = session();
        let before = aoi::haar(s.labels("P1").unwrap()).unwrap();
        assert_eq!(before, 0.5);
        let grown = s.edit_aoi_geometry("L", Shape::rect(0.0, 0.0, 60.0, 10.0)).unwrap();
        assert_eq!(aoi::haar(grown.labels("P1").unwrap()).unwrap(), 1.0);
        // Detection cache is shared across the AOI edit.
        assert!(std::ptr::eq(s.fixations("P1").unwrap(), grown.fixations("P1").unwrap()));
        assert_eq!(
            s.edit_aoi_geometry("L", Shape::polygon([(0.0, 0.0), (1.0, 1.0)])).unwrap_err(),
            SessionError::DegenerateShape("degenerate polygon (2 vertices)".into())
        );
        assert!(s.edit_aoi_geometry("Q", Shape::rect(0.0, 0.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn versions_increase() {
        let s = session();
        let v0 = s.version();
        let s1 = s.set_scope(Scope::new(Selector::Group(4), Selector::All)).unwrap();
        let s2 = s1.set_time_fraction(0.5).unwrap();
        assert!(v0 < s1.version() && s1.version() < s2.version());
        assert!(s2.set_time_fraction(1.5).is_err());
        assert!(s.set_scope(Scope::new(Selector::Group(42), Selector::All)).is_err());
    }

    #[test]
    fn union_of_overlapping_windows() {
        assert_eq!(union_length(&[(0.0, 10.0), (5.0, 20.0), (30.0, 40.0)]), 30.0);
        assert_eq!(union_length(&[]), 0.0);
    }
}

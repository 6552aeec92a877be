//! Descriptive fixation, visit and saccade statistics, and their aggregation
//! across groups.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aoi::{self, Alphabet, LabeledFixation};
use crate::model::{Aoi, Gid, Saccade};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("cannot aggregate mixed metrics ({0} vs {1})")]
    MixedMetric(String, String),
    #[error("nothing to aggregate")]
    EmptyAggregate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Ms,
    Count,
    Fraction,
    StimulusUnits,
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Unit::Ms => "ms",
            Unit::Count => "count",
            Unit::Fraction => "fraction",
            Unit::StimulusUnits => "stimulus_units",
        })
    }
}

/// How a metric combines across samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatKind {
    Sum,
    Mean,
    Median,
    Fraction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub metric_id: String,
    pub value: f64,
    pub unit: Unit,
    pub kind: StatKind,
    /// Number of underlying events.
    pub support: u64,
    /// Underlying event values, kept for medians so groups can pool them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<Vec<f64>>,
}

impl MetricValue {
    pub fn new(metric_id: impl Into<String>, value: f64, unit: Unit, kind: StatKind, support: u64) -> Self {
        Self {
            metric_id: metric_id.into(),
            value,
            unit,
            kind,
            support,
            raw: None,
        }
    }

    pub fn median_of(metric_id: impl Into<String>, unit: Unit, values: Vec<f64>) -> Self {
        let mut v = Self::new(metric_id, median(&values), unit, StatKind::Median, values.len() as u64);
        v.raw = Some(values);
        v
    }
}

/// Mean of the two middle values for even lengths; 0 for empty input.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Denominator used for the relative-time metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PctDenominator {
    /// Scoped recording span (window length, or full recording).
    #[default]
    ScopedSpan,
    /// Total fixation time in scope.
    FixationTime,
}

/// What the AOI statistics are computed for.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AoiTarget {
    Aoi(String),
    Group(Gid),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AoiStats {
    pub count: u64,
    pub total_dur: f64,
    pub mean_dur: f64,
    pub median_dur: f64,
    pub pct_time: f64,
    pub visit_count: u64,
    pub mean_visit_dur: f64,
    pub durations: Vec<f64>,
    pub visit_durations: Vec<f64>,
    pub denominator: f64,
}

impl AoiStats {
    pub const METRIC_IDS: [&'static str; 7] = [
        "fixation_count",
        "total_duration",
        "mean_duration",
        "median_duration",
        "pct_time",
        "visit_count",
        "mean_visit_duration",
    ];

    pub fn support(&self) -> u64 {
        self.count
    }

    /// Every statistic as a [`MetricValue`], in [`Self::METRIC_IDS`] order.
    pub fn metric_values(&self) -> Vec<MetricValue> {
        let n = self.count;
        vec![
            MetricValue::new("fixation_count", n as f64, Unit::Count, StatKind::Sum, n),
            MetricValue::new("total_duration", self.total_dur, Unit::Ms, StatKind::Sum, n),
            MetricValue::new("mean_duration", self.mean_dur, Unit::Ms, StatKind::Mean, n),
            MetricValue::median_of("median_duration", Unit::Ms, self.durations.clone()),
            MetricValue::new("pct_time", self.pct_time, Unit::Fraction, StatKind::Fraction, n),
            MetricValue::new("visit_count", self.visit_count as f64, Unit::Count, StatKind::Sum, self.visit_count),
            MetricValue::new("mean_visit_duration", self.mean_visit_dur, Unit::Ms, StatKind::Mean, self.visit_count),
        ]
    }
}

/// Statistics over the fixations labelled with an AOI (or any AOI of a group).
///
/// `total_duration_ms` is the scoped span; with [`PctDenominator::FixationTime`]
/// the relative time divides by the summed duration of all given fixations.
/// An empty selection yields all-zero statistics.
pub fn fixation_aoi_stats(
    labels: &[LabeledFixation],
    target: &AoiTarget,
    aois: &[Aoi],
    total_duration_ms: f64,
    denominator: PctDenominator,
) -> AoiStats {
    let (symbols, want) = match target {
        AoiTarget::Aoi(id) => (aoi::symbolize(labels, Alphabet::Aoi, aois), id.clone()),
        AoiTarget::Group(g) => (aoi::symbolize(labels, Alphabet::AoiGroup, aois), g.to_string()),
    };
    let durations: Vec<f64> = labels
        .iter()
        .zip(&symbols)
        .filter(|(_, s)| s.as_deref() == Some(want.as_str()))
        .map(|(l, _)| l.fixation.duration)
        .collect();

    let mut visit_durations = Vec::new();
    let mut i = 0;
    while i < symbols.len() {
        if symbols[i].as_deref() == Some(want.as_str()) {
            let mut d = 0.0;
            while i < symbols.len() && symbols[i].as_deref() == Some(want.as_str()) {
                d += labels[i].fixation.duration;
                i += 1;
            }
            visit_durations.push(d);
        } else {
            i += 1;
        }
    }

    let total: f64 = durations.iter().sum();
    let denom = match denominator {
        PctDenominator::ScopedSpan => total_duration_ms,
        PctDenominator::FixationTime => labels.iter().map(|l| l.fixation.duration).sum(),
    };
    let pct_time = if denom > 0.0 { (total / denom).min(1.0) } else { 0.0 };
    AoiStats {
        count: durations.len() as u64,
        total_dur: total,
        mean_dur: mean(&durations),
        median_dur: median(&durations),
        pct_time,
        visit_count: visit_durations.len() as u64,
        mean_visit_dur: mean(&visit_durations),
        durations,
        visit_durations,
        denominator: denom,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaccadeStats {
    pub count: u64,
    pub mean_length: f64,
    pub median_length: f64,
    pub mean_duration: f64,
    pub lengths: Vec<f64>,
    pub durations: Vec<f64>,
}

impl SaccadeStats {
    pub fn metric_values(&self) -> Vec<MetricValue> {
        let n = self.count;
        vec![
            MetricValue::new("saccade_count", n as f64, Unit::Count, StatKind::Sum, n),
            MetricValue::new("mean_saccade_length", self.mean_length, Unit::StimulusUnits, StatKind::Mean, n),
            MetricValue::median_of("median_saccade_length", Unit::StimulusUnits, self.lengths.clone()),
            MetricValue::new("mean_saccade_duration", self.mean_duration, Unit::Ms, StatKind::Mean, n),
        ]
    }
}

pub fn saccade_stats(saccades: &[Saccade]) -> SaccadeStats {
    let lengths: Vec<f64> = saccades.iter().map(|s| s.length).collect();
    let durations: Vec<f64> = saccades.iter().map(|s| s.duration).collect();
    SaccadeStats {
        count: saccades.len() as u64,
        mean_length: mean(&lengths),
        median_length: median(&lengths),
        mean_duration: mean(&durations),
        lengths,
        durations,
    }
}

/// Combines per-sample values of one metric into a group value.
///
/// Sums add; means and fractions combine weighted by support; medians are
/// recomputed over the pooled events when every input carries them, and
/// otherwise fall back to the support-weighted mean of medians.
pub fn aggregate_group(values: &[MetricValue]) -> Result<MetricValue, MetricsError> {
    let first = values.first().ok_or(MetricsError::EmptyAggregate)?;
    if let Some(odd) = values
        .iter()
        .find(|v| v.metric_id != first.metric_id || v.unit != first.unit || v.kind != first.kind)
    {
        return Err(MetricsError::MixedMetric(
            format!("{} [{}]", first.metric_id, first.unit),
            format!("{} [{}]", odd.metric_id, odd.unit),
        ));
    }
    if values.len() == 1 {
        return Ok(first.clone());
    }

    let support: u64 = values.iter().map(|v| v.support).sum();
    let weighted = || {
        if support == 0 {
            0.0
        } else {
            values.iter().map(|v| v.value * v.support as f64).sum::<f64>() / support as f64
        }
    };
    let mut out = MetricValue::new(first.metric_id.clone(), 0.0, first.unit, first.kind, support);
    match first.kind {
        StatKind::Sum => out.value = values.iter().map(|v| v.value).sum(),
        StatKind::Mean | StatKind::Fraction => out.value = weighted(),
        StatKind::Median => {
            if values.iter().all(|v| v.raw.is_some()) {
                let pooled: Vec<f64> = values.iter().flat_map(|v| v.raw.clone().unwrap_or_default()).collect();
                out.value = median(&pooled);
                out.raw = Some(pooled);
            } else {
                out.value = weighted();
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

/// Equal-width histogram over `[min, max]`; the maximum lands in the last bin.
/// When all values are equal the range is widened to one unit around them.
pub fn histogram(values: &[f64], bin_count: usize) -> Histogram {
    if values.is_empty() || bin_count == 0 {
        return Histogram {
            bin_edges: Vec::new(),
            counts: Vec::new(),
        };
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo == hi { (lo - 0.5, hi + 0.5) } else { (lo, hi) };
    let width = (hi - lo) / bin_count as f64;
    let mut bin_edges: Vec<f64> = (0..bin_count).map(|i| lo + width * i as f64).collect();
    bin_edges.push(hi);
    let mut counts = vec![0; bin_count];
    for &v in values {
        let b = (((v - lo) / width).floor() as usize).min(bin_count - 1);
        counts[b] += 1;
    }
    Histogram { bin_edges, counts }
}

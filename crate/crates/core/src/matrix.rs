//! Relationship matrices between entity dimensions under a scope.

use thiserror::Error;

use crate::aoi::{self, Alphabet, AoiError, Collapse, LabeledFixation, TransitionCounts, TransitionKind};
use crate::metrics::{self, AoiTarget, MetricValue, MetricsError, StatKind, Unit};
use crate::model::{EntityDim, Fixation, GazeSample, Gid, MetricMatrix, Saccade, Scope, Twi};
use crate::session::{ScopedSample, ScopedView, Session, SessionError};
use crate::similarity::{self, SimilarityError};
use crate::spatial::{self, Bounds, SpatialError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("unsupported combination: {row} x {col} with metric `{metric}`")]
    UnsupportedCombination { row: EntityDim, col: EntityDim, metric: String },
    #[error("matrix has no {0} entities in scope")]
    NoEntities(EntityDim),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Aoi(#[from] AoiError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
}

/// Metrics available for sample x AOI matrices.
pub const SAMPLE_AOI_METRICS: [&str; 8] = [
    "fixation_count",
    "total_duration",
    "mean_duration",
    "median_duration",
    "pct_time",
    "visit_count",
    "mean_visit_duration",
    "haar",
];

/// Metrics available for sample x TWI matrices.
pub const SAMPLE_TWI_METRICS: [&str; 8] = [
    "fixation_count",
    "total_duration",
    "mean_duration",
    "median_duration",
    "saccade_count",
    "mean_saccade_length",
    "median_saccade_length",
    "mean_saccade_duration",
];

/// Similarity metrics: `nw`, `nw_raw`, `nw_group`, `cosine:<transition kind>`,
/// `density_overlap`.
pub fn is_similarity_metric(metric: &str) -> bool {
    matches!(metric, "nw" | "nw_raw" | "nw_group" | "density_overlap")
        || metric.strip_prefix("cosine:").and_then(TransitionKind::parse).is_some()
}

/// Metric ids accepted for a pair of dimensions (excluding `through:<aoi>` and
/// `cosine:through:<aoi>`, which depend on the AOI set).
pub fn supported_metrics(row: EntityDim, col: EntityDim) -> Vec<&'static str> {
    use EntityDim::*;
    match (row, col) {
        (Sample | SampleGroup, Aoi | AoiGroup) | (Aoi | AoiGroup, Sample | SampleGroup) => SAMPLE_AOI_METRICS.to_vec(),
        (Aoi, Aoi) | (AoiGroup, AoiGroup) => vec!["direct", "indirect", "glance"],
        (Sample | SampleGroup, Sample | SampleGroup) | (Twi | TwiGroup, Twi | TwiGroup) if row == col => vec![
            "nw",
            "nw_raw",
            "nw_group",
            "cosine:direct",
            "cosine:indirect",
            "cosine:glance",
            "density_overlap",
        ],
        (Sample | SampleGroup, Twi | TwiGroup) | (Twi | TwiGroup, Sample | SampleGroup) => SAMPLE_TWI_METRICS.to_vec(),
        _ => vec![],
    }
}

/// Builds the `row_dim` x `col_dim` matrix of `metric_id` under `scope`.
///
/// Metrics ignore the session's time fraction; it only trims the event sets
/// shown in spatial and timeline views.
pub fn relationship_matrix(
    session: &Session,
    row_dim: EntityDim,
    col_dim: EntityDim,
    metric_id: &str,
    scope: &Scope,
) -> Result<MetricMatrix, MatrixError> {
    use EntityDim::*;
    let unsupported = || MatrixError::UnsupportedCombination {
        row: row_dim,
        col: col_dim,
        metric: metric_id.to_string(),
    };
    match (row_dim, col_dim) {
        (Sample | SampleGroup, Aoi | AoiGroup) => {
            if !SAMPLE_AOI_METRICS.contains(&metric_id) {
                return Err(unsupported());
            }
            sample_aoi(session, row_dim, col_dim, metric_id, scope)
        }
        (Aoi | AoiGroup, Sample | SampleGroup) | (Twi | TwiGroup, Sample | SampleGroup) => {
            relationship_matrix(session, col_dim, row_dim, metric_id, scope)
                .map(transpose)
                .map_err(|e| match e {
                    MatrixError::UnsupportedCombination { .. } => unsupported(),
                    e => e,
                })
        }
        (Aoi, Aoi) | (AoiGroup, AoiGroup) => {
            let kind = TransitionKind::parse(metric_id).ok_or_else(unsupported)?;
            aoi_transitions(session, row_dim, &kind, scope)
        }
        (Sample, Sample) | (SampleGroup, SampleGroup) | (Twi, Twi) | (TwiGroup, TwiGroup) => {
            if !is_similarity_metric(metric_id) {
                return Err(unsupported());
            }
            similarity(session, row_dim, metric_id, scope)
        }
        (Sample | SampleGroup, Twi | TwiGroup) => {
            if !SAMPLE_TWI_METRICS.contains(&metric_id) {
                return Err(unsupported());
            }
            sample_twi(session, row_dim, col_dim, metric_id, scope)
        }
        _ => Err(unsupported()),
    }
}

fn transpose(m: MetricMatrix) -> MetricMatrix {
    let values = (0..m.n_cols()).map(|c| m.values.iter().map(|r| r[c]).collect()).collect();
    MetricMatrix::new(m.col_dim, m.row_dim, m.metric_id, m.col_ids, m.row_ids, values, m.symmetric)
}

fn view(session: &Session, scope: &Scope) -> Result<ScopedView, MatrixError> {
    Ok(session.resolve_scope(scope)?)
}

fn scoped(session: &Session, sample: &GazeSample, twis: Option<&[&Twi]>) -> ScopedSample {
    session.scope_sample(sample, twis)
}

/// Rows of a sample or sample-group axis: `(id, indices into view.samples)`.
fn sample_rows(view: &ScopedView, dim: EntityDim) -> Vec<(String, Vec<usize>)> {
    if dim.is_group() {
        let gids: std::collections::BTreeSet<Gid> =
            view.samples.iter().map(|s| s.group_id).filter(|&g| g != 0).collect();
        gids.into_iter()
            .map(|g| {
                let members = (0..view.samples.len()).filter(|&i| view.samples[i].group_id == g).collect();
                (g.to_string(), members)
            })
            .collect()
    } else {
        view.samples.iter().enumerate().map(|(i, s)| (s.sample_id.clone(), vec![i])).collect()
    }
}

fn aggregate(values: Vec<MetricValue>) -> Result<f64, MatrixError> {
    Ok(metrics::aggregate_group(&values)?.value)
}

fn haar_value(s: &ScopedSample) -> MetricValue {
    let n = s.fixations.len() as u64;
    let v = aoi::haar(&s.fixations).unwrap_or(0.0);
    MetricValue::new("haar", v, Unit::Fraction, StatKind::Fraction, n)
}

fn sample_aoi(
    session: &Session,
    row_dim: EntityDim,
    col_dim: EntityDim,
    metric_id: &str,
    scope: &Scope,
) -> Result<MetricMatrix, MatrixError> {
    let ds = session.dataset();
    let view = view(session, scope)?;
    let rows = sample_rows(&view, row_dim);
    let targets: Vec<(String, AoiTarget)> = if col_dim.is_group() {
        aoi::alphabet_symbols(Alphabet::AoiGroup, &ds.aois)
            .into_iter()
            .map(|g| {
                let gid = g.parse().expect("group symbols are gids");
                (g, AoiTarget::Group(gid))
            })
            .collect()
    } else {
        ds.aois.iter().map(|a| (a.id.clone(), AoiTarget::Aoi(a.id.clone()))).collect()
    };
    let denominator = session.params().pct_denominator;
    let mut values = Vec::with_capacity(rows.len());
    for (_, members) in &rows {
        let mut row = Vec::with_capacity(targets.len());
        for (_, target) in &targets {
            let per_sample: Vec<MetricValue> = members
                .iter()
                .map(|&i| {
                    let s = &view.samples[i];
                    if metric_id == "haar" {
                        haar_value(s)
                    } else {
                        let stats =
                            metrics::fixation_aoi_stats(&s.fixations, target, &ds.aois, s.scoped_duration, denominator);
                        stats
                            .metric_values()
                            .into_iter()
                            .find(|m| m.metric_id == metric_id)
                            .expect("metric id checked by caller")
                    }
                })
                .collect();
            row.push(aggregate(per_sample)?);
        }
        values.push(row);
    }
    Ok(MetricMatrix::new(
        row_dim,
        col_dim,
        metric_id,
        rows.into_iter().map(|r| r.0).collect(),
        targets.into_iter().map(|t| t.0).collect(),
        values,
        false,
    ))
}

fn alphabet_for(dim: EntityDim) -> Alphabet {
    if dim.is_group() {
        Alphabet::AoiGroup
    } else {
        Alphabet::Aoi
    }
}

fn aoi_transitions(
    session: &Session,
    dim: EntityDim,
    kind: &TransitionKind,
    scope: &Scope,
) -> Result<MetricMatrix, MatrixError> {
    let aois = &session.dataset().aois;
    let alphabet = alphabet_for(dim);
    let view = view(session, scope)?;
    let mut total = TransitionCounts::zeros(kind.clone(), aoi::alphabet_symbols(alphabet, aois));
    for s in &view.samples {
        total.add(&aoi::transition_counts(&s.fixations, kind, alphabet, aois)?);
    }
    if total.symbols.is_empty() {
        return Err(MatrixError::NoEntities(dim));
    }
    let values = total.counts.iter().map(|r| r.iter().map(|&c| c as f64).collect()).collect();
    Ok(MetricMatrix::new(
        dim,
        dim,
        kind.metric_id(),
        total.symbols.clone(),
        total.symbols,
        values,
        false,
    ))
}

/// Entities of a similarity matrix, each a list of scoped units.
fn similarity_entities(
    session: &Session,
    dim: EntityDim,
    scope: &Scope,
) -> Result<Vec<(String, Vec<ScopedSample>)>, MatrixError> {
    let samples = session.select_samples(&scope.samples)?;
    let twis = session.select_twis(&scope.twis)?;
    let all_twis: Vec<&Twi> = session.dataset().twis.iter().collect();
    let twis_sel: Vec<&Twi> = twis.clone().unwrap_or(all_twis);
    Ok(match dim {
        EntityDim::Sample | EntityDim::SampleGroup => {
            let view = view(session, scope)?;
            sample_rows(&view, dim)
                .into_iter()
                .map(|(id, members)| (id, members.into_iter().map(|i| view.samples[i].clone()).collect()))
                .collect()
        }
        EntityDim::Twi => twis_sel
            .iter()
            .map(|t| {
                let units = samples
                    .iter()
                    .filter(|s| t.applies_to(&s.id))
                    .map(|s| scoped(session, s, Some(&[*t])))
                    .collect();
                (t.id.clone(), units)
            })
            .collect(),
        EntityDim::TwiGroup => {
            let gids: std::collections::BTreeSet<Gid> =
                twis_sel.iter().map(|t| t.group_id).filter(|&g| g != 0).collect();
            gids.into_iter()
                .map(|g| {
                    let windows: Vec<&Twi> = twis_sel.iter().copied().filter(|t| t.group_id == g).collect();
                    let units = samples
                        .iter()
                        .filter(|s| windows.iter().any(|t| t.applies_to(&s.id)))
                        .map(|s| scoped(session, s, Some(&windows)))
                        .collect();
                    (g.to_string(), units)
                })
                .collect()
        }
        _ => unreachable!("similarity entities are samples or windows"),
    })
}

fn similarity(session: &Session, dim: EntityDim, metric_id: &str, scope: &Scope) -> Result<MetricMatrix, MatrixError> {
    let aois = &session.dataset().aois;
    let entities = similarity_entities(session, dim, scope)?;
    if entities.is_empty() {
        return Err(MatrixError::NoEntities(dim));
    }
    let ids: Vec<String> = entities.iter().map(|e| e.0.clone()).collect();
    let scoring = session.params().nw;

    match metric_id {
        "nw" | "nw_raw" | "nw_group" => {
            let alphabet = if metric_id == "nw_group" { Alphabet::AoiGroup } else { Alphabet::Aoi };
            let seqs: Vec<Vec<Vec<String>>> = entities
                .iter()
                .map(|(_, units)| {
                    let mut s: Vec<Vec<String>> = units
                        .iter()
                        .map(|u| aoi::aoi_sequence(&u.fixations, alphabet, Collapse::PerVisit, aois))
                        .collect();
                    if s.is_empty() {
                        s.push(Vec::new());
                    }
                    s
                })
                .collect();
            let raw = metric_id == "nw_raw";
            similarity::similarity_matrix::<MatrixError>(dim, metric_id, &ids, |i, j| {
                let mut sum = 0.0;
                let mut n = 0usize;
                for a in &seqs[i] {
                    for b in &seqs[j] {
                        let s = similarity::nw_score(a, b, &scoring);
                        sum += if raw { s.raw } else { s.normalized };
                        n += 1;
                    }
                }
                Ok(sum / n as f64)
            })
        }
        "density_overlap" => {
            let pooled: Vec<Vec<Fixation>> = entities
                .iter()
                .map(|(_, units)| units.iter().flat_map(|u| u.fixations.iter().map(|l| l.fixation.clone())).collect())
                .collect();
            let everything: Vec<Fixation> = pooled.iter().flatten().cloned().collect();
            let kde = session.params().kde;
            let grids = match Bounds::around(&everything, 4.0 * kde.bandwidth) {
                Some(bounds) => pooled
                    .iter()
                    .map(|f| {
                        if f.is_empty() {
                            Ok(None)
                        } else {
                            spatial::density_grid(f, bounds, &kde).map(Some)
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()?,
                None => vec![None; pooled.len()],
            };
            similarity::similarity_matrix::<MatrixError>(dim, metric_id, &ids, |i, j| match (&grids[i], &grids[j]) {
                (Some(a), Some(b)) => Ok(similarity::density_overlap(a, b)?),
                (None, None) => Ok(1.0),
                _ => Ok(0.0),
            })
        }
        _ => {
            let kind = metric_id
                .strip_prefix("cosine:")
                .and_then(TransitionKind::parse)
                .expect("metric id checked by caller");
            let counts: Vec<TransitionCounts> = entities
                .iter()
                .map(|(_, units)| {
                    let mut t = TransitionCounts::zeros(kind.clone(), aoi::alphabet_symbols(Alphabet::Aoi, aois));
                    for u in units {
                        t.add(&aoi::transition_counts(&u.fixations, &kind, Alphabet::Aoi, aois)?);
                    }
                    Ok::<_, MatrixError>(t)
                })
                .collect::<Result<_, _>>()?;
            similarity::similarity_matrix::<MatrixError>(dim, metric_id, &ids, |i, j| {
                Ok(similarity::transition_cosine(&counts[i], &counts[j])?)
            })
        }
    }
}

/// Fixation and saccade summaries of one scoped unit.
pub fn event_summary(fixations: &[LabeledFixation], saccades: &[Saccade]) -> Vec<MetricValue> {
    let durations: Vec<f64> = fixations.iter().map(|l| l.fixation.duration).collect();
    let n = durations.len() as u64;
    let mut out = vec![
        MetricValue::new("fixation_count", n as f64, Unit::Count, StatKind::Sum, n),
        MetricValue::new("total_duration", durations.iter().sum(), Unit::Ms, StatKind::Sum, n),
        MetricValue::new("mean_duration", metrics::mean(&durations), Unit::Ms, StatKind::Mean, n),
        MetricValue::median_of("median_duration", Unit::Ms, durations),
    ];
    out.extend(metrics::saccade_stats(saccades).metric_values());
    out
}

fn sample_twi(
    session: &Session,
    row_dim: EntityDim,
    col_dim: EntityDim,
    metric_id: &str,
    scope: &Scope,
) -> Result<MetricMatrix, MatrixError> {
    let samples = session.select_samples(&scope.samples)?;
    let twis: Vec<&Twi> = session
        .select_twis(&scope.twis)?
        .unwrap_or_else(|| session.dataset().twis.iter().collect());

    let rows: Vec<(String, Vec<&GazeSample>)> = if row_dim.is_group() {
        let gids: std::collections::BTreeSet<Gid> = samples.iter().map(|s| s.group_id).filter(|&g| g != 0).collect();
        gids.into_iter()
            .map(|g| (g.to_string(), samples.iter().copied().filter(|s| s.group_id == g).collect()))
            .collect()
    } else {
        samples.iter().map(|s| (s.id.clone(), vec![*s])).collect()
    };
    let cols: Vec<(String, Vec<&Twi>)> = if col_dim.is_group() {
        let gids: std::collections::BTreeSet<Gid> = twis.iter().map(|t| t.group_id).filter(|&g| g != 0).collect();
        gids.into_iter()
            .map(|g| (g.to_string(), twis.iter().copied().filter(|t| t.group_id == g).collect()))
            .collect()
    } else {
        twis.iter().map(|t| (t.id.clone(), vec![*t])).collect()
    };

    let mut values = Vec::with_capacity(rows.len());
    for (_, members) in &rows {
        let mut row = Vec::with_capacity(cols.len());
        for (_, windows) in &cols {
            let per_sample: Vec<MetricValue> = members
                .iter()
                .map(|s| {
                    let u = scoped(session, s, Some(windows));
                    event_summary(&u.fixations, &u.saccades)
                        .into_iter()
                        .find(|m| m.metric_id == metric_id)
                        .expect("metric id checked by caller")
                })
                .collect();
            row.push(aggregate(per_sample)?);
        }
        values.push(row);
    }
    Ok(MetricMatrix::new(
        row_dim,
        col_dim,
        metric_id,
        rows.into_iter().map(|r| r.0).collect(),
        cols.into_iter().map(|c| c.0).collect(),
        values,
        false,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixation::DetectionParams;
    use crate::model::{Aoi, Dataset, GazePoint, Selector, Shape};

    /// Fixations visit the x positions in `xs`, 200 ms apart.
    fn sample(id: &str, xs: &[f64], gid: Gid) -> GazeSample {
        let mut points = Vec::new();
        for (k, &x) in xs.iter().enumerate() {
            for i in 0..10 {
                points.push(GazePoint::new(k as f64 * 200.0 + i as f64 * 10.0, x, 5.0));
            }
        }
        let mut s = GazeSample::new(id, points);
        s.group_id = gid;
        s
    }

    fn session() -> Session {
        let ds = Dataset {
            samples: vec![
                sample("P1", &[5.0, 25.0, 45.0, 5.0, 95.0], 1),
                sample("P2", &[5.0, 25.0, 45.0, 25.0], 1),
                sample("P3", &[45.0, 5.0, 45.0], 2),
            ],
            aois: vec![
                Aoi::new("A", Shape::rect(0.0, 0.0, 10.0, 10.0), 0).with_group(1),
                Aoi::new("B", Shape::rect(20.0, 0.0, 10.0, 10.0), 1).with_group(1),
                Aoi::new("C", Shape::rect(40.0, 0.0, 10.0, 10.0), 2).with_group(2),
            ],
            twis: vec![
                Twi::shared("early", 0.0, 400.0).with_group(1),
                Twi::shared("late", 400.0, 1000.0).with_group(2),
            ],
        };
        Session::new(ds)
            .unwrap()
            .set_detection(DetectionParams::new(5.0, 50.0).unwrap())
            .unwrap()
    }

    #[test]
    fn sample_aoi_matches_per_cell_stats() {
        let s = session();
        let m = relationship_matrix(&s, EntityDim::Sample, EntityDim::Aoi, "fixation_count", &Scope::all()).unwrap();
        assert_eq!(m.row_ids, ["P1", "P2", "P3"]);
        assert_eq!(m.col_ids, ["A", "B", "C"]);
        assert_eq!(m.values, vec![vec![2.0, 1.0, 1.0], vec![1.0, 2.0, 1.0], vec![1.0, 0.0, 2.0]]);
        for (r, sid) in m.row_ids.iter().enumerate() {
            for (c, aid) in m.col_ids.iter().enumerate() {
                let stats = metrics::fixation_aoi_stats(
                    s.labels(sid).unwrap(),
                    &AoiTarget::Aoi(aid.clone()),
                    &s.dataset().aois,
                    0.0,
                    Default::default(),
                );
                assert_eq!(m.values[r][c], stats.count as f64);
            }
        }
        let h = relationship_matrix(&s, EntityDim::Sample, EntityDim::Aoi, "haar", &Scope::all()).unwrap();
        assert_eq!(h.values[0][0], 0.8);
        let g = relationship_matrix(&s, EntityDim::SampleGroup, EntityDim::AoiGroup, "fixation_count", &Scope::all())
            .unwrap();
        assert_eq!(g.row_ids, ["1", "2"]);
        assert_eq!(g.values, vec![vec![6.0, 2.0], vec![1.0, 2.0]]);
        let gh = relationship_matrix(&s, EntityDim::SampleGroup, EntityDim::Aoi, "haar", &Scope::all()).unwrap();
        assert!((gh.values[0][0] - 8.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn transposed_combination() {
        let s = session();
        let m = relationship_matrix(&s, EntityDim::Sample, EntityDim::Aoi, "total_duration", &Scope::all()).unwrap();
        let t = relationship_matrix(&s, EntityDim::Aoi, EntityDim::Sample, "total_duration", &Scope::all()).unwrap();
        assert_eq!(t.row_ids, m.col_ids);
        assert_eq!(t.values[2][1], m.values[1][2]);
    }

    #[test]
    fn transitions_sum_over_scope() {
        let s = session();
        let m = relationship_matrix(&s, EntityDim::Aoi, EntityDim::Aoi, "direct", &Scope::all()).unwrap();
        // P1: A B C A, P2: A B C B, P3: C A C.
        assert_eq!(m.get("A", "B"), Some(2.0));
        assert_eq!(m.get("C", "A"), Some(2.0));
        assert_eq!(m.get("C", "B"), Some(1.0));
        let one = relationship_matrix(
            &s,
            EntityDim::Aoi,
            EntityDim::Aoi,
            "direct",
            &Scope::new(Selector::One("P3".into()), Selector::All),
        )
        .unwrap();
        assert_eq!(one.values.iter().flatten().sum::<f64>(), 2.0);
        let through = relationship_matrix(&s, EntityDim::Aoi, EntityDim::Aoi, "through:B", &Scope::all()).unwrap();
        assert_eq!(through.get("A", "C"), Some(2.0));
    }

    #[test]
    fn similarity_matrices() {
        let s = session();
        for metric in ["nw", "nw_group", "cosine:direct", "density_overlap"] {
            for dim in [EntityDim::Sample, EntityDim::SampleGroup, EntityDim::Twi, EntityDim::TwiGroup] {
                let m = relationship_matrix(&s, dim, dim, metric, &Scope::all()).unwrap();
                assert!(m.symmetric);
                for i in 0..m.n_rows() {
                    for j in 0..m.n_cols() {
                        assert_eq!(m.values[i][j], m.values[j][i]);
                    }
                }
                if dim == EntityDim::Sample {
                    for i in 0..m.n_rows() {
                        assert!((m.values[i][i] - 1.0).abs() < 1e-9, "{metric} diag {}", m.values[i][i]);
                    }
                }
            }
        }
        let raw = relationship_matrix(&s, EntityDim::Sample, EntityDim::Sample, "nw_raw", &Scope::all()).unwrap();
        assert_eq!(raw.get("P1", "P1"), Some(4.0));
    }

    #[test]
    fn sample_twi_stats() {
        let s = session();
        let m = relationship_matrix(&s, EntityDim::Sample, EntityDim::Twi, "fixation_count", &Scope::all()).unwrap();
        assert_eq!(m.col_ids, ["early", "late"]);
        assert_eq!(m.values, vec![vec![2.0, 3.0], vec![2.0, 2.0], vec![2.0, 1.0]]);
        let sc = relationship_matrix(&s, EntityDim::SampleGroup, EntityDim::TwiGroup, "saccade_count", &Scope::all())
            .unwrap();
        assert_eq!(sc.values[0][0], 2.0);
    }

    #[test]
    fn unsupported_combinations() {
        let s = session();
        assert!(matches!(
            relationship_matrix(&s, EntityDim::Aoi, EntityDim::Twi, "nw", &Scope::all()),
            Err(MatrixError::UnsupportedCombination { .. })
        ));
        assert!(matches!(
            relationship_matrix(&s, EntityDim::Sample, EntityDim::Aoi, "direct", &Scope::all()),
            Err(MatrixError::UnsupportedCombination { .. })
        ));
        assert!(matches!(
            relationship_matrix(&s, EntityDim::Sample, EntityDim::Twi, "pct_time", &Scope::all()),
            Err(MatrixError::UnsupportedCombination { .. })
        ));
        assert!(relationship_matrix(&s, EntityDim::Aoi, EntityDim::Aoi, "through:Z", &Scope::all()).is_err());
    }
}

//! Zip bundles: a complete, re-importable snapshot of a session.
//!
//! Layout (all paths relative to the archive root):
//!
//! ```text
//! config.json              parameters, scope, orderings, sample order, version
//! aois.json                AOI definitions
//! twis.tsv                 start, end, id, gid, owning sample
//! groups.json              gid assignments
//! notes.json               free-text notes per sample
//! samples/<id>.tsv         raw gaze points (authoritative)
//! fixations/<id>.tsv       index, cx, cy, t_start, t_end, duration, aoi_id
//! saccades/<id>.tsv        from, to, length, duration, angle
//! metrics/<matrix_id>.tsv  relationship matrices under the session scope
//! metrics/summary.tsv      scope, entity, metric_id, value, unit, support
//! ```
//!
//! Entries are sorted and carry a fixed timestamp, so exporting the same
//! session twice yields identical bytes.

use std::collections::BTreeMap;
use std::io::{Cursor, Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipArchive, ZipWriter};

use crate::aoi::{self, LabeledFixation};
use crate::fixation::DetectionParams;
use crate::ingest::{self, HeaderMode, IngestOptions};
use crate::matrix::{self, event_summary};
use crate::metrics::{self, AoiTarget};
use crate::model::{Dataset, EntityDim, GazeSample, MetricMatrix, Saccade, Scope};
use crate::seriation::Reordering;
use crate::session::{AnalysisParams, Note, Session, SessionError};

pub const FORMAT: &str = "gazescope-bundle/1";

#[derive(Debug, Error)]
pub enum BundleError {
    #[error("bundle is missing `{0}`")]
    MissingFile(String),
    #[error("`{path}` does not match the bundle schema: {reason}")]
    SchemaMismatch { path: String, reason: String },
    #[error("not a zip archive: {0}")]
    Zip(#[from] zip::result::ZipError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bundle does not form a valid session: {0}")]
    Session(#[from] SessionError),
}

/// Non-fatal findings of an import.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ImportWarning {
    /// A derived file differs from what the raw data recomputes to.
    RecomputationMismatch(String),
}

impl std::fmt::Display for ImportWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ImportWarning::RecomputationMismatch(p) => write!(f, "recomputation mismatch in `{p}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SampleEntry {
    id: String,
    label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleConfig {
    format: String,
    version: u64,
    detection: DetectionParams,
    params: AnalysisParams,
    scope: String,
    time_fraction: f64,
    orderings: BTreeMap<String, Reordering>,
    samples: Vec<SampleEntry>,
}

pub const FIXATION_HEADER: &str = "index\tcx\tcy\tt_start\tt_end\tduration\taoi_id\n";
pub const SACCADE_HEADER: &str = "from\tto\tlength\tduration\tangle\n";
pub const SUMMARY_HEADER: &str = "scope\tentity\tmetric_id\tvalue\tunit\tsupport\n";

pub fn fixations_tsv(labels: &[LabeledFixation]) -> String {
    let mut out = String::from(FIXATION_HEADER);
    for l in labels {
        let f = &l.fixation;
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            f.index,
            f.cx,
            f.cy,
            f.t_start,
            f.t_end,
            f.duration,
            l.aoi_id.as_deref().unwrap_or("")
        ));
    }
    out
}

pub fn saccades_tsv(saccades: &[Saccade]) -> String {
    let mut out = String::from(SACCADE_HEADER);
    for s in saccades {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            s.from_fixation, s.to_fixation, s.length, s.duration, s.angle
        ));
    }
    out
}

/// Matrix in stored (not display) order; the corner cell names both axes.
pub fn matrix_tsv(m: &MetricMatrix) -> String {
    let mut out = format!("{}/{}", m.row_dim, m.col_dim);
    for c in &m.col_ids {
        out.push('\t');
        out.push_str(c);
    }
    out.push('\n');
    for (id, row) in m.row_ids.iter().zip(&m.values) {
        out.push_str(id);
        for v in row {
            out.push_str(&format!("\t{v}"));
        }
        out.push('\n');
    }
    out
}

/// The matrices written to `metrics/`, computed under the session scope.
/// Combinations with no entities are skipped.
pub fn standard_matrices(session: &Session) -> Vec<MetricMatrix> {
    use EntityDim::*;
    let mut specs: Vec<(EntityDim, EntityDim, &str)> = Vec::new();
    for m in matrix::SAMPLE_AOI_METRICS {
        specs.push((Sample, Aoi, m));
    }
    for m in ["direct", "indirect", "glance"] {
        specs.push((Aoi, Aoi, m));
    }
    for m in ["nw", "nw_raw", "cosine:direct", "density_overlap"] {
        specs.push((Sample, Sample, m));
    }
    for m in matrix::SAMPLE_TWI_METRICS {
        specs.push((Sample, Twi, m));
    }
    let scope = session.scope();
    specs
        .into_iter()
        .filter_map(|(r, c, m)| matrix::relationship_matrix(session, r, c, m, scope).ok())
        .filter(|m| m.n_rows() > 0 && m.n_cols() > 0)
        .map(|mut m| {
            if let Some(o) = session.orderings().get(&m.matrix_id()) {
                if o.row_perm.len() == m.n_rows() && o.col_perm.len() == m.n_cols() {
                    m.row_order = o.row_perm.clone();
                    m.col_order = o.col_perm.clone();
                }
            }
            m
        })
        .collect()
}

/// One line of the metrics summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub scope: String,
    /// A sample id, or `<sample id>/<aoi id>` for per-AOI statistics.
    pub entity: String,
    pub metric_id: String,
    pub value: f64,
    pub unit: metrics::Unit,
    pub support: u64,
}

/// Per-sample and per-(sample, AOI) metrics under a scope.
pub fn summary_rows(session: &Session, scope: &Scope) -> Result<Vec<SummaryRow>, SessionError> {
    let view = session.resolve_scope(scope)?;
    let scope_str = scope.to_string();
    let ds = session.dataset();
    let mut rows = Vec::new();
    let mut push = |entity: &str, v: metrics::MetricValue| {
        rows.push(SummaryRow {
            scope: scope_str.clone(),
            entity: entity.to_string(),
            metric_id: v.metric_id,
            value: v.value,
            unit: v.unit,
            support: v.support,
        })
    };
    for s in &view.samples {
        for v in event_summary(&s.fixations, &s.saccades) {
            push(&s.sample_id, v);
        }
        let haar = aoi::haar(&s.fixations).unwrap_or(0.0);
        let n = s.fixations.len() as u64;
        push(
            &s.sample_id,
            metrics::MetricValue::new("haar", haar, metrics::Unit::Fraction, metrics::StatKind::Fraction, n),
        );
        for a in &ds.aois {
            let stats = metrics::fixation_aoi_stats(
                &s.fixations,
                &AoiTarget::Aoi(a.id.clone()),
                &ds.aois,
                s.scoped_duration,
                session.params().pct_denominator,
            );
            let entity = format!("{}/{}", s.sample_id, a.id);
            for v in stats.metric_values() {
                push(&entity, v);
            }
        }
    }
    Ok(rows)
}

pub fn summary_tsv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            r.scope, r.entity, r.metric_id, r.value, r.unit, r.support
        ));
    }
    out
}

fn groups_json(ds: &Dataset) -> String {
    serde_json::to_string_pretty(&ds.group_table()).expect("group table serializes")
}

fn config_json(session: &Session) -> String {
    let cfg = BundleConfig {
        format: FORMAT.into(),
        version: session.version(),
        detection: session.detection(),
        params: session.params().clone(),
        scope: session.scope().to_string(),
        time_fraction: session.time_fraction(),
        orderings: session.orderings().clone(),
        samples: session
            .dataset()
            .samples
            .iter()
            .map(|s| SampleEntry {
                id: s.id.clone(),
                label: s.label.clone(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&cfg).expect("config serializes")
}

/// Derived files, keyed by path. Also used to cross-check imports.
fn derived_files(session: &Session) -> BTreeMap<String, String> {
    let mut files = BTreeMap::new();
    for s in &session.dataset().samples {
        let labels = session.labels(&s.id).unwrap_or_default();
        let saccades = session.saccades(&s.id).unwrap_or_default();
        files.insert(format!("fixations/{}.tsv", s.id), fixations_tsv(labels));
        files.insert(format!("saccades/{}.tsv", s.id), saccades_tsv(saccades));
    }
    for m in standard_matrices(session) {
        files.insert(format!("metrics/{}.tsv", m.matrix_id()), matrix_tsv(&m));
    }
    let rows = summary_rows(session, session.scope()).unwrap_or_default();
    files.insert("metrics/summary.tsv".into(), summary_tsv(&rows));
    files
}

/// Serializes a session into zip bytes.
pub fn export_bundle(session: &Session) -> Vec<u8> {
    let ds = session.dataset();
    let mut files: BTreeMap<String, String> = derived_files(session);
    files.insert("config.json".into(), config_json(session));
    files.insert("aois.json".into(), aoi::write_aois_json(&ds.aois));
    files.insert("twis.tsv".into(), ingest::write_twi_tsv(&ds.twis));
    files.insert("groups.json".into(), groups_json(ds));
    files.insert(
        "notes.json".into(),
        serde_json::to_string_pretty(session.notes()).expect("notes serialize"),
    );
    for s in &ds.samples {
        files.insert(format!("samples/{}.tsv", s.id), ingest::write_gaze_tsv(s));
    }

    let opts = SimpleFileOptions::default()
        .compression_method(CompressionMethod::Deflated)
        .last_modified_time(DateTime::default())
        .unix_permissions(0o644);
    let dir_opts = opts.unix_permissions(0o755);
    let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
    for dir in ["fixations/", "metrics/", "saccades/", "samples/"] {
        zip.add_directory(dir, dir_opts).expect("in-memory zip");
    }
    for (path, body) in &files {
        zip.start_file(path.as_str(), opts).expect("in-memory zip");
        zip.write_all(body.as_bytes()).expect("in-memory zip");
    }
    zip.finish().expect("in-memory zip").into_inner()
}

fn read_entry(archive: &mut ZipArchive<Cursor<&[u8]>>, path: &str) -> Result<Option<Vec<u8>>, BundleError> {
    match archive.by_name(path) {
        Ok(mut f) => {
            let mut buf = Vec::with_capacity(f.size() as usize);
            f.read_to_end(&mut buf)?;
            Ok(Some(buf))
        }
        Err(zip::result::ZipError::FileNotFound) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn required(archive: &mut ZipArchive<Cursor<&[u8]>>, path: &str) -> Result<Vec<u8>, BundleError> {
    read_entry(archive, path)?.ok_or_else(|| BundleError::MissingFile(path.to_string()))
}

fn schema(path: &str, reason: impl ToString) -> BundleError {
    BundleError::SchemaMismatch {
        path: path.to_string(),
        reason: reason.to_string(),
    }
}

/// Rebuilds a session from a bundle. Raw samples are authoritative; derived
/// files are only compared against recomputation.
pub fn import_bundle(bytes: &[u8]) -> Result<(Session, Vec<ImportWarning>), BundleError> {
    let mut archive = ZipArchive::new(Cursor::new(bytes))?;

    let cfg: BundleConfig =
        serde_json::from_slice(&required(&mut archive, "config.json")?).map_err(|e| schema("config.json", e))?;
    if cfg.format != FORMAT {
        return Err(schema("config.json", format!("unknown format `{}`", cfg.format)));
    }
    let scope: Scope = cfg.scope.parse().map_err(|e: String| schema("config.json", e))?;

    let aois = aoi::parse_aois_json(&required(&mut archive, "aois.json")?).map_err(|e| schema("aois.json", e))?;
    let twi_bytes = required(&mut archive, "twis.tsv")?;
    let twis = if twi_bytes.iter().all(|b| b.is_ascii_whitespace()) {
        Vec::new()
    } else {
        ingest::parse_twi_tsv(&twi_bytes).map_err(|e| schema("twis.tsv", e))?
    };
    let groups =
        ingest::parse_groups_json(&required(&mut archive, "groups.json")?).map_err(|e| schema("groups.json", e))?;

    let notes: BTreeMap<String, Vec<Note>> = match read_entry(&mut archive, "notes.json")? {
        Some(b) => serde_json::from_slice(&b).map_err(|e| schema("notes.json", e))?,
        None => BTreeMap::new(),
    };

    let mut samples = Vec::with_capacity(cfg.samples.len());
    for entry in &cfg.samples {
        let path = format!("samples/{}.tsv", entry.id);
        let raw = required(&mut archive, &path)?;
        let mut sample = if raw.iter().all(|b| b.is_ascii_whitespace()) {
            GazeSample::new(entry.id.clone(), Vec::new())
        } else {
            let opts = IngestOptions {
                has_header: HeaderMode::No,
                twi_column: false,
            };
            ingest::parse_gaze_tsv(&raw, &entry.id, opts).map_err(|e| schema(&path, e))?.0
        };
        sample.label = entry.label.clone();
        samples.push(sample);
    }

    let mut dataset = Dataset { samples, aois, twis };
    dataset.apply_groups(&groups);
    let session = Session::restore(
        dataset,
        cfg.version,
        cfg.detection,
        cfg.params,
        scope,
        cfg.time_fraction,
        cfg.orderings,
        notes,
    )?;

    let mut warnings = Vec::new();
    for (path, expected) in derived_files(&session) {
        if let Some(found) = read_entry(&mut archive, &path)? {
            if found != expected.as_bytes() {
                warnings.push(ImportWarning::RecomputationMismatch(path));
            }
        }
    }
    Ok((session, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Aoi, GazePoint, Selector, Shape, Twi};

    fn worked() -> Session {
        let pts = vec![
            GazePoint::new(0.0, 0.0, 0.0),
            GazePoint::new(50.0, 2.0, 1.0),
            GazePoint::new(100.0, 1.0, 0.0),
            GazePoint::new(150.0, 100.0, 100.0),
        ];
        let ds = Dataset {
            samples: vec![GazeSample::new("P1", pts)],
            aois: vec![Aoi::new("A", Shape::rect(-5.0, -5.0, 10.0, 10.0), 0)],
            twis: vec![Twi::shared("w", 0.0, 120.0).with_group(1)],
        };
        Session::new(ds).unwrap()
    }

    fn entry(bytes: &[u8], path: &str) -> Option<String> {
        let mut a = ZipArchive::new(Cursor::new(bytes)).unwrap();
        read_entry(&mut a, path).unwrap().map(|b| String::from_utf8(b).unwrap())
    }

    #[test]
    fn worked_example_fixation_row() {
        let zip = export_bundle(&worked());
        let fx = entry(&zip, "fixations/P1.tsv").unwrap();
        assert_eq!(fx, format!("{FIXATION_HEADER}0\t1\t0.3333333333333333\t0\t100\t100\tA\n"));
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let s = worked()
            .set_scope(Scope::new(Selector::All, Selector::Group(1)))
            .unwrap()
            .set_time_fraction(0.75)
            .unwrap();
        let a = export_bundle(&s);
        let (back, warnings) = import_bundle(&a).unwrap();
        assert!(warnings.is_empty(), "{warnings:?}");
        assert_eq!(back.version(), s.version());
        assert_eq!(back.scope(), s.scope());
        assert_eq!(export_bundle(&back), a);
    }

    #[test]
    fn empty_dataset_exports() {
        let zip = export_bundle(&Session::default());
        let (s, w) = import_bundle(&zip).unwrap();
        assert!(w.is_empty());
        assert!(s.dataset().samples.is_empty());
        let names: Vec<String> = ZipArchive::new(Cursor::new(zip.as_slice())).unwrap().file_names().map(String::from).collect();
        assert!(names.contains(&"samples/".to_string()));
        assert!(names.contains(&"config.json".to_string()));
    }

    fn rewrite(bytes: &[u8], drop: &str, replace: Option<(&str, &str)>) -> Vec<u8> {
        let mut a = ZipArchive::new(Cursor::new(bytes)).unwrap();
        let mut zip = ZipWriter::new(Cursor::new(Vec::new()));
        for i in 0..a.len() {
            let mut f = a.by_index(i).unwrap();
            let name = f.name().to_string();
            if name == drop {
                continue;
            }
            let mut body = Vec::new();
            f.read_to_end(&mut body).unwrap();
            if let Some((p, b)) = replace {
                if p == name {
                    body = b.as_bytes().to_vec();
                }
            }
            if name.ends_with('/') {
                zip.add_directory(name, SimpleFileOptions::default()).unwrap();
            } else {
                zip.start_file(name, SimpleFileOptions::default()).unwrap();
                zip.write_all(&body).unwrap();
            }
        }
        zip.finish().unwrap().into_inner()
    }

    #[test]
    fn missing_and_tampered_files() {
        let zip = export_bundle(&worked());
        let no_aois = rewrite(&zip, "aois.json", None);
        assert!(matches!(import_bundle(&no_aois), Err(BundleError::MissingFile(p)) if p == "aois.json"));

        let tampered = rewrite(&zip, "", Some(("fixations/P1.tsv", "index\n0\t9\t9\t0\t1\t1\t\n")));
        let (_, w) = import_bundle(&tampered).unwrap();
        assert_eq!(w, vec![ImportWarning::RecomputationMismatch("fixations/P1.tsv".into())]);

        let bad = rewrite(&zip, "", Some(("config.json", "{\"format\": 3}")));
        assert!(matches!(import_bundle(&bad), Err(BundleError::SchemaMismatch { .. })));
        assert!(matches!(import_bundle(b"not a zip"), Err(BundleError::Zip(_))));
    }
}

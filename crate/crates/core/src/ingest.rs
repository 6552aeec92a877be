//! Parsers for the plain-text import formats: gaze TSV, TWI TSV and the
//! groups JSON file.

use std::collections::BTreeMap;

use serde::Deserialize;
use thiserror::Error;

use crate::model::{GazePoint, GazeSample, Gid, GroupTable, Twi, ALL_SAMPLES};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("input is not valid UTF-8")]
    NotUtf8,
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("timestamp at line {0} does not increase")]
    NonMonotoneTime(usize),
    #[error("inverted time window at line {0}")]
    InvertedWindow(usize),
    #[error("file contains no data rows")]
    EmptyFile,
    #[error("malformed groups JSON: {0}")]
    MalformedJson(String),
    #[error("negative gid {gid} for `{id}`")]
    NegativeGid { id: String, gid: i64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeaderMode {
    /// The first row is a header iff one of its first three fields is not a number.
    #[default]
    Auto,
    Yes,
    No,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IngestOptions {
    pub has_header: HeaderMode,
    /// Read TWI labels from a fourth column.
    pub twi_column: bool,
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split('\n').enumerate().filter_map(|(i, line)| {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() || line.starts_with('#') {
            None
        } else {
            Some((i + 1, line))
        }
    })
}

fn parse_num(field: &str, line: usize, what: &str) -> Result<f64, IngestError> {
    let v: f64 = field.trim().parse().map_err(|_| IngestError::MalformedRow {
        line,
        reason: format!("cannot parse {what} `{field}`"),
    })?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(IngestError::MalformedRow {
            line,
            reason: format!("non-finite {what} `{field}`"),
        })
    }
}

fn looks_like_header(line: &str) -> bool {
    line.split('\t')
        .take(3)
        .any(|f| f.trim().parse::<f64>().map_or(true, |v| !v.is_finite()))
}

fn to_text(bytes: &[u8]) -> Result<&str, IngestError> {
    let text = std::str::from_utf8(bytes).map_err(|_| IngestError::NotUtf8)?;
    Ok(text.strip_prefix('\u{feff}').unwrap_or(text))
}

/// Parses a `time \t x \t y [\t twi-label]` gaze file into one sample.
///
/// With `twi_column` set, every maximal run of rows sharing a non-empty label
/// becomes a [`Twi`] owned by this sample, with id `<sample_id>:<label>`
/// (`<sample_id>:<label>:<k>` for the k-th repeated run of a label). A run
/// covers `[t_first, t_last + median sampling interval)`.
pub fn parse_gaze_tsv(
    bytes: &[u8],
    sample_id: &str,
    opts: IngestOptions,
) -> Result<(GazeSample, Vec<Twi>), IngestError> {
    let text = to_text(bytes)?;
    let mut lines = data_lines(text).peekable();

    let skip_first = match opts.has_header {
        HeaderMode::Yes => true,
        HeaderMode::No => false,
        HeaderMode::Auto => lines.peek().is_some_and(|(_, l)| looks_like_header(l)),
    };
    if skip_first {
        lines.next();
    }

    let mut points: Vec<GazePoint> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    for (line_no, line) in lines {
        let fields: Vec<&str> = line.split('\t').collect();
        let ok_len = if opts.twi_column {
            fields.len() == 3 || fields.len() == 4
        } else {
            fields.len() == 3
        };
        if !ok_len {
            return Err(IngestError::MalformedRow {
                line: line_no,
                reason: format!("expected {} fields, found {}", if opts.twi_column { "3 or 4" } else { "3" }, fields.len()),
            });
        }
        let t = parse_num(fields[0], line_no, "timestamp")?;
        let x = parse_num(fields[1], line_no, "x")?;
        let y = parse_num(fields[2], line_no, "y")?;
        if t < 0.0 {
            return Err(IngestError::MalformedRow {
                line: line_no,
                reason: "negative timestamp".into(),
            });
        }
        if let Some(prev) = points.last() {
            if t <= prev.t {
                return Err(IngestError::NonMonotoneTime(line_no));
            }
        }
        points.push(GazePoint::new(t, x, y));
        if opts.twi_column {
            labels.push(fields.get(3).map(|s| s.trim().to_string()).unwrap_or_default());
        }
    }

    if points.is_empty() {
        return Err(IngestError::EmptyFile);
    }

    let twis = if opts.twi_column {
        label_runs(sample_id, &points, &labels)
    } else {
        Vec::new()
    };
    Ok((GazeSample::new(sample_id, points), twis))
}

fn median_interval(points: &[GazePoint]) -> f64 {
    let mut gaps: Vec<f64> = points.windows(2).map(|w| w[1].t - w[0].t).collect();
    if gaps.is_empty() {
        return 1.0;
    }
    gaps.sort_by(f64::total_cmp);
    let n = gaps.len();
    if n % 2 == 1 {
        gaps[n / 2]
    } else {
        (gaps[n / 2 - 1] + gaps[n / 2]) / 2.0
    }
}

fn label_runs(sample_id: &str, points: &[GazePoint], labels: &[String]) -> Vec<Twi> {
    let pad = median_interval(points);
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    let mut twis = Vec::new();
    let mut i = 0;
    while i < labels.len() {
        let mut j = i;
        while j + 1 < labels.len() && labels[j + 1] == labels[i] {
            j += 1;
        }
        if !labels[i].is_empty() {
            let k = seen.entry(labels[i].as_str()).or_insert(0);
            *k += 1;
            let id = if *k == 1 {
                format!("{sample_id}:{}", labels[i])
            } else {
                format!("{sample_id}:{}:{k}", labels[i])
            };
            twis.push(Twi {
                id,
                sample_id: sample_id.to_string(),
                t_start: points[i].t,
                t_end: points[j].t + pad,
                group_id: 0,
            });
        }
        i = j + 1;
    }
    twis
}

/// Parses `start \t end [\t label [\t gid [\t sample]]]` rows into windows.
///
/// The optional fifth column names the owning sample (`*` for every sample);
/// without it a window is shared by all samples.
pub fn parse_twi_tsv(bytes: &[u8]) -> Result<Vec<Twi>, IngestError> {
    let text = to_text(bytes)?;
    let mut out = Vec::new();
    for (row, (line_no, line)) in data_lines(text).enumerate() {
        let fields: Vec<&str> = line.split('\t').collect();
        if !(2..=5).contains(&fields.len()) {
            return Err(IngestError::MalformedRow {
                line: line_no,
                reason: format!("expected 2 to 5 fields, found {}", fields.len()),
            });
        }
        let start = parse_num(fields[0], line_no, "start")?;
        let end = parse_num(fields[1], line_no, "end")?;
        if start >= end {
            return Err(IngestError::InvertedWindow(line_no));
        }
        let id = match fields.get(2).map(|s| s.trim()) {
            Some(label) if !label.is_empty() => label.to_string(),
            _ => format!("twi_{}", row + 1),
        };
        let group_id = match fields.get(3).map(|s| s.trim()) {
            Some(g) if !g.is_empty() => parse_gid(g, &id, line_no)?,
            _ => 0,
        };
        let sample_id = match fields.get(4).map(|s| s.trim()) {
            Some(s) if !s.is_empty() => s.to_string(),
            _ => ALL_SAMPLES.to_string(),
        };
        out.push(Twi {
            id,
            sample_id,
            t_start: start,
            t_end: end,
            group_id,
        });
    }
    Ok(out)
}

fn parse_gid(field: &str, id: &str, line: usize) -> Result<Gid, IngestError> {
    let v: i64 = field.parse().map_err(|_| IngestError::MalformedRow {
        line,
        reason: format!("cannot parse gid `{field}`"),
    })?;
    if v < 0 {
        return Err(IngestError::NegativeGid { id: id.to_string(), gid: v });
    }
    Gid::try_from(v).map_err(|_| IngestError::MalformedRow {
        line,
        reason: format!("gid `{field}` out of range"),
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGroups {
    #[serde(default)]
    samples: BTreeMap<String, i64>,
    #[serde(default)]
    aois: BTreeMap<String, i64>,
    #[serde(default)]
    twis: BTreeMap<String, i64>,
}

/// Parses `{"samples": {id: gid}, "aois": {...}, "twis": {...}}`; every key is optional.
pub fn parse_groups_json(bytes: &[u8]) -> Result<GroupTable, IngestError> {
    let raw: RawGroups =
        serde_json::from_slice(bytes).map_err(|e| IngestError::MalformedJson(e.to_string()))?;
    let convert = |m: BTreeMap<String, i64>| -> Result<BTreeMap<String, Gid>, IngestError> {
        m.into_iter()
            .map(|(id, g)| {
                if g < 0 {
                    Err(IngestError::NegativeGid { id, gid: g })
                } else {
                    Gid::try_from(g)
                        .map(|g| (id, g))
                        .map_err(|_| IngestError::MalformedJson(format!("gid {g} out of range")))
                }
            })
            .collect()
    };
    Ok(GroupTable {
        samples: convert(raw.samples)?,
        aois: convert(raw.aois)?,
        twis: convert(raw.twis)?,
    })
}

/// Serializes a sample as a headerless three-column gaze TSV.
///
/// Numbers use the shortest decimal form that parses back to the same bits.
pub fn write_gaze_tsv(sample: &GazeSample) -> String {
    let mut out = String::with_capacity(sample.points.len() * 24);
    for p in &sample.points {
        out.push_str(&format!("{}\t{}\t{}\n", p.t, p.x, p.y));
    }
    out
}

/// Serializes windows in the five-column form read by [`parse_twi_tsv`].
pub fn write_twi_tsv(twis: &[Twi]) -> String {
    twis.iter()
        .map(|t| format!("{}\t{}\t{}\t{}\t{}\n", t.t_start, t.t_end, t.id, t.group_id, t.sample_id))
        .collect()
}

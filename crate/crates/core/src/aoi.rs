//! AOI hit-testing, fixation labelling, visits, AOI sequences, transition
//! counts and focus-and-context classification.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Aoi, Fixation, Gid, Shape};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AoiError {
    #[error("HAAR of an empty fixation list is undefined")]
    EmptyInput,
    #[error("unknown focus AOI `{0}`")]
    UnknownFocusAoi(String),
    #[error("malformed AOI JSON: {0}")]
    MalformedJson(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledFixation {
    pub fixation: Fixation,
    /// `None` when the centroid lies in no AOI.
    pub aoi_id: Option<String>,
}

pub fn contains(shape: &Shape, x: f64, y: f64) -> bool {
    match shape {
        Shape::Rect { x: rx, y: ry, w, h } => x >= *rx && x <= rx + w && y >= *ry && y <= ry + h,
        Shape::Polygon { vertices } => polygon_contains(vertices, x, y),
    }
}

/// Even-odd rule; points on an edge or vertex count as inside.
fn polygon_contains(vertices: &[[f64; 2]], x: f64, y: f64) -> bool {
    let n = vertices.len();
    let mut inside = false;
    for i in 0..n {
        let [x0, y0] = vertices[i];
        let [x1, y1] = vertices[(i + 1) % n];
        if on_segment(x0, y0, x1, y1, x, y) {
            return true;
        }
        if (y0 > y) != (y1 > y) {
            let x_cross = x0 + (y - y0) * (x1 - x0) / (y1 - y0);
            if x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

fn on_segment(x0: f64, y0: f64, x1: f64, y1: f64, x: f64, y: f64) -> bool {
    let cross = (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0);
    let scale = (x1 - x0).abs().max((y1 - y0).abs()).max(1.0);
    cross.abs() <= 1e-12 * scale * scale
        && x >= x0.min(x1)
        && x <= x0.max(x1)
        && y >= y0.min(y1)
        && y <= y0.max(y1)
}

/// The containing AOI with the lowest precedence rank.
pub fn hit_test<'a>(x: f64, y: f64, aois: &'a [Aoi]) -> Option<&'a Aoi> {
    aois.iter()
        .filter(|a| contains(&a.shape, x, y))
        .min_by_key(|a| a.precedence)
}

pub fn label_fixations(fixations: &[Fixation], aois: &[Aoi]) -> Vec<LabeledFixation> {
    fixations
        .iter()
        .map(|f| LabeledFixation {
            fixation: f.clone(),
            aoi_id: hit_test(f.cx, f.cy, aois).map(|a| a.id.clone()),
        })
        .collect()
}

/// Hit-any-AOI rate: fraction of fixations that landed in some AOI.
pub fn haar(labels: &[LabeledFixation]) -> Result<f64, AoiError> {
    if labels.is_empty() {
        return Err(AoiError::EmptyInput);
    }
    let hits = labels.iter().filter(|l| l.aoi_id.is_some()).count();
    Ok(hits as f64 / labels.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub aoi_id: String,
    /// Inclusive positions in the label list.
    pub first_fixation: usize,
    pub last_fixation: usize,
    pub duration: f64,
}

impl Visit {
    pub fn len(&self) -> usize {
        self.last_fixation - self.first_fixation + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Maximal runs of equal symbols in a symbol stream where `None` is "no AOI".
/// Yields `(symbol, first, last)` with inclusive positions.
fn runs<T: PartialEq + Clone>(symbols: &[Option<T>]) -> Vec<(Option<T>, usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < symbols.len() {
        let mut j = i;
        while j + 1 < symbols.len() && symbols[j + 1] == symbols[i] {
            j += 1;
        }
        out.push((symbols[i].clone(), i, j));
        i = j + 1;
    }
    out
}

/// One visit per maximal run of consecutive fixations in the same AOI.
pub fn visits(labels: &[LabeledFixation]) -> Vec<Visit> {
    let symbols: Vec<Option<&str>> = labels.iter().map(|l| l.aoi_id.as_deref()).collect();
    runs(&symbols)
        .into_iter()
        .filter_map(|(sym, first, last)| {
            sym.map(|id| Visit {
                aoi_id: id.to_string(),
                first_fixation: first,
                last_fixation: last,
                duration: labels[first..=last].iter().map(|l| l.fixation.duration).sum(),
            })
        })
        .collect()
}

/// Symbol set for sequences and transition matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alphabet {
    #[default]
    Aoi,
    /// Labels are replaced by their AOI's gid; AOIs in gid 0 count as unlabelled.
    AoiGroup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Collapse {
    PerFixation,
    #[default]
    PerVisit,
}

/// Maps each fixation label to a symbol of the alphabet.
pub fn symbolize(labels: &[LabeledFixation], alphabet: Alphabet, aois: &[Aoi]) -> Vec<Option<String>> {
    match alphabet {
        Alphabet::Aoi => labels.iter().map(|l| l.aoi_id.clone()).collect(),
        Alphabet::AoiGroup => {
            let gid: HashMap<&str, Gid> = aois.iter().map(|a| (a.id.as_str(), a.group_id)).collect();
            labels
                .iter()
                .map(|l| {
                    l.aoi_id
                        .as_deref()
                        .and_then(|id| gid.get(id).copied())
                        .filter(|&g| g != 0)
                        .map(|g| g.to_string())
                })
                .collect()
        }
    }
}

/// The ordered symbols an alphabet can produce for a set of AOIs.
pub fn alphabet_symbols(alphabet: Alphabet, aois: &[Aoi]) -> Vec<String> {
    match alphabet {
        Alphabet::Aoi => aois.iter().map(|a| a.id.clone()).collect(),
        Alphabet::AoiGroup => aois
            .iter()
            .map(|a| a.group_id)
            .filter(|&g| g != 0)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(|g| g.to_string())
            .collect(),
    }
}

pub fn aoi_sequence(
    labels: &[LabeledFixation],
    alphabet: Alphabet,
    collapse: Collapse,
    aois: &[Aoi],
) -> Vec<String> {
    let symbols = symbolize(labels, alphabet, aois);
    match collapse {
        Collapse::PerFixation => symbols.into_iter().flatten().collect(),
        Collapse::PerVisit => runs(&symbols).into_iter().filter_map(|(s, _, _)| s).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "focus")]
pub enum TransitionKind {
    /// Consecutive visits with no unlabelled fixation between them.
    Direct,
    /// Two visits separated only by unlabelled fixations.
    Indirect,
    /// Visit triples `(i, focus, j)`.
    Through(String),
    /// Visit triples `(i, j, i)`: out to another AOI and straight back.
    Glance,
}

impl TransitionKind {
    pub fn metric_id(&self) -> String {
        match self {
            TransitionKind::Direct => "direct".into(),
            TransitionKind::Indirect => "indirect".into(),
            TransitionKind::Through(f) => format!("through:{f}"),
            TransitionKind::Glance => "glance".into(),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "direct" => Some(TransitionKind::Direct),
            "indirect" => Some(TransitionKind::Indirect),
            "glance" => Some(TransitionKind::Glance),
            _ => s
                .strip_prefix("through:")
                .filter(|f| !f.is_empty())
                .map(|f| TransitionKind::Through(f.to_string())),
        }
    }
}

/// K×K transition counts indexed by `symbols`; `counts[i][j]` counts i → j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionCounts {
    pub kind: TransitionKind,
    pub symbols: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl TransitionCounts {
    pub fn zeros(kind: TransitionKind, symbols: Vec<String>) -> Self {
        let k = symbols.len();
        Self {
            kind,
            symbols,
            counts: vec![vec![0; k]; k],
        }
    }

    pub fn get(&self, from: &str, to: &str) -> u64 {
        let i = self.symbols.iter().position(|s| s == from);
        let j = self.symbols.iter().position(|s| s == to);
        match (i, j) {
            (Some(i), Some(j)) => self.counts[i][j],
            _ => 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Element-wise sum; both operands must share kind and symbols.
    pub fn add(&mut self, other: &TransitionCounts) {
        debug_assert_eq!(self.symbols, other.symbols);
        for (r, o) in self.counts.iter_mut().zip(&other.counts) {
            for (a, b) in r.iter_mut().zip(o) {
                *a += b;
            }
        }
    }
}

/// Counts transitions of `kind` over the visit-collapsed symbol stream.
///
/// Runs of unlabelled fixations stay in the stream as gaps: they break Direct
/// adjacency, mediate Indirect transitions, and interrupt Through/Glance
/// triples. For `Through`, the focus must name a symbol of the alphabet (an
/// AOI id, or a gid for the group alphabet).
pub fn transition_counts(
    labels: &[LabeledFixation],
    kind: &TransitionKind,
    alphabet: Alphabet,
    aois: &[Aoi],
) -> Result<TransitionCounts, AoiError> {
    let symbols = alphabet_symbols(alphabet, aois);
    if let TransitionKind::Through(focus) = kind {
        if !symbols.contains(focus) {
            return Err(AoiError::UnknownFocusAoi(focus.clone()));
        }
    }
    let index: HashMap<&str, usize> = symbols.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let stream: Vec<Option<usize>> = runs(&symbolize(labels, alphabet, aois))
        .into_iter()
        .map(|(s, _, _)| s.and_then(|s| index.get(s.as_str()).copied()))
        .collect();
    let mut out = TransitionCounts::zeros(kind.clone(), symbols.clone());
    count_into(&stream, kind, &index, &mut out.counts);
    Ok(out)
}

fn count_into(stream: &[Option<usize>], kind: &TransitionKind, index: &HashMap<&str, usize>, counts: &mut [Vec<u64>]) {
    match kind {
        TransitionKind::Direct => {
            for w in stream.windows(2) {
                if let [Some(a), Some(b)] = *w {
                    counts[a][b] += 1;
                }
            }
        }
        TransitionKind::Indirect => {
            for w in stream.windows(3) {
                if let [Some(a), None, Some(b)] = *w {
                    if a != b {
                        counts[a][b] += 1;
                    }
                }
            }
        }
        TransitionKind::Through(focus) => {
            let f = index[focus.as_str()];
            for w in stream.windows(3) {
                if let [Some(a), Some(m), Some(b)] = *w {
                    if m == f {
                        counts[a][b] += 1;
                    }
                }
            }
        }
        TransitionKind::Glance => {
            for w in stream.windows(3) {
                if let [Some(a), Some(b), Some(c)] = *w {
                    if a == c {
                        counts[a][b] += 1;
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextClass {
    Entering,
    Leaving,
    GlancingOut,
    Inside,
    Unrelated,
}

/// Classifies every fixation relative to a focus AOI.
///
/// Entering marks the first fixation of a focus visit that follows some other
/// fixation; Leaving marks the first fixation after a focus visit; a Leaving
/// fixation whose run is followed straight away by a return to the focus is
/// GlancingOut instead.
pub fn focus_context(
    labels: &[LabeledFixation],
    focus: &str,
    aois: &[Aoi],
) -> Result<Vec<ContextClass>, AoiError> {
    if !aois.iter().any(|a| a.id == focus) {
        return Err(AoiError::UnknownFocusAoi(focus.to_string()));
    }
    let is_focus: Vec<bool> = labels.iter().map(|l| l.aoi_id.as_deref() == Some(focus)).collect();
    let symbols: Vec<Option<&str>> = labels.iter().map(|l| l.aoi_id.as_deref()).collect();
    let mut out = vec![ContextClass::Unrelated; labels.len()];
    let run_list = runs(&symbols);
    for (r, &(_, first, last)) in run_list.iter().enumerate() {
        if is_focus[first] {
            out[first] = if first > 0 { ContextClass::Entering } else { ContextClass::Inside };
            for c in &mut out[first + 1..=last] {
                *c = ContextClass::Inside;
            }
        } else if first > 0 && is_focus[first - 1] {
            let returns = run_list.get(r + 1).is_some_and(|&(_, next, _)| is_focus[next]);
            out[first] = if returns { ContextClass::GlancingOut } else { ContextClass::Leaving };
        }
    }
    Ok(out)
}

/// Parses the AOI definitions JSON (a list of AOI objects).
pub fn parse_aois_json(bytes: &[u8]) -> Result<Vec<Aoi>, AoiError> {
    let mut aois: Vec<Aoi> = serde_json::from_slice(bytes).map_err(|e| AoiError::MalformedJson(e.to_string()))?;
    for a in &mut aois {
        if a.name.is_empty() {
            a.name = a.id.clone();
        }
    }
    Ok(aois)
}

pub fn write_aois_json(aois: &[Aoi]) -> String {
    serde_json::to_string_pretty(aois).expect("AOIs serialize")
}

//! Pairwise similarity measures: AOI-sequence alignment, transition cosine
//! and density overlap, plus symmetric matrix assembly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aoi::TransitionCounts;
use crate::model::{DensityGrid, EntityDim, MetricMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimilarityError {
    #[error("transition matrices differ in kind or alphabet")]
    AlphabetMismatch,
    #[error("density grids differ in geometry")]
    GeometryMismatch,
    #[error("similarity matrix needs at least one entity")]
    NoEntities,
    #[error("invalid alignment scoring: {0}")]
    InvalidScoring(String),
}

/// Global alignment scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NwScoring {
    #[serde(rename = "match")]
    pub match_score: f64,
    pub mismatch: f64,
    pub gap: f64,
}

impl Default for NwScoring {
    fn default() -> Self {
        Self {
            match_score: 1.0,
            mismatch: -1.0,
            gap: -1.0,
        }
    }
}

impl NwScoring {
    pub fn check(&self) -> Result<(), SimilarityError> {
        if ![self.match_score, self.mismatch, self.gap].iter().all(|v| v.is_finite()) {
            return Err(SimilarityError::InvalidScoring("non-finite score".into()));
        }
        if !(self.match_score > self.mismatch && self.gap < self.match_score && self.match_score > 0.0) {
            return Err(SimilarityError::InvalidScoring(
                "requires match > 0, match > mismatch and gap < match".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NwScore {
    pub raw: f64,
    /// `raw / (match * max(|a|, |b|))`; 1 when both sequences are empty.
    pub normalized: f64,
}

/// Needleman–Wunsch optimal global alignment score with linear gaps.
pub fn nw_score<T: PartialEq>(a: &[T], b: &[T], scoring: &NwScoring) -> NwScore {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return NwScore {
            raw: 0.0,
            normalized: 1.0,
        };
    }
    // Single rolling row over b.
    let mut prev: Vec<f64> = (0..=b.len()).map(|j| j as f64 * scoring.gap).collect();
    let mut cur = vec![0.0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = (i + 1) as f64 * scoring.gap;
        for (j, y) in b.iter().enumerate() {
            let sub = if x == y { scoring.match_score } else { scoring.mismatch };
            cur[j + 1] = (prev[j] + sub).max(prev[j + 1] + scoring.gap).max(cur[j] + scoring.gap);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let raw = prev[b.len()];
    NwScore {
        raw,
        normalized: raw / (scoring.match_score * longest as f64),
    }
}

/// Cosine similarity of two non-negative vectors. Two zero vectors are
/// maximally similar (1); a zero and a non-zero vector score 0.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    match (na == 0.0, nb == 0.0) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => (dot / (na * nb).sqrt()).clamp(0.0, 1.0),
    }
}

fn off_diagonal(t: &TransitionCounts) -> Vec<f64> {
    let mut v = Vec::with_capacity(t.symbols.len() * t.symbols.len());
    for (i, row) in t.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if i != j {
                v.push(c as f64);
            }
        }
    }
    v
}

/// Cosine of the flattened off-diagonal transition counts.
pub fn transition_cosine(a: &TransitionCounts, b: &TransitionCounts) -> Result<f64, SimilarityError> {
    if a.kind != b.kind || a.symbols != b.symbols {
        return Err(SimilarityError::AlphabetMismatch);
    }
    Ok(cosine(&off_diagonal(a), &off_diagonal(b)))
}

/// Histogram intersection `Σ min(a_i, b_i)` of two normalized grids.
pub fn density_overlap(a: &DensityGrid, b: &DensityGrid) -> Result<f64, SimilarityError> {
    if !a.same_geometry(b) {
        return Err(SimilarityError::GeometryMismatch);
    }
    Ok(a.mass.iter().zip(&b.mass).map(|(x, y)| x.min(*y)).sum::<f64>().min(1.0))
}

/// Fills a symmetric matrix by evaluating `pair` on the upper triangle,
/// diagonal included.
pub fn similarity_matrix<E>(
    dim: EntityDim,
    metric_id: &str,
    ids: &[String],
    mut pair: impl FnMut(usize, usize) -> Result<f64, E>,
) -> Result<MetricMatrix, E>
where
    E: From<SimilarityError>,
{
    if ids.is_empty() {
        return Err(SimilarityError::NoEntities.into());
    }
    let n = ids.len();
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = pair(i, j)?;
            values[i][j] = v;
            values[j][i] = v;
        }
    }
    Ok(MetricMatrix::new(dim, dim, metric_id, ids.to_vec(), ids.to_vec(), values, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aoi::TransitionKind;

    fn s(x: &str) -> Vec<char> {
        x.chars().collect()
    }

    #[test]
    fn nw_examples() {
        let d = NwScoring::default();
        assert_eq!(nw_score(&s("ABC"), &s("ABC"), &d), NwScore { raw: 3.0, normalized: 1.0 });
        let r = nw_score(&s("ABC"), &s("AXC"), &d);
        assert_eq!(r.raw, 1.0);
        assert_eq!(r.normalized, 1.0 / 3.0);
        assert_eq!(nw_score(&s("A"), &s(""), &d), NwScore { raw: -1.0, normalized: -1.0 });
        assert_eq!(nw_score(&s(""), &s(""), &d), NwScore { raw: 0.0, normalized: 1.0 });
    }

    #[test]
    fn nw_custom_scoring() {
        let sc = NwScoring {
            match_score: 2.0,
            mismatch: -3.0,
            gap: -1.0,
        };
        // Two gaps (-2) beat one mismatch (-3): A-C / AX- style.
        assert_eq!(nw_score(&s("AB"), &s("AC"), &sc).raw, 0.0);
        assert!(sc.check().is_ok());
        assert!(NwScoring { match_score: 0.0, mismatch: -1.0, gap: -1.0 }.check().is_err());
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine(&[1.0, 2.0, 0.0], &[2.0, 4.0, 0.0]), 1.0);
        assert!((cosine(&[1.0, 0.0], &[1.0, 1.0]) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert_eq!(cosine(&[0.0, 0.0], &[0.0, 0.0]), 1.0);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]), 0.0);
    }

    #[test]
    fn transition_cosine_checks_alphabet() {
        let mut a = TransitionCounts::zeros(TransitionKind::Direct, vec!["A".into(), "B".into()]);
        a.counts[0][1] = 3;
        a.counts[0][0] = 100; // ignored
        let mut b = a.clone();
        b.counts[0][0] = 0;
        assert_eq!(transition_cosine(&a, &b).unwrap(), 1.0);
        let c = TransitionCounts::zeros(TransitionKind::Direct, vec!["A".into(), "C".into()]);
        assert_eq!(transition_cosine(&a, &c), Err(SimilarityError::AlphabetMismatch));
        let d = TransitionCounts::zeros(TransitionKind::Glance, a.symbols.clone());
        assert_eq!(transition_cosine(&a, &d), Err(SimilarityError::AlphabetMismatch));
    }

    fn grid(mass: Vec<f64>) -> DensityGrid {
        DensityGrid {
            origin: (0.0, 0.0),
            cell_size: 1.0,
            width: mass.len(),
            height: 1,
            total_mass: mass.iter().sum(),
            mass,
        }
    }

    #[test]
    fn overlap_examples() {
        let a = grid(vec![0.5, 0.5, 0.0, 0.0]);
        let b = grid(vec![0.0, 0.5, 0.5, 0.0]);
        assert_eq!(density_overlap(&a, &a).unwrap(), 1.0);
        assert_eq!(density_overlap(&a, &b).unwrap(), 0.5);
        assert_eq!(density_overlap(&a, &grid(vec![0.0, 0.0, 0.5, 0.5])).unwrap(), 0.0);
        let mut shifted = b.clone();
        shifted.origin = (1.0, 0.0);
        assert_eq!(density_overlap(&a, &shifted), Err(SimilarityError::GeometryMismatch));
    }

    #[test]
    fn matrix_assembly() {
        let seqs = [s("ABC"), s("ABD"), s("CBA")];
        let ids: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        let d = NwScoring::default();
        let m = similarity_matrix::<SimilarityError>(EntityDim::Sample, "nw", &ids, |i, j| {
            Ok(nw_score(&seqs[i], &seqs[j], &d).normalized)
        })
        .unwrap();
        for i in 0..3 {
            assert_eq!(m.values[i][i], 1.0);
            for j in 0..3 {
                assert_eq!(m.values[i][j], nw_score(&seqs[i], &seqs[j], &d).normalized);
            }
        }
        let one = similarity_matrix::<SimilarityError>(EntityDim::Sample, "nw", &ids[..1], |_, _| Ok(1.0)).unwrap();
        assert_eq!(one.values, vec![vec![1.0]]);
        assert!(similarity_matrix::<SimilarityError>(EntityDim::Sample, "nw", &[], |_, _| Ok(1.0)).is_err());
    }
}

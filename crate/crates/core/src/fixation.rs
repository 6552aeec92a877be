//! Dispersion-threshold (I-DT) fixation identification and saccade derivation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Fixation, GazePoint, Saccade};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DetectionError {
    #[error("dispersion of an empty window is undefined")]
    EmptyWindow,
    #[error("invalid detection parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionParams {
    /// Maximum `(max x - min x) + (max y - min y)` of a fixation's points.
    pub dispersion_threshold: f64,
    /// Minimum `t_last - t_first` of a fixation, milliseconds.
    pub min_duration: f64,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            dispersion_threshold: 25.0,
            min_duration: 100.0,
        }
    }
}

impl DetectionParams {
    pub fn new(dispersion_threshold: f64, min_duration: f64) -> Result<Self, DetectionError> {
        let p = Self {
            dispersion_threshold,
            min_duration,
        };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<(), DetectionError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.dispersion_threshold) {
            return Err(DetectionError::InvalidParams(format!(
                "dispersion_threshold must be positive and finite, got {}",
                self.dispersion_threshold
            )));
        }
        if !ok(self.min_duration) {
            return Err(DetectionError::InvalidParams(format!(
                "min_duration must be positive and finite, got {}",
                self.min_duration
            )));
        }
        Ok(())
    }
}

pub fn dispersion(points: &[GazePoint]) -> Result<f64, DetectionError> {
    let first = points.first().ok_or(DetectionError::EmptyWindow)?;
    let mut b = Bounds::new(first);
    for p in &points[1..] {
        b.extend(p);
    }
    Ok(b.dispersion())
}

#[derive(Clone, Copy)]
struct Bounds {
    min_x: f64,
    max_x: f64,
    min_y: f64,
    max_y: f64,
}

impl Bounds {
    fn new(p: &GazePoint) -> Self {
        Self {
            min_x: p.x,
            max_x: p.x,
            min_y: p.y,
            max_y: p.y,
        }
    }

    fn extend(&mut self, p: &GazePoint) {
        self.min_x = self.min_x.min(p.x);
        self.max_x = self.max_x.max(p.x);
        self.min_y = self.min_y.min(p.y);
        self.max_y = self.max_y.max(p.y);
    }

    fn dispersion(&self) -> f64 {
        (self.max_x - self.min_x) + (self.max_y - self.min_y)
    }
}

/// Sweeps the points left to right, growing each window for as long as its
/// dispersion stays within the threshold.
///
/// A finished window becomes a fixation when it spans at least `min_duration`;
/// otherwise its points are dropped. The next window starts right after the
/// previous one, so windows never overlap.
pub fn detect_fixations(points: &[GazePoint], params: &DetectionParams) -> Vec<Fixation> {
    let mut out = Vec::new();
    let n = points.len();
    let mut start = 0;
    while start < n {
        let mut bounds = Bounds::new(&points[start]);
        let mut end = start + 1;
        while end < n {
            let mut grown = bounds;
            grown.extend(&points[end]);
            if grown.dispersion() > params.dispersion_threshold {
                break;
            }
            bounds = grown;
            end += 1;
        }

        let t_start = points[start].t;
        let t_end = points[end - 1].t;
        if t_end - t_start >= params.min_duration {
            let members = &points[start..end];
            let k = members.len() as f64;
            let cx = members.iter().map(|p| p.x).sum::<f64>() / k;
            let cy = members.iter().map(|p| p.y).sum::<f64>() / k;
            out.push(Fixation {
                index: out.len(),
                cx,
                cy,
                t_start,
                t_end,
                duration: t_end - t_start,
                point_span: start..end,
            });
        }
        start = end;
    }
    out
}

pub fn derive_saccades(fixations: &[Fixation]) -> Vec<Saccade> {
    fixations
        .windows(2)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let (dx, dy) = (b.cx - a.cx, b.cy - a.cy);
            Saccade {
                from_fixation: a.index,
                to_fixation: b.index,
                length: dx.hypot(dy),
                duration: (b.t_start - a.t_end).max(0.0),
                angle: dy.atan2(dx),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(f64, f64, f64)]) -> Vec<GazePoint> {
        v.iter().map(|&(t, x, y)| GazePoint::new(t, x, y)).collect()
    }

    #[test]
    fn dispersion_examples() {
        assert_eq!(dispersion(&pts(&[(0.0, 0.0, 0.0)])).unwrap(), 0.0);
        assert_eq!(
            dispersion(&pts(&[(0.0, 0.0, 0.0), (1.0, 1.0, 1.0), (2.0, 2.0, 0.0)])).unwrap(),
            3.0
        );
        assert_eq!(dispersion(&pts(&[(0.0, 5.0, 5.0), (1.0, 5.0, 5.0)])).unwrap(), 0.0);
        assert_eq!(dispersion(&[]), Err(DetectionError::EmptyWindow));
    }

    #[test]
    fn worked_four_point_example() {
        let p = pts(&[(0.0, 0.0, 0.0), (50.0, 1.0, 1.0), (100.0, 2.0, 0.0), (150.0, 200.0, 200.0)]);
        let f = detect_fixations(&p, &DetectionParams::new(5.0, 100.0).unwrap());
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].cx, 1.0);
        assert_eq!(f[0].cy, 1.0 / 3.0);
        assert_eq!((f[0].t_start, f[0].t_end, f[0].duration), (0.0, 100.0, 100.0));
        assert_eq!(f[0].point_span, 0..3);
    }

    #[test]
    fn coincident_points_form_one_fixation() {
        let p: Vec<GazePoint> = (0..=50).map(|i| GazePoint::new(i as f64 * 10.0, 7.0, 7.0)).collect();
        let f = detect_fixations(&p, &DetectionParams::new(5.0, 100.0).unwrap());
        assert_eq!(f.len(), 1);
        assert_eq!((f[0].t_start, f[0].t_end), (0.0, 500.0));
        assert_eq!(f[0].point_span, 0..51);
    }

    #[test]
    fn alternating_points_yield_nothing() {
        let p: Vec<GazePoint> = (0..100)
            .map(|i| {
                let v = if i % 2 == 0 { 0.0 } else { 1000.0 };
                GazePoint::new(i as f64 * 10.0, v, v)
            })
            .collect();
        assert!(detect_fixations(&p, &DetectionParams::new(5.0, 100.0).unwrap()).is_empty());
    }

    #[test]
    fn empty_input() {
        assert!(detect_fixations(&[], &DetectionParams::default()).is_empty());
    }

    #[test]
    fn params_must_be_positive() {
        assert!(DetectionParams::new(0.0, 100.0).is_err());
        assert!(DetectionParams::new(5.0, -1.0).is_err());
        assert!(DetectionParams::new(f64::NAN, 1.0).is_err());
    }

    fn fix(index: usize, cx: f64, cy: f64, t0: f64, t1: f64) -> Fixation {
        Fixation {
            index,
            cx,
            cy,
            t_start: t0,
            t_end: t1,
            duration: t1 - t0,
            point_span: 0..0,
        }
    }

    #[test]
    fn saccade_examples() {
        assert!(derive_saccades(&[fix(0, 0.0, 0.0, 0.0, 100.0)]).is_empty());
        let s = derive_saccades(&[fix(0, 0.0, 0.0, 0.0, 100.0), fix(1, 3.0, 4.0, 150.0, 300.0)]);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].length, 5.0);
        assert_eq!(s[0].duration, 50.0);
        assert_eq!((s[0].from_fixation, s[0].to_fixation), (0, 1));
        assert!((s[0].angle - 4f64.atan2(3.0)).abs() < 1e-15);
        let three = [
            fix(0, 0.0, 0.0, 0.0, 100.0),
            fix(1, 1.0, 0.0, 200.0, 300.0),
            fix(2, 1.0, 1.0, 400.0, 500.0),
        ];
        assert_eq!(derive_saccades(&three).len(), 2);
    }
}

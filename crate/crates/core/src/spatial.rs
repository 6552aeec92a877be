//! Attention-density grids and direction-aware saccade bundling.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DensityGrid, Fixation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpatialError {
    #[error("no fixations to estimate density from")]
    EmptySelection,
    #[error("density bounds are degenerate")]
    DegenerateBounds,
    #[error("no kernel mass falls inside the bounds")]
    ZeroMass,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    #[default]
    Gaussian,
    Epanechnikov,
}

impl Kernel {
    /// Unnormalized kernel profile at squared distance `d2` for bandwidth `h`.
    fn eval(self, d2: f64, h: f64) -> f64 {
        let u2 = d2 / (h * h);
        match self {
            Kernel::Gaussian => (-0.5 * u2).exp(),
            Kernel::Epanechnikov => (1.0 - u2).max(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Uniform,
    #[default]
    ByDuration,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KdeParams {
    pub kernel: Kernel,
    pub bandwidth: f64,
    /// Cells across the bounds; the height follows the aspect ratio.
    pub grid_width: usize,
    pub weighting: Weighting,
}

impl Default for KdeParams {
    fn default() -> Self {
        Self {
            kernel: Kernel::Gaussian,
            bandwidth: 30.0,
            grid_width: 256,
            weighting: Weighting::ByDuration,
        }
    }
}

impl KdeParams {
    pub fn check(&self) -> Result<(), SpatialError> {
        if !(self.bandwidth.is_finite() && self.bandwidth > 0.0) {
            return Err(SpatialError::InvalidParams(format!("bandwidth must be positive, got {}", self.bandwidth)));
        }
        if self.grid_width < 8 {
            return Err(SpatialError::InvalidParams(format!("grid_width must be at least 8, got {}", self.grid_width)));
        }
        Ok(())
    }
}

/// Axis-aligned region of the stimulus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Bounds {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    /// Bounding box of the fixation centroids padded by `pad` on every side.
    pub fn around(fixations: &[Fixation], pad: f64) -> Option<Self> {
        let first = fixations.first()?;
        let (mut x0, mut y0, mut x1, mut y1) = (first.cx, first.cy, first.cx, first.cy);
        for f in fixations {
            x0 = x0.min(f.cx);
            y0 = y0.min(f.cy);
            x1 = x1.max(f.cx);
            y1 = y1.max(f.cy);
        }
        Some(Self::new(x0 - pad, y0 - pad, x1 - x0 + 2.0 * pad, y1 - y0 + 2.0 * pad))
    }
}

/// Kernel density of fixation centroids sampled at cell centres and
/// normalized to unit total mass. Mass outside the bounds is dropped before
/// normalizing.
pub fn density_grid(fixations: &[Fixation], bounds: Bounds, params: &KdeParams) -> Result<DensityGrid, SpatialError> {
    params.check()?;
    if fixations.is_empty() {
        return Err(SpatialError::EmptySelection);
    }
    if !(bounds.w.is_finite() && bounds.h.is_finite() && bounds.w > 0.0 && bounds.h > 0.0) {
        return Err(SpatialError::DegenerateBounds);
    }
    let width = params.grid_width;
    let cell_size = bounds.w / width as f64;
    let height = ((bounds.h / cell_size).round() as usize).max(1);
    let h = params.bandwidth;
    let reach = match params.kernel {
        Kernel::Gaussian => 8.0 * h,
        Kernel::Epanechnikov => h,
    };

    let mut mass = vec![0.0; width * height];
    for f in fixations {
        let w = match params.weighting {
            Weighting::Uniform => 1.0,
            Weighting::ByDuration => f.duration,
        };
        if w <= 0.0 {
            continue;
        }
        let col_lo = (((f.cx - reach - bounds.x) / cell_size).floor().max(0.0)) as usize;
        let col_hi = (((f.cx + reach - bounds.x) / cell_size).ceil().max(0.0) as usize).min(width);
        let row_lo = (((f.cy - reach - bounds.y) / cell_size).floor().max(0.0)) as usize;
        let row_hi = (((f.cy + reach - bounds.y) / cell_size).ceil().max(0.0) as usize).min(height);
        for row in row_lo..row_hi {
            let dy = bounds.y + (row as f64 + 0.5) * cell_size - f.cy;
            for col in col_lo..col_hi {
                let dx = bounds.x + (col as f64 + 0.5) * cell_size - f.cx;
                mass[row * width + col] += w * params.kernel.eval(dx * dx + dy * dy, h);
            }
        }
    }

    let total: f64 = mass.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(SpatialError::ZeroMass);
    }
    for m in &mut mass {
        *m /= total;
    }
    let total_mass = mass.iter().sum();
    Ok(DensityGrid {
        origin: (bounds.x, bounds.y),
        cell_size,
        width,
        height,
        mass,
        total_mass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BundleParams {
    pub iterations: usize,
    pub kernel_bandwidth: f64,
    /// Laplacian smoothing weight in `[0, 1]`.
    pub smoothing: f64,
    /// Saccades bundle together only when their directions differ by less than this.
    pub direction_split_deg: f64,
    /// Control points per polyline, endpoints included.
    pub control_points: usize,
    /// Fraction of the mean-shift displacement applied per iteration, `(0, 1]`.
    pub step: f64,
}

impl Default for BundleParams {
    fn default() -> Self {
        Self {
            iterations: 10,
            kernel_bandwidth: 40.0,
            smoothing: 0.5,
            direction_split_deg: 45.0,
            control_points: 17,
            step: 0.5,
        }
    }
}

impl BundleParams {
    pub fn check(&self) -> Result<(), SpatialError> {
        if !(self.kernel_bandwidth.is_finite() && self.kernel_bandwidth > 0.0) {
            return Err(SpatialError::InvalidParams("kernel_bandwidth must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.smoothing) {
            return Err(SpatialError::InvalidParams("smoothing must lie in [0, 1]".into()));
        }
        if !(self.step > 0.0 && self.step <= 1.0) {
            return Err(SpatialError::InvalidParams("step must lie in (0, 1]".into()));
        }
        if self.control_points < 2 {
            return Err(SpatialError::InvalidParams("control_points must be at least 2".into()));
        }
        if !self.direction_split_deg.is_finite() {
            return Err(SpatialError::InvalidParams("direction_split_deg must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub from: (f64, f64),
    pub to: (f64, f64),
}

impl Segment {
    pub fn new(from: (f64, f64), to: (f64, f64)) -> Self {
        Self { from, to }
    }

    pub fn between(a: &Fixation, b: &Fixation) -> Self {
        Self::new((a.cx, a.cy), (b.cx, b.cy))
    }

    fn angle(&self) -> f64 {
        (self.to.1 - self.from.1).atan2(self.to.0 - self.from.0)
    }
}

pub type Polyline = Vec<(f64, f64)>;

fn angle_between(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

/// Kernel-density edge bundling.
///
/// Each segment is subdivided into control points. Every iteration moves each
/// interior point a `step` fraction of the way to the kernel-weighted mean of
/// the control points of the *other* direction-compatible segments (a
/// mean-shift step up their density), then applies Laplacian smoothing.
/// Endpoints never move; with zero iterations the segments are returned as
/// two-point polylines.
pub fn bundle_saccades(segments: &[Segment], params: &BundleParams) -> Result<Vec<Polyline>, SpatialError> {
    params.check()?;
    if params.iterations == 0 {
        return Ok(segments.iter().map(|s| vec![s.from, s.to]).collect());
    }
    let k = params.control_points;
    let mut lines: Vec<Polyline> = segments
        .iter()
        .map(|s| {
            (0..k)
                .map(|i| {
                    if i == 0 {
                        s.from
                    } else if i == k - 1 {
                        s.to
                    } else {
                        let t = i as f64 / (k - 1) as f64;
                        (s.from.0 + t * (s.to.0 - s.from.0), s.from.1 + t * (s.to.1 - s.from.1))
                    }
                })
                .collect()
        })
        .collect();

    let angles: Vec<f64> = segments.iter().map(Segment::angle).collect();
    let split = params.direction_split_deg.to_radians();
    let compatible: Vec<Vec<usize>> = (0..segments.len())
        .map(|i| {
            (0..segments.len())
                .filter(|&j| j != i && angle_between(angles[i], angles[j]) < split)
                .collect()
        })
        .collect();

    let h2 = params.kernel_bandwidth * params.kernel_bandwidth;
    for _ in 0..params.iterations {
        let snapshot = lines.clone();
        for (i, line) in lines.iter_mut().enumerate() {
            if compatible[i].is_empty() {
                continue;
            }
            for p in line.iter_mut().take(k - 1).skip(1) {
                let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
                for &j in &compatible[i] {
                    for q in &snapshot[j] {
                        let (dx, dy) = (q.0 - p.0, q.1 - p.1);
                        let w = (-0.5 * (dx * dx + dy * dy) / h2).exp();
                        sx += w * q.0;
                        sy += w * q.1;
                        sw += w;
                    }
                }
                if sw > 0.0 {
                    p.0 += params.step * (sx / sw - p.0);
                    p.1 += params.step * (sy / sw - p.1);
                }
            }
        }
        if params.smoothing > 0.0 {
            for line in &mut lines {
                let prev = line.clone();
                for i in 1..k - 1 {
                    let mx = (prev[i - 1].0 + prev[i + 1].0) / 2.0;
                    let my = (prev[i - 1].1 + prev[i + 1].1) / 2.0;
                    line[i].0 = (1.0 - params.smoothing) * prev[i].0 + params.smoothing * mx;
                    line[i].1 = (1.0 - params.smoothing) * prev[i].1 + params.smoothing * my;
                }
            }
        }
    }
    Ok(lines)
}

//! Generators and brute-force reference implementations shared by the
//! integration suites.

#![allow(dead_code)]

pub mod http;

use std::path::PathBuf;

use gazescope::aoi::LabeledFixation;
use gazescope::fixation::{self, DetectionParams};
use gazescope::model::{Aoi, Dataset, Fixation, GazePoint, GazeSample, Shape, Twi};
use gazescope::Session;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// Dwell clusters with jitter, separated by jumps and the odd noise point.
pub fn random_stream(rng: &mut ChaCha8Rng, max_points: usize) -> Vec<GazePoint> {
    let n = rng.gen_range(0..=max_points);
    let mut pts = Vec::with_capacity(n);
    let mut t = rng.gen_range(0.0..50.0);
    while pts.len() < n {
        let (cx, cy) = (rng.gen_range(0.0..1920.0), rng.gen_range(0.0..1080.0));
        let jitter = rng.gen_range(0.0..20.0);
        let dwell = rng.gen_range(1..40).min(n - pts.len());
        for _ in 0..dwell {
            let x = cx + rng.gen_range(-jitter..=jitter);
            let y = cy + rng.gen_range(-jitter..=jitter);
            pts.push(GazePoint::new(t, x, y));
            t += rng.gen_range(1.0..40.0);
        }
    }
    pts
}

/// Points covered by fixations.
pub fn covered(fs: &[Fixation]) -> usize {
    fs.iter().map(|f| f.point_span.len()).sum()
}

/// Straightforward I-DT: recompute the window dispersion from scratch at
/// every extension.
pub fn idt_reference(points: &[GazePoint], threshold: f64, min_duration: f64) -> Vec<(usize, usize)> {
    let disp = |w: &[GazePoint]| {
        let xs = w.iter().map(|p| p.x);
        let ys = w.iter().map(|p| p.y);
        let (x0, x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        let (y0, y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        (x1 - x0) + (y1 - y0)
    };
    let mut out = Vec::new();
    let mut i = 0;
    while i < points.len() {
        let mut j = i + 1;
        while j < points.len() && disp(&points[i..=j]) <= threshold {
            j += 1;
        }
        if points[j - 1].t - points[i].t >= min_duration {
            out.push((i, j));
        }
        i = j;
    }
    out
}

/// Best global alignment score by enumerating every monotone set of aligned
/// pairs. Unpaired positions are gaps.
pub fn nw_exhaustive(a: &[u8], b: &[u8], m: i64, mm: i64, gap: i64) -> i64 {
    let mut best = i64::MIN;
    for sa in 0u32..(1 << a.len()) {
        let ia: Vec<usize> = (0..a.len()).filter(|i| sa >> i & 1 == 1).collect();
        for sb in 0u32..(1 << b.len()) {
            if sb.count_ones() as usize != ia.len() {
                continue;
            }
            let ib = (0..b.len()).filter(|j| sb >> j & 1 == 1);
            let pairs: i64 = ia.iter().zip(ib).map(|(&i, j)| if a[i] == b[j] { m } else { mm }).sum();
            let gaps = (a.len() + b.len() - 2 * ia.len()) as i64;
            best = best.max(pairs + gaps * gap);
        }
    }
    best
}

/// All sequences over `0..k` of length at most `max_len`, shortest first.
pub fn all_sequences(k: u8, max_len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![vec![]];
    let mut layer = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &layer {
            for c in 0..k {
                let mut t: Vec<u8> = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

pub const SYMBOLS: [&str; 3] = ["A", "B", "C"];

pub fn abc_aois() -> Vec<Aoi> {
    SYMBOLS
        .iter()
        .enumerate()
        .map(|(i, id)| Aoi::new(*id, Shape::rect(i as f64 * 100.0, 0.0, 50.0, 50.0), i as i64))
        .collect()
}

/// Labelled fixations for a symbol stream; `None` is "no AOI".
pub fn labels_from(seq: &[Option<usize>]) -> Vec<LabeledFixation> {
    seq.iter()
        .enumerate()
        .map(|(i, s)| LabeledFixation {
            fixation: Fixation {
                index: i,
                cx: 0.0,
                cy: 0.0,
                t_start: i as f64 * 300.0,
                t_end: i as f64 * 300.0 + 100.0 + i as f64,
                duration: 100.0 + i as f64,
                point_span: i..i + 1,
            },
            aoi_id: s.map(|k| SYMBOLS[k].to_string()),
        })
        .collect()
}

pub type Counts = [[u64; 3]; 3];

/// Transition counts from fixation-level definitions, pair by pair.
pub struct TransitionOracle {
    pub direct: Counts,
    pub indirect: Counts,
    pub through: [Counts; 3],
    pub glance: Counts,
}

pub fn transition_oracle(l: &[Option<usize>]) -> TransitionOracle {
    let mut o = TransitionOracle {
        direct: [[0; 3]; 3],
        indirect: [[0; 3]; 3],
        through: [[[0; 3]; 3]; 3],
        glance: [[0; 3]; 3],
    };
    let n = l.len();
    for p in 0..n {
        for q in p + 1..n {
            let (Some(i), Some(j)) = (l[p], l[q]) else { continue };
            let between = &l[p + 1..q];
            if between.is_empty() {
                if i != j {
                    o.direct[i][j] += 1;
                }
                continue;
            }
            if i != j && between.iter().all(Option::is_none) {
                o.indirect[i][j] += 1;
            }
            if let Some(f) = between[0] {
                if f != i && f != j && between.iter().all(|b| *b == Some(f)) {
                    o.through[f][i][j] += 1;
                }
                if i == j && f != i && between.iter().all(|b| *b == Some(f)) {
                    o.glance[i][f] += 1;
                }
            }
        }
    }
    o
}

/// `(aoi, first, last)` for every range that is a maximal single-AOI run.
pub fn visits_oracle(l: &[Option<usize>]) -> Vec<(usize, usize, usize)> {
    let n = l.len();
    let mut out = Vec::new();
    for s in 0..n {
        for e in s..n {
            let Some(a) = l[s] else { continue };
            let uniform = l[s..=e].iter().all(|x| *x == Some(a));
            let left = s == 0 || l[s - 1] != Some(a);
            let right = e + 1 == n || l[e + 1] != Some(a);
            if uniform && left && right {
                out.push((a, s, e));
            }
        }
    }
    out
}

/// A dataset with 1 to 4 samples and a few AOIs. TWIs, shared or owned by one
/// sample, tile part of the timeline without overlapping. Gids are random.
pub fn random_dataset(rng: &mut ChaCha8Rng) -> Dataset {
    let n_samples = rng.gen_range(1..=4);
    let mut samples = Vec::new();
    let mut twis = Vec::new();
    for s in 0..n_samples {
        let id = format!("P{s}");
        let points = loop {
            let p = random_stream(rng, 600);
            if p.len() >= 20 {
                break p;
            }
        };
        let mut sample = GazeSample::new(id.clone(), points);
        sample.group_id = rng.gen_range(0..3);
        samples.push(sample);
    }
    let mut t = rng.gen_range(0.0..500.0);
    for k in 0..rng.gen_range(0..7) {
        let len = rng.gen_range(200.0..3000.0);
        let mut w = Twi::shared(format!("w{k}"), t, t + len).with_group(rng.gen_range(0..4));
        if rng.gen_bool(0.3) {
            w.sample_id = format!("P{}", rng.gen_range(0..n_samples));
        }
        twis.push(w);
        t += len + rng.gen_range(0.0..800.0);
    }
    let mut aois = Vec::new();
    let mut ranks: Vec<i64> = (0..6).collect();
    for k in 0..rng.gen_range(0..5) {
        let r = ranks.swap_remove(rng.gen_range(0..ranks.len()));
        let shape = if rng.gen_bool(0.7) {
            Shape::rect(
                rng.gen_range(0.0..1500.0),
                rng.gen_range(0.0..800.0),
                rng.gen_range(50.0..700.0),
                rng.gen_range(50.0..500.0),
            )
        } else {
            let (x, y) = (rng.gen_range(100.0..1700.0), rng.gen_range(100.0..900.0));
            Shape::polygon([(x - 150.0, y), (x, y - 200.0), (x + 180.0, y + 20.0), (x, y + 160.0)])
        };
        aois.push(Aoi::new(format!("aoi{k}"), shape, r).with_group(rng.gen_range(0..3)));
    }
    Dataset { samples, aois, twis }
}

pub fn random_session(rng: &mut ChaCha8Rng) -> Session {
    let s = Session::new(random_dataset(rng)).expect("generated dataset is valid");
    let det = DetectionParams::new(rng.gen_range(10.0..60.0), rng.gen_range(50.0..200.0)).unwrap();
    s.set_detection(det).unwrap()
}

/// Gaze TSV rows for a sample whose fixations have the given centroids and durations.
pub fn gaze_tsv(fixations: &[((f64, f64), f64)]) -> String {
    let mut out = String::new();
    let mut t = 0.0;
    for &((x, y), dur) in fixations {
        let steps = 4;
        for k in 0..=steps {
            out.push_str(&format!("{}\t{x}\t{y}\n", t + dur * k as f64 / steps as f64));
        }
        t += dur + 100.0;
    }
    out
}

pub fn detect(points: &[GazePoint], thr: f64, min: f64) -> Vec<Fixation> {
    fixation::detect_fixations(points, &DetectionParams::new(thr, min).unwrap())
}

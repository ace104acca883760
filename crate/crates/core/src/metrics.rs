//! Reconstruction score, dataset coverage and motion completeness.
//!
//! Frames are compared with two Gaussian kernels: one on the summed squared
//! joint-position error, one on the squared root-velocity error. A frame's
//! similarity is the equal-weight sum of both.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::{Frame, MotionClip, MotionDataset};

pub const DEFAULT_ALPHA_JP: f64 = 2.0;
pub const DEFAULT_ALPHA_V: f64 = 0.1;
pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityConfig {
    pub alpha_jp: f64,
    pub alpha_v: f64,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig {
            alpha_jp: DEFAULT_ALPHA_JP,
            alpha_v: DEFAULT_ALPHA_V,
        }
    }
}

impl SimilarityConfig {
    pub fn new(alpha_jp: f64, alpha_v: f64) -> Result<Self> {
        if !(alpha_jp > 0.0) || !(alpha_v > 0.0) || !alpha_jp.is_finite() || !alpha_v.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "kernel sharpness must be positive, got alpha_jp={alpha_jp}, alpha_v={alpha_v}"
            )));
        }
        Ok(SimilarityConfig { alpha_jp, alpha_v })
    }
}

fn sq_dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

/// `(r_jp, r_v)`.
pub fn frame_similarity(f_ref: &Frame, f_gen: &Frame, cfg: &SimilarityConfig) -> Result<(f64, f64)> {
    if f_ref.joint_count() != f_gen.joint_count() {
        return Err(Error::JointCountMismatch {
            expected: f_ref.joint_count(),
            actual: f_gen.joint_count(),
        });
    }
    let jp: f64 = f_ref
        .joint_positions
        .iter()
        .zip(&f_gen.joint_positions)
        .map(|(a, b)| sq_dist(a, b))
        .sum();
    let v = sq_dist(&f_ref.root_velocity, &f_gen.root_velocity);
    Ok(((-cfg.alpha_jp * jp).exp(), (-cfg.alpha_v * v).exp()))
}

/// `0.5 · r_jp + 0.5 · r_v`.
pub fn frame_score(f_ref: &Frame, f_gen: &Frame, cfg: &SimilarityConfig) -> Result<f64> {
    let (jp, v) = frame_similarity(f_ref, f_gen, cfg)?;
    Ok(0.5 * jp + 0.5 * v)
}

/// Best [`frame_score`] of `f_ref` over the generated frames.
pub fn reconstruction_score(f_ref: &Frame, generated: &[Frame], cfg: &SimilarityConfig) -> Result<f64> {
    if generated.is_empty() {
        return Err(Error::EmptyGeneratedSet);
    }
    let mut best = f64::NEG_INFINITY;
    for g in generated {
        best = best.max(frame_score(f_ref, g, cfg)?);
    }
    Ok(best)
}

/// Frame counts over uniform bins of `[0, 1]`; the last bin includes 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreHistogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl ScoreHistogram {
    pub fn new(scores: impl IntoIterator<Item = f64>, bins: usize) -> Self {
        let mut counts = vec![0usize; bins];
        for s in scores {
            let i = ((s * bins as f64).floor().max(0.0) as usize).min(bins - 1);
            counts[i] += 1;
        }
        ScoreHistogram {
            bin_edges: (0..=bins).map(|i| i as f64 / bins as f64).collect(),
            counts,
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            writeln!(out, "{},{},{}", self.bin_edges[i], self.bin_edges[i + 1], c).unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coverage {
    /// Per clip, per reference frame.
    pub scores: Vec<Vec<f64>>,
    pub covered_fraction: f64,
    pub per_clip: Vec<f64>,
    pub threshold: f64,
    pub histogram: ScoreHistogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub covered_fraction: f64,
    pub threshold: f64,
    pub per_clip: BTreeMap<String, f64>,
}

impl Coverage {
    pub fn report(&self, dataset: &MotionDataset) -> CoverageReport {
        CoverageReport {
            covered_fraction: self.covered_fraction,
            threshold: self.threshold,
            per_clip: dataset.class_names().into_iter().zip(self.per_clip.iter().copied()).collect(),
        }
    }

    /// Fraction of frames scoring above `threshold`, reusing the stored scores.
    pub fn fraction_above(&self, threshold: f64) -> f64 {
        let all: Vec<f64> = self.scores.iter().flatten().copied().collect();
        all.iter().filter(|&&s| s > threshold).count() as f64 / all.len() as f64
    }
}

/// Scores every reference frame against the generated set. A frame counts as
/// covered when its score is strictly above `threshold`.
pub fn dataset_coverage(dataset: &MotionDataset, generated: &[Frame], cfg: &SimilarityConfig, threshold: f64) -> Result<Coverage> {
    if generated.is_empty() {
        return Err(Error::EmptyGeneratedSet);
    }
    let scores = dataset
        .clips()
        .iter()
        .map(|c| c.frames.iter().map(|f| reconstruction_score(f, generated, cfg)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let above = |v: &[f64]| v.iter().filter(|&&s| s > threshold).count();
    let per_clip = scores.iter().map(|s| above(s) as f64 / s.len() as f64).collect();
    let total: usize = scores.iter().map(Vec::len).sum();
    let covered: usize = scores.iter().map(|s| above(s)).sum();
    let histogram = ScoreHistogram::new(scores.iter().flatten().copied(), HISTOGRAM_BINS);
    Ok(Coverage {
        scores,
        covered_fraction: covered as f64 / total as f64,
        per_clip,
        threshold,
        histogram,
    })
}

/// Marks, for every generated frame, the best-matching reference frame
/// (lowest index on ties) and returns the covered share of the reference.
pub fn motion_completeness(reference: &MotionClip, generated: &[Frame], cfg: &SimilarityConfig) -> Result<f64> {
    if generated.is_empty() {
        return Err(Error::EmptyGeneratedSet);
    }
    let mut covered = vec![false; reference.frame_count()];
    for g in generated {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, r) in reference.frames.iter().enumerate() {
            let s = frame_score(r, g, cfg)?;
            if s > best_score {
                best = i;
                best_score = s;
            }
        }
        covered[best] = true;
    }
    Ok(covered.iter().filter(|&&c| c).count() as f64 / covered.len() as f64)
}

/// Every frame of every clip, in dataset order.
pub fn all_frames(dataset: &MotionDataset) -> Vec<Frame> {
    dataset.clips().iter().flat_map(|c| c.frames.iter().cloned()).collect()
}

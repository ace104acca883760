//! Procedural gait clips for desk-scale experiments.
//!
//! Each clip is a parameterized periodic gait: the root travels forward at a
//! fixed speed while its heading drifts, and every joint oscillates along its
//! own axis around its own rest offset with a per-joint phase.

use std::f64::consts::{PI, TAU};

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{streams, RngSeed};

use super::clip::{Frame, MotionClip, MotionDataset, Vec3};

/// Clips closer than this (mean per-frame joint distance, meters) are
/// regenerated.
pub const MIN_CLIP_SEPARATION: f64 = 0.05;

const MAX_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone)]
struct GaitParams {
    frequency_hz: f64,
    amplitude: f64,
    speed: f64,
    heading_drift: f64,
    initial_yaw: f64,
    rest: Vec<Vec3>,
    phases: Vec<f64>,
    axes: Vec<Vec3>,
}

impl GaitParams {
    fn draw<R: Rng>(rng: &mut R, joints: usize) -> Self {
        let mut axis = || {
            let v: Vec3 = [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ];
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt().max(1e-6);
            [v[0] / n, v[1] / n, v[2] / n]
        };
        let axes = (0..joints).map(|_| axis()).collect();
        GaitParams {
            frequency_hz: rng.random_range(0.8..2.5),
            amplitude: rng.random_range(0.05..0.3),
            speed: rng.random_range(0.5..3.0),
            heading_drift: rng.random_range(-0.5..0.5),
            initial_yaw: rng.random_range(-PI..PI),
            rest: (0..joints)
                .map(|_| {
                    [
                        rng.random_range(-0.5..0.5),
                        rng.random_range(-0.5..0.5),
                        rng.random_range(-0.5..0.5),
                    ]
                })
                .collect(),
            phases: (0..joints).map(|_| rng.random_range(0.0..TAU)).collect(),
            axes,
        }
    }

    fn frames(&self, count: usize, fps: f64) -> Vec<Frame> {
        let mut position = [0.0, 0.0, 1.0];
        (0..count)
            .map(|i| {
                let t = i as f64 / fps;
                let yaw = self.initial_yaw + self.heading_drift * t;
                let omega = TAU * self.frequency_hz * t;
                let joints = self
                    .rest
                    .iter()
                    .zip(&self.axes)
                    .zip(&self.phases)
                    .map(|((r, a), ph)| {
                        let s = self.amplitude * (omega + ph).sin();
                        [r[0] + s * a[0], r[1] + s * a[1], r[2] + s * a[2]]
                    })
                    .collect();
                position[2] = 1.0 + 0.2 * self.amplitude * (2.0 * omega).sin();
                let frame = Frame::new(position, yaw, joints);
                position[0] += self.speed * yaw.cos() / fps;
                position[1] += self.speed * yaw.sin() / fps;
                frame
            })
            .collect()
    }
}

/// Mean over shared frame indices of the per-joint Euclidean distance.
pub fn mean_joint_distance(a: &MotionClip, b: &MotionClip) -> f64 {
    let n = a.frame_count().min(b.frame_count());
    let mut total = 0.0;
    for (fa, fb) in a.frames.iter().zip(&b.frames).take(n) {
        let per: f64 = fa
            .joint_positions
            .iter()
            .zip(&fb.joint_positions)
            .map(|(p, q)| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt())
            .sum();
        total += per / fa.joint_count() as f64;
    }
    total / n as f64
}

/// Generates `n_clips` distinct gaits with `joints` joints. Durations are
/// drawn uniformly from `duration_range` seconds; frame counts are
/// `round(duration · fps)`, at least 1.
pub fn synth_dataset(
    n_clips: usize,
    joints: usize,
    fps: f64,
    duration_range: (f64, f64),
    seed: RngSeed,
) -> Result<MotionDataset> {
    if n_clips == 0 {
        return Err(Error::InvalidArgument("n_clips must be at least 1".into()));
    }
    if joints == 0 {
        return Err(Error::InvalidArgument("joints must be at least 1".into()));
    }
    if !(fps > 0.0) || !fps.is_finite() {
        return Err(Error::InvalidArgument(format!("fps must be positive, got {fps}")));
    }
    let (lo, hi) = duration_range;
    if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "duration range must satisfy 0 < lo <= hi, got ({lo}, {hi})"
        )));
    }
    let mut rng = seed.stream(streams::SYNTH).rng();
    let joint_names: Vec<String> = (0..joints).map(|j| format!("joint{j}")).collect();
    let mut clips: Vec<MotionClip> = Vec::with_capacity(n_clips);
    for c in 0..n_clips {
        let duration = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        let count = ((duration * fps).round() as usize).max(1);
        let mut attempt = 0;
        let clip = loop {
            let params = GaitParams::draw(&mut rng, joints);
            let clip = MotionClip::new(format!("skill{c:02}"), fps, joint_names.clone(), params.frames(count, fps))?;
            if clips.iter().all(|o| mean_joint_distance(o, &clip) > MIN_CLIP_SEPARATION) {
                break clip;
            }
            attempt += 1;
            if attempt >= MAX_ATTEMPTS {
                return Err(Error::InvalidArgument(format!(
                    "could not generate {n_clips} separated clips"
                )));
            }
        };
        clips.push(clip);
    }
    MotionDataset::new(clips)
}

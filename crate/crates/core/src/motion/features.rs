//! Heading-canonical feature vectors for windows and frame transitions.
//!
//! Every frame is expressed against a reference frame: root position relative
//! to the reference root, rotated by the reference's negative yaw about `z`;
//! yaw as `(sin, cos)` of its offset from the reference yaw; joints as stored;
//! root velocity rotated into the reference heading. That is `8 + 3J` values
//! per frame.

use super::clip::{Frame, MotionClip, MotionDataset, Vec3};
use super::window::Window;

pub fn frame_feature_dim(joints: usize) -> usize {
    8 + 3 * joints
}

pub fn window_feature_dim(span_frames: usize, joints: usize) -> usize {
    span_frames * frame_feature_dim(joints)
}

/// Transition state length: the per-frame features, zero-padded to even.
pub fn state_dim(joints: usize) -> usize {
    let d = frame_feature_dim(joints);
    d + d % 2
}

fn rotate_z(v: Vec3, cos: f64, sin: f64) -> Vec3 {
    [cos * v[0] - sin * v[1], sin * v[0] + cos * v[1], v[2]]
}

/// Appends the canonical features of `frame` relative to `reference`.
pub fn push_canonical_frame(out: &mut Vec<f64>, frame: &Frame, reference: &Frame) {
    let (s, c) = (-reference.root_yaw).sin_cos();
    let p0 = reference.root_position;
    let rel = [
        frame.root_position[0] - p0[0],
        frame.root_position[1] - p0[1],
        frame.root_position[2] - p0[2],
    ];
    out.extend_from_slice(&rotate_z(rel, c, s));
    let dyaw = frame.root_yaw - reference.root_yaw;
    out.push(dyaw.sin());
    out.push(dyaw.cos());
    for j in &frame.joint_positions {
        out.extend_from_slice(j);
    }
    out.extend_from_slice(&rotate_z(frame.root_velocity, c, s));
}

/// Flat window features, canonicalized against the window's first frame.
pub fn featurize_window(dataset: &MotionDataset, window: &Window) -> Vec<f64> {
    featurize_clip_window(dataset.clip(window.clip_index), window)
}

pub fn featurize_clip_window(clip: &MotionClip, window: &Window) -> Vec<f64> {
    let n = clip.frame_count();
    let reference = &clip.frames[window.frame_index(0, n)];
    let mut out = Vec::with_capacity(window_feature_dim(window.span_frames, clip.joint_count()));
    for i in window.frame_indices(n) {
        push_canonical_frame(&mut out, &clip.frames[i], reference);
    }
    out
}

/// Index of the frame following `t` in a transition; a single-frame clip
/// transitions to itself.
pub fn next_frame(clip: &MotionClip, t: usize) -> usize {
    (t + 1).min(clip.frame_count() - 1)
}

/// Number of valid transition start frames.
pub fn transition_count(clip: &MotionClip) -> usize {
    clip.frame_count().saturating_sub(1).max(1)
}

/// `(s_t, s_{t+1})`, both canonicalized against frame `t`.
pub fn featurize_transition(clip: &MotionClip, t: usize) -> (Vec<f64>, Vec<f64>) {
    let d = state_dim(clip.joint_count());
    let reference = &clip.frames[t];
    let state = |f: &Frame| {
        let mut v = Vec::with_capacity(d);
        push_canonical_frame(&mut v, f, reference);
        v.resize(d, 0.0);
        v
    };
    let s_t = state(reference);
    let s_next = state(&clip.frames[next_frame(clip, t)]);
    (s_t, s_next)
}

//! Fixed-length windows over clips, with looping padding for short clips.

use crate::error::{Error, Result};

use super::clip::MotionClip;

/// A run of `span_frames` frame slots starting at `start_frame`. Slot `k`
/// refers to frame `(start_frame + k) % frame_count`, so windows over clips
/// shorter than the span wrap around.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Window {
    pub clip_index: usize,
    pub start_frame: usize,
    pub span_frames: usize,
}

impl Window {
    pub fn frame_index(&self, slot: usize, frame_count: usize) -> usize {
        (self.start_frame + slot) % frame_count
    }

    pub fn frame_indices(&self, frame_count: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.span_frames).map(move |k| self.frame_index(k, frame_count))
    }
}

/// Number of frame slots in a window of `window_s` seconds.
pub fn span_frames(window_s: f64, fps: f64) -> usize {
    ((window_s * fps).round() as usize).max(1)
}

/// Splits a clip into windows of `window_s` seconds every `stride_s` seconds.
///
/// Clips at least one window long get `floor((frames - span) / stride) + 1`
/// windows starting at multiples of the stride; if that grid leaves trailing
/// frames uncovered, the last window is moved to end on the final frame (or,
/// if moving it would open a gap, an end-aligned window is added).
/// Shorter clips get a single wrapping window.
pub fn window_clip(clip_index: usize, clip: &MotionClip, window_s: f64, stride_s: f64) -> Result<Vec<Window>> {
    if !(window_s > 0.0) || !window_s.is_finite() {
        return Err(Error::InvalidArgument(format!("window_s must be positive, got {window_s}")));
    }
    if !(stride_s > 0.0) || !stride_s.is_finite() {
        return Err(Error::InvalidArgument(format!("stride_s must be positive, got {stride_s}")));
    }
    let span = span_frames(window_s, clip.fps);
    let frames = clip.frame_count();
    let window = |start_frame| Window {
        clip_index,
        start_frame,
        span_frames: span,
    };
    if frames < span {
        return Ok(vec![window(0)]);
    }
    let stride = ((stride_s * clip.fps).round() as usize).max(1);
    let count = (frames - span) / stride + 1;
    let mut windows: Vec<Window> = (0..count).map(|k| window(k * stride)).collect();
    let last_start = windows[count - 1].start_frame;
    if last_start + span < frames {
        // Shift the final window to the end when the previous one still
        // reaches its new start; otherwise add an end-aligned window.
        let previous_end = if count >= 2 { windows[count - 2].start_frame + span } else { 0 };
        if previous_end >= frames - span {
            windows[count - 1].start_frame = frames - span;
        } else {
            windows.push(window(frames - span));
        }
    }
    Ok(windows)
}

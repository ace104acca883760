//! Motion clips, windowing, canonical features and synthetic data.

mod clip;
mod features;
mod synth;
mod window;

pub use clip::{
    compute_root_velocity, load_clip, load_dataset, write_clip, write_dataset, ClipFile, Frame, FrameRecord,
    Manifest, ManifestEntry, MotionClip, MotionDataset, Vec3,
};
pub use features::{
    featurize_clip_window, featurize_transition, featurize_window, frame_feature_dim, next_frame,
    push_canonical_frame, state_dim, transition_count, window_feature_dim,
};
pub use synth::{mean_joint_distance, synth_dataset, MIN_CLIP_SEPARATION};
pub use window::{span_frames, window_clip, Window};

/// Default window length, seconds.
pub const DEFAULT_WINDOW_S: f64 = 2.0;
/// Default window stride, seconds.
pub const DEFAULT_STRIDE_S: f64 = 0.5;

/// All windows of every clip, in clip order.
pub fn dataset_windows(dataset: &MotionDataset, window_s: f64, stride_s: f64) -> crate::Result<Vec<Window>> {
    let mut out = Vec::new();
    for (i, c) in dataset.clips().iter().enumerate() {
        out.extend(window_clip(i, c, window_s, stride_s)?);
    }
    Ok(out)
}

//! Frames, clips, datasets and their JSON files.
//!
//! Coordinates are meters with `+z` up; `root_yaw` is the heading about `z`
//! in radians. Joint positions are relative to the root, expressed in the
//! root's heading frame.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsio;

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub root_position: Vec3,
    pub root_yaw: f64,
    pub joint_positions: Vec<Vec3>,
    /// Derived by [`compute_root_velocity`]; never read from files.
    pub root_velocity: Vec3,
}

impl Frame {
    pub fn new(root_position: Vec3, root_yaw: f64, joint_positions: Vec<Vec3>) -> Self {
        Frame {
            root_position,
            root_yaw,
            joint_positions,
            root_velocity: [0.0; 3],
        }
    }

    pub fn joint_count(&self) -> usize {
        self.joint_positions.len()
    }

    fn is_finite(&self) -> bool {
        self.root_position.iter().all(|v| v.is_finite())
            && self.root_yaw.is_finite()
            && self
                .joint_positions
                .iter()
                .all(|j| j.iter().all(|v| v.is_finite()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionClip {
    pub name: String,
    pub fps: f64,
    pub joint_names: Vec<String>,
    pub frames: Vec<Frame>,
}

impl MotionClip {
    /// Validates the clip and derives root velocities.
    pub fn new(name: impl Into<String>, fps: f64, joint_names: Vec<String>, frames: Vec<Frame>) -> Result<Self> {
        let name = name.into();
        let bad = |reason: String| Error::MalformedClip {
            path: PathBuf::from(&name),
            reason,
        };
        if !(fps > 0.0) || !fps.is_finite() {
            return Err(bad(format!("fps must be positive, got {fps}")));
        }
        if frames.is_empty() {
            return Err(bad("clip has no frames".into()));
        }
        let joints = frames[0].joint_count();
        if !joint_names.is_empty() && joint_names.len() != joints {
            return Err(bad(format!(
                "{} joint names but {joints} joints per frame",
                joint_names.len()
            )));
        }
        for (i, f) in frames.iter().enumerate() {
            if f.joint_count() != joints {
                return Err(bad(format!(
                    "frame {i} has {} joints, frame 0 has {joints}",
                    f.joint_count()
                )));
            }
            if !f.is_finite() {
                return Err(bad(format!("frame {i} has non-finite values")));
            }
        }
        let clip = MotionClip {
            name,
            fps,
            joint_names,
            frames,
        };
        Ok(compute_root_velocity(clip))
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn joint_count(&self) -> usize {
        self.frames[0].joint_count()
    }

    /// `frame_count / fps`, in seconds.
    pub fn duration_s(&self) -> f64 {
        self.frames.len() as f64 / self.fps
    }

    /// Time of frame `index`, in seconds from the clip start.
    pub fn frame_time(&self, index: usize) -> f64 {
        index as f64 / self.fps
    }
}

/// Forward differences `(pos_{t+1} - pos_t) · fps`; the last frame copies the
/// previous velocity, and a single-frame clip gets zero velocity.
pub fn compute_root_velocity(mut clip: MotionClip) -> MotionClip {
    let n = clip.frames.len();
    if n <= 1 {
        if let Some(f) = clip.frames.first_mut() {
            f.root_velocity = [0.0; 3];
        }
        return clip;
    }
    for t in 0..n - 1 {
        let a = clip.frames[t].root_position;
        let b = clip.frames[t + 1].root_position;
        clip.frames[t].root_velocity = [
            (b[0] - a[0]) * clip.fps,
            (b[1] - a[1]) * clip.fps,
            (b[2] - a[2]) * clip.fps,
        ];
    }
    clip.frames[n - 1].root_velocity = clip.frames[n - 2].root_velocity;
    clip
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionDataset {
    clips: Vec<MotionClip>,
    index: HashMap<String, usize>,
}

impl MotionDataset {
    pub fn new(clips: Vec<MotionClip>) -> Result<Self> {
        if clips.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut index = HashMap::with_capacity(clips.len());
        for (i, c) in clips.iter().enumerate() {
            if index.insert(c.name.clone(), i).is_some() {
                return Err(Error::DuplicateName(c.name.clone()));
            }
        }
        let joints = clips[0].joint_count();
        if let Some(c) = clips.iter().find(|c| c.joint_count() != joints) {
            return Err(Error::MalformedClip {
                path: PathBuf::from(&c.name),
                reason: format!(
                    "{} joints, dataset clips have {joints}",
                    c.joint_count()
                ),
            });
        }
        Ok(MotionDataset { clips, index })
    }

    pub fn clips(&self) -> &[MotionClip] {
        &self.clips
    }

    pub fn clip(&self, class: usize) -> &MotionClip {
        &self.clips[class]
    }

    /// Number of clips (classes).
    pub fn len(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }

    pub fn class_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn class_names(&self) -> Vec<String> {
        self.clips.iter().map(|c| c.name.clone()).collect()
    }

    pub fn joint_count(&self) -> usize {
        self.clips[0].joint_count()
    }

    pub fn total_frames(&self) -> usize {
        self.clips.iter().map(|c| c.frame_count()).sum()
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub name: String,
    pub path: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub clips: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FrameRecord {
    pub root_pos: Vec3,
    pub root_yaw: f64,
    pub joints: Vec<Vec3>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ClipFile {
    pub fps: f64,
    #[serde(default)]
    pub joint_names: Vec<String>,
    pub frames: Vec<FrameRecord>,
}

impl ClipFile {
    pub fn from_clip(clip: &MotionClip) -> Self {
        ClipFile {
            fps: clip.fps,
            joint_names: clip.joint_names.clone(),
            frames: clip
                .frames
                .iter()
                .map(|f| FrameRecord {
                    root_pos: f.root_position,
                    root_yaw: f.root_yaw,
                    joints: f.joint_positions.clone(),
                })
                .collect(),
        }
    }

    pub fn into_clip(self, name: &str, path: &Path) -> Result<MotionClip> {
        let frames = self
            .frames
            .into_iter()
            .map(|r| Frame::new(r.root_pos, r.root_yaw, r.joints))
            .collect();
        MotionClip::new(name, self.fps, self.joint_names, frames).map_err(|e| match e {
            Error::MalformedClip { reason, .. } => Error::MalformedClip {
                path: path.to_path_buf(),
                reason,
            },
            other => other,
        })
    }
}

/// Reads one clip file; `name` becomes the clip's name.
pub fn load_clip(path: &Path, name: &str) -> Result<MotionClip> {
    let bytes = fsio::read(path)?;
    let file: ClipFile = serde_json::from_slice(&bytes).map_err(|e| Error::MalformedClip {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    file.into_clip(name, path)
}

/// Loads every clip listed in a manifest. Clip paths are resolved relative to
/// the manifest's directory; clip order (and therefore class index) follows
/// the manifest.
pub fn load_dataset(manifest_path: &Path) -> Result<MotionDataset> {
    let malformed = |reason: String| Error::MalformedManifest {
        path: manifest_path.to_path_buf(),
        reason,
    };
    let bytes = std::fs::read(manifest_path).map_err(|e| malformed(e.to_string()))?;
    let manifest: Manifest = serde_json::from_slice(&bytes).map_err(|e| malformed(e.to_string()))?;
    if manifest.clips.is_empty() {
        return Err(malformed("manifest lists no clips".into()));
    }
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let mut seen = HashMap::new();
    let mut clips = Vec::with_capacity(manifest.clips.len());
    for entry in &manifest.clips {
        if seen.insert(entry.name.clone(), ()).is_some() {
            return Err(Error::DuplicateName(entry.name.clone()));
        }
        let path = base.join(&entry.path);
        clips.push(load_clip(&path, &entry.name)?);
    }
    MotionDataset::new(clips)
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
    bytes.push(b'\n');
    bytes
}

/// Writes `dir/manifest.json` and `dir/clips/<name>.json`. Returns the manifest path.
pub fn write_dataset(dataset: &MotionDataset, dir: &Path) -> Result<PathBuf> {
    let mut entries = Vec::with_capacity(dataset.len());
    for clip in dataset.clips() {
        let rel = format!("clips/{}.json", clip.name);
        fsio::write_atomic(&dir.join(&rel), &to_json(&ClipFile::from_clip(clip)))?;
        entries.push(ManifestEntry {
            name: clip.name.clone(),
            path: rel,
        });
    }
    let manifest_path = dir.join("manifest.json");
    fsio::write_atomic(&manifest_path, &to_json(&Manifest { clips: entries }))?;
    Ok(manifest_path)
}

pub fn write_clip(clip: &MotionClip, path: &Path) -> Result<()> {
    fsio::write_atomic(path, &to_json(&ClipFile::from_clip(clip)))
}

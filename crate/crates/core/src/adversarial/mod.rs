//! Conditional adversarial objective on skill embeddings.
//!
//! Training samples pair a state transition `(s_t, s_{t+1})` with an
//! embedding `z`. Matched samples take `z` near the source clip's center,
//! mismatched samples near a different clip's center, and policy stand-in
//! samples are matched samples with perturbed states. Embeddings come from
//! Embedding Expansion: the exact center with probability `p_center`,
//! otherwise a vMF draw around it. Transitions conditioned on an exact center
//! carry the interval progress encoding.

mod disc;

pub use disc::{
    combined_reward, disc_loss, disc_loss_terms, imitation_reward, style_reward, train_discriminator,
    DiscConfig, DiscSidecar, DiscTrace, DiscTracePoint, DiscriminatorModel, LossTerms, DEFAULT_EPSILON,
    DEFAULT_W_GP,
};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::motion::{featurize_transition, next_frame, transition_count, MotionDataset};
use crate::progress::{progress_embed, DEFAULT_BASE, DEFAULT_INTERVAL_S};
use crate::rng::RngSeed;
use crate::sphere::{UnitVector, VonMisesFisher};

pub const DEFAULT_KAPPA: f64 = 50.0;
pub const DEFAULT_P_CENTER: f64 = 0.5;
pub const DEFAULT_NOISE_SIGMA: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub s_t: Vec<f64>,
    pub s_next: Vec<f64>,
    pub source_clip: usize,
    pub frame: usize,
    pub time_t: f64,
    pub time_next: f64,
    pub clip_duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SampleKind {
    Matched,
    Mismatched,
    PolicyStandIn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedSample {
    pub transition: Transition,
    pub embedding: UnitVector,
    /// Class whose center the embedding was drawn around.
    pub center_class: usize,
    /// True when the embedding is the exact center (and progress encoding applies).
    pub at_center: bool,
    pub kind: SampleKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionConfig {
    pub kappa: f64,
    pub p_center: f64,
    pub interval_s: f64,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        ExpansionConfig {
            kappa: DEFAULT_KAPPA,
            p_center: DEFAULT_P_CENTER,
            interval_s: DEFAULT_INTERVAL_S,
        }
    }
}

impl ExpansionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return Err(Error::InvalidArgument(format!("kappa must be ≥ 0, got {}", self.kappa)));
        }
        if !(0.0..=1.0).contains(&self.p_center) {
            return Err(Error::InvalidArgument(format!("p_center must be in [0, 1], got {}", self.p_center)));
        }
        if !(self.interval_s > 0.0) {
            return Err(Error::InvalidArgument(format!("interval_s must be positive, got {}", self.interval_s)));
        }
        Ok(())
    }
}

/// Per-center vMF distributions, built once per batch.
pub struct Expander {
    cfg: ExpansionConfig,
    dists: Vec<VonMisesFisher>,
}

impl Expander {
    pub fn new(means: &[UnitVector], cfg: ExpansionConfig) -> Result<Self> {
        cfg.validate()?;
        let dists = means
            .iter()
            .map(|m| VonMisesFisher::new(m.clone(), cfg.kappa))
            .collect::<Result<Vec<_>>>()?;
        Ok(Expander { cfg, dists })
    }

    /// `(z, z is the exact center)`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, class: usize) -> (UnitVector, bool) {
        let d = &self.dists[class];
        if rng.random::<f64>() < self.cfg.p_center {
            (d.mean_direction().clone(), true)
        } else {
            (d.sampler().draw(rng), false)
        }
    }
}

/// One Embedding Expansion draw around `u`.
pub fn expansion_sample(u: &UnitVector, cfg: ExpansionConfig, seed: RngSeed) -> Result<UnitVector> {
    Ok(expansion_samples(u, cfg, 1, seed)?.remove(0))
}

pub fn expansion_samples(u: &UnitVector, cfg: ExpansionConfig, count: usize, seed: RngSeed) -> Result<Vec<UnitVector>> {
    let e = Expander::new(std::slice::from_ref(u), cfg)?;
    let mut rng = seed.rng();
    Ok((0..count).map(|_| e.draw(&mut rng, 0).0).collect())
}

fn check_congruent(dataset: &MotionDataset, means: &[UnitVector]) -> Result<()> {
    if means.len() != dataset.len() {
        return Err(Error::DimensionMismatch {
            expected: dataset.len(),
            actual: means.len(),
        });
    }
    Ok(())
}

/// A uniformly chosen clip and transition start frame.
pub fn draw_transition<R: Rng + ?Sized>(rng: &mut R, dataset: &MotionDataset) -> Transition {
    let clip_index = rng.random_range(0..dataset.len());
    let clip = dataset.clip(clip_index);
    let t = rng.random_range(0..transition_count(clip));
    let (s_t, s_next) = featurize_transition(clip, t);
    Transition {
        s_t,
        s_next,
        source_clip: clip_index,
        frame: t,
        time_t: clip.frame_time(t),
        time_next: clip.frame_time(next_frame(clip, t)),
        clip_duration: clip.duration_s(),
    }
}

fn condition(mut transition: Transition, z: UnitVector, center_class: usize, at_center: bool, kind: SampleKind, interval_s: f64) -> Result<ConditionedSample> {
    if at_center {
        transition.s_t = progress_embed(&transition.s_t, transition.time_t, interval_s, transition.clip_duration, DEFAULT_BASE)?;
        transition.s_next = progress_embed(&transition.s_next, transition.time_next, interval_s, transition.clip_duration, DEFAULT_BASE)?;
    }
    Ok(ConditionedSample {
        transition,
        embedding: z,
        center_class,
        at_center,
        kind,
    })
}

pub fn make_matched_batch<R: Rng + ?Sized>(
    rng: &mut R,
    dataset: &MotionDataset,
    expander: &Expander,
    count: usize,
) -> Result<Vec<ConditionedSample>> {
    (0..count)
        .map(|_| {
            let tr = draw_transition(rng, dataset);
            let class = tr.source_clip;
            let (z, exact) = expander.draw(rng, class);
            condition(tr, z, class, exact, SampleKind::Matched, expander.cfg.interval_s)
        })
        .collect()
}

pub fn make_mismatched_batch<R: Rng + ?Sized>(
    rng: &mut R,
    dataset: &MotionDataset,
    expander: &Expander,
    count: usize,
) -> Result<Vec<ConditionedSample>> {
    let n = dataset.len();
    if n < 2 {
        return Err(Error::SingleClassDataset(n));
    }
    (0..count)
        .map(|_| {
            let tr = draw_transition(rng, dataset);
            // Uniform over the other n - 1 classes.
            let mut class = rng.random_range(0..n - 1);
            if class >= tr.source_clip {
                class += 1;
            }
            let (z, exact) = expander.draw(rng, class);
            condition(tr, z, class, exact, SampleKind::Mismatched, expander.cfg.interval_s)
        })
        .collect()
}

/// Components of the per-frame layout that carry meters or m/s: root offset,
/// joints and root velocity (not the yaw sin/cos pair or padding).
pub fn physical_components(state_dim: usize, joints: usize) -> Vec<bool> {
    let per = crate::motion::frame_feature_dim(joints);
    (0..state_dim).map(|i| i < per && !(3..5).contains(&i)).collect()
}

pub fn make_policy_stand_in_batch<R: Rng + ?Sized>(
    rng: &mut R,
    dataset: &MotionDataset,
    expander: &Expander,
    count: usize,
    noise_sigma: f64,
) -> Result<Vec<ConditionedSample>> {
    if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
        return Err(Error::InvalidArgument(format!("noise_sigma must be ≥ 0, got {noise_sigma}")));
    }
    let normal = Normal::new(0.0, noise_sigma).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let joints = dataset.joint_count();
    (0..count)
        .map(|_| {
            let mut tr = draw_transition(rng, dataset);
            let mask = physical_components(tr.s_t.len(), joints);
            for s in [&mut tr.s_t, &mut tr.s_next] {
                for (x, &m) in s.iter_mut().zip(&mask) {
                    if m {
                        *x += normal.sample(rng);
                    }
                }
            }
            let class = tr.source_clip;
            let (z, exact) = expander.draw(rng, class);
            condition(tr, z, class, exact, SampleKind::PolicyStandIn, expander.cfg.interval_s)
        })
        .collect()
}

/// Seeded batch constructors.
pub fn matched_batch(dataset: &MotionDataset, means: &[UnitVector], cfg: ExpansionConfig, count: usize, seed: RngSeed) -> Result<Vec<ConditionedSample>> {
    check_congruent(dataset, means)?;
    make_matched_batch(&mut seed.rng(), dataset, &Expander::new(means, cfg)?, count)
}

pub fn mismatched_batch(dataset: &MotionDataset, means: &[UnitVector], cfg: ExpansionConfig, count: usize, seed: RngSeed) -> Result<Vec<ConditionedSample>> {
    check_congruent(dataset, means)?;
    make_mismatched_batch(&mut seed.rng(), dataset, &Expander::new(means, cfg)?, count)
}

pub fn policy_stand_in_batch(
    dataset: &MotionDataset,
    means: &[UnitVector],
    cfg: ExpansionConfig,
    count: usize,
    noise_sigma: f64,
    seed: RngSeed,
) -> Result<Vec<ConditionedSample>> {
    check_congruent(dataset, means)?;
    make_policy_stand_in_batch(&mut seed.rng(), dataset, &Expander::new(means, cfg)?, count, noise_sigma)
}

//! Skill-embedding mathematics on the unit hypersphere.
//!
//! The crate covers the pieces needed to build and evaluate a
//! skill-conditioned latent space without a physics simulator:
//!
//! - [`sphere`]: unit vectors, uniform and von Mises-Fisher sampling, simplex
//!   equiangular tight frames, PCA projection.
//! - [`nn`]: a small dense network with manual backpropagation (including the
//!   input-gradient path used by gradient penalties) and Adam.
//! - [`motion`]: motion clips, windowing, canonical features and a synthetic
//!   gait generator.
//! - [`encoder`]: the classification encoder whose normalized features
//!   collapse onto class means, plus collapse and uniformity diagnostics.
//! - [`progress`]: interval motion-progress encoding.
//! - [`adversarial`]: conditional discriminator loss, embedding expansion,
//!   rewards and a data-only discriminator training loop.
//! - [`metrics`]: reconstruction score, dataset coverage and motion
//!   completeness.
//! - [`cli`]: the `skillsphere` command-line front end.

pub mod adversarial;
pub mod cli;
pub mod encoder;
pub mod error;
pub mod fsio;
pub mod metrics;
pub mod motion;
pub mod nn;
pub mod progress;
pub mod rng;
pub mod sphere;

pub use error::{Error, Result};
pub use rng::RngSeed;

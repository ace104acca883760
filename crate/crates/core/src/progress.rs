//! Interval motion-progress encoding.
//!
//! A clip of length `L` is divided into stages of `interval_s` seconds. The
//! stage index `floor(t / interval_s)` is mapped to a sinusoidal positional
//! encoding and added to the state; for `t >= L` nothing is added.

use crate::error::{Error, Result};

pub const DEFAULT_INTERVAL_S: f64 = 0.5;
pub const DEFAULT_BASE: f64 = 10_000.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProgressConfig {
    pub interval_s: f64,
    pub state_dim: usize,
    pub base: f64,
}

impl ProgressConfig {
    pub fn new(interval_s: f64, state_dim: usize) -> Result<Self> {
        if !(interval_s > 0.0) || !interval_s.is_finite() {
            return Err(Error::InvalidArgument(format!("interval_s must be positive, got {interval_s}")));
        }
        if state_dim % 2 != 0 {
            return Err(Error::OddDimension(state_dim));
        }
        Ok(ProgressConfig {
            interval_s,
            state_dim,
            base: DEFAULT_BASE,
        })
    }

    pub fn embed(&self, state: &[f64], t: f64, clip_duration: f64) -> Result<Vec<f64>> {
        if state.len() != self.state_dim {
            return Err(Error::DimensionMismatch {
                expected: self.state_dim,
                actual: state.len(),
            });
        }
        progress_embed(state, t, self.interval_s, clip_duration, self.base)
    }
}

pub fn stage_index(t: f64, interval_s: f64) -> Result<u64> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    if !(interval_s > 0.0) {
        return Err(Error::InvalidArgument(format!("interval_s must be positive, got {interval_s}")));
    }
    Ok((t / interval_s).floor() as u64)
}

/// Components `2i` and `2i+1` are `sin` and `cos` of `k / base^(2i/d)`.
pub fn positional_encoding(k: u64, d: usize, base: f64) -> Result<Vec<f64>> {
    if d % 2 != 0 {
        return Err(Error::OddDimension(d));
    }
    let mut out = Vec::with_capacity(d);
    for i in 0..d / 2 {
        let angle = k as f64 / base.powf(2.0 * i as f64 / d as f64);
        let (s, c) = angle.sin_cos();
        out.push(s);
        out.push(c);
    }
    Ok(out)
}

pub fn progress_embed(state: &[f64], t: f64, interval_s: f64, clip_duration: f64, base: f64) -> Result<Vec<f64>> {
    let k = stage_index(t, interval_s)?;
    if t >= clip_duration {
        return Ok(state.to_vec());
    }
    let pe = positional_encoding(k, state.len(), base)?;
    Ok(state.iter().zip(&pe).map(|(s, e)| s + e).collect())
}

//! The von Mises-Fisher distribution on `S^{p-1}`.
//!
//! Density `f(z; u, κ) = C_p(κ) exp(κ uᵀz)` with
//! `log C_p(κ) = (p/2-1) log κ - (p/2) log 2π - log I_{p/2-1}(κ)`.
//!
//! Sampling follows Wood (1994): the axial coordinate `w = uᵀz` is drawn by
//! rejection from a Beta-based envelope, a uniform direction is drawn in the
//! tangent space at `u`, and the two are recombined. The envelope accepts
//! with probability above one half across the tested range
//! (`p <= 4096`, `κ <= 1e4`), so the expected number of proposals per draw is
//! below two.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use statrs::function::gamma::ln_gamma;

use super::bessel::{bessel_ratio, log_bessel_i};
use super::{orthogonal_direction, uniform_point, UnitVector};
use crate::error::{Error, Result};
use crate::rng::RngSeed;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, PartialEq)]
pub struct VonMisesFisher {
    mean_direction: UnitVector,
    concentration: f64,
}

/// `log` of the surface area of `S^{p-1}`, `2 π^{p/2} / Γ(p/2)`.
pub fn log_sphere_area(p: usize) -> f64 {
    let half = p as f64 / 2.0;
    std::f64::consts::LN_2 + half * std::f64::consts::PI.ln() - ln_gamma(half)
}

/// `log C_p(κ)`. At `κ = 0` this is minus the log surface area.
pub fn log_normalizer(p: usize, kappa: f64) -> Result<f64> {
    if p < 2 {
        return Err(Error::InvalidArgument(format!("sphere dimension {p} < 2")));
    }
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "concentration must be finite and non-negative, got {kappa}"
        )));
    }
    if kappa == 0.0 {
        return Ok(-log_sphere_area(p));
    }
    let nu = p as f64 / 2.0 - 1.0;
    let value = nu * kappa.ln() - (p as f64 / 2.0) * LN_2PI - log_bessel_i(nu, kappa)?;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NumericOverflow { what: "log_normalizer" })
    }
}

/// Expected mean resultant length `I_{p/2}(κ) / I_{p/2-1}(κ)`.
pub fn mean_resultant_length(p: usize, kappa: f64) -> Result<f64> {
    bessel_ratio(p as f64 / 2.0 - 1.0, kappa)
}

impl VonMisesFisher {
    pub fn new(mean_direction: UnitVector, concentration: f64) -> Result<Self> {
        if !(concentration >= 0.0) || !concentration.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "concentration must be finite and non-negative, got {concentration}"
            )));
        }
        Ok(VonMisesFisher {
            mean_direction,
            concentration,
        })
    }

    pub fn mean_direction(&self) -> &UnitVector {
        &self.mean_direction
    }

    pub fn concentration(&self) -> f64 {
        self.concentration
    }

    pub fn dim(&self) -> usize {
        self.mean_direction.dim()
    }

    pub fn log_density(&self, z: &UnitVector) -> Result<f64> {
        let cos = self.mean_direction.dot(z)?;
        Ok(log_normalizer(self.dim(), self.concentration)? + self.concentration * cos)
    }

    pub fn sample(&self, count: usize, seed: RngSeed) -> Result<Vec<UnitVector>> {
        if count == 0 {
            return Err(Error::InvalidArgument("sample count must be positive".into()));
        }
        let mut rng = seed.rng();
        let sampler = self.sampler();
        Ok((0..count).map(|_| sampler.draw(&mut rng)).collect())
    }

    /// A reusable sampler; precomputes the rejection envelope.
    pub fn sampler(&self) -> VmfSampler<'_> {
        let p = self.dim();
        let kappa = self.concentration;
        let envelope = if kappa == 0.0 {
            None
        } else {
            let m1 = (p - 1) as f64;
            // b = (-2κ + sqrt(4κ² + (p-1)²)) / (p-1), written without cancellation.
            let b = m1 / (2.0 * kappa + (4.0 * kappa * kappa + m1 * m1).sqrt());
            let x0 = (1.0 - b) / (1.0 + b);
            let c = kappa * x0 + m1 * (1.0 - x0 * x0).ln();
            let beta = Beta::new(m1 / 2.0, m1 / 2.0).expect("beta parameters are positive");
            Some(Envelope { b, x0, c, beta })
        };
        VmfSampler {
            dist: self,
            envelope,
        }
    }
}

struct Envelope {
    b: f64,
    x0: f64,
    c: f64,
    beta: Beta<f64>,
}

pub struct VmfSampler<'a> {
    dist: &'a VonMisesFisher,
    envelope: Option<Envelope>,
}

impl VmfSampler<'_> {
    /// Draws the axial coordinate `w = uᵀz`; returns `(w, proposals used)`.
    pub fn draw_axial<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, usize) {
        let env = self
            .envelope
            .as_ref()
            .expect("axial draw needs positive concentration");
        let kappa = self.dist.concentration;
        let m1 = (self.dist.dim() - 1) as f64;
        let mut proposals = 0;
        loop {
            proposals += 1;
            let z: f64 = env.beta.sample(rng);
            let w = (1.0 - (1.0 + env.b) * z) / (1.0 - (1.0 - env.b) * z);
            let u: f64 = rng.random();
            let lhs = kappa * w + m1 * (1.0 - env.x0 * w).ln() - env.c;
            if lhs >= u.ln() {
                return (w.clamp(-1.0, 1.0), proposals);
            }
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> UnitVector {
        let p = self.dist.dim();
        if self.envelope.is_none() {
            return uniform_point(rng, p);
        }
        let (w, _) = self.draw_axial(rng);
        let u = self.dist.mean_direction.as_slice();
        let v = orthogonal_direction(rng, u);
        let s = (1.0 - w * w).max(0.0).sqrt();
        let z: Vec<f64> = u.iter().zip(&v).map(|(ui, vi)| w * ui + s * vi).collect();
        UnitVector::new(z).expect("recombined sample has unit norm")
    }
}

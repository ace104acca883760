//! Hypersphere primitives.
//!
//! Points live on `S^{p-1} ⊂ R^p` and are represented by [`UnitVector`].
//! Besides the basic constructors this module provides uniform sampling,
//! the von Mises-Fisher distribution ([`vmf`]), simplex equiangular tight
//! frames ([`etf`]) and a power-iteration PCA ([`pca`]) used for 2-D
//! visualization of latent spaces.

pub mod bessel;
pub mod etf;
pub mod pca;
pub mod vmf;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngSeed;

pub use etf::{make_simplex_etf, SimplexEtf};
pub use pca::{pca_project, PcaProjection};
pub use vmf::{log_normalizer, mean_resultant_length, VonMisesFisher};

/// Norms below this are treated as zero by [`normalize`].
pub const ZERO_NORM: f64 = 1e-12;

/// A point on the unit hypersphere of dimension `p >= 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    /// Normalizes `v`; see [`normalize`].
    pub fn new(v: Vec<f64>) -> Result<Self> {
        normalize(v)
    }

    /// The `i`-th standard basis vector of `R^dim`.
    pub fn basis(dim: usize, i: usize) -> Result<Self> {
        if dim < 2 || i >= dim {
            return Err(Error::InvalidArgument(format!(
                "basis vector {i} of dimension {dim}"
            )));
        }
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Ok(UnitVector(v))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &UnitVector) -> Result<f64> {
        check_dims(self.dim(), other.dim())?;
        Ok(dot(&self.0, &other.0))
    }

    pub fn neg(&self) -> UnitVector {
        UnitVector(self.0.iter().map(|x| -x).collect())
    }
}

impl TryFrom<Vec<f64>> for UnitVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        normalize(v)
    }
}

impl From<UnitVector> for Vec<f64> {
    fn from(u: UnitVector) -> Self {
        u.0
    }
}

impl AsRef<[f64]> for UnitVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn check_dims(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Returns `v / ||v||`.
pub fn normalize(mut v: Vec<f64>) -> Result<UnitVector> {
    if v.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "sphere dimension must be at least 2, got {}",
            v.len()
        )));
    }
    let n = norm(&v);
    if !(n >= ZERO_NORM) || !n.is_finite() {
        return Err(Error::ZeroVector { norm: n });
    }
    v.iter_mut().for_each(|x| *x /= n);
    Ok(UnitVector(v))
}

pub(crate) fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// One uniform draw on `S^{p-1}`: a standard Gaussian vector, normalized.
pub fn uniform_point<R: Rng + ?Sized>(rng: &mut R, p: usize) -> UnitVector {
    loop {
        if let Ok(u) = normalize(gaussian_vector(rng, p)) {
            return u;
        }
    }
}

/// `count` i.i.d. uniform points on `S^{p-1}`.
pub fn sample_uniform_sphere(p: usize, count: usize, seed: RngSeed) -> Result<Vec<UnitVector>> {
    if p < 2 {
        return Err(Error::InvalidArgument(format!("sphere dimension {p} < 2")));
    }
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let mut rng = seed.rng();
    Ok((0..count).map(|_| uniform_point(&mut rng, p)).collect())
}

/// `1 - a·b`, in `[0, 2]`.
pub fn cosine_distance(a: &UnitVector, b: &UnitVector) -> Result<f64> {
    Ok((1.0 - a.dot(b)?).clamp(0.0, 2.0))
}

/// A uniform direction in the orthogonal complement of `u`.
pub(crate) fn orthogonal_direction<R: Rng + ?Sized>(rng: &mut R, u: &[f64]) -> Vec<f64> {
    loop {
        let mut g = gaussian_vector(rng, u.len());
        let proj = dot(&g, u);
        g.iter_mut().zip(u).for_each(|(gi, ui)| *gi -= proj * ui);
        let n = norm(&g);
        if n > 1e-8 {
            g.iter_mut().for_each(|x| *x /= n);
            return g;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_examples() {
        let u = normalize(vec![3.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(u.as_slice(), &[1.0, 0.0, 0.0, 0.0]);
        let u = normalize(vec![1.0, 1.0]).unwrap();
        assert!((u.as_slice()[0] - 0.70710678).abs() < 1e-8);
        assert!((u.as_slice()[1] - 0.70710678).abs() < 1e-8);
        assert!(matches!(
            normalize(vec![0.0, 0.0, 0.0]),
            Err(Error::ZeroVector { .. })
        ));
        assert!(normalize(vec![1.0]).is_err());
    }

    #[test]
    fn uniform_sphere_moments() {
        let pts = sample_uniform_sphere(3, 10_000, RngSeed(7)).unwrap();
        for p in &pts {
            assert!((norm(p.as_slice()) - 1.0).abs() < 1e-9);
        }
        for c in 0..3 {
            let mean: f64 = pts.iter().map(|p| p.as_slice()[c]).sum::<f64>() / 10_000.0;
            let var: f64 =
                pts.iter().map(|p| (p.as_slice()[c] - mean).powi(2)).sum::<f64>() / 10_000.0;
            assert!(mean.abs() < 0.05, "mean {mean}");
            assert!((var - 1.0 / 3.0).abs() < 0.02, "var {var}");
        }
    }

    #[test]
    fn uniform_sphere_high_dim_dot_mean() {
        let pts = sample_uniform_sphere(64, 123_000, RngSeed(11)).unwrap();
        let fixed = UnitVector::basis(64, 5).unwrap();
        let mean: f64 = pts.iter().map(|p| p.dot(&fixed).unwrap()).sum::<f64>() / pts.len() as f64;
        assert!(mean.abs() < 0.01);
    }

    #[test]
    fn uniform_sphere_is_seed_deterministic() {
        let a = sample_uniform_sphere(5, 100, RngSeed(3)).unwrap();
        let b = sample_uniform_sphere(5, 100, RngSeed(3)).unwrap();
        assert_eq!(a, b);
        assert!(sample_uniform_sphere(1, 10, RngSeed(3)).is_err());
        assert!(sample_uniform_sphere(3, 0, RngSeed(3)).is_err());
    }

    #[test]
    fn cosine_distance_examples() {
        let a = UnitVector::basis(4, 0).unwrap();
        let b = UnitVector::basis(4, 2).unwrap();
        assert_eq!(cosine_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(cosine_distance(&a, &a.neg()).unwrap(), 2.0);
        assert_eq!(cosine_distance(&a, &b).unwrap(), 1.0);
        let c = UnitVector::basis(3, 0).unwrap();
        assert!(matches!(
            cosine_distance(&a, &c),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn unit_vector_serde_renormalizes() {
        let u: UnitVector = serde_json::from_str("[0.0, 2.0]").unwrap();
        assert_eq!(u.as_slice(), &[0.0, 1.0]);
        assert!(serde_json::from_str::<UnitVector>("[0.0, 0.0]").is_err());
    }
}

//! Principal component projection by power iteration with deflation.

use super::{dot, norm};
use crate::error::{Error, Result};
use crate::rng::RngSeed;

pub const POWER_TOLERANCE: f64 = 1e-10;
pub const POWER_MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaProjection {
    /// `k` orthonormal directions in the ambient space.
    pub basis: Vec<Vec<f64>>,
    /// Each input point's coordinates in `basis` (after centering).
    pub projected: Vec<Vec<f64>>,
    /// Variance captured by each direction, non-increasing.
    pub explained_variance: Vec<f64>,
    pub mean: Vec<f64>,
    /// Trace of the (1/N-normalized) covariance.
    pub total_variance: f64,
}

impl PcaProjection {
    /// Largest `|b_i·b_j - δ_ij|` over the basis.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, a) in self.basis.iter().enumerate() {
            for (j, b) in self.basis.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(a, b) - want).abs());
            }
        }
        worst
    }
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for b in basis {
            let proj = dot(v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
        }
    }
}

fn mat_vec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

pub fn pca_project<P: AsRef<[f64]>>(points: &[P], k: usize) -> Result<PcaProjection> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("PCA needs at least two points".into()));
    }
    let dim = points[0].as_ref().len();
    if points.iter().any(|p| p.as_ref().len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: points
                .iter()
                .map(|p| p.as_ref().len())
                .find(|&l| l != dim)
                .unwrap_or(dim),
        });
    }
    if k == 0 || k > dim {
        return Err(Error::InvalidArgument(format!(
            "target dimension {k} must be in 1..={dim}"
        )));
    }
    let n = points.len() as f64;
    let mut mean = vec![0.0; dim];
    for p in points {
        mean.iter_mut().zip(p.as_ref()).for_each(|(m, x)| *m += x / n);
    }
    let centered: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.as_ref().iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    let mut cov = vec![vec![0.0; dim]; dim];
    for c in &centered {
        for (i, ci) in c.iter().enumerate() {
            if *ci == 0.0 {
                continue;
            }
            cov[i].iter_mut().zip(c).for_each(|(a, cj)| *a += ci * cj / n);
        }
    }
    let total_variance: f64 = (0..dim).map(|i| cov[i][i]).sum();
    let scale = cov
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, x| m.max(x.abs()));
    if !(total_variance > 0.0) {
        return Err(Error::DegenerateCovariance);
    }
    let mut rng_state = RngSeed(0x5043_4131).rng();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut explained = Vec::with_capacity(k);
    let mut deflated = cov.clone();
    for _ in 0..k {
        let mut v = super::gaussian_vector(&mut rng_state, dim);
        orthogonalize(&mut v, &basis);
        let vn = norm(&v);
        v.iter_mut().for_each(|x| *x /= vn);
        let mut lambda = 0.0;
        for _ in 0..POWER_MAX_ITERATIONS {
            let mut w = mat_vec(&deflated, &v);
            orthogonalize(&mut w, &basis);
            let wn = norm(&w);
            if wn <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
                // Remaining spectrum is numerically zero; keep v as an
                // arbitrary orthonormal completion.
                lambda = 0.0;
                break;
            }
            w.iter_mut().for_each(|x| *x /= wn);
            if dot(&w, &v) < 0.0 {
                w.iter_mut().for_each(|x| *x = -*x);
            }
            let delta = w.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            v = w;
            lambda = dot(&v, &mat_vec(&cov, &v));
            if delta < POWER_TOLERANCE {
                break;
            }
        }
        orthogonalize(&mut v, &basis);
        let vn = norm(&v);
        v.iter_mut().for_each(|x| *x /= vn);
        let lambda = lambda.max(0.0);
        for (i, row) in deflated.iter_mut().enumerate() {
            row.iter_mut()
                .zip(&v)
                .for_each(|(a, vj)| *a -= lambda * v[i] * vj);
        }
        basis.push(v);
        explained.push(lambda);
    }
    // Rayleigh quotients can be out of order by rounding when eigenvalues tie.
    for i in 1..explained.len() {
        if explained[i] > explained[i - 1] {
            explained[i] = explained[i - 1];
        }
    }
    let projected = centered
        .iter()
        .map(|c| basis.iter().map(|b| dot(c, b)).collect())
        .collect();
    Ok(PcaProjection {
        basis,
        projected,
        explained_variance: explained,
        mean,
        total_variance,
    })
}

//! Simplex equiangular tight frames.

use super::{dot, gaussian_vector, norm, UnitVector};
use crate::error::{Error, Result};
use crate::rng::RngSeed;

/// `n` unit vectors with all pairwise dot products equal to `-1/(n-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexEtf {
    centers: Vec<UnitVector>,
}

impl SimplexEtf {
    pub fn centers(&self) -> &[UnitVector] {
        &self.centers
    }

    pub fn into_centers(self) -> Vec<UnitVector> {
        self.centers
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.centers[0].dim()
    }

    /// The common pairwise cosine, `-1/(n-1)`.
    pub fn target_cosine(&self) -> f64 {
        -1.0 / (self.len() as f64 - 1.0)
    }
}

/// Orthonormal columns of a `rows × cols` matrix (`rows >= cols`), returned as
/// `cols` vectors of length `rows`. Modified Gram-Schmidt with one
/// re-orthogonalization pass over a seeded Gaussian matrix.
pub(crate) fn random_orthonormal(rows: usize, cols: usize, seed: RngSeed) -> Vec<Vec<f64>> {
    let mut rng = seed.rng();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cols);
    while basis.len() < cols {
        let mut v = gaussian_vector(&mut rng, rows);
        for _ in 0..2 {
            for b in &basis {
                let proj = dot(&v, b);
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
            }
        }
        let n = norm(&v);
        if n > 1e-6 {
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
    }
    basis
}

/// Builds an `n`-vertex simplex ETF in dimension `p`.
///
/// The vertices `e_i - 1/n` of the standard simplex are expressed in the
/// Helmert basis of the sum-zero hyperplane (an `(n-1)`-dimensional
/// coordinate system), normalized, and mapped into `R^p` by a seeded random
/// matrix with orthonormal columns. Different seeds give globally rotated
/// copies of the same frame.
pub fn make_simplex_etf(n: usize, p: usize, seed: RngSeed) -> Result<SimplexEtf> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "simplex needs at least 2 vertices, got {n}"
        )));
    }
    if p < 2 || p + 1 < n {
        return Err(Error::DimensionTooSmall { count: n, dim: p });
    }
    let k = n - 1;
    let scale = 1.0 / (1.0 - 1.0 / n as f64).sqrt();
    // Helmert vector h_j (j = 1..=k): ones on the first j entries, -j at entry j,
    // divided by sqrt(j(j+1)). Vertex i's coordinate j is h_j[i].
    let coords: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (1..=k)
                .map(|j| {
                    let c = 1.0 / ((j * (j + 1)) as f64).sqrt();
                    let h = if i < j {
                        c
                    } else if i == j {
                        -(j as f64) * c
                    } else {
                        0.0
                    };
                    h * scale
                })
                .collect()
        })
        .collect();
    let q = random_orthonormal(p, k, seed);
    let centers = coords
        .iter()
        .map(|c| {
            let mut v = vec![0.0; p];
            for (cj, col) in c.iter().zip(&q) {
                v.iter_mut().zip(col).for_each(|(x, y)| *x += cj * y);
            }
            UnitVector::new(v)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimplexEtf { centers })
}

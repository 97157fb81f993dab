//! PCA compression of pooled slice embeddings.

use nalgebra::{DMatrix, SymmetricEigen};

use super::StrategyError;

pub const MAX_COMPONENTS: usize = 10;

/// Eigenvalues below this fraction of the largest are treated as zero.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct Reduction {
    /// One reduced vector per input, all of the same length (possibly 0).
    pub vectors: Vec<Vec<f64>>,
    /// Unit principal axes in the input space, one per kept component.
    pub components: Vec<Vec<f64>>,
    /// Variance along each kept component, descending.
    pub explained_variance: Vec<f64>,
    /// Set when all inputs coincide and no component carries variance.
    pub degenerate: bool,
}

/// Centres the vectors and projects them onto the top `min(10, rank)` principal
/// components of their covariance. Each component is signed so that its
/// largest-magnitude loading is positive.
pub fn reduce_embeddings(raw: &[Vec<f64>]) -> Result<Reduction, StrategyError> {
    if raw.len() < 2 {
        return Err(StrategyError::Argument(format!(
            "PCA needs at least 2 vectors, got {}",
            raw.len()
        )));
    }
    let dims = raw[0].len();
    if raw.iter().any(|v| v.len() != dims) {
        return Err(StrategyError::Argument(
            "embedding vectors differ in length".into(),
        ));
    }
    if raw.iter().flatten().any(|v| !v.is_finite()) {
        return Err(StrategyError::Argument(
            "embedding contains a non-finite value".into(),
        ));
    }
    let n = raw.len();
    let mut mean = vec![0.0; dims];
    for v in raw {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centred = DMatrix::from_fn(n, dims, |i, j| raw[i][j] - mean[j]);
    let cov = centred.transpose() * &centred / (n - 1) as f64;
    let eigen = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..dims).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .total_cmp(&eigen.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let largest = order.first().map_or(0.0, |&i| eigen.eigenvalues[i]);
    let kept: Vec<usize> = if largest > 0.0 {
        order
            .into_iter()
            .filter(|&i| eigen.eigenvalues[i] > largest * RANK_TOLERANCE)
            .take(MAX_COMPONENTS)
            .collect()
    } else {
        Vec::new()
    };

    let components: Vec<Vec<f64>> = kept
        .iter()
        .map(|&i| {
            let mut c: Vec<f64> = eigen.eigenvectors.column(i).iter().copied().collect();
            let lead = c.iter().enumerate().fold(
                0,
                |best, (j, v)| if v.abs() > c[best].abs() { j } else { best },
            );
            if c[lead] < 0.0 {
                c.iter_mut().for_each(|v| *v = -*v);
            }
            c
        })
        .collect();
    let vectors = (0..n)
        .map(|i| {
            components
                .iter()
                .map(|c| c.iter().enumerate().map(|(j, w)| w * centred[(i, j)]).sum())
                .collect()
        })
        .collect();
    Ok(Reduction {
        vectors,
        components,
        explained_variance: kept.iter().map(|&i| eigen.eigenvalues[i]).collect(),
        degenerate: kept.is_empty(),
    })
}

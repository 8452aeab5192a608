//! Low-dimensional embedding of a Gram matrix from a landmark subset.

use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Embed the m points of a PSD Gram matrix into `out_dim` coordinates using
/// `landmarks.len()` sampled rows: landmark rows map to U L^{1/2}, the rest
/// to B^T U L^{-1/2} on the top `out_dim` eigenpairs of the landmark block.
/// Rows of the result follow the original ordering of `gram`.
pub fn nystrom_embed(
    gram: ArrayView2<f64>,
    landmarks: &[usize],
    out_dim: usize,
) -> Result<Array2<f64>> {
    let m = gram.nrows();
    if gram.ncols() != m {
        return Err(Error::Dimension(format!("gram is {}x{}", m, gram.ncols())));
    }
    let k = landmarks.len();
    if k == 0 || k > m {
        return Err(Error::Validation(format!("need 1..=m landmarks, got {k}")));
    }
    if out_dim == 0 || out_dim > k {
        return Err(Error::Validation(format!(
            "embedding dimension must be in 1..={k}, got {out_dim}"
        )));
    }
    let mut seen = vec![false; m];
    for &l in landmarks {
        if l >= m {
            return Err(Error::Validation(format!(
                "landmark index {l} out of range"
            )));
        }
        if seen[l] {
            return Err(Error::Validation(format!("landmark index {l} repeated")));
        }
        seen[l] = true;
    }
    let max_asym = (0..m)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| (gram[[i, j]] - gram[[j, i]]).abs())
        .fold(0.0f64, f64::max);
    if max_asym > 1e-8 {
        return Err(Error::Validation(format!(
            "gram is not symmetric (max skew {max_asym:e})"
        )));
    }

    let rest: Vec<usize> = (0..m).filter(|i| !seen[*i]).collect();
    let a = DMatrix::from_fn(k, k, |r, c| gram[[landmarks[r], landmarks[c]]]);
    let eig = nalgebra::SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());

    let lead = eig.eigenvalues[order[0]].abs().max(1.0);
    if eig.eigenvalues[order[k - 1]] < -1e-8 * lead {
        return Err(Error::Validation(
            "landmark block has a significantly negative eigenvalue; gram is not PSD".into(),
        ));
    }
    let usable = order
        .iter()
        .filter(|&&i| eig.eigenvalues[i] > 1e-12)
        .count();
    if usable < out_dim {
        return Err(Error::Numeric(format!(
            "rank deficiency: only {usable} eigenvalues exceed 1e-12, cannot embed into {out_dim}"
        )));
    }

    let mut out = Array2::zeros((m, out_dim));
    for (col, &e) in order[..out_dim].iter().enumerate() {
        let lam = eig.eigenvalues[e];
        let sqrt = lam.sqrt();
        for (r, &l) in landmarks.iter().enumerate() {
            out[[l, col]] = eig.eigenvectors[(r, e)] * sqrt;
        }
        for &i in &rest {
            // row i of B^T is gram[i][landmarks]
            let mut dot = 0.0;
            for (r, &l) in landmarks.iter().enumerate() {
                dot += gram[[i, l]] * eig.eigenvectors[(r, e)];
            }
            out[[i, col]] = dot / sqrt;
        }
    }
    Ok(out)
}

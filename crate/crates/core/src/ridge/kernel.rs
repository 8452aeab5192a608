//! Input-space kernels and Gram matrix assembly.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// The input-kernel descriptor stored with every model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelKind {
    Linear,
    Polynomial { degree: u32, offset: f64 },
    Rbf { bandwidth: f64 },
}

impl KernelKind {
    pub fn eval(&self, a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
        match self {
            KernelKind::Linear => a.dot(&b),
            KernelKind::Polynomial { degree, offset } => (a.dot(&b) + offset).powi(*degree as i32),
            KernelKind::Rbf { bandwidth } => {
                let mut sq = 0.0;
                for (x, y) in a.iter().zip(b.iter()) {
                    let d = x - y;
                    sq += d * d;
                }
                (-sq / (2.0 * bandwidth * bandwidth)).exp()
            }
        }
    }

    /// Symmetric Gram matrix over the rows of `x`; rows fill in parallel.
    pub fn gram(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let m = x.nrows();
        let mut k = Array2::zeros((m, m));
        let rows: Vec<Vec<f64>> = (0..m)
            .into_par_iter()
            .map(|i| (0..=i).map(|j| self.eval(x.row(i), x.row(j))).collect())
            .collect();
        for (i, row) in rows.into_iter().enumerate() {
            for (j, v) in row.into_iter().enumerate() {
                k[[i, j]] = v;
                k[[j, i]] = v;
            }
        }
        k
    }

    /// Kernel column of a new input against the training rows.
    pub fn column(&self, train: ArrayView2<f64>, x: ArrayView1<f64>) -> Array1<f64> {
        Array1::from_iter((0..train.nrows()).map(|i| self.eval(train.row(i), x)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn linear_gram_is_xxt() {
        let x = array![[1.0, 0.0], [0.5, 2.0]];
        let k = KernelKind::Linear.gram(x.view());
        assert_eq!(k, x.dot(&x.t()));
    }

    #[test]
    fn rbf_diagonal_is_one() {
        let x = array![[1.0, 2.0], [3.0, -1.0], [0.0, 0.0]];
        let k = KernelKind::Rbf { bandwidth: 1.5 }.gram(x.view());
        for i in 0..3 {
            assert!((k[[i, i]] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn polynomial_matches_manual() {
        let a = array![1.0, 2.0];
        let b = array![0.5, 1.0];
        let k = KernelKind::Polynomial {
            degree: 3,
            offset: 1.0,
        };
        assert!((k.eval(a.view(), b.view()) - (2.5f64 + 1.0).powi(3)).abs() < 1e-12);
    }
}

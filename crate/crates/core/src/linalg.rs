//! Small dense helpers shared by the PCA-based stages.

use faer::{Mat, Side};
use nalgebra::DMatrix;

/// Eigen-decomposition of a symmetric matrix with eigenpairs sorted by
/// descending eigenvalue. Each eigenvector is sign-fixed so that its
/// largest-magnitude entry is positive (first such entry on ties).
pub fn sorted_symmetric_eigen(matrix: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = matrix.nrows();
    let eig = Mat::<f64>::from_fn(n, n, |i, j| matrix[(i, j)])
        .self_adjoint_eigen(Side::Lower)
        .expect("symmetric eigen-decomposition of a finite matrix");
    let (lambda, u) = (eig.S().column_vector(), eig.U());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| lambda[b].total_cmp(&lambda[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| lambda[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = u.col(src);
        let mut pivot = 0;
        for i in 1..n {
            if col[i].abs() > col[pivot].abs() + 1e-12 {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, dst)] = sign * col[i];
        }
    }
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_descending_and_sign_fixed() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 5.0]);
        let (vals, vecs) = sorted_symmetric_eigen(m.clone());
        assert!((vals[0] - 5.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        assert!((vals[2] - 1.0).abs() < 1e-12);
        for j in 0..3 {
            let col = vecs.column(j);
            let pivot =
                col.iter()
                    .cloned()
                    .fold(0.0f64, |a, b| if b.abs() > a.abs() + 1e-12 { b } else { a });
            assert!(pivot > 0.0);
            let mv = &m * col;
            for i in 0..3 {
                assert!((mv[i] - vals[j] * col[i]).abs() < 1e-12);
            }
        }
    }
}

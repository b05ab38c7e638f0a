use nalgebra::{DMatrix, DVector};

/// Symmetric eigendecomposition. Returns eigenvalues in ascending order and
/// the matching unit eigenvectors as columns. Only the lower triangle is read.
pub(crate) fn symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    let view = faer::mat::from_column_major_slice::<f64>(m.as_slice(), n, n);
    let evd = view.selfadjoint_eigendecomposition(faer::Side::Lower);
    let s = evd.s().column_vector();
    let u = evd.u();
    let values = DVector::from_fn(n, |i, _| s.read(i));
    let vectors = DMatrix::from_fn(n, n, |i, j| u.read(i, j));
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonalizes_a_small_matrix() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let (vals, vecs) = symmetric_eigen(&m);
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        let rebuilt = &vecs * DMatrix::from_diagonal(&vals) * vecs.transpose();
        assert!((rebuilt - m).abs().max() < 1e-12);
    }
}

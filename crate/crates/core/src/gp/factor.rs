use std::sync::Arc;

use nalgebra::DMatrix;

use super::GpError;

/// Upper-triangular Cholesky factor `U` with `Uᵀ·U = K`, stored by columns.
///
/// Column `j` holds `U[0..=j, j]`. Bordering appends columns and never touches
/// existing ones, so columns are shared between clones.
#[derive(Debug, Clone, Default)]
pub struct UpperFactor {
    cols: Vec<Arc<[f64]>>,
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators let the loop vectorize
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..n {
        s += a[i] * b[i];
    }
    s
}

impl UpperFactor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dim(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    /// Entry `U[i, j]` (zero below the diagonal).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i > j {
            0.0
        } else {
            self.cols[j][i]
        }
    }

    pub fn diag(&self, j: usize) -> f64 {
        self.cols[j][j]
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.cols[j]
    }

    /// Sum of `ln U[j, j]`, i.e. half the log-determinant of `K`.
    pub fn half_log_det(&self) -> f64 {
        (0..self.dim()).map(|j| self.diag(j).ln()).sum()
    }

    /// Solves `Uᵀ·x = b` by forward substitution.
    pub fn solve_transposed(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.forward_from(&mut x, 0);
        x
    }

    /// Continues a forward substitution: `x[..start]` already solves the
    /// leading block, entries from `start` on still hold right-hand sides.
    pub(crate) fn forward_from(&self, x: &mut [f64], start: usize) {
        for i in start..self.dim() {
            let col = &self.cols[i];
            x[i] = (x[i] - dot(&col[..i], &x[..i])) / col[i];
        }
    }

    /// Solves `U·x = b` by column-oriented back substitution.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        for j in (0..self.dim()).rev() {
            let col = &self.cols[j];
            x[j] /= col[j];
            let xj = x[j];
            for (xi, &u) in x[..j].iter_mut().zip(&col[..j]) {
                *xi -= u * xj;
            }
        }
        x
    }

    /// Borders the factor with new rows/columns.
    ///
    /// `k12` is the `n×m` cross-covariance and `k22` the `m×m` block of the new
    /// points; `jitter` is added to the diagonal of `k22`. Returns the new
    /// factor, leaving `self` untouched on failure.
    pub fn extend(
        &self,
        k12: &DMatrix<f64>,
        k22: &DMatrix<f64>,
        jitter: f64,
    ) -> Result<Self, GpError> {
        let n = self.dim();
        let m = k22.nrows();
        if k22.ncols() != m || k12.nrows() != n || k12.ncols() != m {
            return Err(GpError::Dimension(format!(
                "factor {n}, K12 {}x{}, K22 {}x{}",
                k12.nrows(),
                k12.ncols(),
                k22.nrows(),
                k22.ncols()
            )));
        }
        // S12 = U11⁻ᵀ K12, one forward substitution per new column
        let mut new_cols: Vec<Vec<f64>> = (0..m)
            .map(|c| {
                let mut col = Vec::with_capacity(n + c + 1);
                col.extend_from_slice(&k12.as_slice()[c * n..(c + 1) * n]);
                self.forward_from(&mut col, 0);
                col
            })
            .collect();
        // S22 = chol(K22 − S12ᵀ S12), left-looking so columns are finished in order
        for j in 0..m {
            for i in 0..=j {
                let schur = k22[(i, j)] - dot(&new_cols[i][..n], &new_cols[j][..n]);
                let (head, tail) = new_cols.split_at_mut(j);
                let cj = &mut tail[0];
                let tail_dot = if i < j {
                    dot(&head[i][n..n + i], &cj[n..n + i])
                } else {
                    dot(&cj[n..n + j], &cj[n..n + j])
                };
                if i < j {
                    let uii = head[i][n + i];
                    cj.push((schur - tail_dot) / uii);
                } else {
                    let pivot = schur + jitter - tail_dot;
                    if !(pivot > 0.0) || !pivot.is_finite() {
                        return Err(GpError::NotPositiveDefinite {
                            pivot: n + j,
                            value: pivot,
                        });
                    }
                    cj.push(pivot.sqrt());
                }
            }
        }
        let mut cols = self.cols.clone();
        cols.extend(new_cols.into_iter().map(Arc::from));
        Ok(Self { cols })
    }

    /// Factorizes a dense symmetric positive-definite matrix (upper triangle read).
    pub fn factorize(k: &DMatrix<f64>) -> Result<Self, GpError> {
        let empty = DMatrix::zeros(0, k.nrows());
        Self::new().extend(&empty, k, 0.0)
    }

    pub fn from_dense(u: &DMatrix<f64>) -> Self {
        let cols = (0..u.ncols())
            .map(|j| (0..=j).map(|i| u[(i, j)]).collect::<Vec<_>>().into())
            .collect();
        Self { cols }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.get(i, j))
    }

    /// Dense `U⁻ᵀ` (lower triangular), column `j` solving `Uᵀ·x = e_j`.
    pub(crate) fn inverse_transposed(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut w = DMatrix::zeros(n, n);
        let mut x = vec![0.0; n];
        for j in 0..n {
            x.iter_mut().for_each(|v| *v = 0.0);
            x[j] = 1.0;
            for i in j..n {
                let col = &self.cols[i];
                x[i] = (x[i] - dot(&col[j..i], &x[j..i])) / col[i];
            }
            w.column_mut(j).copy_from_slice(&x);
        }
        w
    }
}

/// Extends the upper-triangular factor `l11` (`l11ᵀ·l11 = K11`) to the factor of
/// `[[K11, k12], [k12ᵀ, k22]]` without refactorizing the leading block.
pub fn extend_cholesky(
    l11: &DMatrix<f64>,
    k12: &DMatrix<f64>,
    k22: &DMatrix<f64>,
) -> Result<DMatrix<f64>, GpError> {
    if l11.nrows() != l11.ncols() {
        return Err(GpError::Dimension("L11 must be square".into()));
    }
    Ok(UpperFactor::from_dense(l11)
        .extend(k12, k22, 0.0)?
        .to_dense())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_from_empty() {
        let s = extend_cholesky(
            &DMatrix::zeros(0, 0),
            &DMatrix::zeros(0, 1),
            &DMatrix::from_element(1, 1, 4.0),
        )
        .unwrap();
        assert_eq!(s, DMatrix::from_element(1, 1, 2.0));
    }

    #[test]
    fn two_by_two_by_hand() {
        // [[2,1],[1,2]]: U = [[√2, 1/√2], [0, √(3/2)]]
        let l11 = DMatrix::from_element(1, 1, 2f64.sqrt());
        let s = extend_cholesky(
            &l11,
            &DMatrix::from_element(1, 1, 1.0),
            &DMatrix::from_element(1, 1, 2.0),
        )
        .unwrap();
        let expect =
            DMatrix::from_row_slice(2, 2, &[2f64.sqrt(), 1.0 / 2f64.sqrt(), 0.0, 1.5f64.sqrt()]);
        assert!((s - expect).abs().max() < 1e-15);
    }

    #[test]
    fn indefinite_block_fails() {
        let l11 = DMatrix::from_element(1, 1, 1.0);
        let err = extend_cholesky(
            &l11,
            &DMatrix::from_element(1, 1, 1.0),
            &DMatrix::from_element(1, 1, 1.0),
        );
        assert!(matches!(
            err,
            Err(GpError::NotPositiveDefinite { pivot: 1, .. })
        ));
    }

    #[test]
    fn solves_agree_with_dense() {
        let k = DMatrix::from_row_slice(3, 3, &[4.0, 2.0, 0.4, 2.0, 5.0, 1.0, 0.4, 1.0, 3.0]);
        let u = UpperFactor::factorize(&k).unwrap();
        let b = [1.0, -2.0, 0.5];
        let z = u.solve_transposed(&b);
        let x = u.solve(&z);
        let kx = &k * nalgebra::DVector::from_column_slice(&x);
        for i in 0..3 {
            assert!((kx[i] - b[i]).abs() < 1e-12);
        }
        let w = u.inverse_transposed();
        let kinv = w.tr_mul(&w);
        assert!((kinv * &k - DMatrix::identity(3, 3)).abs().max() < 1e-12);
    }
}

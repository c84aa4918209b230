use super::{tol, DenseMatrix};
use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor `S = L Lᵀ`, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: DenseMatrix,
}

impl Cholesky {
    /// Factors a symmetric positive definite matrix.
    ///
    /// A pivot at or below `1e-14 · trace(S) / n` is reported as `NotPositiveDefinite`.
    pub fn factor(s: &DenseMatrix) -> Result<Self> {
        s.check_symmetric()?;
        let n = s.rows();
        let floor = if n == 0 { 0.0 } else { tol::CHOLESKY_PIVOT * s.trace() / n as f64 };
        let mut l = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = s[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > floor.max(0.0)) {
                return Err(Error::NotPositiveDefinite { row: j, pivot: d });
            }
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut v = s[(i, j)];
                for k in 0..j {
                    v -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = v / ljj;
            }
        }
        Ok(Self { lower: l })
    }

    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    pub fn lower(&self) -> &DenseMatrix {
        &self.lower
    }

    /// Upper factor `U = Lᵀ` with `UᵀU = S`.
    pub fn upper(&self) -> DenseMatrix {
        self.lower.transpose()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n, "rhs length mismatch");
        let l = &self.lower;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut v = y[i];
            for k in 0..i {
                v -= l[(i, k)] * y[k];
            }
            y[i] = v / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut v = y[i];
            for k in (i + 1)..n {
                v -= l[(k, i)] * y[k];
            }
            y[i] = v / l[(i, i)];
        }
        y
    }

    /// Solves `S X = B` column by column.
    pub fn solve_matrix(&self, b: &DenseMatrix) -> DenseMatrix {
        let cols: Vec<Vec<f64>> = (0..b.cols()).map(|j| self.solve(&b.column(j))).collect();
        DenseMatrix::from_fn(b.rows(), b.cols(), |i, j| cols[j][i])
    }

    pub fn inverse(&self) -> DenseMatrix {
        self.solve_matrix(&DenseMatrix::identity(self.dim()))
    }
}

/// Solves `S x = b` for symmetric positive definite `S`.
pub fn solve_spd(s: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != s.rows() {
        return Err(Error::Dimension(format!("rhs has {} entries, matrix has {} rows", b.len(), s.rows())));
    }
    Ok(Cholesky::factor(s)?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn diagonal_system() {
        let s = DenseMatrix::identity(2).scale(2.0);
        let x = solve_spd(&s, &[4.0, 6.0]).unwrap();
        assert_abs_diff_eq!(x[0], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], 3.0, epsilon = 1e-15);
    }

    #[test]
    fn two_by_two_hand_inverse() {
        // inverse of [[4,1],[1,6]] is [[6,-1],[-1,4]] / 23
        let s = DenseMatrix::from_rows(&[[4.0, 1.0], [1.0, 6.0]]).unwrap();
        let x = solve_spd(&s, &[1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(x[0], 5.0 / 23.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], 3.0 / 23.0, epsilon = 1e-15);
        let x = solve_spd(&s, &[1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(x[0], 4.0 / 23.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x[1], 7.0 / 23.0, epsilon = 1e-15);
    }

    #[test]
    fn indefinite_is_rejected() {
        let s = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert!(matches!(solve_spd(&s, &[1.0, 1.0]), Err(Error::NotPositiveDefinite { row: 1, .. })));
        let singular = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(matches!(Cholesky::factor(&singular), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn upper_factor_reconstructs() {
        let s = DenseMatrix::from_rows(&[[4.0, 1.0, 0.5], [1.0, 6.0, 2.0], [0.5, 2.0, 5.0]]).unwrap();
        let u = Cholesky::factor(&s).unwrap().upper();
        assert!(u.transpose().matmul(&u).max_abs_diff(&s) < 1e-14);
    }
}

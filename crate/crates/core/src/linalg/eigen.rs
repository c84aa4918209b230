use super::{tol, DenseMatrix};
use crate::error::{Error, Result};

/// Spectrum of a symmetric matrix: ascending eigenvalues with orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the eigenvector for `eigenvalues[i]`.
    pub eigenvectors: DenseMatrix,
}

impl EigenDecomposition {
    pub fn eigenvector(&self, i: usize) -> Vec<f64> {
        self.eigenvectors.column(i)
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().expect("empty spectrum")
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `V Λ Vᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let v = &self.eigenvectors;
        let n = v.rows();
        DenseMatrix::from_fn(n, n, |i, j| {
            (0..self.eigenvalues.len()).map(|k| v[(i, k)] * self.eigenvalues[k] * v[(j, k)]).sum()
        })
    }
}

/// Cyclic Jacobi eigensolver for symmetric matrices.
///
/// Sweeps over all off-diagonal pairs until the off-diagonal Frobenius norm drops below
/// `1e-12 · ‖S‖_F`, or fails after 100 sweeps.
pub fn sym_eig(s: &DenseMatrix) -> Result<EigenDecomposition> {
    s.check_symmetric()?;
    let n = s.rows();
    let mut a = s.symmetrized();
    let mut v = DenseMatrix::identity(n);
    let target = tol::JACOBI_OFF_DIAGONAL * s.norm_fro();

    let mut converged = false;
    let mut off = off_diagonal_norm(&a);
    for _ in 0..tol::JACOBI_MAX_SWEEPS {
        if off <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                rotate(&mut a, &mut v, p, q, c, sn);
            }
        }
        off = off_diagonal_norm(&a);
    }
    if !converged && off > target {
        return Err(Error::NoConvergence { sweeps: tol::JACOBI_MAX_SWEEPS, off });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let eigenvalues = order.iter().map(|&i| a[(i, i)]).collect();
    let eigenvectors = DenseMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Ok(EigenDecomposition { eigenvalues, eigenvectors })
}

/// Applies `A ← JᵀAJ`, `V ← VJ` for the plane rotation on `(p, q)`.
fn rotate(a: &mut DenseMatrix, v: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    a[(p, q)] = 0.0;
    a[(q, p)] = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

fn off_diagonal_norm(a: &DenseMatrix) -> f64 {
    let n = a.rows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)] * a[(i, j)];
            }
        }
    }
    sum.sqrt()
}

/// Generalized eigenvalues of the pencil `(A, D)` for diagonal `D ≻ 0`, ascending.
///
/// Computed as the spectrum of `D^{-1/2} A D^{-1/2}`.
pub fn pencil_eigenvalues(a: &DenseMatrix, d: &DenseMatrix) -> Result<Vec<f64>> {
    Ok(pencil_eig(a, d)?.eigenvalues)
}

/// Pencil eigenpairs `Av = λDv`, with eigenvectors normalized so that `VᵀDV = I`.
pub fn pencil_eig(a: &DenseMatrix, d: &DenseMatrix) -> Result<EigenDecomposition> {
    a.check_symmetric()?;
    if d.rows() != a.rows() || d.cols() != a.cols() {
        return Err(Error::Dimension(format!(
            "pencil sizes differ: A is {}x{}, D is {}x{}",
            a.rows(),
            a.cols(),
            d.rows(),
            d.cols()
        )));
    }
    let diag = d.diag();
    for i in 0..d.rows() {
        for j in 0..d.cols() {
            if i != j && d[(i, j)] != 0.0 {
                return Err(Error::Dimension(format!("D is not diagonal at ({i}, {j})")));
            }
        }
    }
    if let Some((index, &value)) = diag.iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
        return Err(Error::SingularD { index, value });
    }
    let inv_sqrt: Vec<f64> = diag.iter().map(|x| 1.0 / x.sqrt()).collect();
    let n = a.rows();
    let reduced = DenseMatrix::from_fn(n, n, |i, j| inv_sqrt[i] * a[(i, j)] * inv_sqrt[j]);
    let mut eig = sym_eig(&reduced.symmetrized())?;
    eig.eigenvectors = DenseMatrix::from_fn(n, n, |i, k| inv_sqrt[i] * eig.eigenvectors[(i, k)]);
    Ok(eig)
}

/// Orthonormal basis of the complement of the all-ones vector, as an `n × (n−1)` matrix.
///
/// Gram–Schmidt on the difference vectors `e_i − e_{i+1}`, so the basis is deterministic.
pub fn ones_complement_basis(n: usize) -> DenseMatrix {
    assert!(n >= 2, "ones_complement_basis needs n >= 2");
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v[i + 1] = -1.0;
        // two passes of classical Gram–Schmidt keep the columns orthonormal to ~1e-16
        for _ in 0..2 {
            for c in &cols {
                let proj = super::dot(c, &v);
                super::axpy(-proj, c, &mut v);
            }
        }
        let norm = super::norm2(&v);
        v.iter_mut().for_each(|x| *x /= norm);
        cols.push(v);
    }
    DenseMatrix::from_fn(n, n - 1, |i, j| cols[j][i])
}

/// Orthonormal basis (as columns) of the orthogonal complement of a nonzero `v`,
/// taken from the Householder reflector that maps `v` onto a coordinate axis.
pub fn complement_basis(v: &[f64]) -> DenseMatrix {
    let n = v.len();
    assert!(n >= 2, "complement_basis needs n >= 2");
    let norm = super::norm2(v);
    assert!(norm > 0.0, "complement_basis needs a nonzero vector");
    let mut u: Vec<f64> = v.iter().map(|x| x / norm).collect();
    u[0] += if u[0] >= 0.0 { 1.0 } else { -1.0 };
    let uu = super::dot(&u, &u);
    DenseMatrix::from_fn(n, n - 1, |i, j| {
        let col = j + 1;
        let e = if i == col { 1.0 } else { 0.0 };
        e - 2.0 * u[i] * u[col] / uu
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn householder_complement() {
        let v = [2.0, -1.0, 0.5, 3.0];
        let p = complement_basis(&v);
        let gram = p.transpose().matmul(&p);
        for i in 0..3 {
            assert_abs_diff_eq!(crate::linalg::dot(&p.column(i), &v), 0.0, epsilon = 1e-14);
            for j in 0..3 {
                assert_abs_diff_eq!(gram[(i, j)], if i == j { 1.0 } else { 0.0 }, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn identity_spectrum() {
        let e = sym_eig(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn swap_matrix() {
        let s = DenseMatrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let e = sym_eig(&s).unwrap();
        assert_abs_diff_eq!(e.eigenvalues[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvalues[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn nonsymmetric_rejected() {
        let s = DenseMatrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]).unwrap();
        assert!(matches!(sym_eig(&s), Err(Error::NonSymmetric { .. })));
    }

    #[test]
    fn zero_matrix() {
        let e = sym_eig(&DenseMatrix::zeros(4, 4)).unwrap();
        assert!(e.eigenvalues.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn pencil_of_equal_matrices_is_all_ones() {
        let d = DenseMatrix::from_diag(&[0.3, 2.0, 5.0]);
        let l = pencil_eigenvalues(&d, &d).unwrap();
        for x in l {
            assert_abs_diff_eq!(x, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn pencil_of_three_node_path() {
        // det(A − λD) with A = w·path, D = diag(w, 2w, w) is −2w³λ(λ² − 1): roots −1, 0, 1
        for w in [0.1566, 1.0, 7.5] {
            let a = DenseMatrix::from_rows(&[[0.0, w, 0.0], [w, 0.0, w], [0.0, w, 0.0]]).unwrap();
            let d = DenseMatrix::from_diag(&[w, 2.0 * w, w]);
            let l = pencil_eigenvalues(&a, &d).unwrap();
            assert_abs_diff_eq!(l[0], -1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(l[1], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(l[2], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn pencil_rejects_nonpositive_d() {
        let a = DenseMatrix::identity(2);
        let d = DenseMatrix::from_diag(&[1.0, 0.0]);
        assert!(matches!(pencil_eigenvalues(&a, &d), Err(Error::SingularD { index: 1, .. })));
    }

    #[test]
    fn two_node_complement() {
        let p = ones_complement_basis(2);
        assert_abs_diff_eq!(p[(0, 0)].abs(), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(p[(0, 0)], -p[(1, 0)], epsilon = 1e-15);
    }

    #[test]
    fn three_node_complement() {
        let p = ones_complement_basis(3);
        let ptp = p.transpose().matmul(&p);
        assert!(ptp.max_abs_diff(&DenseMatrix::identity(2)) < 1e-14);
        for j in 0..2 {
            assert!(p.column(j).iter().sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn ten_node_complement_annihilates_ones() {
        let n = 10;
        let p = ones_complement_basis(n);
        let ones = DenseMatrix::from_fn(n, n, |_, _| 1.0);
        let m = p.transpose().matmul(&ones).matmul(&p);
        assert!(m.max_abs() < 1e-10);
    }
}

use num_complex::Complex64;

use super::{AdmmTrace, IterationMatrix};
use crate::error::{Error, Result};
use crate::linalg::{self, norm2, sym_eig, Cholesky, DenseMatrix};

/// `f(ρ) = ρκ / (1 + ρκ)`.
pub fn f_rho(rho: f64, kappa: f64) -> f64 {
    let rk = rho * kappa;
    rk / (1.0 + rk)
}

/// The two iteration-matrix eigenvalues attached to one pencil eigenvalue `λ̄`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPair {
    pub lambda: f64,
    pub plus: Complex64,
    pub minus: Complex64,
}

impl EigenPair {
    /// Roots of `φ² − (fλ̄ + 1)φ + f(λ̄ + 1)/2 = 0`.
    pub fn new(lambda: f64, f: f64) -> Self {
        let b = f * lambda + 1.0;
        let c = 2.0 * f * (lambda + 1.0);
        let mut disc = b * b - c;
        // a discriminant at rounding level is a double root
        if disc.abs() <= 8.0 * f64::EPSILON * (b * b).max(c) {
            disc = 0.0;
        }
        let (plus, minus) = if disc >= 0.0 {
            let r = disc.sqrt();
            (Complex64::new((b + r) / 2.0, 0.0), Complex64::new((b - r) / 2.0, 0.0))
        } else {
            let r = (-disc).sqrt();
            (Complex64::new(b / 2.0, r / 2.0), Complex64::new(b / 2.0, -r / 2.0))
        };
        Self { lambda, plus, minus }
    }

    pub fn is_complex(&self) -> bool {
        self.plus.im != 0.0
    }

    /// Larger modulus of the pair.
    pub fn magnitude(&self) -> f64 {
        self.plus.norm().max(self.minus.norm())
    }
}

/// Closed-form iteration-matrix spectrum: two eigenvalues for every pencil eigenvalue.
pub fn closed_form_eigenvalues(lambdas: &[f64], kappa: f64, rho: f64) -> Vec<EigenPair> {
    let f = f_rho(rho, kappa);
    lambdas.iter().map(|&l| EigenPair::new(l, f)).collect()
}

/// `|φ(ρ, λ̄)|` for a single pencil value.
pub fn phi_magnitude(rho: f64, kappa: f64, lambda: f64) -> f64 {
    EigenPair::new(lambda, f_rho(rho, kappa)).magnitude()
}

/// Per-step contraction of a converging sequence, fitted from its distances to the limit.
///
/// Samples at or below `1e3·ε·max(1, ‖x*‖)` are discarded as numerical floor; the fit is a
/// least-squares slope of `ln(distance)` over the last half of what remains.
pub fn empirical_factor(trace: &AdmmTrace, fixed_point: &[f64]) -> Result<f64> {
    let distances: Vec<f64> = trace.iterates.iter().map(|x| norm2(&linalg::sub(x, fixed_point))).collect();
    let floor = 1e3 * f64::EPSILON * norm2(fixed_point).max(1.0);
    contraction_factor(&distances, floor)
}

/// Fits `d_k ≈ C·φ^k` over the second half of the samples above `floor`.
pub fn contraction_factor(distances: &[f64], floor: f64) -> Result<f64> {
    let usable = distances.iter().position(|&d| !(d > floor)).unwrap_or(distances.len());
    if usable < MIN_FIT_SAMPLES {
        return Err(Error::ShortTrace(format!(
            "{usable} samples above the floor {floor:e}, need at least {MIN_FIT_SAMPLES}"
        )));
    }
    let window = &distances[usable / 2..usable];
    if window.last() >= window.first() {
        return Err(Error::Stagnated);
    }
    Ok(log_slope(window).exp())
}

pub const MIN_FIT_SAMPLES: usize = 20;

fn log_slope(window: &[f64]) -> f64 {
    let n = window.len() as f64;
    let xs = (0..window.len()).map(|k| k as f64);
    let mean_x = (n - 1.0) / 2.0;
    let ys: Vec<f64> = window.iter().map(|d| d.ln()).collect();
    let mean_y = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in xs.zip(&ys) {
        sxy += (x - mean_x) * (y - mean_y);
        sxx += (x - mean_x) * (x - mean_x);
    }
    sxy / sxx
}

/// Contraction rate of the homogeneous recursion `M` started from `(x¹, x⁰)`.
///
/// The eigenvalue-one eigenspace of `M` (the fixed points) is projected out along its left
/// eigenvectors before every step, so the state decays at the second-largest eigenvalue
/// modulus excited by the start. The state is renormalized each step and the rate is the mean
/// log growth over the last half of `iters` steps; no floor limits the run length.
pub fn recursion_factor(m: &IterationMatrix, x1: &[f64], x0: &[f64], iters: usize) -> Result<f64> {
    if iters < 2 * MIN_FIT_SAMPLES {
        return Err(Error::ShortTrace(format!("{iters} steps, need at least {}", 2 * MIN_FIT_SAMPLES)));
    }
    let n = m.dim();
    let deflate = FixedPointDeflation::new(&m.assembled())?;
    let mut v: Vec<f64> = x1.iter().chain(x0).copied().collect();
    deflate.apply(&mut v);
    let start = norm2(&v);
    if !(start > 1e-12 * norm2(x1).max(norm2(x0))) {
        return Err(Error::Stagnated);
    }
    v.iter_mut().for_each(|x| *x /= start);
    let mut logs = Vec::with_capacity(iters);
    for _ in 0..iters {
        let (cur, prev) = v.split_at(n);
        let mut next = m.step(cur, prev);
        next.extend_from_slice(cur);
        deflate.apply(&mut next);
        let size = norm2(&next);
        if !(size > 0.0) {
            return Ok(0.0);
        }
        logs.push(size.ln());
        v = next.into_iter().map(|x| x / size).collect();
    }
    let tail = &logs[iters / 2..];
    Ok((tail.iter().sum::<f64>() / tail.len() as f64).exp())
}

/// Oblique projector `I − R(LᵀR)⁻¹Lᵀ` removing the eigenvalue-one eigenspace of `M`.
struct FixedPointDeflation {
    right: DenseMatrix,
    left: DenseMatrix,
    gram: Cholesky,
    cross: DenseMatrix,
}

impl FixedPointDeflation {
    fn new(m: &DenseMatrix) -> Result<Self> {
        let k = m.sub(&DenseMatrix::identity(m.rows()));
        let right = null_basis(&k.transpose().matmul(&k))?;
        let left = null_basis(&k.matmul(&k.transpose()))?;
        if right.cols() == 0 || right.cols() != left.cols() {
            return Err(Error::Dimension(format!(
                "eigenvalue one has {} right and {} left eigenvectors",
                right.cols(),
                left.cols()
            )));
        }
        let cross = left.transpose().matmul(&right);
        let gram = Cholesky::factor(&cross.transpose().matmul(&cross).symmetrized())?;
        Ok(Self { right, left, gram, cross })
    }

    fn apply(&self, v: &mut [f64]) {
        let lv = self.left.tr_matvec(v);
        let c = self.gram.solve(&self.cross.tr_matvec(&lv));
        linalg::axpy(-1.0, &self.right.matvec(&c), v);
    }
}

/// Orthonormal eigenvectors of a PSD matrix for eigenvalues below `1e-10·λ_max`.
fn null_basis(gram: &DenseMatrix) -> Result<DenseMatrix> {
    let eig = sym_eig(&gram.symmetrized())?;
    let cutoff = 1e-10 * eig.max().abs().max(1.0);
    let idx: Vec<usize> = (0..gram.rows()).filter(|&i| eig.eigenvalues[i] <= cutoff).collect();
    Ok(DenseMatrix::from_fn(gram.rows(), idx.len(), |i, j| eig.eigenvectors[(i, idx[j])]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn top_pencil_value_gives_fixed_point_pair() {
        for (rho, kappa) in [(0.3, 1.0), (2.0, 0.7), (10.0, 5.0)] {
            let f = f_rho(rho, kappa);
            let p = EigenPair::new(1.0, f);
            assert_abs_diff_eq!(p.plus.re, 1.0, epsilon = 1e-13);
            assert_abs_diff_eq!(p.minus.re, f, epsilon = 1e-13);
            assert!(!p.is_complex());
        }
    }

    #[test]
    fn double_root_at_critical_step() {
        for (lambda, kappa) in [(0.3_f64, 1.0), (0.8, 2.5), (-0.4, 0.6)] {
            let rho = 1.0 / (kappa * (1.0 - lambda * lambda).sqrt());
            let f = f_rho(rho, kappa);
            let p = EigenPair::new(lambda, f);
            assert_abs_diff_eq!(p.plus.re, p.minus.re, epsilon = 1e-7);
            assert_abs_diff_eq!(p.magnitude(), (1.0 + lambda * f) / 2.0, epsilon = 1e-7);
        }
    }

    #[test]
    fn complex_regime_modulus() {
        // conjugate pair: |φ|² equals the constant term f(λ̄+1)/2
        let (rho, kappa, lambda) = (3.0, 1.0, 0.2);
        let f = f_rho(rho, kappa);
        let p = EigenPair::new(lambda, f);
        assert!(p.is_complex());
        let expected = (rho * kappa * (lambda + 1.0) / (2.0 * (1.0 + rho * kappa))).sqrt();
        assert_abs_diff_eq!(p.magnitude(), expected, epsilon = 1e-14);
        assert_abs_diff_eq!(p.plus.norm(), p.minus.norm(), epsilon = 1e-15);
    }

    #[test]
    fn geometric_sequence() {
        let d: Vec<f64> = (0..60).map(|k| 3.0 * 0.5f64.powi(k)).collect();
        assert_abs_diff_eq!(contraction_factor(&d, 1e-14).unwrap(), 0.5, epsilon = 1e-6);
    }

    #[test]
    fn stagnation_and_short_traces() {
        assert!(matches!(contraction_factor(&[1.0; 40], 1e-14), Err(Error::Stagnated)));
        assert!(matches!(contraction_factor(&[1.0, 0.5, 0.25], 1e-14), Err(Error::ShortTrace(_))));
    }
}

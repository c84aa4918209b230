use crate::error::{Error, Result};
use crate::graph::{build_matrices, GraphMatrices, WeightedGraph};
use crate::linalg::{self, norm2, norm_inf, sym_eig, tol, Cholesky, DenseMatrix};

/// `min ½ xᵀQx + qᵀx` subject to `Ex + Fz = 0`, with `E`, `F` of full column rank.
#[derive(Debug, Clone)]
pub struct EqualityQp {
    pub q: DenseMatrix,
    pub lin: Vec<f64>,
    pub e: DenseMatrix,
    pub f: DenseMatrix,
}

impl EqualityQp {
    pub fn new(q: DenseMatrix, lin: Vec<f64>, e: DenseMatrix, f: DenseMatrix) -> Result<Self> {
        let n = q.rows();
        if lin.len() != n || e.cols() != n || f.rows() != e.rows() {
            return Err(Error::Dimension(format!(
                "Q {}x{}, q {}, E {}x{}, F {}x{}",
                q.rows(),
                q.cols(),
                lin.len(),
                e.rows(),
                e.cols(),
                f.rows(),
                f.cols()
            )));
        }
        Cholesky::factor(&q)?;
        full_column_rank(&e, "E")?;
        full_column_rank(&f, "F")?;
        Ok(Self { q, lin, e, f })
    }

    /// Primal optimum `(x*, z*)`, via a null-space parametrization of `[E F]`.
    pub fn solve(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let (n, m) = (self.e.cols(), self.f.cols());
        let k = DenseMatrix::from_fn(self.e.rows(), n + m, |i, j| if j < n { self.e[(i, j)] } else { self.f[(i, j - n)] });
        let gram = k.transpose().matmul(&k);
        let eig = sym_eig(&gram)?;
        let cutoff = 1e-10 * eig.max().max(1.0);
        let null: Vec<usize> = (0..n + m).filter(|&i| eig.eigenvalues[i].abs() <= cutoff).collect();
        if null.is_empty() {
            return Ok((vec![0.0; n], vec![0.0; m]));
        }
        let basis = DenseMatrix::from_fn(n + m, null.len(), |i, j| eig.eigenvectors[(i, null[j])]);
        let nx = DenseMatrix::from_fn(n, null.len(), |i, j| basis[(i, j)]);
        let h = nx.transpose().matmul(&self.q).matmul(&nx).symmetrized();
        let g = nx.tr_matvec(&self.lin);
        let y = Cholesky::factor(&h)?.solve(&g.iter().map(|v| -v).collect::<Vec<_>>());
        let xz = basis.matvec(&y);
        Ok((xz[..n].to_vec(), xz[n..].to_vec()))
    }
}

fn full_column_rank(m: &DenseMatrix, what: &str) -> Result<Cholesky> {
    Cholesky::factor(&m.transpose().matmul(m).symmetrized())
        .map_err(|_| Error::RankDeficient { what: format!("{what} ({}x{}) lacks full column rank", m.rows(), m.cols()) })
}

/// Scaling matrix `R = √κ R_Q (EᵀE)⁻¹ Eᵀ` with `R_Q` the upper Cholesky factor of `Q`.
///
/// Then `(RE)ᵀ(RE) = κQ` and `R(Ex + Fz) = 0` holds exactly when `x = −E†Fz`.
pub fn build_scaling(e: &DenseMatrix, q: &DenseMatrix, kappa: f64) -> Result<DenseMatrix> {
    if !(kappa > 0.0) {
        return Err(Error::Config(format!("kappa must be positive, got {kappa}")));
    }
    let ete = full_column_rank(e, "E")?;
    let r_q = Cholesky::factor(q)?.upper();
    let pinv = ete.solve_matrix(&e.transpose());
    Ok(r_q.matmul(&pinv).scale(kappa.sqrt()))
}

/// Scaled constraint pair `(Ē, F̄) = (RE, RF)` with step-size `ρ`.
#[derive(Debug, Clone)]
pub struct ScaledProblem {
    pub ebar: DenseMatrix,
    pub fbar: DenseMatrix,
    pub rho: f64,
    /// Set when `ĒᵀĒ = κQ` is known to hold.
    pub kappa: Option<f64>,
}

impl ScaledProblem {
    pub fn new(ebar: DenseMatrix, fbar: DenseMatrix, rho: f64) -> Result<Self> {
        if !(rho > 0.0) {
            return Err(Error::Config(format!("step-size must be positive, got {rho}")));
        }
        if ebar.rows() != fbar.rows() {
            return Err(Error::Dimension("Ē and F̄ row counts differ".into()));
        }
        Ok(Self { ebar, fbar, rho, kappa: None })
    }

    pub fn from_scaling(qp: &EqualityQp, r: &DenseMatrix, rho: f64) -> Result<Self> {
        Self::new(r.matmul(&qp.e), r.matmul(&qp.f), rho)
    }

    /// Edge-variable consensus constraints `[√W B_O; √W B_I] x − [√W; √W] z = 0`.
    ///
    /// Needs strictly positive weights so that `F̄` has full column rank.
    pub fn consensus(g: &WeightedGraph, rho: f64) -> Result<Self> {
        if let Some(e) = g.edges().iter().find(|e| !(e.w > 0.0)) {
            return Err(Error::InvalidGraph(format!("edge ({}, {}) has zero weight", e.i, e.j)));
        }
        let gm = build_matrices(g);
        let sqrt_w = DenseMatrix::from_diag(&g.weights().iter().map(|w| w.sqrt()).collect::<Vec<_>>());
        let ebar = DenseMatrix::vstack(&sqrt_w.matmul(&gm.b_out), &sqrt_w.matmul(&gm.b_in));
        let fbar = DenseMatrix::vstack(&sqrt_w, &sqrt_w).scale(-1.0);
        Self::new(ebar, fbar, rho)
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = Some(kappa);
        self
    }

    /// `‖ĒᵀĒ − κQ‖∞ / ‖κQ‖∞`.
    pub fn kappa_residual(&self, q: &DenseMatrix, kappa: f64) -> f64 {
        let ete = self.ebar.transpose().matmul(&self.ebar);
        let kq = q.scale(kappa);
        ete.sub(&kq).norm_inf() / kq.norm_inf()
    }

    /// `Π_{R(F̄)} = F̄(F̄ᵀF̄)⁻¹F̄ᵀ`.
    pub fn range_projector(&self) -> Result<DenseMatrix> {
        let ftf = full_column_rank(&self.fbar, "F̄")?;
        Ok(self.fbar.matmul(&ftf.solve_matrix(&self.fbar.transpose())).symmetrized())
    }
}

/// Recorded ADMM run.
#[derive(Debug, Clone)]
pub struct AdmmTrace {
    /// `x⁰, x¹, …`.
    pub iterates: Vec<Vec<f64>>,
    /// Scaled primal residual `‖Ēx^k + F̄z^k‖₂` (zero at index 0 when `z⁰` is consistent).
    pub residuals: Vec<f64>,
    /// `‖x^k − x*‖₂`.
    pub distances: Vec<f64>,
    /// `‖Π_{R(F̄)} u^k‖∞`.
    pub dual_range: Vec<f64>,
}

impl AdmmTrace {
    pub fn len(&self) -> usize {
        self.iterates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterates.is_empty()
    }

    pub fn last(&self) -> &[f64] {
        self.iterates.last().expect("trace is never empty")
    }

    /// `‖x^k − x*‖₂ / ‖x⁰ − x*‖₂`.
    pub fn normalized_errors(&self) -> Vec<f64> {
        let d0 = self.distances[0];
        self.distances.iter().map(|d| if d0 > 0.0 { d / d0 } else { 0.0 }).collect()
    }
}

/// Options for [`AdmmEngine::iterate`].
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub iters: usize,
    /// Stop once the distance to the fixed point drops below this value.
    pub stop_distance: Option<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { iters: 200, stop_distance: Some(tol::CONVERGED_DISTANCE) }
    }
}

impl RunOptions {
    pub fn fixed(iters: usize) -> Self {
        Self { iters, stop_distance: None }
    }
}

/// Scaled ADMM for an equality-constrained QP; the x-update system is factored once.
#[derive(Debug, Clone)]
pub struct AdmmEngine {
    pub q: DenseMatrix,
    pub lin: Vec<f64>,
    pub problem: ScaledProblem,
    x_system: Cholesky,
    z_system: Cholesky,
}

impl AdmmEngine {
    pub fn new(q: DenseMatrix, lin: Vec<f64>, problem: ScaledProblem) -> Result<Self> {
        if q.rows() != problem.ebar.cols() || lin.len() != q.rows() {
            return Err(Error::Dimension("Q, q and Ē disagree on the primal dimension".into()));
        }
        let ete = problem.ebar.transpose().matmul(&problem.ebar);
        let x_system = Cholesky::factor(&q.add(&ete.scale(problem.rho)).symmetrized())?;
        let z_system = full_column_rank(&problem.fbar, "F̄")?;
        Ok(Self { q, lin, problem, x_system, z_system })
    }

    /// Centralized engine for the consensus problem on `g` with diagonal curvatures.
    pub fn consensus(qdiag: &[f64], lin: &[f64], g: &WeightedGraph, rho: f64) -> Result<Self> {
        let problem = ScaledProblem::consensus(g, rho)?;
        Self::new(DenseMatrix::from_diag(qdiag), lin.to_vec(), problem)
    }

    pub fn dim(&self) -> usize {
        self.q.rows()
    }

    /// `z⁰` with `F̄z⁰ = −Π_{R(F̄)} Ēx⁰`, i.e. the z-update applied to `x⁰` with zero duals.
    pub fn consistent_z0(&self, x0: &[f64]) -> Vec<f64> {
        self.z_update(&self.problem.ebar.matvec(x0), None)
    }

    fn z_update(&self, ex: &[f64], u: Option<&[f64]>) -> Vec<f64> {
        let mut v = ex.to_vec();
        if let Some(u) = u {
            linalg::axpy(1.0, u, &mut v);
        }
        let rhs: Vec<f64> = self.problem.fbar.tr_matvec(&v).iter().map(|x| -x).collect();
        self.z_system.solve(&rhs)
    }

    /// Runs the scaled ADMM iterations
    ///
    /// ```text
    /// x⁺ = (Q + ρĒᵀĒ)⁻¹(−q − ρĒᵀ(F̄z + u))
    /// z⁺ = −(F̄ᵀF̄)⁻¹F̄ᵀ(Ēx⁺ + u)
    /// u⁺ = u + Ēx⁺ + F̄z⁺
    /// ```
    ///
    /// Distances are measured against `fixed_point`, or against the QP optimum when `None`.
    pub fn iterate(
        &self,
        x0: &[f64],
        z0: &[f64],
        u0: &[f64],
        opts: &RunOptions,
        fixed_point: Option<&[f64]>,
    ) -> Result<AdmmTrace> {
        let sp = &self.problem;
        if x0.len() != self.dim() || z0.len() != sp.fbar.cols() || u0.len() != sp.ebar.rows() {
            return Err(Error::Dimension("initial point has the wrong shape".into()));
        }
        let target = match fixed_point {
            Some(p) => p.to_vec(),
            None => EqualityQp {
                q: self.q.clone(),
                lin: self.lin.clone(),
                e: sp.ebar.clone(),
                f: sp.fbar.clone(),
            }
            .solve()?
            .0,
        };
        let proj = sp.range_projector()?;
        let (mut z, mut u) = (z0.to_vec(), u0.to_vec());
        let residual = |ex: &[f64], z: &[f64]| {
            let mut r = sp.fbar.matvec(z);
            linalg::axpy(1.0, ex, &mut r);
            norm2(&r)
        };
        let mut trace = AdmmTrace {
            iterates: vec![x0.to_vec()],
            residuals: vec![residual(&sp.ebar.matvec(x0), &z)],
            distances: vec![norm2(&linalg::sub(x0, &target))],
            dual_range: vec![norm_inf(&proj.matvec(&u))],
        };
        for _ in 0..opts.iters {
            let mut w = sp.fbar.matvec(&z);
            linalg::axpy(1.0, &u, &mut w);
            let etw = sp.ebar.tr_matvec(&w);
            let rhs: Vec<f64> = self.lin.iter().zip(&etw).map(|(q, v)| -q - sp.rho * v).collect();
            let x = self.x_system.solve(&rhs);
            let ex = sp.ebar.matvec(&x);
            z = self.z_update(&ex, Some(&u));
            let fz = sp.fbar.matvec(&z);
            for ((ui, exi), fzi) in u.iter_mut().zip(&ex).zip(&fz) {
                *ui += exi + fzi;
            }
            trace.residuals.push(residual(&ex, &z));
            trace.dual_range.push(norm_inf(&proj.matvec(&u)));
            let dist = norm2(&linalg::sub(&x, &target));
            trace.distances.push(dist);
            trace.iterates.push(x);
            if opts.stop_distance.is_some_and(|s| dist < s) {
                break;
            }
        }
        Ok(trace)
    }

    /// Runs from `x⁰` with zero duals and the consistent `z⁰`.
    pub fn run(&self, x0: &[f64], opts: &RunOptions, fixed_point: Option<&[f64]>) -> Result<AdmmTrace> {
        let z0 = self.consistent_z0(x0);
        let u0 = vec![0.0; self.problem.ebar.rows()];
        self.iterate(x0, &z0, &u0, opts, fixed_point)
    }

    /// General iteration matrix built from the projectors onto `R(F̄)` and `N(F̄ᵀ)`.
    pub fn iteration_matrix(&self) -> Result<IterationMatrix> {
        let sp = &self.problem;
        let pr = sp.range_projector()?;
        let pn = DenseMatrix::identity(pr.rows()).sub(&pr);
        let s = self.x_system.inverse();
        let ebt = sp.ebar.transpose();
        let m11 = s.matmul(&ebt).matmul(&pr.sub(&pn)).matmul(&sp.ebar).scale(sp.rho).add(&DenseMatrix::identity(self.dim()));
        let m12 = s.matmul(&ebt).matmul(&pr).matmul(&sp.ebar).scale(-sp.rho);
        Ok(IterationMatrix { m11, m12 })
    }
}

/// Runs scaled ADMM from explicit `(x⁰, z⁰, u⁰)` for a fixed number of iterations.
pub fn admm_iterate(
    sp: &ScaledProblem,
    q: &DenseMatrix,
    qvec: &[f64],
    x0: &[f64],
    z0: &[f64],
    u0: &[f64],
    iters: usize,
) -> Result<AdmmTrace> {
    AdmmEngine::new(q.clone(), qvec.to_vec(), sp.clone())?.iterate(x0, z0, u0, &RunOptions::fixed(iters), None)
}

/// Linear map advancing `(x^k, x^{k−1})` to `(x^{k+1}, x^k)`: `M = [[M11, M12], [I, 0]]`.
#[derive(Debug, Clone)]
pub struct IterationMatrix {
    pub m11: DenseMatrix,
    pub m12: DenseMatrix,
}

impl IterationMatrix {
    pub fn dim(&self) -> usize {
        self.m11.rows()
    }

    pub fn assembled(&self) -> DenseMatrix {
        let n = self.dim();
        DenseMatrix::block2(&self.m11, &self.m12, &DenseMatrix::identity(n), &DenseMatrix::zeros(n, n))
    }

    pub fn step(&self, x: &[f64], x_prev: &[f64]) -> Vec<f64> {
        let mut next = self.m11.matvec(x);
        linalg::axpy(1.0, &self.m12.matvec(x_prev), &mut next);
        next
    }

    /// `x⁰, x¹, x², …` generated from `(x¹, x⁰)`, `iters` new points beyond `x¹`.
    pub fn recursion(&self, x1: &[f64], x0: &[f64], iters: usize) -> Vec<Vec<f64>> {
        let mut out = vec![x0.to_vec(), x1.to_vec()];
        for k in 1..=iters {
            let next = self.step(&out[k], &out[k - 1]);
            out.push(next);
        }
        out
    }
}

/// Consensus specialization: `M11 = ρ(Q+ρD)⁻¹A + I`, `M12 = −(ρ/2)(Q+ρD)⁻¹(D+A)` for diagonal `Q`.
pub fn iteration_matrix(rho: f64, gm: &GraphMatrices, qdiag: &[f64]) -> Result<IterationMatrix> {
    let n = gm.adjacency.rows();
    if qdiag.len() != n {
        return Err(Error::Dimension(format!("{} curvatures for {n} nodes", qdiag.len())));
    }
    let deg = gm.degree.diag();
    let inv: Vec<f64> = qdiag.iter().zip(&deg).map(|(q, d)| 1.0 / (q + rho * d)).collect();
    if let Some((i, _)) = qdiag.iter().enumerate().find(|(_, q)| !(**q > 0.0)) {
        return Err(Error::NonConvexLocal { index: i, value: qdiag[i] });
    }
    let a = &gm.adjacency;
    let m11 = DenseMatrix::from_fn(n, n, |i, j| rho * inv[i] * a[(i, j)] + if i == j { 1.0 } else { 0.0 });
    let m12 = DenseMatrix::from_fn(n, n, |i, j| {
        let dpa = a[(i, j)] + if i == j { deg[i] } else { 0.0 };
        -0.5 * rho * inv[i] * dpa
    });
    Ok(IterationMatrix { m11, m12 })
}

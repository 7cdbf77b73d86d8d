//! The discrete Gromov-Wasserstein problem
//!
//! ```text
//! min_{π ∈ Π(μ,ν)}  Σ_{i,j,k,l} |D_X(i,j) − D_Y(k,l)|² π_ik π_jl
//!   = Σ D_X(i,j)² μ_i μ_j + Σ D_Y(k,l)² ν_k ν_l − 2 Tr(D_X π D_Y πᵀ)
//! ```
//!
//! together with the row set `C₁ = {π ≥ 0 : π1 = μ}`, the column set
//! `C₂ = {π ≥ 0 : πᵀ1 = ν}`, the Bregman geometries used by the solvers and
//! every projection onto `C₁`, `C₂` and `C₁ ∩ C₂`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Axis, GwError, Result};
use crate::linalg::DenseMatrix;

const MARGINAL_SUM_TOL: f64 = 1e-12;
const DISTANCE_SYMMETRY_TOL: f64 = 1e-10;

/// Iterate-change threshold for [`project_intersection`].
pub const PROJECTION_TOL: f64 = 1e-10;
/// Sweep cap for [`project_intersection`].
pub const PROJECTION_MAX_SWEEPS: usize = 10_000;

/// A strictly positive probability vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal(Vec<f64>);

impl Marginal {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(GwError::Input("marginal must have at least one entry".into()));
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(GwError::Input(format!(
                "marginal weight {i} is {} (must be finite and > 0; prune zero-mass points first)",
                weights[i]
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MARGINAL_SUM_TOL {
            return Err(GwError::Input(format!("marginal sums to {total}, expected 1")));
        }
        Ok(Self(weights))
    }

    /// Rescales positive weights to unit mass.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(GwError::Input(format!("cannot normalize weights with total {total}")));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(GwError::Input("marginal must have at least one entry".into()));
        }
        Ok(Self(vec![1.0 / n as f64; n]))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Two symmetric nonnegative distance matrices and their marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct GwProblem {
    dx: DenseMatrix,
    dy: DenseMatrix,
    mu: Marginal,
    nu: Marginal,
}

fn check_distance(name: &str, d: &DenseMatrix, len: usize) -> Result<()> {
    if !d.is_square() || d.rows() != len {
        return Err(GwError::Input(format!("{name} is {}x{} but its marginal has {len} entries", d.rows(), d.cols())));
    }
    if d.as_slice().iter().any(|&v| v < 0.0) {
        return Err(GwError::Input(format!("{name} has negative entries")));
    }
    let asym = d.asymmetry();
    if asym > DISTANCE_SYMMETRY_TOL * d.max_abs().max(1.0) {
        return Err(GwError::Input(format!("{name} is not symmetric (max deviation {asym:e})")));
    }
    Ok(())
}

impl GwProblem {
    pub fn new(dx: DenseMatrix, dy: DenseMatrix, mu: Marginal, nu: Marginal) -> Result<Self> {
        check_distance("D_X", &dx, mu.len())?;
        check_distance("D_Y", &dy, nu.len())?;
        Ok(Self { dx, dy, mu, nu })
    }

    /// Same as [`GwProblem::new`] with uniform marginals.
    pub fn uniform(dx: DenseMatrix, dy: DenseMatrix) -> Result<Self> {
        let mu = Marginal::uniform(dx.rows())?;
        let nu = Marginal::uniform(dy.rows())?;
        Self::new(dx, dy, mu, nu)
    }

    pub fn dx(&self) -> &DenseMatrix {
        &self.dx
    }

    pub fn dy(&self) -> &DenseMatrix {
        &self.dy
    }

    pub fn mu(&self) -> &Marginal {
        &self.mu
    }

    pub fn nu(&self) -> &Marginal {
        &self.nu
    }

    /// `(n, m)`: the shape of every coupling for this problem.
    pub fn shape(&self) -> (usize, usize) {
        (self.mu.len(), self.nu.len())
    }

    pub(crate) fn check_coupling(&self, op: &'static str, pi: &DenseMatrix) -> Result<()> {
        if pi.shape() != self.shape() {
            return Err(GwError::Shape { op, lhs: self.shape(), rhs: pi.shape() });
        }
        Ok(())
    }

    /// `D_X π D_Y`.
    pub fn sandwich(&self, pi: &DenseMatrix) -> Result<DenseMatrix> {
        self.check_coupling("sandwich", pi)?;
        // D_Y is symmetric, so (D_X π) D_Y = (D_Y (D_X π)ᵀ)ᵀ. Putting D_Y on the
        // left lets `gemm` skip its zeros, which matters for sparse graphs;
        // each entry still sums the same products in the same order.
        Ok(self.dy.gemm(&self.dx.gemm(pi)?.transpose())?.transpose())
    }
}

/// A nonnegative transport plan. Marginal feasibility is not required.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling(DenseMatrix);

impl Coupling {
    pub fn new(plan: DenseMatrix) -> Result<Self> {
        if let Some(pos) = plan.as_slice().iter().position(|&v| v < 0.0) {
            return Err(GwError::Input(format!(
                "coupling entry ({}, {}) is negative",
                pos / plan.cols(),
                pos % plan.cols()
            )));
        }
        Ok(Self(plan))
    }

    pub(crate) fn from_nonnegative(plan: DenseMatrix) -> Self {
        debug_assert!(plan.as_slice().iter().all(|&v| v >= 0.0));
        Self(plan)
    }

    /// The independence coupling `μνᵀ`.
    pub fn outer_product(mu: &Marginal, nu: &Marginal) -> Self {
        Self(DenseMatrix::outer(mu.as_slice(), nu.as_slice()))
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.0
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    /// Entrywise mean `(a + b) / 2`.
    pub fn midpoint(a: &Coupling, b: &Coupling) -> Result<Coupling> {
        Ok(Self(a.0.add(&b.0)?.scale(0.5)))
    }

    pub fn transpose(&self) -> Coupling {
        Self(self.0.transpose())
    }

    /// Index of the largest entry in each row; ties go to the smallest column.
    pub fn row_argmax(&self) -> Vec<usize> {
        (0..self.0.rows())
            .map(|i| {
                let row = self.0.row(i);
                let mut best = 0;
                for (j, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }
}

impl AsRef<DenseMatrix> for Coupling {
    fn as_ref(&self) -> &DenseMatrix {
        &self.0
    }
}

/// Legendre function `h` behind a Bregman divergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BregmanGeometry {
    /// `h(x) = Σ x log x`, giving the generalized KL divergence.
    Kl,
    /// `h(x) = ½‖x‖²`.
    Quadratic,
}

/// `Σ D_X(i,j)² μ_i μ_j + Σ D_Y(k,l)² ν_k ν_l`.
pub fn gw_constant_term(p: &GwProblem) -> f64 {
    fn weighted_square_sum(d: &DenseMatrix, w: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, &wi) in w.iter().enumerate() {
            let mut row = 0.0;
            for (&dij, &wj) in d.row(i).iter().zip(w) {
                row += dij * dij * wj;
            }
            acc += wi * row;
        }
        acc
    }
    weighted_square_sum(p.dx(), p.mu().as_slice()) + weighted_square_sum(p.dy(), p.nu().as_slice())
}

/// `−Tr(D_X π D_Y πᵀ)`.
pub fn quadratic_term(p: &GwProblem, pi: &Coupling) -> Result<f64> {
    bilinear_value(p, pi, pi)
}

/// The bilinear surrogate `f(π, w) = −Tr(D_X π D_Y wᵀ)`.
pub fn bilinear_value(p: &GwProblem, pi: &Coupling, w: &Coupling) -> Result<f64> {
    p.check_coupling("bilinear_value", w.matrix())?;
    Ok(-p.sandwich(pi.matrix())?.dot(w.matrix())?)
}

/// Full GW objective in compact form: constant term plus twice the quadratic
/// term. On couplings in `Π(μ,ν)` this equals the quadruple sum.
pub fn gw_objective(p: &GwProblem, pi: &Coupling) -> Result<f64> {
    Ok(gw_constant_term(p) + 2.0 * quadratic_term(p, pi)?)
}

/// `∇_π f(π, w) = −D_X w D_Y`.
pub fn grad_bilinear(p: &GwProblem, w: &Coupling) -> Result<DenseMatrix> {
    Ok(p.sandwich(w.matrix())?.scale(-1.0))
}

/// Bregman divergence `D_h(x, y)`.
///
/// The KL variant is the generalized form `Σ x log(x/y) − x + y` with
/// `0 log 0 = 0`, valid for unnormalized arguments.
pub fn bregman_div(geom: BregmanGeometry, x: &Coupling, y: &Coupling) -> Result<f64> {
    let (xm, ym) = (x.matrix(), y.matrix());
    xm.check_same_shape(ym, "bregman_div")?;
    match geom {
        BregmanGeometry::Quadratic => {
            let sq: f64 = xm.as_slice().iter().zip(ym.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum();
            Ok(0.5 * sq)
        }
        BregmanGeometry::Kl => {
            let mut acc = 0.0;
            for (idx, (&a, &b)) in xm.as_slice().iter().zip(ym.as_slice()).enumerate() {
                if a == 0.0 {
                    acc += b;
                } else if b == 0.0 {
                    return Err(GwError::Domain { index: idx });
                } else {
                    acc += a * libm::log(a / b) - a + b;
                }
            }
            Ok(acc)
        }
    }
}

pub(crate) fn scale_rows_in_place(m: &mut DenseMatrix, target: &[f64]) -> Result<()> {
    if m.rows() != target.len() {
        return Err(GwError::Shape { op: "scale_rows", lhs: m.shape(), rhs: (target.len(), 1) });
    }
    for (i, &t) in target.iter().enumerate() {
        let row = m.row_mut(i);
        let s: f64 = row.iter().sum();
        if !(s > 0.0 && s.is_finite()) {
            return Err(GwError::DegenerateScaling { axis: Axis::Row, index: i });
        }
        let factor = t / s;
        row.iter_mut().for_each(|v| *v *= factor);
    }
    Ok(())
}

pub(crate) fn scale_cols_in_place(m: &mut DenseMatrix, target: &[f64]) -> Result<()> {
    if m.cols() != target.len() {
        return Err(GwError::Shape { op: "scale_cols", lhs: m.shape(), rhs: (1, target.len()) });
    }
    let sums = m.col_sums();
    let mut factors = Vec::with_capacity(sums.len());
    for (j, (&s, &t)) in sums.iter().zip(target).enumerate() {
        if !(s > 0.0 && s.is_finite()) {
            return Err(GwError::DegenerateScaling { axis: Axis::Column, index: j });
        }
        factors.push(t / s);
    }
    for i in 0..m.rows() {
        for (v, f) in m.row_mut(i).iter_mut().zip(&factors) {
            *v *= f;
        }
    }
    Ok(())
}

pub(crate) fn scale_rows(m: &DenseMatrix, target: &[f64]) -> Result<DenseMatrix> {
    let mut out = m.clone();
    scale_rows_in_place(&mut out, target)?;
    Ok(out)
}

pub(crate) fn scale_cols(m: &DenseMatrix, target: &[f64]) -> Result<DenseMatrix> {
    let mut out = m.clone();
    scale_cols_in_place(&mut out, target)?;
    Ok(out)
}

/// `diag(μ ./ π1) π`: the KL projection onto `C₁`.
pub fn scale_rows_to_mu(pi: &Coupling, mu: &Marginal) -> Result<Coupling> {
    scale_rows(pi.matrix(), mu.as_slice()).map(Coupling::from_nonnegative)
}

/// `π diag(ν ./ πᵀ1)`: the KL projection onto `C₂`.
pub fn scale_cols_to_nu(pi: &Coupling, nu: &Marginal) -> Result<Coupling> {
    scale_cols(pi.matrix(), nu.as_slice()).map(Coupling::from_nonnegative)
}

/// Euclidean projection of `v` onto `{x ≥ 0 : Σx = mass}` by sorting and
/// thresholding.
pub fn project_simplex(v: &[f64], mass: f64) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - mass) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

fn check_len(op: &'static str, m: &DenseMatrix, rows: usize, cols: usize) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(GwError::Shape { op, lhs: (rows, cols), rhs: m.shape() });
    }
    Ok(())
}

/// Row-wise Euclidean projection of an arbitrary real matrix onto `C₁`.
pub fn euclid_project_c1(pi: &DenseMatrix, mu: &Marginal) -> Result<Coupling> {
    if pi.rows() != mu.len() {
        return Err(GwError::Shape { op: "euclid_project_c1", lhs: pi.shape(), rhs: (mu.len(), 1) });
    }
    let mut out = pi.clone();
    for (i, &mass) in mu.as_slice().iter().enumerate() {
        let projected = project_simplex(pi.row(i), mass);
        out.row_mut(i).copy_from_slice(&projected);
    }
    Ok(Coupling::from_nonnegative(out))
}

/// Column-wise Euclidean projection of an arbitrary real matrix onto `C₂`.
pub fn euclid_project_c2(pi: &DenseMatrix, nu: &Marginal) -> Result<Coupling> {
    if pi.cols() != nu.len() {
        return Err(GwError::Shape { op: "euclid_project_c2", lhs: pi.shape(), rhs: (1, nu.len()) });
    }
    let mut out = pi.clone();
    let mut column = vec![0.0; pi.rows()];
    for (j, &mass) in nu.as_slice().iter().enumerate() {
        for (i, c) in column.iter_mut().enumerate() {
            *c = pi.get(i, j);
        }
        for (i, v) in project_simplex(&column, mass).into_iter().enumerate() {
            out.set(i, j, v);
        }
    }
    Ok(Coupling::from_nonnegative(out))
}

fn marginal_gap(values: &[f64], target: &[f64]) -> f64 {
    libm::sqrt(values.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Euclidean projection onto the transportation polytope `Π(μ,ν)` by Dykstra's
/// algorithm alternating between `C₁` and `C₂`.
///
/// Stops once an outer sweep moves the iterate and both correction terms by
/// less than [`PROJECTION_TOL`] in total (Frobenius) and the row marginal is
/// met to the same tolerance. Dykstra can crawl on some inputs; if it has not
/// settled after [`PROJECTION_MAX_SWEEPS`] sweeps the projection is finished
/// by [`project_intersection_dual`] instead.
pub fn project_intersection(pi: &DenseMatrix, mu: &Marginal, nu: &Marginal) -> Result<Coupling> {
    check_len("project_intersection", pi, mu.len(), nu.len())?;
    let (n, m) = pi.shape();
    let mut x = pi.clone();
    let mut p = DenseMatrix::zeros(n, m);
    let mut q = DenseMatrix::zeros(n, m);
    for _ in 0..PROJECTION_MAX_SWEEPS {
        let y = euclid_project_c1(&x.add(&p)?, mu)?.into_matrix();
        let p_next = x.add(&p)?.sub(&y)?;
        let x_next = euclid_project_c2(&y.add(&q)?, nu)?.into_matrix();
        let q_next = y.add(&q)?.sub(&x_next)?;
        // The iterate can stall while the correction terms are still moving,
        // so all three have to settle.
        let change =
            x_next.sub(&x)?.frobenius_norm() + p_next.sub(&p)?.frobenius_norm() + q_next.sub(&q)?.frobenius_norm();
        (x, p, q) = (x_next, p_next, q_next);
        if change < PROJECTION_TOL && marginal_gap(&x.row_sums(), mu.as_slice()) < PROJECTION_TOL {
            return Ok(Coupling::from_nonnegative(x));
        }
    }
    project_intersection_dual(pi, mu, nu)
}

/// L1 marginal residual at which [`project_intersection_dual`] stops.
pub const DUAL_PROJECTION_TOL: f64 = 1e-12;
/// Newton step cap for [`project_intersection_dual`].
pub const DUAL_PROJECTION_MAX_ITER: usize = 200;

/// `(A + α1ᵀ + 1βᵀ)₊` and its support.
fn dual_plan(a: &DenseMatrix, alpha: &[f64], beta: &[f64]) -> (DenseMatrix, Vec<bool>) {
    let m = beta.len();
    let mut support = vec![false; a.rows() * m];
    let x = DenseMatrix::from_fn(a.rows(), m, |i, j| {
        let v = a.get(i, j) + alpha[i] + beta[j];
        support[i * m + j] = v > 0.0;
        v.max(0.0)
    });
    (x, support)
}

/// `(μ − π1, ν − πᵀ1)`.
fn dual_gradient(x: &DenseMatrix, mu: &[f64], nu: &[f64]) -> Vec<f64> {
    let (rows, cols) = (x.row_sums(), x.col_sums());
    mu.iter().zip(&rows).chain(nu.iter().zip(&cols)).map(|(t, s)| t - s).collect()
}

fn marginal_residual(x: &DenseMatrix, mu: &[f64], nu: &[f64]) -> f64 {
    dual_gradient(x, mu, nu).iter().map(|v| v.abs()).sum()
}

fn dual_value(x: &DenseMatrix, alpha: &[f64], beta: &[f64], mu: &[f64], nu: &[f64]) -> f64 {
    let linear: f64 = alpha.iter().zip(mu).chain(beta.iter().zip(nu)).map(|(z, w)| z * w).sum();
    linear - 0.5 * x.as_slice().iter().map(|v| v * v).sum::<f64>()
}

/// `(J + δI) v` for the generalized Hessian `J` of the dual on `support`.
fn dual_hessian_apply(support: &[bool], n: usize, m: usize, delta: f64, v: &[f64], out: &mut [f64]) {
    out.iter_mut().zip(v).for_each(|(o, x)| *o = delta * x);
    for i in 0..n {
        for j in 0..m {
            if support[i * m + j] {
                let s = v[i] + v[n + j];
                out[i] += s;
                out[n + j] += s;
            }
        }
    }
}

/// Conjugate gradients for the symmetric positive definite `(J + δI) d = g`.
fn dual_newton_direction(support: &[bool], n: usize, m: usize, delta: f64, g: &[f64]) -> Vec<f64> {
    let len = n + m;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut d = vec![0.0; len];
    let mut r = g.to_vec();
    let mut dir = r.clone();
    let mut jd = vec![0.0; len];
    let mut rr = dot(&r, &r);
    let stop = rr * 1e-28;
    for _ in 0..4 * len + 10 {
        if rr <= stop {
            break;
        }
        dual_hessian_apply(support, n, m, delta, &dir, &mut jd);
        let step = rr / dot(&dir, &jd);
        for k in 0..len {
            d[k] += step * dir[k];
            r[k] -= step * jd[k];
        }
        let rr_next = dot(&r, &r);
        let ratio = rr_next / rr;
        for k in 0..len {
            dir[k] = r[k] + ratio * dir[k];
        }
        rr = rr_next;
    }
    d
}

/// Euclidean projection onto `Π(μ,ν)` through its dual: maximizes
/// `αᵀμ + βᵀν − ½‖(A + α1ᵀ + 1βᵀ)₊‖²` by semismooth Newton with an Armijo
/// line search.
///
/// Every candidate has the KKT form `(A + α1ᵀ + 1βᵀ)₊`, so once both marginals
/// hold to [`DUAL_PROJECTION_TOL`] (L1) the result is the projection.
pub fn project_intersection_dual(a: &DenseMatrix, mu: &Marginal, nu: &Marginal) -> Result<Coupling> {
    check_len("project_intersection_dual", a, mu.len(), nu.len())?;
    let (n, m) = a.shape();
    let (mu, nu) = (mu.as_slice(), nu.as_slice());
    // Shift every row so that its mean matches the row mass.
    let mut alpha: Vec<f64> = (0..n).map(|i| (mu[i] - a.row(i).iter().sum::<f64>()) / m as f64).collect();
    let mut beta = vec![0.0; m];
    let (mut x, mut support) = dual_plan(a, &alpha, &beta);
    let mut value = dual_value(&x, &alpha, &beta, mu, nu);
    let mut residual = f64::INFINITY;
    for _ in 0..DUAL_PROJECTION_MAX_ITER {
        let g = dual_gradient(&x, mu, nu);
        residual = g.iter().map(|v| v.abs()).sum();
        if residual <= DUAL_PROJECTION_TOL {
            return Ok(Coupling::from_nonnegative(x));
        }
        let d = dual_newton_direction(&support, n, m, residual.clamp(1e-8, 1.0), &g);
        let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        let mut t = 1.0;
        loop {
            let alpha_t: Vec<f64> = alpha.iter().zip(&d[..n]).map(|(z, s)| z + t * s).collect();
            let beta_t: Vec<f64> = beta.iter().zip(&d[n..]).map(|(z, s)| z + t * s).collect();
            let (x_t, support_t) = dual_plan(a, &alpha_t, &beta_t);
            let value_t = dual_value(&x_t, &alpha_t, &beta_t, mu, nu);
            // Near the optimum the dual gains drop below rounding, so a step
            // that shrinks the marginal residual is accepted as well.
            if value_t >= value + 1e-4 * t * slope || marginal_residual(&x_t, mu, nu) < residual {
                (alpha, beta, x, support, value) = (alpha_t, beta_t, x_t, support_t, value_t);
                break;
            }
            t *= 0.5;
            if t < 1e-20 {
                return Err(GwError::ProjectionNotConverged { sweeps: DUAL_PROJECTION_MAX_ITER, residual });
            }
        }
    }
    Err(GwError::ProjectionNotConverged { sweeps: DUAL_PROJECTION_MAX_ITER, residual })
}

/// `‖πᵀ1 − ν‖ + ‖π1 − μ‖` (Euclidean norms).
pub fn infeasibility_error(pi: &DenseMatrix, mu: &Marginal, nu: &Marginal) -> Result<f64> {
    check_len("infeasibility_error", pi, mu.len(), nu.len())?;
    Ok(marginal_gap(&pi.col_sums(), nu.as_slice()) + marginal_gap(&pi.row_sums(), mu.as_slice()))
}

//! Iterative GW solvers behind one [`solve`] entry point.
//!
//! * KL-BAPG and quadratic BAPG alternate a projected gradient step on the
//!   row set `C₁` (producing `π`) with one on the column set `C₂` (producing
//!   `w`), using the bilinear gradient `D_X(·)D_Y` and a Bregman proximal term.
//!   One matrix pair per iteration, no inner loop.
//! * BPG runs a Sinkhorn loop on `π ⊙ exp(2 D_X π D_Y / ρ)` every outer step;
//!   BPG-S truncates that loop to a single row and column sweep.
//! * eBPG runs Sinkhorn on the Gibbs kernel `exp(2 D_X π D_Y / ε)` (no
//!   proximal factor), i.e. one step of entropic GW.
//!
//! Every outer iteration appends a [`TraceRecord`]. The run stops when
//! `‖π^{k+1} − π^k‖ / ‖π^k‖ ≤ rel_tol` or after `max_iter` iterations.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{GwError, Result};
use crate::gw::{
    bregman_div, euclid_project_c1, euclid_project_c2, gw_constant_term, infeasibility_error, scale_cols,
    scale_cols_in_place, scale_rows, scale_rows_in_place, BregmanGeometry, Coupling, GwProblem,
};
use crate::linalg::{DenseMatrix, EXP_CLAMP};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    KlBapg,
    QuadBapg,
    Bpg,
    BpgS,
    Ebpg,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::KlBapg, Method::QuadBapg, Method::Bpg, Method::BpgS, Method::Ebpg];

    pub fn name(self) -> &'static str {
        match self {
            Method::KlBapg => "kl-bapg",
            Method::QuadBapg => "quad-bapg",
            Method::Bpg => "bpg",
            Method::BpgS => "bpg-s",
            Method::Ebpg => "ebpg",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }

    /// Geometry of the proximal term for the two BAPG variants.
    pub fn bapg_geometry(self) -> Option<BregmanGeometry> {
        match self {
            Method::KlBapg => Some(BregmanGeometry::Kl),
            Method::QuadBapg => Some(BregmanGeometry::Quadratic),
            _ => None,
        }
    }

    /// Methods that multiply by the previous plan and so need it positive.
    fn needs_positive_init(self) -> bool {
        matches!(self, Method::KlBapg | Method::Bpg | Method::BpgS)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// `μνᵀ`.
    OuterProduct,
    /// Every entry `1 / (nm)`.
    Uniform,
    Custom(Coupling),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    /// Proximal weight for BAPG/BPG/BPG-S; entropic weight ε for eBPG.
    pub rho: f64,
    pub max_iter: usize,
    pub rel_tol: f64,
    /// Sinkhorn iteration cap for BPG and eBPG.
    pub inner_max_iter: usize,
    /// Sinkhorn tolerance on the L1 row-marginal error.
    pub inner_tol: f64,
    pub init: Init,
    /// Keep every `(π, w)` pair, starting with the initial one, in the report.
    pub record_iterates: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::KlBapg,
            rho: 0.1,
            max_iter: 2000,
            rel_tol: 1e-6,
            inner_max_iter: 1000,
            inner_tol: 1e-9,
            init: Init::OuterProduct,
            record_iterates: false,
        }
    }
}

impl SolverConfig {
    pub fn new(method: Method, rho: f64) -> Self {
        Self { method, rho, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(GwError::Parameter(format!("rho must be finite and > 0, got {}", self.rho)));
        }
        if !(self.rel_tol > 0.0) || !(self.inner_tol > 0.0) {
            return Err(GwError::Parameter("tolerances must be > 0".into()));
        }
        if self.max_iter == 0 || self.inner_max_iter == 0 {
            return Err(GwError::Parameter("iteration caps must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    /// 1-based outer iteration.
    pub iter: usize,
    /// Full GW objective (compact form, constant included) at `π`.
    pub objective: f64,
    /// Value of the function the method descends: `f(π,w) + ρ D_h(π,w)` for
    /// BAPG, the GW objective for BPG/BPG-S, and the entropic objective
    /// `GW(π) + 2ε Σ π(log π − 1)` for eBPG. The factor 2 matches the kernel
    /// `exp(2 D_X π D_Y / ε)`: each eBPG step minimizes the linearization of
    /// exactly this function.
    pub potential: f64,
    /// Marginal violation of `π`.
    pub infeasibility: f64,
    pub step_rel_change: f64,
    /// `D_h(π^{k+1}, w^k) − D_h(w^k, π^{k+1})`; zero outside BAPG.
    pub asym_error_increment: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub pi: Coupling,
    /// Second BAPG block; equals `pi` for the other methods.
    pub w: Coupling,
    /// `(π + w) / 2`.
    pub averaged: Coupling,
    pub trace: Vec<TraceRecord>,
    pub converged: bool,
    pub iterations: usize,
    /// Some exponent was clamped during the run.
    pub saturated: bool,
    /// `(π^k, w^k)` for `k = 0..=iterations` when requested.
    pub iterates: Option<Vec<(Coupling, Coupling)>>,
}

/// Result of one BAPG iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct BapgStep {
    /// Satisfies the row marginal.
    pub pi: Coupling,
    /// Satisfies the column marginal.
    pub w: Coupling,
    pub saturated: bool,
    /// `D_X π D_Y` for the new `pi`, reused by the caller.
    sandwich_pi: DenseMatrix,
}

/// Smallest entry the exponential-family updates produce. Anything below it
/// carries no usable mass, and keeping entries (and their products and
/// squares) in the normal floating-point range avoids subnormal arithmetic,
/// which is more than ten times slower on common hardware.
pub const PLAN_FLOOR: f64 = 1e-100;

/// `max(plan ⊙ exp((g − shift)/scale), PLAN_FLOOR)` where the shift is the
/// per-row or per-column maximum of `g`. The shift cancels in the subsequent
/// row or column normalization and keeps every exponent ≤ 0; exponents below
/// `−EXP_CLAMP` are clamped and reported as saturation.
fn shifted_gibbs(
    plan: Option<&DenseMatrix>,
    g: &DenseMatrix,
    scale: f64,
    by_rows: bool,
) -> Result<(DenseMatrix, bool)> {
    let (n, m) = g.shape();
    let maxes: Vec<f64> = if by_rows {
        (0..n).map(|i| g.row(i).iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect()
    } else {
        let mut maxes = alloc::vec![f64::NEG_INFINITY; m];
        for i in 0..n {
            for (mx, &v) in maxes.iter_mut().zip(g.row(i)) {
                *mx = mx.max(v);
            }
        }
        maxes
    };
    let mut saturated = false;
    let mut data = Vec::with_capacity(n * m);
    for i in 0..n {
        let plan_row = plan.map(|p| p.row(i));
        for (j, &v) in g.row(i).iter().enumerate() {
            let shift = if by_rows { maxes[i] } else { maxes[j] };
            let arg = (v - shift) / scale;
            if !arg.is_finite() {
                return Err(GwError::Parameter(format!("non-finite exponent at ({i}, {j})")));
            }
            if arg < -EXP_CLAMP {
                saturated = true;
            }
            let e = libm::exp(arg.max(-EXP_CLAMP));
            let weight = plan_row.map_or(1.0, |r| r[j]);
            // Decide the floor before multiplying so no subnormal is formed.
            data.push(if e < PLAN_FLOOR && weight <= 1.0 { PLAN_FLOOR } else { (weight * e).max(PLAN_FLOOR) });
        }
    }
    Ok((DenseMatrix::new(n, m, data)?, saturated))
}

/// Raises entries below [`PLAN_FLOOR`] to it after a scaling step. The
/// marginals move by at most `PLAN_FLOOR` per entry.
fn floor_positive(m: DenseMatrix) -> DenseMatrix {
    m.map(|v| v.max(PLAN_FLOOR))
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(GwError::Parameter(format!("rho must be finite and > 0, got {rho}")));
    }
    Ok(())
}

/// One KL-BAPG iteration from `w`:
///
/// ```text
/// π ← diag(μ ./ K1) K,        K = w ⊙ exp(D_X w D_Y / ρ)
/// w ← K' diag(ν ./ K'ᵀ1),     K' = π ⊙ exp(D_X π D_Y / ρ)
/// ```
pub fn kl_bapg_step(p: &GwProblem, w: &Coupling, rho: f64) -> Result<BapgStep> {
    check_rho(rho)?;
    let g = p.sandwich(w.matrix())?;
    let (k, sat1) = shifted_gibbs(Some(w.matrix()), &g, rho, true)?;
    let pi = floor_positive(scale_rows(&k, p.mu().as_slice())?);
    let g_pi = p.sandwich(&pi)?;
    let (k2, sat2) = shifted_gibbs(Some(&pi), &g_pi, rho, false)?;
    let w_next = floor_positive(scale_cols(&k2, p.nu().as_slice())?);
    Ok(BapgStep {
        pi: Coupling::from_nonnegative(pi),
        w: Coupling::from_nonnegative(w_next),
        saturated: sat1 || sat2,
        sandwich_pi: g_pi,
    })
}

/// One quadratic-geometry BAPG iteration from `w`:
///
/// ```text
/// π ← Proj_{C₁}(w + D_X w D_Y / ρ)
/// w ← Proj_{C₂}(π + D_X π D_Y / ρ)
/// ```
pub fn quad_bapg_step(p: &GwProblem, w: &Coupling, rho: f64) -> Result<BapgStep> {
    check_rho(rho)?;
    let g = p.sandwich(w.matrix())?;
    let pi = euclid_project_c1(&w.matrix().add(&g.scale(1.0 / rho))?, p.mu())?;
    let g_pi = p.sandwich(pi.matrix())?;
    let w_next = euclid_project_c2(&pi.matrix().add(&g_pi.scale(1.0 / rho))?, p.nu())?;
    Ok(BapgStep { pi, w: w_next, saturated: false, sandwich_pi: g_pi })
}

/// Sinkhorn balancing of a nonnegative kernel onto `Π(μ,ν)`.
///
/// Each iteration scales rows then columns, then measures the L1 row-marginal
/// error. With `max_iter == 1` exactly one sweep is performed and no
/// convergence is demanded; otherwise hitting the cap above `tol` is an error.
pub fn sinkhorn(
    kernel: &DenseMatrix,
    mu: &[f64],
    nu: &[f64],
    max_iter: usize,
    tol: f64,
) -> Result<(DenseMatrix, usize)> {
    let mut plan = kernel.clone();
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        scale_rows_in_place(&mut plan, mu)?;
        scale_cols_in_place(&mut plan, nu)?;
        residual = (0..plan.rows()).map(|i| (plan.row(i).iter().sum::<f64>() - mu[i]).abs()).sum();
        if residual <= tol || max_iter == 1 {
            return Ok((plan, it));
        }
    }
    Err(GwError::InnerNotConverged { iterations: max_iter, residual })
}

fn check_positive(pi: &Coupling) -> Result<()> {
    if pi.matrix().as_slice().iter().any(|&v| !(v > 0.0)) {
        return Err(GwError::Parameter("plan must be strictly positive".into()));
    }
    Ok(())
}

fn bpg_kernel(p: &GwProblem, pi: &Coupling, g: &DenseMatrix, rho: f64) -> Result<(DenseMatrix, bool)> {
    p.check_coupling("bpg", pi.matrix())?;
    shifted_gibbs(Some(pi.matrix()), &g.scale(2.0), rho, true)
}

/// One BPG outer iteration: Sinkhorn on `π ⊙ exp(2 D_X π D_Y / ρ)` to
/// `inner_tol`.
pub fn bpg_step(p: &GwProblem, pi: &Coupling, rho: f64, inner_max_iter: usize, inner_tol: f64) -> Result<Coupling> {
    check_rho(rho)?;
    check_positive(pi)?;
    let g = p.sandwich(pi.matrix())?;
    let (k, _) = bpg_kernel(p, pi, &g, rho)?;
    let (plan, _) = sinkhorn(&k, p.mu().as_slice(), p.nu().as_slice(), inner_max_iter, inner_tol)?;
    Ok(Coupling::from_nonnegative(plan))
}

/// One BPG-S outer iteration: the BPG kernel followed by a single row and
/// column scaling.
pub fn bpg_s_step(p: &GwProblem, pi: &Coupling, rho: f64) -> Result<Coupling> {
    bpg_step(p, pi, rho, 1, f64::INFINITY)
}

/// One eBPG outer iteration: Sinkhorn on the Gibbs kernel
/// `exp(2 D_X π D_Y / ε)`.
pub fn ebpg_step(
    p: &GwProblem,
    pi: &Coupling,
    epsilon: f64,
    inner_max_iter: usize,
    inner_tol: f64,
) -> Result<Coupling> {
    check_rho(epsilon)?;
    let g = p.sandwich(pi.matrix())?;
    let (k, _) = shifted_gibbs(None, &g.scale(2.0), epsilon, true)?;
    let (plan, _) = sinkhorn(&k, p.mu().as_slice(), p.nu().as_slice(), inner_max_iter, inner_tol)?;
    Ok(Coupling::from_nonnegative(plan))
}

/// `Σ π (log π − 1)` with `0 log 0 = 0`.
pub fn neg_entropy(pi: &Coupling) -> f64 {
    pi.matrix().as_slice().iter().map(|&v| if v > 0.0 { v * (libm::log(v) - 1.0) } else { 0.0 }).sum()
}

/// BAPG potential `f(π, w) + ρ D_h(π, w)`. The indicator terms vanish on
/// BAPG iterates since `π ∈ C₁` and `w ∈ C₂`.
pub fn bapg_potential(p: &GwProblem, geom: BregmanGeometry, rho: f64, pi: &Coupling, w: &Coupling) -> Result<f64> {
    Ok(crate::gw::bilinear_value(p, pi, w)? + rho * bregman_div(geom, pi, w)?)
}

fn initial_plan(p: &GwProblem, cfg: &SolverConfig) -> Result<Coupling> {
    let (n, m) = p.shape();
    let plan = match &cfg.init {
        Init::OuterProduct => Coupling::outer_product(p.mu(), p.nu()),
        Init::Uniform => Coupling::from_nonnegative(DenseMatrix::filled(n, m, 1.0 / (n * m) as f64)),
        Init::Custom(c) => {
            if c.shape() != (n, m) {
                return Err(GwError::Init(format!("expected a {n}x{m} plan, got {:?}", c.shape())));
            }
            c.clone()
        }
    };
    if plan.matrix().frobenius_norm() == 0.0 {
        return Err(GwError::Init("initial plan is identically zero".into()));
    }
    if cfg.method.needs_positive_init() && plan.matrix().as_slice().iter().any(|&v| !(v > 0.0)) {
        return Err(GwError::Init(format!("{} needs a strictly positive initial plan", cfg.method.name())));
    }
    Ok(plan)
}

fn rel_change(next: &DenseMatrix, prev: &DenseMatrix) -> Result<f64> {
    Ok(next.sub(prev)?.frobenius_norm() / prev.frobenius_norm())
}

/// Runs the configured method from the configured initial plan.
pub fn solve(p: &GwProblem, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let init = initial_plan(p, cfg)?;
    match cfg.method.bapg_geometry() {
        Some(geom) => solve_bapg(p, cfg, geom, init),
        None => solve_single_block(p, cfg, init),
    }
}

fn solve_bapg(p: &GwProblem, cfg: &SolverConfig, geom: BregmanGeometry, init: Coupling) -> Result<SolveReport> {
    let constant = gw_constant_term(p);
    let mut pi = init.clone();
    let mut w = init;
    let mut trace = Vec::new();
    let mut iterates = cfg.record_iterates.then(|| alloc::vec![(pi.clone(), w.clone())]);
    let mut converged = false;
    let mut saturated = false;

    for iter in 1..=cfg.max_iter {
        let step = match geom {
            BregmanGeometry::Kl => kl_bapg_step(p, &w, cfg.rho)?,
            BregmanGeometry::Quadratic => quad_bapg_step(p, &w, cfg.rho)?,
        };
        saturated |= step.saturated;
        let change = rel_change(step.pi.matrix(), pi.matrix())?;
        let quad = -step.sandwich_pi.dot(step.pi.matrix())?;
        let bilinear = -step.sandwich_pi.dot(step.w.matrix())?;
        let asym = bregman_div(geom, &step.pi, &w)? - bregman_div(geom, &w, &step.pi)?;
        trace.push(TraceRecord {
            iter,
            objective: constant + 2.0 * quad,
            potential: bilinear + cfg.rho * bregman_div(geom, &step.pi, &step.w)?,
            infeasibility: infeasibility_error(step.pi.matrix(), p.mu(), p.nu())?,
            step_rel_change: change,
            asym_error_increment: asym,
        });
        pi = step.pi;
        w = step.w;
        if let Some(list) = iterates.as_mut() {
            list.push((pi.clone(), w.clone()));
        }
        if change <= cfg.rel_tol {
            converged = true;
            break;
        }
    }

    let averaged = Coupling::midpoint(&pi, &w)?;
    Ok(SolveReport { iterations: trace.len(), pi, w, averaged, trace, converged, saturated, iterates })
}

fn solve_single_block(p: &GwProblem, cfg: &SolverConfig, init: Coupling) -> Result<SolveReport> {
    let constant = gw_constant_term(p);
    let mut pi = init;
    let mut g = p.sandwich(pi.matrix())?;
    let mut trace = Vec::new();
    let mut iterates = cfg.record_iterates.then(|| alloc::vec![(pi.clone(), pi.clone())]);
    let mut converged = false;
    let mut saturated = false;

    for iter in 1..=cfg.max_iter {
        let (kernel, sat) = match cfg.method {
            Method::Ebpg => shifted_gibbs(None, &g.scale(2.0), cfg.rho, true)?,
            _ => bpg_kernel(p, &pi, &g, cfg.rho)?,
        };
        saturated |= sat;
        let (inner_cap, inner_tol) = match cfg.method {
            Method::BpgS => (1, f64::INFINITY),
            _ => (cfg.inner_max_iter, cfg.inner_tol),
        };
        let (plan, _) = sinkhorn(&kernel, p.mu().as_slice(), p.nu().as_slice(), inner_cap, inner_tol)?;
        let next = Coupling::from_nonnegative(plan);
        let change = rel_change(next.matrix(), pi.matrix())?;
        g = p.sandwich(next.matrix())?;
        let objective = constant - 2.0 * g.dot(next.matrix())?;
        let potential = match cfg.method {
            Method::Ebpg => objective + 2.0 * cfg.rho * neg_entropy(&next),
            _ => objective,
        };
        trace.push(TraceRecord {
            iter,
            objective,
            potential,
            infeasibility: infeasibility_error(next.matrix(), p.mu(), p.nu())?,
            step_rel_change: change,
            asym_error_increment: 0.0,
        });
        pi = next;
        if let Some(list) = iterates.as_mut() {
            list.push((pi.clone(), pi.clone()));
        }
        if change <= cfg.rel_tol {
            converged = true;
            break;
        }
    }

    Ok(SolveReport {
        iterations: trace.len(),
        w: pi.clone(),
        averaged: pi.clone(),
        pi,
        trace,
        converged,
        saturated,
        iterates,
    })
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::gw::{gw_objective, Marginal};
    use crate::rng_from_seed;
    use rand::Rng;

    fn m(rows: &[&[f64]]) -> DenseMatrix {
        DenseMatrix::from_rows(rows).unwrap()
    }

    fn swap() -> DenseMatrix {
        m(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    fn antisym() -> GwProblem {
        GwProblem::uniform(swap(), swap()).unwrap()
    }

    fn quarter() -> Coupling {
        Coupling::new(DenseMatrix::filled(2, 2, 0.25)).unwrap()
    }

    fn random_sym(rng: &mut crate::GwRng, n: usize) -> DenseMatrix {
        let a = DenseMatrix::from_fn(n, n, |_, _| rng.gen::<f64>());
        DenseMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { a.get(i.min(j), i.max(j)) })
    }

    fn random_problem(seed: u64, n: usize, m: usize) -> GwProblem {
        let mut rng = rng_from_seed(seed);
        let dx = random_sym(&mut rng, n);
        let dy = random_sym(&mut rng, m);
        let mu = Marginal::normalized((0..n).map(|_| 0.5 + rng.gen::<f64>()).collect()).unwrap();
        let nu = Marginal::normalized((0..m).map(|_| 0.5 + rng.gen::<f64>()).collect()).unwrap();
        GwProblem::new(dx, dy, mu, nu).unwrap()
    }

    fn max_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
        a.sub(b).unwrap().max_abs()
    }

    #[test]
    fn uniform_is_a_kl_bapg_fixed_point() {
        let step = kl_bapg_step(&antisym(), &quarter(), 1.0).unwrap();
        assert!(max_diff(step.pi.matrix(), quarter().matrix()) < 1e-15);
        assert!(max_diff(step.w.matrix(), quarter().matrix()) < 1e-15);
        assert!(!step.saturated);
    }

    #[test]
    fn kl_step_without_geometry_is_a_scaling_pair() {
        let p = GwProblem::new(
            DenseMatrix::zeros(3, 3),
            random_sym(&mut rng_from_seed(1), 2),
            Marginal::uniform(3).unwrap(),
            Marginal::uniform(2).unwrap(),
        )
        .unwrap();
        let w = Coupling::new(m(&[&[1.0, 2.0], &[3.0, 1.0], &[1.0, 1.0]])).unwrap();
        let step = kl_bapg_step(&p, &w, 0.7).unwrap();
        let rows = scale_rows(w.matrix(), p.mu().as_slice()).unwrap();
        assert_eq!(step.pi.matrix(), &rows);
        assert_eq!(step.w.matrix(), &scale_cols(&rows, p.nu().as_slice()).unwrap());
    }

    #[test]
    fn kl_step_feasibility_and_errors() {
        let p = random_problem(4, 5, 4);
        let mut w = Coupling::outer_product(p.mu(), p.nu());
        for _ in 0..20 {
            let step = kl_bapg_step(&p, &w, 0.05).unwrap();
            for (got, want) in step.pi.matrix().row_sums().iter().zip(p.mu().as_slice()) {
                assert!((got - want).abs() < 1e-14);
            }
            for (got, want) in step.w.matrix().col_sums().iter().zip(p.nu().as_slice()) {
                assert!((got - want).abs() < 1e-14);
            }
            w = step.w;
        }
        assert!(matches!(kl_bapg_step(&p, &w, -1.0), Err(GwError::Parameter(_))));
        assert!(matches!(kl_bapg_step(&p, &w, 0.0), Err(GwError::Parameter(_))));
    }

    #[test]
    fn quad_step_examples() {
        let p = antisym();
        let diag = Coupling::new(m(&[&[0.5, 0.0], &[0.0, 0.5]])).unwrap();
        let step = quad_bapg_step(&p, &diag, 1.0).unwrap();
        assert!(max_diff(step.pi.matrix(), diag.matrix()) < 1e-12);
        assert!(max_diff(step.w.matrix(), diag.matrix()) < 1e-12);
        let step = quad_bapg_step(&p, &quarter(), 1.0).unwrap();
        assert!(max_diff(step.pi.matrix(), quarter().matrix()) < 1e-15);
        assert!(max_diff(step.w.matrix(), quarter().matrix()) < 1e-15);
    }

    #[test]
    fn quad_step_without_geometry_alternates_projections() {
        let p = GwProblem::uniform(DenseMatrix::zeros(2, 2), swap()).unwrap();
        let w = Coupling::new(m(&[&[0.9, 0.0], &[0.1, 0.0]])).unwrap();
        let step = quad_bapg_step(&p, &w, 0.3).unwrap();
        let pi = euclid_project_c1(w.matrix(), p.mu()).unwrap();
        assert_eq!(step.pi, pi);
        assert_eq!(step.w, euclid_project_c2(pi.matrix(), p.nu()).unwrap());
    }

    /// Plain alternating scaling, written independently of the library.
    fn sinkhorn_oracle(k: &DenseMatrix, mu: &[f64], nu: &[f64]) -> std::vec::Vec<std::vec::Vec<f64>> {
        let (n, m) = k.shape();
        let mut p: std::vec::Vec<std::vec::Vec<f64>> = (0..n).map(|i| k.row(i).to_vec()).collect();
        for _ in 0..100_000 {
            for (i, row) in p.iter_mut().enumerate() {
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|v| *v *= mu[i] / s);
            }
            for j in 0..m {
                let s: f64 = (0..n).map(|i| p[i][j]).sum();
                (0..n).for_each(|i| p[i][j] *= nu[j] / s);
            }
            let err: f64 = p.iter().zip(mu).map(|(r, &t)| (r.iter().sum::<f64>() - t).abs()).sum();
            if err < 1e-15 {
                break;
            }
        }
        p
    }

    #[test]
    fn huge_rho_limit_is_the_sinkhorn_plan_of_the_init() {
        for seed in 0..5 {
            let p = random_problem(100 + seed, 5, 5);
            let mut rng = rng_from_seed(seed);
            let init = DenseMatrix::from_fn(5, 5, |_, _| 0.1 + rng.gen::<f64>());
            let cfg = SolverConfig {
                init: Init::Custom(Coupling::new(init.clone()).unwrap()),
                // exp(·/ρ) differs from 1 by ~1e-9, so the plan keeps drifting
                // at that rate; stop once the scaling itself has settled.
                rel_tol: 1e-8,
                ..SolverConfig::new(Method::KlBapg, 1e8)
            };
            let report = solve(&p, &cfg).unwrap();
            let oracle = sinkhorn_oracle(&init, p.mu().as_slice(), p.nu().as_slice());
            for i in 0..5 {
                for j in 0..5 {
                    assert!((report.pi.get(i, j) - oracle[i][j]).abs() < 1e-8, "seed {seed} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn sinkhorn_examples() {
        let k = m(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let half = [0.5, 0.5];
        let (plan, iters) = sinkhorn(&k, &half, &half, 10_000, 1e-14).unwrap();
        let oracle = sinkhorn_oracle(&k, &half, &half);
        for i in 0..2 {
            for j in 0..2 {
                assert!((plan.get(i, j) - oracle[i][j]).abs() < 1e-13);
            }
        }
        assert!(iters > 1);
        let (one, iters) = sinkhorn(&k, &half, &half, 1, 1e-300).unwrap();
        assert_eq!(iters, 1);
        assert_eq!(one, scale_cols(&scale_rows(&k, &half).unwrap(), &half).unwrap());
        assert!(matches!(sinkhorn(&k, &half, &half, 2, 1e-300), Err(GwError::InnerNotConverged { iterations: 2, .. })));
        let zero_row = m(&[&[0.0, 0.0], &[1.0, 1.0]]);
        assert!(matches!(sinkhorn(&zero_row, &half, &half, 10, 1e-9), Err(GwError::DegenerateScaling { .. })));
    }

    #[test]
    fn bpg_without_geometry_projects_the_plan() {
        let p = GwProblem::uniform(DenseMatrix::zeros(2, 2), swap()).unwrap();
        let pi = Coupling::new(m(&[&[0.4, 0.1], &[0.3, 0.2]])).unwrap();
        let next = bpg_step(&p, &pi, 5.0, 10_000, 1e-15).unwrap();
        let (want, _) = sinkhorn(pi.matrix(), &[0.5, 0.5], &[0.5, 0.5], 10_000, 1e-15).unwrap();
        assert!(max_diff(next.matrix(), &want) < 1e-15);
        let zero = Coupling::new(m(&[&[0.5, 0.0], &[0.0, 0.5]])).unwrap();
        assert!(bpg_step(&p, &zero, 5.0, 10, 1e-9).is_err());
    }

    #[test]
    fn bpg_with_single_inner_sweep_is_bpg_s() {
        let p = random_problem(7, 6, 5);
        let bpg = SolverConfig { inner_max_iter: 1, max_iter: 50, ..SolverConfig::new(Method::Bpg, 5.0) };
        let bpg_s = SolverConfig { max_iter: 50, ..SolverConfig::new(Method::BpgS, 5.0) };
        let a = solve(&p, &bpg).unwrap();
        let b = solve(&p, &bpg_s).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.pi, b.pi);
        let pi = Coupling::outer_product(p.mu(), p.nu());
        assert_eq!(bpg_step(&p, &pi, 5.0, 1, 1e-9).unwrap(), bpg_s_step(&p, &pi, 5.0).unwrap());
    }

    #[test]
    fn ebpg_without_geometry_gives_the_independence_plan() {
        let p = GwProblem::new(
            DenseMatrix::zeros(3, 3),
            random_sym(&mut rng_from_seed(2), 2),
            Marginal::new(std::vec![0.2, 0.3, 0.5]).unwrap(),
            Marginal::uniform(2).unwrap(),
        )
        .unwrap();
        let start = Coupling::new(DenseMatrix::filled(3, 2, 1.0)).unwrap();
        let next = ebpg_step(&p, &start, 0.1, 1000, 1e-14).unwrap();
        assert!(max_diff(next.matrix(), Coupling::outer_product(p.mu(), p.nu()).matrix()) < 1e-15);
    }

    #[test]
    fn ebpg_with_huge_epsilon_approaches_independence() {
        for seed in 0..5 {
            let p = random_problem(20 + seed, 5, 5);
            let report = solve(&p, &SolverConfig::new(Method::Ebpg, 1e6)).unwrap();
            assert!(max_diff(report.pi.matrix(), Coupling::outer_product(p.mu(), p.nu()).matrix()) < 1e-6);
        }
    }

    #[test]
    fn ebpg_potential_is_monotone() {
        for seed in 0..20 {
            let p = random_problem(40 + seed, 5, 5);
            for eps in [0.05, 0.3, 1.0] {
                let cfg =
                    SolverConfig { max_iter: 200, inner_max_iter: 100_000, ..SolverConfig::new(Method::Ebpg, eps) };
                let report = solve(&p, &cfg).unwrap();
                for pair in report.trace.windows(2) {
                    assert!(
                        pair[1].potential <= pair[0].potential + 1e-12,
                        "seed {seed} eps {eps} iter {}",
                        pair[1].iter
                    );
                }
            }
        }
    }

    #[test]
    fn zero_geometry_converges_immediately() {
        let p = GwProblem::new(
            DenseMatrix::zeros(3, 3),
            DenseMatrix::zeros(2, 2),
            Marginal::normalized(std::vec![1.0, 2.0, 3.0]).unwrap(),
            Marginal::uniform(2).unwrap(),
        )
        .unwrap();
        for method in Method::ALL {
            let report = solve(&p, &SolverConfig::new(method, 0.1)).unwrap();
            assert!(report.converged && report.iterations <= 2, "{method:?}");
            assert!(infeasibility_error(report.pi.matrix(), p.mu(), p.nu()).unwrap() < 1e-12);
            assert!(gw_objective(&p, &report.pi).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn report_invariants_and_determinism() {
        let p = random_problem(9, 6, 4);
        for method in Method::ALL {
            let cfg = SolverConfig {
                max_iter: 30,
                record_iterates: true,
                ..SolverConfig::new(method, if method == Method::Ebpg { 0.5 } else { 0.2 })
            };
            let a = solve(&p, &cfg).unwrap();
            assert_eq!(a.trace.len(), a.iterations);
            assert!(a.trace.iter().enumerate().all(|(k, r)| r.iter == k + 1));
            assert_eq!(a.averaged, Coupling::midpoint(&a.pi, &a.w).unwrap());
            assert_eq!(a.iterates.as_ref().unwrap().len(), a.iterations + 1);
            if method.bapg_geometry().is_none() {
                assert_eq!(a.pi, a.w);
                assert!(a.trace.iter().all(|r| r.asym_error_increment == 0.0));
            }
            let b = solve(&p, &cfg).unwrap();
            assert_eq!(a.trace, b.trace);
            assert_eq!(a.pi, b.pi);
        }
    }

    #[test]
    fn init_and_config_errors() {
        let p = random_problem(3, 3, 3);
        let zero = Coupling::new(DenseMatrix::zeros(3, 3)).unwrap();
        let cfg = SolverConfig { init: Init::Custom(zero), ..SolverConfig::default() };
        assert!(matches!(solve(&p, &cfg), Err(GwError::Init(_))));
        let sparse = Coupling::new(DenseMatrix::identity(3)).unwrap();
        for method in [Method::KlBapg, Method::Bpg, Method::BpgS] {
            let cfg = SolverConfig { init: Init::Custom(sparse.clone()), ..SolverConfig::new(method, 0.1) };
            assert!(matches!(solve(&p, &cfg), Err(GwError::Init(_))), "{method:?}");
        }
        let cfg = SolverConfig { init: Init::Custom(sparse), ..SolverConfig::new(Method::QuadBapg, 0.1) };
        assert!(solve(&p, &cfg).is_ok());
        let wrong = Coupling::new(DenseMatrix::filled(2, 3, 0.1)).unwrap();
        assert!(matches!(
            solve(&p, &SolverConfig { init: Init::Custom(wrong), ..SolverConfig::default() }),
            Err(GwError::Init(_))
        ));
        assert!(matches!(solve(&p, &SolverConfig::new(Method::KlBapg, -0.1)), Err(GwError::Parameter(_))));
        assert!(SolverConfig { max_iter: 0, ..SolverConfig::default() }.validate().is_err());
        assert!(SolverConfig { rel_tol: 0.0, ..SolverConfig::default() }.validate().is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for method in Method::ALL {
            assert_eq!(Method::from_name(method.name()), Some(method));
        }
        assert_eq!(Method::from_name("fw"), None);
        assert_eq!(Method::KlBapg.bapg_geometry(), Some(BregmanGeometry::Kl));
        assert_eq!(Method::BpgS.bapg_geometry(), None);
    }

    #[test]
    fn uniform_init_option() {
        let p = random_problem(5, 3, 4);
        let a = solve(&p, &SolverConfig { init: Init::Uniform, max_iter: 1, ..SolverConfig::default() }).unwrap();
        let b = solve(
            &p,
            &SolverConfig {
                init: Init::Custom(Coupling::new(DenseMatrix::filled(3, 4, 1.0 / 12.0)).unwrap()),
                max_iter: 1,
                ..SolverConfig::default()
            },
        )
        .unwrap();
        assert_eq!(a.pi, b.pi);
    }
}

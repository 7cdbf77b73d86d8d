//! Computable checks of BAPG's convergence theory.
//!
//! None of the constants in the error-bound and approximation results are
//! computable, so the checks here measure the quantities those results talk
//! about: the projected-gradient residual, displacement under one BAPG
//! application, the per-iteration sufficient-decrease slack, the running sum
//! of the asymmetric Bregman error and the decay of infeasibility in `ρ`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{GwError, Result};
use crate::gw::{bregman_div, infeasibility_error, project_intersection, BregmanGeometry, Coupling, GwProblem};
use crate::solvers::{bapg_potential, kl_bapg_step, quad_bapg_step, solve, SolverConfig, TraceRecord};

/// Slack below this value counts as a sufficient-decrease violation.
pub const SUFFICIENT_DECREASE_TOL: f64 = 1e-9;

/// `‖π − Proj_{Π(μ,ν)}(π + D_X π D_Y)‖_F`, zero exactly at critical points of
/// the GW problem.
pub fn lt_residual(p: &GwProblem, pi: &Coupling) -> Result<f64> {
    let moved = pi.matrix().add(&p.sandwich(pi.matrix())?)?;
    let projected = project_intersection(&moved, p.mu(), p.nu())?;
    Ok(pi.matrix().sub(projected.matrix())?.frobenius_norm())
}

/// `‖π′ − π‖ + ‖w′ − w‖` where `(π′, w′)` is one application of the configured
/// BAPG operator to `(π, w)`. Zero exactly on the BAPG fixed-point set.
pub fn fixed_point_residual(p: &GwProblem, pi: &Coupling, w: &Coupling, cfg: &SolverConfig) -> Result<f64> {
    let step = match cfg.method.bapg_geometry() {
        Some(BregmanGeometry::Kl) => kl_bapg_step(p, w, cfg.rho)?,
        Some(BregmanGeometry::Quadratic) => quad_bapg_step(p, w, cfg.rho)?,
        None => {
            return Err(GwError::Parameter(format!(
                "fixed_point_residual needs a BAPG method, got {}",
                cfg.method.name()
            )))
        }
    };
    Ok(step.pi.matrix().sub(pi.matrix())?.frobenius_norm() + step.w.matrix().sub(w.matrix())?.frobenius_norm())
}

/// Running prefix sums of `asym_error_increment`.
pub fn accumulative_asym_error(trace: &[TraceRecord]) -> Vec<f64> {
    trace
        .iter()
        .scan(0.0, |acc, r| {
            *acc += r.asym_error_increment;
            Some(*acc)
        })
        .collect()
}

/// True when the last `tail_fraction` of `series` (at least one point) moves
/// by less than `rel_tol` times the range of the whole series.
pub fn plateaus(series: &[f64], tail_fraction: f64, rel_tol: f64) -> bool {
    if series.len() < 2 {
        return true;
    }
    let span = |s: &[f64]| {
        let (lo, hi) = s.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        hi - lo
    };
    let range = span(series);
    if range == 0.0 {
        return true;
    }
    let tail_len = (libm::ceil(series.len() as f64 * tail_fraction) as usize).clamp(1, series.len());
    span(&series[series.len() - tail_len..]) < rel_tol * range
}

/// Per-iteration sufficient-decrease slack for a BAPG run.
#[derive(Debug, Clone, PartialEq)]
pub struct DecreaseCheck {
    /// `slack[k]` is `RHS − LHS` for the transition `k → k+1`.
    pub slacks: Vec<f64>,
    /// Transitions whose slack is below `−SUFFICIENT_DECREASE_TOL`.
    pub violations: Vec<usize>,
    /// `slack[k] + ρ(D_h(πᵏ⁺¹,wᵏ⁺¹) − D_h(wᵏ⁺¹,πᵏ⁺¹))`. For KL geometry with
    /// interior iterates the potential change equals the bound plus this
    /// extra term exactly, so these values sit at rounding level. Under the
    /// quadratic geometry they coincide with `slacks`.
    pub corrected_slacks: Vec<f64>,
}

/// Evaluates, for each consecutive pair of BAPG iterates,
///
/// ```text
/// RHS − LHS = [−ρD_h(πᵏ,πᵏ⁺¹) − ρD_h(wᵏ,wᵏ⁺¹) − ρ(D_h(πᵏ⁺¹,wᵏ) − D_h(wᵏ,πᵏ⁺¹))]
///           − [F_ρ(πᵏ⁺¹,wᵏ⁺¹) − F_ρ(πᵏ,wᵏ)]
/// ```
///
/// with `F_ρ(π, w) = f(π, w) + ρ D_h(π, w)`.
pub fn sufficient_decrease_check(
    p: &GwProblem,
    geom: BregmanGeometry,
    rho: f64,
    iterates: &[(Coupling, Coupling)],
) -> Result<DecreaseCheck> {
    let mut slacks = Vec::with_capacity(iterates.len().saturating_sub(1));
    let mut corrected_slacks = Vec::with_capacity(slacks.capacity());
    let mut potential_prev = match iterates.first() {
        Some((pi, w)) => bapg_potential(p, geom, rho, pi, w)?,
        None => return Ok(DecreaseCheck { slacks, violations: Vec::new(), corrected_slacks: Vec::new() }),
    };
    for pair in iterates.windows(2) {
        let ((pi0, w0), (pi1, w1)) = (&pair[0], &pair[1]);
        let potential = bapg_potential(p, geom, rho, pi1, w1)?;
        let asym = bregman_div(geom, pi1, w0)? - bregman_div(geom, w0, pi1)?;
        let rhs = -rho * bregman_div(geom, pi0, pi1)? - rho * bregman_div(geom, w0, w1)? - rho * asym;
        let slack = rhs - (potential - potential_prev);
        slacks.push(slack);
        corrected_slacks.push(slack + rho * (bregman_div(geom, pi1, w1)? - bregman_div(geom, w1, pi1)?));
        potential_prev = potential;
    }
    let violations = slacks.iter().enumerate().filter(|(_, &s)| s < -SUFFICIENT_DECREASE_TOL).map(|(k, _)| k).collect();
    Ok(DecreaseCheck { slacks, violations, corrected_slacks })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhoSweepResult {
    pub rho_values: Vec<f64>,
    pub infeasibility_values: Vec<f64>,
    pub objective_values: Vec<f64>,
    pub converged: Vec<bool>,
    pub iterations: Vec<usize>,
    /// Least-squares slope of `log(infeasibility)` against `log(ρ)`.
    pub loglog_slope: f64,
}

/// Ordinary least-squares slope of `ys` on `xs`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Solves once per `ρ` and records the final infeasibility of `π` and its
/// GW objective.
pub fn rho_sweep(p: &GwProblem, rhos: &[f64], cfg: &SolverConfig) -> Result<RhoSweepResult> {
    if rhos.len() < 3 {
        return Err(GwError::Parameter(format!("rho sweep needs at least 3 values, got {}", rhos.len())));
    }
    if rhos.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(GwError::Parameter("rho values must be strictly increasing".into()));
    }
    let mut infeasibility_values = Vec::with_capacity(rhos.len());
    let mut objective_values = Vec::with_capacity(rhos.len());
    let mut converged = Vec::with_capacity(rhos.len());
    let mut iterations = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let run = SolverConfig { rho, ..cfg.clone() };
        let report = solve(p, &run)?;
        infeasibility_values.push(infeasibility_error(report.pi.matrix(), p.mu(), p.nu())?);
        objective_values.push(crate::gw::gw_objective(p, &report.pi)?);
        converged.push(report.converged);
        iterations.push(report.iterations);
    }
    let xs: Vec<f64> = rhos.iter().map(|&r| libm::log(r)).collect();
    let ys: Vec<f64> = infeasibility_values.iter().map(|&v| libm::log(v)).collect();
    Ok(RhoSweepResult {
        rho_values: rhos.to_vec(),
        infeasibility_values,
        objective_values,
        converged,
        iterations,
        loglog_slope: least_squares_slope(&xs, &ys),
    })
}

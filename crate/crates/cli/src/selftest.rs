//! Small-instance oracle checks bundled with the binary.

use bapg_core::diagnostics::{sufficient_decrease_check, SUFFICIENT_DECREASE_TOL};
use bapg_core::gw::gw_objective;
use bapg_core::{
    rng_from_seed, solve, BregmanGeometry, Coupling, DenseMatrix, GwProblem, Init, Marginal, Method, SolverConfig,
};
use rand::Rng;

use crate::error::Result;

/// ρ for the grid check. The BAPG fixed point sits O(1/ρ) away from the GW
/// critical point, so a 1e-4 match needs a large ρ.
pub const DEFAULT_GRID_RHO: f64 = 500.0;

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn sym2(rng: &mut impl Rng) -> DenseMatrix {
    let (a, b, c) = (rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>());
    DenseMatrix::from_rows(&[[a, b], [b, c]]).unwrap()
}

/// Minimum of the GW objective over `[[t, ½−t], [½−t, t]]` on a uniform grid.
pub fn grid_minimum(p: &GwProblem, points: usize) -> f64 {
    (0..=points)
        .map(|k| {
            let t = 0.5 * k as f64 / points as f64;
            let pi = DenseMatrix::from_rows(&[[t, 0.5 - t], [0.5 - t, t]]).unwrap();
            gw_objective(p, &Coupling::new(pi).unwrap()).unwrap()
        })
        .fold(f64::INFINITY, f64::min)
}

fn grid_check(rho: f64) -> Result<Check> {
    let mut rng = rng_from_seed(7);
    let cfg = SolverConfig { max_iter: 1_000_000, rel_tol: 1e-9, ..SolverConfig::new(Method::KlBapg, rho) };
    let mut worst: f64 = 0.0;
    for _ in 0..3 {
        let p = GwProblem::uniform(sym2(&mut rng), sym2(&mut rng))?;
        let report = solve(&p, &cfg)?;
        let objective = report.trace.last().map_or(f64::NAN, |t| t.objective);
        worst = worst.max((objective - grid_minimum(&p, 100_000)).abs());
    }
    Ok(Check {
        name: "2x2 grid oracle",
        passed: worst <= 1e-4,
        detail: format!("max |objective - grid min| = {worst:.3e} (tol 1e-4)"),
    })
}

/// Plain Sinkhorn scaling, written independently of the library's.
fn reference_sinkhorn(k: &DenseMatrix, mu: &[f64], nu: &[f64]) -> Vec<Vec<f64>> {
    let (n, m) = k.shape();
    let mut u = vec![1.0; n];
    let mut v = vec![1.0; m];
    for _ in 0..100_000 {
        for i in 0..n {
            u[i] = mu[i] / (0..m).map(|j| k.get(i, j) * v[j]).sum::<f64>();
        }
        for j in 0..m {
            v[j] = nu[j] / (0..n).map(|i| k.get(i, j) * u[i]).sum::<f64>();
        }
        let err: f64 = (0..n).map(|i| ((0..m).map(|j| u[i] * k.get(i, j) * v[j]).sum::<f64>() - mu[i]).abs()).sum();
        if err < 1e-15 {
            break;
        }
    }
    (0..n).map(|i| (0..m).map(|j| u[i] * k.get(i, j) * v[j]).collect()).collect()
}

fn sinkhorn_limit_check() -> Result<Check> {
    let mut rng = rng_from_seed(11);
    let (n, m) = (5, 4);
    let mu = Marginal::normalized((0..n).map(|_| 0.2 + rng.gen::<f64>()).collect())?;
    let nu = Marginal::normalized((0..m).map(|_| 0.2 + rng.gen::<f64>()).collect())?;
    let init = DenseMatrix::from_fn(n, m, |_, _| 0.1 + rng.gen::<f64>());
    let p = GwProblem::new(DenseMatrix::zeros(n, n), DenseMatrix::zeros(m, m), mu, nu)?;
    let cfg = SolverConfig {
        init: Init::Custom(Coupling::new(init.clone())?),
        rel_tol: 1e-14,
        max_iter: 100_000,
        ..SolverConfig::new(Method::KlBapg, 1.0)
    };
    let report = solve(&p, &cfg)?;
    let want = reference_sinkhorn(&init, p.mu().as_slice(), p.nu().as_slice());
    let err = (0..n)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| (report.pi.get(i, j) - want[i][j]).abs())
        .fold(0.0, f64::max);
    Ok(Check { name: "Sinkhorn limit", passed: err <= 1e-8, detail: format!("max entry error = {err:.3e} (tol 1e-8)") })
}

fn decrease_check() -> Result<Check> {
    let mut rng = rng_from_seed(13);
    let mut quad_violations = 0;
    let mut kl_worst: f64 = 0.0;
    for _ in 0..3 {
        let n = 6;
        let mut d = || {
            let a = DenseMatrix::from_fn(n, n, |_, _| rng.gen::<f64>());
            DenseMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { a.get(i.min(j), i.max(j)) })
        };
        let p = GwProblem::uniform(d(), d())?;
        let quad = SolverConfig { record_iterates: true, max_iter: 200, ..SolverConfig::new(Method::QuadBapg, 0.2) };
        let r = solve(&p, &quad)?;
        quad_violations +=
            sufficient_decrease_check(&p, BregmanGeometry::Quadratic, 0.2, r.iterates.as_deref().unwrap_or_default())?
                .violations
                .len();
        let kl = SolverConfig { record_iterates: true, max_iter: 200, ..SolverConfig::new(Method::KlBapg, 0.2) };
        let r = solve(&p, &kl)?;
        let check = sufficient_decrease_check(&p, BregmanGeometry::Kl, 0.2, r.iterates.as_deref().unwrap_or_default())?;
        kl_worst = check.corrected_slacks.iter().fold(kl_worst, |w, s| w.max(s.abs()));
    }
    Ok(Check {
        name: "sufficient decrease",
        passed: quad_violations == 0 && kl_worst <= SUFFICIENT_DECREASE_TOL,
        detail: format!("quadratic violations = {quad_violations}; KL identity residual = {kl_worst:.3e}"),
    })
}

/// Validates `rho` first so a bad value is a parameter error, not a failed check.
pub fn run(rho: f64) -> Result<Vec<Check>> {
    SolverConfig::new(Method::KlBapg, rho).validate()?;
    Ok(vec![grid_check(rho)?, sinkhorn_limit_check()?, decrease_check()?])
}

//! End-to-end pipelines: graph alignment, graph partition and the 2D shape
//! matching toy.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;

use super::{adjacency_matrix, heat_kernel, Correspondence, Graph, Labeling};
use crate::error::{GwError, Result};
use crate::gw::{Coupling, GwProblem, Marginal};
use crate::linalg::DenseMatrix;
use crate::solvers::{sinkhorn, solve, Init, SolveReport, SolverConfig};
use crate::{rng_from_seed, GwRng};

/// Structural matrix fed to GW as a "distance".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Representation {
    #[default]
    Adjacency,
    HeatKernel,
}

impl Representation {
    pub fn name(self) -> &'static str {
        match self {
            Self::Adjacency => "adjacency",
            Self::HeatKernel => "heat-kernel",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [Self::Adjacency, Self::HeatKernel].into_iter().find(|r| r.name() == name)
    }
}

pub fn representation_matrix(g: &Graph, repr: Representation) -> Result<DenseMatrix> {
    match repr {
        Representation::Adjacency => Ok(adjacency_matrix(g)),
        Representation::HeatKernel => heat_kernel(g),
    }
}

/// Matches every source node to the target node carrying the most mass in
/// its row of the GW plan (uniform marginals on both sides).
pub fn align(
    gs: &Graph,
    gt: &Graph,
    repr: Representation,
    cfg: &SolverConfig,
) -> Result<(Correspondence, SolveReport)> {
    if gs.node_count() == 0 || gt.node_count() == 0 {
        return Err(GwError::Input("alignment needs two nonempty graphs".into()));
    }
    let p = GwProblem::uniform(representation_matrix(gs, repr)?, representation_matrix(gt, repr)?)?;
    let report = solve(&p, cfg)?;
    let matching = Correspondence::from_pairs(report.pi.row_argmax().into_iter().enumerate())?;
    Ok((matching, report))
}

/// Seed of the default partition starting plan.
pub const PARTITION_INIT_SEED: u64 = 0;

/// Starting plan for partition: the Sinkhorn balancing of
/// `exp(A R / d_max)` onto `Π(μ,ν)`, where `A` is the adjacency matrix,
/// `d_max` the largest degree and `R` has independent uniform `[0, 1)`
/// entries drawn from `seed`. Each node leans towards the clusters its
/// neighbours drew high values for. Edgeless graphs get exactly `μνᵀ`.
pub fn jittered_plan(g: &Graph, mu: &Marginal, nu: &Marginal, seed: u64) -> Result<Coupling> {
    let (n, k) = (mu.len(), nu.len());
    if g.node_count() != n {
        return Err(GwError::Shape { op: "jittered_plan", lhs: (g.node_count(), g.node_count()), rhs: (n, k) });
    }
    let mut rng = rng_from_seed(seed);
    let r = DenseMatrix::from_fn(n, k, |_, _| rng.gen::<f64>());
    let d_max = g.degrees().into_iter().max().unwrap_or(0).max(1) as f64;
    let (kernel, _) = adjacency_matrix(g).gemm(&r)?.exp_map(d_max)?;
    let seeded = DenseMatrix::from_fn(n, k, |i, j| mu.as_slice()[i] * nu.as_slice()[j] * kernel.get(i, j));
    let (plan, _) = sinkhorn(&seeded, mu.as_slice(), nu.as_slice(), 10_000, 1e-14)?;
    Coupling::new(plan)
}

/// Clusters `g` into at most `k` groups by matching it against `k` isolated,
/// self-looped super nodes (`D_Y = I_K` in both representations) with a
/// uniform cluster prior. The independence plan `μνᵀ` is column-symmetric and
/// every solver preserves that symmetry against `I_K`, so unless the config
/// carries a custom initial plan the solve starts from
/// [`jittered_plan`] with [`PARTITION_INIT_SEED`]. Unused clusters are dropped and the remaining ids
/// compacted in increasing order.
pub fn partition(g: &Graph, k: usize, repr: Representation, cfg: &SolverConfig) -> Result<(Labeling, SolveReport)> {
    if k == 0 {
        return Err(GwError::Parameter("partition needs k >= 1".into()));
    }
    if g.node_count() == 0 {
        return Err(GwError::Input("partition needs a nonempty graph".into()));
    }
    let dx = representation_matrix(g, repr)?;
    let dy = representation_matrix(&Graph::partition_target(k), repr)?;
    let p = GwProblem::new(dx, dy, Marginal::uniform(g.node_count())?, Marginal::uniform(k)?)?;
    let report = match cfg.init {
        Init::Custom(_) => solve(&p, cfg)?,
        _ => {
            let init = jittered_plan(g, p.mu(), p.nu(), PARTITION_INIT_SEED)?;
            solve(&p, &SolverConfig { init: Init::Custom(init), ..cfg.clone() })?
        }
    };
    Ok((Labeling::compact(&report.pi.row_argmax()), report))
}

/// Default `ρ` candidates for [`partition_select_rho`] with adjacency input.
pub const ADJACENCY_PARTITION_RHOS: [f64; 3] = [0.1, 0.05, 0.01];
/// Default `ρ` candidates for [`partition_select_rho`] with heat-kernel input.
/// The heat kernel's entries vary far less than adjacency entries, so the
/// gradient term needs a much smaller `ρ` to move the plan.
pub const HEAT_KERNEL_PARTITION_RHOS: [f64; 3] = [1e-3, 5e-4, 1e-4];

impl Representation {
    pub fn partition_rhos(self) -> &'static [f64] {
        match self {
            Self::Adjacency => &ADJACENCY_PARTITION_RHOS,
            Self::HeatKernel => &HEAT_KERNEL_PARTITION_RHOS,
        }
    }
}

/// Runs [`partition`] once per `ρ` in `rhos` and keeps the run whose final
/// plan has the lowest GW objective, preferring converged runs. Ties go to
/// the earlier `ρ`. Returns the chosen `ρ` alongside the result.
pub fn partition_select_rho(
    g: &Graph,
    k: usize,
    repr: Representation,
    cfg: &SolverConfig,
    rhos: &[f64],
) -> Result<(f64, Labeling, SolveReport)> {
    let mut best: Option<(bool, f64, f64, Labeling, SolveReport)> = None;
    for &rho in rhos {
        let (labels, report) = partition(g, k, repr, &SolverConfig { rho, ..cfg.clone() })?;
        let objective = report.trace.last().map_or(f64::INFINITY, |r| r.objective);
        let better = match &best {
            None => true,
            Some((conv, obj, ..)) => (report.converged && !conv) || (report.converged == *conv && objective < *obj),
        };
        if better {
            best = Some((report.converged, objective, rho, labels, report));
        }
    }
    let (_, _, rho, labels, report) = best.ok_or_else(|| GwError::Parameter("no rho candidates given".into()))?;
    Ok((rho, labels, report))
}

/// Rotation between the toy source and target shapes.
pub const TOY_ROTATION: f64 = PI / 3.0;

/// `n` points on the closed curve `r(θ) = 1 + 0.35 cos 3θ + 0.15 sin θ` at
/// uniformly random angles, rotated by `rotation` radians. The curve has no
/// rotational or mirror symmetry.
pub fn toy_shape_points(n: usize, rotation: f64, rng: &mut GwRng) -> Vec<[f64; 2]> {
    let (s, c) = (libm::sin(rotation), libm::cos(rotation));
    (0..n)
        .map(|_| {
            let theta = rng.gen::<f64>() * 2.0 * PI;
            let r = 1.0 + 0.35 * libm::cos(3.0 * theta) + 0.15 * libm::sin(theta);
            let (x, y) = (r * libm::cos(theta), r * libm::sin(theta));
            [c * x - s * y, s * x + c * y]
        })
        .collect()
}

pub fn euclidean_distances(points: &[[f64; 2]]) -> DenseMatrix {
    let n = points.len();
    DenseMatrix::from_fn(n, n, |i, j| libm::hypot(points[i][0] - points[j][0], points[i][1] - points[j][1]))
}

/// Mean Shannon entropy of the rows of `pi` after normalizing each to sum to
/// one; all-zero rows count as zero. Ranges from 0 for a deterministic map to
/// `ln m` for the uniform plan.
pub fn sharpness(pi: &Coupling) -> f64 {
    let (n, _) = pi.shape();
    if n == 0 {
        return 0.0;
    }
    let total: f64 = (0..n)
        .map(|i| {
            let row = pi.matrix().row(i);
            let mass: f64 = row.iter().sum();
            if mass <= 0.0 {
                return 0.0;
            }
            row.iter()
                .filter(|&&v| v > 0.0)
                .map(|&v| {
                    let q = v / mass;
                    -q * libm::log(q)
                })
                .sum::<f64>()
        })
        .sum();
    total / n as f64
}

#[derive(Debug, Clone)]
pub struct Toy2dOutcome {
    pub problem: GwProblem,
    pub report: SolveReport,
    pub sharpness: f64,
}

/// Builds the toy problem: `n_source` points on the base shape and
/// `n_target` points on its copy rotated by [`TOY_ROTATION`], both drawn from
/// one generator seeded with `seed`, with Euclidean distance matrices and
/// uniform marginals.
pub fn toy2d_problem(n_source: usize, n_target: usize, seed: u64) -> Result<GwProblem> {
    if n_source < 2 || n_target < 2 {
        return Err(GwError::Parameter(format!(
            "toy2d needs at least 2 points per shape, got {n_source} and {n_target}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let source = toy_shape_points(n_source, 0.0, &mut rng);
    let target = toy_shape_points(n_target, TOY_ROTATION, &mut rng);
    GwProblem::uniform(euclidean_distances(&source), euclidean_distances(&target))
}

pub fn toy2d(n_source: usize, n_target: usize, seed: u64, cfg: &SolverConfig) -> Result<Toy2dOutcome> {
    let problem = toy2d_problem(n_source, n_target, seed)?;
    let report = solve(&problem, cfg)?;
    let sharpness = sharpness(&report.pi);
    Ok(Toy2dOutcome { problem, report, sharpness })
}

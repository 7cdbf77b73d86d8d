//! The batch pipelines behind each subcommand. Every command runs once per
//! seed and returns one [`SeedRun`] per seed; `main` wraps them in the report.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use bapg_core::diagnostics::{
    accumulative_asym_error, fixed_point_residual, lt_residual, plateaus, rho_sweep, sufficient_decrease_check,
};
use bapg_core::graph::{
    add_noise, align, alignment_accuracy, ami_score, gen_gaussian_partition, parse_edge_list, partition,
    partition_select_rho, toy2d, toy2d_problem, Correspondence, Graph, Representation,
};
use bapg_core::{Method, SolveReport, SolverConfig};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::{self, OutDir};
use crate::report::{Metrics, SeedRun};

/// Added to the run seed when drawing the noisy alignment target, so that the
/// source graph and the noise use different streams.
pub const NOISE_SEED_OFFSET: u64 = 1000;

/// Share of the accumulated asymmetric-error series inspected for a plateau,
/// and the allowed variation relative to the series range.
const PLATEAU_TAIL: f64 = 0.1;
const PLATEAU_REL_TOL: f64 = 0.01;

pub fn method(cfg: &RunConfig) -> Result<Method> {
    Method::from_name(&cfg.method).ok_or_else(|| {
        let names: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
        CliError::Input(format!("unknown method {:?}; expected one of {}", cfg.method, names.join(", ")))
    })
}

fn representation(cfg: &RunConfig) -> Result<Representation> {
    Representation::from_name(&cfg.repr).ok_or_else(|| {
        CliError::Input(format!("unknown representation {:?}; expected adjacency or heat-kernel", cfg.repr))
    })
}

/// Solver settings for a given step parameter; eBPG takes `epsilon` instead.
pub fn solver(cfg: &RunConfig, rho: f64) -> Result<SolverConfig> {
    let method = method(cfg)?;
    let s = SolverConfig {
        method,
        rho: if method == Method::Ebpg { cfg.epsilon } else { rho },
        max_iter: cfg.max_iter,
        rel_tol: cfg.rel_tol,
        inner_max_iter: cfg.inner_max_iter,
        inner_tol: cfg.inner_tol,
        ..SolverConfig::default()
    };
    s.validate()?;
    Ok(s)
}

fn load_graph(path: &str) -> Result<Graph> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_edge_list(&text).map_err(|source| CliError::Graph { path: Path::new(path).to_path_buf(), source })
}

fn finish(seed: u64, report: &SolveReport, mut metrics: Metrics, files: BTreeMap<String, String>) -> SeedRun {
    if let Some(last) = report.trace.last() {
        metrics.objective.get_or_insert(last.objective);
        metrics.infeasibility.get_or_insert(last.infeasibility);
    }
    SeedRun {
        seed,
        converged: report.converged,
        iterations: report.iterations,
        saturated: report.saturated,
        metrics,
        files,
    }
}

pub fn run_align(cfg: &RunConfig, out: &OutDir) -> Result<Vec<SeedRun>> {
    let repr = representation(cfg)?;
    let solver = solver(cfg, cfg.rho.unwrap_or(crate::DEFAULT_RHO))?;
    let source_file = cfg.source.as_deref().map(load_graph).transpose()?;
    let target_file = cfg.target.as_deref().map(load_graph).transpose()?;
    if target_file.is_some() && source_file.is_none() {
        return Err(CliError::Input("--target needs --source".into()));
    }
    let mut runs = Vec::new();
    for &seed in &cfg.seeds {
        let source = match &source_file {
            Some(g) => g.clone(),
            None => gen_gaussian_partition(cfg.n, cfg.k.unwrap_or(crate::ALIGN_BLOCKS), cfg.p_in, cfg.p_out, seed)?,
        };
        // A supplied target is assumed to keep the source's node indices.
        let (target, truth) = match &target_file {
            Some(t) => (t.clone(), Correspondence::identity(source.node_count().min(t.node_count()))),
            None => add_noise(&source, cfg.noise, seed.wrapping_add(NOISE_SEED_OFFSET))?,
        };
        let (pred, report) = align(&source, &target, repr, &solver)?;
        let metrics = Metrics { accuracy: Some(alignment_accuracy(&pred, &truth)?), ..Metrics::default() };
        let files = BTreeMap::from([
            ("trace".to_string(), out.write(&format!("trace_seed{seed}.csv"), &output::trace_csv(&report.trace))?),
            (
                "correspondence".to_string(),
                out.write(&format!("correspondence_seed{seed}.csv"), &output::correspondence_csv(&pred))?,
            ),
        ]);
        runs.push(finish(seed, &report, metrics, files));
    }
    Ok(runs)
}

pub fn run_partition(cfg: &RunConfig, out: &OutDir) -> Result<Vec<SeedRun>> {
    let repr = representation(cfg)?;
    let input = cfg.input.as_deref().map(load_graph).transpose()?;
    let mut runs = Vec::new();
    for &seed in &cfg.seeds {
        let g = match &input {
            Some(g) => g.clone(),
            None => gen_gaussian_partition(cfg.n, cfg.k.unwrap_or(crate::PARTITION_BLOCKS), cfg.p_in, cfg.p_out, seed)?,
        };
        let k = cfg.k.or_else(|| g.labels().map(|l| l.cluster_count())).unwrap_or(crate::PARTITION_BLOCKS);
        let (selected, labels, report) = match cfg.rho {
            Some(rho) => {
                let (labels, report) = partition(&g, k, repr, &solver(cfg, rho)?)?;
                (None, labels, report)
            }
            None => {
                let (rho, labels, report) =
                    partition_select_rho(&g, k, repr, &solver(cfg, repr.partition_rhos()[0])?, repr.partition_rhos())?;
                (Some(rho), labels, report)
            }
        };
        let ami = g.labels().map(|truth| ami_score(&labels, truth)).transpose()?;
        let metrics = Metrics { ami, selected_rho: selected, ..Metrics::default() };
        let files = BTreeMap::from([
            ("trace".to_string(), out.write(&format!("trace_seed{seed}.csv"), &output::trace_csv(&report.trace))?),
            ("labels".to_string(), out.write(&format!("labels_seed{seed}.csv"), &output::labels_csv(&labels))?),
        ]);
        runs.push(finish(seed, &report, metrics, files));
    }
    Ok(runs)
}

pub fn run_toy2d(cfg: &RunConfig, out: &OutDir) -> Result<Vec<SeedRun>> {
    let solver = solver(cfg, cfg.rho.unwrap_or(crate::DEFAULT_RHO))?;
    let mut runs = Vec::new();
    for &seed in &cfg.seeds {
        let outcome = toy2d(cfg.n_source, cfg.n_target, seed, &solver)?;
        let metrics = Metrics { sharpness: Some(outcome.sharpness), ..Metrics::default() };
        let files = BTreeMap::from([
            (
                "trace".to_string(),
                out.write(&format!("trace_seed{seed}.csv"), &output::trace_csv(&outcome.report.trace))?,
            ),
            (
                "coupling".to_string(),
                out.write(&format!("coupling_seed{seed}.csv"), &output::matrix_csv(outcome.report.pi.matrix()))?,
            ),
        ]);
        runs.push(finish(seed, &outcome.report, metrics, files));
    }
    Ok(runs)
}

pub fn run_diagnose(cfg: &RunConfig, out: &OutDir) -> Result<Vec<SeedRun>> {
    let solver = SolverConfig { record_iterates: true, ..solver(cfg, cfg.rho.unwrap_or(crate::DEFAULT_RHO))? };
    let geom = solver
        .method
        .bapg_geometry()
        .ok_or_else(|| CliError::Input(format!("diagnose needs kl-bapg or quad-bapg, got {}", solver.method.name())))?;
    let mut runs = Vec::new();
    for &seed in &cfg.seeds {
        let p = toy2d_problem(cfg.n_source, cfg.n_target, seed)?;
        let mut report = bapg_core::solve(&p, &solver)?;
        let iterates = report.iterates.take().unwrap_or_default();
        let check = sufficient_decrease_check(&p, geom, solver.rho, &iterates)?;
        drop(iterates);
        let corrected =
            check.corrected_slacks.iter().filter(|&&s| s < -bapg_core::diagnostics::SUFFICIENT_DECREASE_TOL).count();
        let metrics = Metrics {
            lt_residual: Some(lt_residual(&p, &report.pi)?),
            fixed_point_residual: Some(fixed_point_residual(&p, &report.pi, &report.w, &solver)?),
            decrease_violations: Some(check.violations.len()),
            corrected_decrease_violations: Some(corrected),
            asym_error_plateaus: Some(plateaus(&accumulative_asym_error(&report.trace), PLATEAU_TAIL, PLATEAU_REL_TOL)),
            ..Metrics::default()
        };
        let files = BTreeMap::from([
            ("trace".to_string(), out.write(&format!("trace_seed{seed}.csv"), &output::trace_csv(&report.trace))?),
            ("asym".to_string(), out.write(&format!("asym_seed{seed}.csv"), &output::asym_csv(&report.trace))?),
            ("decrease".to_string(), out.write(&format!("decrease_seed{seed}.csv"), &output::decrease_csv(&check))?),
        ]);
        runs.push(finish(seed, &report, metrics, files));
    }
    Ok(runs)
}

pub fn run_sweep(cfg: &RunConfig, out: &OutDir) -> Result<Vec<SeedRun>> {
    let base = solver(cfg, cfg.rho.unwrap_or(crate::DEFAULT_RHO))?;
    let mut runs = Vec::new();
    for &seed in &cfg.seeds {
        let p = toy2d_problem(cfg.n_source, cfg.n_target, seed)?;
        let sweep = rho_sweep(&p, &cfg.rhos, &base)?;
        let metrics = Metrics { loglog_slope: Some(sweep.loglog_slope), ..Metrics::default() };
        let files = BTreeMap::from([(
            "sweep".to_string(),
            out.write(&format!("sweep_seed{seed}.csv"), &output::sweep_csv(&sweep))?,
        )]);
        runs.push(SeedRun {
            seed,
            converged: sweep.converged.iter().all(|&c| c),
            iterations: sweep.iterations.iter().sum(),
            saturated: false,
            metrics,
            files,
        });
    }
    Ok(runs)
}

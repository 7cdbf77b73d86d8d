//! `bapg`: batch front end for the GW solvers and graph pipelines.
//!
//! Each subcommand writes `report.json` plus CSV files into `--out`. Exit
//! codes: 0 success, 1 runtime failure, 2 bad invocation or input, 3 a run
//! did not converge and `--strict` was given.

mod commands;
mod config;
mod error;
mod output;
mod report;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::{default_seed, ConfigFile, RunConfig, DEFAULT_RHOS};
use error::{CliError, Result};
use output::OutDir;
use report::RunReport;

pub const DEFAULT_RHO: f64 = 0.1;
pub const ALIGN_BLOCKS: usize = 5;
pub const PARTITION_BLOCKS: usize = 3;

#[derive(Debug, Parser)]
#[command(name = "bapg", version, about = "Gromov-Wasserstein alignment, partition and diagnostics")]
struct Cli {
    /// `key = value` settings file; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory [default: bapg-out].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Single seed [default: $GW_SEED, else 0].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Comma-separated seeds; one run per seed.
    #[arg(long, global = true, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Exit with status 3 if any run stops at the iteration cap.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Align a source graph with a target graph (or a noisy copy of itself).
    Align(AlignArgs),
    /// Partition a graph by matching it with K self-looped super nodes.
    Partition(PartitionArgs),
    /// Match points sampled from a 2D shape and its rotated copy.
    Toy2d(ToyArgs),
    /// BAPG convergence diagnostics on the toy problem.
    Diagnose(ToyArgs),
    /// Final infeasibility against ρ on the toy problem.
    SweepRho(SweepArgs),
    /// Run the bundled small-instance oracle checks.
    SelfTest(SelfTestArgs),
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// kl-bapg, quad-bapg, bpg, bpg-s or ebpg [default: kl-bapg].
    #[arg(long)]
    method: Option<String>,
    /// Step / penalty parameter [default: 0.1; partition picks from a grid].
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<f64>,
    /// Entropic weight for ebpg [default: 0.1].
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<f64>,
    /// [default: 2000]
    #[arg(long)]
    max_iter: Option<usize>,
    /// Relative change of the plan that stops the run [default: 1e-6].
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Sinkhorn cap for bpg and ebpg [default: 1000].
    #[arg(long)]
    inner_max_iter: Option<usize>,
    /// [default: 1e-9]
    #[arg(long)]
    inner_tol: Option<f64>,
}

#[derive(Debug, Args)]
struct GeneratorArgs {
    /// Nodes of the generated graph [default: 100 for align, 90 for partition].
    #[arg(long)]
    n: Option<usize>,
    /// Planted blocks; for partition also the cluster count.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    p_in: Option<f64>,
    #[arg(long)]
    p_out: Option<f64>,
    /// adjacency or heat-kernel [default: adjacency].
    #[arg(long)]
    repr: Option<String>,
}

#[derive(Debug, Args)]
struct AlignArgs {
    /// Source edge list [default: a generated Gaussian partition graph].
    #[arg(long)]
    source: Option<PathBuf>,
    /// Target edge list [default: the source with --noise percent noise].
    #[arg(long)]
    target: Option<PathBuf>,
    /// Noise level in percent [default: 10].
    #[arg(long)]
    noise: Option<f64>,
    #[command(flatten)]
    graph: GeneratorArgs,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct PartitionArgs {
    /// Edge list, optionally with a `# labels` section [default: generated].
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    graph: GeneratorArgs,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct ToyArgs {
    /// [default: 300 for toy2d, 30 otherwise]
    #[arg(long)]
    n_source: Option<usize>,
    /// [default: 400 for toy2d, 40 otherwise]
    #[arg(long)]
    n_target: Option<usize>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Increasing, comma-separated [default: 0.1,0.2,0.4,0.8,1.6].
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    rhos: Option<Vec<f64>>,
    #[command(flatten)]
    toy: ToyArgs,
}

#[derive(Debug, Args)]
struct SelfTestArgs {
    /// ρ for the grid-oracle check [default: 500].
    #[arg(long, allow_hyphen_values = true)]
    rho: Option<f64>,
}

struct Defaults {
    n: usize,
    k: Option<usize>,
    p_in: f64,
    p_out: f64,
    n_source: usize,
    n_target: usize,
}

fn defaults(command: &str) -> Defaults {
    match command {
        "align" => Defaults { n: 100, k: Some(ALIGN_BLOCKS), p_in: 0.5, p_out: 0.02, n_source: 30, n_target: 40 },
        "partition" => Defaults { n: 90, k: None, p_in: 0.6, p_out: 0.02, n_source: 30, n_target: 40 },
        "toy2d" => Defaults { n: 100, k: None, p_in: 0.5, p_out: 0.02, n_source: 300, n_target: 400 },
        _ => Defaults { n: 100, k: None, p_in: 0.5, p_out: 0.02, n_source: 30, n_target: 40 },
    }
}

fn path_string(p: Option<PathBuf>) -> Option<String> {
    p.map(|p| p.display().to_string())
}

/// Merges flags, the config file and defaults into a [`RunConfig`] plus the
/// output directory.
fn resolve(cli: Cli, file: &ConfigFile) -> Result<(RunConfig, PathBuf)> {
    let (name, solver, graph, toy, paths, noise, rhos) = match cli.command {
        Command::Align(a) => ("align", Some(a.solver), Some(a.graph), None, (a.source, a.target, None), a.noise, None),
        Command::Partition(a) => ("partition", Some(a.solver), Some(a.graph), None, (None, None, a.input), None, None),
        Command::Toy2d(a) => ("toy2d", None, None, Some(a), (None, None, None), None, None),
        Command::Diagnose(a) => ("diagnose", None, None, Some(a), (None, None, None), None, None),
        Command::SweepRho(a) => ("sweep-rho", None, None, Some(a.toy), (None, None, None), None, a.rhos),
        Command::SelfTest(_) => unreachable!("self-test is handled before resolution"),
    };
    let d = defaults(name);
    let (n_source, n_target, solver) = match toy {
        Some(t) => (t.n_source, t.n_target, t.solver),
        None => (None, None, solver.expect("graph commands carry solver flags")),
    };
    let graph = graph.unwrap_or(GeneratorArgs { n: None, k: None, p_in: None, p_out: None, repr: None });

    let seeds = match (cli.seeds, cli.seed) {
        (Some(list), _) => list,
        (None, Some(s)) => vec![s],
        (None, None) => match file.pick_list(None, "seeds")? {
            Some(list) => list,
            None => vec![file.pick(None, "seed", default_seed()?)?],
        },
    };
    if seeds.is_empty() {
        return Err(CliError::Input("--seeds is empty".into()));
    }
    let rho_default = if name == "partition" { None } else { Some(DEFAULT_RHO) };
    let config = RunConfig {
        command: name.to_string(),
        source: file.pick_opt(path_string(paths.0), "source")?,
        target: file.pick_opt(path_string(paths.1), "target")?,
        input: file.pick_opt(path_string(paths.2), "input")?,
        method: file.pick(solver.method, "method", "kl-bapg".to_string())?,
        rho: file.pick_opt(solver.rho, "rho")?.or(rho_default),
        epsilon: file.pick(solver.epsilon, "epsilon", 0.1)?,
        max_iter: file.pick(solver.max_iter, "max-iter", 2000)?,
        rel_tol: file.pick(solver.rel_tol, "rel-tol", 1e-6)?,
        inner_max_iter: file.pick(solver.inner_max_iter, "inner-max-iter", 1000)?,
        inner_tol: file.pick(solver.inner_tol, "inner-tol", 1e-9)?,
        repr: file.pick(graph.repr, "repr", "adjacency".to_string())?,
        k: file.pick_opt(graph.k, "k")?.or(d.k),
        n: file.pick(graph.n, "n", d.n)?,
        p_in: file.pick(graph.p_in, "p-in", d.p_in)?,
        p_out: file.pick(graph.p_out, "p-out", d.p_out)?,
        noise: file.pick(noise, "noise", 10.0)?,
        n_source: file.pick(n_source, "n-source", d.n_source)?,
        n_target: file.pick(n_target, "n-target", d.n_target)?,
        rhos: file.pick_list(rhos, "rhos")?.unwrap_or_else(|| DEFAULT_RHOS.to_vec()),
        seeds,
        strict: cli.strict || file.pick(None, "strict", false)?,
    };
    let out = file.pick(cli.out, "out", PathBuf::from("bapg-out"))?;
    Ok((config, out))
}

fn run(cli: Cli) -> Result<ExitCode> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    if let Command::SelfTest(args) = &cli.command {
        let rho = file.pick(args.rho, "rho", selftest::DEFAULT_GRID_RHO)?;
        let checks = selftest::run(rho)?;
        let failed = checks.iter().filter(|c| !c.passed).count();
        for c in &checks {
            println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        return if failed == 0 { Ok(ExitCode::SUCCESS) } else { Err(CliError::SelfTest { failed }) };
    }

    let (config, out_path) = resolve(cli, &file)?;
    let out = OutDir::create(&out_path)?;
    let start = Instant::now();
    let runs = match config.command.as_str() {
        "align" => commands::run_align(&config, &out)?,
        "partition" => commands::run_partition(&config, &out)?,
        "toy2d" => commands::run_toy2d(&config, &out)?,
        "diagnose" => commands::run_diagnose(&config, &out)?,
        "sweep-rho" => commands::run_sweep(&config, &out)?,
        other => unreachable!("unhandled command {other}"),
    };
    let strict = config.strict;
    let report = RunReport::new(config, runs, start.elapsed().as_secs_f64());
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    out.write("report.json", &text)?;
    println!("wrote {}", out.path("report.json").display());
    if strict && !report.converged {
        eprintln!("error: at least one run hit the iteration cap (--strict)");
        return Ok(ExitCode::from(3));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

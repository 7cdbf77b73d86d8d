//! `report.json`, schema version 1.
//!
//! ```text
//! schema              always 1
//! version             crate version that wrote the file
//! command             subcommand name
//! config              resolved RunConfig
//! runs[]              one entry per seed: seed, converged, iterations,
//!                     saturated, metrics, files (name -> path relative to
//!                     the report)
//! summary             per-metric mean over runs (counts are summed, flags
//!                     are and-ed)
//! converged           every run converged
//! wall_clock_seconds  the only field that varies between identical runs
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metrics {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ami: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infeasibility: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sharpness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loglog_slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lt_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_point_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decrease_violations: Option<usize>,
    /// Violations once the `D(π⁺,w⁺) − D(w⁺,π⁺)` term is restored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corrected_decrease_violations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asym_error_plateaus: Option<bool>,
}

impl Metrics {
    pub fn summarize(all: &[&Metrics]) -> Metrics {
        fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
            let v: Vec<f64> = values.flatten().collect();
            (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
        }
        fn total(values: impl Iterator<Item = Option<usize>>) -> Option<usize> {
            values.fold(None, |acc, v| match (acc, v) {
                (None, v) => v,
                (Some(a), v) => Some(a + v.unwrap_or(0)),
            })
        }
        fn all_of(values: impl Iterator<Item = Option<bool>>) -> Option<bool> {
            values.fold(None, |acc, v| match (acc, v) {
                (None, v) => v,
                (Some(a), v) => Some(a && v.unwrap_or(true)),
            })
        }
        Metrics {
            accuracy: mean(all.iter().map(|m| m.accuracy)),
            ami: mean(all.iter().map(|m| m.ami)),
            objective: mean(all.iter().map(|m| m.objective)),
            infeasibility: mean(all.iter().map(|m| m.infeasibility)),
            sharpness: mean(all.iter().map(|m| m.sharpness)),
            selected_rho: mean(all.iter().map(|m| m.selected_rho)),
            loglog_slope: mean(all.iter().map(|m| m.loglog_slope)),
            lt_residual: mean(all.iter().map(|m| m.lt_residual)),
            fixed_point_residual: mean(all.iter().map(|m| m.fixed_point_residual)),
            decrease_violations: total(all.iter().map(|m| m.decrease_violations)),
            corrected_decrease_violations: total(all.iter().map(|m| m.corrected_decrease_violations)),
            asym_error_plateaus: all_of(all.iter().map(|m| m.asym_error_plateaus)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedRun {
    pub seed: u64,
    pub converged: bool,
    pub iterations: usize,
    pub saturated: bool,
    pub metrics: Metrics,
    pub files: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub schema: u32,
    pub version: String,
    pub command: String,
    pub config: RunConfig,
    pub runs: Vec<SeedRun>,
    pub summary: Metrics,
    pub converged: bool,
    pub wall_clock_seconds: f64,
}

impl RunReport {
    pub fn new(config: RunConfig, runs: Vec<SeedRun>, wall_clock_seconds: f64) -> Self {
        let summary = Metrics::summarize(&runs.iter().map(|r| &r.metrics).collect::<Vec<_>>());
        Self {
            schema: SCHEMA_VERSION,
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: config.command.clone(),
            converged: runs.iter().all(|r| r.converged),
            config,
            runs,
            summary,
            wall_clock_seconds,
        }
    }
}

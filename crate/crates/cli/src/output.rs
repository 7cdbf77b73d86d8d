//! Plot-ready CSV files. Floats are written with 17 significant digits so
//! they parse back to the same `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use bapg_core::diagnostics::{accumulative_asym_error, DecreaseCheck, RhoSweepResult};
use bapg_core::graph::{Correspondence, Labeling};
use bapg_core::{DenseMatrix, TraceRecord};

use crate::error::{CliError, Result};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Output directory plus the relative names written into it.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Writes `contents` to `name` and returns `name` for the report.
    pub fn write(&self, name: &str, contents: &str) -> Result<String> {
        let path = self.path(name);
        fs::write(&path, contents).map_err(|e| CliError::io(path, e))?;
        Ok(name.to_string())
    }
}

pub fn trace_csv(trace: &[TraceRecord]) -> String {
    let acc = accumulative_asym_error(trace);
    let mut out = String::from(
        "iter,objective,potential,infeasibility,step_rel_change,asym_error_increment,accumulated_asym_error\n",
    );
    for (t, a) in trace.iter().zip(acc) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            t.iter,
            fmt_f64(t.objective),
            fmt_f64(t.potential),
            fmt_f64(t.infeasibility),
            fmt_f64(t.step_rel_change),
            fmt_f64(t.asym_error_increment),
            fmt_f64(a)
        );
    }
    out
}

/// Dense matrix with a `c0,c1,...` header.
pub fn matrix_csv(m: &DenseMatrix) -> String {
    let header: Vec<String> = (0..m.cols()).map(|j| format!("c{j}")).collect();
    let mut out = header.join(",");
    out.push('\n');
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn correspondence_csv(c: &Correspondence) -> String {
    let mut out = String::from("source,target\n");
    for (s, t) in c.pairs() {
        let _ = writeln!(out, "{s},{t}");
    }
    out
}

pub fn labels_csv(l: &Labeling) -> String {
    let mut out = String::from("node,cluster\n");
    for (node, c) in l.as_slice().iter().enumerate() {
        let _ = writeln!(out, "{node},{c}");
    }
    out
}

/// One row per ρ; `loglog_slope` repeats the fitted slope on every row.
pub fn sweep_csv(s: &RhoSweepResult) -> String {
    let mut out = String::from("rho,infeasibility,objective,converged,iterations,loglog_slope\n");
    for (i, &rho) in s.rho_values.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(rho),
            fmt_f64(s.infeasibility_values[i]),
            fmt_f64(s.objective_values[i]),
            s.converged[i],
            s.iterations[i],
            fmt_f64(s.loglog_slope)
        );
    }
    out
}

pub fn asym_csv(trace: &[TraceRecord]) -> String {
    let mut out = String::from("iter,increment,accumulated\n");
    for (t, a) in trace.iter().zip(accumulative_asym_error(trace)) {
        let _ = writeln!(out, "{},{},{}", t.iter, fmt_f64(t.asym_error_increment), fmt_f64(a));
    }
    out
}

pub fn decrease_csv(check: &DecreaseCheck) -> String {
    let mut out = String::from("iter,slack,corrected_slack\n");
    for (k, (s, c)) in check.slacks.iter().zip(&check.corrected_slacks).enumerate() {
        let _ = writeln!(out, "{},{},{}", k + 1, fmt_f64(*s), fmt_f64(*c));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_through_text() {
        for x in [0.1 + 0.2, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn matrix_layout() {
        let m = DenseMatrix::from_rows(&[[1.0, 0.5]]).unwrap();
        assert_eq!(matrix_csv(&m), "c0,c1\n1.0000000000000000e0,5.0000000000000000e-1\n");
    }
}

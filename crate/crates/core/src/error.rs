use alloc::string::String;
use core::fmt;

use thiserror::Error;

pub type Result<T> = core::result::Result<T, GwError>;

/// Which side of a coupling an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Row,
    Column,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::Row => f.write_str("row"),
            Axis::Column => f.write_str("column"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GwError {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Shape { op: &'static str, lhs: (usize, usize), rhs: (usize, usize) },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("degenerate {axis} {index}: sum is not strictly positive")]
    DegenerateScaling { axis: Axis, index: usize },
    #[error("KL divergence undefined at entry {index}: reference is zero where argument is positive")]
    Domain { index: usize },
    #[error(
        "projection onto the transportation polytope did not converge after {sweeps} sweeps (last change {residual:e})"
    )]
    ProjectionNotConverged { sweeps: usize, residual: f64 },
    #[error("inner Sinkhorn loop did not converge after {iterations} iterations (residual {residual:e})")]
    InnerNotConverged { iterations: usize, residual: f64 },
    #[error("invalid initial coupling: {0}")]
    Init(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("node index {index} out of range for a graph with {count} nodes")]
    OutOfRange { index: u64, count: usize },
}

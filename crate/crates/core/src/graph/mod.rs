//! Graphs and the GW graph pipelines: alignment, partition and the 2D toy
//! matching problem.

mod edge_list;
mod generate;
mod metrics;
mod tasks;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec::Vec;

use crate::error::{GwError, Result};
use crate::linalg::DenseMatrix;

pub use edge_list::{format_edge_list, parse_edge_list};
pub use generate::{add_noise, gen_barabasi_albert, gen_gaussian_partition};
pub use metrics::{alignment_accuracy, ami_score};
pub use tasks::{
    align, euclidean_distances, jittered_plan, partition, partition_select_rho, representation_matrix, sharpness,
    toy2d, toy2d_problem, toy_shape_points, Representation, Toy2dOutcome, ADJACENCY_PARTITION_RHOS,
    HEAT_KERNEL_PARTITION_RHOS, PARTITION_INIT_SEED, TOY_ROTATION,
};

/// Undirected graph on nodes `0..node_count`.
///
/// Edges are stored once as `(min, max)`. Self-loops only appear in partition
/// targets built by [`Graph::partition_target`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Graph {
    node_count: usize,
    edges: BTreeSet<(usize, usize)>,
    labels: Option<Labeling>,
    original_ids: Option<Vec<i64>>,
}

impl Graph {
    pub fn new(node_count: usize) -> Self {
        Self { node_count, ..Self::default() }
    }

    pub fn from_edges(node_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Self::new(node_count);
        for (u, v) in edges {
            g.insert_edge(u, v)?;
        }
        Ok(g)
    }

    /// `k` isolated nodes, each with a self-loop.
    pub fn partition_target(k: usize) -> Self {
        Self { node_count: k, edges: (0..k).map(|i| (i, i)).collect(), ..Self::default() }
    }

    /// Inserts `{u, v}`; returns false if it was already present.
    pub fn insert_edge(&mut self, u: usize, v: usize) -> Result<bool> {
        for x in [u, v] {
            if x >= self.node_count {
                return Err(GwError::OutOfRange { index: x as u64, count: self.node_count });
            }
        }
        if u == v {
            return Err(GwError::Input(format!("self-loop on node {u}")));
        }
        Ok(self.edges.insert((u.min(v), u.max(v))))
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn labels(&self) -> Option<&Labeling> {
        self.labels.as_ref()
    }

    pub fn with_labels(mut self, labels: Labeling) -> Result<Self> {
        if labels.len() != self.node_count {
            return Err(GwError::Input(format!("{} labels for a graph with {} nodes", labels.len(), self.node_count)));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Ids from the source file, when the graph was reindexed on load.
    pub fn original_ids(&self) -> Option<&[i64]> {
        self.original_ids.as_deref()
    }

    pub(crate) fn set_original_ids(&mut self, ids: Vec<i64>) {
        self.original_ids = Some(ids);
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = alloc::vec![0; self.node_count];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            if u != v {
                deg[v] += 1;
            }
        }
        deg
    }
}

/// Symmetric 0/1 adjacency matrix; self-loops put a 1 on the diagonal.
pub fn adjacency_matrix(g: &Graph) -> DenseMatrix {
    let n = g.node_count();
    let mut a = DenseMatrix::zeros(n, n);
    for (u, v) in g.edges() {
        a.set(u, v, 1.0);
        a.set(v, u, 1.0);
    }
    a
}

/// Heat kernel `exp(−L)` of the normalized Laplacian
/// `L = I − D^{-1/2} A D^{-1/2}`. Isolated nodes take `D^{-1/2} = 0`.
pub fn heat_kernel(g: &Graph) -> Result<DenseMatrix> {
    let a = adjacency_matrix(g);
    let n = g.node_count();
    let inv_sqrt: Vec<f64> =
        a.row_sums().into_iter().map(|d| if d > 0.0 { 1.0 / libm::sqrt(d) } else { 0.0 }).collect();
    let lap = DenseMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - inv_sqrt[i] * a.get(i, j) * inv_sqrt[j]
    });
    lap.expm_neg_sym()
}

/// Node-to-source-node matching with at most one target per source.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Correspondence(BTreeMap<usize, usize>);

impl Correspondence {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (s, t) in pairs {
            if let Some(prev) = map.insert(s, t) {
                if prev != t {
                    return Err(GwError::Input(format!("source node {s} mapped to both {prev} and {t}")));
                }
            }
        }
        Ok(Self(map))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).map(|i| (i, i)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn target_of(&self, source: usize) -> Option<usize> {
        self.0.get(&source).copied()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().map(|(&s, &t)| (s, t))
    }
}

/// Cluster assignment per node, with ids `0..cluster_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling(Vec<usize>);

impl Labeling {
    /// Requires every id in `0..max+1` to be used.
    pub fn new(assignments: Vec<usize>) -> Result<Self> {
        let used: BTreeSet<usize> = assignments.iter().copied().collect();
        if let Some(&max) = used.iter().next_back() {
            if max + 1 != used.len() {
                return Err(GwError::Input("cluster ids must be contiguous from 0".into()));
            }
        }
        Ok(Self(assignments))
    }

    /// Relabels arbitrary ids to `0..k` in increasing id order.
    pub fn compact<T: Ord + Copy>(raw: &[T]) -> Self {
        let order: BTreeMap<T, usize> =
            raw.iter().copied().collect::<BTreeSet<T>>().into_iter().enumerate().map(|(i, id)| (id, i)).collect();
        Self(raw.iter().map(|id| order[id]).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn cluster_count(&self) -> usize {
        self.0.iter().max().map_or(0, |m| m + 1)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

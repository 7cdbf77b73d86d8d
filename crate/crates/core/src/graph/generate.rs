//! Seeded random graph models and the noisy-target construction used for
//! alignment benchmarks.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{Correspondence, Graph, Labeling};
use crate::error::{GwError, Result};
use crate::rng_from_seed;

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(GwError::Parameter(format!("{name} must lie in [0, 1], got {p}")));
    }
    Ok(())
}

/// Rounds real block sizes to positive integers summing to `n` (largest
/// remainder, ties to the lower index).
fn round_sizes(raw: &[f64], n: usize) -> Vec<usize> {
    let total: f64 = raw.iter().sum();
    let scaled: Vec<f64> = raw.iter().map(|s| s * n as f64 / total).collect();
    let mut sizes: Vec<usize> = scaled.iter().map(|&s| (libm::floor(s) as usize).max(1)).collect();
    let mut assigned: usize = sizes.iter().sum();
    let mut by_fraction: Vec<usize> = (0..raw.len()).collect();
    by_fraction.sort_by(|&a, &b| {
        let fa = scaled[a] - libm::floor(scaled[a]);
        let fb = scaled[b] - libm::floor(scaled[b]);
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut cursor = 0;
    while assigned < n {
        sizes[by_fraction[cursor % raw.len()]] += 1;
        assigned += 1;
        cursor += 1;
    }
    while assigned > n {
        let largest = (0..sizes.len()).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a))).unwrap();
        sizes[largest] -= 1;
        assigned -= 1;
    }
    sizes
}

/// Gaussian random partition graph.
///
/// Block sizes are drawn from `N(n/k, (n/(4k))²)`, clamped to at least one and
/// rounded to sum to `n`. Nodes are numbered block by block; each pair is
/// joined with probability `p_in` inside a block and `p_out` across blocks.
/// Labels carry the planted blocks.
pub fn gen_gaussian_partition(n: usize, k: usize, p_in: f64, p_out: f64, seed: u64) -> Result<Graph> {
    if k == 0 || n < k {
        return Err(GwError::Parameter(format!("need n >= k >= 1, got n={n}, k={k}")));
    }
    check_probability("p_in", p_in)?;
    check_probability("p_out", p_out)?;
    let mut rng = rng_from_seed(seed);
    let mean = n as f64 / k as f64;
    let normal = Normal::new(mean, mean / 4.0).map_err(|e| GwError::Parameter(format!("{e}")))?;
    let raw: Vec<f64> = (0..k).map(|_| normal.sample(&mut rng).max(1.0)).collect();
    let sizes = round_sizes(&raw, n);

    let mut block = Vec::with_capacity(n);
    for (c, &s) in sizes.iter().enumerate() {
        block.extend(core::iter::repeat_n(c, s));
    }
    let mut g = Graph::new(n);
    for i in 0..n {
        for j in i + 1..n {
            let p = if block[i] == block[j] { p_in } else { p_out };
            if rng.gen::<f64>() < p {
                g.insert_edge(i, j)?;
            }
        }
    }
    g.with_labels(Labeling::new(block)?)
}

/// Barabási-Albert preferential attachment.
///
/// Starts from a clique on `m_attach` nodes; every later node links to
/// `m_attach` distinct earlier nodes chosen with probability proportional to
/// degree (uniformly while all degrees are zero). The result has
/// `C(m, 2) + (n − m)·m` edges.
pub fn gen_barabasi_albert(n: usize, m_attach: usize, seed: u64) -> Result<Graph> {
    if m_attach == 0 || m_attach >= n {
        return Err(GwError::Parameter(format!("need 1 <= m_attach < n, got m_attach={m_attach}, n={n}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut g = Graph::new(n);
    // Every edge contributes both endpoints, so sampling from this list is
    // sampling proportional to degree.
    let mut endpoints: Vec<usize> = Vec::new();
    for u in 0..m_attach {
        for v in u + 1..m_attach {
            g.insert_edge(u, v)?;
            endpoints.extend([u, v]);
        }
    }
    for new in m_attach..n {
        let mut targets: Vec<usize> = Vec::with_capacity(m_attach);
        while targets.len() < m_attach {
            let t =
                if endpoints.is_empty() { rng.gen_range(0..new) } else { endpoints[rng.gen_range(0..endpoints.len())] };
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for t in targets {
            g.insert_edge(new, t)?;
            endpoints.extend([new, t]);
        }
    }
    Ok(g)
}

/// `⌈q·count/100⌉`, treating values within 1e-9 of an integer as that integer.
fn ceil_percent(count: usize, q_percent: f64) -> usize {
    let x = q_percent * count as f64 / 100.0;
    let r = libm::round(x);
    if (x - r).abs() < 1e-9 {
        r as usize
    } else {
        libm::ceil(x) as usize
    }
}

/// Builds a noisy alignment target: appends `⌈q%·|V|⌉` isolated nodes, then
/// adds `⌈q%·|E|⌉` new edges drawn uniformly over all node pairs of the
/// enlarged graph (skipping existing edges). Original nodes keep their
/// indices, so the ground truth is the identity on them.
pub fn add_noise(g: &Graph, q_percent: f64, seed: u64) -> Result<(Graph, Correspondence)> {
    if !(q_percent.is_finite() && q_percent >= 0.0) {
        return Err(GwError::Parameter(format!("noise level must be >= 0, got {q_percent}")));
    }
    let n_s = g.node_count();
    let n_t = n_s + ceil_percent(n_s, q_percent);
    let mut target = Graph::new(n_t);
    for (u, v) in g.edges() {
        target.insert_edge(u, v)?;
    }
    let capacity = n_t * n_t.saturating_sub(1) / 2;
    let wanted = ceil_percent(g.edge_count(), q_percent).min(capacity - target.edge_count());
    let mut rng = rng_from_seed(seed);
    let mut added = 0;
    while added < wanted {
        let u = rng.gen_range(0..n_t);
        let v = rng.gen_range(0..n_t);
        if u != v && target.insert_edge(u, v)? {
            added += 1;
        }
    }
    Ok((target, Correspondence::identity(n_s)))
}

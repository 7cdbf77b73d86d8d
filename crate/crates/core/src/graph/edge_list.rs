//! Plain-text edge lists.
//!
//! ```text
//! # comment
//! # nodes 5        optional; fixes the node count and disables reindexing
//! 0 1
//! 1 2
//! # labels         optional section of "node cluster" lines
//! 0 0
//! 1 0
//! ```
//!
//! Without a `# nodes` line, the distinct ids seen in the file are sorted and
//! renumbered from zero; the original ids are kept on the graph.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use super::{Graph, Labeling};
use crate::error::{GwError, Result};

fn parse_pair(line: &str, lineno: usize) -> Result<(i64, i64)> {
    let mut it = line.split_whitespace();
    let mut next = |what: &str| -> Result<i64> {
        let tok = it.next().ok_or_else(|| GwError::Parse { line: lineno, message: format!("missing {what}") })?;
        tok.parse::<i64>()
            .map_err(|_| GwError::Parse { line: lineno, message: format!("{what} {tok:?} is not an integer") })
    };
    let a = next("first field")?;
    let b = next("second field")?;
    if let Some(extra) = it.next() {
        return Err(GwError::Parse { line: lineno, message: format!("unexpected trailing field {extra:?}") });
    }
    Ok((a, b))
}

enum Section {
    Edges,
    Labels,
}

pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut section = Section::Edges;
    let mut declared_nodes: Option<usize> = None;
    let mut edges: Vec<(i64, i64, usize)> = Vec::new();
    let mut labels: BTreeMap<i64, i64> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let mut words = comment.split_whitespace();
            match words.next() {
                Some(w) if w.eq_ignore_ascii_case("labels") => section = Section::Labels,
                Some(w) if w.eq_ignore_ascii_case("nodes") => {
                    let count = words.next().and_then(|c| c.parse::<usize>().ok()).ok_or_else(|| GwError::Parse {
                        line: lineno,
                        message: "expected `# nodes <count>`".to_string(),
                    })?;
                    declared_nodes = Some(count);
                }
                _ => {}
            }
            continue;
        }
        let (a, b) = parse_pair(line, lineno)?;
        match section {
            Section::Edges => {
                if a == b {
                    return Err(GwError::Parse { line: lineno, message: format!("self-loop on node {a}") });
                }
                edges.push((a, b, lineno));
            }
            Section::Labels => {
                if let Some(prev) = labels.insert(a, b) {
                    if prev != b {
                        return Err(GwError::Parse {
                            line: lineno,
                            message: format!("node {a} labelled both {prev} and {b}"),
                        });
                    }
                }
            }
        }
    }

    let (mut graph, index_of): (Graph, BTreeMap<i64, usize>) = match declared_nodes {
        Some(n) => {
            let check = |id: i64| -> Result<usize> {
                if id < 0 || id as u64 >= n as u64 {
                    return Err(GwError::OutOfRange { index: id as u64, count: n });
                }
                Ok(id as usize)
            };
            let mut map = BTreeMap::new();
            for &(a, b, _) in &edges {
                map.insert(a, check(a)?);
                map.insert(b, check(b)?);
            }
            for &id in labels.keys() {
                map.insert(id, check(id)?);
            }
            (Graph::new(n), map)
        }
        None => {
            let ids: BTreeSet<i64> = edges.iter().flat_map(|&(a, b, _)| [a, b]).chain(labels.keys().copied()).collect();
            let ids: Vec<i64> = ids.into_iter().collect();
            let map = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
            let mut g = Graph::new(ids.len());
            g.set_original_ids(ids);
            (g, map)
        }
    };

    for &(a, b, lineno) in &edges {
        graph
            .insert_edge(index_of[&a], index_of[&b])
            .map_err(|e| GwError::Parse { line: lineno, message: e.to_string() })?;
    }

    if !labels.is_empty() {
        let mut raw = Vec::with_capacity(graph.node_count());
        let by_index: BTreeMap<usize, i64> = labels.iter().map(|(id, c)| (index_of[id], *c)).collect();
        for node in 0..graph.node_count() {
            match by_index.get(&node) {
                Some(&c) => raw.push(c),
                None => return Err(GwError::Input(format!("node {node} has no label"))),
            }
        }
        graph = graph.with_labels(Labeling::compact(&raw))?;
    }
    Ok(graph)
}

/// Writes `g` with a `# nodes` header so that isolated nodes survive a round
/// trip.
pub fn format_edge_list(g: &Graph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# nodes {}", g.node_count());
    for (u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    if let Some(labels) = g.labels() {
        out.push_str("# labels\n");
        for (node, c) in labels.as_slice().iter().enumerate() {
            let _ = writeln!(out, "{node} {c}");
        }
    }
    out
}

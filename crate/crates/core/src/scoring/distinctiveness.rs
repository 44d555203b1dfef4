//! Weighted distinctiveness centrality.
//!
//! `D(v) = sum over neighbors j of w(v,j) * log10((n - 1) / deg(j))`, with
//! `deg` the unweighted degree and `n` the node count. Links to hubs weigh
//! little; a link to a node adjacent to everything contributes nothing.

use crate::error::Result;
use crate::graph::WordGraph;

pub fn distinctiveness(graph: &WordGraph, node: &str) -> Result<f64> {
    let idx = graph.require(node)?;
    Ok(distinctiveness_at(graph, idx))
}

pub(crate) fn distinctiveness_at(graph: &WordGraph, idx: usize) -> f64 {
    let n = graph.node_count();
    if n < 2 {
        return 0.0;
    }
    let others = (n - 1) as f64;
    graph
        .neighbors(idx)
        .iter()
        .map(|&(j, w)| w as f64 * (others / graph.degree(j) as f64).log10())
        .fold(0.0, |acc, x| acc + x)
}

/// Distinctiveness of every node, indexed like the graph.
pub fn distinctiveness_all(graph: &WordGraph) -> Vec<f64> {
    (0..graph.node_count())
        .map(|i| distinctiveness_at(graph, i))
        .collect()
}

//! Semantic Brand Score: prevalence, diversity and connectivity of keyword
//! clusters, standardized across the clusters of one timeframe and summed.

mod betweenness;
mod distinctiveness;

pub use betweenness::{betweenness_all, betweenness_of, weighted_betweenness};
pub use distinctiveness::{distinctiveness, distinctiveness_all};

use serde::{Deserialize, Serialize};

use crate::corpus::TimeBin;
use crate::error::{Error, Result};
use crate::graph::{ClusterSpec, WordGraph};

/// Raw SBS dimensions of one cluster.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DimensionScores {
    pub prevalence: u64,
    /// Distinctiveness centrality of the cluster node.
    pub diversity: f64,
    /// Weighted betweenness of the cluster node.
    pub connectivity: f64,
}

/// Dimensions after z-scoring across the cluster set.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Standardized {
    pub prevalence: f64,
    pub diversity: f64,
    pub connectivity: f64,
}

impl Standardized {
    pub fn sum(&self) -> f64 {
        self.prevalence + self.diversity + self.connectivity
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbsResult {
    pub cluster: String,
    pub bin: TimeBin,
    pub raw: DimensionScores,
    pub standardized: Standardized,
    pub sbs: f64,
    /// None of the cluster's terms occurred in the graph.
    pub absent: bool,
}

pub fn prevalence(graph: &WordGraph, node: &str) -> Result<u64> {
    graph
        .frequency(node)
        .ok_or_else(|| Error::UnknownNode(node.to_string()))
}

/// Z-scores with the population standard deviation.
///
/// A sample without spread (all values equal, or a single value) maps to
/// all zeros.
pub fn standardize(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Contract("cannot standardize an empty sample".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract(
            "cannot standardize non-finite values".into(),
        ));
    }
    let n = values.len() as f64;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Ok(vec![0.0; values.len()]);
    }
    let mean = values.iter().sum::<f64>() / n;
    let mut dev: Vec<f64> = values.iter().map(|v| v - mean).collect();
    // second pass removes the rounding error of the first mean, which
    // matters when the values sit on a large common offset
    let residual = dev.iter().sum::<f64>() / n;
    for d in &mut dev {
        *d -= residual;
    }
    let variance = dev.iter().map(|d| d * d).sum::<f64>() / n;
    let std = variance.sqrt();
    if std == 0.0 {
        return Ok(vec![0.0; values.len()]);
    }
    Ok(dev.iter().map(|d| d / std).collect())
}

/// Scores every cluster on `graph`, which must not have been merged yet.
///
/// All clusters are contracted together, raw dimensions are read off their
/// nodes, and each dimension is standardized within this cluster set.
pub fn score_clusters(
    graph: &WordGraph,
    clusters: &[ClusterSpec],
    bin: TimeBin,
) -> Result<Vec<SbsResult>> {
    let merged = graph.merge_clusters(clusters)?;
    score_merged(&merged, clusters, bin)
}

/// As [`score_clusters`], on a graph whose clusters are already contracted.
pub fn score_merged(
    merged: &WordGraph,
    clusters: &[ClusterSpec],
    bin: TimeBin,
) -> Result<Vec<SbsResult>> {
    if clusters.is_empty() {
        return Err(Error::Contract("at least one cluster is required".into()));
    }
    let nodes = clusters
        .iter()
        .map(|c| merged.require(&c.name))
        .collect::<Result<Vec<_>>>()?;

    let connectivity = betweenness_of(merged, &nodes);
    let raw: Vec<DimensionScores> = nodes
        .iter()
        .zip(&connectivity)
        .map(|(&idx, &conn)| DimensionScores {
            prevalence: merged.frequency_at(idx),
            diversity: distinctiveness::distinctiveness_at(merged, idx),
            connectivity: conn,
        })
        .collect();

    let z_prev = standardize(&raw.iter().map(|r| r.prevalence as f64).collect::<Vec<_>>())?;
    let z_div = standardize(&raw.iter().map(|r| r.diversity).collect::<Vec<_>>())?;
    let z_conn = standardize(&raw.iter().map(|r| r.connectivity).collect::<Vec<_>>())?;

    let results = clusters
        .iter()
        .enumerate()
        .map(|(i, cluster)| {
            let standardized = Standardized {
                prevalence: z_prev[i],
                diversity: z_div[i],
                connectivity: z_conn[i],
            };
            SbsResult {
                cluster: cluster.name.clone(),
                bin,
                raw: raw[i],
                standardized,
                sbs: standardized.sum(),
                absent: merged.is_absent(&cluster.name),
            }
        })
        .collect::<Vec<_>>();

    for r in &results {
        let d = r.raw;
        if !(d.diversity.is_finite()
            && d.connectivity.is_finite()
            && d.diversity >= 0.0
            && d.connectivity >= 0.0)
        {
            return Err(Error::Invariant(format!(
                "cluster `{}` has invalid raw scores {d:?}",
                r.cluster
            )));
        }
    }
    Ok(results)
}

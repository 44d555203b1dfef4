//! Cluster "images": association profiles, cosine similarity between them,
//! and a 2D map of the similarities via classical (Torgerson) MDS.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WordGraph;

const SYMMETRY_TOLERANCE: f64 = 1e-9;
const JACOBI_TOLERANCE: f64 = 1e-10;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Neighbor profile of a cluster node: term -> co-occurrence weight.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociationVector {
    pub cluster: String,
    pub associations: BTreeMap<String, u64>,
    pub absent: bool,
}

impl AssociationVector {
    /// Entries by decreasing weight, ties in term order.
    pub fn ranked(&self) -> Vec<(&str, u64)> {
        let mut out: Vec<(&str, u64)> = self
            .associations
            .iter()
            .map(|(t, &w)| (t.as_str(), w))
            .collect();
        out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        out
    }

    fn norm(&self) -> f64 {
        self.associations
            .values()
            .map(|&w| (w as f64).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn dot(&self, other: &AssociationVector) -> f64 {
        let (small, large) = if self.associations.len() <= other.associations.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .associations
            .iter()
            .filter_map(|(t, &w)| large.associations.get(t).map(|&v| w as f64 * v as f64))
            .sum()
    }
}

/// Reads the weighted neighbors of a cluster node in a merged graph,
/// optionally keeping only the `top_k` heaviest.
pub fn association_vector(
    graph: &WordGraph,
    cluster: &str,
    top_k: Option<usize>,
) -> Result<AssociationVector> {
    let idx = graph.require(cluster)?;
    let mut entries: Vec<(&str, u64)> = graph
        .neighbors(idx)
        .iter()
        .map(|&(j, w)| (graph.term(j), w))
        .collect();
    if let Some(k) = top_k {
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        entries.truncate(k);
    }
    Ok(AssociationVector {
        cluster: cluster.to_string(),
        associations: entries
            .into_iter()
            .map(|(t, w)| (t.to_string(), w))
            .collect(),
        absent: graph.is_absent(cluster),
    })
}

/// Pairwise cluster similarity, optionally with a 2D embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMap {
    pub clusters: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
    /// Clusters whose vector is all zeros; their similarities are all 0,
    /// including the diagonal.
    pub degenerate: Vec<bool>,
    pub coords: Option<Vec<[f64; 2]>>,
    /// Axes dropped because their eigenvalue was negative.
    pub flattened_axes: [bool; 2],
}

pub fn cosine_similarity_matrix(vectors: &[AssociationVector]) -> Result<SimilarityMap> {
    if vectors.len() < 2 {
        return Err(Error::Contract(format!(
            "cosine similarity needs at least 2 vectors, got {}",
            vectors.len()
        )));
    }
    let n = vectors.len();
    let norms: Vec<f64> = vectors.iter().map(AssociationVector::norm).collect();
    let degenerate: Vec<bool> = norms.iter().map(|&x| x == 0.0).collect();
    let mut matrix = vec![vec![0.0; n]; n];
    for i in 0..n {
        if degenerate[i] {
            continue;
        }
        matrix[i][i] = 1.0;
        for j in i + 1..n {
            if degenerate[j] {
                continue;
            }
            let s = (vectors[i].dot(&vectors[j]) / (norms[i] * norms[j])).clamp(0.0, 1.0);
            matrix[i][j] = s;
            matrix[j][i] = s;
        }
    }
    Ok(SimilarityMap {
        clusters: vectors.iter().map(|v| v.cluster.clone()).collect(),
        matrix,
        degenerate,
        coords: None,
        flattened_axes: [false; 2],
    })
}

/// Embeds the clusters of `similarity` in the plane, using `1 - s` as distance.
#[allow(clippy::needless_range_loop)]
pub fn classical_mds(similarity: &SimilarityMap) -> Result<SimilarityMap> {
    let s = &similarity.matrix;
    let n = s.len();
    if n == 0 || s.iter().any(|row| row.len() != n) || similarity.clusters.len() != n {
        return Err(Error::Contract(
            "similarity matrix must be square and match its labels".into(),
        ));
    }
    for i in 0..n {
        for j in 0..n {
            if !s[i][j].is_finite()
                || s[i][j] < -SYMMETRY_TOLERANCE
                || s[i][j] > 1.0 + SYMMETRY_TOLERANCE
            {
                return Err(Error::Contract(format!(
                    "similarity ({i}, {j}) = {} is outside [0, 1]",
                    s[i][j]
                )));
            }
            if (s[i][j] - s[j][i]).abs() > SYMMETRY_TOLERANCE {
                return Err(Error::Contract(format!(
                    "similarity matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let distances: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        1.0 - 0.5 * (s[i][j] + s[j][i])
                    }
                })
                .collect()
        })
        .collect();
    let embedding = mds_from_distances(&distances)?;
    Ok(SimilarityMap {
        coords: Some(embedding.coords),
        flattened_axes: embedding.flattened,
        ..similarity.clone()
    })
}

/// Result of a two-dimensional classical MDS.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub coords: Vec<[f64; 2]>,
    /// The two largest eigenvalues of the double-centered matrix.
    pub eigenvalues: [f64; 2],
    pub flattened: [bool; 2],
}

/// Classical MDS of a symmetric distance matrix into two dimensions.
#[allow(clippy::needless_range_loop)]
pub fn mds_from_distances(distances: &[Vec<f64>]) -> Result<Embedding> {
    let n = distances.len();
    if n == 0 || distances.iter().any(|row| row.len() != n) {
        return Err(Error::Contract(
            "distance matrix must be square and non-empty".into(),
        ));
    }

    // B = -1/2 J D^2 J
    let sq: Vec<Vec<f64>> = distances
        .iter()
        .map(|row| row.iter().map(|d| d * d).collect())
        .collect();
    let row_means: Vec<f64> = sq
        .iter()
        .map(|r| r.iter().sum::<f64>() / n as f64)
        .collect();
    let col_means: Vec<f64> = (0..n)
        .map(|j| sq.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let mut b = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            b[i][j] = -0.5 * (sq[i][j] - row_means[i] - col_means[j] + grand);
        }
    }
    // symmetrize away rounding
    for i in 0..n {
        for j in i + 1..n {
            let m = 0.5 * (b[i][j] + b[j][i]);
            b[i][j] = m;
            b[j][i] = m;
        }
    }

    let (values, vectors) = jacobi_eigen(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| values[c].total_cmp(&values[a]));

    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let zero = 1e-12 * scale;
    let mut coords = vec![[0.0; 2]; n];
    let mut eigenvalues = [0.0; 2];
    let mut flattened = [false; 2];
    for (axis, &k) in order.iter().take(2).enumerate() {
        let lambda = values[k];
        eigenvalues[axis] = lambda;
        if lambda < -zero {
            flattened[axis] = true;
            continue;
        }
        if lambda <= zero {
            continue;
        }
        let mut v: Vec<f64> = (0..n).map(|i| vectors[i][k]).collect();
        if let Some(first) = v.iter().copied().find(|x| x.abs() > 1e-9) {
            if first < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        let root = lambda.sqrt();
        for i in 0..n {
            coords[i][axis] = v[i] * root;
        }
    }
    for axis in 0..2 {
        let mean = coords.iter().map(|c| c[axis]).sum::<f64>() / n as f64;
        for c in &mut coords {
            c[axis] -= mean;
        }
    }
    Ok(Embedding {
        coords,
        eigenvalues,
        flattened,
    })
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns the
/// eigenvalues and a matrix whose columns are the matching eigenvectors.
#[allow(clippy::needless_range_loop)]
fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let off_norm = |a: &Vec<Vec<f64>>| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i][j] * a[i][j];
                }
            }
        }
        s.sqrt()
    };

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_norm(&a) < JACOBI_TOLERANCE {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

//! Undirected weighted word co-occurrence networks and keyword-cluster contraction.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::PreprocessConfig;
use crate::error::{Error, Result};

/// Co-occurrence window used when none is given.
pub const DEFAULT_WINDOW: usize = 3;

/// Word co-occurrence network.
///
/// Nodes are kept in lexicographic term order so that node indices, and
/// everything derived from them, are reproducible. Each adjacency list is
/// sorted by neighbor index. Edge weights are co-occurrence counts (>= 1);
/// there are no self-loops.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordGraph {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    frequency: Vec<u64>,
    absent: Vec<bool>,
    adjacency: Vec<Vec<(usize, u64)>>,
}

impl WordGraph {
    /// Assembles a graph from labelled nodes and an edge list over their
    /// positions. Parallel edges are summed and self-loops dropped.
    fn from_parts(
        terms: Vec<String>,
        frequency: Vec<u64>,
        absent: Vec<bool>,
        edges: impl IntoIterator<Item = (usize, usize, u64)>,
    ) -> Self {
        let mut order: Vec<usize> = (0..terms.len()).collect();
        order.sort_unstable_by(|&a, &b| terms[a].cmp(&terms[b]));
        let mut rank = vec![0usize; terms.len()];
        for (new, &old) in order.iter().enumerate() {
            rank[old] = new;
        }

        let mut keyed: Vec<(usize, usize, u64)> = edges
            .into_iter()
            .filter(|&(a, b, w)| a != b && w > 0)
            .map(|(a, b, w)| {
                let (a, b) = (rank[a], rank[b]);
                (a.min(b), a.max(b), w)
            })
            .collect();
        keyed.sort_unstable();

        let mut adjacency = vec![Vec::new(); terms.len()];
        let mut iter = keyed.into_iter().peekable();
        while let Some((a, b, mut w)) = iter.next() {
            while let Some(&(_, _, w2)) = iter.peek().filter(|&&(a2, b2, _)| a2 == a && b2 == b) {
                w += w2;
                iter.next();
            }
            adjacency[a].push((b, w));
            adjacency[b].push((a, w));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }

        let mut terms = terms;
        let mut sorted_terms = Vec::with_capacity(terms.len());
        let mut sorted_freq = Vec::with_capacity(terms.len());
        let mut sorted_absent = Vec::with_capacity(terms.len());
        for &old in &order {
            sorted_terms.push(std::mem::take(&mut terms[old]));
            sorted_freq.push(frequency[old]);
            sorted_absent.push(absent[old]);
        }
        let index = sorted_terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        WordGraph {
            terms: sorted_terms,
            index,
            frequency: sorted_freq,
            absent: sorted_absent,
            adjacency,
        }
    }

    pub fn node_count(&self) -> usize {
        self.terms.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, idx: usize) -> &str {
        &self.terms[idx]
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub(crate) fn require(&self, term: &str) -> Result<usize> {
        self.index_of(term)
            .ok_or_else(|| Error::UnknownNode(term.to_string()))
    }

    pub fn contains(&self, term: &str) -> bool {
        self.index.contains_key(term)
    }

    /// Total token count of a node (summed over members for a cluster node).
    pub fn frequency(&self, term: &str) -> Option<u64> {
        self.index_of(term).map(|i| self.frequency[i])
    }

    pub fn frequency_at(&self, idx: usize) -> u64 {
        self.frequency[idx]
    }

    /// True for a cluster node none of whose terms occur in the graph.
    pub fn is_absent(&self, term: &str) -> bool {
        self.index_of(term).is_some_and(|i| self.absent[i])
    }

    /// `(neighbor, weight)` pairs sorted by neighbor index.
    pub fn neighbors(&self, idx: usize) -> &[(usize, u64)] {
        &self.adjacency[idx]
    }

    /// Unweighted degree.
    pub fn degree(&self, idx: usize) -> usize {
        self.adjacency[idx].len()
    }

    pub fn weight(&self, a: &str, b: &str) -> Option<u64> {
        let (a, b) = (self.index_of(a)?, self.index_of(b)?);
        self.adjacency[a]
            .binary_search_by_key(&b, |&(n, _)| n)
            .ok()
            .map(|pos| self.adjacency[a][pos].1)
    }

    /// Every edge once, as `(term_a, term_b, weight)` with `term_a < term_b`.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, u64)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(move |(a, list)| {
                list.iter()
                    .filter(move |&&(b, _)| a < b)
                    .map(move |&(b, w)| (self.terms[a].as_str(), self.terms[b].as_str(), w))
            })
    }

    pub fn total_weight(&self) -> u64 {
        self.edges().map(|(_, _, w)| w).sum()
    }

    /// Drops edges lighter than `min_weight`. Nodes are all kept.
    pub fn filter_edges(&self, min_weight: u64) -> WordGraph {
        let mut out = self.clone();
        for list in &mut out.adjacency {
            list.retain(|&(_, w)| w >= min_weight);
        }
        out
    }

    /// Contracts one cluster into a single node. See [`WordGraph::merge_clusters`].
    pub fn merge_cluster(&self, cluster: &ClusterSpec) -> Result<WordGraph> {
        self.merge_clusters(std::slice::from_ref(cluster))
    }

    /// Contracts each cluster's terms into one node named after the cluster,
    /// all clusters at once.
    ///
    /// Edges between members of the same cluster disappear, parallel edges
    /// are summed, and the cluster node's frequency is the sum of its
    /// members'. A cluster with no term in the graph becomes an isolated,
    /// zero-frequency node flagged absent.
    pub fn merge_clusters(&self, clusters: &[ClusterSpec]) -> Result<WordGraph> {
        let problems = validate_clusters(clusters);
        if !problems.is_empty() {
            return Err(Error::Contract(problems.join("; ")));
        }
        let mut owner: HashMap<&str, usize> = HashMap::new();
        for (c, cluster) in clusters.iter().enumerate() {
            for term in &cluster.terms {
                owner.insert(term.as_str(), c);
            }
        }
        for cluster in clusters {
            if self.contains(&cluster.name) && !owner.contains_key(cluster.name.as_str()) {
                return Err(Error::Contract(format!(
                    "cluster name `{}` is also a term outside every cluster; rename the cluster or add the term to it",
                    cluster.name
                )));
            }
        }

        let mut terms = Vec::with_capacity(self.node_count() + clusters.len());
        let mut frequency = Vec::with_capacity(terms.capacity());
        let mut absent = Vec::with_capacity(terms.capacity());
        for cluster in clusters {
            terms.push(cluster.name.clone());
            frequency.push(0);
            absent.push(true);
        }
        let mut relabel = vec![0usize; self.node_count()];
        for (idx, term) in self.terms.iter().enumerate() {
            match owner.get(term.as_str()) {
                Some(&c) => {
                    relabel[idx] = c;
                    frequency[c] += self.frequency[idx];
                    absent[c] = false;
                }
                None => {
                    relabel[idx] = terms.len();
                    terms.push(term.clone());
                    frequency.push(self.frequency[idx]);
                    absent.push(self.absent[idx]);
                }
            }
        }
        let edges = self
            .adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, list)| {
                list.iter()
                    .filter(move |&&(b, _)| a < b)
                    .map(move |&(b, w)| (a, b, w))
            })
            .map(|(a, b, w)| (relabel[a], relabel[b], w));
        Ok(WordGraph::from_parts(terms, frequency, absent, edges))
    }

    /// Writes the edge list as `term_a,term_b,weight` CSV.
    pub fn write_edge_list<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Parse(e.to_string());
        w.write_record(["term_a", "term_b", "weight"])
            .map_err(csv_err)?;
        for (a, b, weight) in self.edges() {
            w.write_record([a, b, &weight.to_string()])
                .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))
    }
}

fn pair_key(a: u32, b: u32) -> u64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    ((lo as u64) << 32) | hi as u64
}

/// Builds the co-occurrence network of a set of token sequences.
///
/// Within each document, every pair of positions at distance `1..=window`
/// adds one to the weight of the edge between their terms, unless both hold
/// the same term. Documents never co-occur with each other. Node frequency
/// is the total token count.
pub fn build_graph<S: AsRef<str> + Sync>(docs: &[Vec<S>], window: usize) -> WordGraph {
    let vocab: BTreeSet<&str> = docs.iter().flatten().map(AsRef::as_ref).collect();
    let terms: Vec<String> = vocab.iter().map(|t| t.to_string()).collect();
    let ids: HashMap<&str, u32> = vocab
        .iter()
        .enumerate()
        .map(|(i, &t)| (t, i as u32))
        .collect();

    let mut frequency = vec![0u64; terms.len()];
    let encoded: Vec<Vec<u32>> = docs
        .iter()
        .map(|doc| doc.iter().map(|t| ids[t.as_ref()]).collect())
        .collect();
    for &id in encoded.iter().flatten() {
        frequency[id as usize] += 1;
    }

    let mut keys: Vec<u64> = encoded
        .par_iter()
        .flat_map_iter(|doc| {
            (0..doc.len()).flat_map(move |i| {
                doc[i + 1..doc.len().min(i + 1 + window)]
                    .iter()
                    .filter(move |&&other| other != doc[i])
                    .map(move |&other| pair_key(doc[i], other))
            })
        })
        .collect();
    keys.par_sort_unstable();

    let mut edges = Vec::new();
    for run in keys.chunk_by(|a, b| a == b) {
        let key = run[0];
        edges.push((
            (key >> 32) as usize,
            (key & 0xFFFF_FFFF) as usize,
            run.len() as u64,
        ));
    }
    let absent = vec![false; terms.len()];
    WordGraph::from_parts(terms, frequency, absent, edges)
}

/// A named keyword cluster, scored as a single network actor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub name: String,
    pub terms: BTreeSet<String>,
}

impl ClusterSpec {
    pub fn new<I, S>(name: impl Into<String>, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let name = name.into();
        let terms: BTreeSet<String> = terms.into_iter().map(Into::into).collect();
        if name.is_empty() {
            return Err(Error::Contract("cluster name is empty".into()));
        }
        if terms.is_empty() {
            return Err(Error::Contract(format!("cluster `{name}` has no terms")));
        }
        Ok(ClusterSpec { name, terms })
    }
}

/// Problems that prevent a set of clusters from being scored together.
pub fn validate_clusters(clusters: &[ClusterSpec]) -> Vec<String> {
    let mut problems = Vec::new();
    let mut names = BTreeSet::new();
    let mut owner: BTreeMap<&str, &str> = BTreeMap::new();
    for cluster in clusters {
        if cluster.name.is_empty() {
            problems.push("cluster with empty name".to_string());
        }
        if !names.insert(cluster.name.as_str()) {
            problems.push(format!("duplicate cluster name `{}`", cluster.name));
        }
        if cluster.terms.is_empty() {
            problems.push(format!("cluster `{}` has no terms", cluster.name));
        }
        for term in &cluster.terms {
            if let Some(prev) = owner.insert(term.as_str(), cluster.name.as_str()) {
                if prev != cluster.name {
                    problems.push(format!(
                        "term `{term}` belongs to both `{prev}` and `{}`",
                        cluster.name
                    ));
                }
            }
        }
    }
    problems
}

/// Parses a cluster file: a JSON object mapping cluster name to an array of
/// terms. Terms are normalized with `config`. Clusters come back sorted by name.
pub fn parse_clusters(json: &str, config: &PreprocessConfig) -> Result<Vec<ClusterSpec>> {
    let raw: BTreeMap<String, Vec<String>> =
        serde_json::from_str(json).map_err(|e| Error::Parse(format!("cluster file: {e}")))?;
    let mut clusters = Vec::with_capacity(raw.len());
    for (name, terms) in raw {
        let normalized: Vec<String> = terms
            .iter()
            .filter_map(|t| config.normalize_term(t))
            .collect();
        clusters.push(ClusterSpec::new(name, normalized)?);
    }
    Ok(clusters)
}

pub fn load_clusters(path: &Path, config: &PreprocessConfig) -> Result<Vec<ClusterSpec>> {
    let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_clusters(&json, config).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

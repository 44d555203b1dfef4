//! Exact weighted betweenness centrality (Brandes, Dijkstra variant).
//!
//! Edge length is `1 / weight`, so frequent co-occurrence means a short
//! path. Scores are unnormalized and count each unordered pair once;
//! disconnected pairs contribute nothing. Two path lengths are equal when
//! they agree to a relative tolerance of 1e-12.
//!
//! Single-source passes run in parallel over fixed chunks of sources. Each
//! chunk sums its sources in order and chunks are combined in order, so the
//! result does not depend on the number of threads.

use rayon::prelude::*;

use crate::error::Result;
use crate::graph::WordGraph;

const TIE_TOLERANCE: f64 = 1e-12;
const MAX_CHUNKS: usize = 64;
const MIN_CHUNK: usize = 8;

/// Compressed adjacency with precomputed edge lengths. Nodes are relabeled
/// by descending degree so the hubs most searches pass through share cache
/// lines.
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    lengths: Vec<f64>,
    /// Graph index of each relabeled node.
    original: Vec<usize>,
    /// Relabeled index of each graph node.
    relabel: Vec<u32>,
}

impl Csr {
    fn new(graph: &WordGraph) -> Self {
        let n = graph.node_count();
        let mut original: Vec<usize> = (0..n).collect();
        original.sort_by_key(|&v| std::cmp::Reverse(graph.degree(v)));
        let mut relabel = vec![0u32; n];
        for (new, &old) in original.iter().enumerate() {
            relabel[old] = new as u32;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut lengths = Vec::new();
        offsets.push(0);
        for &v in &original {
            for &(w, weight) in graph.neighbors(v) {
                targets.push(relabel[w]);
                lengths.push(1.0 / weight as f64);
            }
            offsets.push(targets.len());
        }
        Csr {
            offsets,
            targets,
            lengths,
            original,
            relabel,
        }
    }

    fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    fn edges(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[v]..self.offsets[v + 1];
        self.targets[range.clone()]
            .iter()
            .zip(&self.lengths[range])
            .map(|(&t, &l)| (t as usize, l))
    }
}

/// Monotone priority queue over `u64` keys: no key pushed may be below the
/// last key popped. Push is O(1); each entry moves between buckets at most
/// once per bit of the key.
struct RadixHeap {
    last: u64,
    len: usize,
    buckets: [Vec<(u64, u32)>; 65],
}

impl RadixHeap {
    fn new() -> Self {
        RadixHeap {
            last: 0,
            len: 0,
            buckets: std::array::from_fn(|_| Vec::new()),
        }
    }

    fn bucket(&self, key: u64) -> usize {
        64 - (key ^ self.last).leading_zeros() as usize
    }

    fn push(&mut self, key: u64, item: u32) {
        debug_assert!(key >= self.last);
        let b = self.bucket(key);
        self.buckets[b].push((key, item));
        self.len += 1;
    }

    fn pop(&mut self) -> Option<(u64, u32)> {
        if self.len == 0 {
            return None;
        }
        if self.buckets[0].is_empty() {
            let i = (1..65).find(|&i| !self.buckets[i].is_empty()).unwrap();
            let mut moving = std::mem::take(&mut self.buckets[i]);
            self.last = moving.iter().map(|e| e.0).min().unwrap();
            for &(key, item) in &moving {
                let b = self.bucket(key);
                self.buckets[b].push((key, item));
            }
            moving.clear();
            self.buckets[i] = moving;
        }
        self.len -= 1;
        self.buckets[0].pop()
    }

    fn clear(&mut self) {
        for b in &mut self.buckets {
            b.clear();
        }
        self.last = 0;
        self.len = 0;
    }
}

/// Reusable per-thread buffers for single-source passes.
struct Workspace {
    dist: Vec<f64>,
    sigma: Vec<f64>,
    delta: Vec<f64>,
    settled: Vec<bool>,
    preds: Vec<Vec<u32>>,
    order: Vec<u32>,
    heap: RadixHeap,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Workspace {
            dist: vec![f64::INFINITY; n],
            sigma: vec![0.0; n],
            delta: vec![0.0; n],
            settled: vec![false; n],
            preds: vec![Vec::new(); n],
            order: Vec::with_capacity(n),
            heap: RadixHeap::new(),
        }
    }

    /// Adds the dependencies of `source` on every other node to `acc`.
    fn accumulate(&mut self, csr: &Csr, source: usize, acc: &mut [f64]) {
        self.dist[source] = 0.0;
        self.sigma[source] = 1.0;
        // Non-negative floats order the same as their bit patterns.
        self.heap.push(0f64.to_bits(), source as u32);

        while let Some((bits, v)) = self.heap.pop() {
            let v = v as usize;
            if self.settled[v] || bits != self.dist[v].to_bits() {
                continue;
            }
            self.settled[v] = true;
            self.order.push(v as u32);
            let (dv, sv) = (self.dist[v], self.sigma[v]);
            for (w, len) in csr.edges(v) {
                // A settled neighbor is never improved or tied: its distance
                // is at most dv, and every length is well above the tolerance.
                let alt = dv + len;
                let dw = self.dist[w];
                if alt > dw * (1.0 + TIE_TOLERANCE) {
                    continue;
                }
                if alt < dw * (1.0 - TIE_TOLERANCE) {
                    self.dist[w] = alt;
                    self.sigma[w] = sv;
                    self.preds[w].clear();
                    self.preds[w].push(v as u32);
                    self.heap.push(alt.to_bits(), w as u32);
                } else if !self.settled[w] {
                    self.sigma[w] += sv;
                    self.preds[w].push(v as u32);
                }
            }
        }

        // Settled in non-decreasing distance, so walk back from the farthest.
        for &w in self.order.iter().rev() {
            let w = w as usize;
            let coeff = (1.0 + self.delta[w]) / self.sigma[w];
            for &v in &self.preds[w] {
                let v = v as usize;
                self.delta[v] += self.sigma[v] * coeff;
            }
            if w != source {
                acc[w] += self.delta[w];
            }
        }

        for &v in &self.order {
            let v = v as usize;
            self.dist[v] = f64::INFINITY;
            self.sigma[v] = 0.0;
            self.delta[v] = 0.0;
            self.settled[v] = false;
            self.preds[v].clear();
        }
        self.order.clear();
        self.heap.clear();
    }
}

fn brandes(csr: &Csr, sources: &[usize]) -> Vec<f64> {
    let n = csr.len();
    if sources.is_empty() {
        return vec![0.0; n];
    }
    let chunk = sources.len().div_ceil(MAX_CHUNKS).max(MIN_CHUNK);
    let partials: Vec<Vec<f64>> = sources
        .par_chunks(chunk)
        .map(|chunk| {
            let mut ws = Workspace::new(n);
            let mut acc = vec![0.0; n];
            for &s in chunk {
                ws.accumulate(csr, csr.relabel[s] as usize, &mut acc);
            }
            acc
        })
        .collect();

    let mut total = vec![0.0; n];
    for partial in &partials {
        for (t, p) in total.iter_mut().zip(partial) {
            *t += p;
        }
    }
    // Each unordered pair was seen from both ends.
    let mut scores = vec![0.0; n];
    for (new, &old) in csr.original.iter().enumerate() {
        scores[old] = total[new] / 2.0;
    }
    scores
}

/// Betweenness of every node, indexed like the graph.
pub fn betweenness_all(graph: &WordGraph) -> Vec<f64> {
    let sources: Vec<usize> = (0..graph.node_count()).collect();
    brandes(&Csr::new(graph), &sources)
}

/// Betweenness of the given nodes only, in the order given.
///
/// Sources outside the connected components of `targets` cannot add to
/// their scores and are skipped.
pub fn betweenness_of(graph: &WordGraph, targets: &[usize]) -> Vec<f64> {
    let n = graph.node_count();
    let mut component = vec![usize::MAX; n];
    let mut stack = Vec::new();
    for (label, &t) in targets.iter().enumerate() {
        if component[t] != usize::MAX {
            continue;
        }
        component[t] = label;
        stack.push(t);
        while let Some(v) = stack.pop() {
            for &(w, _) in graph.neighbors(v) {
                if component[w] == usize::MAX {
                    component[w] = label;
                    stack.push(w);
                }
            }
        }
    }
    let sources: Vec<usize> = (0..n).filter(|&v| component[v] != usize::MAX).collect();
    let all = brandes(&Csr::new(graph), &sources);
    targets.iter().map(|&t| all[t]).collect()
}

pub fn weighted_betweenness(graph: &WordGraph, node: &str) -> Result<f64> {
    let idx = graph.require(node)?;
    Ok(betweenness_of(graph, &[idx])[0])
}

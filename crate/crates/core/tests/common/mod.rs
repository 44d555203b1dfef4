//! Shared fixtures: a seeded synthetic news corpus and small oracles.
#![allow(dead_code)]

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use brandscore::corpus::english_stopwords;
use brandscore::{ClusterSpec, Document};
use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

const CONSONANTS: &[u8] = b"bcdfghjklmnprstvwz";
const VOWELS: &[u8] = b"aeiou";

/// Letters-only pseudo-words, none of them an English stop-word.
pub fn vocabulary(size: usize) -> Vec<String> {
    let stop = english_stopwords();
    let syllables: Vec<String> = CONSONANTS
        .iter()
        .flat_map(|&c| {
            VOWELS
                .iter()
                .map(move |&v| format!("{}{}", c as char, v as char))
        })
        .collect();
    let base = syllables.len();
    let mut out = Vec::with_capacity(size);
    let mut i = 0usize;
    while out.len() < size {
        // two syllables for the first base^2 words, three after that
        let (mut n, digits) = if i < base * base {
            (i, 2)
        } else {
            (i - base * base, 3)
        };
        let mut word = String::new();
        for _ in 0..digits {
            word.push_str(&syllables[n % base]);
            n /= base;
        }
        if !stop.contains(&word) {
            out.push(word);
        }
        i += 1;
    }
    out
}

/// One keyword cluster of the synthetic corpus and its mention rate per
/// document, month by month.
#[derive(Debug, Clone)]
pub struct SynthCluster {
    pub name: String,
    pub terms: Vec<String>,
    pub rate_by_month: Vec<f64>,
}

impl SynthCluster {
    pub fn constant(name: &str, terms: &[&str], rate: f64, months: usize) -> Self {
        SynthCluster {
            name: name.into(),
            terms: terms.iter().map(|s| s.to_string()).collect(),
            rate_by_month: vec![rate; months],
        }
    }

    /// Flat at `base`, then a linear climb to `peak` over the final `surge` months.
    pub fn surging(
        name: &str,
        terms: &[&str],
        base: f64,
        peak: f64,
        months: usize,
        surge: usize,
    ) -> Self {
        let rate_by_month = (0..months)
            .map(|m| {
                let into = (m + surge + 1).saturating_sub(months);
                base + (peak - base) * into as f64 / surge as f64
            })
            .collect();
        SynthCluster {
            name: name.into(),
            terms: terms.iter().map(|s| s.to_string()).collect(),
            rate_by_month,
        }
    }

    pub fn spec(&self) -> ClusterSpec {
        ClusterSpec::new(self.name.clone(), self.terms.iter().cloned()).unwrap()
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub documents: usize,
    pub months: usize,
    pub start: NaiveDate,
    pub vocabulary: usize,
    pub zipf_exponent: f64,
    pub min_len: usize,
    pub max_len: usize,
    pub clusters: Vec<SynthCluster>,
    pub seed: u64,
}

impl SynthCorpus {
    /// Number of final months over which `energy_community` surges in
    /// [`SynthCorpus::desk_scale`].
    pub const SURGE_MONTHS: usize = 6;

    /// 10,000 short documents over 24 months with eight clusters of varying
    /// reach. `sustainability` and `social_community` dominate throughout;
    /// `energy_community` climbs over the final months.
    pub fn desk_scale() -> Self {
        let months = 24;
        let c = |name: &str, terms: &[&str], rate: f64| {
            SynthCluster::constant(name, terms, rate, months)
        };
        SynthCorpus {
            documents: 10_000,
            months,
            start: NaiveDate::from_ymd_opt(2019, 1, 1).unwrap(),
            vocabulary: 40_000,
            zipf_exponent: 1.0,
            min_len: 8,
            max_len: 16,
            clusters: vec![
                SynthCluster::surging(
                    "energy_community",
                    &["ecommunity", "ecommunities"],
                    0.15,
                    0.8,
                    months,
                    Self::SURGE_MONTHS,
                ),
                c("collective_self_consumption", &["selfconsumption"], 0.05),
                c("efficiency", &["efficiency", "efficient"], 0.6),
                c("sustainability", &["sustainability", "sustainable"], 1.2),
                c(
                    "renewables",
                    &["renewable", "renewables", "photovoltaic"],
                    0.8,
                ),
                c("social_community", &["citizens", "community"], 1.1),
                c("tax_benefits", &["incentive", "deduction"], 0.2),
                c("eu_directives", &["directive", "directives"], 0.1),
            ],
            seed: 7,
        }
    }

    pub fn cluster_specs(&self) -> Vec<ClusterSpec> {
        self.clusters.iter().map(SynthCluster::spec).collect()
    }

    fn date(&self, month: usize, day: u32) -> NaiveDate {
        let m0 = self.start.month0() as usize + month;
        let year = self.start.year() + (m0 / 12) as i32;
        NaiveDate::from_ymd_opt(year, (m0 % 12) as u32 + 1, day).unwrap()
    }

    pub fn generate(&self) -> Vec<Document> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let vocab = vocabulary(self.vocabulary);
        let zipf = Zipf::new(self.vocabulary as f64, self.zipf_exponent).unwrap();
        let fillers = ["the", "and", "of", "in", "for", "with"];
        let mut docs = Vec::with_capacity(self.documents);
        for i in 0..self.documents {
            let month = i * self.months / self.documents;
            let date = self.date(month, rng.random_range(1..=28));
            let len = rng.random_range(self.min_len..=self.max_len);
            let mut words: Vec<&str> = (0..len)
                .map(|_| vocab[zipf.sample(&mut rng) as usize - 1].as_str())
                .collect();
            for cluster in &self.clusters {
                let rate = cluster.rate_by_month[month];
                let mut mentions = rate.floor() as usize;
                if rng.random_bool(rate.fract()) {
                    mentions += 1;
                }
                for _ in 0..mentions {
                    let term = cluster.terms[rng.random_range(0..cluster.terms.len())].as_str();
                    let at = rng.random_range(0..=words.len());
                    words.insert(at, term);
                }
            }
            let mut text = String::new();
            for (k, w) in words.iter().enumerate() {
                if k > 0 {
                    text.push(' ');
                }
                if k % 7 == 3 {
                    text.push_str(fillers[k % fillers.len()]);
                    text.push(' ');
                }
                text.push_str(w);
                if k % 11 == 10 {
                    text.push(',');
                }
            }
            text.push('.');
            docs.push(Document {
                id: format!("doc-{i:05}"),
                date,
                text,
                source: Some("synthetic".into()),
            });
        }
        docs
    }
}

pub fn write_jsonl(path: &Path, docs: &[Document]) {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).unwrap());
    for d in docs {
        serde_json::to_writer(&mut f, d).unwrap();
        f.write_all(b"\n").unwrap();
    }
    f.flush().unwrap();
}

pub fn write_clusters(path: &Path, clusters: &[ClusterSpec]) {
    let map: serde_json::Map<String, serde_json::Value> = clusters
        .iter()
        .map(|c| (c.name.clone(), serde_json::json!(c.terms)))
        .collect();
    std::fs::write(path, serde_json::to_string_pretty(&map).unwrap()).unwrap();
}

/// In-window pairs with distinct terms, counted position by position.
pub fn brute_force_pair_count(docs: &[Vec<String>], window: usize) -> u64 {
    let mut count = 0;
    for doc in docs {
        for i in 0..doc.len() {
            for j in i + 1..doc.len() {
                if j - i <= window && doc[i] != doc[j] {
                    count += 1;
                }
            }
        }
    }
    count
}

/// Undirected weighted graph as an explicit edge list, for the path oracle.
#[derive(Debug, Clone)]
pub struct SmallGraph {
    pub n: usize,
    pub edges: Vec<(usize, usize, u64)>,
}

impl SmallGraph {
    /// Random connected graph: a random spanning tree plus extra edges.
    pub fn random_connected(rng: &mut impl Rng, n: usize, extra: usize, max_weight: u64) -> Self {
        let mut edges = Vec::new();
        let mut present = HashSet::new();
        for v in 1..n {
            let u = rng.random_range(0..v);
            edges.push((u, v, rng.random_range(1..=max_weight)));
            present.insert((u, v));
        }
        let mut attempts = 0;
        while edges.len() < n - 1 + extra && attempts < 10 * (extra + 1) {
            attempts += 1;
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            let (a, b) = (a.min(b), a.max(b));
            if a != b && present.insert((a, b)) {
                edges.push((a, b, rng.random_range(1..=max_weight)));
            }
        }
        SmallGraph { n, edges }
    }

    pub fn node_name(i: usize) -> String {
        format!("n{i:02}")
    }

    /// Token documents whose co-occurrence graph (window 1) is this graph:
    /// each edge of weight w becomes w two-token documents.
    pub fn as_documents(&self) -> Vec<Vec<String>> {
        let mut docs = Vec::new();
        for &(a, b, w) in &self.edges {
            for _ in 0..w {
                docs.push(vec![Self::node_name(a), Self::node_name(b)]);
            }
        }
        for v in 0..self.n {
            docs.push(vec![Self::node_name(v)]);
        }
        docs
    }

    /// Betweenness of every node by enumerating all simple paths between
    /// every pair and keeping the minimal-length ones (length = 1/weight).
    #[allow(clippy::needless_range_loop)]
    pub fn brute_force_betweenness(&self) -> Vec<f64> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b, w) in &self.edges {
            adj[a].push((b, 1.0 / w as f64));
            adj[b].push((a, 1.0 / w as f64));
        }
        let mut score = vec![0.0; self.n];
        for s in 0..self.n {
            // every simple path from s: (end, length, interior node mask)
            let mut paths: Vec<(usize, f64, u64)> = Vec::new();
            let mut stack = vec![(s, 0.0f64, 1u64 << s, 0u64)];
            while let Some((v, len, visited, interior)) = stack.pop() {
                if v != s {
                    paths.push((v, len, interior));
                }
                for &(w, l) in &adj[v] {
                    if visited & (1 << w) == 0 {
                        let inner = if v == s {
                            interior
                        } else {
                            interior | (1 << v)
                        };
                        stack.push((w, len + l, visited | (1 << w), inner));
                    }
                }
            }
            for t in s + 1..self.n {
                let to_t: Vec<&(usize, f64, u64)> = paths.iter().filter(|p| p.0 == t).collect();
                let Some(best) = to_t.iter().map(|p| p.1).min_by(f64::total_cmp) else {
                    continue;
                };
                let shortest: Vec<u64> = to_t
                    .iter()
                    .filter(|p| (p.1 - best).abs() <= 1e-9 * best)
                    .map(|p| p.2)
                    .collect();
                let total = shortest.len() as f64;
                for v in 0..self.n {
                    let through = shortest
                        .iter()
                        .filter(|&&mask| mask & (1 << v) != 0)
                        .count();
                    score[v] += through as f64 / total;
                }
            }
        }
        score
    }
}

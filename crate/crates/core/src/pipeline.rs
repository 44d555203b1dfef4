//! End-to-end runs: ingest, preprocess, bin, build graphs, score, and write
//! results to an output directory.
//!
//! Per-bin graphs are independent. Whole-period outputs (dimension
//! breakdown, similarity map, associations) use a single graph built from
//! every document.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    self, bin_documents, date_range, load_corpus, CorpusFormat, Document, Granularity, Language,
    PreprocessConfig, Strictness, TimeBin,
};
use crate::error::{Error, RecordError, Result};
use crate::graph::{self, build_graph, validate_clusters, ClusterSpec, WordGraph, DEFAULT_WINDOW};
use crate::imagery::{
    association_vector, classical_mds, cosine_similarity_matrix, AssociationVector, SimilarityMap,
};
use crate::keywords::{suggest_keywords, KeywordScore, DEFAULT_DF_CEILING};
use crate::scoring::{score_merged, SbsResult};

pub const DEFAULT_TOP_K: usize = 50;

/// Run settings as they appear in a JSON config file or on the command
/// line. Every field is optional; command-line values override the file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub struct RunSettings {
    pub corpus: Option<PathBuf>,
    pub format: Option<CorpusFormat>,
    pub clusters: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub window: Option<usize>,
    #[serde(alias = "min-edge-weight")]
    pub min_edge_weight: Option<u64>,
    #[serde(alias = "granularity")]
    pub bin: Option<Granularity>,
    pub stem: Option<bool>,
    pub language: Option<String>,
    #[serde(alias = "df-ceiling")]
    pub df_ceiling: Option<f64>,
    pub out: Option<PathBuf>,
    pub strict: Option<bool>,
    #[serde(alias = "top-k")]
    pub top_k: Option<usize>,
    pub threads: Option<usize>,
}

impl RunSettings {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Validation(vec![format!("{}: {e}", path.display())]))
    }

    /// Values set in `overrides` win.
    pub fn overridden_by(self, overrides: RunSettings) -> RunSettings {
        RunSettings {
            corpus: overrides.corpus.or(self.corpus),
            format: overrides.format.or(self.format),
            clusters: overrides.clusters.or(self.clusters),
            stopwords: overrides.stopwords.or(self.stopwords),
            window: overrides.window.or(self.window),
            min_edge_weight: overrides.min_edge_weight.or(self.min_edge_weight),
            bin: overrides.bin.or(self.bin),
            stem: overrides.stem.or(self.stem),
            language: overrides.language.or(self.language),
            df_ceiling: overrides.df_ceiling.or(self.df_ceiling),
            out: overrides.out.or(self.out),
            strict: overrides.strict.or(self.strict),
            top_k: overrides.top_k.or(self.top_k),
            threads: overrides.threads.or(self.threads),
        }
    }
}

/// A validated run configuration with its stop-words and clusters loaded.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub corpus: PathBuf,
    pub format: CorpusFormat,
    pub clusters: Vec<ClusterSpec>,
    pub preprocess: PreprocessConfig,
    pub window: usize,
    pub min_edge_weight: u64,
    pub granularity: Granularity,
    pub df_ceiling: f64,
    pub out: PathBuf,
    pub strictness: Strictness,
    pub top_k: usize,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl RunConfig {
    /// Validates `settings`, reporting every problem at once.
    pub fn from_settings(settings: RunSettings, needs_clusters: bool) -> Result<Self> {
        let mut problems = Vec::new();

        let corpus = match settings.corpus {
            Some(p) if p.is_file() => Some(p),
            Some(p) => {
                problems.push(format!("corpus file {} does not exist", p.display()));
                None
            }
            None => {
                problems.push("no corpus given".to_string());
                None
            }
        };
        let format = settings.format.unwrap_or_else(|| match &corpus {
            Some(p) if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) => {
                CorpusFormat::Csv
            }
            _ => CorpusFormat::Jsonl,
        });

        let window = settings.window.unwrap_or(DEFAULT_WINDOW);
        if window == 0 {
            problems.push("window must be >= 1".to_string());
        }
        let min_edge_weight = settings.min_edge_weight.unwrap_or(1);
        if min_edge_weight == 0 {
            problems.push("min_edge_weight must be >= 1".to_string());
        }
        let df_ceiling = settings.df_ceiling.unwrap_or(DEFAULT_DF_CEILING);
        if !(df_ceiling > 0.0 && df_ceiling <= 1.0) {
            problems.push(format!("df_ceiling {df_ceiling} must be in (0, 1]"));
        }
        let top_k = settings.top_k.unwrap_or(DEFAULT_TOP_K);
        if top_k == 0 {
            problems.push("top_k must be >= 1".to_string());
        }
        if settings.threads == Some(0) {
            problems.push("threads must be >= 1".to_string());
        }

        let mut preprocess = PreprocessConfig {
            stem: settings.stem.unwrap_or(false),
            ..PreprocessConfig::default()
        };
        if let Some(lang) = &settings.language {
            match lang.parse::<Language>() {
                Ok(l) => preprocess.language = l,
                Err(e) => problems.push(e.to_string()),
            }
        }
        if let Some(path) = &settings.stopwords {
            if !path.is_file() {
                problems.push(format!("stop-word file {} does not exist", path.display()));
            } else {
                match corpus::load_stopwords(path) {
                    Ok(words) => preprocess.stopwords = words,
                    Err(e) => problems.push(e.to_string()),
                }
            }
        }
        problems.extend(preprocess.validate());

        let mut clusters = Vec::new();
        match &settings.clusters {
            Some(path) if !path.is_file() => {
                problems.push(format!("cluster file {} does not exist", path.display()))
            }
            Some(path) => match graph::load_clusters(path, &preprocess) {
                Ok(cs) => {
                    problems.extend(validate_clusters(&cs));
                    if cs.is_empty() && needs_clusters {
                        problems.push(format!(
                            "cluster file {} defines no clusters",
                            path.display()
                        ));
                    }
                    clusters = cs;
                }
                Err(e) => problems.push(e.to_string()),
            },
            None if needs_clusters => problems.push("no cluster file given".to_string()),
            None => {}
        }

        let out = settings.out.unwrap_or_else(|| PathBuf::from("."));
        if out.exists() && !out.is_dir() {
            problems.push(format!("output path {} is not a directory", out.display()));
        }

        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        Ok(RunConfig {
            corpus: corpus.expect("checked above"),
            format,
            clusters,
            preprocess,
            window,
            min_edge_weight,
            granularity: settings.bin.unwrap_or(Granularity::Month),
            df_ceiling,
            out,
            strictness: if settings.strict.unwrap_or(false) {
                Strictness::Strict
            } else {
                Strictness::Lenient
            },
            top_k,
            threads: settings.threads,
        })
    }

    /// Runs `f` on a pool of the configured size.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        match self.threads {
            None => Ok(f()),
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map(|pool| pool.install(f))
                .map_err(|e| Error::Invariant(format!("thread pool: {e}"))),
        }
    }
}

/// Documents with their token sequences, aligned by position.
#[derive(Debug, Clone, Default)]
pub struct PreparedCorpus {
    pub documents: Vec<Document>,
    pub tokens: Vec<Vec<String>>,
    pub skipped: Vec<RecordError>,
}

impl PreparedCorpus {
    pub fn load(config: &RunConfig) -> Result<Self> {
        let loaded = load_corpus(&config.corpus, config.format, config.strictness)?;
        Ok(Self::from_documents(
            loaded.documents,
            &config.preprocess,
            loaded.skipped,
        ))
    }

    pub fn from_documents(
        documents: Vec<Document>,
        preprocess: &PreprocessConfig,
        skipped: Vec<RecordError>,
    ) -> Self {
        let tokens = corpus::preprocess_all(
            documents
                .par_iter()
                .map(|d| d.text.as_str())
                .collect::<Vec<_>>(),
            preprocess,
        );
        PreparedCorpus {
            documents,
            tokens,
            skipped,
        }
    }

    fn whole_period(&self) -> Result<TimeBin> {
        let (start, end) = date_range(&self.documents)
            .ok_or_else(|| Error::Parse("corpus contains no documents".into()))?;
        Ok(TimeBin::span(start, end))
    }

    fn graph(&self, config: &RunConfig) -> WordGraph {
        build_graph(&self.tokens, config.window).filter_edges(config.min_edge_weight)
    }
}

/// SBS over time for one cluster: one point per bin, no gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendSeries {
    pub cluster: String,
    pub points: Vec<SbsResult>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendReport {
    pub series: Vec<TrendSeries>,
    /// Whole-period raw and standardized dimensions per cluster.
    pub breakdown: Vec<SbsResult>,
}

pub fn run_suggest(config: &RunConfig, corpus: &PreparedCorpus) -> Result<Vec<KeywordScore>> {
    suggest_keywords(&corpus.tokens, config.top_k, config.df_ceiling)
}

/// Scores all clusters treating the whole corpus as one timeframe.
pub fn run_score(config: &RunConfig, corpus: &PreparedCorpus) -> Result<Vec<SbsResult>> {
    let bin = corpus.whole_period()?;
    let merged = corpus.graph(config).merge_clusters(&config.clusters)?;
    score_merged(&merged, &config.clusters, bin)
}

pub fn run_trends(config: &RunConfig, corpus: &PreparedCorpus) -> Result<TrendReport> {
    let breakdown = run_score(config, corpus)?;

    let position: HashMap<&str, usize> = corpus
        .documents
        .iter()
        .enumerate()
        .map(|(i, d)| (d.id.as_str(), i))
        .collect();
    let bins: Vec<(TimeBin, Vec<usize>)> = bin_documents(&corpus.documents, config.granularity)
        .into_iter()
        .map(|(bin, docs)| (bin, docs.iter().map(|d| position[d.id.as_str()]).collect()))
        .collect();

    let per_bin: Vec<Vec<SbsResult>> = bins
        .par_iter()
        .map(|(bin, members)| {
            let tokens: Vec<&Vec<String>> = members.iter().map(|&i| &corpus.tokens[i]).collect();
            let docs: Vec<Vec<&str>> = tokens
                .iter()
                .map(|t| t.iter().map(String::as_str).collect())
                .collect();
            let merged = build_graph(&docs, config.window)
                .filter_edges(config.min_edge_weight)
                .merge_clusters(&config.clusters)?;
            score_merged(&merged, &config.clusters, *bin)
        })
        .collect::<Result<_>>()?;

    let series = config
        .clusters
        .iter()
        .enumerate()
        .map(|(c, cluster)| TrendSeries {
            cluster: cluster.name.clone(),
            points: per_bin.iter().map(|scores| scores[c].clone()).collect(),
        })
        .collect::<Vec<_>>();
    for s in &series {
        if s.points
            .windows(2)
            .any(|w| w[0].bin.start >= w[1].bin.start)
        {
            return Err(Error::Invariant(format!(
                "trend bins for `{}` are not increasing",
                s.cluster
            )));
        }
    }
    Ok(TrendReport { series, breakdown })
}

fn merged_whole_graph(config: &RunConfig, corpus: &PreparedCorpus) -> Result<WordGraph> {
    corpus.graph(config).merge_clusters(&config.clusters)
}

pub fn run_similarity(config: &RunConfig, corpus: &PreparedCorpus) -> Result<SimilarityMap> {
    if config.clusters.len() < 2 {
        return Err(Error::Validation(vec![
            "similarity needs at least 2 clusters".into(),
        ]));
    }
    let merged = merged_whole_graph(config, corpus)?;
    let vectors = config
        .clusters
        .iter()
        .map(|c| association_vector(&merged, &c.name, None))
        .collect::<Result<Vec<_>>>()?;
    classical_mds(&cosine_similarity_matrix(&vectors)?)
}

pub fn run_associations(
    config: &RunConfig,
    corpus: &PreparedCorpus,
) -> Result<Vec<AssociationVector>> {
    let merged = merged_whole_graph(config, corpus)?;
    config
        .clusters
        .iter()
        .map(|c| association_vector(&merged, &c.name, Some(config.top_k)))
        .collect()
}

/// One line of a scores export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub bin_start: chrono::NaiveDate,
    pub bin_end: chrono::NaiveDate,
    pub cluster: String,
    pub prevalence: u64,
    pub diversity: f64,
    pub connectivity: f64,
    pub z_prevalence: f64,
    pub z_diversity: f64,
    pub z_connectivity: f64,
    pub sbs: f64,
}

impl From<&SbsResult> for ScoreRow {
    fn from(r: &SbsResult) -> Self {
        ScoreRow {
            bin_start: r.bin.start,
            bin_end: r.bin.end,
            cluster: r.cluster.clone(),
            prevalence: r.raw.prevalence,
            diversity: r.raw.diversity,
            connectivity: r.raw.connectivity,
            z_prevalence: r.standardized.prevalence,
            z_diversity: r.standardized.diversity,
            z_connectivity: r.standardized.connectivity,
            sbs: r.sbs,
        }
    }
}

/// One word-cloud entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociationRow {
    pub cluster: String,
    pub term: String,
    pub weight: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssociationSummary {
    pub cluster: String,
    pub absent: bool,
    pub terms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityExport {
    pub clusters: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
    pub coords: Vec<[f64; 2]>,
    pub degenerate: Vec<bool>,
    pub flattened_axes: [bool; 2],
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn csv_error(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn write_csv<T: Serialize>(
    dir: &Path,
    name: &str,
    rows: impl IntoIterator<Item = T>,
) -> Result<PathBuf> {
    let mut w = csv::Writer::from_writer(create(dir, name)?);
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::io(dir.join(name), e))?;
    Ok(dir.join(name))
}

fn write_json<T: Serialize + ?Sized>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Parse(e.to_string()))?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(dir.join(name), e))?;
    Ok(dir.join(name))
}

/// Writes `<stem>.csv` and its `<stem>.json` mirror.
pub fn write_scores(dir: &Path, stem: &str, results: &[SbsResult]) -> Result<Vec<PathBuf>> {
    let rows: Vec<ScoreRow> = results.iter().map(ScoreRow::from).collect();
    Ok(vec![
        write_csv(dir, &format!("{stem}.csv"), &rows)?,
        write_json(dir, &format!("{stem}.json"), &rows)?,
    ])
}

pub fn write_keywords(dir: &Path, keywords: &[KeywordScore]) -> Result<Vec<PathBuf>> {
    Ok(vec![write_csv(dir, "keywords.csv", keywords)?])
}

/// Trend rows ordered by bin, then by cluster order; plus the whole-period breakdown.
pub fn write_trends(dir: &Path, report: &TrendReport) -> Result<Vec<PathBuf>> {
    let bins = report.series.first().map_or(0, |s| s.points.len());
    let rows: Vec<SbsResult> = (0..bins)
        .flat_map(|b| report.series.iter().map(move |s| s.points[b].clone()))
        .collect();
    let mut paths = write_scores(dir, "trends", &rows)?;
    paths.extend(write_scores(dir, "breakdown", &report.breakdown)?);
    Ok(paths)
}

pub fn write_similarity(dir: &Path, map: &SimilarityMap) -> Result<Vec<PathBuf>> {
    let n = map.clusters.len();
    let mut w = csv::Writer::from_writer(create(dir, "similarity.csv")?);
    let mut header = vec!["cluster".to_string()];
    header.extend(map.clusters.iter().cloned());
    w.write_record(&header).map_err(csv_error)?;
    for (name, row) in map.clusters.iter().zip(&map.matrix) {
        let mut record = vec![name.clone()];
        record.extend(row.iter().map(f64::to_string));
        w.write_record(&record).map_err(csv_error)?;
    }
    w.flush()
        .map_err(|e| Error::io(dir.join("similarity.csv"), e))?;

    let export = SimilarityExport {
        clusters: map.clusters.clone(),
        matrix: map.matrix.clone(),
        coords: map.coords.clone().unwrap_or_else(|| vec![[0.0; 2]; n]),
        degenerate: map.degenerate.clone(),
        flattened_axes: map.flattened_axes,
    };
    Ok(vec![
        dir.join("similarity.csv"),
        write_json(dir, "similarity.json", &export)?,
    ])
}

/// Word-cloud rows, heaviest first within each cluster, plus a per-cluster summary.
pub fn write_associations(dir: &Path, vectors: &[AssociationVector]) -> Result<Vec<PathBuf>> {
    let rows: Vec<AssociationRow> = vectors
        .iter()
        .flat_map(|v| {
            v.ranked().into_iter().map(|(term, weight)| AssociationRow {
                cluster: v.cluster.clone(),
                term: term.to_string(),
                weight,
            })
        })
        .collect();
    let summary: Vec<AssociationSummary> = vectors
        .iter()
        .map(|v| AssociationSummary {
            cluster: v.cluster.clone(),
            absent: v.absent,
            terms: v.associations.len(),
        })
        .collect();
    Ok(vec![
        write_json(dir, "associations.json", &rows)?,
        write_json(dir, "association_clusters.json", &summary)?,
    ])
}

pub fn write_graph(dir: &Path, graph: &WordGraph) -> Result<PathBuf> {
    graph.write_edge_list(create(dir, "graph_edges.csv")?)?;
    Ok(dir.join("graph_edges.csv"))
}

/// Writes the whole-period (unmerged, filtered) co-occurrence graph.
pub fn export_graph(config: &RunConfig, corpus: &PreparedCorpus) -> Result<PathBuf> {
    write_graph(&config.out, &corpus.graph(config))
}

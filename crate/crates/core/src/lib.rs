//! Semantic Brand Score engine.
//!
//! Turns a timestamped text corpus into importance scores for keyword
//! clusters: each cluster is contracted into one node of a word
//! co-occurrence network and measured by prevalence (frequency), diversity
//! (distinctiveness centrality) and connectivity (weighted betweenness).
//! The three are z-scored across the clusters of a timeframe and summed.

pub mod corpus;
pub mod error;
pub mod graph;
pub mod imagery;
pub mod keywords;
pub mod pipeline;
pub mod scoring;
mod stopwords;

pub use corpus::{
    bin_documents, load_corpus, preprocess, CorpusFormat, Document, Granularity, PreprocessConfig,
    Strictness, TimeBin,
};
pub use error::{Error, Result};
pub use graph::{build_graph, ClusterSpec, WordGraph};
pub use imagery::{
    association_vector, classical_mds, cosine_similarity_matrix, AssociationVector, SimilarityMap,
};
pub use keywords::{suggest_keywords, KeywordScore};
pub use scoring::{
    distinctiveness, prevalence, score_clusters, standardize, weighted_betweenness,
    DimensionScores, SbsResult,
};

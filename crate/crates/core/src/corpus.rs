//! Document ingestion, text normalization and time binning.
//!
//! Tokens are maximal runs of letters taken from the lowercased text. The
//! underscore counts as a letter so that multi-word expressions pre-joined
//! at ingestion time (`self_consumption`) survive as one token; leading and
//! trailing underscores are trimmed.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, Duration, NaiveDate};
use rayon::prelude::*;
use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, RecordError, Result};
use crate::stopwords::ENGLISH;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub date: NaiveDate,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(Error::Parse(format!("unknown corpus format `{other}`"))),
        }
    }
}

/// What to do with a malformed record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strictness {
    /// Abort on the first bad record.
    Strict,
    /// Skip bad records and report them.
    #[default]
    Lenient,
}

/// Documents read from a corpus file, plus every record that was skipped.
#[derive(Debug, Clone, Default)]
pub struct LoadedCorpus {
    pub documents: Vec<Document>,
    pub skipped: Vec<RecordError>,
}

#[derive(Deserialize)]
struct RawRecord {
    id: Option<String>,
    date: Option<String>,
    text: Option<String>,
    #[serde(default)]
    source: Option<String>,
}

impl RawRecord {
    fn into_document(self, seen: &mut HashSet<String>) -> std::result::Result<Document, String> {
        let id = self.id.filter(|s| !s.is_empty()).ok_or("missing `id`")?;
        let date = self.date.ok_or("missing `date`")?;
        let text = self.text.ok_or("missing `text`")?;
        let date = NaiveDate::parse_from_str(date.trim(), "%Y-%m-%d")
            .map_err(|e| format!("invalid date `{date}`: {e}"))?;
        if !seen.insert(id.clone()) {
            return Err(format!("duplicate id `{id}`"));
        }
        Ok(Document {
            id,
            date,
            text,
            source: self.source.filter(|s| !s.is_empty()),
        })
    }
}

/// Reads documents from a JSONL or CSV file, in file order.
pub fn load_corpus(
    path: &Path,
    format: CorpusFormat,
    strictness: Strictness,
) -> Result<LoadedCorpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = LoadedCorpus::default();
    let mut seen = HashSet::new();

    let mut accept = |line: usize, parsed: std::result::Result<RawRecord, String>| -> Result<()> {
        match parsed.and_then(|raw| raw.into_document(&mut seen)) {
            Ok(doc) => out.documents.push(doc),
            Err(message) => {
                let err = RecordError { line, message };
                if strictness == Strictness::Strict {
                    return Err(Error::Record {
                        path: path.to_path_buf(),
                        source: err,
                    });
                }
                out.skipped.push(err);
            }
        }
        Ok(())
    };

    match format {
        CorpusFormat::Jsonl => {
            for (idx, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let parsed = serde_json::from_str::<RawRecord>(&line).map_err(|e| e.to_string());
                accept(idx + 1, parsed)?;
            }
        }
        CorpusFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(true)
                .flexible(true)
                .from_reader(file);
            let headers = reader
                .headers()
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?
                .clone();
            for result in reader.records() {
                let (line, parsed) = match result {
                    Ok(record) => {
                        let line = record.position().map_or(0, |p| p.line() as usize);
                        (
                            line,
                            record
                                .deserialize::<RawRecord>(Some(&headers))
                                .map_err(|e| e.to_string()),
                        )
                    }
                    Err(e) => {
                        let line = e.position().map_or(0, |p| p.line() as usize);
                        (line, Err(e.to_string()))
                    }
                };
                accept(line, parsed)?;
            }
        }
    }
    Ok(out)
}

/// Stemming language, resolved to a Snowball algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Language {
    tag: &'static str,
    algorithm: Algorithm,
}

const LANGUAGES: &[(&str, Algorithm)] = &[
    ("arabic", Algorithm::Arabic),
    ("danish", Algorithm::Danish),
    ("dutch", Algorithm::Dutch),
    ("english", Algorithm::English),
    ("finnish", Algorithm::Finnish),
    ("french", Algorithm::French),
    ("german", Algorithm::German),
    ("greek", Algorithm::Greek),
    ("hungarian", Algorithm::Hungarian),
    ("italian", Algorithm::Italian),
    ("norwegian", Algorithm::Norwegian),
    ("portuguese", Algorithm::Portuguese),
    ("romanian", Algorithm::Romanian),
    ("russian", Algorithm::Russian),
    ("spanish", Algorithm::Spanish),
    ("swedish", Algorithm::Swedish),
    ("tamil", Algorithm::Tamil),
    ("turkish", Algorithm::Turkish),
];

impl Language {
    pub fn tag(&self) -> &'static str {
        self.tag
    }
}

impl Default for Language {
    fn default() -> Self {
        Language {
            tag: "english",
            algorithm: Algorithm::English,
        }
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().to_lowercase();
        LANGUAGES
            .iter()
            .find(|(tag, _)| *tag == wanted)
            .map(|&(tag, algorithm)| Language { tag, algorithm })
            .ok_or_else(|| Error::Parse(format!("no stemmer for language `{s}`")))
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag)
    }
}

#[derive(Debug, Clone)]
pub struct PreprocessConfig {
    pub stopwords: HashSet<String>,
    pub stem: bool,
    pub language: Language,
    pub min_token_length: usize,
}

impl Default for PreprocessConfig {
    /// Built-in English stop-words, no stemming, tokens of two or more letters.
    fn default() -> Self {
        PreprocessConfig {
            stopwords: english_stopwords(),
            stem: false,
            language: Language::default(),
            min_token_length: 2,
        }
    }
}

impl PreprocessConfig {
    pub fn with_stopwords(stopwords: HashSet<String>) -> Self {
        PreprocessConfig {
            stopwords,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.min_token_length == 0 {
            problems.push("min_token_length must be >= 1".to_string());
        }
        for w in &self.stopwords {
            if w.chars().any(char::is_whitespace) || w.to_lowercase() != *w {
                problems.push(format!(
                    "stop-word `{w}` must be lowercase without whitespace"
                ));
            }
        }
        problems.sort();
        problems
    }

    fn stemmer(&self) -> Option<Stemmer> {
        self.stem.then(|| Stemmer::create(self.language.algorithm))
    }

    /// Normalizes a single user-supplied term (e.g. a cluster member) the way
    /// `preprocess` normalizes text, except that stop-words and the length
    /// floor are not applied. Multi-token input is joined with underscores.
    pub fn normalize_term(&self, term: &str) -> Option<String> {
        let lower = term.to_lowercase();
        let joined = tokens(&lower).collect::<Vec<_>>().join("_");
        if joined.is_empty() {
            return None;
        }
        Some(match self.stemmer() {
            Some(stemmer) => stemmer.stem(&joined).into_owned(),
            None => joined,
        })
    }
}

fn is_token_char(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn tokens(lowercased: &str) -> impl Iterator<Item = &str> {
    lowercased
        .split(|c: char| !is_token_char(c))
        .map(|t| t.trim_matches('_'))
        .filter(|t| t.chars().any(char::is_alphabetic))
}

/// Lowercases, tokenizes, drops stop-words and short tokens, and optionally stems.
pub fn preprocess(text: &str, config: &PreprocessConfig) -> Vec<String> {
    let lower = text.to_lowercase();
    let stemmer = config.stemmer();
    tokens(&lower)
        .filter(|t| t.chars().count() >= config.min_token_length)
        .filter(|t| !config.stopwords.contains(*t))
        .map(|t| match &stemmer {
            Some(s) => s.stem(t).into_owned(),
            None => t.to_string(),
        })
        .collect()
}

/// `preprocess` over many documents; output order follows input order.
pub fn preprocess_all<'a, I>(texts: I, config: &PreprocessConfig) -> Vec<Vec<String>>
where
    I: IntoParallelIterator<Item = &'a str>,
    I::Iter: IndexedParallelIterator,
{
    texts
        .into_par_iter()
        .map(|t| preprocess(t, config))
        .collect()
}

pub fn english_stopwords() -> HashSet<String> {
    ENGLISH.iter().map(|s| s.to_string()).collect()
}

/// Parses a stop-word list: one term per line, `#` starts a comment.
pub fn parse_stopwords(content: &str) -> Result<HashSet<String>> {
    let mut out = HashSet::new();
    for (idx, line) in content.lines().enumerate() {
        let term = line.split('#').next().unwrap_or("").trim();
        if term.is_empty() {
            continue;
        }
        if term.chars().any(char::is_whitespace) {
            return Err(Error::Parse(format!(
                "stop-word line {}: `{term}` contains whitespace",
                idx + 1
            )));
        }
        out.insert(term.to_lowercase());
    }
    Ok(out)
}

pub fn load_stopwords(path: &Path) -> Result<HashSet<String>> {
    let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_stopwords(&content).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

#[derive(
    Debug,
    Clone,
    Copy,
    PartialEq,
    Eq,
    Hash,
    PartialOrd,
    Ord,
    Serialize,
    Deserialize,
    clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Day,
    /// ISO week, Monday to Sunday.
    Week,
    Month,
}

impl FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "day" => Ok(Granularity::Day),
            "week" => Ok(Granularity::Week),
            "month" => Ok(Granularity::Month),
            other => Err(Error::Parse(format!("unknown granularity `{other}`"))),
        }
    }
}

/// An inclusive calendar range. Ordered by start date.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TimeBin {
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub granularity: Granularity,
}

impl TimeBin {
    /// The bin of the given granularity that contains `date`.
    pub fn containing(date: NaiveDate, granularity: Granularity) -> Self {
        let (start, end) = match granularity {
            Granularity::Day => (date, date),
            Granularity::Week => {
                let start = date - Duration::days(date.weekday().num_days_from_monday() as i64);
                (start, start + Duration::days(6))
            }
            Granularity::Month => {
                let start = date.with_day(1).expect("day 1 exists in every month");
                let next = if start.month() == 12 {
                    NaiveDate::from_ymd_opt(start.year() + 1, 1, 1)
                } else {
                    NaiveDate::from_ymd_opt(start.year(), start.month() + 1, 1)
                }
                .expect("first of next month is a valid date");
                (start, next.pred_opt().expect("month has a last day"))
            }
        };
        TimeBin {
            start,
            end,
            granularity,
        }
    }

    /// A custom inclusive range, used for whole-period scoring.
    pub fn span(start: NaiveDate, end: NaiveDate) -> Self {
        TimeBin {
            start,
            end,
            granularity: Granularity::Day,
        }
    }

    pub fn next(&self) -> Self {
        let after = self.end.succ_opt().expect("date within chrono range");
        TimeBin::containing(after, self.granularity)
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }
}

impl fmt::Display for TimeBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

/// Groups documents into calendar bins. Every bin between the first and last
/// populated one is present, empty or not; document order inside a bin
/// follows input order.
pub fn bin_documents(
    docs: &[Document],
    granularity: Granularity,
) -> BTreeMap<TimeBin, Vec<&Document>> {
    let mut bins: BTreeMap<TimeBin, Vec<&Document>> = BTreeMap::new();
    for doc in docs {
        bins.entry(TimeBin::containing(doc.date, granularity))
            .or_default()
            .push(doc);
    }
    let (Some(first), Some(last)) = (
        bins.keys().next().copied(),
        bins.keys().next_back().copied(),
    ) else {
        return bins;
    };
    let mut bin = first;
    while bin < last {
        bin = bin.next();
        bins.entry(bin).or_default();
    }
    bins
}

/// The smallest span covering every document date.
pub fn date_range(docs: &[Document]) -> Option<(NaiveDate, NaiveDate)> {
    let min = docs.iter().map(|d| d.date).min()?;
    let max = docs.iter().map(|d| d.date).max()?;
    Some((min, max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn date(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn doc(id: &str, d: &str) -> Document {
        Document {
            id: id.into(),
            date: date(d),
            text: String::new(),
            source: None,
        }
    }

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn example_sentence_tokens() {
        let text = "Community energy initiatives are offering new opportunities for citizens \
                    to get actively involved in energy matters.";
        let toks = preprocess(text, &PreprocessConfig::default());
        assert_eq!(
            toks,
            [
                "community",
                "energy",
                "initiatives",
                "offering",
                "new",
                "opportunities",
                "citizens",
                "get",
                "actively",
                "involved",
                "energy",
                "matters"
            ]
        );
    }

    #[test]
    fn empty_and_all_stopwords() {
        assert!(preprocess("", &PreprocessConfig::default()).is_empty());
        let cfg = PreprocessConfig::with_stopwords(["the".to_string()].into());
        assert!(preprocess("The THE, the!!", &cfg).is_empty());
    }

    #[test]
    fn digits_punctuation_and_apostrophes_split() {
        let cfg = PreprocessConfig::with_stopwords(HashSet::new());
        let toks = preprocess("In 2020, it's 100% solar-powered; x@y", &cfg);
        assert_eq!(toks, ["in", "it", "solar", "powered"]);
    }

    #[test]
    fn underscore_joins_phrases() {
        let cfg = PreprocessConfig::with_stopwords(HashSet::new());
        assert_eq!(
            preprocess("collective self_consumption _x_ __", &cfg),
            ["collective", "self_consumption"]
        );
        assert_eq!(
            cfg.normalize_term("Self Consumption").as_deref(),
            Some("self_consumption")
        );
        assert_eq!(cfg.normalize_term("!!"), None);
    }

    #[test]
    fn min_length_one_keeps_single_letters() {
        let mut cfg = PreprocessConfig::with_stopwords(HashSet::new());
        cfg.min_token_length = 1;
        assert_eq!(preprocess("a b cc", &cfg), ["a", "b", "cc"]);
        cfg.min_token_length = 2;
        assert_eq!(preprocess("a b cc", &cfg), ["cc"]);
    }

    #[test]
    fn stemming_only_when_enabled() {
        let mut cfg = PreprocessConfig::with_stopwords(HashSet::new());
        assert_eq!(
            preprocess("communities offering", &cfg),
            ["communities", "offering"]
        );
        cfg.stem = true;
        assert_eq!(
            preprocess("communities offering", &cfg),
            ["communiti", "offer"]
        );
        cfg.language = "italian".parse().unwrap();
        assert_eq!(
            preprocess("comunità energetiche", &cfg),
            ["comun", "energet"]
        );
        assert!("klingon".parse::<Language>().is_err());
    }

    #[test]
    fn stopword_file_parsing() {
        let set = parse_stopwords("# header\nThe\n  and  # trailing\n\nof\n").unwrap();
        assert_eq!(
            set,
            ["the", "and", "of"].iter().map(|s| s.to_string()).collect()
        );
        assert!(parse_stopwords("two words\n").is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = PreprocessConfig::with_stopwords(["Bad".to_string()].into());
        cfg.min_token_length = 0;
        assert_eq!(cfg.validate().len(), 2);
        assert!(PreprocessConfig::default().validate().is_empty());
    }

    #[test]
    fn jsonl_in_order() {
        let f = write_tmp(
            "{\"id\":\"a\",\"date\":\"2020-01-01\",\"text\":\"x\"}\n{\"id\":\"b\",\"date\":\"2020-01-02\",\"text\":\"y\",\"source\":\"s\"}\n",
        );
        let c = load_corpus(f.path(), CorpusFormat::Jsonl, Strictness::Strict).unwrap();
        let ids: Vec<_> = c.documents.iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, ["a", "b"]);
        assert_eq!(c.documents[1].source.as_deref(), Some("s"));
    }

    #[test]
    fn empty_file_is_empty_corpus() {
        let f = write_tmp("");
        for format in [CorpusFormat::Jsonl, CorpusFormat::Csv] {
            let c = load_corpus(f.path(), format, Strictness::Strict).unwrap();
            assert!(c.documents.is_empty());
        }
    }

    #[test]
    fn invalid_date_strict_vs_lenient() {
        let f = write_tmp(
            "{\"id\":\"a\",\"date\":\"2020-01-01\",\"text\":\"x\"}\n{\"id\":\"b\",\"date\":\"2020-13-01\",\"text\":\"y\"}\n",
        );
        match load_corpus(f.path(), CorpusFormat::Jsonl, Strictness::Strict) {
            Err(Error::Record { source, .. }) => assert_eq!(source.line, 2),
            other => panic!("expected record error, got {other:?}"),
        }
        let c = load_corpus(f.path(), CorpusFormat::Jsonl, Strictness::Lenient).unwrap();
        assert_eq!(c.documents.len(), 1);
        assert_eq!(c.skipped.len(), 1);
        assert_eq!(c.skipped[0].line, 2);
    }

    #[test]
    fn missing_fields_and_duplicates_are_record_errors() {
        let f = write_tmp(
            "{\"id\":\"a\",\"date\":\"2020-01-01\"}\n{\"id\":\"\",\"date\":\"2020-01-01\",\"text\":\"\"}\nnot json\n\
             {\"id\":\"c\",\"date\":\"2020-01-01\",\"text\":\"\"}\n{\"id\":\"c\",\"date\":\"2020-01-01\",\"text\":\"\"}\n",
        );
        let c = load_corpus(f.path(), CorpusFormat::Jsonl, Strictness::Lenient).unwrap();
        assert_eq!(c.documents.len(), 1);
        let lines: Vec<_> = c.skipped.iter().map(|e| e.line).collect();
        assert_eq!(lines, [1, 2, 3, 5]);
    }

    #[test]
    fn csv_with_quoting() {
        let f = write_tmp(
            "id,date,text,source\na,2020-01-05,\"hello, \"\"world\"\"\nnext line\",wire\nb,2020-02-10,plain,\nc,2020-02-31,bad,\n",
        );
        let c = load_corpus(f.path(), CorpusFormat::Csv, Strictness::Lenient).unwrap();
        assert_eq!(c.documents.len(), 2);
        assert_eq!(c.documents[0].text, "hello, \"world\"\nnext line");
        assert_eq!(c.documents[0].source.as_deref(), Some("wire"));
        assert_eq!(c.documents[1].source, None);
        assert_eq!(c.skipped.len(), 1);
        assert_eq!(c.skipped[0].line, 5);
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_corpus(
            Path::new("/nonexistent/x.jsonl"),
            CorpusFormat::Jsonl,
            Strictness::Strict,
        );
        assert!(matches!(err, Err(Error::Io { .. })));
    }

    #[test]
    fn monthly_bins() {
        let docs = [doc("a", "2020-01-05"), doc("b", "2020-02-10")];
        let bins = bin_documents(&docs, Granularity::Month);
        let sizes: Vec<_> = bins.values().map(Vec::len).collect();
        assert_eq!(sizes, [1, 1]);

        let docs = [doc("a", "2020-01-05"), doc("b", "2020-03-10")];
        let bins = bin_documents(&docs, Granularity::Month);
        let keys: Vec<_> = bins.keys().collect();
        assert_eq!(keys.len(), 3);
        assert_eq!(keys[1].start, date("2020-02-01"));
        assert_eq!(keys[1].end, date("2020-02-29"));
        assert!(bins[keys[1]].is_empty());

        let docs: Vec<_> = (1..=5)
            .map(|d| doc(&d.to_string(), &format!("2020-01-{d:02}")))
            .collect();
        let bins = bin_documents(&docs, Granularity::Month);
        assert_eq!(bins.len(), 1);
        assert_eq!(bins.values().next().unwrap().len(), 5);
    }

    #[test]
    fn iso_weeks_start_monday() {
        // 2020-01-01 is a Wednesday.
        let bin = TimeBin::containing(date("2020-01-01"), Granularity::Week);
        assert_eq!(bin.start, date("2019-12-30"));
        assert_eq!(bin.end, date("2020-01-05"));
        assert_eq!(bin.next().start, date("2020-01-06"));
    }

    #[test]
    fn december_rolls_into_january() {
        let bin = TimeBin::containing(date("2019-12-15"), Granularity::Month);
        assert_eq!(bin.end, date("2019-12-31"));
        assert_eq!(bin.next().start, date("2020-01-01"));
    }

    #[test]
    fn empty_docs_no_bins() {
        assert!(bin_documents(&[], Granularity::Day).is_empty());
        assert_eq!(date_range(&[]), None);
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use brandscore::pipeline::{self, PreparedCorpus, RunConfig, RunSettings};
use brandscore::{CorpusFormat, Granularity, Result};

/// Semantic Brand Score of keyword clusters in timestamped text corpora.
#[derive(Parser)]
#[command(name = "brandscore", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank candidate cluster keywords by TF-IDF.
    Suggest(RunArgs),
    /// Score clusters over the whole corpus as a single timeframe.
    Score(RunArgs),
    /// Score clusters per time bin, plus a whole-period breakdown.
    Trends(RunArgs),
    /// Cosine similarity of cluster associations and their 2D MDS map.
    Similarity(RunArgs),
    /// Heaviest associations of each cluster (word-cloud data).
    Associations(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<CorpusFormat>,
    /// JSON object mapping cluster name to its terms.
    #[arg(long)]
    clusters: Option<PathBuf>,
    /// One stop-word per line; defaults to a built-in English list.
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Co-occurrence window [default: 3]
    #[arg(long)]
    window: Option<usize>,
    /// Drop edges lighter than this [default: 1]
    #[arg(long)]
    min_edge_weight: Option<u64>,
    /// Time bin size for trends [default: month]
    #[arg(long, value_enum)]
    bin: Option<Granularity>,
    #[arg(long)]
    stem: bool,
    /// Stemmer language [default: english]
    #[arg(long)]
    language: Option<String>,
    /// Drop keywords found in more than this fraction of documents [default: 0.5]
    #[arg(long)]
    df_ceiling: Option<f64>,
    /// Output directory [default: .]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Abort on the first malformed record instead of skipping it.
    #[arg(long)]
    strict: bool,
    /// Number of keywords or associations per cluster [default: 50]
    #[arg(long)]
    top_k: Option<usize>,
    /// Worker threads [default: all cores]
    #[arg(long)]
    threads: Option<usize>,
    /// Also write the whole-period co-occurrence edge list.
    #[arg(long)]
    export_graph: bool,
}

impl RunArgs {
    fn settings(&self) -> Result<RunSettings> {
        let base = match &self.config {
            Some(path) => RunSettings::from_json_file(path)?,
            None => RunSettings::default(),
        };
        Ok(base.overridden_by(RunSettings {
            corpus: self.corpus.clone(),
            format: self.format,
            clusters: self.clusters.clone(),
            stopwords: self.stopwords.clone(),
            window: self.window,
            min_edge_weight: self.min_edge_weight,
            bin: self.bin,
            stem: self.stem.then_some(true),
            language: self.language.clone(),
            df_ceiling: self.df_ceiling,
            out: self.out.clone(),
            strict: self.strict.then_some(true),
            top_k: self.top_k,
            threads: self.threads,
        }))
    }
}

fn run(command: Command) -> Result<Vec<PathBuf>> {
    let (args, needs_clusters) = match &command {
        Command::Suggest(a) => (a, false),
        Command::Score(a)
        | Command::Trends(a)
        | Command::Similarity(a)
        | Command::Associations(a) => (a, true),
    };
    let config = RunConfig::from_settings(args.settings()?, needs_clusters)?;
    config.install(|| {
        let corpus = PreparedCorpus::load(&config)?;
        if !corpus.skipped.is_empty() {
            eprintln!("skipped {} malformed record(s):", corpus.skipped.len());
            for e in &corpus.skipped {
                eprintln!("  {e}");
            }
        }
        let out = &config.out;
        let mut written = match &command {
            Command::Suggest(_) => {
                pipeline::write_keywords(out, &pipeline::run_suggest(&config, &corpus)?)?
            }
            Command::Score(_) => {
                pipeline::write_scores(out, "scores", &pipeline::run_score(&config, &corpus)?)?
            }
            Command::Trends(_) => {
                pipeline::write_trends(out, &pipeline::run_trends(&config, &corpus)?)?
            }
            Command::Similarity(_) => {
                pipeline::write_similarity(out, &pipeline::run_similarity(&config, &corpus)?)?
            }
            Command::Associations(_) => {
                pipeline::write_associations(out, &pipeline::run_associations(&config, &corpus)?)?
            }
        };
        if args.export_graph {
            written.push(pipeline::export_graph(&config, &corpus)?);
        }
        Ok(written)
    })?
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // usage problems are validation errors; help and version are not errors
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

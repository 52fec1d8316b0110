use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use log::info;

use topicgraph::pipeline::{self, RunConfig, Stage};
use topicgraph::textprep::{ConfigPaths, StripRules};
use topicgraph::{corpus, io, Error};

#[derive(Parser)]
#[command(
    name = "topicgraph",
    version,
    about = "Windowed word-graph topic detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage, from raw posts to trend tables.
    Run {
        #[command(flatten)]
        out: OutArg,
        #[command(flatten)]
        ingest: IngestArgs,
        #[command(flatten)]
        prep: PrepArgs,
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        cluster: ClusterArgs,
        #[command(flatten)]
        trends: TrendsArgs,
    },
    /// Read posts and merge them into threads.
    Ingest {
        #[command(flatten)]
        out: OutArg,
        #[command(flatten)]
        args: IngestArgs,
    },
    /// Turn threads into token documents.
    Prep {
        #[command(flatten)]
        out: OutArg,
        #[command(flatten)]
        args: PrepArgs,
    },
    /// Build one word graph per source and window.
    Graph {
        #[command(flatten)]
        out: OutArg,
        #[command(flatten)]
        args: GraphArgs,
    },
    /// Detect communities and word clouds in every graph.
    Cluster {
        #[command(flatten)]
        out: OutArg,
        #[command(flatten)]
        args: ClusterArgs,
    },
    /// Join labels with partitions into topic, series and correlation tables.
    Trends {
        #[command(flatten)]
        out: OutArg,
        #[command(flatten)]
        args: TrendsArgs,
    },
    /// Download a JSONL post file from an HTTP endpoint.
    Fetch {
        #[arg(long)]
        url: String,
        #[arg(long, short)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct OutArg {
    /// Output directory of the run.
    #[arg(long, env = "TOPICGRAPH_OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct IngestArgs {
    /// Post files (JSONL or CSV); repeatable.
    #[arg(long = "input", short, required = true)]
    inputs: Vec<PathBuf>,
    /// Force the input format instead of using the file extension.
    #[arg(long)]
    format: Option<String>,
    #[arg(long, default_value_t = corpus::DEFAULT_GAP_SECONDS)]
    gap_seconds: u64,
}

#[derive(Args)]
struct PrepArgs {
    #[arg(long)]
    stopwords: Option<PathBuf>,
    #[arg(long)]
    boilerplate: Option<PathBuf>,
    #[arg(long)]
    merges: Option<PathBuf>,
    #[arg(long)]
    keep_urls: bool,
    #[arg(long)]
    keep_mentions: bool,
    #[arg(long)]
    keep_hashtags: bool,
    /// Keep hashtag text without the `#`.
    #[arg(long)]
    hashtag_bodies: bool,
    #[arg(long)]
    keep_retweet_markers: bool,
    #[arg(long)]
    keep_punctuation: bool,
    #[arg(long)]
    strip_digits: bool,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long, default_value_t = topicgraph::graph::DEFAULT_WINDOW_DAYS)]
    window_days: u32,
    /// First day of window 1 (YYYY-MM-DD); defaults to the earliest post.
    #[arg(long)]
    anchor: Option<NaiveDate>,
}

#[derive(Args)]
struct ClusterArgs {
    /// Random-walk length.
    #[arg(long = "t", default_value_t = topicgraph::community::DEFAULT_WALK_LENGTH)]
    walk_length: usize,
    #[arg(long, default_value_t = topicgraph::community::DEFAULT_TOP_K)]
    top_k: usize,
    /// Minimum community share of its graph, in percent.
    #[arg(long, default_value_t = 0.0)]
    min_pct: f64,
    #[arg(long, default_value_t = topicgraph::community::DEFAULT_MIN_DEGREE)]
    min_degree: u64,
}

#[derive(Args)]
struct TrendsArgs {
    /// CSV with source,window_index,community_id,code.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    source_a: Option<String>,
    #[arg(long)]
    source_b: Option<String>,
}

impl IngestArgs {
    fn apply(self, config: &mut RunConfig) {
        config.ingest.inputs = self.inputs;
        config.ingest.format = self.format;
        config.ingest.gap_seconds = self.gap_seconds;
    }
}

impl PrepArgs {
    fn apply(self, config: &mut RunConfig) {
        config.prep.files = ConfigPaths {
            stopwords: self.stopwords,
            boilerplate: self.boilerplate,
            merges: self.merges,
        };
        config.prep.strip = StripRules {
            urls: !self.keep_urls,
            mentions: !self.keep_mentions,
            hashtags: !self.keep_hashtags,
            retweets: !self.keep_retweet_markers,
            punctuation: !self.keep_punctuation,
            digits: self.strip_digits,
            keep_hashtag_bodies: self.hashtag_bodies,
        };
    }
}

impl GraphArgs {
    fn apply(self, config: &mut RunConfig) {
        config.graph.length_days = self.window_days;
        config.graph.anchor = self.anchor;
    }
}

impl ClusterArgs {
    fn apply(self, config: &mut RunConfig) {
        config.cluster.walk_length = self.walk_length;
        config.cluster.top_k = self.top_k;
        config.cluster.min_pct = self.min_pct;
        config.cluster.min_degree = self.min_degree;
    }
}

impl TrendsArgs {
    fn apply(self, config: &mut RunConfig) {
        config.trends.labels = self.labels;
        config.trends.source_a = self.source_a;
        config.trends.source_b = self.source_b;
    }
}

enum Failure {
    Invalid(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Invalid(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn fetch(url: &str, output: &Path) -> Result<(), Failure> {
    let mut response = ureq::get(url)
        .call()
        .map_err(|e| Failure::Runtime(format!("{url}: {e}")))?;
    let body = response
        .body_mut()
        .read_to_string()
        .map_err(|e| Failure::Runtime(format!("{url}: {e}")))?;
    let posts = corpus::ingest_jsonl_str(&body, url)?;
    io::write_string(output, &body)?;
    info!("fetched {} posts into {}", posts.len(), output.display());
    Ok(())
}

fn execute(command: Command) -> Result<(), Failure> {
    let mut config = RunConfig::default();
    let (stage, out) = match command {
        Command::Fetch { url, output } => return fetch(&url, &output),
        Command::Run {
            out,
            ingest,
            prep,
            graph,
            cluster,
            trends,
        } => {
            ingest.apply(&mut config);
            prep.apply(&mut config);
            graph.apply(&mut config);
            cluster.apply(&mut config);
            trends.apply(&mut config);
            pipeline::run_pipeline(&config, &out.out)?;
            return Ok(());
        }
        Command::Ingest { out, args } => {
            args.apply(&mut config);
            (Stage::Ingest, out)
        }
        Command::Prep { out, args } => {
            args.apply(&mut config);
            (Stage::Prep, out)
        }
        Command::Graph { out, args } => {
            args.apply(&mut config);
            (Stage::Graph, out)
        }
        Command::Cluster { out, args } => {
            args.apply(&mut config);
            (Stage::Cluster, out)
        }
        Command::Trends { out, args } => {
            args.apply(&mut config);
            (Stage::Trends, out)
        }
    };
    pipeline::run_stage(stage, &config, &out.out)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

//! Stage orchestration over an output directory.
//!
//! Layout of a run directory:
//!
//! ```text
//! threads.jsonl                      ingest
//! documents.jsonl                    prep
//! windows.json                       graph
//! graphs/<source>/wNN.tsv            graph (edge list)
//! graphs/<source>/wNN.json           graph (summary)
//! clusters/<source>/wNN.partition.json
//! clusters/<source>/wNN.wordclouds.json
//! topics.csv series.csv correlations.csv   trends (needs a label file)
//! run-manifest.json                  written last
//! ```
//!
//! Stages only talk through these files, so running them one by one gives
//! the same tree as [`run_pipeline`].

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::community::{self, Partition, WordCloud};
use crate::corpus::{self, InputFormat, Thread};
use crate::error::{Error, Result};
use crate::graph::{self, Window};
use crate::io;
use crate::textprep::{self, ConfigPaths, Document, StripRules};
use crate::trends::{self, PartitionSet};

pub const MANIFEST: &str = "run-manifest.json";
pub const THREADS: &str = "threads.jsonl";
pub const DOCUMENTS: &str = "documents.jsonl";
pub const WINDOWS: &str = "windows.json";
pub const GRAPHS_DIR: &str = "graphs";
pub const CLUSTERS_DIR: &str = "clusters";
pub const TOPICS_CSV: &str = "topics.csv";
pub const SERIES_CSV: &str = "series.csv";
pub const CORRELATIONS_CSV: &str = "correlations.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    pub inputs: Vec<PathBuf>,
    /// `None` picks the format from each file's extension.
    pub format: Option<String>,
    pub gap_seconds: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PrepStageConfig {
    pub files: ConfigPaths,
    pub strip: StripRules,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphConfig {
    pub length_days: u32,
    pub anchor: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub walk_length: usize,
    pub top_k: usize,
    /// Minimum cluster share, in percent, for a top community.
    pub min_pct: f64,
    pub min_degree: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrendsConfig {
    pub labels: Option<PathBuf>,
    pub source_a: Option<String>,
    pub source_b: Option<String>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            inputs: Vec::new(),
            format: None,
            gap_seconds: corpus::DEFAULT_GAP_SECONDS,
        }
    }
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            length_days: graph::DEFAULT_WINDOW_DAYS,
            anchor: None,
        }
    }
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            walk_length: community::DEFAULT_WALK_LENGTH,
            top_k: community::DEFAULT_TOP_K,
            min_pct: 0.0,
            min_degree: community::DEFAULT_MIN_DEGREE,
        }
    }
}

impl IngestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gap_seconds == 0 {
            return Err(Error::InvalidConfig("gap_seconds must be positive".into()));
        }
        if self.inputs.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one input file is required".into(),
            ));
        }
        if let Some(f) = &self.format {
            f.parse::<InputFormat>()?;
        }
        Ok(())
    }
}

impl GraphConfig {
    pub fn validate(&self) -> Result<()> {
        if self.length_days == 0 {
            return Err(Error::InvalidConfig(
                "window length_days must be positive".into(),
            ));
        }
        Ok(())
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=8).contains(&self.walk_length) {
            return Err(Error::InvalidConfig(format!(
                "walk length t must be between 2 and 8, got {}",
                self.walk_length
            )));
        }
        if self.top_k == 0 {
            return Err(Error::InvalidConfig("top k must be positive".into()));
        }
        if !(self.min_pct.is_finite() && self.min_pct >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "min_pct must be >= 0, got {}",
                self.min_pct
            )));
        }
        Ok(())
    }
}

/// Every knob of a full run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub ingest: IngestConfig,
    pub prep: PrepStageConfig,
    pub graph: GraphConfig,
    pub cluster: ClusterConfig,
    pub trends: TrendsConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.ingest.validate()?;
        self.graph.validate()?;
        self.cluster.validate()
    }
}

/// Resolved configuration of whatever stages have run, plus digests of
/// every output file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub deterministic: bool,
    pub ingest: Option<IngestConfig>,
    pub prep: Option<PrepStageConfig>,
    pub graph: Option<GraphConfig>,
    pub cluster: Option<ClusterConfig>,
    pub trends: Option<TrendsConfig>,
    pub outputs: BTreeMap<String, String>,
}

/// Index file written by the graph stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowIndex {
    pub sources: Vec<String>,
    pub windows: Vec<Window>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Prep,
    Graph,
    Cluster,
    Trends,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Prep => "prep",
            Stage::Graph => "graph",
            Stage::Cluster => "cluster",
            Stage::Trends => "trends",
        }
    }
}

fn graph_paths(out: &Path, source: &str, window: u32) -> (PathBuf, PathBuf) {
    let dir = out.join(GRAPHS_DIR).join(source);
    (
        dir.join(format!("w{window:02}.tsv")),
        dir.join(format!("w{window:02}.json")),
    )
}

pub fn partition_path(out: &Path, source: &str, window: u32) -> PathBuf {
    out.join(CLUSTERS_DIR)
        .join(source)
        .join(format!("w{window:02}.partition.json"))
}

pub fn wordcloud_path(out: &Path, source: &str, window: u32) -> PathBuf {
    out.join(CLUSTERS_DIR)
        .join(source)
        .join(format!("w{window:02}.wordclouds.json"))
}

fn clear_dir(dir: &Path) -> Result<()> {
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}

fn remove_file(path: &Path) -> Result<()> {
    match fs::remove_file(path) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(Error::io(path, e)),
        _ => Ok(()),
    }
}

pub fn ingest_stage(config: &IngestConfig, out: &Path) -> Result<Vec<Thread>> {
    config.validate()?;
    let format = config
        .format
        .as_deref()
        .map(str::parse::<InputFormat>)
        .transpose()?;
    let mut batches = Vec::with_capacity(config.inputs.len());
    for input in &config.inputs {
        let fmt = format.unwrap_or_else(|| InputFormat::from_path(input));
        batches.push(corpus::ingest(input, fmt)?);
    }
    let posts = corpus::combine(batches)?;
    let threads = corpus::merge_threads(&posts, config.gap_seconds)?;
    info!("ingest: {} posts -> {} threads", posts.len(), threads.len());
    corpus::write_threads(&threads, &out.join(THREADS))?;
    Ok(threads)
}

pub fn prep_stage(config: &PrepStageConfig, out: &Path) -> Result<Vec<Document>> {
    let prep = textprep::load_config(&config.files, config.strip)?;
    let threads_path = out.join(THREADS);
    io::require(&threads_path)?;
    let threads = corpus::read_threads(&threads_path)?;
    let documents: Vec<Document> = threads
        .par_iter()
        .map(|t| textprep::preprocess(t, &prep))
        .collect::<Vec<_>>()
        .into_iter()
        .filter(|d| !d.tokens.is_empty())
        .collect();
    info!(
        "prep: {} threads -> {} non-empty documents",
        threads.len(),
        documents.len()
    );
    textprep::write_documents(&documents, &out.join(DOCUMENTS))?;
    Ok(documents)
}

pub fn graph_stage(config: &GraphConfig, out: &Path) -> Result<WindowIndex> {
    config.validate()?;
    let docs_path = out.join(DOCUMENTS);
    io::require(&docs_path)?;
    let documents = textprep::read_documents(&docs_path)?;

    let mut by_source: BTreeMap<String, Vec<Document>> = BTreeMap::new();
    for doc in documents.iter() {
        by_source.entry(doc.source.clone()).or_default();
    }
    let buckets = graph::partition_windows(documents, config.length_days, config.anchor)?;
    let windows: Vec<Window> = buckets.iter().map(|(w, _)| *w).collect();
    let sources: Vec<String> = by_source.keys().cloned().collect();

    let mut jobs: Vec<(String, Window, Vec<Document>)> = Vec::new();
    for (window, docs) in buckets {
        let mut split: BTreeMap<&str, Vec<Document>> =
            sources.iter().map(|s| (s.as_str(), Vec::new())).collect();
        for doc in docs {
            split
                .get_mut(doc.source.as_str())
                .expect("source listed")
                .push(doc);
        }
        for (source, docs) in split {
            jobs.push((source.to_string(), window, docs));
        }
    }

    clear_dir(&out.join(GRAPHS_DIR))?;
    jobs.par_iter()
        .map(|(source, window, docs)| {
            let graph = graph::build_graph(docs, source, *window);
            let (tsv, summary) = graph_paths(out, source, window.index);
            graph::export_edgelist(&graph, &tsv)?;
            graph::export_summary(&graph, &summary)
        })
        .collect::<Result<Vec<()>>>()?;

    let index = WindowIndex { sources, windows };
    io::write_json(&out.join(WINDOWS), &index)?;
    info!(
        "graph: {} sources x {} windows",
        index.sources.len(),
        index.windows.len()
    );
    Ok(index)
}

fn read_window_index(out: &Path) -> Result<WindowIndex> {
    let path = out.join(WINDOWS);
    io::require(&path)?;
    io::read_json(&path)
}

pub fn cluster_stage(config: &ClusterConfig, out: &Path) -> Result<Vec<Partition>> {
    config.validate()?;
    let index = read_window_index(out)?;
    let jobs: Vec<(&str, u32)> = index
        .sources
        .iter()
        .flat_map(|s| index.windows.iter().map(move |w| (s.as_str(), w.index)))
        .collect();
    clear_dir(&out.join(CLUSTERS_DIR))?;
    let partitions = jobs
        .par_iter()
        .map(|&(source, window)| {
            let (tsv, summary) = graph_paths(out, source, window);
            let graph = graph::import_graph(&tsv, &summary)?;
            let partition = community::walktrap(&graph, config.walk_length)?;
            let clouds: Vec<WordCloud> =
                community::top_communities(&partition, config.top_k, config.min_pct)
                    .iter()
                    .map(|c| community::wordcloud(&graph, c, config.min_degree))
                    .collect();
            community::write_partition(&partition, &partition_path(out, source, window))?;
            io::write_json(&wordcloud_path(out, source, window), &clouds)?;
            Ok(partition)
        })
        .collect::<Result<Vec<_>>>()?;
    info!("cluster: {} partitions", partitions.len());
    Ok(partitions)
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrendsOutcome {
    Written {
        topics: usize,
        series: usize,
        correlations: Option<usize>,
    },
    SkippedNoLabels,
}

pub fn trends_stage(config: &TrendsConfig, out: &Path) -> Result<TrendsOutcome> {
    let index = read_window_index(out)?;
    for name in [TOPICS_CSV, SERIES_CSV, CORRELATIONS_CSV] {
        remove_file(&out.join(name))?;
    }
    let Some(labels_path) = &config.labels else {
        warn!("trends: no label file given; skipping topics, series and correlations");
        return Ok(TrendsOutcome::SkippedNoLabels);
    };
    io::require(labels_path)?;
    let labels = trends::read_labels(labels_path)?;

    let mut partitions = Vec::new();
    for source in &index.sources {
        for window in &index.windows {
            partitions.push(community::read_partition(&partition_path(
                out,
                source,
                window.index,
            ))?);
        }
    }
    let set = PartitionSet::new(partitions);

    let topics = trends::topic_table(&set, &labels)?;
    io::write_string(&out.join(TOPICS_CSV), &trends::topics_csv(&topics))?;
    let series = trends::assemble_series(&labels, &set)?;
    io::write_string(
        &out.join(SERIES_CSV),
        &trends::series_csv(&series, index.windows.len() as u32),
    )?;

    let pair = match (&config.source_a, &config.source_b) {
        (Some(a), Some(b)) => Some((a.clone(), b.clone())),
        (None, None) if index.sources.len() == 2 => {
            Some((index.sources[0].clone(), index.sources[1].clone()))
        }
        _ => None,
    };
    let correlations = match pair {
        Some((a, b)) => {
            for s in [&a, &b] {
                if !index.sources.contains(s) {
                    return Err(Error::InvalidConfig(format!("unknown source {s:?}")));
                }
            }
            let rows = trends::correlation_table(&series, &a, &b);
            io::write_string(
                &out.join(CORRELATIONS_CSV),
                &trends::correlations_csv(&rows),
            )?;
            Some(rows.len())
        }
        None => {
            warn!("trends: cannot pick two sources to correlate; pass both source names");
            None
        }
    };
    Ok(TrendsOutcome::Written {
        topics: topics.len(),
        series: series.len(),
        correlations,
    })
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn collect_outputs(root: &Path, dir: &Path, acc: &mut BTreeMap<String, String>) -> Result<()> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_dir() {
            collect_outputs(root, &path, acc)?;
            continue;
        }
        let rel = path.strip_prefix(root).expect("under root");
        let key = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        if key == MANIFEST {
            continue;
        }
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        acc.insert(key, sha256_hex(&bytes));
    }
    Ok(())
}

fn write_manifest(out: &Path, mut manifest: Manifest) -> Result<()> {
    manifest.deterministic = true;
    manifest.outputs.clear();
    collect_outputs(out, out, &mut manifest.outputs)?;
    io::write_json(&out.join(MANIFEST), &manifest)
}

fn prepare_out(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

/// Deletes whatever the stages after `stage` wrote, so that a rerun never
/// leaves outputs built from a different upstream.
fn clear_after(stage: Stage, out: &Path) -> Result<()> {
    let later = |s: Stage| s as u8 > stage as u8;
    if later(Stage::Prep) {
        remove_file(&out.join(DOCUMENTS))?;
    }
    if later(Stage::Graph) {
        remove_file(&out.join(WINDOWS))?;
        clear_dir(&out.join(GRAPHS_DIR))?;
    }
    if later(Stage::Cluster) {
        clear_dir(&out.join(CLUSTERS_DIR))?;
    }
    if later(Stage::Trends) {
        for name in [TOPICS_CSV, SERIES_CSV, CORRELATIONS_CSV] {
            remove_file(&out.join(name))?;
        }
    }
    Ok(())
}

/// Runs one stage against `out`, updating the manifest: the stage's section
/// is replaced, and every later stage's section and files are dropped.
pub fn run_stage(stage: Stage, config: &RunConfig, out: &Path) -> Result<()> {
    prepare_out(out)?;
    let manifest_path = out.join(MANIFEST);
    let mut manifest: Manifest = if manifest_path.exists() {
        io::read_json(&manifest_path).unwrap_or_default()
    } else {
        Manifest::default()
    };
    remove_file(&manifest_path)?;

    let result = match stage {
        Stage::Ingest => ingest_stage(&config.ingest, out).map(drop),
        Stage::Prep => prep_stage(&config.prep, out).map(drop),
        Stage::Graph => graph_stage(&config.graph, out).map(drop),
        Stage::Cluster => cluster_stage(&config.cluster, out).map(drop),
        Stage::Trends => trends_stage(&config.trends, out).map(drop),
    };
    result.map_err(|e| e.in_stage(stage.name()))?;
    clear_after(stage, out)?;

    let rank = stage as u8;
    if rank <= Stage::Ingest as u8 {
        manifest.ingest = (stage == Stage::Ingest).then(|| config.ingest.clone());
    }
    if rank <= Stage::Prep as u8 {
        manifest.prep = (stage == Stage::Prep).then(|| config.prep.clone());
    }
    if rank <= Stage::Graph as u8 {
        manifest.graph = (stage == Stage::Graph).then(|| config.graph.clone());
    }
    if rank <= Stage::Cluster as u8 {
        manifest.cluster = (stage == Stage::Cluster).then(|| config.cluster.clone());
    }
    manifest.trends = (stage == Stage::Trends).then(|| config.trends.clone());
    write_manifest(out, manifest)
}

/// The whole pipeline, validated up front.
pub fn run_pipeline(config: &RunConfig, out: &Path) -> Result<Manifest> {
    config.validate()?;
    prepare_out(out)?;
    remove_file(&out.join(MANIFEST))?;
    ingest_stage(&config.ingest, out).map_err(|e| e.in_stage("ingest"))?;
    prep_stage(&config.prep, out).map_err(|e| e.in_stage("prep"))?;
    graph_stage(&config.graph, out).map_err(|e| e.in_stage("graph"))?;
    cluster_stage(&config.cluster, out).map_err(|e| e.in_stage("cluster"))?;
    trends_stage(&config.trends, out).map_err(|e| e.in_stage("trends"))?;
    let manifest = Manifest {
        deterministic: true,
        ingest: Some(config.ingest.clone()),
        prep: Some(config.prep.clone()),
        graph: Some(config.graph.clone()),
        cluster: Some(config.cluster.clone()),
        trends: Some(config.trends.clone()),
        outputs: BTreeMap::new(),
    };
    write_manifest(out, manifest)?;
    io::read_json(&out.join(MANIFEST))
}

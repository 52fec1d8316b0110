//! Fortnight windows and the directed word-adjacency graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textprep::Document;

pub const DEFAULT_WINDOW_DAYS: u32 = 15;

const TSV_HEADER: &str = "src\tdst\tweight";

/// A half-open run of days, `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Window {
    pub index: u32,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub length_days: u32,
}

impl Window {
    pub fn nth(anchor: NaiveDate, length_days: u32, index: u32) -> Window {
        let start = anchor + Duration::days(i64::from(length_days) * i64::from(index - 1));
        Window {
            index,
            start,
            end: start + Duration::days(i64::from(length_days)),
            length_days,
        }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date < self.end
    }

    pub fn label(&self) -> String {
        format!("Fortnight {}", self.index)
    }
}

/// Splits documents into consecutive windows of `length_days`, starting at
/// `anchor` (or at the earliest document's date). Windows without
/// documents are kept so that indices stay contiguous.
pub fn partition_windows(
    documents: Vec<Document>,
    length_days: u32,
    anchor: Option<NaiveDate>,
) -> Result<Vec<(Window, Vec<Document>)>> {
    if length_days == 0 {
        return Err(Error::InvalidConfig(
            "window length_days must be positive".into(),
        ));
    }
    let first = documents.iter().map(|d| d.window_hint.date_naive()).min();
    let Some(anchor) = anchor.or(first) else {
        return Ok(Vec::new());
    };
    if let Some(first) = first.filter(|f| *f < anchor) {
        return Err(Error::InvalidConfig(format!(
            "document dated {first} precedes the window anchor {anchor}"
        )));
    }
    let last = documents
        .iter()
        .map(|d| d.window_hint.date_naive())
        .max()
        .unwrap_or(anchor);

    let index_of = |date: NaiveDate| -> u32 {
        let offset = (date - anchor).num_days();
        (offset / i64::from(length_days)) as u32 + 1
    };
    let count = index_of(last);
    let mut buckets: Vec<(Window, Vec<Document>)> = (1..=count)
        .map(|i| (Window::nth(anchor, length_days, i), Vec::new()))
        .collect();
    for doc in documents {
        let idx = index_of(doc.window_hint.date_naive()) as usize - 1;
        buckets[idx].1.push(doc);
    }
    Ok(buckets)
}

/// Directed weighted graph of one source over one window. Vertices are
/// tokens; `w(u, v)` counts how often `u` immediately precedes `v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordGraph {
    pub source: String,
    pub window: Window,
    vertices: BTreeSet<String>,
    edges: BTreeMap<(String, String), u64>,
}

impl WordGraph {
    pub fn new(source: impl Into<String>, window: Window) -> Self {
        WordGraph {
            source: source.into(),
            window,
            vertices: BTreeSet::new(),
            edges: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &BTreeSet<String> {
        &self.vertices
    }

    pub fn edges(&self) -> &BTreeMap<(String, String), u64> {
        &self.edges
    }

    pub fn weight(&self, src: &str, dst: &str) -> u64 {
        self.edges
            .get(&(src.to_string(), dst.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn total_weight(&self) -> u64 {
        self.edges.values().sum()
    }

    pub fn add_vertex(&mut self, token: &str) {
        if !self.vertices.contains(token) {
            self.vertices.insert(token.to_string());
        }
    }

    /// Adds `weight` to `w(src, dst)`. Self-loops are ignored.
    pub fn add_edge(&mut self, src: &str, dst: &str, weight: u64) {
        if src == dst || weight == 0 {
            return;
        }
        self.add_vertex(src);
        self.add_vertex(dst);
        *self
            .edges
            .entry((src.to_string(), dst.to_string()))
            .or_insert(0) += weight;
    }

    /// Reads one document left to right into the graph.
    pub fn add_document(&mut self, tokens: &[String]) {
        for token in tokens {
            self.add_vertex(token);
        }
        for pair in tokens.windows(2) {
            self.add_edge(&pair[0], &pair[1], 1);
        }
    }

    /// Weight-additive union with another graph.
    pub fn merge(&mut self, other: &WordGraph) {
        for v in &other.vertices {
            self.add_vertex(v);
        }
        for ((src, dst), w) in &other.edges {
            self.add_edge(src, dst, *w);
        }
    }

    /// Vertices without any incident edge.
    pub fn isolated(&self) -> Vec<String> {
        let mut touched = BTreeSet::new();
        for (src, dst) in self.edges.keys() {
            touched.insert(src.as_str());
            touched.insert(dst.as_str());
        }
        self.vertices
            .iter()
            .filter(|v| !touched.contains(v.as_str()))
            .cloned()
            .collect()
    }

    pub fn summary(&self) -> GraphSummary {
        GraphSummary {
            source: self.source.clone(),
            window_index: self.window.index,
            window_start: self.window.start,
            window_end: self.window.end,
            length_days: self.window.length_days,
            n: self.n(),
            m: self.m(),
            isolated: self.isolated(),
        }
    }
}

pub fn build_graph(documents: &[Document], source: &str, window: Window) -> WordGraph {
    let mut graph = WordGraph::new(source, window);
    for doc in documents {
        graph.add_document(&doc.tokens);
    }
    graph
}

/// Sidecar of an edge-list file. `isolated` lists vertices the TSV cannot
/// carry because they have no edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub source: String,
    pub window_index: u32,
    pub window_start: NaiveDate,
    pub window_end: NaiveDate,
    pub length_days: u32,
    pub n: usize,
    pub m: usize,
    pub isolated: Vec<String>,
}

impl GraphSummary {
    pub fn window(&self) -> Window {
        Window {
            index: self.window_index,
            start: self.window_start,
            end: self.window_end,
            length_days: self.length_days,
        }
    }
}

/// Renders the `src\tdst\tweight` table, rows sorted by `(src, dst)`.
pub fn edgelist_tsv(graph: &WordGraph) -> Result<String> {
    let mut out = String::with_capacity(16 * graph.m() + TSV_HEADER.len() + 1);
    out.push_str(TSV_HEADER);
    out.push('\n');
    for ((src, dst), w) in &graph.edges {
        if src.contains(['\t', '\n', '\r']) || dst.contains(['\t', '\n', '\r']) {
            return Err(Error::InvalidConfig(format!(
                "token {src:?} or {dst:?} cannot be written to a TSV edge list"
            )));
        }
        let _ = writeln!(out, "{src}\t{dst}\t{w}");
    }
    Ok(out)
}

pub fn export_edgelist(graph: &WordGraph, path: &Path) -> Result<()> {
    crate::io::write_string(path, &edgelist_tsv(graph)?)
}

pub fn export_summary(graph: &WordGraph, path: &Path) -> Result<()> {
    crate::io::write_json(path, &graph.summary())
}

/// Rebuilds a graph from an edge list and its summary.
pub fn import_graph(tsv_path: &Path, summary_path: &Path) -> Result<WordGraph> {
    crate::io::require(tsv_path)?;
    crate::io::require(summary_path)?;
    let summary: GraphSummary = crate::io::read_json(summary_path)?;
    let text = crate::io::read_string(tsv_path)?;
    let mut graph = parse_edgelist(&text, &summary.source, summary.window(), tsv_path)?;
    for v in &summary.isolated {
        graph.add_vertex(v);
    }
    if graph.n() != summary.n || graph.m() != summary.m {
        return Err(Error::format(
            summary_path,
            format!(
                "summary says n={} m={}, edge list gives n={} m={}",
                summary.n,
                summary.m,
                graph.n(),
                graph.m()
            ),
        ));
    }
    Ok(graph)
}

pub fn parse_edgelist(
    text: &str,
    source: &str,
    window: Window,
    origin: &Path,
) -> Result<WordGraph> {
    let mut lines = text.lines();
    match lines.next() {
        Some(TSV_HEADER) => {}
        other => {
            return Err(Error::format(
                origin,
                format!("expected header {TSV_HEADER:?}, found {other:?}"),
            ))
        }
    }
    let mut graph = WordGraph::new(source, window);
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        let cols: Vec<&str> = line.split('\t').collect();
        let [src, dst, w] = cols[..] else {
            return Err(Error::format(
                origin,
                format!("line {lineno}: expected 3 columns"),
            ));
        };
        let w: u64 = w
            .parse()
            .ok()
            .filter(|w| *w > 0)
            .ok_or_else(|| Error::format(origin, format!("line {lineno}: bad weight {w:?}")))?;
        if src.is_empty() || dst.is_empty() || src == dst {
            return Err(Error::format(
                origin,
                format!("line {lineno}: bad edge {src:?} -> {dst:?}"),
            ));
        }
        graph.add_edge(src, dst, w);
    }
    Ok(graph)
}

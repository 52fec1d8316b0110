//! Topic time series and cross-source rank correlation.
//!
//! Communities are labeled by hand through a CSV file
//! (`source,window_index,community_id,code`). For every code and source
//! the labeled cluster percentages form a presence vector over the
//! windows, and the two sources' vectors are compared with Spearman's rho.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::community::Partition;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRow {
    pub source: String,
    pub window_index: u32,
    pub community_id: usize,
    pub code: String,
}

/// Reads a label CSV, rejecting repeated `(source, window, community)`
/// keys. Rows are numbered from 1, header excluded.
pub fn read_labels(path: &Path) -> Result<Vec<LabelRow>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::format(path, e))?;
    let mut rows = Vec::new();
    for (idx, record) in rdr.deserialize::<LabelRow>().enumerate() {
        let row = record.map_err(|e| Error::Label {
            row: idx + 1,
            message: e.to_string(),
        })?;
        rows.push(row);
    }
    check_unique(&rows)?;
    Ok(rows)
}

fn check_unique(labels: &[LabelRow]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for (idx, row) in labels.iter().enumerate() {
        if row.code.trim().is_empty() {
            return Err(Error::Label {
                row: idx + 1,
                message: "empty code".into(),
            });
        }
        if !seen.insert((&row.source, row.window_index, row.community_id)) {
            return Err(Error::Label {
                row: idx + 1,
                message: format!(
                    "community {} of {} window {} is labeled twice",
                    row.community_id, row.source, row.window_index
                ),
            });
        }
    }
    Ok(())
}

/// All partitions of a run, keyed by `(source, window_index)`.
#[derive(Debug, Clone, Default)]
pub struct PartitionSet {
    partitions: BTreeMap<(String, u32), Partition>,
    window_count: u32,
}

impl PartitionSet {
    pub fn new(partitions: impl IntoIterator<Item = Partition>) -> Self {
        let partitions: BTreeMap<(String, u32), Partition> = partitions
            .into_iter()
            .map(|p| ((p.source.clone(), p.window_index), p))
            .collect();
        let window_count = partitions.keys().map(|(_, w)| *w).max().unwrap_or(0);
        PartitionSet {
            partitions,
            window_count,
        }
    }

    pub fn window_count(&self) -> u32 {
        self.window_count
    }

    pub fn get(&self, source: &str, window: u32) -> Option<&Partition> {
        self.partitions.get(&(source.to_string(), window))
    }

    pub fn sources(&self) -> BTreeSet<&str> {
        self.partitions.keys().map(|(s, _)| s.as_str()).collect()
    }

    /// Cluster share of the labeled community, or an error naming the row.
    fn lookup(&self, idx: usize, row: &LabelRow) -> Result<(&Partition, usize)> {
        let partition = self
            .get(&row.source, row.window_index)
            .ok_or_else(|| Error::Label {
                row: idx + 1,
                message: format!(
                    "no partition for {} window {}",
                    row.source, row.window_index
                ),
            })?;
        let position = partition
            .communities
            .iter()
            .position(|c| c.id == row.community_id)
            .ok_or_else(|| Error::Label {
                row: idx + 1,
                message: format!(
                    "community {} does not exist in {} window {}",
                    row.community_id, row.source, row.window_index
                ),
            })?;
        Ok((partition, position))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSeries {
    pub code: String,
    pub source: String,
    /// Summed cluster percentage per window, window 1 first.
    pub presence: Vec<f64>,
}

/// One series per `(code, source)` pair that has at least one label,
/// sorted by code then source.
pub fn assemble_series(labels: &[LabelRow], partitions: &PartitionSet) -> Result<Vec<TopicSeries>> {
    check_unique(labels)?;
    let windows = partitions.window_count() as usize;
    let mut series: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for (idx, row) in labels.iter().enumerate() {
        let (partition, position) = partitions.lookup(idx, row)?;
        let pct = partition.communities[position].cluster_pct;
        let presence = series
            .entry((row.code.clone(), row.source.clone()))
            .or_insert_with(|| vec![0.0; windows]);
        presence[row.window_index as usize - 1] += pct;
    }
    Ok(series
        .into_iter()
        .map(|((code, source), presence)| TopicSeries {
            code,
            source,
            presence,
        })
        .collect())
}

/// Average ranks, 1-based; tied values share the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // Positions i..j hold ranks i+1..=j.
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

/// Spearman's rho as the Pearson correlation of average ranks.
/// `Ok(None)` when either vector is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::TooShort(x.len()));
    }
    let constant = |v: &[f64]| v.iter().all(|a| *a == v[0]);
    if constant(x) || constant(y) {
        return Ok(None);
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let mean = (x.len() + 1) as f64 / 2.0;
    let (mut cov, mut vx, mut vy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (da, db) = (a - mean, b - mean);
        cov += da * db;
        vx += da * da;
        vy += db * db;
    }
    Ok(Some((cov / (vx * vy).sqrt()).clamp(-1.0, 1.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub code: String,
    pub rho: Option<f64>,
    pub n_windows: usize,
}

/// Per-code rho between two sources; a side without labels counts as all
/// zeros. Sorted by rho descending, undefined values last, then by code.
pub fn correlation_table(
    series: &[TopicSeries],
    source_a: &str,
    source_b: &str,
) -> Vec<CorrelationRow> {
    let n_windows = series.first().map_or(0, |s| s.presence.len());
    type Pair<'a> = (Option<&'a [f64]>, Option<&'a [f64]>);
    let mut by_code: BTreeMap<&str, Pair> = BTreeMap::new();
    for s in series {
        if s.source == source_a {
            by_code.entry(&s.code).or_default().0 = Some(&s.presence);
        } else if s.source == source_b {
            by_code.entry(&s.code).or_default().1 = Some(&s.presence);
        }
    }
    let zeros = vec![0.0; n_windows];
    let mut rows: Vec<CorrelationRow> = by_code
        .into_iter()
        .map(|(code, (a, b))| CorrelationRow {
            code: code.to_string(),
            rho: spearman(a.unwrap_or(&zeros), b.unwrap_or(&zeros))
                .ok()
                .flatten(),
            n_windows,
        })
        .collect();
    rows.sort_by(|a, b| {
        let by_rho = match (a.rho, b.rho) {
            (Some(x), Some(y)) => y.total_cmp(&x),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        };
        by_rho.then_with(|| a.code.cmp(&b.code))
    });
    rows
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicRow {
    pub source: String,
    pub timeframe: String,
    pub code: String,
    pub cluster_pct: f64,
    pub vertex: usize,
    pub edge: usize,
}

/// One row per labeled community, ordered by source, window and rank.
pub fn topic_table(partitions: &PartitionSet, labels: &[LabelRow]) -> Result<Vec<TopicRow>> {
    let mut keyed = Vec::with_capacity(labels.len());
    for (idx, row) in labels.iter().enumerate() {
        let (partition, position) = partitions.lookup(idx, row)?;
        let c = &partition.communities[position];
        keyed.push((
            (row.source.clone(), row.window_index, position),
            TopicRow {
                source: row.source.clone(),
                timeframe: format!("Fortnight {}", row.window_index),
                code: row.code.clone(),
                cluster_pct: c.cluster_pct,
                vertex: c.vertex_count,
                edge: c.edge_count,
            },
        ));
    }
    keyed.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(keyed.into_iter().map(|(_, r)| r).collect())
}

fn csv_string(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    wtr.write_record(header).expect("in-memory write");
    for row in rows {
        wtr.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

pub fn topics_csv(rows: &[TopicRow]) -> String {
    let header = [
        "source",
        "timeframe",
        "code",
        "cluster_pct",
        "vertex",
        "edge",
    ]
    .map(String::from);
    csv_string(
        &header,
        rows.iter().map(|r| {
            vec![
                r.source.clone(),
                r.timeframe.clone(),
                r.code.clone(),
                format!("{:.2}", r.cluster_pct),
                r.vertex.to_string(),
                r.edge.to_string(),
            ]
        }),
    )
}

pub fn series_csv(series: &[TopicSeries], window_count: u32) -> String {
    let mut header = vec!["code".to_string(), "source".to_string()];
    header.extend((1..=window_count).map(|w| format!("w{w}")));
    csv_string(
        &header,
        series.iter().map(|s| {
            let mut row = vec![s.code.clone(), s.source.clone()];
            row.extend(s.presence.iter().map(|v| format!("{v:.2}")));
            row
        }),
    )
}

pub fn labels_csv(rows: &[LabelRow]) -> String {
    let header = ["source", "window_index", "community_id", "code"].map(String::from);
    csv_string(
        &header,
        rows.iter().map(|r| {
            vec![
                r.source.clone(),
                r.window_index.to_string(),
                r.community_id.to_string(),
                r.code.clone(),
            ]
        }),
    )
}

pub fn correlations_csv(rows: &[CorrelationRow]) -> String {
    let header = ["code", "rho", "n_windows"].map(String::from);
    csv_string(
        &header,
        rows.iter().map(|r| {
            vec![
                r.code.clone(),
                r.rho.map(|v| format!("{v:.6}")).unwrap_or_default(),
                r.n_windows.to_string(),
            ]
        }),
    )
}

//! Walktrap community detection on word graphs.
//!
//! The walk runs on the symmetrized weights `a(u, v) = w(u, v) + w(v, u)`.
//! Each vertex gets the probability vector `Pᵗ[i, ·]` of a length-`t` walk
//! started at it, and vertices (and communities, through the mean of their
//! members' vectors) are compared with
//!
//! ```text
//! r²(C1, C2) = Σ_k (Pᵗ[C1, k] − Pᵗ[C2, k])² / d(k)
//! ```
//!
//! Starting from singletons, the adjacent pair with the smallest Ward
//! increase `Δσ = (1/n) · |C1||C2| / (|C1| + |C2|) · r²(C1, C2)` is merged
//! until no adjacent pair is left. The level with the highest weighted
//! modularity is returned. Everything is exact probability propagation,
//! no sampling, so results depend only on the graph and `t`.

use std::borrow::Cow;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WordGraph;

pub const DEFAULT_WALK_LENGTH: usize = 4;
pub const DEFAULT_TOP_K: usize = 5;
pub const DEFAULT_MIN_DEGREE: u64 = 10;

/// Random-walk view of a graph. Only vertices with positive strength take
/// part in the walk; they are numbered `0..active_len()` in graph order.
#[derive(Debug, Clone)]
pub struct WalkModel {
    tokens: Vec<String>,
    active: Vec<usize>,
    adjacency: Vec<Vec<(usize, f64)>>,
    strength: Vec<f64>,
    inv_strength: Vec<f64>,
    walk_length: usize,
    rows: Vec<Vec<f64>>,
}

impl WalkModel {
    pub fn new(graph: &WordGraph, walk_length: usize) -> Result<Self> {
        if walk_length == 0 {
            return Err(Error::InvalidConfig(
                "walk length t must be positive".into(),
            ));
        }
        let tokens: Vec<String> = graph.vertices().iter().cloned().collect();
        let index: BTreeMap<&str, usize> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect();

        let mut sym: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for ((src, dst), w) in graph.edges() {
            let (u, v) = (index[src.as_str()], index[dst.as_str()]);
            *sym.entry((u.min(v), u.max(v))).or_insert(0.0) += *w as f64;
        }

        let mut full_strength = vec![0.0; tokens.len()];
        for (&(u, v), &a) in &sym {
            full_strength[u] += a;
            full_strength[v] += a;
        }
        let active: Vec<usize> = (0..tokens.len())
            .filter(|&i| full_strength[i] > 0.0)
            .collect();
        let mut local = vec![usize::MAX; tokens.len()];
        for (li, &gi) in active.iter().enumerate() {
            local[gi] = li;
        }

        let mut adjacency = vec![Vec::new(); active.len()];
        for (&(u, v), &a) in &sym {
            let (lu, lv) = (local[u], local[v]);
            adjacency[lu].push((lv, a));
            adjacency[lv].push((lu, a));
        }
        let strength: Vec<f64> = active.iter().map(|&g| full_strength[g]).collect();
        let inv_strength: Vec<f64> = strength.iter().map(|d| 1.0 / d).collect();

        let mut model = WalkModel {
            tokens,
            active,
            adjacency,
            strength,
            inv_strength,
            walk_length,
            rows: Vec::new(),
        };
        model.rows = (0..model.active.len())
            .into_par_iter()
            .map(|i| model.walk_from(i))
            .collect();
        Ok(model)
    }

    /// `Pᵗ[start, ·]` by `t` sparse propagation steps.
    fn walk_from(&self, start: usize) -> Vec<f64> {
        let n = self.active.len();
        let mut current = vec![0.0; n];
        current[start] = 1.0;
        let mut next = vec![0.0; n];
        for _ in 0..self.walk_length {
            next.iter_mut().for_each(|x| *x = 0.0);
            for (j, &mass) in current.iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                let scale = mass * self.inv_strength[j];
                for &(k, a) in &self.adjacency[j] {
                    next[k] += scale * a;
                }
            }
            std::mem::swap(&mut current, &mut next);
        }
        current
    }

    /// All graph vertices in index order.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Graph indices of the vertices that take part in the walk.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn active_len(&self) -> usize {
        self.active.len()
    }

    pub fn walk_length(&self) -> usize {
        self.walk_length
    }

    /// Strengths `d(i)` of the active vertices.
    pub fn strength(&self) -> &[f64] {
        &self.strength
    }

    /// Symmetrized neighbours of an active vertex.
    pub fn neighbours(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    /// Row `i` of `Pᵗ`, indexed by active vertex.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// `Σ_k (x_k − y_k)² / d(k)`.
    pub fn distance_sq(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter()
            .zip(y)
            .zip(&self.inv_strength)
            .map(|((a, b), inv)| {
                let diff = a - b;
                diff * diff * inv
            })
            .sum()
    }
}

/// One agglomeration step. Ids are the smallest member index of each side;
/// the merged community keeps `left`, which is always the smaller one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub delta_sigma: f64,
    /// Modularity after this merge.
    pub modularity: f64,
}

/// Full merge history over the active vertices of a [`WalkModel`].
#[derive(Debug, Clone)]
pub struct Dendrogram {
    pub size: usize,
    pub initial_modularity: f64,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    /// Number of levels, singletons included.
    pub fn levels(&self) -> usize {
        self.merges.len() + 1
    }

    pub fn modularity_at(&self, level: usize) -> f64 {
        match level {
            0 => self.initial_modularity,
            l => self.merges[l - 1].modularity,
        }
    }

    /// First level with maximal modularity.
    pub fn best_level(&self) -> usize {
        let mut best = 0;
        let mut best_q = self.initial_modularity;
        for (i, merge) in self.merges.iter().enumerate() {
            if merge.modularity > best_q {
                best_q = merge.modularity;
                best = i + 1;
            }
        }
        best
    }

    /// Community id of every active vertex after `level` merges.
    pub fn membership_at(&self, level: usize) -> Vec<usize> {
        let mut parent: Vec<usize> = (0..self.size).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for merge in &self.merges[..level] {
            let (a, b) = (
                find(&mut parent, merge.left),
                find(&mut parent, merge.right),
            );
            let (lo, hi) = (a.min(b), a.max(b));
            parent[hi] = lo;
        }
        (0..self.size).map(|i| find(&mut parent, i)).collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct PairKey {
    delta_sigma: f64,
    a: usize,
    b: usize,
}

impl PartialEq for PairKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for PairKey {}

impl PartialOrd for PairKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PairKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.delta_sigma
            .total_cmp(&other.delta_sigma)
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
    }
}

impl PairKey {
    fn new(delta_sigma: f64, x: usize, y: usize) -> Self {
        PairKey {
            delta_sigma,
            a: x.min(y),
            b: x.max(y),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Link {
    delta_sigma: f64,
    weight: f64,
}

struct Cluster<'a> {
    size: usize,
    prob: Cow<'a, [f64]>,
    total: f64,
    links: BTreeMap<usize, Link>,
}

/// Runs the agglomeration to completion. `vertex_count` is the `n` in the
/// `1/n` factor of `Δσ`, normally the graph's full vertex count.
pub fn build_dendrogram(model: &WalkModel, vertex_count: usize) -> Dendrogram {
    let size = model.active_len();
    let scale = 1.0 / vertex_count.max(1) as f64;
    let two_m: f64 = model.strength.iter().sum();

    let mut clusters: Vec<Option<Cluster<'_>>> = (0..size)
        .map(|i| {
            Some(Cluster {
                size: 1,
                prob: Cow::Borrowed(model.row(i)),
                total: model.strength[i],
                links: BTreeMap::new(),
            })
        })
        .collect();

    let mut queue = BTreeSet::new();
    for i in 0..size {
        for &(j, weight) in model.neighbours(i) {
            if j <= i {
                continue;
            }
            let delta_sigma = scale * 0.5 * model.distance_sq(model.row(i), model.row(j));
            let link = Link {
                delta_sigma,
                weight,
            };
            clusters[i].as_mut().unwrap().links.insert(j, link);
            clusters[j].as_mut().unwrap().links.insert(i, link);
            queue.insert(PairKey::new(delta_sigma, i, j));
        }
    }

    let mut modularity = if two_m > 0.0 {
        -model
            .strength
            .iter()
            .map(|d| (d / two_m).powi(2))
            .sum::<f64>()
    } else {
        0.0
    };
    let initial_modularity = modularity;
    let mut merges = Vec::with_capacity(size.saturating_sub(1));

    while let Some(key) = queue.pop_first() {
        let (keep, gone) = (key.a, key.b);
        let c1 = clusters[keep].take().unwrap();
        let c2 = clusters[gone].take().unwrap();
        let between = c1.links[&gone].weight;
        let merged_size = c1.size + c2.size;
        let (s1, s2) = (c1.size as f64, c2.size as f64);

        let prob: Vec<f64> = c1
            .prob
            .iter()
            .zip(c2.prob.iter())
            .map(|(p1, p2)| (s1 * p1 + s2 * p2) / (s1 + s2))
            .collect();

        let mut neighbours: BTreeMap<usize, (Option<Link>, Option<Link>)> = BTreeMap::new();
        for (&c, &link) in &c1.links {
            if c != gone {
                neighbours.entry(c).or_default().0 = Some(link);
            }
        }
        for (&c, &link) in &c2.links {
            if c != keep {
                neighbours.entry(c).or_default().1 = Some(link);
            }
        }

        let mut links = BTreeMap::new();
        for (c, (from1, from2)) in neighbours {
            let other = clusters[c].as_mut().unwrap();
            let s3 = other.size as f64;
            let delta_sigma = match (from1, from2) {
                (Some(l1), Some(l2)) => {
                    ((s1 + s3) * l1.delta_sigma + (s2 + s3) * l2.delta_sigma - s3 * key.delta_sigma)
                        / (s1 + s2 + s3)
                }
                _ => {
                    let s = s1 + s2;
                    scale * s * s3 / (s + s3) * model.distance_sq(&prob, &other.prob)
                }
            };
            let weight = from1.map_or(0.0, |l| l.weight) + from2.map_or(0.0, |l| l.weight);
            if let Some(l1) = from1 {
                queue.remove(&PairKey::new(l1.delta_sigma, keep, c));
                other.links.remove(&keep);
            }
            if let Some(l2) = from2 {
                queue.remove(&PairKey::new(l2.delta_sigma, gone, c));
                other.links.remove(&gone);
            }
            let link = Link {
                delta_sigma,
                weight,
            };
            other.links.insert(keep, link);
            links.insert(c, link);
            queue.insert(PairKey::new(delta_sigma, keep, c));
        }

        modularity += 2.0 * between / two_m - 2.0 * c1.total * c2.total / (two_m * two_m);
        merges.push(Merge {
            left: keep,
            right: gone,
            delta_sigma: key.delta_sigma,
            modularity,
        });
        clusters[keep] = Some(Cluster {
            size: merged_size,
            prob: Cow::Owned(prob),
            total: c1.total + c2.total,
            links,
        });
    }

    Dendrogram {
        size,
        initial_modularity,
        merges,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Community {
    /// Index of the community's smallest member in the graph's vertex order.
    pub id: usize,
    pub vertex_count: usize,
    /// Directed edges of the original graph with both ends inside.
    pub edge_count: usize,
    /// Share of the graph's vertices, in percent, two decimals.
    pub cluster_pct: f64,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub source: String,
    pub window_index: u32,
    #[serde(rename = "Q")]
    pub modularity: f64,
    /// Ranked: larger communities first, isolated vertices last.
    pub communities: Vec<Community>,
}

impl Partition {
    /// Builds the ranked partition for a per-vertex membership (indexed by
    /// the graph's vertex order, values are arbitrary labels).
    pub fn from_membership(graph: &WordGraph, membership: &[usize]) -> Partition {
        let tokens: Vec<&String> = graph.vertices().iter().collect();
        assert_eq!(
            tokens.len(),
            membership.len(),
            "membership must cover every vertex"
        );
        let n = tokens.len();
        let index: BTreeMap<&str, usize> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect();

        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (v, &label) in membership.iter().enumerate() {
            groups.entry(label).or_default().push(v);
        }
        let mut edge_counts: BTreeMap<usize, usize> = BTreeMap::new();
        let mut touched = vec![false; n];
        for (src, dst) in graph.edges().keys() {
            let (u, v) = (index[src.as_str()], index[dst.as_str()]);
            touched[u] = true;
            touched[v] = true;
            if membership[u] == membership[v] {
                *edge_counts.entry(membership[u]).or_insert(0) += 1;
            }
        }

        let mut communities: Vec<(bool, Community)> = groups
            .into_iter()
            .map(|(label, members)| {
                let isolated = members.len() == 1 && !touched[members[0]];
                let community = Community {
                    id: members[0],
                    vertex_count: members.len(),
                    edge_count: edge_counts.get(&label).copied().unwrap_or(0),
                    cluster_pct: round2(100.0 * members.len() as f64 / n as f64),
                    members: members.iter().map(|&v| tokens[v].clone()).collect(),
                };
                (isolated, community)
            })
            .collect();
        communities
            .sort_by(|(iso_a, a), (iso_b, b)| iso_a.cmp(iso_b).then_with(|| rank_order(a, b)));

        Partition {
            source: graph.source.clone(),
            window_index: graph.window.index,
            modularity: modularity(graph, membership),
            communities: communities.into_iter().map(|(_, c)| c).collect(),
        }
    }

    /// Community label of every vertex, in graph order.
    pub fn membership(&self, graph: &WordGraph) -> Option<Vec<usize>> {
        let index: BTreeMap<&str, usize> = graph
            .vertices()
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect();
        let mut membership = vec![usize::MAX; graph.n()];
        for c in &self.communities {
            for m in &c.members {
                let v = *index.get(m.as_str())?;
                if membership[v] != usize::MAX {
                    return None;
                }
                membership[v] = c.id;
            }
        }
        membership
            .iter()
            .all(|&m| m != usize::MAX)
            .then_some(membership)
    }

    pub fn community(&self, id: usize) -> Option<&Community> {
        self.communities.iter().find(|c| c.id == id)
    }
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Larger first, then more internal edges, then smallest member token.
fn rank_order(a: &Community, b: &Community) -> Ordering {
    b.vertex_count
        .cmp(&a.vertex_count)
        .then(b.edge_count.cmp(&a.edge_count))
        .then_with(|| a.members.first().cmp(&b.members.first()))
}

/// Weighted modularity of a membership over the symmetrized weights:
/// `Q = Σ_C [ in_C / 2M − (tot_C / 2M)² ]`.
pub fn modularity(graph: &WordGraph, membership: &[usize]) -> f64 {
    let index: BTreeMap<&str, usize> = graph
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();
    let mut strength = vec![0.0; graph.n()];
    let mut inside: BTreeMap<usize, f64> = BTreeMap::new();
    for ((src, dst), &w) in graph.edges() {
        let (u, v) = (index[src.as_str()], index[dst.as_str()]);
        let w = w as f64;
        strength[u] += w;
        strength[v] += w;
        if membership[u] == membership[v] {
            *inside.entry(membership[u]).or_insert(0.0) += 2.0 * w;
        }
    }
    let two_m: f64 = strength.iter().sum();
    if two_m == 0.0 {
        return 0.0;
    }
    let mut totals: BTreeMap<usize, f64> = BTreeMap::new();
    for (v, &d) in strength.iter().enumerate() {
        *totals.entry(membership[v]).or_insert(0.0) += d;
    }
    totals
        .iter()
        .map(|(c, tot)| inside.get(c).copied().unwrap_or(0.0) / two_m - (tot / two_m).powi(2))
        .sum()
}

/// Walktrap with the modularity-maximizing cut. Vertices without edges
/// come back as trailing singletons.
pub fn walktrap(graph: &WordGraph, walk_length: usize) -> Result<Partition> {
    let model = WalkModel::new(graph, walk_length)?;
    let dendrogram = build_dendrogram(&model, graph.n());
    Ok(partition_at(
        graph,
        &model,
        &dendrogram,
        dendrogram.best_level(),
    ))
}

/// The partition after `level` merges of `dendrogram`.
pub fn partition_at(
    graph: &WordGraph,
    model: &WalkModel,
    dendrogram: &Dendrogram,
    level: usize,
) -> Partition {
    let local = dendrogram.membership_at(level);
    let mut membership: Vec<usize> = (0..graph.n()).collect();
    for (li, &gi) in model.active().iter().enumerate() {
        membership[gi] = model.active()[local[li]];
    }
    Partition::from_membership(graph, &membership)
}

/// The `k` largest multi-vertex communities with at least `min_pct`
/// percent of the vertices.
pub fn top_communities(partition: &Partition, k: usize, min_pct: f64) -> Vec<Community> {
    let mut ranked: Vec<&Community> = partition
        .communities
        .iter()
        .filter(|c| c.vertex_count >= 2 && c.cluster_pct >= min_pct)
        .collect();
    ranked.sort_by(|a, b| rank_order(a, b));
    ranked.into_iter().take(k).cloned().collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordCloud {
    pub community_id: usize,
    pub entries: Vec<(String, u64)>,
}

/// Vertices of `community` whose symmetrized strength inside the community
/// exceeds `min_degree`, heaviest first.
pub fn wordcloud(graph: &WordGraph, community: &Community, min_degree: u64) -> WordCloud {
    let members: BTreeSet<&str> = community.members.iter().map(String::as_str).collect();
    let mut strength: BTreeMap<&str, u64> = BTreeMap::new();
    for ((src, dst), &w) in graph.edges() {
        if members.contains(src.as_str()) && members.contains(dst.as_str()) {
            *strength.entry(src.as_str()).or_insert(0) += w;
            *strength.entry(dst.as_str()).or_insert(0) += w;
        }
    }
    let mut entries: Vec<(String, u64)> = strength
        .into_iter()
        .filter(|&(_, s)| s > min_degree)
        .map(|(t, s)| (t.to_string(), s))
        .collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    WordCloud {
        community_id: community.id,
        entries,
    }
}

pub fn write_partition(partition: &Partition, path: &Path) -> Result<()> {
    crate::io::write_json(path, partition)
}

pub fn read_partition(path: &Path) -> Result<Partition> {
    crate::io::require(path)?;
    crate::io::read_json(path)
}

#![allow(dead_code)]

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use topicgraph::community::WalkModel;
use topicgraph::corpus::{sort_posts, Post};
use topicgraph::graph::{Window, WordGraph};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn window() -> Window {
    Window::nth(NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(), 15, 1)
}

pub fn vertex_name(i: usize) -> String {
    format!("V{i:02}")
}

/// Random directed graph on `n` named vertices, every vertex present.
pub fn random_graph(rng: &mut impl Rng, n: usize, density: f64) -> WordGraph {
    let mut g = WordGraph::new("s", window());
    for i in 0..n {
        g.add_vertex(&vertex_name(i));
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.random_bool(density) {
                g.add_edge(&vertex_name(i), &vertex_name(j), rng.random_range(1..=5));
            }
        }
    }
    g
}

/// Undirected graph from an edge list, one directed edge each.
pub fn graph_from(n: usize, edges: &[(usize, usize)]) -> WordGraph {
    let mut g = WordGraph::new("s", window());
    for i in 0..n {
        g.add_vertex(&vertex_name(i));
    }
    for &(a, b) in edges {
        g.add_edge(&vertex_name(a), &vertex_name(b), 1);
    }
    g
}

pub fn two_cliques_with_bridge() -> WordGraph {
    let mut edges = Vec::new();
    for base in [0, 4] {
        for i in 0..4 {
            for j in i + 1..4 {
                edges.push((base + i, base + j));
            }
        }
    }
    edges.push((3, 4));
    graph_from(8, &edges)
}

pub fn k4() -> WordGraph {
    graph_from(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
}

/// Dense symmetrized adjacency, indexed by the graph's vertex order.
pub fn dense_adjacency(g: &WordGraph) -> Vec<Vec<f64>> {
    let tokens: Vec<&String> = g.vertices().iter().collect();
    let n = tokens.len();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                a[i][j] = (g.weight(tokens[i], tokens[j]) + g.weight(tokens[j], tokens[i])) as f64;
            }
        }
    }
    a
}

/// `Pᵗ` over the connected (positive-degree) vertices by repeated dense
/// matrix multiplication, plus their degrees.
pub fn dense_walk(g: &WordGraph, t: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let full = dense_adjacency(g);
    let keep: Vec<usize> = (0..full.len())
        .filter(|&i| full[i].iter().sum::<f64>() > 0.0)
        .collect();
    let n = keep.len();
    let a: Vec<Vec<f64>> = keep
        .iter()
        .map(|&i| keep.iter().map(|&j| full[i][j]).collect())
        .collect();
    let d: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let p: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| a[i][j] / d[i]).collect())
        .collect();
    let mut power: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    for _ in 0..t {
        power = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| power[i][k] * p[k][j]).sum())
                    .collect()
            })
            .collect();
    }
    (power, d)
}

/// `σ = (1/n) Σ_C Σ_{i∈C} r²(i, C)` from scratch for a membership over
/// the active vertices.
pub fn sigma(rows: &[Vec<f64>], degree: &[f64], membership: &[usize], n_total: usize) -> f64 {
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, &c) in membership.iter().enumerate() {
        groups.entry(c).or_default().push(i);
    }
    let dim = degree.len();
    let mut total = 0.0;
    for members in groups.values() {
        let centroid: Vec<f64> = (0..dim)
            .map(|k| members.iter().map(|&i| rows[i][k]).sum::<f64>() / members.len() as f64)
            .collect();
        for &i in members {
            total += (0..dim)
                .map(|k| (rows[i][k] - centroid[k]).powi(2) / degree[k])
                .sum::<f64>();
        }
    }
    total / n_total as f64
}

/// `Q = 1/2M Σ_ij (A_ij − d_i d_j / 2M) δ(c_i, c_j)`.
pub fn modularity_double_sum(g: &WordGraph, membership: &[usize]) -> f64 {
    let a = dense_adjacency(g);
    let d: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let two_m: f64 = d.iter().sum();
    if two_m == 0.0 {
        return 0.0;
    }
    let mut q = 0.0;
    for i in 0..a.len() {
        for j in 0..a.len() {
            if membership[i] == membership[j] {
                q += a[i][j] - d[i] * d[j] / two_m;
            }
        }
    }
    q / two_m
}

/// Every set partition of `0..n` as a restricted growth string.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn grow(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        let max = prefix.iter().copied().max().map_or(0, |m| m + 1);
        for label in 0..=max {
            prefix.push(label);
            grow(prefix, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    grow(&mut Vec::new(), n, &mut out);
    out
}

/// Canonical form of a membership: groups of vertex indices, sorted.
pub fn groups(membership: &[usize]) -> Vec<Vec<usize>> {
    let mut map: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, &c) in membership.iter().enumerate() {
        map.entry(c).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = map.into_values().collect();
    out.sort();
    out
}

/// Definitional Spearman: average ranks by counting, then Pearson.
pub fn spearman_oracle(x: &[f64], y: &[f64]) -> Option<f64> {
    fn ranks(v: &[f64]) -> Vec<f64> {
        v.iter()
            .map(|&a| {
                let less = v.iter().filter(|&&b| b < a).count() as f64;
                let equal = v.iter().filter(|&&b| b == a).count() as f64;
                less + (equal + 1.0) / 2.0
            })
            .collect()
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..rx.len() {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx).powi(2);
        syy += (ry[i] - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

/// Random multi-source post set, already sorted. Offsets are seconds from
/// a fixed epoch and drawn from a small range so that close calls happen.
pub fn random_posts(rng: &mut impl Rng, count: usize) -> Vec<Post> {
    let epoch = Utc.with_ymd_and_hms(2020, 3, 1, 0, 0, 0).unwrap();
    let mut posts: Vec<Post> = (0..count)
        .map(|i| Post {
            id: format!("p{i:04}"),
            source: ["a", "b", "c"][rng.random_range(0..3)].to_string(),
            created_at: epoch + Duration::seconds(rng.random_range(0..(count as i64 * 90 + 1))),
            text: format!("t{i}"),
        })
        .collect();
    sort_posts(&mut posts);
    posts
}

pub fn model(g: &WordGraph, t: usize) -> WalkModel {
    WalkModel::new(g, t).expect("positive walk length")
}

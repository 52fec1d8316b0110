//! Acceptance suite: one PASS/FAIL line per criterion; exits non-zero if
//! any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use chrono::{TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::Rng;

use topicgraph::community::{build_dendrogram, walktrap, wordcloud};
use topicgraph::corpus::{merge_threads, Post};
use topicgraph::graph::{build_graph, WordGraph};
use topicgraph::textprep::{load_config, tokenize, ConfigPaths, Document, StripRules};
use topicgraph::trends::{average_ranks, spearman};

type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {{
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    }};
}

const BIN: &str = env!("CARGO_BIN_EXE_topicgraph");
const TWEET: &str =
    "NO AR. OMS não orientou evitar sexo com animais para se prevenir do coronavírus. \
    https://aosfatos.org/noticias/oms-n… #CoronaVirusFacts";

fn synthetic_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/synthetic")
}

fn criterion_1() -> Check {
    let config =
        load_config(&ConfigPaths::default(), StripRules::default()).map_err(|e| e.to_string())?;
    let tokens = tokenize(TWEET, &config);
    ensure!(
        tokens == ["OMS", "ORIENTOU", "EVITAR", "SEXO", "ANIMAIS", "PREVENIR"],
        "tokens {tokens:?}"
    );
    let doc = Document {
        source: "aosfatos".into(),
        window_hint: Utc::now(),
        tokens,
    };
    let g = build_graph(&[doc], "aosfatos", common::window());
    ensure!(
        g.n() == 6 && g.m() == 5,
        "graph has {} vertices, {} edges",
        g.n(),
        g.m()
    );
    ensure!(
        g.edges().values().all(|&w| w == 1),
        "weights {:?}",
        g.edges()
    );
    Ok(())
}

fn posts_at(offsets: &[i64]) -> Vec<Post> {
    let t0 = Utc.with_ymd_and_hms(2020, 2, 1, 9, 0, 0).unwrap();
    offsets
        .iter()
        .enumerate()
        .map(|(i, &s)| Post {
            id: format!("{i}"),
            source: "a".into(),
            created_at: t0 + chrono::Duration::seconds(s),
            text: format!("p{i}"),
        })
        .collect()
}

fn thread_sizes(offsets: &[i64]) -> Result<Vec<usize>, String> {
    let threads = merge_threads(&posts_at(offsets), 120).map_err(|e| e.to_string())?;
    Ok(threads.iter().map(|t| t.member_ids.len()).collect())
}

fn criterion_2() -> Check {
    ensure!(thread_sizes(&[0, 119])? == [2], "119 s gap must merge");
    ensure!(thread_sizes(&[0, 120])? == [1, 1], "120 s gap must split");
    ensure!(
        thread_sizes(&[0, 90, 180])? == [3],
        "90+90 s chain must form one thread"
    );
    let mut rng = common::rng(2);
    for _ in 0..1000 {
        let count = rng.random_range(0..120);
        let posts = common::random_posts(&mut rng, count);
        let gap = rng.random_range(1..400);
        let threads = merge_threads(&posts, gap).map_err(|e| e.to_string())?;
        let members: usize = threads.iter().map(|t| t.member_ids.len()).sum();
        ensure!(
            members == posts.len(),
            "{members} members from {} posts",
            posts.len()
        );
    }
    Ok(())
}

fn random_docs(rng: &mut impl Rng) -> Vec<Document> {
    let at = Utc.with_ymd_and_hms(2020, 1, 2, 0, 0, 0).unwrap();
    let vocab = ["A", "B", "C", "D", "E", "F"];
    (0..rng.random_range(0..15))
        .map(|_| Document {
            source: "s".into(),
            window_hint: at,
            tokens: (0..rng.random_range(0..10))
                .map(|_| vocab[rng.random_range(0..vocab.len())].to_string())
                .collect(),
        })
        .collect()
}

fn criterion_3() -> Check {
    let mut rng = common::rng(3);
    let w = common::window();
    for _ in 0..500 {
        let docs = random_docs(&mut rng);
        let g = build_graph(&docs, "s", w);
        let pairs: usize = docs
            .iter()
            .map(|d| d.tokens.windows(2).filter(|p| p[0] != p[1]).count())
            .sum();
        ensure!(
            g.total_weight() == pairs as u64,
            "weight {} vs {pairs} pairs",
            g.total_weight()
        );

        let mut shuffled = docs.clone();
        shuffled.shuffle(&mut rng);
        ensure!(
            build_graph(&shuffled, "s", w) == g,
            "document order changed the graph"
        );

        let split = rng.random_range(0..=docs.len());
        let mut merged = build_graph(&docs[..split], "s", w);
        merged.merge(&build_graph(&docs[split..], "s", w));
        ensure!(merged == g, "G(D1) + G(D2) differs from G(D1 ∪ D2)");
    }
    Ok(())
}

fn criterion_4() -> Check {
    let mut rng = common::rng(4);
    for _ in 0..200 {
        let n = rng.random_range(2..=20);
        let t = rng.random_range(2..=8);
        let g = common::random_graph(&mut rng, n, 0.25);
        let model = common::model(&g, t);
        for row in model.rows() {
            let sum: f64 = row.iter().sum();
            ensure!((sum - 1.0).abs() <= 1e-9, "row sum {sum}");
        }
        let dendrogram = build_dendrogram(&model, g.n());
        let (rows, degree) = common::dense_walk(&g, t);
        let mut cumulative = 0.0;
        for level in 0..dendrogram.levels() {
            if level > 0 {
                cumulative += dendrogram.merges[level - 1].delta_sigma;
            }
            let sigma = common::sigma(&rows, &degree, &dendrogram.membership_at(level), g.n());
            ensure!(
                (cumulative - sigma).abs() <= 1e-9,
                "Δσ sum {cumulative} vs σ {sigma} (n = {n})"
            );
        }
    }
    for _ in 0..300 {
        let n = rng.random_range(1..=8);
        let g = common::random_graph(&mut rng, n, 0.4);
        let p = walktrap(&g, rng.random_range(2..=8)).map_err(|e| e.to_string())?;
        let membership = p
            .membership(&g)
            .ok_or("partition does not cover the graph")?;
        let exact = common::modularity_double_sum(&g, &membership);
        ensure!(
            (p.modularity - exact).abs() <= 1e-12,
            "Q {} vs {exact}",
            p.modularity
        );
    }
    Ok(())
}

fn criterion_5() -> Check {
    let g = common::two_cliques_with_bridge();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for m in common::set_partitions(8) {
        let q = common::modularity_double_sum(&g, &m);
        if best.as_ref().is_none_or(|(b, _)| q > *b + 1e-12) {
            best = Some((q, m));
        }
    }
    let (_, optimum) = best.ok_or("no partitions")?;
    let p = walktrap(&g, 4).map_err(|e| e.to_string())?;
    let found = common::groups(&p.membership(&g).ok_or("bad cover")?);
    ensure!(
        found == common::groups(&optimum),
        "walktrap {found:?} vs optimum {:?}",
        common::groups(&optimum)
    );
    ensure!(
        found == [vec![0, 1, 2, 3], vec![4, 5, 6, 7]],
        "optimum is not the clique split: {found:?}"
    );

    let k4 = walktrap(&common::k4(), 4).map_err(|e| e.to_string())?;
    ensure!(
        k4.communities.len() == 1,
        "K4 split into {} communities",
        k4.communities.len()
    );
    Ok(())
}

fn criterion_6(run: &Path) -> Check {
    let text = fs::read_to_string(run.join("topics.csv")).map_err(|e| e.to_string())?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let mut ratios: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for record in rdr.records() {
        let r = record.map_err(|e| e.to_string())?;
        let vertex: f64 = r[4].parse().map_err(|_| "bad vertex")?;
        let pct: f64 = r[3].parse().map_err(|_| "bad cluster_pct")?;
        ratios
            .entry((r[0].to_string(), r[1].to_string()))
            .or_default()
            .push(vertex / (pct / 100.0));
    }
    ensure!(!ratios.is_empty(), "topics.csv has no rows");
    for (key, values) in &ratios {
        let (lo, hi) = values
            .iter()
            .fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        ensure!(
            hi / lo - 1.0 <= 0.01,
            "{key:?}: ratios spread from {lo:.1} to {hi:.1}"
        );
    }
    Ok(())
}

fn criterion_7() -> Check {
    let x: Vec<f64> = vec![3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
    let dec: Vec<f64> = x.iter().map(|v| -v).collect();
    let inc: Vec<f64> = (0..10).map(f64::from).collect();
    let rev: Vec<f64> = inc.iter().rev().copied().collect();
    ensure!(
        spearman(&x, &x).map_err(|e| e.to_string())? == Some(1.0),
        "rho(x, x) != 1"
    );
    ensure!(
        spearman(&x, &dec).map_err(|e| e.to_string())? == Some(-1.0),
        "rho(x, -x) != -1"
    );
    ensure!(
        spearman(&inc, &rev).map_err(|e| e.to_string())? == Some(-1.0),
        "rho(x, reversed) != -1"
    );

    let mut rng = common::rng(7);
    for _ in 0..1000 {
        let n = rng.random_range(3..30);
        let a: Vec<f64> = (0..n)
            .map(|_| f64::from(rng.random_range(0u8..5)))
            .collect();
        let b: Vec<f64> = (0..n)
            .map(|_| f64::from(rng.random_range(0u8..5)))
            .collect();
        let got = spearman(&a, &b).map_err(|e| e.to_string())?;
        match (got, common::spearman_oracle(&a, &b)) {
            (Some(p), Some(q)) => ensure!((p - q).abs() <= 1e-12, "{p} vs oracle {q}"),
            (p, q) => ensure!(p == q, "{p:?} vs oracle {q:?}"),
        }

        let mut pa: Vec<usize> = (0..n).collect();
        let mut pb = pa.clone();
        pa.shuffle(&mut rng);
        pb.shuffle(&mut rng);
        let (fa, fb): (Vec<f64>, Vec<f64>) = (
            pa.iter().map(|&v| v as f64).collect(),
            pb.iter().map(|&v| v as f64).collect(),
        );
        let d2: f64 = average_ranks(&fa)
            .iter()
            .zip(average_ranks(&fb))
            .map(|(p, q)| (p - q).powi(2))
            .sum();
        let nf = n as f64;
        let closed = 1.0 - 6.0 * d2 / (nf * (nf * nf - 1.0));
        let rho = spearman(&fa, &fb)
            .map_err(|e| e.to_string())?
            .ok_or("undefined rho")?;
        ensure!(
            (rho - closed).abs() <= 1e-12,
            "{rho} vs closed form {closed}"
        );
    }
    Ok(())
}

fn criterion_8(run: &Path) -> Check {
    let text = fs::read_to_string(run.join("correlations.csv")).map_err(|e| e.to_string())?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let first = rdr
        .records()
        .next()
        .ok_or("correlations.csv is empty")?
        .map_err(|e| e.to_string())?;
    ensure!(&first[0] == "Leisure", "first code is {:?}", &first[0]);
    let rho: f64 = first[1]
        .parse()
        .map_err(|_| format!("rho {:?}", &first[1]))?;
    ensure!(rho == 1.0, "Leisure rho {rho}");
    Ok(())
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, acc: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, acc);
            } else {
                acc.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    fs::read(&path).unwrap(),
                );
            }
        }
    }
    let mut acc = BTreeMap::new();
    walk(root, root, &mut acc);
    acc
}

fn topicgraph(args: &[&str], out: &Path) -> Check {
    let o = Command::new(BIN)
        .args(args)
        .env("TOPICGRAPH_OUT", out)
        .current_dir(synthetic_dir())
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(
        o.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    Ok(())
}

fn full_run(out: &Path) -> Check {
    topicgraph(
        &["run", "-i", "corpus.jsonl", "--labels", "labels.csv"],
        out,
    )
}

fn criterion_9(first: &Path, scratch: &Path) -> Check {
    let second = scratch.join("second");
    full_run(&second)?;
    let (a, b) = (tree(first), tree(&second));
    ensure!(a.len() > 60, "only {} files in the run tree", a.len());
    ensure!(a == b, "two runs differ");

    let staged = scratch.join("staged");
    topicgraph(&["ingest", "-i", "corpus.jsonl"], &staged)?;
    for stage in ["prep", "graph", "cluster"] {
        topicgraph(&[stage], &staged)?;
    }
    topicgraph(&["trends", "--labels", "labels.csv"], &staged)?;
    let c = tree(&staged);
    for (file, bytes) in &a {
        ensure!(
            c.get(file) == Some(bytes),
            "staged {} differs",
            file.display()
        );
    }
    ensure!(
        a.len() == c.len(),
        "staged run has {} files, monolithic {}",
        c.len(),
        a.len()
    );
    Ok(())
}

fn criterion_10() -> Check {
    let mut g = WordGraph::new("s", common::window());
    for i in 0..12 {
        g.add_edge("HUB", &format!("LEAF{i:02}"), 1);
    }
    let p = walktrap(&g, 4).map_err(|e| e.to_string())?;
    let star = p
        .communities
        .iter()
        .find(|c| c.members.iter().any(|m| m == "HUB"))
        .ok_or("hub missing")?;
    let cloud = wordcloud(&g, star, 10);
    ensure!(
        cloud.entries == [("HUB".to_string(), 12)],
        "cloud {:?}",
        cloud.entries
    );
    Ok(())
}

fn timed(limit: Duration, check: impl FnOnce() -> Check) -> (Check, Duration) {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
        let msg = panic
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let elapsed = start.elapsed();
    let result = result.and_then(|()| {
        if elapsed <= limit {
            Ok(())
        } else {
            Err(format!("took {elapsed:?}, limit {limit:?}"))
        }
    });
    (result, elapsed)
}

fn main() {
    let scratch = tempfile::tempdir().unwrap();
    let first = scratch.path().join("first");
    let secs = Duration::from_secs;

    let run_start = Instant::now();
    let first_run = full_run(&first);
    let first_run_time = run_start.elapsed();

    let after_run = |check: fn(&Path) -> Check| {
        let first = first.clone();
        let first_run = first_run.clone();
        move || first_run.and_then(|()| check(&first))
    };

    let results = vec![
        ("1 worked example", timed(secs(1), criterion_1)),
        ("2 thread rule", timed(secs(10), criterion_2)),
        ("3 graph laws", timed(secs(30), criterion_3)),
        ("4 walktrap numerics", timed(secs(60), criterion_4)),
        ("5 walktrap oracle", timed(secs(10), criterion_5)),
        (
            "6 table consistency",
            timed(secs(5), after_run(criterion_6)),
        ),
        ("7 spearman", timed(secs(10), criterion_7)),
        (
            "8 single-spike correlation",
            timed(secs(5), after_run(criterion_8)),
        ),
        (
            "9 determinism and composability",
            timed(secs(300).saturating_sub(first_run_time), || {
                first_run
                    .clone()
                    .and_then(|()| criterion_9(&first, scratch.path()))
            }),
        ),
        ("10 word-cloud threshold", timed(secs(1), criterion_10)),
    ];

    let mut failed = Vec::new();
    for (name, (result, elapsed)) in &results {
        match result {
            Ok(()) => println!("criterion {name}: PASS ({elapsed:.2?})"),
            Err(msg) => {
                println!("criterion {name}: FAIL ({elapsed:.2?}) {msg}");
                failed.push(*name);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

//! Regenerates `data/synthetic/`: the corpus and its community labels.
//!
//! cargo run -p topicgraph --release --example make_synthetic

use std::path::Path;

use topicgraph::pipeline::{self, RunConfig};
use topicgraph::{community, corpus, io, synthetic, trends};

fn main() -> topicgraph::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic");
    let corpus_path = dir.join("corpus.jsonl");
    io::write_jsonl(&corpus_path, &synthetic::generate(synthetic::SEED))?;

    let scratch = std::env::temp_dir().join("topicgraph-make-synthetic");
    let mut config = RunConfig::default();
    config.ingest.inputs = vec![corpus_path];
    pipeline::run_pipeline(&config, &scratch)?;

    let index: pipeline::WindowIndex = io::read_json(&scratch.join(pipeline::WINDOWS))?;
    let mut partitions = Vec::new();
    for source in &index.sources {
        for window in &index.windows {
            let path = pipeline::partition_path(&scratch, source, window.index);
            partitions.push(community::read_partition(&path)?);
        }
    }
    let labels = synthetic::label_partitions(&partitions, community::DEFAULT_TOP_K);
    io::write_string(&dir.join("labels.csv"), &trends::labels_csv(&labels))?;
    let threads = corpus::read_threads(&scratch.join(pipeline::THREADS))?;
    println!("{} threads, {} labels", threads.len(), labels.len());
    std::fs::remove_dir_all(&scratch).ok();
    Ok(())
}

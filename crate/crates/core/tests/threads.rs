mod common;

use proptest::prelude::*;
use topicgraph::corpus::{self, merge_threads, InputFormat};
use topicgraph::synthetic;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn members_are_conserved_in_order(seed in any::<u64>(), count in 0usize..200, gap in 1u64..400) {
        let posts = common::random_posts(&mut common::rng(seed), count);
        let threads = merge_threads(&posts, gap).unwrap();
        let ids: Vec<&String> = threads.iter().flat_map(|t| &t.member_ids).collect();
        let expected: Vec<&String> = posts.iter().map(|p| &p.id).collect();
        prop_assert_eq!(ids, expected);
    }

    #[test]
    fn boundaries_respect_the_gap(seed in any::<u64>(), count in 2usize..200, gap in 1u64..400) {
        let posts = common::random_posts(&mut common::rng(seed), count);
        let threads = merge_threads(&posts, gap).unwrap();
        let mut pos = 0;
        for thread in &threads {
            let members = &posts[pos..pos + thread.member_ids.len()];
            prop_assert_eq!(thread.start_at, members[0].created_at);
            for pair in members.windows(2) {
                prop_assert_eq!(&pair[0].source, &pair[1].source);
                prop_assert!((pair[1].created_at - pair[0].created_at).num_seconds() < gap as i64);
            }
            pos += members.len();
            if let Some(next) = posts.get(pos) {
                let last = &members[members.len() - 1];
                prop_assert!(
                    next.source != last.source
                        || (next.created_at - last.created_at).num_seconds() >= gap as i64
                );
            }
        }
    }

    #[test]
    fn wider_gaps_only_coarsen(seed in any::<u64>(), count in 0usize..150, g1 in 1u64..300, extra in 0u64..300) {
        let posts = common::random_posts(&mut common::rng(seed), count);
        let fine = merge_threads(&posts, g1).unwrap();
        let coarse = merge_threads(&posts, g1 + extra).unwrap();
        prop_assert!(coarse.len() <= fine.len());
        let mut owner = std::collections::BTreeMap::new();
        for (i, t) in coarse.iter().enumerate() {
            for id in &t.member_ids {
                owner.insert(id.clone(), i);
            }
        }
        for t in &fine {
            let first = owner[&t.member_ids[0]];
            prop_assert!(t.member_ids.iter().all(|id| owner[id] == first));
        }
    }

    #[test]
    fn merging_is_repeatable_and_round_trips(seed in any::<u64>(), count in 0usize..100) {
        let posts = common::random_posts(&mut common::rng(seed), count);
        let a = merge_threads(&posts, 120).unwrap();
        prop_assert_eq!(&a, &merge_threads(&posts, 120).unwrap());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("threads.jsonl");
        corpus::write_threads(&a, &path).unwrap();
        prop_assert_eq!(corpus::read_threads(&path).unwrap(), a);
    }
}

#[test]
fn bundled_corpus_matches_generator() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synthetic/corpus.jsonl");
    let posts = corpus::ingest(&path, InputFormat::Jsonl).unwrap();
    assert_eq!(posts.len(), synthetic::TOTAL_POSTS);
    assert_eq!(posts, synthetic::generate(synthetic::SEED));
    let threads = merge_threads(&posts, corpus::DEFAULT_GAP_SECONDS).unwrap();
    assert_eq!(
        threads.iter().map(|t| t.member_ids.len()).sum::<usize>(),
        posts.len()
    );
    assert!(threads.len() < posts.len());
}

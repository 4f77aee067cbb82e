mod common;

use common::{law_graphml_roundtrip, law_idempotent, law_order_independent, random_clean_input, random_graph};
use osnlab::crawler::{CrawlMode, Outcome, RawCrawl, VisitRecord};
use osnlab::pipeline::{clean, clean_dir, clean_input, extract_ego_network, integrity_check, CleanGraph, CleanInput, IdNormalizer};
use proptest::prelude::*;

fn arb_input() -> impl Strategy<Value = CleanInput> {
    (
        prop::collection::vec((0u64..60, 0u64..60), 0..200),
        prop::collection::vec((0u64..60, 0usize..30), 0..30),
        prop::collection::vec(0u64..60, 0..10),
    )
        .prop_map(|(observations, visited, private)| CleanInput { observations, visited, private })
}

proptest! {
    #[test]
    fn clean_is_idempotent(input in arb_input()) {
        prop_assert_eq!(law_idempotent(&input), Ok(()));
    }

    #[test]
    fn clean_ignores_observation_order(input in arb_input(), seed in any::<u64>()) {
        prop_assert_eq!(law_order_independent(&input, seed), Ok(()));
    }

    #[test]
    fn clean_accounting_adds_up(input in arb_input()) {
        let c = clean_input(&input, IdNormalizer::Passthrough);
        prop_assert_eq!(c.observations, input.observations.len());
        prop_assert_eq!(c.self_loops_dropped, input.observations.iter().filter(|(u, v)| u == v).count());
        prop_assert_eq!(c.observations - c.self_loops_dropped - c.duplicate_edges_removed, c.graph.edge_count());
        prop_assert_eq!(c.collisions_detected, 0);
        prop_assert!(integrity_check(&c).is_ok());
    }
}

#[test]
fn seeded_crawl_shaped_inputs_obey_the_laws() {
    for seed in 0..20 {
        let input = random_clean_input(seed, 5_000, 800);
        law_idempotent(&input).unwrap();
        law_order_independent(&input, seed).unwrap();
        law_graphml_roundtrip(&clean_input(&input, IdNormalizer::Aphash48).graph).unwrap();
    }
}

#[test]
fn graphml_roundtrip_on_random_graphs() {
    for i in 0..50 {
        law_graphml_roundtrip(&random_graph(i)).unwrap();
    }
}

fn sample_raw() -> RawCrawl {
    let mut raw = RawCrawl::new(CrawlMode::Bfs);
    let visit = |id, outcome, degree, depth| VisitRecord { id, outcome, degree, truncated: false, depth: Some(depth), agent: 0 };
    raw.visits = vec![
        visit(100, Outcome::Visited, 3, 0),
        visit(200, Outcome::Visited, 2, 1),
        visit(300, Outcome::Private, 0, 1),
        visit(400, Outcome::Visited, 0, 1),
    ];
    raw.observations = vec![(100, 200), (100, 300), (100, 400), (200, 100), (200, 500)];
    raw
}

#[test]
fn clean_dir_matches_in_memory_clean_and_survives_reload() {
    let raw = sample_raw();
    let raw_dir = tempfile::tempdir().unwrap();
    raw.save(raw_dir.path()).unwrap();
    let out = tempfile::tempdir().unwrap();
    let from_disk = clean_dir(raw_dir.path(), out.path()).unwrap();
    let in_memory = clean(&raw);
    assert_eq!(from_disk, in_memory);
    assert_eq!(CleanGraph::load(out.path()).unwrap(), in_memory);

    let g = &in_memory.graph;
    assert_eq!(g.node_count(), 5);
    assert_eq!(g.edge_count(), 4);
    assert_eq!(in_memory.duplicate_edges_removed, 1);
    // the visited user with no friends stays as an isolated node
    let isolated = osnlab::pipeline::anonymize_numeric(400).value();
    assert_eq!(g.degree_of(isolated), Some(1));
    let report = integrity_check(&in_memory).unwrap();
    assert_eq!(report.duplicate_fraction, 0.2);
}

#[test]
fn ego_network_of_clean_sample() {
    let c = clean(&sample_raw());
    let center = osnlab::pipeline::anonymize_numeric(200).value();
    let ego = extract_ego_network(&c.graph, center, 1).unwrap();
    assert_eq!(ego.node_count(), 3);
    assert_eq!(ego.edge_count(), 2);
    law_graphml_roundtrip(&ego).unwrap();
    let whole = extract_ego_network(&c.graph, center, 10).unwrap();
    assert_eq!(whole, c.graph);
    assert!(extract_ego_network(&c.graph, 12345, 1).is_err());
}

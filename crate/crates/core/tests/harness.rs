use std::collections::BTreeMap;

use osnlab::harness::{compare_reports, diff_manifests, run_experiment, ExperimentConfig, VERDICT_NAMES};
use osnlab::metrics::{full_report, MetricsParams, MetricsReport};
use osnlab::service::UNCAPPED;
use osnlab::world::{generate_world, WorldConfig};

fn small(out: &std::path::Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.world = WorldConfig::new(3000);
    cfg.world.max_degree = 150;
    cfg.uni.queues = 4;
    cfg.uni.queue_len = 600;
    cfg.spectral_k = 5;
    cfg.out_dir = out.to_path_buf();
    cfg
}

fn truth_report(seed: u64, q: f64) -> MetricsReport {
    let mut wc = WorldConfig::new(1500);
    wc.max_degree = 100;
    wc.rng_seed = seed;
    let world = generate_world(&wc).unwrap();
    let params = MetricsParams { q, ..MetricsParams::default() };
    full_report(world.graph(), &params).unwrap().report
}

#[test]
fn self_comparison_is_all_negative() {
    let t = truth_report(1, 0.9);
    let s = compare_reports(&t, &t, &t).unwrap();
    assert_eq!(s.verdicts.len(), 2 * VERDICT_NAMES.len());
    for v in &s.verdicts {
        assert!(!v.positive, "{v:?}");
    }
    assert_eq!(s.verdict("a", "degree_bias").unwrap().statistic, 0.0);
}

#[test]
fn swapping_samples_only_swaps_labels() {
    let t = truth_report(1, 0.9);
    let other = truth_report(2, 0.9);
    let ab = compare_reports(&t, &other, &t).unwrap();
    let ba = compare_reports(&other, &t, &t).unwrap();
    for name in VERDICT_NAMES {
        for (x, y) in [("a", "b"), ("b", "a")] {
            let (u, v) = (ab.verdict(x, name).unwrap(), ba.verdict(y, name).unwrap());
            assert_eq!(
                (u.statistic.to_bits(), u.threshold.to_bits(), u.positive, u.applicable),
                (v.statistic.to_bits(), v.threshold.to_bits(), v.positive, v.applicable),
                "{name}"
            );
        }
    }
}

#[test]
fn mismatched_parameters_are_rejected() {
    let t = truth_report(1, 0.9);
    let other_q = truth_report(1, 0.5);
    let err = compare_reports(&other_q, &t, &t).unwrap_err();
    assert_eq!(err.stage, "compare");
    let mut other_k = t.clone();
    other_k.params.spectral.k = 3;
    assert!(compare_reports(&t, &other_k, &t).is_err());
    let mut capped = t.clone();
    capped.params.degree_cap = Some(40);
    assert!(compare_reports(&capped, &t, &t).is_err());
}

#[test]
fn seeded_experiment_is_reproducible_and_tracks_drift() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = run_experiment(&small(d1.path())).unwrap();
    let second = run_experiment(&small(d2.path())).unwrap();
    assert_eq!(first.clean_bfs.graph, second.clean_bfs.graph);
    assert_eq!(first.clean_bfs.visited, second.clean_bfs.visited);
    // uniform samples draw the same IDs; only record interleaving may differ
    assert_eq!(first.clean_uni.graph, second.clean_uni.graph);
    assert!(first.drift.is_none());
    for name in VERDICT_NAMES {
        for label in ["bfs", "uni"] {
            assert!(first.summary.verdict(label, name).is_some(), "{label}.{name}");
        }
    }
    let summary = std::fs::read_to_string(d1.path().join("summary")).unwrap();
    assert!(summary.contains("verdict.bfs.degree_bias.positive="));
    assert!(first.manifest.iter().any(|e| e.path == "analysis_truth/report"));

    // re-running in place resumes the finished crawls and reproduces every output
    let rerun = run_experiment(&small(d1.path())).unwrap();
    let drift = rerun.drift.unwrap();
    assert!(drift.changed.is_empty() && drift.added.is_empty() && drift.removed.is_empty(), "{drift:?}");

    // tampering is reported
    let tampered: Vec<_> = rerun
        .manifest
        .iter()
        .cloned()
        .map(|mut e| {
            if e.path == "summary" {
                e.sha256 = "0".repeat(64);
            }
            e
        })
        .collect();
    assert_eq!(diff_manifests(&tampered, &rerun.manifest).changed, vec!["summary".to_string()]);
}

#[test]
fn privacy_zero_and_inactive_cap() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path());
    cfg.world.privacy_fraction = 0.0;
    cfg.service.friend_cap = 1000;
    let out = run_experiment(&cfg).unwrap();
    for label in ["bfs", "uni"] {
        let p = out.summary.verdict(label, "privacy_discrepancy").unwrap();
        assert!(p.statistic.abs() < 1e-12 && !p.positive, "{p:?}");
        let m = out.summary.verdict(label, "median_pinning").unwrap();
        assert!(!m.positive, "{m:?}");
        assert_eq!(m.detail, "not pinned");
    }

    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(dir.path());
    cfg.service.friend_cap = UNCAPPED;
    let out = run_experiment(&cfg).unwrap();
    assert!(!out.summary.verdict("uni", "median_pinning").unwrap().applicable);
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.conf");
    std::fs::write(&path, "# small run\nn_users=2000\nfriend_cap=none\nq=0.5\n").unwrap();
    let cfg = ExperimentConfig::from_file(&path).unwrap();
    assert_eq!(cfg.world.n_users, 2000);
    assert_eq!(cfg.service.friend_cap, UNCAPPED);
    assert_eq!(cfg.q, 0.5);
    let map: BTreeMap<String, String> = cfg.to_kv().into_iter().collect();
    assert_eq!(ExperimentConfig::from_kv(&map).unwrap(), cfg);
}

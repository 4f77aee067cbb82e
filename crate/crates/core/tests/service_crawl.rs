use std::collections::{HashSet, VecDeque};
use std::fs::OpenOptions;
use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use osnlab::crawler::{
    bfs_crawl, uniform_crawl, BfsConfig, CrawlError, CrawlLimits, FetchOutcome, OsnClient, Outcome, RawCrawl, UniConfig,
    VISITS_FILE,
};
use osnlab::graph::SocialGraph;
use osnlab::service::{self, Credential, ServiceConfig, ServiceHandle};
use osnlab::world::{generate_world, SyntheticWorld, WorldConfig};

fn small_world(seed: u64) -> Arc<SyntheticWorld> {
    let mut cfg = WorldConfig::new(2000);
    cfg.max_degree = 60;
    cfg.rng_seed = seed;
    Arc::new(generate_world(&cfg).unwrap())
}

fn serve(world: &Arc<SyntheticWorld>, cap: usize, rate: f64) -> ServiceHandle {
    let seed = world.default_seed_user();
    let mut cfg = ServiceConfig::new(vec![Credential::new("alice", "pw", seed)]);
    cfg.friend_cap = cap;
    cfg.rate_limit = rate;
    service::spawn(world.clone(), cfg).unwrap()
}

fn bfs_cfg(h: &ServiceHandle, limits: CrawlLimits) -> BfsConfig {
    BfsConfig { endpoint: h.endpoint(), username: "alice".into(), password: "pw".into(), limits, out_dir: None }
}

/// In-process BFS over the ground truth, honoring the privacy rule and the
/// friend cap exactly as the service does.
fn oracle_bfs(world: &SyntheticWorld, seed: u64, max_depth: u32, cap: usize) -> Vec<(u64, Outcome)> {
    let g = world.graph();
    let mut out = Vec::new();
    let mut seen = HashSet::from([seed]);
    let mut q = VecDeque::from([(seed, 0u32)]);
    while let Some((id, d)) = q.pop_front() {
        let ix = g.index_of(id).unwrap();
        if world.is_private_index(ix) && id != seed && !g.has_edge(id, seed) {
            out.push((id, Outcome::Private));
            continue;
        }
        out.push((id, Outcome::Visited));
        for f in g.neighbor_ids(ix).take(cap) {
            if seen.insert(f) && d + 1 < max_depth {
                q.push_back((f, d + 1));
            }
        }
    }
    out
}

#[test]
fn status_codes() {
    let world = Arc::new(SyntheticWorld::from_graph(
        SocialGraph::from_edges([], [(10, 20), (20, 30), (30, 40)]).unwrap(),
        &[30],
    ));
    let cfg = ServiceConfig::new(vec![Credential::new("u", "p", 10)]);
    let h = service::spawn(world, cfg).unwrap();
    assert!(matches!(OsnClient::login(&h.endpoint(), "u", "wrong"), Err(CrawlError::Login(_))));
    let c = OsnClient::login(&h.endpoint(), "u", "p").unwrap();
    assert_eq!(c.self_id(), 10);
    match c.friends(None, None).unwrap() {
        FetchOutcome::Friends(l) => assert_eq!((l.id, l.friends, l.truncated), (10, vec![20], false)),
        other => panic!("{other:?}"),
    }
    assert_eq!(c.friends(Some(99), None).unwrap(), FetchOutcome::NotFound);
    assert_eq!(c.friends(Some(30), None).unwrap(), FetchOutcome::Private);
    let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
    let r = agent.get(format!("{}/friends?id=10", h.endpoint())).call().unwrap();
    assert_eq!(r.status().as_u16(), 401);
    let r = agent.post(format!("{}/login", h.endpoint())).send_form([("username", "u")]).unwrap();
    assert_eq!(r.status().as_u16(), 400);
    assert_eq!(agent.get(format!("{}/healthz", h.endpoint())).call().unwrap().status().as_u16(), 200);
    h.shutdown().unwrap();
}

#[test]
fn throttled_requests_carry_retry_after() {
    let world = Arc::new(SyntheticWorld::from_graph(SocialGraph::from_edges([], [(1, 2)]).unwrap(), &[]));
    let mut cfg = ServiceConfig::new(vec![Credential::new("u", "p", 1)]);
    cfg.rate_limit = 2.0;
    let h = service::spawn(world, cfg).unwrap();
    let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
    let login = agent.post(format!("{}/login", h.endpoint())).send_form([("username", "u"), ("password", "p")]).unwrap();
    let cookie = login.headers().get("set-cookie").unwrap().to_str().unwrap().split(';').next().unwrap().to_string();
    let mut codes = Vec::new();
    let mut retry = None;
    for _ in 0..4 {
        let r = agent.get(format!("{}/friends", h.endpoint())).header("Cookie", &cookie).call().unwrap();
        codes.push(r.status().as_u16());
        if r.status().as_u16() == 429 {
            retry = r.headers().get("retry-after").map(|v| v.to_str().unwrap().to_string());
        }
    }
    assert_eq!(&codes[..2], &[200, 200]);
    assert!(codes[2..].contains(&429));
    assert!(retry.unwrap().parse::<u64>().unwrap() >= 1);

    // the client waits out the throttle instead of failing
    let c = OsnClient::login(&h.endpoint(), "u", "p").unwrap();
    let t = Instant::now();
    for _ in 0..3 {
        assert!(matches!(c.friends(None, None).unwrap(), FetchOutcome::Friends(_)));
    }
    assert!(c.throttled() >= 1);
    assert!(t.elapsed() >= Duration::from_millis(900));
}

#[test]
fn bfs_matches_in_process_oracle() {
    let world = small_world(3);
    for cap in [usize::MAX, 7] {
        let h = serve(&world, cap, 0.0);
        let crawl = bfs_crawl(&bfs_cfg(&h, CrawlLimits::default())).unwrap();
        let got: Vec<(u64, Outcome)> = crawl.visits.iter().map(|v| (v.id, v.outcome)).collect();
        assert_eq!(got, oracle_bfs(&world, world.default_seed_user(), 3, cap));
        assert!(crawl.check().is_ok());
        assert_eq!(crawl.stop_reason, "exhausted");
        let s = crawl.stats();
        assert_eq!(s.dequeued, s.enqueued);
        if cap == 7 {
            assert!(crawl.visits.iter().all(|v| v.degree <= 7));
            assert!(s.truncated > 0);
        }
        // depth-limited: at most depths 0, 1, 2 visited
        assert!(crawl.visits.iter().all(|v| v.depth.unwrap() < 3));
    }
}

#[test]
fn bfs_budget_limits() {
    let world = small_world(4);
    let h = serve(&world, usize::MAX, 0.0);
    let limits = CrawlLimits { max_depth: None, max_duration: None, max_visited: Some(25) };
    let crawl = bfs_crawl(&bfs_cfg(&h, limits)).unwrap();
    assert_eq!(crawl.stats().visited, 25);
    assert_eq!(crawl.stop_reason, "max_visited");
    let limits = CrawlLimits { max_depth: None, max_duration: Some(Duration::from_millis(1)), max_visited: None };
    let crawl = bfs_crawl(&bfs_cfg(&h, limits)).unwrap();
    assert_eq!(crawl.stop_reason, "max_duration");
}

#[test]
fn bfs_resume_after_crash_equals_uninterrupted_run() {
    let world = small_world(5);
    let h = serve(&world, 20, 0.0);
    let full_dir = tempfile::tempdir().unwrap();
    let mut cfg = bfs_cfg(&h, CrawlLimits::default());
    cfg.out_dir = Some(full_dir.path().to_path_buf());
    let full = bfs_crawl(&cfg).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let mut partial = bfs_cfg(&h, CrawlLimits { max_visited: Some(40), ..CrawlLimits::default() });
    partial.out_dir = Some(dir.path().to_path_buf());
    bfs_crawl(&partial).unwrap();
    // simulate a crash in the middle of writing the next record
    let mut f = OpenOptions::new().append(true).open(dir.path().join(VISITS_FILE)).unwrap();
    f.write_all(b"123\tvisi").unwrap();
    drop(f);

    cfg.out_dir = Some(dir.path().to_path_buf());
    let resumed = bfs_crawl(&cfg).unwrap();
    assert_eq!(resumed.visits, full.visits);
    assert_eq!(resumed.observations, full.observations);
    assert_eq!(resumed.queue, full.queue);
    let reloaded = RawCrawl::load_strict(dir.path()).unwrap();
    assert_eq!(reloaded.visits, full.visits);
    assert_eq!(reloaded.observations, full.observations);
}

fn uni_cfg(h: &ServiceHandle, world: &SyntheticWorld, queues: usize, queue_len: usize) -> UniConfig {
    UniConfig {
        endpoint: h.endpoint(),
        username: "alice".into(),
        password: "pw".into(),
        id_space_bits: world.config().id_space_bits,
        queues,
        queue_len,
        rng_seed: 11,
        max_duration: None,
        out_dir: None,
    }
}

#[test]
fn uniform_outcomes_match_ground_truth() {
    let world = small_world(6);
    let h = serve(&world, usize::MAX, 0.0);
    let crawl = uniform_crawl(&uni_cfg(&h, &world, 4, 750)).unwrap();
    assert_eq!(crawl.visits.len(), 3000);
    let seed = world.default_seed_user();
    let g = world.graph();
    for v in &crawl.visits {
        let expected = match g.index_of(v.id) {
            None => Outcome::NotFound,
            Some(ix) if world.is_private_index(ix) && v.id != seed && !g.has_edge(v.id, seed) => Outcome::Private,
            Some(ix) => {
                assert_eq!(v.degree, g.degree(ix));
                Outcome::Visited
            }
        };
        assert_eq!(v.outcome, expected, "{}", v.id);
    }
    assert!(crawl.check().is_ok());
}

#[test]
fn uniform_resume_completes_the_same_queues() {
    let world = small_world(7);
    let h = serve(&world, usize::MAX, 0.0);
    let full = uniform_crawl(&uni_cfg(&h, &world, 3, 200)).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let mut cfg = uni_cfg(&h, &world, 3, 200);
    cfg.out_dir = Some(dir.path().to_path_buf());
    let done = uniform_crawl(&cfg).unwrap();
    // drop the last 100 committed records as if the process died earlier
    let text = std::fs::read_to_string(dir.path().join(VISITS_FILE)).unwrap();
    let keep: String = text.lines().take(500).map(|l| format!("{l}\n")).collect();
    std::fs::write(dir.path().join(VISITS_FILE), keep).unwrap();
    let resumed = uniform_crawl(&cfg).unwrap();

    let key = |c: &RawCrawl| {
        let mut v: Vec<(u32, u64, Outcome, usize)> = c.visits.iter().map(|v| (v.agent, v.id, v.outcome, v.degree)).collect();
        v.sort();
        v
    };
    assert_eq!(key(&resumed), key(&full));
    assert_eq!(key(&done), key(&full));
    assert_eq!(resumed.stats().attempts, 600);
}

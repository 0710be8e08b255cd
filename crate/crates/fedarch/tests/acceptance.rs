//! Acceptance run: one PASS or FAIL line per criterion, non-zero exit on any
//! failure. Runs without the libtest harness so every line is always printed.

mod support {
    pub mod http;
}

#[path = "../../core/tests/support/centralized.rs"]
mod centralized;
#[path = "../../core/tests/support/oracle.rs"]
mod oracle;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use axum::http::StatusCode;
use fedarch::api::{router, AppState};
use fedarch_core::catalog::canonical::{CONSTRAINTS, EFFECT_EDGES, MODEL_MEMBERS, PATTERN_CATEGORIES, RELATIONS};
use fedarch_core::catalog::{validate_catalog, DecisionModelId, RelationKind};
use fedarch_core::engine::{recommend, EngineError, RequirementProfile};
use fedarch_core::plugins::secure::{from_fixed, masked_fixed_sum, plain_fixed_sum, secure_sum, to_fixed};
use fedarch_core::plugins::{
    compressor, AsyncConfig, ClusterConfig, CoVersioningConfig, CompressorConfig, DataHandlerConfig, DecentralisedConfig,
    DeploymentConfig, EdgeAssignment, Grouping, HierarchicalConfig, IncentiveConfig, MultiTaskConfig, RegistryConfig,
    SecureConfig, SelectorConfig, Topology, TriggerConfig,
};
use fedarch_core::sim::data::{generate_data, Dataset};
use fedarch_core::sim::fedavg::Update;
use fedarch_core::sim::{model, Range, SampleSizes};
use fedarch_core::validator::HypothesisFile;
use fedarch_core::{run_simulation, simulate, PatternCatalog, SimConfig};
use oracle::{brute_force, random_profile, Rng};
use support::http::{get, json, post};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn unit(rng: &mut Rng) -> f64 {
    (rng.next() >> 11) as f64 / (1u64 << 53) as f64
}

fn uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit(rng)
}

fn fedarch(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fedarch")).args(args).env_remove("FEDARCH_CATALOG").output().expect("binary runs")
}

fn catalog_census() -> Outcome {
    let start = Instant::now();
    let catalog = PatternCatalog::canonical();
    ensure!(catalog.patterns.len() == 15, "{} patterns", catalog.patterns.len());
    let categories: BTreeSet<_> = catalog.patterns.iter().map(|p| p.category).collect();
    ensure!(categories.len() == 5, "{} categories", categories.len());
    for (id, category) in PATTERN_CATEGORIES {
        let p = catalog.pattern(id).ok_or(format!("missing pattern {id}"))?;
        ensure!(p.category == category, "{id} is in {:?}", p.category);
    }
    let violations = validate_catalog(&catalog);
    ensure!(violations.is_empty(), "violations: {violations:?}");
    for (model, members) in MODEL_MEMBERS {
        let m = catalog.decision_model(model).ok_or(format!("missing model {}", model.as_str()))?;
        ensure!(m.member_pattern_ids == members, "members of {}: {:?}", model.as_str(), m.member_pattern_ids);
    }
    for e in &EFFECT_EDGES {
        let m = catalog.decision_model(e.model).unwrap();
        let found = m
            .effects
            .iter()
            .any(|x| x.pattern_id == e.pattern && x.attribute_id == e.attribute && x.direction == e.direction);
        ensure!(found, "edge {} -> {} missing", e.pattern, e.attribute);
    }
    ensure!(catalog.edge_count() == EFFECT_EDGES.len(), "{} edges in catalog", catalog.edge_count());
    for r in &RELATIONS {
        let m = catalog.decision_model(r.model).unwrap();
        let found = m.relations.iter().any(|x| {
            x.kind == r.kind && x.from_pattern == r.from && x.to_pattern == r.to && x.scope_attribute.as_deref() == r.scope
        });
        ensure!(found, "relation {:?} {} -> {} missing", r.kind, r.from, r.to);
    }
    let relation_count: usize = catalog.decision_models.iter().map(|m| m.relations.len()).sum();
    ensure!(relation_count == RELATIONS.len(), "{relation_count} relations in catalog");
    for (pattern, key) in CONSTRAINTS {
        let found = catalog.decision_models.iter().flat_map(|m| &m.constraints).any(|c| c.pattern_id == pattern && c.key == key);
        ensure!(found, "constraint {pattern}/{key} missing");
    }
    let library = start.elapsed();
    let cli = Instant::now();
    let out = fedarch(&["catalog", "validate"]);
    ensure!(out.status.code() == Some(0), "catalog validate exited {:?}", out.status.code());
    let total = library + cli.elapsed();
    ensure!(total < Duration::from_secs(1), "took {total:?}");
    Ok(format!("15 patterns, {} edges, {} relations, {total:.0?}", EFFECT_EDGES.len(), RELATIONS.len()))
}

fn case_studies() -> Outcome {
    let expected: [(&str, &[&str]); 3] = [
        (
            "meta",
            &["secure_aggregator", "training_configurator", "heterogeneous_data_handler", "client_registry", "model_co_versioning_registry"],
        ),
        ("intel_openfl", &["multi_task_model_trainer", "secure_aggregator", "training_configurator", "deployment_selector"]),
        (
            "siemens_ifl",
            &[
                "multi_task_model_trainer",
                "client_registry",
                "training_configurator",
                "client_selector",
                "asynchronous_aggregator",
                "model_co_versioning_registry",
                "deployment_selector",
            ],
        ),
    ];
    for (id, patterns) in expected {
        let out = fedarch(&["case-study", id, "--json"]);
        let report: serde_json::Value =
            serde_json::from_slice(&out.stdout).map_err(|e| format!("{id}: unparsable output ({e})"))?;
        let got: Vec<&str> = report["pattern_ids"].as_array().ok_or("no pattern_ids")?.iter().filter_map(|v| v.as_str()).collect();
        ensure!(got == patterns, "{id}: {got:?}");
    }
    Ok("meta, intel_openfl, siemens_ifl".into())
}

fn oracle_equality() -> Outcome {
    let start = Instant::now();
    let catalog = PatternCatalog::canonical();
    let mut infeasible = 0;
    let n = 1200u64;
    for seed in 0..n {
        let profile = random_profile(&catalog, &mut Rng::new(seed));
        let expected = brute_force(&catalog, &profile);
        match recommend(&catalog, &profile) {
            Ok(rec) => {
                for m in &rec.models {
                    let o = expected[m.decision_model_id.as_str()].as_ref().ok_or(format!("seed {seed}: oracle infeasible"))?;
                    ensure!(m.best.chosen == o.chosen, "seed {seed}: {:?} vs {:?}", m.best.chosen, o.chosen);
                    ensure!(m.best.score == o.score, "seed {seed}: score {} vs {}", m.best.score, o.score);
                }
            }
            Err(EngineError::InfeasibleProfile { model, .. }) => {
                infeasible += 1;
                let first = DecisionModelId::ALL.into_iter().find(|id| expected[id.as_str()].is_none());
                ensure!(first == Some(model), "seed {seed}: engine infeasible in {}", model.as_str());
            }
            Err(e) => return Err(format!("seed {seed}: {e}")),
        }
    }
    let took = start.elapsed();
    ensure!(took < Duration::from_secs(30), "took {took:?}");
    Ok(format!("{n} profiles ({infeasible} infeasible), {took:.1?}"))
}

fn semantic_violation(catalog: &PatternCatalog, profile: &RequirementProfile) -> Option<String> {
    let rec = recommend(catalog, profile).ok()?;
    for m in &rec.models {
        let model = catalog.decision_model(m.decision_model_id).unwrap();
        for sel in &m.ranking {
            let has = |p: &str| sel.chosen.iter().any(|c| c == p);
            for r in &model.relations {
                if r.kind == RelationKind::Complements && has(&r.from_pattern) {
                    if !has(&r.to_pattern) {
                        return Some(format!("closure {:?}", sel.chosen));
                    }
                    for e in sel.combined_effects.iter().filter(|e| e.pattern_id == r.to_pattern) {
                        let contradicted = model.effects.iter().any(|o| {
                            o.pattern_id == r.from_pattern && o.attribute_id == e.attribute_id && o.direction != e.direction
                        });
                        if contradicted {
                            return Some(format!("override {:?} {}", sel.chosen, e.attribute_id));
                        }
                    }
                }
                if r.is_exclusive_alternative() && has(&r.from_pattern) && has(&r.to_pattern) {
                    return Some(format!("exclusivity {:?}", sel.chosen));
                }
            }
            for c in catalog.decision_models.iter().flat_map(|d| &d.constraints) {
                if has(&c.pattern_id) && !profile.context_flags.contains(&c.key) {
                    return Some(format!("constraint {:?}", sel.chosen));
                }
            }
        }
    }
    None
}

fn scaling_violation(catalog: &PatternCatalog, profile: &RequirementProfile, c: f64) -> Option<String> {
    let mut scaled = profile.clone();
    scaled.weights.values_mut().for_each(|w| *w *= c);
    match (recommend(catalog, profile), recommend(catalog, &scaled)) {
        (Ok(a), Ok(b)) => {
            for (ma, mb) in a.models.iter().zip(&b.models) {
                if ma.ranking.len() != mb.ranking.len() {
                    return Some("ranking length changed".into());
                }
                for (sa, sb) in ma.ranking.iter().zip(&mb.ranking) {
                    if sa.chosen != sb.chosen || sa.score * c != sb.score {
                        return Some(format!("scaling by {c}: {:?} vs {:?}", sa.chosen, sb.chosen));
                    }
                }
            }
            None
        }
        (Err(a), Err(b)) if a == b => None,
        (a, b) => Some(format!("scaling by {c} changed feasibility: {} vs {}", a.is_ok(), b.is_ok())),
    }
}

fn semantics() -> Outcome {
    let catalog = PatternCatalog::canonical();
    let cases = 10_000u64;
    let mut violations = Vec::new();
    for seed in 0..cases {
        let mut rng = Rng::new(seed.wrapping_mul(0x9E37_79B9) ^ 0xACCE);
        let profile = random_profile(&catalog, &mut rng);
        // multiples of 1/4 keep scaled weights exact
        let c = (1 + rng.below(400)) as f64 / 4.0;
        if let Some(v) = semantic_violation(&catalog, &profile).or_else(|| scaling_violation(&catalog, &profile, c)) {
            violations.push(format!("seed {seed}: {v}"));
        }
    }
    ensure!(violations.is_empty(), "{} violations, first: {}", violations.len(), violations[0]);
    Ok(format!("{cases} cases, 0 violations"))
}

fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().chain(b).fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        0.0
    } else {
        centralized::max_abs_diff(a, b) / scale
    }
}

fn fedavg_equivalence() -> Outcome {
    let mut cfg = SimConfig::baseline(501);
    cfg.n_clients = 8;
    cfg.samples_per_client = SampleSizes::Fixed(150);
    cfg.label_skew_beta = 0.5;
    let pooled = centralized::pool(generate_data(&cfg).clients.iter().map(|c| &c.train[0]));
    let mut worst = 0.0f64;
    let mut w = vec![0.0; model::dim(cfg.n_classes, cfg.n_features)];
    for round in 1..=50 {
        cfg.rounds = round;
        let out = simulate(&cfg, false).map_err(|e| e.to_string())?;
        let g = centralized::mean_gradient(&w, cfg.n_classes, &pooled);
        w.iter_mut().zip(&g).for_each(|(w, g)| *w -= cfg.learning_rate * g);
        let err = relative_error(&out.global_model, &w);
        ensure!(err < 1e-9, "round {round}: relative error {err:e}");
        worst = worst.max(err);
    }
    Ok(format!("50 rounds, worst relative error {worst:.1e}"))
}

fn gradient_check() -> Outcome {
    let mut rng = Rng::new(0x6AD);
    let mut worst = 0.0f64;
    for instance in 0..100 {
        let classes = 2 + rng.below(4) as usize;
        let features = 1 + rng.below(6) as usize;
        let n = 1 + rng.below(12) as usize;
        let data = Dataset {
            n_features: features,
            features: (0..n * features).map(|_| uniform(&mut rng, -3.0, 3.0)).collect(),
            labels: (0..n).map(|_| rng.below(classes as u64) as usize).collect(),
        };
        let w: Vec<f64> = (0..model::dim(classes, features)).map(|_| uniform(&mut rng, -2.0, 2.0)).collect();
        let analytic = model::gradient(&w, classes, &data);
        let h = 1e-5;
        let numeric: Vec<f64> = (0..w.len())
            .map(|i| {
                let mut plus = w.clone();
                let mut minus = w.clone();
                plus[i] += h;
                minus[i] -= h;
                (centralized::mean_loss(&plus, classes, &data) - centralized::mean_loss(&minus, classes, &data)) / (2.0 * h)
            })
            .collect();
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = norm(&analytic).max(norm(&numeric));
        let err = if scale == 0.0 { diff } else { diff / scale };
        ensure!(err < 1e-5, "instance {instance}: relative error {err:e}");
        worst = worst.max(err);
    }
    Ok(format!("100 instances, worst relative error {worst:.1e}"))
}

fn mask_cancellation() -> Outcome {
    let mut rng = Rng::new(0x3A5C);
    for k in [2usize, 3, 10, 50] {
        for d in [1usize, 10, 10_000] {
            let seed = rng.next();
            let updates: Vec<Update> = (0..k)
                .map(|i| Update {
                    client_id: i * 3 + 1,
                    weights: (0..d).map(|_| uniform(&mut rng, -4.0, 4.0)).collect(),
                    n_samples: 1 + rng.below(300) as usize,
                })
                .collect();
            let fixed: Vec<(u64, Vec<i64>)> = updates
                .iter()
                .map(|u| (u.client_id as u64, u.weights.iter().map(|w| to_fixed(u.n_samples as f64 * w)).collect()))
                .collect();
            let plain = plain_fixed_sum(&fixed);
            let masked = masked_fixed_sum(&fixed, seed, 7).map_err(|e| e.to_string())?;
            ensure!(masked == plain, "K={k} d={d}: masked fixed sum differs");
            let total: usize = updates.iter().map(|u| u.n_samples).sum();
            let expected: Vec<f64> = plain.iter().map(|v| from_fixed(*v) / total as f64).collect();
            let secure = secure_sum(&updates, true, 0.0, seed, 7).map_err(|e| e.to_string())?;
            ensure!(secure == expected, "K={k} d={d}: secure_sum differs from the plain fixed-point sum");
        }
    }
    Ok("K in {2,3,10,50} x d in {1,10,10000}".into())
}

fn compressor_bound() -> Outcome {
    let mut rng = Rng::new(0xC0DE);
    let mut checked = 0;
    for bits in 2u8..=16 {
        for _ in 0..10_000 {
            let d = 1 + rng.below(96) as usize;
            let spread = uniform(&mut rng, 1e-3, 50.0);
            let v: Vec<f64> = (0..d).map(|_| uniform(&mut rng, -spread, spread)).collect();
            let c = compressor::compress(&v, bits);
            let back = compressor::decompress(&c);
            let half = c.step() / 2.0;
            let tolerance = half + 1e-12 * spread;
            let err = v.iter().zip(&back).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            ensure!(err <= tolerance, "bits {bits}, d {d}: error {err:e} above half-step {half:e}");
            let wire = c.to_bytes();
            let formula = compressor::payload_bytes(d, bits);
            ensure!(wire.len() as u64 == formula && c.size_bytes() == formula, "bits {bits}, d {d}: size {} vs {formula}", wire.len());
            ensure!(compressor::Compressed::from_bytes(&wire).as_ref() == Some(&c), "bits {bits}: wire round trip");
            checked += 1;
        }
    }
    Ok(format!("{checked} vectors over bits 2..=16"))
}

fn plugin_configs() -> Vec<SimConfig> {
    let mut configs = Vec::new();

    let mut a = SimConfig::baseline(601);
    a.n_clients = 12;
    a.rounds = 12;
    a.network.bandwidth = Range { min: 2e5, max: 2e6 };
    a.network.device_speed = Range { min: 200.0, max: 2000.0 };
    a.dropout_prob = Range { min: 0.0, max: 0.4 };
    a.faults.label_drift_round = Some(6);
    a.target_accuracy = Some(0.5);
    let t = &mut a.pattern_toggles;
    t.client_registry = Some(RegistryConfig { hash_chained: true });
    t.client_selector = Some(SelectorConfig { min_speed: 300.0, min_bandwidth: 0.0, top_k: 6 });
    t.message_compressor = Some(CompressorConfig { bits: 6 });
    t.model_co_versioning_registry = Some(CoVersioningConfig { hash_chained: true });
    t.model_replacement_trigger = Some(TriggerConfig { window: 3, drop_threshold: 0.05 });
    t.deployment_selector = Some(DeploymentConfig { capability_threshold: 0.5, light_bits: 4 });
    t.incentive_registry = Some(IncentiveConfig { reward_per_update: 1.0, p_gain: 0.3, p_base: None });
    configs.push(a);

    let mut b = SimConfig::baseline(602);
    b.label_skew_beta = 0.1;
    b.n_data_groups = Some(3);
    let t = &mut b.pattern_toggles;
    t.client_registry = Some(RegistryConfig::default());
    t.client_cluster = Some(ClusterConfig { n_groups: 3, grouping: Grouping::ByLabelDistribution });
    t.heterogeneous_data_handler = Some(DataHandlerConfig { oversample_to_balance: true });
    t.multi_task_model_trainer = Some(MultiTaskConfig { n_tasks: 2, shared_dims: 4 });
    configs.push(b);

    let mut c = SimConfig::baseline(603);
    c.network.device_speed = Range { min: 100.0, max: 3000.0 };
    c.pattern_toggles.asynchronous_aggregator = Some(AsyncConfig { alpha: 0.5, max_staleness: 10 });
    configs.push(c);

    let mut d = SimConfig::baseline(604);
    d.faults.server_crash_round = Some(4);
    d.pattern_toggles.decentralised_aggregator = Some(DecentralisedConfig { topology: Topology::RandomK { k: 3 } });
    d.pattern_toggles.message_compressor = Some(CompressorConfig { bits: 8 });
    configs.push(d);

    let mut e = SimConfig::baseline(605);
    e.pattern_toggles.hierarchical_aggregator = Some(HierarchicalConfig { n_edges: 3, assignment: EdgeAssignment::RoundRobin });
    e.pattern_toggles.secure_aggregator = Some(SecureConfig { masking: true, dp_sigma: 0.1 });
    configs.push(e);

    for h in HypothesisFile::canonical().hypotheses {
        let (on, off) = h.arms(h.seed_list()[0]).expect("hypothesis arms build");
        configs.push(on);
        configs.push(off);
    }
    configs
}

fn determinism() -> Outcome {
    let configs = plugin_configs();
    for (i, cfg) in configs.iter().enumerate() {
        let a = simulate(cfg, true).map_err(|e| format!("config {i}: {e}"))?;
        let b = simulate(cfg, true).map_err(|e| format!("config {i}: {e}"))?;
        ensure!(a.metrics == b.metrics, "config {i}: metrics differ");
        ensure!(a.metrics.to_json_string() == b.metrics.to_json_string(), "config {i}: serialized metrics differ");
        ensure!(a.metrics.event_log_digest == b.metrics.event_log_digest, "config {i}: digests differ");
        ensure!(a.events == b.events, "config {i}: event logs differ");
        ensure!(a.global_model.iter().map(|w| w.to_bits()).eq(b.global_model.iter().map(|w| w.to_bits())), "config {i}: models differ");
    }
    Ok(format!("{} configs covering all 14 plug-ins and every hypothesis arm", configs.len()))
}

fn validate_all() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("report.json");
    let start = Instant::now();
    let out = fedarch(&["validate-all", "--report", path.to_str().unwrap()]);
    let took = start.elapsed();
    ensure!(out.status.code() == Some(0), "exit {:?}\n{}", out.status.code(), String::from_utf8_lossy(&out.stdout));
    ensure!(took < Duration::from_secs(600), "took {took:?}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure!(report["all_passed"] == true, "all_passed is {}", report["all_passed"]);
    let hypotheses = report["hypotheses"].as_array().ok_or("no hypotheses")?;
    ensure!(hypotheses.len() == 10, "{} hypotheses", hypotheses.len());
    for h in hypotheses {
        ensure!(h["passed"] == true && h["seeds"].as_array().map_or(0, |s| s.len()) >= 10, "{} did not pass on 10 seeds", h["id"]);
    }
    let edges = report["edges"].as_array().ok_or("no edges")?;
    let mut seen = BTreeSet::new();
    for e in edges {
        let key = (e["pattern_id"].as_str().unwrap_or("").to_string(), e["attribute_id"].as_str().unwrap_or("").to_string());
        ensure!(seen.insert(key.clone()), "edge {key:?} listed twice");
        let status = e["status"].as_str().unwrap_or("");
        ensure!(matches!(status, "validated_pass" | "catalog_only"), "edge {key:?} has status {status}");
    }
    for spec in &EFFECT_EDGES {
        ensure!(seen.contains(&(spec.pattern.to_string(), spec.attribute.to_string())), "edge {} -> {} not covered", spec.pattern, spec.attribute);
    }
    ensure!(seen.len() == EFFECT_EDGES.len(), "{} edges in report", seen.len());
    let s = &report["summary"];
    ensure!(
        s["validated_pass"].as_u64().unwrap_or(0) + s["catalog_only"].as_u64().unwrap_or(0) == 58,
        "summary {s}"
    );
    Ok(format!(
        "10/10 hypotheses, {} validated + {} catalog-only edges, {took:.1?}",
        s["validated_pass"], s["catalog_only"]
    ))
}

fn random_sim_config(rng: &mut Rng) -> SimConfig {
    let mut cfg = SimConfig::baseline(rng.next());
    cfg.n_clients = 2 + rng.below(10) as usize;
    cfg.rounds = rng.below(8) as usize;
    cfg.samples_per_client = SampleSizes::Fixed(20 + rng.below(80) as usize);
    cfg.label_skew_beta = [0.1, 1.0, 10.0][rng.below(3) as usize];
    cfg.test_samples = 200;
    cfg.client_test_samples = 40;
    let t = &mut cfg.pattern_toggles;
    if rng.chance(30) {
        t.message_compressor = Some(CompressorConfig { bits: 1 + rng.below(16) as u8 });
    }
    if rng.chance(20) {
        t.decentralised_aggregator = Some(DecentralisedConfig { topology: Topology::Ring });
    }
    if rng.chance(20) {
        t.hierarchical_aggregator = Some(HierarchicalConfig { n_edges: 1 + rng.below(3) as usize, assignment: EdgeAssignment::RoundRobin });
    }
    if rng.chance(20) {
        t.secure_aggregator = Some(SecureConfig { masking: true, dp_sigma: 0.0 });
    }
    if rng.chance(20) {
        t.client_registry = Some(RegistryConfig::default());
        t.client_selector = Some(SelectorConfig { min_speed: 0.0, min_bandwidth: 0.0, top_k: 1 + rng.below(4) as usize });
    }
    cfg
}

async fn finished(app: &axum::Router, uri: &str) -> (StatusCode, Vec<u8>) {
    loop {
        let (status, body) = get(app, uri).await;
        if status != StatusCode::CONFLICT || json(&body)["code"] != "RunNotFinished" {
            return (status, body);
        }
        tokio::time::sleep(Duration::from_millis(5)).await;
    }
}

async fn parity_requests(catalog: PatternCatalog) -> Outcome {
    let app = router(AppState::new(catalog.clone()));
    let mut rng = Rng::new(0x5E41);
    let (mut ok, mut errors) = (0, 0);
    for i in 0..100 {
        if i % 2 == 0 {
            let profile = random_profile(&catalog, &mut rng);
            let (status, body) = post(&app, "/v1/recommend", serde_json::to_vec(&profile).unwrap()).await;
            match recommend(&catalog, &profile) {
                Ok(rec) => {
                    ensure!(status == StatusCode::OK, "request {i}: status {status}");
                    ensure!(body == serde_json::to_vec(&rec).unwrap(), "request {i}: recommendation bytes differ");
                    ok += 1;
                }
                Err(e) => {
                    ensure!(json(&body)["code"] == e.code(), "request {i}: error {} vs {}", json(&body)["code"], e.code());
                    errors += 1;
                }
            }
        } else {
            let cfg = random_sim_config(&mut rng);
            let (status, body) = post(&app, "/v1/simulations", serde_json::to_vec(&cfg).unwrap()).await;
            match run_simulation(&cfg) {
                Ok(metrics) => {
                    ensure!(status == StatusCode::ACCEPTED, "request {i}: status {status}");
                    let id = json(&body)["run_id"].as_str().ok_or("no run id")?.to_string();
                    let (status, body) = finished(&app, &format!("/v1/simulations/{id}/metrics")).await;
                    ensure!(status == StatusCode::OK, "request {i}: metrics status {status}");
                    ensure!(body == serde_json::to_vec(&metrics).unwrap(), "request {i}: metrics bytes differ");
                    ok += 1;
                }
                Err(e) => {
                    let code = if status == StatusCode::ACCEPTED {
                        let id = json(&body)["run_id"].as_str().ok_or("no run id")?.to_string();
                        json(&finished(&app, &format!("/v1/simulations/{id}/metrics")).await.1)["code"].clone()
                    } else {
                        json(&body)["code"].clone()
                    };
                    ensure!(code == e.code(), "request {i}: error {code} vs {}", e.code());
                    errors += 1;
                }
            }
        }
    }
    Ok(format!("100 requests, {ok} byte-equal results, {errors} matching errors"))
}

fn parity() -> Outcome {
    let runtime = tokio::runtime::Builder::new_multi_thread().worker_threads(4).enable_all().build().map_err(|e| e.to_string())?;
    runtime.block_on(parity_requests(PatternCatalog::canonical()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("catalog census", catalog_census),
        ("case-study reproduction", case_studies),
        ("engine/oracle equality", oracle_equality),
        ("selection semantics", semantics),
        ("FedAvg/centralized equivalence", fedavg_equivalence),
        ("gradient check", gradient_check),
        ("mask cancellation", mask_cancellation),
        ("compressor bound", compressor_bound),
        ("determinism", determinism),
        ("tradeoff validation", validate_all),
        ("service/library parity", parity),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic.downcast_ref::<String>().cloned().or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} [{:.1?}]", start.elapsed()),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why} [{:.1?}]", start.elapsed());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

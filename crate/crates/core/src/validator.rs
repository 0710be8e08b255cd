//! Decision-model edges as A/B experiments.
//!
//! A [`Hypothesis`] runs a scenario twice per seed, once with one plug-in
//! toggled on, and compares medians of named metrics. Each check names the
//! catalog edge it supports; the [`ValidationReport`] then accounts for every
//! edge of the catalog, validated or not.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::catalog::{CaseStudyId, DecisionModelId, Direction, PatternCatalog};
use crate::engine::{check_case_study, ConsistencyReport};
use crate::math;
use crate::plugins::PLUGIN_PATTERNS;
use crate::sim::{run_simulation, SimConfig, SimError, SimMetrics};

/// Bundled hypothesis suite H1 to H10.
pub const CANONICAL_HYPOTHESES_JSON: &str = include_str!("../data/hypotheses.json");

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ValidatorError {
    #[error("hypothesis file: {0}")]
    Parse(String),
    #[error("hypothesis {id}: {message}")]
    Invalid { id: String, message: String },
}

impl ValidatorError {
    pub fn code(&self) -> &'static str {
        match self {
            ValidatorError::Parse(_) => "parse_error",
            ValidatorError::Invalid { .. } => "invalid_hypothesis",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    FinalAccuracy,
    BytesUplink,
    BytesDownlink,
    TotalBytes,
    CentralUplinkBytes,
    CentralDownlinkBytes,
    UplinkMessages,
    SimulatedWallTime,
    RoundsToTarget,
    TimeToTarget,
    UplinkMessagesToTarget,
    AccuracyVarianceAcrossClients,
    MeanParticipation,
    AccuracyGainAfterCrash,
    MeanOnDeviceAccuracy,
    /// Mean per-client accuracy over the clients the ON arm's selector left
    /// out, measured in each arm.
    ExcludedClientAccuracy,
}

impl Metric {
    /// Value in `metrics`; `on` is the ON arm of the same seed. Targets never
    /// reached count as infinite.
    pub fn value(self, metrics: &SimMetrics, on: &SimMetrics) -> f64 {
        let t = &metrics.traffic;
        match self {
            Metric::FinalAccuracy => metrics.final_accuracy,
            Metric::BytesUplink => t.bytes_uplink as f64,
            Metric::BytesDownlink => t.bytes_downlink as f64,
            Metric::TotalBytes => t.total_bytes() as f64,
            Metric::CentralUplinkBytes => t.central_uplink_bytes as f64,
            Metric::CentralDownlinkBytes => t.central_downlink_bytes as f64,
            Metric::UplinkMessages => t.uplink_messages as f64,
            Metric::SimulatedWallTime => metrics.simulated_wall_time,
            Metric::RoundsToTarget => metrics.rounds_to_target.map_or(f64::INFINITY, |r| r as f64),
            Metric::TimeToTarget => metrics.time_to_target.unwrap_or(f64::INFINITY),
            Metric::UplinkMessagesToTarget => metrics.uplink_messages_to_target.map_or(f64::INFINITY, |m| m as f64),
            Metric::AccuracyVarianceAcrossClients => metrics.accuracy_variance_across_clients,
            Metric::MeanParticipation => metrics.mean_participation,
            Metric::AccuracyGainAfterCrash => metrics.accuracy_gain_after_crash.unwrap_or(0.0),
            Metric::MeanOnDeviceAccuracy => metrics.deployment.mean_on_device_accuracy,
            Metric::ExcludedClientAccuracy => {
                let selected = on.selected_clients.as_deref().unwrap_or(&[]);
                let excluded: Vec<f64> = (0..metrics.per_client_accuracy.len())
                    .filter(|k| !selected.contains(k))
                    .map(|k| metrics.per_client_accuracy[k])
                    .collect();
                if excluded.is_empty() {
                    f64::NAN
                } else {
                    excluded.iter().sum::<f64>() / excluded.len() as f64
                }
            }
        }
    }

    fn name(self) -> String {
        serde_json::to_value(self).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
    }
}

/// How the ON median must relate to the OFF median.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparator {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparator {
    pub fn holds(self, on: f64, off: f64) -> bool {
        match self {
            Comparator::Lt => on < off,
            Comparator::Le => on <= off,
            Comparator::Gt => on > off,
            Comparator::Ge => on >= off,
        }
    }

    /// Distance from failing, positive in the required direction.
    pub fn margin(self, on: f64, off: f64) -> f64 {
        match self {
            Comparator::Lt | Comparator::Le => off - on,
            Comparator::Gt | Comparator::Ge => on - off,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRef {
    pub pattern_id: String,
    pub attribute_id: String,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub metric: Metric,
    pub comparator: Comparator,
    pub edge_ref: EdgeRef,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Median,
}

fn ten() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hypothesis {
    pub id: String,
    pub title: String,
    /// Plug-in under test.
    pub toggle: String,
    /// Its parameter block in the ON arm.
    pub toggle_params: serde_json::Value,
    /// The OFF arm; its `seed` is the first of `seeds` consecutive seeds.
    pub scenario: SimConfig,
    pub checks: Vec<Check>,
    #[serde(default = "ten")]
    pub seeds: usize,
    #[serde(default)]
    pub aggregation: Aggregation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisFile {
    pub schema_version: u32,
    pub hypotheses: Vec<Hypothesis>,
}

impl HypothesisFile {
    pub fn from_json_str(text: &str) -> Result<Self, ValidatorError> {
        serde_json::from_str(text).map_err(|e| ValidatorError::Parse(format!("{e}")))
    }

    pub fn canonical() -> Self {
        Self::from_json_str(CANONICAL_HYPOTHESES_JSON).expect("bundled hypotheses parse")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("hypotheses serialize")
    }
}

impl Hypothesis {
    fn invalid(&self, message: impl Into<String>) -> ValidatorError {
        ValidatorError::Invalid { id: self.id.clone(), message: message.into() }
    }

    /// Edge references, toggle and seed count.
    pub fn check(&self, catalog: &PatternCatalog) -> Result<(), ValidatorError> {
        if !PLUGIN_PATTERNS.contains(&self.toggle.as_str()) {
            return Err(self.invalid(format!("`{}` has no simulator plug-in", self.toggle)));
        }
        if self.scenario.pattern_toggles.is_on(&self.toggle) {
            return Err(self.invalid("the toggle is already on in the OFF arm"));
        }
        if self.seeds < 3 {
            return Err(self.invalid("at least three seeds are required"));
        }
        if self.checks.is_empty() {
            return Err(self.invalid("no checks"));
        }
        for c in &self.checks {
            let e = &c.edge_ref;
            match catalog.effect(&e.pattern_id, &e.attribute_id) {
                Some(effect) if effect.direction == e.direction => {}
                _ => {
                    return Err(self.invalid(format!(
                        "edge ({}, {}, {}) is not in the catalog",
                        e.pattern_id,
                        e.attribute_id,
                        e.direction.symbol()
                    )))
                }
            }
        }
        Ok(())
    }

    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|i| self.scenario.seed.wrapping_add(i)).collect()
    }

    /// `(on, off)` configs for `seed`; they differ only in the toggle block.
    pub fn arms(&self, seed: u64) -> Result<(SimConfig, SimConfig), SimError> {
        let mut off = self.scenario.clone();
        off.seed = seed;
        let mut toggles = serde_json::to_value(&off.pattern_toggles).map_err(|e| SimError::Config(format!("{e}")))?;
        toggles
            .as_object_mut()
            .ok_or_else(|| SimError::Config("pattern_toggles must be an object".into()))?
            .insert(self.toggle.clone(), self.toggle_params.clone());
        let mut on = off.clone();
        on.pattern_toggles = serde_json::from_value(toggles).map_err(|e| SimError::Config(format!("{e}")))?;
        let mut stripped = on.clone();
        stripped.pattern_toggles.remove(&self.toggle)?;
        debug_assert_eq!(stripped, off, "arms differ beyond the toggle");
        Ok((on, off))
    }
}

/// Both arms of every seed.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedMetrics {
    pub seeds: Vec<u64>,
    pub on: Vec<SimMetrics>,
    pub off: Vec<SimMetrics>,
}

pub fn run_ab_experiment(hypothesis: &Hypothesis) -> Result<PairedMetrics, SimError> {
    let seeds = hypothesis.seed_list();
    let mut on = Vec::with_capacity(seeds.len());
    let mut off = Vec::with_capacity(seeds.len());
    for &seed in &seeds {
        let (on_cfg, off_cfg) = hypothesis.arms(seed)?;
        on.push(run_simulation(&on_cfg)?);
        off.push(run_simulation(&off_cfg)?);
    }
    Ok(PairedMetrics { seeds, on, off })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub metric: Metric,
    pub comparator: Comparator,
    pub edge_ref: EdgeRef,
    pub on_values: Vec<f64>,
    pub off_values: Vec<f64>,
    pub on_median: f64,
    pub off_median: f64,
    pub margin: f64,
    pub passed: bool,
}

/// Median comparison; equal medians fail a strict comparator.
pub fn compare_medians(on: &[f64], off: &[f64], comparator: Comparator) -> (f64, f64, f64, bool) {
    let (m_on, m_off) = (math::median(on), math::median(off));
    let passed = comparator.holds(m_on, m_off);
    (m_on, m_off, comparator.margin(m_on, m_off), passed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisResult {
    pub id: String,
    pub title: String,
    pub toggle: String,
    pub seeds: Vec<u64>,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
    /// Why the experiment could not run.
    pub error: Option<String>,
    /// Wall-clock time, filled in by callers that have a clock.
    pub runtime_ms: Option<u64>,
}

pub fn evaluate_hypothesis(paired: &PairedMetrics, hypothesis: &Hypothesis) -> HypothesisResult {
    let checks: Vec<CheckResult> = hypothesis
        .checks
        .iter()
        .map(|c| {
            let on_values: Vec<f64> = paired.on.iter().map(|m| c.metric.value(m, m)).collect();
            let off_values: Vec<f64> = paired.off.iter().zip(&paired.on).map(|(m, on)| c.metric.value(m, on)).collect();
            let (on_median, off_median, margin, passed) = compare_medians(&on_values, &off_values, c.comparator);
            CheckResult {
                metric: c.metric,
                comparator: c.comparator,
                edge_ref: c.edge_ref.clone(),
                on_values,
                off_values,
                on_median,
                off_median,
                margin,
                passed,
            }
        })
        .collect();
    HypothesisResult {
        id: hypothesis.id.clone(),
        title: hypothesis.title.clone(),
        toggle: hypothesis.toggle.clone(),
        seeds: paired.seeds.clone(),
        passed: checks.iter().all(|c| c.passed),
        checks,
        error: None,
        runtime_ms: None,
    }
}

/// Checks, runs and evaluates one hypothesis; failures become a failed result.
pub fn run_hypothesis(catalog: &PatternCatalog, hypothesis: &Hypothesis) -> HypothesisResult {
    let outcome = hypothesis
        .check(catalog)
        .map_err(|e| e.to_string())
        .and_then(|()| run_ab_experiment(hypothesis).map_err(|e| e.to_string()));
    match outcome {
        Ok(paired) => evaluate_hypothesis(&paired, hypothesis),
        Err(error) => HypothesisResult {
            id: hypothesis.id.clone(),
            title: hypothesis.title.clone(),
            toggle: hypothesis.toggle.clone(),
            seeds: hypothesis.seed_list(),
            checks: Vec::new(),
            passed: false,
            error: Some(error),
            runtime_ms: None,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeStatus {
    ValidatedPass,
    ValidatedFail,
    CatalogOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeCoverage {
    pub decision_model_id: DecisionModelId,
    pub pattern_id: String,
    pub attribute_id: String,
    pub direction: Direction,
    pub status: EdgeStatus,
    pub hypotheses: Vec<String>,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub total_edges: usize,
    pub validated_pass: usize,
    pub validated_fail: usize,
    pub catalog_only: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub catalog_version: u32,
    pub hypotheses: Vec<HypothesisResult>,
    pub edges: Vec<EdgeCoverage>,
    pub summary: CoverageSummary,
    pub case_studies: Vec<ConsistencyReport>,
    pub all_passed: bool,
}

fn catalog_only_reason(pattern_id: &str, attribute_id: &str) -> String {
    match (pattern_id, attribute_id) {
        ("incentive_registry", "security") => "needs adversarial clients, which the simulator does not model".into(),
        ("training_configurator", _) => "realized by the configuration surface rather than a simulator plug-in".into(),
        (_, "data_privacy" | "security" | "accountability" | "traceability") => {
            "no privacy or governance metric exists in the simulator".into()
        }
        _ => "no hypothesis in this suite measures the edge".into(),
    }
}

/// Maps every catalog edge to the hypotheses that measured it.
pub fn assemble_report(catalog: &PatternCatalog, mut results: Vec<HypothesisResult>) -> ValidationReport {
    results.sort_by(|a, b| natural_key(&a.id).cmp(&natural_key(&b.id)));
    let mut by_edge: BTreeMap<(String, String), Vec<(String, bool)>> = BTreeMap::new();
    for r in &results {
        for c in &r.checks {
            by_edge
                .entry((c.edge_ref.pattern_id.clone(), c.edge_ref.attribute_id.clone()))
                .or_default()
                .push((r.id.clone(), c.passed && r.error.is_none()));
        }
    }
    let mut edges = Vec::new();
    for model in &catalog.decision_models {
        for e in model.sorted_effects() {
            let key = (e.pattern_id.clone(), e.attribute_id.clone());
            let (status, hypotheses, reason) = match by_edge.get(&key) {
                Some(list) => {
                    let mut ids: Vec<String> = list.iter().map(|(id, _)| id.clone()).collect();
                    ids.dedup();
                    let status =
                        if list.iter().all(|(_, ok)| *ok) { EdgeStatus::ValidatedPass } else { EdgeStatus::ValidatedFail };
                    (status, ids, None)
                }
                None => (EdgeStatus::CatalogOnly, Vec::new(), Some(catalog_only_reason(&e.pattern_id, &e.attribute_id))),
            };
            edges.push(EdgeCoverage {
                decision_model_id: model.id,
                pattern_id: e.pattern_id,
                attribute_id: e.attribute_id,
                direction: e.direction,
                status,
                hypotheses,
                reason,
            });
        }
    }
    let count = |s: EdgeStatus| edges.iter().filter(|e| e.status == s).count();
    let summary = CoverageSummary {
        total_edges: edges.len(),
        validated_pass: count(EdgeStatus::ValidatedPass),
        validated_fail: count(EdgeStatus::ValidatedFail),
        catalog_only: count(EdgeStatus::CatalogOnly),
    };
    let case_studies: Vec<ConsistencyReport> =
        CaseStudyId::ALL.iter().filter_map(|id| check_case_study(catalog, *id).ok()).collect();
    ValidationReport {
        catalog_version: catalog.schema_version,
        all_passed: results.iter().all(|r| r.passed),
        hypotheses: results,
        edges,
        summary,
        case_studies,
    }
}

fn natural_key(id: &str) -> (String, u64) {
    let digits = id.trim_start_matches(|c: char| !c.is_ascii_digit());
    let prefix = &id[..id.len() - digits.len()];
    (prefix.to_string(), digits.parse().unwrap_or(u64::MAX))
}

/// Runs every hypothesis in order and assembles the report.
pub fn validate_all(catalog: &PatternCatalog, file: &HypothesisFile) -> ValidationReport {
    let results = file.hypotheses.iter().map(|h| run_hypothesis(catalog, h)).collect();
    assemble_report(catalog, results)
}

fn fmt_value(v: f64) -> String {
    if v.is_infinite() {
        "never".into()
    } else if v != 0.0 && (math::abs(v) >= 1e5 || math::abs(v) < 1e-3) {
        format!("{v:.3e}")
    } else {
        format!("{v:.4}")
    }
}

impl ValidationReport {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn render_markdown(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# Tradeoff validation report\n");
        let _ = writeln!(out, "Catalog schema version {}.\n", self.catalog_version);
        let _ = writeln!(out, "## Hypotheses\n");
        let _ = writeln!(out, "| Id | Toggle | Metric | ON median | OFF median | Check | Margin | Result |");
        let _ = writeln!(out, "|---|---|---|---|---|---|---|---|");
        for h in &self.hypotheses {
            if let Some(err) = &h.error {
                let _ = writeln!(out, "| {} | {} | - | - | - | - | - | error: {} |", h.id, h.toggle, err);
                continue;
            }
            for c in &h.checks {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} | ON {} OFF | {} | {} |",
                    h.id,
                    h.toggle,
                    c.metric.name(),
                    fmt_value(c.on_median),
                    fmt_value(c.off_median),
                    c.comparator.symbol(),
                    fmt_value(c.margin),
                    if c.passed { "pass" } else { "FAIL" }
                );
            }
        }
        let s = &self.summary;
        let _ = writeln!(out, "\n## Edge coverage\n");
        let _ = writeln!(
            out,
            "{} edges: {} validated (pass), {} validated (fail), {} catalog-only.\n",
            s.total_edges, s.validated_pass, s.validated_fail, s.catalog_only
        );
        let _ = writeln!(out, "| Model | Pattern | Attribute | Dir | Status | Evidence |");
        let _ = writeln!(out, "|---|---|---|---|---|---|");
        for e in &self.edges {
            let status = match e.status {
                EdgeStatus::ValidatedPass => "validated-pass",
                EdgeStatus::ValidatedFail => "validated-fail",
                EdgeStatus::CatalogOnly => "catalog-only",
            };
            let evidence = if e.hypotheses.is_empty() { e.reason.clone().unwrap_or_default() } else { e.hypotheses.join(", ") };
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} |",
                e.decision_model_id.as_str(),
                e.pattern_id,
                e.attribute_id,
                e.direction.symbol(),
                status,
                evidence
            );
        }
        let _ = writeln!(out, "\n## Case studies\n");
        for cs in &self.case_studies {
            let verdict = if cs.consistent() { "consistent" } else { "inconsistent" };
            let _ = writeln!(out, "* {} ({}): {}", cs.name, cs.pattern_ids.join(", "), verdict);
            for u in &cs.unmet_complements {
                let _ = writeln!(out, "  * {} without {}", u.pattern, u.requires);
            }
        }
        out
    }
}

//! Canonical catalog content.
//!
//! The shipped JSON document is the catalog; the tables below are an
//! independent checklist of what that document must contain. Validation runs
//! the checklist whenever a catalog sets `canonical: true`.

use super::{CaseStudyId, Category, DecisionModelId, Direction, RelationKind};

/// The shipped catalog document.
pub const CATALOG_JSON: &str = include_str!("../../data/catalog.json");

pub const ATTRIBUTE_IDS: [&str; 25] = [
    "training_efficiency",
    "computation_efficiency",
    "communication_efficiency",
    "storage_cost_efficiency",
    "latency_reduction",
    "model_quality",
    "model_suitability",
    "data_privacy",
    "security",
    "reliability",
    "maintainability",
    "traceability",
    "accountability",
    "scalability",
    "usability",
    "accessibility",
    "flexibility",
    "upgradability",
    "ease_of_deployment",
    "client_motivatability",
    "system_fairness",
    "robustness",
    "statistical_heterogeneity_handling",
    "system_heterogeneity_handling",
    "cost_efficiency",
];

pub const PATTERN_CATEGORIES: [(&str, Category); 15] = [
    ("client_registry", Category::ClientManagement),
    ("client_selector", Category::ClientManagement),
    ("client_cluster", Category::ClientManagement),
    ("message_compressor", Category::ModelManagement),
    ("model_co_versioning_registry", Category::ModelManagement),
    ("model_replacement_trigger", Category::ModelManagement),
    ("deployment_selector", Category::ModelManagement),
    ("multi_task_model_trainer", Category::ModelTraining),
    ("heterogeneous_data_handler", Category::ModelTraining),
    ("incentive_registry", Category::ModelTraining),
    ("asynchronous_aggregator", Category::ModelAggregation),
    ("decentralised_aggregator", Category::ModelAggregation),
    ("hierarchical_aggregator", Category::ModelAggregation),
    ("secure_aggregator", Category::ModelAggregation),
    ("training_configurator", Category::Configuration),
];

pub const MODEL_MEMBERS: [(DecisionModelId, &[&str]); 4] = [
    (DecisionModelId::ClientManagement, &["client_registry", "client_selector", "client_cluster"]),
    (
        DecisionModelId::ModelManagementConfiguration,
        &[
            "training_configurator",
            "model_co_versioning_registry",
            "model_replacement_trigger",
            "deployment_selector",
            "message_compressor",
        ],
    ),
    (
        DecisionModelId::ModelAggregation,
        &["asynchronous_aggregator", "hierarchical_aggregator", "secure_aggregator", "decentralised_aggregator"],
    ),
    (DecisionModelId::ModelTraining, &["heterogeneous_data_handler", "incentive_registry", "multi_task_model_trainer"]),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeSpec {
    pub model: DecisionModelId,
    pub pattern: &'static str,
    pub attribute: &'static str,
    pub direction: Direction,
}

const fn edge(model: DecisionModelId, pattern: &'static str, attribute: &'static str, direction: Direction) -> EdgeSpec {
    EdgeSpec { model, pattern, attribute, direction }
}

use DecisionModelId::{ClientManagement as CM, ModelAggregation as MA, ModelManagementConfiguration as MMC, ModelTraining as MT};
use Direction::{Benefit as B, Tradeoff as T};

pub const EFFECT_EDGES: [EdgeSpec; 58] = [
    edge(CM, "client_registry", "maintainability", B),
    edge(CM, "client_registry", "reliability", B),
    edge(CM, "client_registry", "traceability", B),
    edge(CM, "client_registry", "data_privacy", T),
    edge(CM, "client_registry", "training_efficiency", T),
    edge(CM, "client_selector", "training_efficiency", B),
    edge(CM, "client_selector", "model_quality", T),
    edge(CM, "client_cluster", "training_efficiency", B),
    edge(CM, "client_cluster", "computation_efficiency", T),
    edge(MMC, "training_configurator", "accessibility", B),
    edge(MMC, "training_configurator", "computation_efficiency", B),
    edge(MMC, "training_configurator", "usability", B),
    edge(MMC, "training_configurator", "ease_of_deployment", B),
    edge(MMC, "training_configurator", "flexibility", T),
    edge(MMC, "training_configurator", "scalability", T),
    edge(MMC, "model_co_versioning_registry", "accountability", B),
    edge(MMC, "model_co_versioning_registry", "traceability", B),
    edge(MMC, "model_co_versioning_registry", "storage_cost_efficiency", T),
    edge(MMC, "model_co_versioning_registry", "data_privacy", T),
    edge(MMC, "model_co_versioning_registry", "computation_efficiency", T),
    edge(MMC, "model_co_versioning_registry", "reliability", T),
    edge(MMC, "model_replacement_trigger", "upgradability", B),
    edge(MMC, "model_replacement_trigger", "reliability", B),
    edge(MMC, "model_replacement_trigger", "computation_efficiency", T),
    edge(MMC, "deployment_selector", "model_suitability", B),
    edge(MMC, "deployment_selector", "data_privacy", T),
    edge(MMC, "deployment_selector", "computation_efficiency", T),
    edge(MMC, "message_compressor", "communication_efficiency", B),
    edge(MMC, "message_compressor", "model_quality", T),
    edge(MA, "asynchronous_aggregator", "latency_reduction", B),
    edge(MA, "asynchronous_aggregator", "computation_efficiency", B),
    edge(MA, "asynchronous_aggregator", "communication_efficiency", T),
    edge(MA, "asynchronous_aggregator", "model_quality", T),
    edge(MA, "hierarchical_aggregator", "statistical_heterogeneity_handling", B),
    edge(MA, "hierarchical_aggregator", "system_heterogeneity_handling", B),
    edge(MA, "hierarchical_aggregator", "scalability", B),
    edge(MA, "hierarchical_aggregator", "reliability", T),
    edge(MA, "hierarchical_aggregator", "security", T),
    edge(MA, "hierarchical_aggregator", "cost_efficiency", T),
    edge(MA, "secure_aggregator", "security", B),
    edge(MA, "secure_aggregator", "data_privacy", B),
    edge(MA, "secure_aggregator", "model_quality", T),
    edge(MA, "secure_aggregator", "computation_efficiency", T),
    edge(MA, "secure_aggregator", "latency_reduction", T),
    edge(MA, "decentralised_aggregator", "reliability", B),
    edge(MA, "decentralised_aggregator", "accountability", B),
    edge(MA, "decentralised_aggregator", "latency_reduction", T),
    edge(MA, "decentralised_aggregator", "storage_cost_efficiency", T),
    edge(MT, "heterogeneous_data_handler", "statistical_heterogeneity_handling", B),
    edge(MT, "heterogeneous_data_handler", "model_quality", B),
    edge(MT, "incentive_registry", "client_motivatability", B),
    edge(MT, "incentive_registry", "model_quality", B),
    edge(MT, "incentive_registry", "system_fairness", B),
    edge(MT, "incentive_registry", "security", T),
    edge(MT, "multi_task_model_trainer", "model_quality", B),
    edge(MT, "multi_task_model_trainer", "robustness", B),
    edge(MT, "multi_task_model_trainer", "training_efficiency", B),
    edge(MT, "multi_task_model_trainer", "data_privacy", T),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RelationSpec {
    pub model: DecisionModelId,
    pub kind: RelationKind,
    pub from: &'static str,
    pub to: &'static str,
    pub scope: Option<&'static str>,
}

pub const RELATIONS: [RelationSpec; 7] = [
    RelationSpec { model: CM, kind: RelationKind::Complements, from: "client_selector", to: "client_registry", scope: None },
    RelationSpec { model: CM, kind: RelationKind::Complements, from: "client_cluster", to: "client_registry", scope: None },
    RelationSpec { model: CM, kind: RelationKind::Alternative, from: "client_selector", to: "client_cluster", scope: None },
    RelationSpec {
        model: MMC,
        kind: RelationKind::Complements,
        from: "training_configurator",
        to: "model_co_versioning_registry",
        scope: None,
    },
    RelationSpec {
        model: MMC,
        kind: RelationKind::Complements,
        from: "training_configurator",
        to: "model_replacement_trigger",
        scope: None,
    },
    RelationSpec { model: MMC, kind: RelationKind::Complements, from: "training_configurator", to: "deployment_selector", scope: None },
    RelationSpec {
        model: MT,
        kind: RelationKind::Alternative,
        from: "heterogeneous_data_handler",
        to: "incentive_registry",
        scope: Some("reliability"),
    },
];

/// (pattern, context flag) pairs.
pub const CONSTRAINTS: [(&str, &str); 4] = [
    ("client_registry", "requires_owner_consent"),
    ("hierarchical_aggregator", "requires_extra_edge_devices"),
    ("decentralised_aggregator", "requires_peer_compute_budget"),
    ("multi_task_model_trainer", "requires_cross_app_metadata"),
];

/// Pattern lists of the three industrial architectures, in the order they are
/// reported.
pub const CASE_STUDIES: [(CaseStudyId, &[&str]); 3] = [
    (
        CaseStudyId::Meta,
        &[
            "secure_aggregator",
            "training_configurator",
            "heterogeneous_data_handler",
            "client_registry",
            "model_co_versioning_registry",
        ],
    ),
    (
        CaseStudyId::IntelOpenfl,
        &["multi_task_model_trainer", "secure_aggregator", "training_configurator", "deployment_selector"],
    ),
    (
        CaseStudyId::SiemensIfl,
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

pub fn case_study_patterns(id: CaseStudyId) -> &'static [&'static str] {
    CASE_STUDIES.iter().find(|(cs, _)| *cs == id).map(|(_, p)| *p).unwrap_or(&[])
}

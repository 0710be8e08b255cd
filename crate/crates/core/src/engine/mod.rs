//! Pattern selection over the decision models.
//!
//! For each decision model the engine enumerates every subset of its member
//! patterns, drops the infeasible ones, scores the rest against a weighted
//! [`RequirementProfile`] and ranks them. A decision model has at most five
//! members, so exhaustive enumeration is both the algorithm and its own oracle.

mod case_study;
mod rationale;
mod whatif;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::catalog::{DecisionModel, DecisionModelId, Effect, PatternCatalog, RelationKind};
use crate::math;

pub use case_study::{check_case_study, ConsistencyReport, UnmetComplement};
pub use rationale::{explain, rationale, render_adr, AppliedRelation, CitedEffect, PatternRationale, RationaleReport};
pub use whatif::{what_if, AttributeChange, EffectDelta, ModelChange, ProfileDelta, WhatIfResult};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("unknown pattern `{0}`")]
    UnknownPattern(String),
    #[error("unknown context flag `{0}`")]
    UnknownContextFlag(String),
    #[error("weight for `{attribute}` must be finite and non-negative, got {value}")]
    InvalidWeight { attribute: String, value: String },
    #[error("pattern `{0}` is both forced in and forced out")]
    ForcedConflict(String),
    #[error("selection spans decision models: {0}")]
    MixedModel(String),
    #[error("no feasible selection in `{model}`: {reason}")]
    InfeasibleProfile { model: DecisionModelId, reason: String },
    #[error("not found: {0}")]
    NotFound(String),
}

impl EngineError {
    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::UnknownAttribute(_) => "UnknownAttribute",
            EngineError::UnknownPattern(_) => "UnknownPattern",
            EngineError::UnknownContextFlag(_) => "UnknownContextFlag",
            EngineError::InvalidWeight { .. } => "InvalidWeight",
            EngineError::ForcedConflict(_) => "ForcedConflict",
            EngineError::MixedModel(_) => "MixedModel",
            EngineError::InfeasibleProfile { .. } => "InfeasibleProfile",
            EngineError::NotFound(_) => "NotFound",
        }
    }
}

/// Weighted quality attributes plus the facts known about the target
/// environment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequirementProfile {
    /// Attribute id to weight; absent attributes weigh 0.
    #[serde(default)]
    pub weights: BTreeMap<String, f64>,
    /// Constraint keys that hold in the target environment.
    #[serde(default)]
    pub context_flags: BTreeSet<String>,
    #[serde(default)]
    pub forced_in: BTreeSet<String>,
    #[serde(default)]
    pub forced_out: BTreeSet<String>,
}

impl RequirementProfile {
    pub fn weight(&self, attribute_id: &str) -> f64 {
        self.weights.get(attribute_id).copied().unwrap_or(0.0)
    }

    /// Checks the profile against a catalog and returns a copy whose pattern
    /// ids are canonical (aliases resolved).
    pub fn normalized(&self, catalog: &PatternCatalog) -> Result<RequirementProfile, EngineError> {
        for (attribute, &value) in &self.weights {
            if catalog.attribute(attribute).is_none() {
                return Err(EngineError::UnknownAttribute(attribute.clone()));
            }
            if !(value.is_finite() && value >= 0.0) {
                return Err(EngineError::InvalidWeight { attribute: attribute.clone(), value: format!("{value}") });
            }
        }
        for flag in &self.context_flags {
            if !catalog.has_constraint_key(flag) {
                return Err(EngineError::UnknownContextFlag(flag.clone()));
            }
        }
        let resolve = |ids: &BTreeSet<String>| -> Result<BTreeSet<String>, EngineError> {
            ids.iter()
                .map(|id| {
                    catalog
                        .resolve_pattern_id(id)
                        .map(ToString::to_string)
                        .ok_or_else(|| EngineError::UnknownPattern(id.clone()))
                })
                .collect()
        };
        let forced_in = resolve(&self.forced_in)?;
        let forced_out = resolve(&self.forced_out)?;
        if let Some(both) = forced_in.intersection(&forced_out).next() {
            return Err(EngineError::ForcedConflict(both.clone()));
        }
        Ok(RequirementProfile {
            weights: self.weights.clone(),
            context_flags: self.context_flags.clone(),
            forced_in,
            forced_out,
        })
    }
}

/// Why a selection is not admissible.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeasibilityViolation {
    /// `pattern` complements `requires`, which is not chosen.
    ComplementClosure { pattern: String, requires: String },
    /// Both ends of an unscoped alternative are chosen.
    AlternativeExclusivity { first: String, second: String },
    /// A chosen pattern needs a context flag the profile does not assert.
    ConstraintUnmet { pattern: String, key: String },
    ForcedInMissing { pattern: String },
    ForcedOutChosen { pattern: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub violations: Vec<FeasibilityViolation>,
}

/// One candidate pattern set within a decision model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub decision_model_id: DecisionModelId,
    /// Sorted pattern ids.
    pub chosen: Vec<String>,
    pub score: f64,
    pub combined_effects: Vec<Effect>,
    pub violated_constraints: Vec<FeasibilityViolation>,
    /// Chosen patterns that the profile forced in.
    #[serde(default)]
    pub forced_in: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecommendation {
    pub decision_model_id: DecisionModelId,
    pub best: Selection,
    /// All feasible selections, best first.
    pub ranking: Vec<Selection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub catalog_version: u32,
    pub profile: RequirementProfile,
    pub models: Vec<ModelRecommendation>,
}

impl Recommendation {
    pub fn model(&self, id: DecisionModelId) -> Option<&ModelRecommendation> {
        self.models.iter().find(|m| m.decision_model_id == id)
    }

    /// Every pattern chosen by some decision model's best selection.
    pub fn chosen_patterns(&self) -> BTreeSet<String> {
        self.models.iter().flat_map(|m| m.best.chosen.iter().cloned()).collect()
    }
}

/// Resolves ids, sorts them, and finds the single decision model they belong
/// to. The empty set has no model.
fn resolve_chosen<'a, S: AsRef<str>>(
    catalog: &'a PatternCatalog,
    chosen: &[S],
) -> Result<(Option<&'a DecisionModel>, Vec<String>), EngineError> {
    let mut ids = BTreeSet::new();
    let mut model: Option<&DecisionModel> = None;
    for raw in chosen {
        let raw = raw.as_ref();
        let id = catalog.resolve_pattern_id(raw).ok_or_else(|| EngineError::UnknownPattern(raw.to_string()))?;
        let owner = catalog.model_of(id).ok_or_else(|| EngineError::NotFound(format!("decision model of `{id}`")))?;
        match model {
            Some(m) if m.id != owner.id => {
                return Err(EngineError::MixedModel(format!("`{id}` is in {}, others in {}", owner.id, m.id)));
            }
            _ => model = Some(owner),
        }
        ids.insert(id.to_string());
    }
    Ok((model, ids.into_iter().collect()))
}

/// Union of the chosen patterns' effects with the override rule applied: when a
/// chosen complementary pattern and its chosen initial pattern qualify the same
/// attribute differently, only the complementary pattern's effect remains.
/// Ordered by (pattern, attribute).
pub fn combined_effects<S: AsRef<str>>(catalog: &PatternCatalog, chosen: &[S]) -> Result<Vec<Effect>, EngineError> {
    let (model, ids) = resolve_chosen(catalog, chosen)?;
    Ok(match model {
        Some(model) => combine_in(model, &ids).into_iter().filter(|(_, by)| by.is_none()).map(|(e, _)| e).collect(),
        None => Vec::new(),
    })
}

/// All effects of `ids`, each paired with the pattern overriding it, if any.
pub(crate) fn combine_in(model: &DecisionModel, ids: &[String]) -> Vec<(Effect, Option<String>)> {
    let chosen = |id: &str| ids.iter().any(|c| c == id);
    let mut out = Vec::new();
    for effect in model.sorted_effects() {
        if !chosen(&effect.pattern_id) {
            continue;
        }
        let overridden_by = model
            .relations
            .iter()
            .filter(|r| r.kind == RelationKind::Complements && r.to_pattern == effect.pattern_id && chosen(&r.from_pattern))
            .find(|r| {
                model.effects.iter().any(|other| {
                    other.pattern_id == r.from_pattern
                        && other.attribute_id == effect.attribute_id
                        && other.direction != effect.direction
                })
            })
            .map(|r| r.from_pattern.clone());
        out.push((effect, overridden_by));
    }
    out
}

/// Checks complement closure, alternative exclusivity, constraint flags and
/// forced patterns for a candidate set within `model`.
pub fn is_feasible<S: AsRef<str>>(
    catalog: &PatternCatalog,
    profile: &RequirementProfile,
    model: DecisionModelId,
    chosen: &[S],
) -> Result<Feasibility, EngineError> {
    let profile = profile.normalized(catalog)?;
    let decision_model =
        catalog.decision_model(model).ok_or_else(|| EngineError::NotFound(format!("decision model `{model}`")))?;
    let (owner, ids) = resolve_chosen(catalog, chosen)?;
    if let Some(owner) = owner {
        if owner.id != model {
            return Err(EngineError::MixedModel(format!("selection belongs to {}, not {model}", owner.id)));
        }
    }
    let violations = violations_in(catalog, &profile, decision_model, &ids);
    Ok(Feasibility { feasible: violations.is_empty(), violations })
}

fn violations_in(
    catalog: &PatternCatalog,
    profile: &RequirementProfile,
    model: &DecisionModel,
    ids: &[String],
) -> Vec<FeasibilityViolation> {
    let chosen = |id: &str| ids.iter().any(|c| c == id);
    let mut out = Vec::new();
    for relation in &model.relations {
        match relation.kind {
            RelationKind::Complements if chosen(&relation.from_pattern) && !chosen(&relation.to_pattern) => {
                out.push(FeasibilityViolation::ComplementClosure {
                    pattern: relation.from_pattern.clone(),
                    requires: relation.to_pattern.clone(),
                });
            }
            RelationKind::Alternative
                if relation.is_exclusive_alternative() && chosen(&relation.from_pattern) && chosen(&relation.to_pattern) =>
            {
                out.push(FeasibilityViolation::AlternativeExclusivity {
                    first: relation.from_pattern.clone(),
                    second: relation.to_pattern.clone(),
                });
            }
            _ => {}
        }
    }
    for constraint in catalog.decision_models.iter().flat_map(|m| m.constraints.iter()) {
        if chosen(&constraint.pattern_id) && !profile.context_flags.contains(&constraint.key) {
            out.push(FeasibilityViolation::ConstraintUnmet {
                pattern: constraint.pattern_id.clone(),
                key: constraint.key.clone(),
            });
        }
    }
    for forced in profile.forced_in.iter().filter(|p| model.has_member(p)) {
        if !chosen(forced) {
            out.push(FeasibilityViolation::ForcedInMissing { pattern: forced.clone() });
        }
    }
    for forced in profile.forced_out.iter().filter(|p| chosen(p)) {
        out.push(FeasibilityViolation::ForcedOutChosen { pattern: forced.clone() });
    }
    out.sort();
    out
}

/// Weighted sum of signed effect magnitudes over the combined effects.
/// Feasibility is not checked.
pub fn score_selection<S: AsRef<str>>(
    catalog: &PatternCatalog,
    profile: &RequirementProfile,
    chosen: &[S],
) -> Result<f64, EngineError> {
    let profile = profile.normalized(catalog)?;
    let effects = combined_effects(catalog, chosen)?;
    Ok(score_effects(&profile, &effects))
}

/// Net signed magnitude per attribute.
pub fn net_by_attribute(effects: &[Effect]) -> BTreeMap<String, f64> {
    let mut net = BTreeMap::new();
    for effect in effects {
        *net.entry(effect.attribute_id.clone()).or_insert(0.0) += effect.signed_magnitude();
    }
    net
}

fn score_effects(profile: &RequirementProfile, effects: &[Effect]) -> f64 {
    let score: f64 = net_by_attribute(effects).iter().map(|(attribute, net)| net * profile.weight(attribute)).sum();
    // adding zero turns -0.0 into 0.0
    score + 0.0
}

/// Ranking order: higher score first (compared at 1e-9 resolution), then fewer
/// patterns, then the concatenated sorted ids.
pub fn rank_order(a: &Selection, b: &Selection) -> Ordering {
    let quantize = |s: f64| math::round(s * 1e9) + 0.0;
    quantize(b.score)
        .total_cmp(&quantize(a.score))
        .then(a.chosen.len().cmp(&b.chosen.len()))
        .then_with(|| a.chosen.concat().cmp(&b.chosen.concat()))
}

/// Ranks every feasible subset of every decision model.
pub fn recommend(catalog: &PatternCatalog, profile: &RequirementProfile) -> Result<Recommendation, EngineError> {
    let profile = profile.normalized(catalog)?;
    let mut models = Vec::new();
    for id in DecisionModelId::ALL {
        let Some(model) = catalog.decision_model(id) else {
            continue;
        };
        models.push(recommend_model(catalog, &profile, model)?);
    }
    Ok(Recommendation { catalog_version: catalog.schema_version, profile, models })
}

fn recommend_model(
    catalog: &PatternCatalog,
    profile: &RequirementProfile,
    model: &DecisionModel,
) -> Result<ModelRecommendation, EngineError> {
    let members = &model.member_pattern_ids;
    let mut ranking = Vec::new();
    let mut first_rejection = None;
    for mask in 0u32..(1 << members.len()) {
        let mut ids: Vec<String> =
            members.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, p)| p.clone()).collect();
        ids.sort();
        let violations = violations_in(catalog, profile, model, &ids);
        if !violations.is_empty() {
            first_rejection.get_or_insert(violations);
            continue;
        }
        let effects: Vec<Effect> =
            combine_in(model, &ids).into_iter().filter(|(_, by)| by.is_none()).map(|(e, _)| e).collect();
        let forced_in = ids.iter().filter(|p| profile.forced_in.contains(*p)).cloned().collect();
        ranking.push(Selection {
            decision_model_id: model.id,
            score: score_effects(profile, &effects),
            chosen: ids,
            combined_effects: effects,
            violated_constraints: Vec::new(),
            forced_in,
        });
    }
    ranking.sort_by(rank_order);
    let best = ranking.first().cloned().ok_or_else(|| EngineError::InfeasibleProfile {
        model: model.id,
        reason: first_rejection.map(|v| format!("{v:?}")).unwrap_or_default(),
    })?;
    Ok(ModelRecommendation { decision_model_id: model.id, best, ranking })
}

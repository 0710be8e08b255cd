use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{net_by_attribute, recommend, EngineError, Recommendation, RequirementProfile};
use crate::catalog::{DecisionModelId, Direction, PatternCatalog};

/// Changes applied to a profile before re-running the recommendation.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileDelta {
    /// Added to `forced_in` (and removed from `forced_out`).
    #[serde(default)]
    pub force_in: BTreeSet<String>,
    /// Added to `forced_out` (and removed from `forced_in`).
    #[serde(default)]
    pub force_out: BTreeSet<String>,
    /// Removed from both forced sets.
    #[serde(default)]
    pub release: BTreeSet<String>,
    /// Weights to overwrite.
    #[serde(default)]
    pub set_weights: BTreeMap<String, f64>,
    /// Multiplies every weight after `set_weights` is applied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale_weights: Option<f64>,
    #[serde(default)]
    pub add_flags: BTreeSet<String>,
    #[serde(default)]
    pub remove_flags: BTreeSet<String>,
}

impl ProfileDelta {
    pub fn is_identity(&self) -> bool {
        *self == ProfileDelta::default()
    }

    pub fn apply(&self, profile: &RequirementProfile) -> RequirementProfile {
        let mut p = profile.clone();
        for id in &self.release {
            p.forced_in.remove(id);
            p.forced_out.remove(id);
        }
        for id in &self.force_in {
            p.forced_out.remove(id);
            p.forced_in.insert(id.clone());
        }
        for id in &self.force_out {
            p.forced_in.remove(id);
            p.forced_out.insert(id.clone());
        }
        for (attribute, weight) in &self.set_weights {
            p.weights.insert(attribute.clone(), *weight);
        }
        if let Some(scale) = self.scale_weights {
            for w in p.weights.values_mut() {
                *w *= scale;
            }
        }
        p.context_flags.extend(self.add_flags.iter().cloned());
        for flag in &self.remove_flags {
            p.context_flags.remove(flag);
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeChange {
    pub attribute_id: String,
    pub net_before: f64,
    pub net_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelChange {
    pub decision_model_id: DecisionModelId,
    pub added: Vec<String>,
    pub removed: Vec<String>,
}

/// How the adopted architecture shifts between two recommendations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectDelta {
    /// Attributes whose net qualification changes sign (+, 0, -).
    pub sign_changes: Vec<AttributeChange>,
    /// Every attribute whose net value differs.
    pub net_changes: Vec<AttributeChange>,
    pub pattern_changes: Vec<ModelChange>,
    /// (pattern, attribute) tradeoffs accepted after but not before.
    pub tradeoffs_added: Vec<(String, String)>,
    pub tradeoffs_removed: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WhatIfResult {
    pub before: Recommendation,
    pub after: Recommendation,
    pub delta: EffectDelta,
}

/// Recommends for `profile` and for `profile` with `delta` applied, and
/// reports what changed.
pub fn what_if(
    catalog: &PatternCatalog,
    profile: &RequirementProfile,
    delta: &ProfileDelta,
) -> Result<WhatIfResult, EngineError> {
    let before = recommend(catalog, profile)?;
    let after = recommend(catalog, &delta.apply(&before.profile))?;
    let delta = effect_delta(&before, &after);
    Ok(WhatIfResult { before, after, delta })
}

fn adopted_effects(rec: &Recommendation) -> Vec<crate::catalog::Effect> {
    rec.models.iter().flat_map(|m| m.best.combined_effects.iter().cloned()).collect()
}

fn tradeoffs(rec: &Recommendation) -> BTreeSet<(String, String)> {
    adopted_effects(rec)
        .into_iter()
        .filter(|e| e.direction == Direction::Tradeoff)
        .map(|e| (e.pattern_id, e.attribute_id))
        .collect()
}

fn effect_delta(before: &Recommendation, after: &Recommendation) -> EffectDelta {
    let net_before = net_by_attribute(&adopted_effects(before));
    let net_after = net_by_attribute(&adopted_effects(after));
    let attributes: BTreeSet<&String> = net_before.keys().chain(net_after.keys()).collect();
    let mut sign_changes = Vec::new();
    let mut net_changes = Vec::new();
    for attribute in attributes {
        let b = net_before.get(attribute).copied().unwrap_or(0.0);
        let a = net_after.get(attribute).copied().unwrap_or(0.0);
        if a == b {
            continue;
        }
        let change = AttributeChange { attribute_id: attribute.clone(), net_before: b, net_after: a };
        if signum(a) != signum(b) {
            sign_changes.push(change.clone());
        }
        net_changes.push(change);
    }

    let mut pattern_changes = Vec::new();
    for model in &after.models {
        let old: BTreeSet<&String> = before
            .model(model.decision_model_id)
            .map(|m| m.best.chosen.iter().collect())
            .unwrap_or_default();
        let new: BTreeSet<&String> = model.best.chosen.iter().collect();
        if old != new {
            pattern_changes.push(ModelChange {
                decision_model_id: model.decision_model_id,
                added: new.difference(&old).map(|s| (*s).clone()).collect(),
                removed: old.difference(&new).map(|s| (*s).clone()).collect(),
            });
        }
    }

    let t_before = tradeoffs(before);
    let t_after = tradeoffs(after);
    EffectDelta {
        sign_changes,
        net_changes,
        pattern_changes,
        tradeoffs_added: t_after.difference(&t_before).cloned().collect(),
        tradeoffs_removed: t_before.difference(&t_after).cloned().collect(),
    }
}

fn signum(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

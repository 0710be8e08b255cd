use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::canonical;
use super::{PatternCatalog, RelationKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    DuplicateId,
    DanglingReference,
    PatternWithoutEffect,
    UnusedAttribute,
    DuplicateEffect,
    EffectOutsideModel,
    InvalidWeight,
    SelfRelation,
    DuplicateAlternative,
    CrossModelComplement,
    UnknownConstraintKey,
    MembershipMismatch,
    CanonicalContentMissing,
    CanonicalContentUnexpected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub message: String,
}

impl Violation {
    fn new(kind: ViolationKind, message: String) -> Self {
        Self { kind, message }
    }
}

/// Checks every catalog rule and returns the violations found; an empty list
/// means the catalog is valid. Never fails and never mutates the catalog.
pub fn validate_catalog(catalog: &PatternCatalog) -> Vec<Violation> {
    let mut out = Vec::new();
    structural(catalog, &mut out);
    if catalog.canonical {
        canonical_content(catalog, &mut out);
    }
    out
}

fn structural(catalog: &PatternCatalog, out: &mut Vec<Violation>) {
    let mut push = |kind, message| out.push(Violation::new(kind, message));

    let mut seen = BTreeSet::new();
    for id in catalog.patterns.iter().map(|p| &p.id) {
        if !seen.insert(id.as_str()) {
            push(ViolationKind::DuplicateId, format!("pattern `{id}` declared twice"));
        }
    }
    let patterns = seen;
    let mut attributes = BTreeSet::new();
    for id in catalog.attributes.iter().map(|a| &a.id) {
        if !attributes.insert(id.as_str()) {
            push(ViolationKind::DuplicateId, format!("attribute `{id}` declared twice"));
        }
    }
    let keys: BTreeSet<&str> = catalog.constraint_keys.iter().map(String::as_str).collect();

    let mut owner: BTreeMap<&str, usize> = BTreeMap::new();
    for (index, model) in catalog.decision_models.iter().enumerate() {
        for member in &model.member_pattern_ids {
            if !patterns.contains(member.as_str()) {
                push(ViolationKind::DanglingReference, format!("{} lists unknown member `{member}`", model.id));
            } else if owner.insert(member.as_str(), index).is_some() {
                push(ViolationKind::MembershipMismatch, format!("pattern `{member}` belongs to more than one decision model"));
            }
        }
    }
    for pattern in &catalog.patterns {
        if !owner.contains_key(pattern.id.as_str()) {
            push(ViolationKind::MembershipMismatch, format!("pattern `{}` belongs to no decision model", pattern.id));
        }
    }

    let mut patterns_with_effects = BTreeSet::new();
    let mut used_attributes = BTreeSet::new();
    for (index, model) in catalog.decision_models.iter().enumerate() {
        let mut pairs = BTreeSet::new();
        for effect in &model.effects {
            let mut dangling = false;
            if !patterns.contains(effect.pattern_id.as_str()) {
                push(ViolationKind::DanglingReference, format!("{} effect names unknown pattern `{}`", model.id, effect.pattern_id));
                dangling = true;
            }
            if !attributes.contains(effect.attribute_id.as_str()) {
                push(
                    ViolationKind::DanglingReference,
                    format!("{} effect names unknown attribute `{}`", model.id, effect.attribute_id),
                );
                dangling = true;
            }
            if !pairs.insert((effect.pattern_id.as_str(), effect.attribute_id.as_str())) {
                push(
                    ViolationKind::DuplicateEffect,
                    format!("{} has two effects for ({}, {})", model.id, effect.pattern_id, effect.attribute_id),
                );
            }
            if let Some(w) = effect.weight {
                if !(w.is_finite() && w > 0.0) {
                    push(
                        ViolationKind::InvalidWeight,
                        format!("effect ({}, {}) has weight {w}", effect.pattern_id, effect.attribute_id),
                    );
                }
            }
            if dangling {
                continue;
            }
            if owner.get(effect.pattern_id.as_str()) != Some(&index) {
                push(
                    ViolationKind::EffectOutsideModel,
                    format!("{} has an effect for non-member `{}`", model.id, effect.pattern_id),
                );
            }
            patterns_with_effects.insert(effect.pattern_id.as_str());
            used_attributes.insert(effect.attribute_id.as_str());
        }

        let mut alternatives = BTreeSet::new();
        for relation in &model.relations {
            let mut dangling = false;
            for end in [&relation.from_pattern, &relation.to_pattern] {
                if !patterns.contains(end.as_str()) {
                    push(ViolationKind::DanglingReference, format!("{} relation names unknown pattern `{end}`", model.id));
                    dangling = true;
                }
            }
            if let Some(scope) = &relation.scope_attribute {
                if !attributes.contains(scope.as_str()) {
                    push(ViolationKind::DanglingReference, format!("{} relation scoped to unknown attribute `{scope}`", model.id));
                }
            }
            if relation.from_pattern == relation.to_pattern {
                push(ViolationKind::SelfRelation, format!("`{}` relates to itself", relation.from_pattern));
                continue;
            }
            if dangling {
                continue;
            }
            match relation.kind {
                RelationKind::Complements => {
                    let from = owner.get(relation.from_pattern.as_str());
                    let to = owner.get(relation.to_pattern.as_str());
                    if from != to || from != Some(&index) {
                        push(
                            ViolationKind::CrossModelComplement,
                            format!(
                                "`{}` complements `{}` across decision models",
                                relation.from_pattern, relation.to_pattern
                            ),
                        );
                    }
                }
                RelationKind::Alternative => {
                    let (a, b) = ordered(&relation.from_pattern, &relation.to_pattern);
                    if !alternatives.insert((a, b, relation.scope_attribute.as_deref())) {
                        push(
                            ViolationKind::DuplicateAlternative,
                            format!("alternative `{a}` / `{b}` stored more than once"),
                        );
                    }
                }
            }
        }

        for constraint in &model.constraints {
            if !patterns.contains(constraint.pattern_id.as_str()) {
                push(
                    ViolationKind::DanglingReference,
                    format!("{} constraint names unknown pattern `{}`", model.id, constraint.pattern_id),
                );
            }
            if !keys.contains(constraint.key.as_str()) {
                push(ViolationKind::UnknownConstraintKey, format!("constraint key `{}` is not declared", constraint.key));
            }
        }
    }

    for pattern in &catalog.patterns {
        if !patterns_with_effects.contains(pattern.id.as_str()) {
            push(ViolationKind::PatternWithoutEffect, format!("pattern `{}` has no effect edge", pattern.id));
        }
    }
    for attribute in &catalog.attributes {
        if !used_attributes.contains(attribute.id.as_str()) {
            push(ViolationKind::UnusedAttribute, format!("attribute `{}` is not referenced by any effect", attribute.id));
        }
    }
    for study in &catalog.case_studies {
        for id in study.pattern_ids.iter().chain(study.component_notes.keys()) {
            if !patterns.contains(id.as_str()) {
                push(ViolationKind::DanglingReference, format!("case study `{}` names unknown pattern `{id}`", study.id));
            }
        }
    }
}

fn canonical_content(catalog: &PatternCatalog, out: &mut Vec<Violation>) {
    let mut missing = |message: String| out.push(Violation::new(ViolationKind::CanonicalContentMissing, message));

    for (id, category) in canonical::PATTERN_CATEGORIES {
        match catalog.patterns.iter().find(|p| p.id == id) {
            None => missing(format!("pattern `{id}`")),
            Some(p) if p.category != category => missing(format!("pattern `{id}` in category {category:?}")),
            Some(_) => {}
        }
    }
    for id in canonical::ATTRIBUTE_IDS {
        if catalog.attribute(id).is_none() {
            missing(format!("attribute `{id}`"));
        }
    }
    for (model_id, members) in canonical::MODEL_MEMBERS {
        match catalog.decision_model(model_id) {
            None => missing(format!("decision model `{model_id}`")),
            Some(model) => {
                for member in members {
                    if !model.has_member(member) {
                        missing(format!("`{member}` as a member of `{model_id}`"));
                    }
                }
            }
        }
    }
    for spec in canonical::EFFECT_EDGES {
        let found = catalog.decision_model(spec.model).is_some_and(|m| {
            m.effects
                .iter()
                .any(|e| e.pattern_id == spec.pattern && e.attribute_id == spec.attribute && e.direction == spec.direction)
        });
        if !found {
            missing(format!(
                "effect ({}, {}{}) in `{}`",
                spec.pattern,
                spec.direction.symbol(),
                spec.attribute,
                spec.model
            ));
        }
    }
    for spec in canonical::RELATIONS {
        let found = catalog.decision_model(spec.model).is_some_and(|m| {
            m.relations.iter().any(|r| {
                let ends = match spec.kind {
                    RelationKind::Complements => r.from_pattern == spec.from && r.to_pattern == spec.to,
                    RelationKind::Alternative => {
                        ordered(&r.from_pattern, &r.to_pattern) == ordered(spec.from, spec.to)
                    }
                };
                r.kind == spec.kind && ends && r.scope_attribute.as_deref() == spec.scope
            })
        });
        if !found {
            missing(format!("{:?} relation `{}` -> `{}` in `{}`", spec.kind, spec.from, spec.to, spec.model));
        }
    }
    for (pattern, key) in canonical::CONSTRAINTS {
        let found = catalog
            .decision_models
            .iter()
            .flat_map(|m| m.constraints.iter())
            .any(|c| c.pattern_id == pattern && c.key == key);
        if !found {
            missing(format!("constraint `{key}` on `{pattern}`"));
        }
    }
    for (id, patterns) in canonical::CASE_STUDIES {
        match catalog.case_study(id) {
            None => missing(format!("case study `{id}`")),
            Some(study) if study.pattern_ids.iter().map(String::as_str).ne(patterns.iter().copied()) => {
                missing(format!("case study `{id}` pattern list {patterns:?}"));
            }
            Some(_) => {}
        }
    }

    if catalog.patterns.len() != canonical::PATTERN_CATEGORIES.len() {
        out.push(Violation::new(
            ViolationKind::CanonicalContentUnexpected,
            format!("expected exactly 15 patterns, found {}", catalog.patterns.len()),
        ));
    }
    let expected_edges = canonical::EFFECT_EDGES.len();
    if catalog.edge_count() != expected_edges {
        out.push(Violation::new(
            ViolationKind::CanonicalContentUnexpected,
            format!("expected {expected_edges} effect edges, found {}", catalog.edge_count()),
        ));
    }
}

fn ordered<'a>(a: &'a str, b: &'a str) -> (&'a str, &'a str) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{DecisionModelId, Relation};
    use alloc::string::ToString;

    #[test]
    fn canonical_catalog_is_valid() {
        let catalog = PatternCatalog::canonical();
        assert_eq!(validate_catalog(&catalog), Vec::new());
    }

    #[test]
    fn dangling_complement_is_one_violation() {
        let mut catalog = PatternCatalog::canonical();
        let cm = catalog.decision_models.iter_mut().find(|m| m.id == DecisionModelId::ClientManagement).unwrap();
        cm.relations.push(Relation {
            kind: RelationKind::Complements,
            from_pattern: "client_registry".to_string(),
            to_pattern: "ghost_pattern".to_string(),
            scope_attribute: None,
            note: String::new(),
            source_anchor: String::new(),
        });
        let violations = validate_catalog(&catalog);
        assert_eq!(violations.len(), 1, "{violations:?}");
        assert_eq!(violations[0].kind, ViolationKind::DanglingReference);
    }

    #[test]
    fn missing_selector_cluster_alternative_is_one_violation() {
        let mut catalog = PatternCatalog::canonical();
        let cm = catalog.decision_models.iter_mut().find(|m| m.id == DecisionModelId::ClientManagement).unwrap();
        cm.relations.retain(|r| r.kind != RelationKind::Alternative);
        let violations = validate_catalog(&catalog);
        assert_eq!(violations.len(), 1, "{violations:?}");
        assert_eq!(violations[0].kind, ViolationKind::CanonicalContentMissing);

        // without the canonical flag the same catalog is fine
        catalog.canonical = false;
        assert!(validate_catalog(&catalog).is_empty());
    }

    #[test]
    fn alternative_stored_both_ways_is_flagged() {
        let mut catalog = PatternCatalog::canonical();
        let cm = catalog.decision_models.iter_mut().find(|m| m.id == DecisionModelId::ClientManagement).unwrap();
        let mut reversed = cm.relations.iter().find(|r| r.kind == RelationKind::Alternative).unwrap().clone();
        core::mem::swap(&mut reversed.from_pattern, &mut reversed.to_pattern);
        cm.relations.push(reversed);
        let kinds: Vec<_> = validate_catalog(&catalog).into_iter().map(|v| v.kind).collect();
        assert_eq!(kinds, [ViolationKind::DuplicateAlternative]);
    }

    #[test]
    fn cross_model_complement_is_flagged() {
        let mut catalog = PatternCatalog::canonical();
        catalog.canonical = false;
        let cm = catalog.decision_models.iter_mut().find(|m| m.id == DecisionModelId::ClientManagement).unwrap();
        cm.relations.push(Relation {
            kind: RelationKind::Complements,
            from_pattern: "client_selector".to_string(),
            to_pattern: "secure_aggregator".to_string(),
            scope_attribute: None,
            note: String::new(),
            source_anchor: String::new(),
        });
        let kinds: Vec<_> = validate_catalog(&catalog).into_iter().map(|v| v.kind).collect();
        assert_eq!(kinds, [ViolationKind::CrossModelComplement]);
    }

    #[test]
    fn orphan_attribute_and_effectless_pattern() {
        let mut catalog = PatternCatalog::canonical();
        catalog.canonical = false;
        for model in &mut catalog.decision_models {
            model.effects.retain(|e| e.pattern_id != "message_compressor");
        }
        let kinds: Vec<_> = validate_catalog(&catalog).into_iter().map(|v| v.kind).collect();
        // communication_efficiency keeps the async tradeoff edge, so only the pattern is orphaned
        assert_eq!(kinds, [ViolationKind::PatternWithoutEffect]);
    }

    #[test]
    fn validation_is_idempotent() {
        let mut catalog = PatternCatalog::canonical();
        catalog.decision_models[2].effects.pop();
        let before = catalog.clone();
        let first = validate_catalog(&catalog);
        let second = validate_catalog(&catalog);
        assert_eq!(first, second);
        assert_eq!(catalog, before);
        assert!(!first.is_empty());
    }

    #[test]
    fn canonical_census() {
        let catalog = PatternCatalog::canonical();
        let sizes: Vec<_> = DecisionModelId::ALL
            .iter()
            .map(|id| catalog.decision_model(*id).unwrap().member_pattern_ids.len())
            .collect();
        assert_eq!(sizes, [3, 5, 4, 3]);
        for model in &catalog.decision_models {
            for relation in model.relations.iter().filter(|r| r.kind == RelationKind::Complements) {
                assert!(model.has_member(&relation.from_pattern) && model.has_member(&relation.to_pattern));
            }
        }
    }
}

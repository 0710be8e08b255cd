//! Design-rationale reports and their ADR rendering.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{combine_in, Recommendation, Selection};
use crate::catalog::{Constraint, DecisionModelId, Direction, PatternCatalog, RelationKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitedEffect {
    pub attribute_id: String,
    pub direction: Direction,
    pub note: String,
    pub source_anchor: String,
    /// The complementary pattern whose qualification replaces this one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overridden_by: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppliedRelation {
    pub kind: RelationKind,
    pub other_pattern: String,
    /// True when this pattern is the `from` end.
    pub outgoing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scope_attribute: Option<String>,
    pub note: String,
    pub source_anchor: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternRationale {
    pub pattern_id: String,
    pub pattern_name: String,
    pub forced_in: bool,
    pub source_anchor: String,
    pub satisfied: Vec<CitedEffect>,
    pub accepted_tradeoffs: Vec<CitedEffect>,
    /// Relations whose other end is also chosen, plus scoped alternatives.
    pub relations: Vec<AppliedRelation>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationaleReport {
    pub decision_model_id: DecisionModelId,
    pub score: f64,
    pub patterns: Vec<PatternRationale>,
}

/// Explains one selection: the benefits each chosen pattern brings, the
/// tradeoffs accepted with it, and the relations and constraints in play.
pub fn explain(catalog: &PatternCatalog, selection: &Selection) -> RationaleReport {
    let mut report =
        RationaleReport { decision_model_id: selection.decision_model_id, score: selection.score, patterns: Vec::new() };
    let Some(model) = catalog.decision_model(selection.decision_model_id) else {
        return report;
    };
    let effects = combine_in(model, &selection.chosen);
    let chosen = |id: &str| selection.chosen.iter().any(|c| c == id);

    for id in &selection.chosen {
        let Some(pattern) = catalog.pattern(id) else {
            continue;
        };
        let mut satisfied = Vec::new();
        let mut accepted_tradeoffs = Vec::new();
        for (effect, overridden_by) in effects.iter().filter(|(e, _)| &e.pattern_id == id) {
            let cited = CitedEffect {
                attribute_id: effect.attribute_id.clone(),
                direction: effect.direction,
                note: effect.note.clone(),
                source_anchor: effect.source_anchor.clone(),
                overridden_by: overridden_by.clone(),
            };
            match effect.direction {
                Direction::Benefit => satisfied.push(cited),
                Direction::Tradeoff => accepted_tradeoffs.push(cited),
            }
        }
        let relations = model
            .relations
            .iter()
            .filter(|r| r.touches(id))
            .filter_map(|r| {
                let outgoing = &r.from_pattern == id;
                let other = if outgoing { &r.to_pattern } else { &r.from_pattern };
                let applies = chosen(other) || r.scope_attribute.is_some();
                applies.then(|| AppliedRelation {
                    kind: r.kind,
                    other_pattern: other.clone(),
                    outgoing,
                    scope_attribute: r.scope_attribute.clone(),
                    note: r.note.clone(),
                    source_anchor: r.source_anchor.clone(),
                })
            })
            .collect();
        let constraints = catalog
            .decision_models
            .iter()
            .flat_map(|m| m.constraints.iter())
            .filter(|c| &c.pattern_id == id)
            .cloned()
            .collect();
        report.patterns.push(PatternRationale {
            pattern_id: id.clone(),
            pattern_name: pattern.name.clone(),
            forced_in: selection.forced_in.contains(id),
            source_anchor: pattern.source_anchor.clone(),
            satisfied,
            accepted_tradeoffs,
            relations,
            constraints,
        });
    }
    report
}

/// One report per decision model, for each model's best selection.
pub fn rationale(catalog: &PatternCatalog, recommendation: &Recommendation) -> Vec<RationaleReport> {
    recommendation.models.iter().map(|m| explain(catalog, &m.best)).collect()
}

/// Renders the recommendation as an architecture decision record in markdown,
/// one section per decision model.
pub fn render_adr(catalog: &PatternCatalog, recommendation: &Recommendation) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Architecture decision record: federated learning patterns\n");
    out.push_str("## Context\n\n");
    let mut weights: Vec<_> = recommendation.profile.weights.iter().filter(|(_, w)| **w > 0.0).collect();
    weights.sort_by(|a, b| b.1.total_cmp(a.1).then(a.0.cmp(b.0)));
    if weights.is_empty() {
        out.push_str("No quality attribute carries weight.\n");
    } else {
        out.push_str("| Quality attribute | Weight |\n|---|---|\n");
        for (attribute, weight) in weights {
            let _ = writeln!(out, "| {attribute} | {weight} |");
        }
    }
    if !recommendation.profile.context_flags.is_empty() {
        out.push_str("\nEnvironment facts:");
        for flag in &recommendation.profile.context_flags {
            let _ = write!(out, " `{flag}`");
        }
        out.push('\n');
    }

    for model in &recommendation.models {
        let report = explain(catalog, &model.best);
        let title = catalog.decision_model(model.decision_model_id).map(|m| m.name.as_str()).unwrap_or_default();
        let title = if title.is_empty() { model.decision_model_id.as_str() } else { title };
        let _ = writeln!(out, "\n## {title}\n");
        if report.patterns.is_empty() {
            let _ = writeln!(out, "Decision: adopt no pattern (score {}).", fmt_score(model.best.score));
        } else {
            let names: Vec<_> = report.patterns.iter().map(|p| p.pattern_id.as_str()).collect();
            let _ = writeln!(out, "Decision: adopt {} (score {}).", names.join(", "), fmt_score(model.best.score));
        }
        if let Some(runner_up) = model.ranking.get(1) {
            let _ = writeln!(
                out,
                "Runner-up: {{{}}} (score {}).",
                runner_up.chosen.join(", "),
                fmt_score(runner_up.score)
            );
        }
        for pattern in &report.patterns {
            let marker = if pattern.forced_in { " (forced in)" } else { "" };
            let _ = writeln!(out, "\n### {}{marker}\n", pattern.pattern_name);
            for e in &pattern.satisfied {
                write_effect(&mut out, '+', e);
            }
            for e in &pattern.accepted_tradeoffs {
                write_effect(&mut out, '-', e);
            }
            for r in &pattern.relations {
                let scope = r.scope_attribute.as_deref().map(|s| alloc::format!(" on {s}")).unwrap_or_default();
                let arrow = if r.outgoing { "->" } else { "<-" };
                let _ = writeln!(out, "- {:?}{scope} {arrow} {}: {}", r.kind, r.other_pattern, r.note);
            }
            for c in &pattern.constraints {
                let _ = writeln!(out, "- requires `{}`: {}", c.key, c.description);
            }
        }
    }
    out
}

fn write_effect(out: &mut String, sign: char, effect: &CitedEffect) {
    let _ = write!(out, "- {sign}{}", effect.attribute_id);
    if let Some(by) = &effect.overridden_by {
        let _ = write!(out, " (overridden by {by})");
    }
    let _ = writeln!(out, ": {} [{}]", effect.note, effect.source_anchor);
}

fn fmt_score(score: f64) -> String {
    alloc::format!("{:.3}", score)
}

//! The pattern catalog: patterns, quality attributes, and the four decision
//! models relating them.
//!
//! A decision model says which patterns satisfy which quality attributes
//! (benefit `+` or tradeoff `-`), how patterns combine (`complements`,
//! `alternative`), and which environmental conditions a pattern needs before it
//! can be adopted. The catalog is data: it is loaded from JSON and is immutable
//! afterwards, so one instance can be shared by any number of readers.

pub mod canonical;
mod validate;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

pub use validate::{validate_catalog, Violation, ViolationKind};

/// Highest catalog schema version this crate understands.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CatalogError {
    #[error("malformed catalog document: {0}")]
    Parse(String),
    #[error("catalog does not match the schema: {0}")]
    Schema(String),
    #[error("dangling reference: {0}")]
    Reference(String),
    #[error("duplicate id: {0}")]
    DuplicateId(String),
    #[error("not found: {0}")]
    NotFound(String),
}

impl CatalogError {
    fn from_json(err: serde_json::Error) -> Self {
        use serde_json::error::Category;
        match err.classify() {
            Category::Data => CatalogError::Schema(err.to_string()),
            _ => CatalogError::Parse(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    ClientManagement,
    ModelManagement,
    ModelTraining,
    ModelAggregation,
    Configuration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionModelId {
    ClientManagement,
    ModelManagementConfiguration,
    ModelAggregation,
    ModelTraining,
}

impl DecisionModelId {
    pub const ALL: [DecisionModelId; 4] = [
        DecisionModelId::ClientManagement,
        DecisionModelId::ModelManagementConfiguration,
        DecisionModelId::ModelAggregation,
        DecisionModelId::ModelTraining,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DecisionModelId::ClientManagement => "client_management",
            DecisionModelId::ModelManagementConfiguration => "model_management_configuration",
            DecisionModelId::ModelAggregation => "model_aggregation",
            DecisionModelId::ModelTraining => "model_training",
        }
    }
}

impl fmt::Display for DecisionModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DecisionModelId {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DecisionModelId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| CatalogError::NotFound(format!("decision model `{s}`")))
    }
}

/// Sign of an effect edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Benefit,
    Tradeoff,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Benefit => 1.0,
            Direction::Tradeoff => -1.0,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Direction::Benefit => '+',
            Direction::Tradeoff => '-',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    /// `from` complements `to`; `to` is the required initial pattern.
    Complements,
    /// Symmetric; stored once.
    Alternative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseStudyId {
    Meta,
    IntelOpenfl,
    SiemensIfl,
}

impl CaseStudyId {
    pub const ALL: [CaseStudyId; 3] = [CaseStudyId::Meta, CaseStudyId::IntelOpenfl, CaseStudyId::SiemensIfl];

    pub fn as_str(self) -> &'static str {
        match self {
            CaseStudyId::Meta => "meta",
            CaseStudyId::IntelOpenfl => "intel_openfl",
            CaseStudyId::SiemensIfl => "siemens_ifl",
        }
    }
}

impl fmt::Display for CaseStudyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseStudyId {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CaseStudyId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| CatalogError::NotFound(format!("case study `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pattern {
    pub id: String,
    pub name: String,
    pub category: Category,
    pub summary: String,
    pub source_anchor: String,
    /// Other names the pattern goes by; lookups accept them.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aliases: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualityAttribute {
    pub id: String,
    pub name: String,
    pub higher_is_better: bool,
}

/// A `+`/`-` edge from a pattern to a quality attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Effect {
    pub pattern_id: String,
    pub attribute_id: String,
    pub direction: Direction,
    pub note: String,
    pub source_anchor: String,
    /// Optional magnitude override; unit magnitude when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

impl Effect {
    pub fn magnitude(&self) -> f64 {
        self.weight.unwrap_or(1.0)
    }

    pub fn signed_magnitude(&self) -> f64 {
        self.direction.sign() * self.magnitude()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Relation {
    pub kind: RelationKind,
    pub from_pattern: String,
    pub to_pattern: String,
    /// Restricts an alternative to a single attribute. Scoped alternatives are
    /// annotations only and never make two patterns mutually exclusive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scope_attribute: Option<String>,
    pub note: String,
    #[serde(default)]
    pub source_anchor: String,
}

impl Relation {
    pub fn touches(&self, pattern_id: &str) -> bool {
        self.from_pattern == pattern_id || self.to_pattern == pattern_id
    }

    /// Whether this is an alternative that forbids choosing both ends.
    pub fn is_exclusive_alternative(&self) -> bool {
        self.kind == RelationKind::Alternative && self.scope_attribute.is_none()
    }
}

/// A precondition on adopting a pattern, expressed as a context flag that has to
/// hold in the target environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constraint {
    pub pattern_id: String,
    pub key: String,
    pub description: String,
    #[serde(default)]
    pub source_anchor: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionModel {
    pub id: DecisionModelId,
    #[serde(default)]
    pub name: String,
    pub member_pattern_ids: Vec<String>,
    pub effects: Vec<Effect>,
    pub relations: Vec<Relation>,
    pub constraints: Vec<Constraint>,
}

impl DecisionModel {
    pub fn has_member(&self, pattern_id: &str) -> bool {
        self.member_pattern_ids.iter().any(|p| p == pattern_id)
    }

    /// Effects sorted by (pattern id, attribute id).
    pub fn sorted_effects(&self) -> Vec<Effect> {
        let mut effects = self.effects.clone();
        effects.sort_by(|a, b| {
            (a.pattern_id.as_str(), a.attribute_id.as_str()).cmp(&(b.pattern_id.as_str(), b.attribute_id.as_str()))
        });
        effects
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseStudyMapping {
    pub id: CaseStudyId,
    #[serde(default)]
    pub name: String,
    pub pattern_ids: Vec<String>,
    #[serde(default)]
    pub component_notes: BTreeMap<String, String>,
}

/// The whole catalog document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternCatalog {
    pub schema_version: u32,
    /// When set, validation also checks the canonical content checklist.
    #[serde(default)]
    pub canonical: bool,
    /// Closed set of context flags constraints may use.
    pub constraint_keys: Vec<String>,
    pub attributes: Vec<QualityAttribute>,
    pub patterns: Vec<Pattern>,
    pub decision_models: Vec<DecisionModel>,
    pub case_studies: Vec<CaseStudyMapping>,
}

/// A pattern together with everything the catalog says about it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternView {
    pub pattern: Pattern,
    pub decision_model: DecisionModelId,
    pub effects: Vec<Effect>,
    pub relations: Vec<Relation>,
    pub constraints: Vec<Constraint>,
}

impl PatternCatalog {
    /// Parses a catalog document and checks that it is structurally sound:
    /// unique ids and no dangling references. Use [`validate_catalog`] for the
    /// full rule set.
    pub fn from_json_str(text: &str) -> Result<Self, CatalogError> {
        let catalog: PatternCatalog = serde_json::from_str(text).map_err(CatalogError::from_json)?;
        catalog.check_structure()?;
        Ok(catalog)
    }

    /// The catalog shipped with this crate.
    pub fn canonical() -> Self {
        Self::from_json_str(canonical::CATALOG_JSON).expect("shipped catalog is well-formed")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("catalog serializes")
    }

    fn check_structure(&self) -> Result<(), CatalogError> {
        if self.schema_version == 0 || self.schema_version > SCHEMA_VERSION {
            return Err(CatalogError::Schema(format!(
                "unsupported schema_version {} (expected 1..={SCHEMA_VERSION})",
                self.schema_version
            )));
        }

        unique(self.attributes.iter().map(|a| a.id.as_str()), "attribute")?;
        unique(self.patterns.iter().map(|p| p.id.as_str()), "pattern")?;
        unique(self.constraint_keys.iter().map(String::as_str), "constraint key")?;
        unique(self.decision_models.iter().map(|m| m.id.as_str()), "decision model")?;
        unique(self.case_studies.iter().map(|c| c.id.as_str()), "case study")?;
        unique(
            self.patterns.iter().flat_map(|p| core::iter::once(p.id.as_str()).chain(p.aliases.iter().map(String::as_str))),
            "pattern name or alias",
        )?;

        let patterns: BTreeSet<&str> = self.patterns.iter().map(|p| p.id.as_str()).collect();
        let attributes: BTreeSet<&str> = self.attributes.iter().map(|a| a.id.as_str()).collect();
        let keys: BTreeSet<&str> = self.constraint_keys.iter().map(String::as_str).collect();

        let pattern_ref = |id: &str, ctx: &str| {
            if patterns.contains(id) {
                Ok(())
            } else {
                Err(CatalogError::Reference(format!("{ctx} names unknown pattern `{id}`")))
            }
        };
        let attribute_ref = |id: &str, ctx: &str| {
            if attributes.contains(id) {
                Ok(())
            } else {
                Err(CatalogError::Reference(format!("{ctx} names unknown attribute `{id}`")))
            }
        };

        let mut membership = BTreeSet::new();
        for model in &self.decision_models {
            let ctx = format!("decision model `{}`", model.id);
            for member in &model.member_pattern_ids {
                pattern_ref(member, &ctx)?;
                if !membership.insert(member.as_str()) {
                    return Err(CatalogError::DuplicateId(format!(
                        "pattern `{member}` is a member of more than one decision model or listed twice"
                    )));
                }
            }
            for effect in &model.effects {
                pattern_ref(&effect.pattern_id, &ctx)?;
                attribute_ref(&effect.attribute_id, &ctx)?;
            }
            for relation in &model.relations {
                pattern_ref(&relation.from_pattern, &ctx)?;
                pattern_ref(&relation.to_pattern, &ctx)?;
                if let Some(scope) = &relation.scope_attribute {
                    attribute_ref(scope, &ctx)?;
                }
            }
            for constraint in &model.constraints {
                pattern_ref(&constraint.pattern_id, &ctx)?;
                if !keys.contains(constraint.key.as_str()) {
                    return Err(CatalogError::Reference(format!(
                        "{ctx} uses constraint key `{}` missing from constraint_keys",
                        constraint.key
                    )));
                }
            }
        }
        for study in &self.case_studies {
            let ctx = format!("case study `{}`", study.id);
            unique(study.pattern_ids.iter().map(String::as_str), "case study pattern")?;
            for id in study.pattern_ids.iter().chain(study.component_notes.keys()) {
                pattern_ref(id, &ctx)?;
            }
        }
        Ok(())
    }

    /// Resolves a pattern id or alias to its canonical id.
    pub fn resolve_pattern_id(&self, id_or_alias: &str) -> Option<&str> {
        self.patterns
            .iter()
            .find(|p| p.id == id_or_alias || p.aliases.iter().any(|a| a == id_or_alias))
            .map(|p| p.id.as_str())
    }

    pub fn pattern(&self, id: &str) -> Option<&Pattern> {
        let id = self.resolve_pattern_id(id)?;
        self.patterns.iter().find(|p| p.id == id)
    }

    pub fn attribute(&self, id: &str) -> Option<&QualityAttribute> {
        self.attributes.iter().find(|a| a.id == id)
    }

    pub fn has_constraint_key(&self, key: &str) -> bool {
        self.constraint_keys.iter().any(|k| k == key)
    }

    pub fn decision_model(&self, id: DecisionModelId) -> Option<&DecisionModel> {
        self.decision_models.iter().find(|m| m.id == id)
    }

    /// The decision model a pattern belongs to.
    pub fn model_of(&self, pattern_id: &str) -> Option<&DecisionModel> {
        self.decision_models.iter().find(|m| m.has_member(pattern_id))
    }

    pub fn case_study(&self, id: CaseStudyId) -> Option<&CaseStudyMapping> {
        self.case_studies.iter().find(|c| c.id == id)
    }

    /// Total number of effect edges across all decision models.
    pub fn edge_count(&self) -> usize {
        self.decision_models.iter().map(|m| m.effects.len()).sum()
    }

    /// The complete neighbourhood of a pattern.
    pub fn query_pattern(&self, pattern_id: &str) -> Result<PatternView, CatalogError> {
        let pattern = self
            .pattern(pattern_id)
            .ok_or_else(|| CatalogError::NotFound(format!("pattern `{pattern_id}`")))?;
        let model = self
            .model_of(&pattern.id)
            .ok_or_else(|| CatalogError::NotFound(format!("decision model for pattern `{}`", pattern.id)))?;
        let effects = model.sorted_effects().into_iter().filter(|e| e.pattern_id == pattern.id).collect();
        let relations = self
            .decision_models
            .iter()
            .flat_map(|m| m.relations.iter())
            .filter(|r| r.touches(&pattern.id))
            .cloned()
            .collect();
        let constraints = self
            .decision_models
            .iter()
            .flat_map(|m| m.constraints.iter())
            .filter(|c| c.pattern_id == pattern.id)
            .cloned()
            .collect();
        Ok(PatternView { pattern: pattern.clone(), decision_model: model.id, effects, relations, constraints })
    }

    /// All effect edges of one decision model, ordered by (pattern, attribute).
    pub fn edges_of(&self, model: DecisionModelId) -> Result<Vec<Effect>, CatalogError> {
        self.decision_model(model)
            .map(DecisionModel::sorted_effects)
            .ok_or_else(|| CatalogError::NotFound(format!("decision model `{model}`")))
    }

    /// Finds the effect a pattern has on an attribute, if any.
    pub fn effect(&self, pattern_id: &str, attribute_id: &str) -> Option<&Effect> {
        self.model_of(pattern_id)?
            .effects
            .iter()
            .find(|e| e.pattern_id == pattern_id && e.attribute_id == attribute_id)
    }
}

fn unique<'a>(ids: impl Iterator<Item = &'a str>, what: &str) -> Result<(), CatalogError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(CatalogError::DuplicateId(format!("{what} `{id}`")));
        }
    }
    Ok(())
}

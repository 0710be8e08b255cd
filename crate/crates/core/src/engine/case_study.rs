use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::catalog::{canonical, CaseStudyId, DecisionModelId, PatternCatalog, RelationKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnmetComplement {
    pub pattern: String,
    pub requires: String,
}

/// How an industrial architecture maps onto the catalog.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub case_study_id: CaseStudyId,
    pub name: String,
    /// Mapped patterns in their reported order.
    pub pattern_ids: Vec<String>,
    pub component_notes: BTreeMap<String, String>,
    /// Mapped ids that the catalog does not define.
    pub missing_patterns: Vec<String>,
    /// Complements whose initial pattern is absent from the mapping.
    pub unmet_complements: Vec<UnmetComplement>,
    pub decision_models_exercised: Vec<DecisionModelId>,
    /// Whether the mapping equals the reference pattern list.
    pub matches_reference: bool,
}

impl ConsistencyReport {
    pub fn consistent(&self) -> bool {
        self.missing_patterns.is_empty() && self.matches_reference
    }
}

pub fn check_case_study(catalog: &PatternCatalog, id: CaseStudyId) -> Result<ConsistencyReport, EngineError> {
    let study = catalog.case_study(id).ok_or_else(|| EngineError::NotFound(alloc::format!("case study `{id}`")))?;
    let has = |p: &str| study.pattern_ids.iter().any(|q| q == p);
    let missing_patterns = study.pattern_ids.iter().filter(|p| catalog.pattern(p).is_none()).cloned().collect();

    let mut unmet_complements = Vec::new();
    for relation in catalog.decision_models.iter().flat_map(|m| m.relations.iter()) {
        if relation.kind == RelationKind::Complements && has(&relation.from_pattern) && !has(&relation.to_pattern) {
            unmet_complements.push(UnmetComplement {
                pattern: relation.from_pattern.clone(),
                requires: relation.to_pattern.clone(),
            });
        }
    }
    let decision_models_exercised = DecisionModelId::ALL
        .into_iter()
        .filter(|m| catalog.decision_model(*m).is_some_and(|dm| study.pattern_ids.iter().any(|p| dm.has_member(p))))
        .collect();
    let reference = canonical::case_study_patterns(id);

    Ok(ConsistencyReport {
        case_study_id: id,
        name: study.name.clone(),
        pattern_ids: study.pattern_ids.clone(),
        component_notes: study.component_notes.clone(),
        missing_patterns,
        unmet_complements,
        decision_models_exercised,
        matches_reference: study.pattern_ids.iter().map(String::as_str).eq(reference.iter().copied()),
    })
}

impl core::fmt::Display for ConsistencyReport {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        writeln!(f, "{} ({})", self.name, self.case_study_id)?;
        for p in &self.pattern_ids {
            match self.component_notes.get(p) {
                Some(note) => writeln!(f, "  {p}: {note}")?,
                None => writeln!(f, "  {p}")?,
            }
        }
        let models: Vec<String> = self.decision_models_exercised.iter().map(|m| m.to_string()).collect();
        writeln!(f, "decision models: {}", models.join(", "))?;
        for u in &self.unmet_complements {
            writeln!(f, "note: {} complements {}, which is not mapped", u.pattern, u.requires)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_lists() {
        let catalog = PatternCatalog::canonical();
        let meta = check_case_study(&catalog, CaseStudyId::Meta).unwrap();
        assert_eq!(
            meta.pattern_ids,
            [
                "secure_aggregator",
                "training_configurator",
                "heterogeneous_data_handler",
                "client_registry",
                "model_co_versioning_registry"
            ]
        );
        assert!(meta.consistent());
        let intel = check_case_study(&catalog, CaseStudyId::IntelOpenfl).unwrap();
        assert_eq!(
            intel.pattern_ids,
            ["multi_task_model_trainer", "secure_aggregator", "training_configurator", "deployment_selector"]
        );
        let siemens = check_case_study(&catalog, CaseStudyId::SiemensIfl).unwrap();
        assert_eq!(siemens.pattern_ids.len(), 7);
        assert!(siemens.consistent());
        assert_eq!(siemens.decision_models_exercised.len(), 4);
    }

    #[test]
    fn configurator_complements_are_reported() {
        let catalog = PatternCatalog::canonical();
        let intel = check_case_study(&catalog, CaseStudyId::IntelOpenfl).unwrap();
        let required: Vec<_> = intel.unmet_complements.iter().map(|u| u.requires.as_str()).collect();
        assert_eq!(required, ["model_co_versioning_registry", "model_replacement_trigger"]);
    }

    #[test]
    fn missing_case_study_is_not_found() {
        let mut catalog = PatternCatalog::canonical();
        catalog.case_studies.clear();
        assert!(matches!(check_case_study(&catalog, CaseStudyId::Meta), Err(EngineError::NotFound(_))));
    }
}

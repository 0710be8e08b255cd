//! Runs a hypothesis suite on all cores.

use std::time::Instant;

use fedarch_core::validator::{assemble_report, run_hypothesis, HypothesisFile, ValidationReport};
use fedarch_core::PatternCatalog;
use rayon::prelude::*;

/// Same report as `validate_all`, with hypotheses run concurrently and each
/// result timed.
pub fn validate_parallel(catalog: &PatternCatalog, file: &HypothesisFile) -> ValidationReport {
    let results = file
        .hypotheses
        .par_iter()
        .map(|h| {
            let start = Instant::now();
            let mut result = run_hypothesis(catalog, h);
            result.runtime_ms = Some(start.elapsed().as_millis() as u64);
            result
        })
        .collect();
    assemble_report(catalog, results)
}

/// Keeps only the hypotheses whose id is listed; `None` keeps all.
pub fn subset(file: &HypothesisFile, ids: Option<&[String]>) -> Result<HypothesisFile, String> {
    let Some(ids) = ids else { return Ok(file.clone()) };
    if let Some(missing) = ids.iter().find(|id| !file.hypotheses.iter().any(|h| &h.id == *id)) {
        return Err(format!("unknown hypothesis `{missing}`"));
    }
    Ok(HypothesisFile {
        schema_version: file.schema_version,
        hypotheses: file.hypotheses.iter().filter(|h| ids.contains(&h.id)).cloned().collect(),
    })
}

//! A deliberately naive re-implementation of pattern selection used as a test
//! oracle, plus a seeded random profile generator. Shares nothing with the
//! engine except the catalog data.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use fedarch_core::catalog::{DecisionModel, Direction, PatternCatalog, RelationKind};
use fedarch_core::engine::RequirementProfile;

pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed ^ 0x5DEE_CE66_D1CE_B00C)
    }

    pub fn next(&mut self) -> u64 {
        // xorshift64*
        let mut x = self.0 | 1;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.0 = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }

    pub fn chance(&mut self, percent: u64) -> bool {
        self.below(100) < percent
    }
}

/// Weights are multiples of 1/8 so every score is exact in binary floating
/// point and ties are frequent, which exercises the tie-break.
pub fn random_profile(catalog: &PatternCatalog, rng: &mut Rng) -> RequirementProfile {
    let mut p = RequirementProfile::default();
    for attribute in &catalog.attributes {
        if rng.chance(45) {
            p.weights.insert(attribute.id.clone(), rng.below(17) as f64 / 8.0);
        }
    }
    for key in &catalog.constraint_keys {
        if rng.chance(50) {
            p.context_flags.insert(key.clone());
        }
    }
    for pattern in &catalog.patterns {
        match rng.below(20) {
            0 => {
                p.forced_in.insert(pattern.id.clone());
            }
            1 => {
                p.forced_out.insert(pattern.id.clone());
            }
            _ => {}
        }
    }
    p
}

pub struct OracleChoice {
    pub chosen: Vec<String>,
    pub score: f64,
}

fn feasible(catalog: &PatternCatalog, profile: &RequirementProfile, model: &DecisionModel, set: &BTreeSet<&str>) -> bool {
    for r in &model.relations {
        let a = set.contains(r.from_pattern.as_str());
        let b = set.contains(r.to_pattern.as_str());
        if r.kind == RelationKind::Complements && a && !b {
            return false;
        }
        if r.kind == RelationKind::Alternative && r.scope_attribute.is_none() && a && b {
            return false;
        }
    }
    for m in &catalog.decision_models {
        for c in &m.constraints {
            if set.contains(c.pattern_id.as_str()) && !profile.context_flags.contains(&c.key) {
                return false;
            }
        }
    }
    for f in &profile.forced_in {
        if model.member_pattern_ids.contains(f) && !set.contains(f.as_str()) {
            return false;
        }
    }
    for f in &profile.forced_out {
        if set.contains(f.as_str()) {
            return false;
        }
    }
    true
}

fn score(profile: &RequirementProfile, model: &DecisionModel, set: &BTreeSet<&str>) -> f64 {
    let mut total = 0.0;
    for p in set {
        for e in model.effects.iter().filter(|e| e.pattern_id == *p) {
            let overridden = model.relations.iter().any(|r| {
                r.kind == RelationKind::Complements
                    && r.to_pattern == *p
                    && set.contains(r.from_pattern.as_str())
                    && model.effects.iter().any(|o| {
                        o.pattern_id == r.from_pattern && o.attribute_id == e.attribute_id && o.direction != e.direction
                    })
            });
            if overridden {
                continue;
            }
            let sign = if e.direction == Direction::Benefit { 1.0 } else { -1.0 };
            total += sign * e.weight.unwrap_or(1.0) * profile.weights.get(&e.attribute_id).copied().unwrap_or(0.0);
        }
    }
    total
}

/// Best selection per decision model id, or `None` for a model in which no
/// subset is feasible.
pub fn brute_force(catalog: &PatternCatalog, profile: &RequirementProfile) -> BTreeMap<String, Option<OracleChoice>> {
    let mut out = BTreeMap::new();
    for model in &catalog.decision_models {
        let n = model.member_pattern_ids.len();
        let mut best: Option<OracleChoice> = None;
        for mask in 0..(1usize << n) {
            let set: BTreeSet<&str> =
                (0..n).filter(|i| mask >> i & 1 == 1).map(|i| model.member_pattern_ids[i].as_str()).collect();
            if !feasible(catalog, profile, model, &set) {
                continue;
            }
            let s = score(profile, model, &set);
            let candidate = OracleChoice { chosen: set.iter().map(|s| s.to_string()).collect(), score: s };
            let better = match &best {
                None => true,
                Some(b) => {
                    let (cs, bs) = ((candidate.score * 1e9).round(), (b.score * 1e9).round());
                    if cs != bs {
                        cs > bs
                    } else if candidate.chosen.len() != b.chosen.len() {
                        candidate.chosen.len() < b.chosen.len()
                    } else {
                        candidate.chosen.join("") < b.chosen.join("")
                    }
                }
            };
            if better {
                best = Some(candidate);
            }
        }
        out.insert(model.id.as_str().to_string(), best);
    }
    out
}

use std::collections::{HashMap, HashSet};

use crate::cluster::{MatchSet, Member};
use crate::error::{Error, Result};
use crate::record::PlainRecord;

/// Entity label of every record, indexed by party then record position.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    entity_of: Vec<Vec<String>>,
}

impl GroundTruth {
    /// Fails if a record lacks an entity id or a party holds two records of
    /// the same entity.
    pub fn new(entity_of: Vec<Vec<String>>) -> Result<Self> {
        for (party, ids) in entity_of.iter().enumerate() {
            let mut seen = HashSet::new();
            for id in ids {
                if !seen.insert(id) {
                    return Err(Error::Data(format!("party {party} holds entity {id} twice")));
                }
            }
        }
        Ok(Self { entity_of })
    }

    pub fn from_records(parties: &[Vec<PlainRecord>]) -> Result<Self> {
        let entity_of = parties
            .iter()
            .enumerate()
            .map(|(party, recs)| {
                recs.iter()
                    .map(|r| {
                        r.entity_id.clone().ok_or_else(|| {
                            Error::Data(format!("record {} of party {party} has no entity id", r.record_id))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(entity_of)
    }

    pub fn entity(&self, (party, pos): Member) -> Result<&str> {
        self.entity_of
            .get(party)
            .and_then(|ids| ids.get(pos))
            .map(String::as_str)
            .ok_or_else(|| Error::UnknownRecord {
                party,
                record: pos.to_string(),
            })
    }

    /// Number of parties holding each entity.
    fn entity_sizes(&self) -> HashMap<&str, usize> {
        let mut sizes = HashMap::new();
        for id in self.entity_of.iter().flatten() {
            *sizes.entry(id.as_str()).or_insert(0) += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QualityReport {
    pub true_matches: u64,
    pub false_matches: u64,
    pub false_non_matches: u64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

impl QualityReport {
    fn from_counts(tm: u64, fm: u64, fn_: u64) -> Self {
        let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tm, tm + fm);
        let recall = ratio(tm, tm + fn_);
        let f_measure = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            true_matches: tm,
            false_matches: fm,
            false_non_matches: fn_,
            precision,
            recall,
            f_measure,
        }
    }
}

/// Pairwise quality of a match set.
///
/// Every record pair inside an output cluster is a true match when both
/// records belong to the same entity and a false match otherwise. The true
/// pairs to be found are all cross-party pairs of entities held by at least
/// `min_entity_size` parties; those not placed together are false non-matches.
pub fn score_linkage(matches: &MatchSet, truth: &GroundTruth, min_entity_size: usize) -> Result<QualityReport> {
    let sizes = truth.entity_sizes();
    let mut tm = 0u64;
    let mut fm = 0u64;
    let mut found = 0u64;
    for cluster in &matches.clusters {
        let entities = cluster.iter().map(|&m| truth.entity(m)).collect::<Result<Vec<_>>>()?;
        for i in 0..entities.len() {
            for j in i + 1..entities.len() {
                if entities[i] == entities[j] {
                    tm += 1;
                    if sizes[entities[i]] >= min_entity_size {
                        found += 1;
                    }
                } else {
                    fm += 1;
                }
            }
        }
    }
    let universe: u64 = sizes
        .values()
        .filter(|&&s| s >= min_entity_size.max(2))
        .map(|&s| (s * (s - 1) / 2) as u64)
        .sum();
    Ok(QualityReport::from_counts(tm, fm, universe - found))
}

//! Cluster-to-record similarity.

use std::collections::HashMap;

use crate::encode::{dice_bf, BloomFilter};
use crate::error::{Error, Result};

/// A record reference: `(party index, record position within that party)`.
pub type Member = (usize, usize);

/// Scores a candidate record against a cluster. `round` numbers the mapping
/// iterations of a block from 1 so per-round encodings can be selected.
pub trait Scorer: Sync {
    fn similarity(&self, round: usize, cluster: &[Member], record: Member) -> Result<f64>;
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn similarity(&self, round: usize, cluster: &[Member], record: Member) -> Result<f64> {
        (**self).similarity(round, cluster, record)
    }
}

/// How a cluster is compared with a record.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum SimilarityKind {
    /// Mean of the pairwise Dice values between the record and every member.
    #[default]
    Average,
    /// Dice coefficient of the whole set (members plus record) at once.
    Joint,
}

/// Looks up the filter of a record for a given round.
pub trait FilterSource: Sync {
    fn filter(&self, round: usize, member: Member) -> Result<&BloomFilter>;
}

/// One encoding per record, used in every round.
impl FilterSource for Vec<Vec<BloomFilter>> {
    fn filter(&self, _round: usize, (party, pos): Member) -> Result<&BloomFilter> {
        self.get(party)
            .and_then(|records| records.get(pos))
            .ok_or_else(|| Error::UnknownRecord {
                party,
                record: pos.to_string(),
            })
    }
}

/// Mean pairwise Dice between `record` and each member filter. Zero for an
/// empty cluster.
pub fn avg_similarity<'a>(members: impl IntoIterator<Item = &'a BloomFilter>, record: &BloomFilter) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for m in members {
        sum += dice_bf([m, record])?;
        count += 1;
    }
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}

/// Scores directly on the filters, as a linkage unit holding plain BFs would.
#[derive(Debug, Clone)]
pub struct DirectScorer<S> {
    pub source: S,
    pub kind: SimilarityKind,
}

impl<S: FilterSource> DirectScorer<S> {
    pub fn new(source: S, kind: SimilarityKind) -> Self {
        Self { source, kind }
    }
}

impl<S: FilterSource> Scorer for DirectScorer<S> {
    fn similarity(&self, round: usize, cluster: &[Member], record: Member) -> Result<f64> {
        let rec = self.source.filter(round, record)?;
        let members = cluster
            .iter()
            .map(|&m| self.source.filter(round, m))
            .collect::<Result<Vec<_>>>()?;
        match self.kind {
            SimilarityKind::Average => avg_similarity(members, rec),
            SimilarityKind::Joint => dice_bf(members.into_iter().chain([rec])),
        }
    }
}

/// Pairwise similarities given as a table; missing pairs score 0. Cluster
/// similarity is the mean over members. Handy for hand-built scenarios.
#[derive(Debug, Clone, Default)]
pub struct TableScorer {
    pairs: HashMap<(Member, Member), f64>,
}

impl TableScorer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets the symmetric similarity of two records.
    pub fn set(&mut self, a: Member, b: Member, sim: f64) -> &mut Self {
        self.pairs.insert((a.min(b), a.max(b)), sim);
        self
    }

    pub fn pair(&self, a: Member, b: Member) -> f64 {
        self.pairs.get(&(a.min(b), a.max(b))).copied().unwrap_or(0.0)
    }
}

impl Scorer for TableScorer {
    fn similarity(&self, _round: usize, cluster: &[Member], record: Member) -> Result<f64> {
        if cluster.is_empty() {
            return Ok(0.0);
        }
        let sum: f64 = cluster.iter().map(|&m| self.pair(m, record)).sum();
        Ok(sum / cluster.len() as f64)
    }
}

//! Incremental multi-party clustering inside blocks.
//!
//! Parties are processed one at a time in a chosen order. The records of the
//! first party seed singleton clusters; each later party's records are
//! compared with the current clusters and merged into them. Three variants
//! differ in how the one-to-one constraint is applied:
//!
//! * [`Mapping::Early`] solves an optimal assignment in every iteration.
//! * [`Mapping::Late`] merges every qualifying edge first (clusters may
//!   overlap) and resolves the overlap afterwards by splitting out each party's
//!   records and re-mapping them.
//! * [`Mapping::Greedy`] is early mapping with a greedy assignment.
//!
//! Clusters with at least `s_m` records across all blocks form the [`MatchSet`].

mod early;
mod late;
pub mod scorer;

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::assignment::{greedy, hungarian, SimilarityMatrix};
use crate::blocking::BlockIndex;
use crate::error::{Error, Result};
use crate::seed;

pub use early::{link_early, link_greedy};
pub use late::link_late;
pub use scorer::{avg_similarity, DirectScorer, FilterSource, Member, Scorer, SimilarityKind, TableScorer};

/// How the one-to-one constraint is enforced.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mapping {
    #[default]
    Early,
    Late,
    Greedy,
}

impl Mapping {
    pub const ALL: [Mapping; 3] = [Mapping::Early, Mapping::Late, Mapping::Greedy];
}

impl fmt::Display for Mapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Mapping::Early => "early",
            Mapping::Late => "late",
            Mapping::Greedy => "greedy",
        })
    }
}

impl FromStr for Mapping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "early" => Ok(Mapping::Early),
            "late" => Ok(Mapping::Late),
            "greedy" => Ok(Mapping::Greedy),
            _ => Err(Error::InvalidParameter(format!(
                "unknown mapping `{s}` (expected early, late or greedy)"
            ))),
        }
    }
}

/// Order in which parties are added to the clusters.
#[derive(Debug, Clone, Default, PartialEq)]
pub enum PartyOrdering {
    /// Seeded shuffle.
    Random,
    /// Largest database first; equal sizes keep party index order.
    #[default]
    SizeDescending,
    /// Highest externally supplied quality score first.
    QualityDescending(Vec<f64>),
}

impl fmt::Display for PartyOrdering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartyOrdering::Random => f.write_str("random"),
            PartyOrdering::SizeDescending => f.write_str("size-descending"),
            PartyOrdering::QualityDescending(scores) => {
                let scores: Vec<String> = scores.iter().map(f64::to_string).collect();
                write!(f, "quality-descending:{}", scores.join(","))
            }
        }
    }
}

/// Parses `random`, `size-descending` or `quality-descending:s0,s1,...`.
impl FromStr for PartyOrdering {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(PartyOrdering::Random),
            "size-descending" => Ok(PartyOrdering::SizeDescending),
            _ => {
                let scores = s.strip_prefix("quality-descending:").ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "unknown ordering `{s}` (expected random, size-descending or quality-descending:<scores>)"
                    ))
                })?;
                scores
                    .split(',')
                    .map(|v| {
                        v.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::InvalidParameter(format!("bad quality score `{v}`")))
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(PartyOrdering::QualityDescending)
            }
        }
    }
}

/// Returns party indexes in processing order.
pub fn order_parties(sizes: &[usize], ordering: &PartyOrdering, root_seed: u64) -> Result<Vec<usize>> {
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    match ordering {
        PartyOrdering::Random => order.shuffle(&mut seed::stream_rng(root_seed, seed::ORDERING)),
        PartyOrdering::SizeDescending => order.sort_by_key(|&i| std::cmp::Reverse(sizes[i])),
        PartyOrdering::QualityDescending(scores) => {
            if scores.len() != sizes.len() {
                return Err(Error::InvalidParameter(format!(
                    "quality-descending ordering needs {} scores, got {}",
                    sizes.len(),
                    scores.len()
                )));
            }
            if scores.iter().any(|s| !s.is_finite()) {
                return Err(Error::InvalidParameter("quality scores must be finite".into()));
            }
            order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
        }
    }
    Ok(order)
}

/// Parameters of a linkage run.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkageConfig {
    /// Minimum cluster-to-record similarity `s_t` for an edge.
    pub sim_threshold: f64,
    /// Minimum size `s_m` of a reported cluster.
    pub min_subset_size: usize,
    pub ordering: PartyOrdering,
    pub mapping: Mapping,
    /// Late mapping gives up on a block once it holds more than this many
    /// overlapping clusters per record of its largest party.
    pub overlap_factor: usize,
}

impl Default for LinkageConfig {
    fn default() -> Self {
        Self {
            sim_threshold: 0.8,
            min_subset_size: 2,
            ordering: PartyOrdering::default(),
            mapping: Mapping::default(),
            overlap_factor: 10,
        }
    }
}

impl LinkageConfig {
    pub fn validate(&self, num_parties: usize) -> Result<()> {
        if !(self.sim_threshold > 0.0 && self.sim_threshold <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "sim_threshold {} outside (0, 1]",
                self.sim_threshold
            )));
        }
        if self.min_subset_size < 2 || self.min_subset_size > num_parties.max(2) {
            return Err(Error::InvalidParameter(format!(
                "min_subset_size {} outside [2, {}]",
                self.min_subset_size, num_parties
            )));
        }
        if self.overlap_factor == 0 {
            return Err(Error::InvalidParameter("overlap_factor must be at least 1".into()));
        }
        Ok(())
    }
}

/// A cluster of records, at most one per party in any final graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vertex {
    pub id: usize,
    /// Sorted by `(party, position)`.
    pub members: Vec<Member>,
}

/// The clusters of one block after linkage.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClusterGraph {
    pub block_key: String,
    pub vertices: Vec<Vertex>,
    /// Number of cluster-to-record similarity evaluations.
    pub comparisons: u64,
    /// Set when late mapping gave up on the block and fell back to early
    /// mapping.
    pub diagnostic: Option<String>,
}

impl ClusterGraph {
    fn from_clusters(block_key: &str, clusters: Vec<Vec<Member>>, comparisons: u64) -> Self {
        let vertices = clusters
            .into_iter()
            .enumerate()
            .map(|(id, mut members)| {
                members.sort_unstable();
                Vertex { id, members }
            })
            .collect();
        Self {
            block_key: block_key.to_string(),
            vertices,
            comparisons,
            diagnostic: None,
        }
    }
}

/// Records of one block, indexed by party: `block[party]` lists positions
/// into that party's database.
pub type BlockRecords<'a> = &'a [Vec<usize>];

/// Runs the configured mapping on one block.
pub fn link_block(
    block_key: &str,
    block: BlockRecords<'_>,
    party_order: &[usize],
    scorer: &dyn Scorer,
    cfg: &LinkageConfig,
) -> Result<ClusterGraph> {
    match cfg.mapping {
        Mapping::Early => link_early(block_key, block, party_order, scorer, cfg),
        Mapping::Late => link_late(block_key, block, party_order, scorer, cfg),
        Mapping::Greedy => link_greedy(block_key, block, party_order, scorer, cfg),
    }
}

/// Links every block that holds records of at least two parties, in parallel
/// on the current rayon pool. Results come back in block key order.
pub fn link_blocks(
    index: &BlockIndex,
    party_order: &[usize],
    scorer: &dyn Scorer,
    cfg: &LinkageConfig,
) -> Result<Vec<ClusterGraph>> {
    cfg.validate(index.party_count())?;
    let blocks: Vec<(&str, &[Vec<usize>])> = index.linkable().collect();
    blocks
        .par_iter()
        .map(|(key, block)| link_block(key, block, party_order, scorer, cfg))
        .collect()
}

/// Final clusters of a linkage, in canonical order. Cluster ids are
/// one-based positions in [`MatchSet::clusters`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatchSet {
    pub clusters: Vec<Vec<Member>>,
}

impl MatchSet {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// `(cluster_id, member)` rows sorted by cluster id then party.
    pub fn rows(&self) -> impl Iterator<Item = (usize, Member, usize)> + '_ {
        self.clusters
            .iter()
            .enumerate()
            .flat_map(|(i, c)| c.iter().map(move |&m| (i + 1, m, c.len())))
    }
}

/// Keeps every cluster with at least `min_subset_size` members.
pub fn collect_matches(graphs: &[ClusterGraph], min_subset_size: usize) -> MatchSet {
    let mut clusters: Vec<Vec<Member>> = graphs
        .iter()
        .flat_map(|g| &g.vertices)
        .filter(|v| v.members.len() >= min_subset_size)
        .map(|v| v.members.clone())
        .collect();
    clusters.sort_unstable();
    MatchSet { clusters }
}

/// Total similarity evaluations over all graphs.
pub fn total_comparisons(graphs: &[ClusterGraph]) -> u64 {
    graphs.iter().map(|g| g.comparisons).sum()
}

/// Scores every `(cluster, record)` pair and keeps those reaching the
/// threshold. Returns the edges as `(cluster, record, sim)` plus the number
/// of evaluations.
pub(crate) fn threshold_edges(
    round: usize,
    clusters: &[Vec<Member>],
    records: &[Member],
    scorer: &dyn Scorer,
    threshold: f64,
) -> Result<(Vec<(usize, usize, f64)>, u64)> {
    let per_cluster: Vec<Vec<(usize, usize, f64)>> = clusters
        .par_iter()
        .enumerate()
        .map(|(ci, cluster)| {
            let mut out = Vec::new();
            for (ri, &rec) in records.iter().enumerate() {
                let sim = scorer.similarity(round, cluster, rec)?;
                if sim >= threshold {
                    out.push((ci, ri, sim));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let comparisons = (clusters.len() * records.len()) as u64;
    Ok((per_cluster.into_iter().flatten().collect(), comparisons))
}

/// One-to-one selection over a sparse edge list. Only rows and columns that
/// carry an edge enter the dense solver; their relative order is preserved,
/// so tie-breaking still favours lower cluster and record positions.
pub(crate) fn select_edges(edges: &[(usize, usize, f64)], use_greedy: bool) -> Vec<(usize, usize)> {
    if edges.is_empty() {
        return Vec::new();
    }
    let mut rows: Vec<usize> = edges.iter().map(|e| e.0).collect();
    let mut cols: Vec<usize> = edges.iter().map(|e| e.1).collect();
    rows.sort_unstable();
    rows.dedup();
    cols.sort_unstable();
    cols.dedup();
    let mut matrix = SimilarityMatrix::zeros(rows.len(), cols.len());
    for &(r, c, sim) in edges {
        let i = rows.binary_search(&r).unwrap();
        let j = cols.binary_search(&c).unwrap();
        matrix.set(i, j, sim.clamp(0.0, 1.0));
    }
    let assignment = if use_greedy {
        greedy(&matrix, &(0..rows.len()).collect::<Vec<_>>())
    } else {
        hungarian(&matrix)
    };
    assignment.pairs.into_iter().map(|(i, j)| (rows[i], cols[j])).collect()
}

fn members_of(block: BlockRecords<'_>, party: usize) -> Vec<Member> {
    block
        .get(party)
        .map(|positions| positions.iter().map(|&pos| (party, pos)).collect())
        .unwrap_or_default()
}

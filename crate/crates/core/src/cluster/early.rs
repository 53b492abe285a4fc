use super::{members_of, select_edges, threshold_edges, BlockRecords, ClusterGraph, LinkageConfig, Member, Scorer};
use crate::error::Result;

/// Early mapping: after the first party seeds singleton clusters, each later
/// party's records are mapped one-to-one onto the clusters by an optimal
/// assignment over the edges with similarity at least `s_t`. Records left
/// unmapped start new singleton clusters.
pub fn link_early(
    block_key: &str,
    block: BlockRecords<'_>,
    party_order: &[usize],
    scorer: &dyn Scorer,
    cfg: &LinkageConfig,
) -> Result<ClusterGraph> {
    link_mapped(block_key, block, party_order, scorer, cfg, false)
}

/// Early mapping with a greedy assignment: clusters are visited in creation
/// order and each takes its most similar free record.
pub fn link_greedy(
    block_key: &str,
    block: BlockRecords<'_>,
    party_order: &[usize],
    scorer: &dyn Scorer,
    cfg: &LinkageConfig,
) -> Result<ClusterGraph> {
    link_mapped(block_key, block, party_order, scorer, cfg, true)
}

fn link_mapped(
    block_key: &str,
    block: BlockRecords<'_>,
    party_order: &[usize],
    scorer: &dyn Scorer,
    cfg: &LinkageConfig,
    use_greedy: bool,
) -> Result<ClusterGraph> {
    let mut clusters: Vec<Vec<Member>> = Vec::new();
    let mut comparisons = 0u64;
    for (round, &party) in party_order.iter().enumerate() {
        let records = members_of(block, party);
        if records.is_empty() {
            continue;
        }
        let (edges, count) = threshold_edges(round, &clusters, &records, scorer, cfg.sim_threshold)?;
        comparisons += count;
        let mut matched = vec![false; records.len()];
        for (ci, ri) in select_edges(&edges, use_greedy) {
            clusters[ci].push(records[ri]);
            matched[ri] = true;
        }
        clusters.extend(
            records
                .iter()
                .zip(&matched)
                .filter(|(_, &m)| !m)
                .map(|(&rec, _)| vec![rec]),
        );
    }
    Ok(ClusterGraph::from_clusters(block_key, clusters, comparisons))
}

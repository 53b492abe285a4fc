use std::collections::{BTreeMap, HashMap};

use super::{
    link_early, members_of, select_edges, threshold_edges, BlockRecords, ClusterGraph, LinkageConfig, Member, Scorer,
};
use crate::error::Result;

/// Late mapping.
///
/// Merge phase: every edge `(cluster, record)` with similarity at least
/// `s_t` yields the cluster extended by that record, so a cluster or a
/// record with several edges ends up in several overlapping clusters.
/// Clusters without an edge are kept; records without one become
/// singletons.
///
/// Split-map phase: for each party in order, that party's records are split
/// out of every cluster. Identical remainders collapse into one vertex, and
/// each split record is mapped one-to-one back onto the remainders it was
/// part of. After all parties the clusters are disjoint.
///
/// If the merge phase produces more than `overlap_factor` clusters per record
/// of the block's largest party, the block is abandoned and linked with early
/// mapping instead; [`ClusterGraph::diagnostic`] records this.
pub fn link_late(
    block_key: &str,
    block: BlockRecords<'_>,
    party_order: &[usize],
    scorer: &dyn Scorer,
    cfg: &LinkageConfig,
) -> Result<ClusterGraph> {
    let largest = party_order
        .iter()
        .map(|&p| block.get(p).map_or(0, Vec::len))
        .max()
        .unwrap_or(0);
    let cap = cfg.overlap_factor.saturating_mul(largest);

    let mut clusters: Vec<Vec<Member>> = Vec::new();
    let mut comparisons = 0u64;
    for (round, &party) in party_order.iter().enumerate() {
        let records = members_of(block, party);
        if records.is_empty() {
            continue;
        }
        let (edges, count) = threshold_edges(round, &clusters, &records, scorer, cfg.sim_threshold)?;
        comparisons += count;
        clusters = merge_all(clusters, &records, &edges);
        if clusters.len() > cap {
            let mut graph = link_early(block_key, block, party_order, scorer, cfg)?;
            graph.comparisons += comparisons;
            graph.diagnostic = Some(format!(
                "late mapping abandoned block {block_key}: {} overlapping clusters exceed the cap of {cap}; \
                 block linked with early mapping",
                clusters.len()
            ));
            return Ok(graph);
        }
    }

    for (step, &party) in party_order.iter().enumerate() {
        let round = party_order.len() + step;
        let (next, count) = split_and_map(clusters, party, round, scorer, cfg.sim_threshold)?;
        clusters = next;
        comparisons += count;
    }
    Ok(ClusterGraph::from_clusters(block_key, clusters, comparisons))
}

/// Applies every edge without a one-to-one constraint.
fn merge_all(clusters: Vec<Vec<Member>>, records: &[Member], edges: &[(usize, usize, f64)]) -> Vec<Vec<Member>> {
    let mut by_cluster: Vec<Vec<usize>> = vec![Vec::new(); clusters.len()];
    let mut has_edge = vec![false; records.len()];
    for &(ci, ri, _) in edges {
        by_cluster[ci].push(ri);
        has_edge[ri] = true;
    }
    let mut out = Vec::with_capacity(clusters.len() + edges.len());
    for (cluster, recs) in clusters.into_iter().zip(by_cluster) {
        if recs.is_empty() {
            out.push(cluster);
            continue;
        }
        for ri in recs {
            let mut extended = cluster.clone();
            extended.push(records[ri]);
            out.push(extended);
        }
    }
    out.extend(
        records
            .iter()
            .zip(&has_edge)
            .filter(|(_, &e)| !e)
            .map(|(&r, _)| vec![r]),
    );
    out
}

/// One split-map-merge iteration for `party`.
fn split_and_map(
    clusters: Vec<Vec<Member>>,
    party: usize,
    round: usize,
    scorer: &dyn Scorer,
    threshold: f64,
) -> Result<(Vec<Vec<Member>>, u64)> {
    let mut remainders: Vec<Vec<Member>> = Vec::new();
    let mut remainder_index: HashMap<Vec<Member>, usize> = HashMap::new();
    // split record -> remainders it was part of, in first-seen order
    let mut former: BTreeMap<Member, Vec<usize>> = BTreeMap::new();

    let mut intern = |mut members: Vec<Member>, remainders: &mut Vec<Vec<Member>>| -> usize {
        members.sort_unstable();
        *remainder_index.entry(members.clone()).or_insert_with(|| {
            remainders.push(members);
            remainders.len() - 1
        })
    };

    for cluster in clusters {
        let (split, rest): (Vec<Member>, Vec<Member>) = cluster.into_iter().partition(|m| m.0 == party);
        if split.is_empty() {
            intern(rest, &mut remainders);
            continue;
        }
        let target = (!rest.is_empty()).then(|| intern(rest, &mut remainders));
        for record in split {
            let entry = former.entry(record).or_default();
            if let Some(t) = target {
                if !entry.contains(&t) {
                    entry.push(t);
                }
            }
        }
    }

    // Larger remainders get the lower ids, so a record whose similarity ties
    // between a cluster and a leftover fragment of it stays with the cluster.
    let mut by_size: Vec<usize> = (0..remainders.len()).collect();
    by_size.sort_by_key(|&ri| (std::cmp::Reverse(remainders[ri].len()), ri));
    let mut rank = vec![0usize; remainders.len()];
    for (pos, &ri) in by_size.iter().enumerate() {
        rank[ri] = pos;
    }

    let singles: Vec<Member> = former.keys().copied().collect();
    let mut edges = Vec::new();
    let mut comparisons = 0u64;
    for (si, (&record, targets)) in former.iter().enumerate() {
        for &ri in targets {
            comparisons += 1;
            let sim = scorer.similarity(round, &remainders[ri], record)?;
            if sim >= threshold {
                edges.push((rank[ri], si, sim));
            }
        }
    }

    let mut mapped = vec![false; singles.len()];
    for (pos, si) in select_edges(&edges, false) {
        remainders[by_size[pos]].push(singles[si]);
        mapped[si] = true;
    }
    remainders.extend(singles.iter().zip(&mapped).filter(|(_, &m)| !m).map(|(&s, _)| vec![s]));
    Ok((remainders, comparisons))
}

//! End-to-end linkage: encode at the parties, block, cluster at the linkage unit.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::blocking::{blocking_key, BlockIndex};
use crate::cluster::{
    collect_matches, link_blocks, order_parties, total_comparisons, ClusterGraph, DirectScorer, LinkageConfig,
    MatchSet, SimilarityKind,
};
use crate::encode::{BloomFilter, EncodingParams};
use crate::error::{Error, Result};
use crate::protocol::{ProtocolScorer, ProtocolStats, RoundEncodings};
use crate::record::{EncodedDatabase, EncodedRecord, PlainRecord};
use crate::seed;

/// Blocking attributes used unless configured otherwise.
pub const DEFAULT_BLOCK_ATTRS: [&str; 2] = ["first_name", "last_name"];

/// How the linkage unit obtains similarities.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Mode {
    /// Parties send their filters; the linkage unit compares them directly.
    #[default]
    BfDirect,
    /// Every similarity is computed from a secure sum over per-round encodings.
    CbfProtocol,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Mode::BfDirect => "bf-direct",
            Mode::CbfProtocol => "cbf-protocol",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bf-direct" => Ok(Mode::BfDirect),
            "cbf-protocol" => Ok(Mode::CbfProtocol),
            _ => Err(Error::InvalidParameter(format!(
                "unknown mode `{s}` (expected bf-direct or cbf-protocol)"
            ))),
        }
    }
}

/// Everything a linkage run needs besides the data.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub encoding: EncodingParams,
    pub linkage: LinkageConfig,
    pub block_attrs: Vec<String>,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            encoding: EncodingParams::default(),
            linkage: LinkageConfig::default(),
            block_attrs: DEFAULT_BLOCK_ATTRS.iter().map(|s| s.to_string()).collect(),
            seed: 0,
        }
    }
}

impl PipelineConfig {
    fn attrs(&self) -> Vec<&str> {
        self.block_attrs.iter().map(String::as_str).collect()
    }
}

/// Result of linking all blocks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinkOutcome {
    pub matches: MatchSet,
    pub party_order: Vec<usize>,
    pub blocks: usize,
    pub comparisons: u64,
    /// Messages from blocks that late mapping gave up on.
    pub diagnostics: Vec<String>,
    pub protocol: Option<ProtocolStats>,
}

impl LinkOutcome {
    fn from_graphs(graphs: &[ClusterGraph], party_order: Vec<usize>, min_subset_size: usize) -> Self {
        Self {
            matches: collect_matches(graphs, min_subset_size),
            party_order,
            blocks: graphs.len(),
            comparisons: total_comparisons(graphs),
            diagnostics: graphs.iter().filter_map(|g| g.diagnostic.clone()).collect(),
            protocol: None,
        }
    }
}

/// Party-side step: blocking key and filter for every record.
pub fn encode_party(
    party: usize,
    records: &[PlainRecord],
    params: &EncodingParams,
    block_attrs: &[&str],
) -> Result<EncodedDatabase> {
    let records = records
        .par_iter()
        .map(|r| {
            Ok(EncodedRecord {
                record_id: r.record_id.clone(),
                bkv: blocking_key(r, block_attrs)?,
                filter: r.encode(params)?,
                entity_id: r.entity_id.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EncodedDatabase { party, records })
}

pub fn encode_parties(parties: &[Vec<PlainRecord>], cfg: &PipelineConfig) -> Result<Vec<EncodedDatabase>> {
    cfg.encoding.validate()?;
    let attrs = cfg.attrs();
    parties
        .iter()
        .enumerate()
        .map(|(i, records)| encode_party(i, records, &cfg.encoding, &attrs))
        .collect()
}

fn block_index(dbs: &[EncodedDatabase]) -> BlockIndex {
    let keys: Vec<Vec<&str>> = dbs
        .iter()
        .map(|db| db.records.iter().map(|r| r.bkv.as_str()).collect())
        .collect();
    BlockIndex::from_keys(&keys)
}

fn party_order(sizes: &[usize], cfg: &PipelineConfig) -> Result<Vec<usize>> {
    cfg.linkage.validate(sizes.len())?;
    order_parties(sizes, &cfg.linkage.ordering, cfg.seed)
}

/// Linkage unit in direct mode: compares the received filters.
pub fn link_encoded(dbs: &[EncodedDatabase], cfg: &PipelineConfig) -> Result<LinkOutcome> {
    let sizes: Vec<usize> = dbs.iter().map(EncodedDatabase::len).collect();
    let order = party_order(&sizes, cfg)?;
    let filters: Vec<Vec<BloomFilter>> = dbs
        .iter()
        .map(|db| db.records.iter().map(|r| r.filter.clone()).collect())
        .collect();
    let scorer = DirectScorer::new(filters, SimilarityKind::Average);
    let graphs = link_blocks(&block_index(dbs), &order, &scorer, &cfg.linkage)?;
    Ok(LinkOutcome::from_graphs(&graphs, order, cfg.linkage.min_subset_size))
}

/// Convenience: encode and link in direct mode.
pub fn link_direct(parties: &[Vec<PlainRecord>], cfg: &PipelineConfig) -> Result<LinkOutcome> {
    link_encoded(&encode_parties(parties, cfg)?, cfg)
}

/// Blocking keys only, computed at the parties.
pub fn party_block_index(parties: &[Vec<PlainRecord>], cfg: &PipelineConfig) -> Result<BlockIndex> {
    let attrs = cfg.attrs();
    let keys = parties
        .iter()
        .map(|p| p.iter().map(|r| blocking_key(r, &attrs)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockIndex::from_keys(&keys))
}

/// Protocol mode: every similarity comes from a secure summation over
/// per-round re-encodings. The parties' plaintext stays with the simulated
/// parties; the linkage unit sees blocking keys and sums only. Returns the
/// scorer as well so its transcript statistics and exposures can be read.
pub fn link_protocol(parties: &[Vec<PlainRecord>], cfg: &PipelineConfig) -> Result<(LinkOutcome, ProtocolScorer)> {
    cfg.encoding.validate()?;
    let sizes: Vec<usize> = parties.iter().map(Vec::len).collect();
    let order = party_order(&sizes, cfg)?;
    let index = party_block_index(parties, cfg)?;
    let encodings = RoundEncodings::for_linkage(cfg.encoding.clone(), parties.to_vec());
    let scorer = ProtocolScorer::new(encodings, seed::sub_seed(cfg.seed, seed::BLINDING));
    let graphs = link_blocks(&index, &order, &scorer, &cfg.linkage)?;
    let mut outcome = LinkOutcome::from_graphs(&graphs, order, cfg.linkage.min_subset_size);
    outcome.protocol = Some(scorer.stats());
    Ok((outcome, scorer))
}

/// Direct mode over the same per-round encodings and the same set-level Dice
/// as [`link_protocol`]. Both must produce the same matches.
pub fn link_joint_reference(parties: &[Vec<PlainRecord>], cfg: &PipelineConfig) -> Result<LinkOutcome> {
    cfg.encoding.validate()?;
    let sizes: Vec<usize> = parties.iter().map(Vec::len).collect();
    let order = party_order(&sizes, cfg)?;
    let index = party_block_index(parties, cfg)?;
    let encodings = RoundEncodings::for_linkage(cfg.encoding.clone(), parties.to_vec());
    let scorer = DirectScorer::new(encodings, SimilarityKind::Joint);
    let graphs = link_blocks(&index, &order, &scorer, &cfg.linkage)?;
    Ok(LinkOutcome::from_graphs(&graphs, order, cfg.linkage.min_subset_size))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::Mapping;
    use crate::datagen::{generate_synthetic, OverlapSpec};
    use crate::eval::score_linkage;

    #[test]
    fn clean_small_run_is_accurate() {
        let ds = generate_synthetic(&OverlapSpec::quarter_split(3, 300, 5)).unwrap();
        for mapping in Mapping::ALL {
            let mut cfg = PipelineConfig::default();
            cfg.linkage.mapping = mapping;
            let out = link_direct(&ds.parties, &cfg).unwrap();
            let q = score_linkage(&out.matches, &ds.truth, 2).unwrap();
            assert!(q.f_measure > 0.9, "{mapping}: {q:?}");
        }
    }

    #[test]
    fn protocol_matches_joint_reference() {
        let ds = generate_synthetic(&OverlapSpec::quarter_split(3, 120, 6).with_corruption(0.2)).unwrap();
        let cfg = PipelineConfig::default();
        let (protocol, scorer) = link_protocol(&ds.parties, &cfg).unwrap();
        let reference = link_joint_reference(&ds.parties, &cfg).unwrap();
        assert_eq!(protocol.matches, reference.matches);
        assert_eq!(protocol.comparisons, reference.comparisons);
        let stats = scorer.stats();
        assert_eq!(stats.sessions, protocol.comparisons);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("cbf-protocol".parse::<Mode>().unwrap(), Mode::CbfProtocol);
        assert!("bf".parse::<Mode>().is_err());
        assert_eq!(Mode::BfDirect.to_string(), "bf-direct");
    }
}

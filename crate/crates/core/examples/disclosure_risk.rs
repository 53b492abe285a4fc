//! Linkage attack on what the linkage unit sees: individual filters in
//! direct mode against secure sums in protocol mode.

use mpprl::datagen::{generate_synthetic, OverlapSpec};
use mpprl::eval::{linkage_attack, targets_from_exposures};
use mpprl::pipeline::{encode_parties, link_protocol, PipelineConfig};

fn main() -> mpprl::error::Result<()> {
    let cfg = PipelineConfig::default();
    for corruption in [0.0, 0.2] {
        let ds = generate_synthetic(&OverlapSpec::quarter_split(5, 1000, 3).with_corruption(corruption))?;
        let (outcome, scorer) = link_protocol(&ds.parties, &cfg)?;
        let stats = outcome.protocol.expect("protocol mode records statistics");
        let plain: Vec<Vec<_>> = encode_parties(&ds.parties, &cfg)?
            .into_iter()
            .map(|db| db.records.into_iter().map(|r| r.filter).collect())
            .collect();
        let (cbf_targets, bf_targets) = targets_from_exposures(&scorer.exposures(), &plain, &cfg.encoding)?;
        let global = ds.parties.concat();
        let bf = linkage_attack(&bf_targets, &global, &cfg.encoding)?;
        let cbf = linkage_attack(&cbf_targets, &global, &cfg.encoding)?;
        println!(
            "corruption {corruption:.1}: {} sessions, {} messages, {} exposed records",
            stats.sessions,
            stats.messages,
            bf_targets.len()
        );
        println!(
            "  filters: DR mean {:.4}  DR marketer {:.4}",
            bf.dr_mean, bf.dr_marketer
        );
        println!(
            "  sums:    DR mean {:.4}  DR marketer {:.4}",
            cbf.dr_mean, cbf.dr_marketer
        );
    }
    Ok(())
}

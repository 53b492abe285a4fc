//! Early, late and greedy mapping side by side on data with many
//! near-duplicate relatives.

use mpprl::cluster::Mapping;
use mpprl::datagen::{generate_synthetic, OverlapSpec};
use mpprl::eval::score_linkage;
use mpprl::pipeline::{link_direct, PipelineConfig};

fn main() -> mpprl::error::Result<()> {
    let mut spec = OverlapSpec::quarter_split(5, 3000, 2);
    spec.relative_rate = 0.4;
    let ds = generate_synthetic(&spec)?;
    for mapping in Mapping::ALL {
        let mut cfg = PipelineConfig::default();
        cfg.linkage.mapping = mapping;
        let out = link_direct(&ds.parties, &cfg)?;
        let q = score_linkage(&out.matches, &ds.truth, 2)?;
        println!(
            "{mapping:<6} F {:.4} (P {:.4} R {:.4}) comparisons {:>7} blocks falling back to early: {}",
            q.f_measure,
            q.precision,
            q.recall,
            out.comparisons,
            out.diagnostics.len()
        );
    }
    Ok(())
}

//! Comparison counts and runtime of early mapping as the number of records
//! and parties grow, on generated data and on a single worst-case block.

use std::time::Instant;

use mpprl::blocking::BlockIndex;
use mpprl::cluster::{link_blocks, total_comparisons, DirectScorer, LinkageConfig, SimilarityKind};
use mpprl::datagen::{generate_synthetic, OverlapSpec};
use mpprl::encode::EncodingParams;
use mpprl::pipeline::{link_direct, PipelineConfig};

fn single_block_comparisons(p: usize, n: usize) -> mpprl::error::Result<u64> {
    let spec = OverlapSpec {
        full_overlap_fraction: 0.0,
        subset_overlap_fraction: 0.0,
        subset_size_distribution: vec![0.0; p.saturating_sub(2)],
        ..OverlapSpec::quarter_split(p, n, 9)
    };
    let ds = generate_synthetic(&spec)?;
    let params = EncodingParams::default();
    let filters = ds
        .parties
        .iter()
        .map(|party| party.iter().map(|r| r.encode(&params)).collect())
        .collect::<mpprl::error::Result<Vec<Vec<_>>>>()?;
    let keys: Vec<Vec<&str>> = ds.parties.iter().map(|party| vec!["all"; party.len()]).collect();
    let index = BlockIndex::from_keys(&keys);
    let order: Vec<usize> = (0..p).collect();
    let scorer = DirectScorer::new(filters, SimilarityKind::Average);
    let graphs = link_blocks(&index, &order, &scorer, &LinkageConfig::default())?;
    Ok(total_comparisons(&graphs))
}

fn main() -> mpprl::error::Result<()> {
    println!("generated data, Soundex blocks");
    for p in [3, 5, 7, 10] {
        let ds = generate_synthetic(&OverlapSpec::quarter_split(p, 5000, 1))?;
        let start = Instant::now();
        let out = link_direct(&ds.parties, &PipelineConfig::default())?;
        println!(
            "  p={p:<2} n=5000 comparisons {:>8} time {:?}",
            out.comparisons,
            start.elapsed()
        );
    }

    println!("single block, no matches");
    for n in [250, 500, 1000] {
        let c = single_block_comparisons(3, n)?;
        println!(
            "  p=3  n={n:<5} comparisons {c:>9} ({:.2} n^2)",
            c as f64 / (n * n) as f64
        );
    }
    for p in [3, 5, 7, 10] {
        let c = single_block_comparisons(p, 200)?;
        println!(
            "  p={p:<2} n=200   comparisons {c:>9} ({:.2} p^2 n^2)",
            c as f64 / (p * p * 200 * 200) as f64
        );
    }
    Ok(())
}

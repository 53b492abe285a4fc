//! Early mapping on a hand-built block of four parties, then on generated
//! data.

use mpprl::cluster::{collect_matches, link_early, LinkageConfig, Member, TableScorer};
use mpprl::datagen::{generate_synthetic, OverlapSpec};
use mpprl::eval::score_linkage;
use mpprl::pipeline::{link_direct, PipelineConfig};

/// `r{party}{record}`, one-based.
fn r(code: usize) -> Member {
    (code / 10 - 1, code % 10 - 1)
}

fn name(m: &Member) -> String {
    format!("r{}{}", m.0 + 1, m.1 + 1)
}

fn main() -> mpprl::error::Result<()> {
    let mut table = TableScorer::new();
    for (a, b, s) in [
        (22, 11, 0.9),
        (23, 13, 0.85),
        (21, 14, 0.8),
        (32, 11, 0.9),
        (32, 22, 0.9),
        (31, 11, 0.85),
        (31, 22, 0.8),
        (32, 12, 0.8),
        (33, 13, 0.9),
        (33, 23, 0.9),
        (34, 14, 0.7),
        (34, 21, 0.7),
        (34, 12, 0.5),
        (41, 13, 0.9),
        (41, 23, 0.85),
        (41, 33, 0.8),
        (43, 12, 0.8),
        (43, 32, 0.9),
    ] {
        table.set(r(a), r(b), s);
    }
    let block: Vec<Vec<usize>> = [4, 3, 4, 3].iter().map(|&n| (0..n).collect()).collect();
    let cfg = LinkageConfig {
        sim_threshold: 0.75,
        ..Default::default()
    };
    let graph = link_early("demo", &block, &[0, 1, 2, 3], &table, &cfg)?;
    for s_m in [3, 2] {
        let matches = collect_matches(std::slice::from_ref(&graph), s_m);
        let clusters: Vec<Vec<String>> = matches.clusters.iter().map(|c| c.iter().map(name).collect()).collect();
        println!("s_m = {s_m}: {clusters:?}");
    }

    let ds = generate_synthetic(&OverlapSpec::quarter_split(4, 2000, 11))?;
    let out = link_direct(&ds.parties, &PipelineConfig::default())?;
    let q = score_linkage(&out.matches, &ds.truth, 2)?;
    println!(
        "generated 4 x 2000: {} clusters, {} comparisons, P {:.4} R {:.4} F {:.4}",
        out.matches.len(),
        out.comparisons,
        q.precision,
        q.recall,
        q.f_measure
    );
    Ok(())
}

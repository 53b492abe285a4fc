//! Generate, encode, link and evaluate, writing every intermediate file to
//! a directory (default: a fresh one under the system temp dir).

use std::path::PathBuf;

use mpprl::cli::{cmd_encode, cmd_evaluate, cmd_generate, cmd_link, RunConfig, Settings};

fn main() -> mpprl::error::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("mpprl-end-to-end"));
    let cfg = RunConfig::resolve(Settings {
        seed: Some(5),
        num_parties: Some(4),
        records_per_party: Some(2000),
        corruption_rate: Some(0.2),
        mapping: Some("late".into()),
        ..Default::default()
    })?;

    let parties = cmd_generate(&cfg, &dir.join("plain"))?;
    let encoded = cmd_encode(&cfg, &parties, &dir.join("encoded"))?;
    let matches = dir.join("matches.csv");
    let outcome = cmd_link(&cfg, &encoded, &matches, None)?;
    println!(
        "{} clusters from {} blocks, {} comparisons",
        outcome.matches.len(),
        outcome.blocks,
        outcome.comparisons
    );
    let row = cmd_evaluate(&cfg, &encoded, &matches, Some(&dir.join("report.csv")))?;
    for (k, v) in row.iter().skip_while(|(k, _)| k != "true_matches") {
        println!("{k:>18} {v}");
    }
    println!("files in {}", dir.display());
    Ok(())
}

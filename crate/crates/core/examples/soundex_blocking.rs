//! Soundex blocking on generated data: block counts and how many true
//! matches end up in a shared block.

use mpprl::blocking::{build_blocks, soundex};
use mpprl::datagen::{generate_synthetic, OverlapSpec};

fn main() -> mpprl::error::Result<()> {
    for name in ["robert", "rupert", "smith", "smyth", "christen"] {
        println!("{name:<10} {}", soundex(name));
    }

    for corruption in [0.0, 0.2, 0.4] {
        let ds = generate_synthetic(&OverlapSpec::quarter_split(5, 2000, 1).with_corruption(corruption))?;
        let index = build_blocks(&ds.parties, &["first_name", "last_name"])?;
        let entities: Vec<Vec<&str>> = ds
            .parties
            .iter()
            .map(|p| p.iter().map(|r| r.entity_id.as_deref().unwrap_or("")).collect())
            .collect();
        println!(
            "corruption {corruption:.1}: {} blocks, {} with records from 2+ parties, pairs completeness {:.3}",
            index.len(),
            index.linkable().count(),
            index.pairs_completeness(&entities)
        );
    }
    Ok(())
}

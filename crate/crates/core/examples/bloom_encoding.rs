//! Encodes a few records as Bloom filters and compares pairwise Dice with
//! the Dice coefficient read from their counting Bloom filter.

use mpprl::encode::{dice_bf, dice_cbf, encode_record, sum_to_cbf, EncodingParams};

fn main() -> mpprl::error::Result<()> {
    let params = EncodingParams::default();
    let records = [
        ["sarah", "miller", "raleigh", "27601"],
        ["sara", "miller", "raleigh", "27601"],
        ["sarah", "millar", "raleigh", "27610"],
    ];
    let filters = records
        .iter()
        .map(|r| encode_record(r, &params))
        .collect::<mpprl::error::Result<Vec<_>>>()?;

    for (r, f) in records.iter().zip(&filters) {
        println!("{:<40} {} bits set", r.join(" "), f.cardinality());
    }
    for i in 0..filters.len() {
        for j in i + 1..filters.len() {
            println!("dice(r{i}, r{j}) = {:.4}", filters[i].dice(&filters[j]));
        }
    }

    let cbf = sum_to_cbf(&filters)?;
    println!(
        "all three: dice over filters = {:.4}, dice over their sum = {:.4}",
        dice_bf(&filters)?,
        dice_cbf(&cbf)?
    );

    let bytes = filters[0].to_bytes();
    println!("serialized filter: {} bytes", bytes.len());
    Ok(())
}

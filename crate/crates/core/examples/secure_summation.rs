//! One secure summation between three parties: the transcript shows only
//! blinded vectors, and the linkage unit recovers the exact counts.

use mpprl::encode::{dice_cbf, encode_record, EncodingParams};
use mpprl::protocol::{round_salt, secure_sum, write_transcript, SummationSession};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn main() -> mpprl::error::Result<()> {
    let params = EncodingParams::new(64, 4, 2)?.with_salt(round_salt(b"demo", 2));
    let filters = [
        encode_record(&["peter", "christen"], &params)?,
        encode_record(&["peter", "christensen"], &params)?,
        encode_record(&["pete", "christen"], &params)?,
    ];
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let mut session = SummationSession::new(1, params.bf_length, &mut rng);
    let inputs: Vec<(usize, &_)> = filters.iter().enumerate().collect();
    let cbf = secure_sum(&inputs, &mut session)?;

    for m in &session.transcript {
        println!(
            "step {} {} -> {}: {:?}...",
            m.step,
            m.sender,
            m.receiver,
            &m.vector[..4]
        );
    }
    println!("counts: {:?}", cbf.counts());
    println!("dice of the three records: {:.4}", dice_cbf(&cbf)?);
    write_transcript(std::io::stdout().lock(), &[&session])?;
    Ok(())
}

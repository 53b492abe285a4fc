//! Simulated secure summation between parties and the linkage unit.
//!
//! To score a candidate cluster against a new record, the linkage unit opens
//! a session with a fresh random vector `R`. It sends `R` to the first
//! involved party. Each party adds its filter to the running vector and
//! forwards it. The last party returns the total to the linkage unit, which
//! subtracts `R`. All arithmetic is modulo 2^32, so every intermediate message
//! is uniformly distributed and reveals nothing about individual filters. The
//! linkage unit learns only the counting Bloom filter of the set, from which
//! the Dice coefficient follows.
//!
//! Parties re-encode their records with a new salt in each mapping round, so
//! filters seen in different rounds cannot be compared with each other.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::sync::{Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::cluster::{FilterSource, Member, Scorer};
use crate::encode::{dice_cbf, BloomFilter, CountingBloomFilter, EncodingParams};
use crate::error::{Error, Result};
use crate::record::PlainRecord;

/// Encoding salt of a mapping round, derived from the base salt.
pub fn round_salt(base: &[u8], round: usize) -> Vec<u8> {
    let mut salt = base.to_vec();
    salt.extend_from_slice(b"/round/");
    salt.extend_from_slice(&(round as u64).to_le_bytes());
    salt
}

/// A data owner: its plaintext records and the encoding of the current round.
#[derive(Debug, Clone)]
pub struct PartyState {
    pub party_index: usize,
    pub records: Vec<PlainRecord>,
    pub current_salt: Vec<u8>,
    pub filters: Vec<BloomFilter>,
}

impl PartyState {
    pub fn new(party_index: usize, records: Vec<PlainRecord>) -> Self {
        Self {
            party_index,
            records,
            current_salt: Vec::new(),
            filters: Vec::new(),
        }
    }

    /// Re-encodes every record under the salt of `round`.
    pub fn reencode(&mut self, base: &EncodingParams, round: usize) -> Result<()> {
        let params = base.clone().with_salt(round_salt(&base.salt, round));
        self.filters = self
            .records
            .par_iter()
            .map(|r| r.encode(&params))
            .collect::<Result<_>>()?;
        self.current_salt = params.salt;
        Ok(())
    }
}

/// Per-round encodings of all parties, computed on first use.
pub struct RoundEncodings {
    base: EncodingParams,
    parties: Vec<Vec<PlainRecord>>,
    rounds: Vec<OnceLock<Result<Vec<Vec<BloomFilter>>, String>>>,
}

impl RoundEncodings {
    /// Supports rounds `0..max_rounds`.
    pub fn new(base: EncodingParams, parties: Vec<Vec<PlainRecord>>, max_rounds: usize) -> Self {
        Self {
            base,
            parties,
            rounds: (0..max_rounds).map(|_| OnceLock::new()).collect(),
        }
    }

    /// Enough rounds for any mapping over `num_parties` parties.
    pub fn for_linkage(base: EncodingParams, parties: Vec<Vec<PlainRecord>>) -> Self {
        let rounds = 2 * parties.len();
        Self::new(base, parties, rounds)
    }

    pub fn base(&self) -> &EncodingParams {
        &self.base
    }

    pub fn parties(&self) -> &[Vec<PlainRecord>] {
        &self.parties
    }

    pub fn params_for(&self, round: usize) -> EncodingParams {
        self.base.clone().with_salt(round_salt(&self.base.salt, round))
    }

    pub fn round(&self, round: usize) -> Result<&[Vec<BloomFilter>]> {
        let slot = self
            .rounds
            .get(round)
            .ok_or_else(|| Error::InvalidParameter(format!("round {round} exceeds the prepared rounds")))?;
        let encoded = slot.get_or_init(|| {
            self.parties
                .iter()
                .enumerate()
                .map(|(i, recs)| {
                    let mut state = PartyState::new(i, recs.clone());
                    state.reencode(&self.base, round)?;
                    Ok(state.filters)
                })
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.to_string())
        });
        encoded.as_deref().map_err(|e| Error::Data(e.clone()))
    }
}

impl FilterSource for RoundEncodings {
    fn filter(&self, round: usize, (party, pos): Member) -> Result<&BloomFilter> {
        self.round(round)?
            .get(party)
            .and_then(|f| f.get(pos))
            .ok_or_else(|| Error::UnknownRecord {
                party,
                record: pos.to_string(),
            })
    }
}

/// Sender or receiver of a protocol message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Actor {
    LinkageUnit,
    Party(usize),
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Actor::LinkageUnit => f.write_str("LU"),
            Actor::Party(p) => write!(f, "P{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub step: usize,
    pub sender: Actor,
    pub receiver: Actor,
    pub vector: Vec<u32>,
}

impl Message {
    /// Hex of the first eight bytes of SHA-256 over the little-endian vector.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for v in &self.vector {
            hasher.update(v.to_le_bytes());
        }
        hasher.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One summation: the linkage unit's random vector and the message log.
#[derive(Debug, Clone)]
pub struct SummationSession {
    pub session_id: u64,
    pub random_vector: Vec<u32>,
    pub transcript: Vec<Message>,
    used: bool,
}

impl SummationSession {
    /// Draws `R` uniformly from `[0, 2^32)^len`.
    pub fn new<R: Rng>(session_id: u64, len: usize, rng: &mut R) -> Self {
        Self::with_vector(session_id, (0..len).map(|_| rng.gen()).collect())
    }

    pub fn with_vector(session_id: u64, random_vector: Vec<u32>) -> Self {
        Self {
            session_id,
            random_vector,
            transcript: Vec::new(),
            used: false,
        }
    }
}

/// Sums filters held by distinct parties. `inputs` are `(party, filter)` in
/// the order the running vector travels.
pub fn secure_sum(inputs: &[(usize, &BloomFilter)], session: &mut SummationSession) -> Result<CountingBloomFilter> {
    if session.used {
        return Err(Error::SessionReused(session.session_id));
    }
    if inputs.is_empty() {
        return Err(Error::TooFewFilters { needed: 1, got: 0 });
    }
    let len = session.random_vector.len();
    for (_, f) in inputs {
        if f.len() != len {
            return Err(Error::LengthMismatch {
                expected: len,
                actual: f.len(),
            });
        }
    }
    session.used = true;

    let mut running = session.random_vector.clone();
    session.transcript.push(Message {
        step: 1,
        sender: Actor::LinkageUnit,
        receiver: Actor::Party(inputs[0].0),
        vector: running.clone(),
    });
    for (i, &(party, filter)) in inputs.iter().enumerate() {
        for pos in filter.iter_ones() {
            running[pos] = running[pos].wrapping_add(1);
        }
        let receiver = inputs
            .get(i + 1)
            .map_or(Actor::LinkageUnit, |next| Actor::Party(next.0));
        session.transcript.push(Message {
            step: i + 2,
            sender: Actor::Party(party),
            receiver,
            vector: running.clone(),
        });
    }
    let counts = running
        .iter()
        .zip(&session.random_vector)
        .map(|(total, r)| total.wrapping_sub(*r))
        .collect();
    CountingBloomFilter::from_counts(counts, inputs.len())
}

/// Transcript lines `(session_id, step, sender, receiver, digest)`.
pub fn write_transcript<W: Write>(out: W, sessions: &[&SummationSession]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["session_id", "step", "sender", "receiver", "vector_digest"])?;
    for s in sessions {
        for m in &s.transcript {
            w.write_record([
                s.session_id.to_string(),
                m.step.to_string(),
                m.sender.to_string(),
                m.receiver.to_string(),
                m.digest(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// The most revealing aggregate a record took part in: the CBF with the
/// fewest summands (ties broken by round, then by member list).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exposure {
    pub round: usize,
    pub members: Vec<Member>,
    pub cbf: CountingBloomFilter,
}

impl Exposure {
    fn key(&self) -> (usize, usize, &[Member]) {
        (self.cbf.num_summands(), self.round, &self.members)
    }
}

/// Aggregate message statistics of a linkage run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProtocolStats {
    pub sessions: u64,
    pub messages: u64,
    /// `(round, summands) -> (sessions, messages)`.
    pub by_round: BTreeMap<(usize, usize), (u64, u64)>,
}

/// A [`Scorer`] that obtains every similarity through a secure summation
/// over per-round encodings. The similarity is the Dice coefficient of the
/// whole candidate set, read from its counting Bloom filter.
pub struct ProtocolScorer {
    encodings: RoundEncodings,
    blinding_seed: u64,
    stats: Mutex<ProtocolStats>,
    exposures: Mutex<HashMap<Member, Exposure>>,
}

impl ProtocolScorer {
    pub fn new(encodings: RoundEncodings, blinding_seed: u64) -> Self {
        Self {
            encodings,
            blinding_seed,
            stats: Mutex::default(),
            exposures: Mutex::default(),
        }
    }

    pub fn encodings(&self) -> &RoundEncodings {
        &self.encodings
    }

    pub fn stats(&self) -> ProtocolStats {
        self.stats.lock().unwrap().clone()
    }

    /// Each participating record's most revealing aggregate, sorted by record.
    pub fn exposures(&self) -> Vec<(Member, Exposure)> {
        let mut all: Vec<_> = self
            .exposures
            .lock()
            .unwrap()
            .iter()
            .map(|(k, v)| (*k, v.clone()))
            .collect();
        all.sort_by_key(|a| a.0);
        all
    }

    /// Runs one session for `members` (any order) in round `round` and
    /// returns the session with its transcript and the unblinded sum.
    pub fn summation(&self, round: usize, members: &[Member]) -> Result<(SummationSession, CountingBloomFilter)> {
        let mut ordered = members.to_vec();
        ordered.sort_unstable();
        let mut hasher = Sha256::new();
        hasher.update(self.blinding_seed.to_le_bytes());
        hasher.update((round as u64).to_le_bytes());
        for (p, i) in &ordered {
            hasher.update((*p as u64).to_le_bytes());
            hasher.update((*i as u64).to_le_bytes());
        }
        let digest: [u8; 32] = hasher.finalize().into();
        let session_id = u64::from_le_bytes(digest[..8].try_into().unwrap());
        let mut rng = ChaCha20Rng::from_seed(digest);

        let filters = ordered
            .iter()
            .map(|&m| Ok((m.0, self.encodings.filter(round, m)?)))
            .collect::<Result<Vec<_>>>()?;
        let len = filters.first().map_or(self.encodings.base().bf_length, |f| f.1.len());
        let mut session = SummationSession::new(session_id, len, &mut rng);
        let cbf = secure_sum(&filters, &mut session)?;
        Ok((session, cbf))
    }

    fn record(&self, round: usize, members: Vec<Member>, session: &SummationSession, cbf: CountingBloomFilter) {
        {
            let mut stats = self.stats.lock().unwrap();
            let messages = session.transcript.len() as u64;
            stats.sessions += 1;
            stats.messages += messages;
            let entry = stats.by_round.entry((round, cbf.num_summands())).or_default();
            entry.0 += 1;
            entry.1 += messages;
        }
        let exposure = Exposure { round, members, cbf };
        let mut exposures = self.exposures.lock().unwrap();
        for &m in &exposure.members {
            match exposures.get(&m) {
                Some(current) if current.key() <= exposure.key() => {}
                _ => {
                    exposures.insert(m, exposure.clone());
                }
            }
        }
    }
}

impl Scorer for ProtocolScorer {
    fn similarity(&self, round: usize, cluster: &[Member], record: Member) -> Result<f64> {
        let mut members = cluster.to_vec();
        members.push(record);
        members.sort_unstable();
        let (session, cbf) = self.summation(round, &members)?;
        let sim = dice_cbf(&cbf)?;
        self.record(round, members, &session, cbf);
        Ok(sim)
    }
}

/// Similarity of every `(cluster, record)` candidate pair of one mapping
/// round, each obtained from its own summation session.
pub fn cbf_link_iteration(
    scorer: &ProtocolScorer,
    round: usize,
    clusters: &[Vec<Member>],
    new_records: &[Member],
) -> Result<Vec<(usize, usize, f64)>> {
    let mut out = Vec::with_capacity(clusters.len() * new_records.len());
    for (ci, cluster) in clusters.iter().enumerate() {
        for (ri, &rec) in new_records.iter().enumerate() {
            out.push((ci, ri, scorer.similarity(round, cluster, rec)?));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::{dice_bf, sum_to_cbf};

    fn rec(id: &str, first: &str, last: &str) -> PlainRecord {
        PlainRecord {
            record_id: id.into(),
            entity_id: None,
            first_name: first.into(),
            last_name: last.into(),
            city: "raleigh".into(),
            zipcode: "27601".into(),
        }
    }

    fn random_filter(rng: &mut ChaCha20Rng, len: usize) -> BloomFilter {
        BloomFilter::from_positions(len, (0..len).filter(|_| rng.gen_bool(0.3)))
    }

    #[test]
    fn zero_vector_shows_partial_sums() {
        let b1 = BloomFilter::from_bit_str("1100");
        let b2 = BloomFilter::from_bit_str("1010");
        let mut s = SummationSession::with_vector(1, vec![0; 4]);
        let cbf = secure_sum(&[(0, &b1), (1, &b2)], &mut s).unwrap();
        assert_eq!(cbf.counts(), &[2, 1, 1, 0]);
        // Two parties: LU -> P0, P0 -> P1, P1 -> LU.
        assert_eq!(s.transcript.len(), 3);
        assert_eq!(s.transcript[1].vector, vec![1, 1, 0, 0]);
        assert_eq!(s.transcript[2].vector, vec![2, 1, 1, 0]);
        assert_eq!(s.transcript[2].receiver, Actor::LinkageUnit);
    }

    #[test]
    fn session_cannot_be_reused() {
        let b = BloomFilter::from_bit_str("1");
        let mut s = SummationSession::with_vector(9, vec![5]);
        secure_sum(&[(0, &b)], &mut s).unwrap();
        assert!(matches!(secure_sum(&[(0, &b)], &mut s), Err(Error::SessionReused(9))));
    }

    #[test]
    fn wraparound_is_undone() {
        let b = BloomFilter::from_bit_str("11");
        let mut s = SummationSession::with_vector(2, vec![u32::MAX, 7]);
        let cbf = secure_sum(&[(0, &b), (1, &b)], &mut s).unwrap();
        assert_eq!(cbf.counts(), &[2, 2]);
        assert_eq!(s.transcript[1].vector, vec![0, 8]);
    }

    #[test]
    fn matches_direct_sum_over_many_sessions() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for id in 0..1000 {
            let p = rng.gen_range(1..=6);
            let filters: Vec<BloomFilter> = (0..p).map(|_| random_filter(&mut rng, 64)).collect();
            let inputs: Vec<(usize, &BloomFilter)> = filters.iter().enumerate().collect();
            let mut s = SummationSession::new(id, 64, &mut rng);
            let cbf = secure_sum(&inputs, &mut s).unwrap();
            assert_eq!(cbf, sum_to_cbf(&filters).unwrap());
            assert_eq!(s.transcript.len(), p + 1);
        }
    }

    #[test]
    fn reencoding_changes_filters_each_round() {
        let base = EncodingParams::default();
        let mut party = PartyState::new(0, vec![rec("a", "sarah", "miller")]);
        party.reencode(&base, 1).unwrap();
        let first = party.filters[0].clone();
        let salt1 = party.current_salt.clone();
        party.reencode(&base, 2).unwrap();
        assert_ne!(salt1, party.current_salt);
        assert_ne!(first, party.filters[0]);
    }

    #[test]
    fn cluster_of_two_plus_one() {
        let parties = vec![
            vec![rec("a", "sarah", "miller")],
            vec![rec("b", "sara", "miller")],
            vec![rec("c", "sarah", "millar")],
        ];
        let scorer = ProtocolScorer::new(RoundEncodings::for_linkage(EncodingParams::default(), parties), 5);
        let sims = cbf_link_iteration(&scorer, 2, &[vec![(0, 0), (1, 0)]], &[(2, 0)]).unwrap();
        let enc = scorer.encodings().round(2).unwrap();
        let expected = dice_bf([&enc[0][0], &enc[1][0], &enc[2][0]]).unwrap();
        assert_eq!(sims, vec![(0, 0, expected)]);
        let stats = scorer.stats();
        assert_eq!(stats.sessions, 1);
        assert_eq!(stats.by_round[&(2, 3)], (1, 4));
        let exposures = scorer.exposures();
        assert_eq!(exposures.len(), 3);
        assert_eq!(exposures[0].1.cbf.num_summands(), 3);

        assert!(cbf_link_iteration(&scorer, 2, &[], &[(2, 0)]).unwrap().is_empty());
        assert_eq!(scorer.stats().sessions, 1);
    }

    #[test]
    fn exposure_keeps_smallest_aggregate() {
        let parties = vec![
            vec![rec("a", "ann", "lee")],
            vec![rec("b", "anne", "lee")],
            vec![rec("c", "ann", "li")],
        ];
        let scorer = ProtocolScorer::new(RoundEncodings::for_linkage(EncodingParams::default(), parties), 5);
        scorer.similarity(2, &[(0, 0), (1, 0)], (2, 0)).unwrap();
        scorer.similarity(1, &[(0, 0)], (1, 0)).unwrap();
        let exposures: HashMap<Member, Exposure> = scorer.exposures().into_iter().collect();
        assert_eq!(exposures[&(0, 0)].cbf.num_summands(), 2);
        assert_eq!(exposures[&(2, 0)].cbf.num_summands(), 3);
    }

    #[test]
    fn sessions_are_deterministic() {
        let parties = vec![vec![rec("a", "ann", "lee")], vec![rec("b", "anne", "lee")]];
        let a = ProtocolScorer::new(
            RoundEncodings::for_linkage(EncodingParams::default(), parties.clone()),
            3,
        );
        let b = ProtocolScorer::new(RoundEncodings::for_linkage(EncodingParams::default(), parties), 3);
        let (sa, _) = a.summation(1, &[(0, 0), (1, 0)]).unwrap();
        let (sb, _) = b.summation(1, &[(1, 0), (0, 0)]).unwrap();
        assert_eq!(sa.transcript, sb.transcript);
        let mut buf = Vec::new();
        write_transcript(&mut buf, &[&sa]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("session_id,step,sender,receiver,vector_digest"));
    }
}

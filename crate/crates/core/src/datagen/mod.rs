//! Multi-party test data with known overlap structure and corruption.

mod pool;

use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::error::{Error, Result};
use crate::eval::GroundTruth;
use crate::record::{PlainRecord, QID_ATTRIBUTES};
use crate::seed;

pub use pool::SourcePool;

/// Shape of a generated multi-party dataset. Fractions are per party: a
/// fraction `f` for entity size `s` means each party holds about `n * f`
/// records of entities held by exactly `s` parties.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapSpec {
    pub num_parties: usize,
    pub records_per_party: usize,
    /// Records of entities present in every party.
    pub full_overlap_fraction: f64,
    /// Records of entities present in some but not all parties.
    pub subset_overlap_fraction: f64,
    /// Entry `k` is the fraction for entities held by `k + 2` parties, for
    /// sizes `2..num_parties`. Sums to `subset_overlap_fraction`.
    pub subset_size_distribution: Vec<f64>,
    /// Fraction of matching records that receive edit errors.
    pub corruption_rate: f64,
    /// Share of near-duplicate identities in the generated source pool.
    pub relative_rate: f64,
    pub seed: u64,
}

impl OverlapSpec {
    /// 25% of records shared by all parties and 25% spread evenly over the
    /// proper subset sizes; the rest are non-matches.
    pub fn quarter_split(num_parties: usize, records_per_party: usize, seed: u64) -> Self {
        let sizes = num_parties.saturating_sub(2);
        let subset = if sizes == 0 { 0.0 } else { 0.25 };
        Self {
            num_parties,
            records_per_party,
            full_overlap_fraction: 0.25,
            subset_overlap_fraction: subset,
            subset_size_distribution: vec![subset / sizes.max(1) as f64; sizes],
            corruption_rate: 0.0,
            relative_rate: 0.2,
            seed,
        }
    }

    /// `share` of records for every entity size from 2 to `num_parties`.
    pub fn per_size(num_parties: usize, records_per_party: usize, share: f64, seed: u64) -> Self {
        let sizes = num_parties.saturating_sub(2);
        Self {
            num_parties,
            records_per_party,
            full_overlap_fraction: share,
            subset_overlap_fraction: share * sizes as f64,
            subset_size_distribution: vec![share; sizes],
            corruption_rate: 0.0,
            relative_rate: 0.2,
            seed,
        }
    }

    pub fn with_corruption(mut self, rate: f64) -> Self {
        self.corruption_rate = rate;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.num_parties < 2 {
            return bad(format!("need at least 2 parties, got {}", self.num_parties));
        }
        for (name, v) in [
            ("full_overlap_fraction", self.full_overlap_fraction),
            ("subset_overlap_fraction", self.subset_overlap_fraction),
            ("corruption_rate", self.corruption_rate),
            ("relative_rate", self.relative_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} {v} outside [0, 1]"));
            }
        }
        if self.full_overlap_fraction + self.subset_overlap_fraction > 1.0 + 1e-9 {
            return bad("overlap fractions sum to more than 1".into());
        }
        if self.subset_size_distribution.len() != self.num_parties - 2 {
            return bad(format!(
                "subset_size_distribution needs {} entries (sizes 2..{}), got {}",
                self.num_parties - 2,
                self.num_parties - 1,
                self.subset_size_distribution.len()
            ));
        }
        if self.subset_size_distribution.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return bad("subset size fractions must lie in [0, 1]".into());
        }
        let sum: f64 = self.subset_size_distribution.iter().sum();
        if (sum - self.subset_overlap_fraction).abs() > 1e-9 {
            return bad(format!(
                "subset size fractions sum to {sum}, expected {}",
                self.subset_overlap_fraction
            ));
        }
        Ok(())
    }

    /// `(entity size, number of entities)` for every shared size, largest first.
    pub fn shared_entities(&self) -> Vec<(usize, usize)> {
        let p = self.num_parties;
        let total = (p * self.records_per_party) as f64;
        let mut out = vec![(p, (total * self.full_overlap_fraction).round() as usize / p)];
        for (k, f) in self.subset_size_distribution.iter().enumerate().rev() {
            let s = k + 2;
            out.push((s, (total * f).round() as usize / s));
        }
        out
    }
}

/// Generated party databases with their ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub parties: Vec<Vec<PlainRecord>>,
    pub truth: GroundTruth,
    pub corrupted: usize,
}

/// Generates a dataset from a fresh synthetic pool just large enough.
pub fn generate_synthetic(spec: &OverlapSpec) -> Result<Dataset> {
    spec.validate()?;
    let needed = entities_needed(spec)?;
    let mut rng = seed::stream_rng(spec.seed, "pool");
    let pool = SourcePool::synthetic(needed, spec.relative_rate, &mut rng);
    generate(spec, &pool)
}

fn entity_layout(spec: &OverlapSpec) -> Result<(Vec<Vec<usize>>, Vec<usize>)> {
    let p = spec.num_parties;
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut counts = vec![0usize; p];
    let mut cursor = 0usize;
    for (size, entities) in spec.shared_entities() {
        for _ in 0..entities {
            let parties: Vec<usize> = (0..size).map(|j| (cursor + j) % p).collect();
            cursor += size;
            for &q in &parties {
                counts[q] += 1;
            }
            members.push(parties);
        }
    }
    if let Some(q) = counts.iter().position(|&c| c > spec.records_per_party) {
        return Err(Error::InvalidParameter(format!(
            "party {q} would need {} shared records but holds only {}",
            counts[q], spec.records_per_party
        )));
    }
    Ok((members, counts))
}

fn entities_needed(spec: &OverlapSpec) -> Result<usize> {
    let (shared, counts) = entity_layout(spec)?;
    Ok(shared.len() + counts.iter().map(|c| spec.records_per_party - c).sum::<usize>())
}

/// Samples entities from `pool`, places them per `spec`, corrupts the
/// configured share of matching records and shuffles each party.
pub fn generate(spec: &OverlapSpec, pool: &SourcePool) -> Result<Dataset> {
    spec.validate()?;
    let p = spec.num_parties;
    let (mut members, counts) = entity_layout(spec)?;
    for (q, &c) in counts.iter().enumerate() {
        members.extend((c..spec.records_per_party).map(|_| vec![q]));
    }
    if members.len() > pool.len() {
        return Err(Error::PoolTooSmall {
            needed: members.len(),
            available: pool.len(),
        });
    }

    let mut gen_rng = seed::stream_rng(spec.seed, seed::GENERATION);
    let chosen = index::sample(&mut gen_rng, pool.len(), members.len());
    let mut parties: Vec<Vec<PlainRecord>> = vec![Vec::with_capacity(spec.records_per_party); p];
    for (entity, (holders, pool_idx)) in members.iter().zip(chosen.iter()).enumerate() {
        let identity = &pool.identities[pool_idx];
        for &q in holders {
            parties[q].push(PlainRecord {
                record_id: String::new(),
                entity_id: Some(format!("E{entity:07}")),
                ..identity.clone()
            });
        }
    }

    // Shared records are those of entities held by more than one party.
    let shared_count: Vec<usize> = members.iter().filter(|m| m.len() > 1).fold(vec![0; p], |mut acc, m| {
        for &q in m {
            acc[q] += 1;
        }
        acc
    });
    let matched: Vec<(usize, usize)> = (0..p).flat_map(|q| (0..shared_count[q]).map(move |i| (q, i))).collect();
    let to_corrupt = (spec.corruption_rate * matched.len() as f64).round() as usize;
    let mut corr_rng = seed::stream_rng(spec.seed, seed::CORRUPTION);
    for k in index::sample(&mut corr_rng, matched.len(), to_corrupt) {
        let (q, i) = matched[k];
        parties[q][i] = corrupt(&parties[q][i], &mut corr_rng);
    }

    for (q, records) in parties.iter_mut().enumerate() {
        records.shuffle(&mut gen_rng);
        for (i, r) in records.iter_mut().enumerate() {
            r.record_id = format!("P{q}-{i:06}");
        }
    }
    let truth = GroundTruth::from_records(&parties)?;
    Ok(Dataset {
        parties,
        truth,
        corrupted: to_corrupt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Edit {
    Insert,
    Delete,
    Substitute,
    Transpose,
}

/// Applies one or two random character edits (insertion, deletion,
/// substitution, transposition) to randomly chosen non-empty QID values.
pub fn corrupt<R: Rng>(record: &PlainRecord, rng: &mut R) -> PlainRecord {
    let mut out = record.clone();
    let edits = rng.gen_range(1..=2);
    for _ in 0..edits {
        let candidates: Vec<&str> = QID_ATTRIBUTES
            .iter()
            .copied()
            .filter(|a| out.attribute(a).is_some_and(|v| !v.is_empty()))
            .collect();
        let Some(&attr) = candidates.choose(rng) else {
            return out;
        };
        let digits = attr == "zipcode";
        let value = out.attribute_mut(attr).unwrap();
        let op = *[Edit::Insert, Edit::Delete, Edit::Substitute, Edit::Transpose]
            .choose(rng)
            .unwrap();
        *value = apply_edit(value, op, digits, rng);
    }
    if out.qid_values() == record.qid_values() {
        // two edits cancelled out
        out.last_name = apply_edit(&out.last_name, Edit::Substitute, false, rng);
    }
    out
}

fn random_char<R: Rng>(digits: bool, rng: &mut R) -> char {
    if digits {
        rng.gen_range(b'0'..=b'9') as char
    } else {
        rng.gen_range(b'a'..=b'z') as char
    }
}

fn apply_edit<R: Rng>(value: &str, op: Edit, digits: bool, rng: &mut R) -> String {
    let mut chars: Vec<char> = value.chars().collect();
    let n = chars.len();
    let can_transpose = (0..n.saturating_sub(1)).any(|i| chars[i] != chars[i + 1]);
    let op = match op {
        Edit::Delete if n < 2 => Edit::Substitute,
        Edit::Transpose if !can_transpose => Edit::Substitute,
        other => other,
    };
    match op {
        Edit::Insert => chars.insert(rng.gen_range(0..=n), random_char(digits, rng)),
        Edit::Delete => {
            chars.remove(rng.gen_range(0..n));
        }
        Edit::Substitute => {
            let at = rng.gen_range(0..n);
            let mut c = chars[at];
            while c == chars[at] {
                c = random_char(digits, rng);
            }
            chars[at] = c;
        }
        Edit::Transpose => {
            let spots: Vec<usize> = (0..n - 1).filter(|&i| chars[i] != chars[i + 1]).collect();
            let at = *spots.choose(rng).unwrap();
            chars.swap(at, at + 1);
        }
    }
    chars.into_iter().collect()
}

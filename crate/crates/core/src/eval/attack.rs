use std::collections::HashMap;

use rayon::prelude::*;

use crate::cluster::Member;
use crate::encode::{BloomFilter, CountingBloomFilter, EncodingParams};
use crate::error::{Error, Result};
use crate::protocol::{round_salt, Exposure};
use crate::record::PlainRecord;

/// What the linkage unit holds about one record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MaskedRecord {
    /// The record's own filter.
    Bf(BloomFilter),
    /// A sum the record took part in, encoded under `salt`.
    Cbf { cbf: CountingBloomFilter, salt: Vec<u8> },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AttackReport {
    /// Probability of suspicion `1 / n_g` per target.
    pub probabilities: Vec<f64>,
    pub dr_mean: f64,
    /// Fraction of targets re-identified uniquely.
    pub dr_marketer: f64,
}

/// Worst-case linkage attack: the adversary knows the hash functions and a
/// global plaintext database containing every target. It encodes each global
/// record and counts the candidates `n_g` that fit a target.
///
/// A global filter fits a plain filter when they are identical. It fits a
/// counting filter `c` with `x` summands when it has no 1-bit where `c` is 0
/// and has a 1-bit wherever `c` equals `x`; positions with intermediate
/// counts say nothing about an individual summand.
pub fn linkage_attack(
    targets: &[MaskedRecord],
    global: &[PlainRecord],
    params: &EncodingParams,
) -> Result<AttackReport> {
    let mut encoded: HashMap<Vec<u8>, Vec<BloomFilter>> = HashMap::new();
    for target in targets {
        let salt = match target {
            MaskedRecord::Bf(_) => &params.salt,
            MaskedRecord::Cbf { salt, .. } => salt,
        };
        if !encoded.contains_key(salt) {
            let p = params.clone().with_salt(salt.clone());
            let filters = global.par_iter().map(|r| r.encode(&p)).collect::<Result<Vec<_>>>()?;
            encoded.insert(salt.clone(), filters);
        }
    }
    let plain_counts: HashMap<&[u64], usize> = encoded.get(&params.salt).map_or_else(HashMap::new, |filters| {
        let mut counts = HashMap::new();
        for f in filters {
            *counts.entry(f.words()).or_insert(0) += 1;
        }
        counts
    });

    let probabilities = targets
        .par_iter()
        .enumerate()
        .map(|(i, target)| {
            let n_g = match target {
                MaskedRecord::Bf(f) => plain_counts.get(f.words()).copied().unwrap_or(0),
                MaskedRecord::Cbf { cbf, salt } => {
                    let (support, full) = support_and_full(cbf);
                    encoded[salt]
                        .iter()
                        .filter(|g| {
                            g.len() == cbf.len()
                                && g.words()
                                    .iter()
                                    .zip(&support)
                                    .zip(&full)
                                    .all(|((w, s), f)| w & !s == 0 && f & !w == 0)
                        })
                        .count()
                }
            };
            if n_g == 0 {
                Err(Error::NoCandidates(i))
            } else {
                Ok(1.0 / n_g as f64)
            }
        })
        .collect::<Result<Vec<f64>>>()?;

    let n = probabilities.len();
    let (dr_mean, dr_marketer) = if n == 0 {
        (0.0, 0.0)
    } else {
        (
            probabilities.iter().sum::<f64>() / n as f64,
            probabilities.iter().filter(|&&p| p == 1.0).count() as f64 / n as f64,
        )
    };
    Ok(AttackReport {
        probabilities,
        dr_mean,
        dr_marketer,
    })
}

/// Bit masks of the positions with a count of at least one and of those
/// equal to the number of summands.
fn support_and_full(cbf: &CountingBloomFilter) -> (Vec<u64>, Vec<u64>) {
    let words = cbf.len().div_ceil(64);
    let mut support = vec![0u64; words];
    let mut full = vec![0u64; words];
    for (pos, &c) in cbf.counts().iter().enumerate() {
        if c > 0 {
            support[pos / 64] |= 1 << (pos % 64);
        }
        if c as usize == cbf.num_summands() {
            full[pos / 64] |= 1 << (pos % 64);
        }
    }
    (support, full)
}

/// Attack targets for records seen through secure sums, together with the
/// same records' plain filters under `base` for comparison.
pub fn targets_from_exposures(
    exposures: &[(Member, Exposure)],
    plain_filters: &[Vec<BloomFilter>],
    base: &EncodingParams,
) -> Result<(Vec<MaskedRecord>, Vec<MaskedRecord>)> {
    let mut cbf_targets = Vec::with_capacity(exposures.len());
    let mut bf_targets = Vec::with_capacity(exposures.len());
    for ((party, pos), exposure) in exposures {
        let filter = plain_filters
            .get(*party)
            .and_then(|f| f.get(*pos))
            .ok_or_else(|| Error::UnknownRecord {
                party: *party,
                record: pos.to_string(),
            })?;
        bf_targets.push(MaskedRecord::Bf(filter.clone()));
        cbf_targets.push(MaskedRecord::Cbf {
            cbf: exposure.cbf.clone(),
            salt: round_salt(&base.salt, exposure.round),
        });
    }
    Ok((cbf_targets, bf_targets))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::sum_to_cbf;

    fn rec(first: &str, last: &str) -> PlainRecord {
        PlainRecord {
            record_id: format!("{first}-{last}"),
            entity_id: None,
            first_name: first.into(),
            last_name: last.into(),
            city: "cary".into(),
            zipcode: "27511".into(),
        }
    }

    fn global() -> Vec<PlainRecord> {
        vec![
            rec("sarah", "miller"),
            rec("john", "smith"),
            rec("peter", "christen"),
            rec("sarah", "miller"),
            rec("anna", "lee"),
        ]
    }

    #[test]
    fn distinct_records_are_unique_in_bf_mode() {
        let params = EncodingParams::default();
        let g = global();
        let targets: Vec<MaskedRecord> = [1, 2, 4]
            .iter()
            .map(|&i| MaskedRecord::Bf(g[i].encode(&params).unwrap()))
            .collect();
        let report = linkage_attack(&targets, &g, &params).unwrap();
        assert_eq!(report.probabilities, vec![1.0, 1.0, 1.0]);
        assert_eq!(report.dr_marketer, 1.0);
        assert_eq!(report.dr_mean, 1.0);
    }

    #[test]
    fn duplicates_share_suspicion() {
        let params = EncodingParams::default();
        let g = global();
        let targets = vec![MaskedRecord::Bf(g[0].encode(&params).unwrap())];
        let report = linkage_attack(&targets, &g, &params).unwrap();
        assert_eq!(report.probabilities, vec![0.5]);
        assert_eq!(report.dr_marketer, 0.0);
    }

    #[test]
    fn aggregate_hides_its_members() {
        let params = EncodingParams::default();
        let salt = b"round-salt".to_vec();
        let salted = params.clone().with_salt(salt.clone());
        let g = global();
        let members: Vec<BloomFilter> = [1, 2, 4].iter().map(|&i| g[i].encode(&salted).unwrap()).collect();
        let cbf = sum_to_cbf(&members).unwrap();
        let targets = vec![MaskedRecord::Cbf { cbf, salt }];
        let report = linkage_attack(&targets, &g, &params).unwrap();
        // Every summand is consistent, so P_s is at most 1/3.
        assert!(report.probabilities[0] <= 1.0 / 3.0);
        assert_eq!(report.dr_marketer, 0.0);
    }

    #[test]
    fn unknown_target_is_a_bookkeeping_error() {
        let params = EncodingParams::default();
        let outsider = rec("zed", "quux").encode(&params).unwrap();
        let err = linkage_attack(&[MaskedRecord::Bf(outsider)], &global(), &params).unwrap_err();
        assert!(matches!(err, Error::NoCandidates(0)));
    }

    #[test]
    fn empty_targets() {
        let report = linkage_attack(&[], &global(), &EncodingParams::default()).unwrap();
        assert_eq!((report.dr_mean, report.dr_marketer), (0.0, 0.0));
    }
}

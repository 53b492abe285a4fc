//! Soundex blocking.
//!
//! Parties compute a blocking key value (BKV) per record from plaintext
//! attributes before encoding; only the BKV travels with the encoded record.
//! The linkage unit groups records of all parties by BKV and links each block
//! independently. Block membership is therefore visible to the linkage unit.

use std::collections::{BTreeMap, HashMap};

use crate::error::Result;
use crate::record::PlainRecord;

/// Code returned for empty or non-alphabetic input.
pub const SOUNDEX_SENTINEL: &str = "Z000";

/// American Soundex: first letter followed by three digits.
pub fn soundex(name: &str) -> String {
    let letters: Vec<char> = name
        .chars()
        .filter(|c| c.is_ascii_alphabetic())
        .map(|c| c.to_ascii_uppercase())
        .collect();
    let Some(&first) = letters.first() else {
        return SOUNDEX_SENTINEL.to_string();
    };

    let mut code = String::with_capacity(4);
    code.push(first);
    let mut last = digit(first);
    for &c in &letters[1..] {
        match c {
            // h and w do not separate letters with the same code
            'H' | 'W' => continue,
            _ => {}
        }
        let d = digit(c);
        if let Some(d) = d {
            if Some(d) != last {
                code.push(d);
                if code.len() == 4 {
                    break;
                }
            }
        }
        last = d;
    }
    while code.len() < 4 {
        code.push('0');
    }
    code
}

fn digit(c: char) -> Option<char> {
    match c {
        'B' | 'F' | 'P' | 'V' => Some('1'),
        'C' | 'G' | 'J' | 'K' | 'Q' | 'S' | 'X' | 'Z' => Some('2'),
        'D' | 'T' => Some('3'),
        'L' => Some('4'),
        'M' | 'N' => Some('5'),
        'R' => Some('6'),
        _ => None,
    }
}

/// Concatenated Soundex codes of the key attributes.
pub fn blocking_key(record: &PlainRecord, key_attrs: &[&str]) -> Result<String> {
    let mut key = String::with_capacity(4 * key_attrs.len());
    for attr in key_attrs {
        key.push_str(&soundex(record.require(attr)?));
    }
    Ok(key)
}

/// Per-party record positions grouped by blocking key value.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BlockIndex {
    blocks: BTreeMap<String, Vec<Vec<usize>>>,
    party_count: usize,
}

impl BlockIndex {
    /// Builds the index from each party's list of record BKVs. Positions in
    /// the result refer to indexes into those lists.
    pub fn from_keys<S: AsRef<str>>(keys: &[Vec<S>]) -> Self {
        let party_count = keys.len();
        let mut blocks: BTreeMap<String, Vec<Vec<usize>>> = BTreeMap::new();
        for (party, party_keys) in keys.iter().enumerate() {
            for (pos, key) in party_keys.iter().enumerate() {
                blocks
                    .entry(key.as_ref().to_string())
                    .or_insert_with(|| vec![Vec::new(); party_count])[party]
                    .push(pos);
            }
        }
        Self { blocks, party_count }
    }

    pub fn party_count(&self) -> usize {
        self.party_count
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&[Vec<usize>]> {
        self.blocks.get(key).map(Vec::as_slice)
    }

    /// All blocks in key order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Vec<usize>])> {
        self.blocks.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Blocks holding records from at least two parties; only these can
    /// produce cross-party edges.
    pub fn linkable(&self) -> impl Iterator<Item = (&str, &[Vec<usize>])> {
        self.iter()
            .filter(|(_, parties)| parties.iter().filter(|p| !p.is_empty()).count() >= 2)
    }

    /// Fraction of true multi-record entities whose records all fall in one block.
    pub fn pairs_completeness<S: AsRef<str>>(&self, entity_ids: &[Vec<S>]) -> f64 {
        let mut block_of: HashMap<(usize, usize), &str> = HashMap::new();
        for (key, parties) in &self.blocks {
            for (party, positions) in parties.iter().enumerate() {
                for &pos in positions {
                    block_of.insert((party, pos), key);
                }
            }
        }
        let mut entities: HashMap<&str, Vec<(usize, usize)>> = HashMap::new();
        for (party, ids) in entity_ids.iter().enumerate() {
            for (pos, id) in ids.iter().enumerate() {
                entities.entry(id.as_ref()).or_default().push((party, pos));
            }
        }
        let mut total = 0usize;
        let mut complete = 0usize;
        for members in entities.values().filter(|m| m.len() >= 2) {
            total += 1;
            let first = block_of.get(&members[0]);
            if members.iter().all(|m| block_of.get(m) == first) {
                complete += 1;
            }
        }
        if total == 0 {
            1.0
        } else {
            complete as f64 / total as f64
        }
    }
}

/// Computes every record's blocking key at the party side and groups the
/// union of all parties' records by key.
pub fn build_blocks(records: &[Vec<PlainRecord>], key_attrs: &[&str]) -> Result<BlockIndex> {
    let keys = records
        .iter()
        .map(|party| {
            party
                .iter()
                .map(|r| blocking_key(r, key_attrs))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BlockIndex::from_keys(&keys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn rec(id: &str, first: &str, last: &str) -> PlainRecord {
        PlainRecord {
            record_id: id.into(),
            entity_id: None,
            first_name: first.into(),
            last_name: last.into(),
            city: "durham".into(),
            zipcode: "27701".into(),
        }
    }

    #[test]
    fn reference_codes() {
        // Codes from the standard American Soundex table.
        let cases = [
            ("robert", "R163"),
            ("rupert", "R163"),
            ("Rubin", "R150"),
            ("Ashcraft", "A261"),
            ("Ashcroft", "A261"),
            ("Tymczak", "T522"),
            ("Pfister", "P236"),
            ("Honeyman", "H555"),
            ("Lee", "L000"),
            ("Gutierrez", "G362"),
            ("Jackson", "J250"),
            ("smith", "S530"),
            ("smyth", "S530"),
            ("O'Hara", "O600"),
        ];
        for (name, code) in cases {
            assert_eq!(soundex(name), code, "{name}");
        }
    }

    #[test]
    fn sentinel_for_empty_or_non_alpha() {
        assert_eq!(soundex(""), "Z000");
        assert_eq!(soundex("1234 -"), "Z000");
    }

    #[test]
    fn phonetic_variants_share_a_block() {
        let parties = vec![vec![rec("a1", "anna", "smith")], vec![rec("b1", "anna", "smyth")]];
        let index = build_blocks(&parties, &["last_name"]).unwrap();
        assert_eq!(index.len(), 1);
        let block = index.get("S530").unwrap();
        assert_eq!(block, &[vec![0], vec![0]]);
        assert_eq!(index.linkable().count(), 1);
    }

    #[test]
    fn disjoint_names_are_not_linkable() {
        let parties = vec![vec![rec("a1", "anna", "smith")], vec![rec("b1", "anna", "jones")]];
        let index = build_blocks(&parties, &["last_name"]).unwrap();
        assert_eq!(index.len(), 2);
        assert_eq!(index.linkable().count(), 0);
    }

    #[test]
    fn missing_attribute_is_an_error_but_empty_value_is_not() {
        let parties = vec![vec![rec("a1", "", "smith")]];
        assert!(matches!(
            build_blocks(&parties, &["middle_name"]),
            Err(Error::MissingAttribute { .. })
        ));
        let index = build_blocks(&parties, &["first_name", "last_name"]).unwrap();
        assert!(index.get("Z000S530").is_some());
    }

    #[test]
    fn blocks_partition_every_party() {
        let names = ["smith", "smyth", "jones", "brown", "braun", "lee", "li", "garcia"];
        let parties: Vec<Vec<PlainRecord>> = (0..3)
            .map(|p| {
                (0..3334 + p)
                    .map(|i| rec(&format!("{p}-{i}"), names[(i * 7 + p) % 8], names[(i + p) % 8]))
                    .collect()
            })
            .collect();
        let index = build_blocks(&parties, &["first_name", "last_name"]).unwrap();
        for (party, records) in parties.iter().enumerate() {
            let mut seen: Vec<usize> = index.iter().flat_map(|(_, b)| b[party].clone()).collect();
            seen.sort_unstable();
            assert_eq!(seen, (0..records.len()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn completeness_counts_split_entities() {
        let parties = vec![
            vec![rec("a1", "anna", "smith"), rec("a2", "bob", "jones")],
            vec![rec("b1", "anna", "smyth"), rec("b2", "bob", "brown")],
        ];
        let index = build_blocks(&parties, &["last_name"]).unwrap();
        let entities = vec![vec!["e1", "e2"], vec!["e1", "e2"]];
        assert_eq!(index.pairs_completeness(&entities), 0.5);
    }
}

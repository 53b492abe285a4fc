//! Plaintext and encoded record types exchanged between parties and the
//! linkage unit.

use crate::encode::{encode_record, BloomFilter, EncodingParams};
use crate::error::{Error, Result};

/// Attribute names of the quasi-identifiers carried by every plaintext record.
pub const QID_ATTRIBUTES: [&str; 4] = ["first_name", "last_name", "city", "zipcode"];

/// A party-side record before encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlainRecord {
    pub record_id: String,
    pub entity_id: Option<String>,
    pub first_name: String,
    pub last_name: String,
    pub city: String,
    pub zipcode: String,
}

impl PlainRecord {
    pub fn attribute(&self, name: &str) -> Option<&str> {
        match name {
            "first_name" => Some(&self.first_name),
            "last_name" => Some(&self.last_name),
            "city" => Some(&self.city),
            "zipcode" => Some(&self.zipcode),
            _ => None,
        }
    }

    pub fn attribute_mut(&mut self, name: &str) -> Option<&mut String> {
        match name {
            "first_name" => Some(&mut self.first_name),
            "last_name" => Some(&mut self.last_name),
            "city" => Some(&mut self.city),
            "zipcode" => Some(&mut self.zipcode),
            _ => None,
        }
    }

    pub fn qid_values(&self) -> [&str; 4] {
        [&self.first_name, &self.last_name, &self.city, &self.zipcode]
    }

    pub fn encode(&self, params: &EncodingParams) -> Result<BloomFilter> {
        encode_record(&self.qid_values(), params)
    }

    pub(crate) fn require(&self, name: &str) -> Result<&str> {
        self.attribute(name).ok_or_else(|| Error::MissingAttribute {
            attribute: name.to_string(),
            record: self.record_id.clone(),
        })
    }
}

/// What a party sends to the linkage unit: identifiers, blocking key value
/// and the encoding, never the plaintext.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedRecord {
    pub record_id: String,
    pub bkv: String,
    pub filter: BloomFilter,
    pub entity_id: Option<String>,
}

/// One party's encoded database.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EncodedDatabase {
    pub party: usize,
    pub records: Vec<EncodedRecord>,
}

impl EncodedDatabase {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

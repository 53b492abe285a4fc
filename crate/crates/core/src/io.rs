//! CSV file formats: plaintext party files, encoded party files, match sets
//! and report rows.
//!
//! Every file may start with `# key=value` lines echoing the configuration
//! that produced it. Readers skip them.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::cluster::{MatchSet, Member};
use crate::encode::BloomFilter;
use crate::error::{Error, Result};
use crate::record::{EncodedDatabase, EncodedRecord, PlainRecord};

/// Resolved configuration as ordered `key=value` pairs.
pub type ConfigHeader = Vec<(String, String)>;

pub fn write_header<W: Write>(out: &mut W, header: &[(String, String)]) -> Result<()> {
    for (k, v) in header {
        writeln!(out, "# {k}={v}")?;
    }
    Ok(())
}

/// Parses the leading `# key=value` lines of a file.
pub fn read_header<R: Read>(input: R) -> Result<ConfigHeader> {
    let mut text = String::new();
    std::io::BufReader::new(input).read_to_string(&mut text)?;
    Ok(text
        .lines()
        .map_while(|l| l.strip_prefix("# "))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect())
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))
}

#[derive(Debug, Serialize, Deserialize)]
struct PartyRow {
    record_id: String,
    #[serde(default)]
    entity_id: Option<String>,
    first_name: String,
    last_name: String,
    city: String,
    zipcode: String,
}

pub fn write_party<W: Write>(mut out: W, header: &[(String, String)], records: &[PlainRecord]) -> Result<()> {
    write_header(&mut out, header)?;
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(PartyRow {
            record_id: r.record_id.clone(),
            entity_id: r.entity_id.clone(),
            first_name: r.first_name.clone(),
            last_name: r.last_name.clone(),
            city: r.city.clone(),
            zipcode: r.zipcode.clone(),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_party<R: Read>(input: R) -> Result<Vec<PlainRecord>> {
    let mut records = Vec::new();
    for row in reader(input).deserialize() {
        let row: PartyRow = row?;
        records.push(PlainRecord {
            record_id: row.record_id,
            entity_id: row.entity_id.filter(|e| !e.is_empty()),
            first_name: row.first_name,
            last_name: row.last_name,
            city: row.city,
            zipcode: row.zipcode,
        });
    }
    check_unique_ids(records.iter().map(|r| r.record_id.as_str()))?;
    Ok(records)
}

pub fn write_party_file(path: &Path, header: &[(String, String)], records: &[PlainRecord]) -> Result<()> {
    write_party(create(path)?, header, records)
}

pub fn read_party_file(path: &Path) -> Result<Vec<PlainRecord>> {
    read_party(open(path)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct EncodedRow {
    record_id: String,
    bkv: String,
    bf: String,
    #[serde(default)]
    entity_id: Option<String>,
}

/// Encoded party file: `record_id, bkv, bf, entity_id` with the filter's
/// binary serialization in standard base64.
pub fn write_encoded<W: Write>(mut out: W, header: &[(String, String)], db: &EncodedDatabase) -> Result<()> {
    write_header(&mut out, header)?;
    let mut w = csv::Writer::from_writer(out);
    for r in &db.records {
        w.serialize(EncodedRow {
            record_id: r.record_id.clone(),
            bkv: r.bkv.clone(),
            bf: STANDARD.encode(r.filter.to_bytes()),
            entity_id: r.entity_id.clone(),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_encoded<R: Read>(input: R, party: usize) -> Result<EncodedDatabase> {
    let mut records = Vec::new();
    for row in reader(input).deserialize() {
        let row: EncodedRow = row?;
        let bytes = STANDARD
            .decode(&row.bf)
            .map_err(|e| Error::Decode(format!("record {}: {e}", row.record_id)))?;
        records.push(EncodedRecord {
            filter: BloomFilter::from_bytes(&bytes)?,
            record_id: row.record_id,
            bkv: row.bkv,
            entity_id: row.entity_id.filter(|e| !e.is_empty()),
        });
    }
    check_unique_ids(records.iter().map(|r| r.record_id.as_str()))?;
    Ok(EncodedDatabase { party, records })
}

pub fn write_encoded_file(path: &Path, header: &[(String, String)], db: &EncodedDatabase) -> Result<()> {
    write_encoded(create(path)?, header, db)
}

pub fn read_encoded_file(path: &Path, party: usize) -> Result<EncodedDatabase> {
    read_encoded(open(path)?, party)
}

/// True if the file's column header names a `bf` column.
pub fn is_encoded_file(path: &Path) -> Result<bool> {
    let mut r = reader(open(path)?);
    Ok(r.headers()?.iter().any(|h| h == "bf"))
}

fn check_unique_ids<'a>(ids: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::Data(format!("duplicate record_id `{id}`")));
        }
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct MatchRow {
    cluster_id: usize,
    party_index: usize,
    record_id: String,
    cluster_size: usize,
}

/// Writes `cluster_id, party_index, record_id, cluster_size` rows.
/// `record_ids[party][pos]` names each member.
pub fn write_matches<W: Write>(
    mut out: W,
    header: &[(String, String)],
    matches: &MatchSet,
    record_ids: &[Vec<String>],
) -> Result<()> {
    write_header(&mut out, header)?;
    let mut w = csv::Writer::from_writer(out);
    for (cluster_id, (party, pos), cluster_size) in matches.rows() {
        let record_id = record_ids
            .get(party)
            .and_then(|ids| ids.get(pos))
            .ok_or_else(|| Error::UnknownRecord {
                party,
                record: pos.to_string(),
            })?;
        w.serialize(MatchRow {
            cluster_id,
            party_index: party,
            record_id: record_id.clone(),
            cluster_size,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a match set back, resolving record ids against `record_ids`.
pub fn read_matches<R: Read>(input: R, record_ids: &[Vec<String>]) -> Result<MatchSet> {
    let index: Vec<std::collections::HashMap<&str, usize>> = record_ids
        .iter()
        .map(|ids| ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect())
        .collect();
    let mut clusters: Vec<Vec<Member>> = Vec::new();
    let mut sizes: Vec<usize> = Vec::new();
    for row in reader(input).deserialize() {
        let row: MatchRow = row?;
        let pos = index
            .get(row.party_index)
            .and_then(|m| m.get(row.record_id.as_str()))
            .copied()
            .ok_or_else(|| Error::UnknownRecord {
                party: row.party_index,
                record: row.record_id.clone(),
            })?;
        if row.cluster_id == clusters.len() + 1 {
            clusters.push(Vec::new());
            sizes.push(row.cluster_size);
        } else if row.cluster_id == 0 || row.cluster_id != clusters.len() {
            return Err(Error::Data(format!(
                "cluster ids not consecutive at {}",
                row.cluster_id
            )));
        }
        clusters[row.cluster_id - 1].push((row.party_index, pos));
    }
    for (i, (c, &size)) in clusters.iter_mut().zip(&sizes).enumerate() {
        if c.len() != size {
            return Err(Error::Data(format!(
                "cluster {} lists {} records but declares size {size}",
                i + 1,
                c.len()
            )));
        }
        c.sort_unstable();
    }
    Ok(MatchSet { clusters })
}

pub fn write_matches_file(
    path: &Path,
    header: &[(String, String)],
    matches: &MatchSet,
    record_ids: &[Vec<String>],
) -> Result<()> {
    write_matches(create(path)?, header, matches, record_ids)
}

pub fn read_matches_file(path: &Path, record_ids: &[Vec<String>]) -> Result<MatchSet> {
    read_matches(open(path)?, record_ids)
}

/// Appends one report row to `path`. A new file gets the config header and
/// the column header first; an existing file must have the same columns.
pub fn append_report_row(path: &Path, header: &[(String, String)], row: &[(String, String)]) -> Result<()> {
    let columns: Vec<&str> = row.iter().map(|(k, _)| k.as_str()).collect();
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    if !fresh {
        let mut r = reader(open(path)?);
        let existing: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        if existing != columns {
            return Err(Error::Data(format!(
                "{} has columns {existing:?}, cannot append {columns:?}",
                path.display()
            )));
        }
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut out = BufWriter::new(OpenOptions::new().create(true).append(true).open(path)?);
    if fresh {
        write_header(&mut out, header)?;
    }
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    if fresh {
        w.write_record(&columns)?;
    }
    w.write_record(row.iter().map(|(_, v)| v.as_str()))?;
    w.flush()?;
    Ok(())
}

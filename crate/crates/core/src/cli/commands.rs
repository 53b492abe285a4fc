use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::datagen::generate_synthetic;
use crate::encode::BloomFilter;
use crate::error::{Error, Result};
use crate::eval::{linkage_attack, score_linkage, targets_from_exposures, GroundTruth, QualityReport};
use crate::io::{self, ConfigHeader};
use crate::pipeline::{encode_parties, link_encoded, link_protocol, LinkOutcome, Mode};
use crate::protocol::write_transcript;
use crate::record::{EncodedDatabase, PlainRecord};

use super::RunConfig;

/// Party input files, either all plaintext or all encoded.
pub enum Inputs {
    Plain(Vec<Vec<PlainRecord>>),
    Encoded(Vec<EncodedDatabase>),
}

impl Inputs {
    pub fn load(paths: &[PathBuf]) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::InvalidParameter("no party files given".into()));
        }
        let encoded = paths
            .iter()
            .map(|p| io::is_encoded_file(p))
            .collect::<Result<Vec<_>>>()?;
        if encoded.iter().all(|&e| e) {
            let dbs = paths
                .iter()
                .enumerate()
                .map(|(i, p)| io::read_encoded_file(p, i))
                .collect::<Result<Vec<_>>>()?;
            check_uniform_encoding(&dbs)?;
            Ok(Inputs::Encoded(dbs))
        } else if encoded.iter().all(|&e| !e) {
            Ok(Inputs::Plain(
                paths.iter().map(|p| io::read_party_file(p)).collect::<Result<_>>()?,
            ))
        } else {
            Err(Error::Data("party files mix plaintext and encoded formats".into()))
        }
    }

    pub fn record_ids(&self) -> Vec<Vec<String>> {
        match self {
            Inputs::Plain(parties) => parties
                .iter()
                .map(|p| p.iter().map(|r| r.record_id.clone()).collect())
                .collect(),
            Inputs::Encoded(dbs) => dbs
                .iter()
                .map(|db| db.records.iter().map(|r| r.record_id.clone()).collect())
                .collect(),
        }
    }

    pub fn truth(&self) -> Result<GroundTruth> {
        let entity = |id: &str, e: &Option<String>| {
            e.clone()
                .ok_or_else(|| Error::Data(format!("record {id} has no entity_id")))
        };
        let entity_of = match self {
            Inputs::Plain(parties) => parties
                .iter()
                .map(|p| p.iter().map(|r| entity(&r.record_id, &r.entity_id)).collect())
                .collect::<Result<Vec<_>>>()?,
            Inputs::Encoded(dbs) => dbs
                .iter()
                .map(|db| db.records.iter().map(|r| entity(&r.record_id, &r.entity_id)).collect())
                .collect::<Result<Vec<_>>>()?,
        };
        GroundTruth::new(entity_of)
    }
}

fn check_uniform_encoding(dbs: &[EncodedDatabase]) -> Result<()> {
    let mut seen = dbs
        .iter()
        .flat_map(|db| &db.records)
        .map(|r| (r.filter.len(), r.filter.tag));
    if let Some(first) = seen.next() {
        if let Some(other) = seen.find(|s| *s != first) {
            return Err(Error::Data(format!(
                "encoded files disagree on filter parameters: {first:?} vs {other:?}"
            )));
        }
    }
    Ok(())
}

fn party_file(dir: &Path, prefix: &str, party: usize) -> PathBuf {
    dir.join(format!("{prefix}_{party}.csv"))
}

/// Writes `party_<i>.csv` for every generated party.
pub fn cmd_generate(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut spec = cfg.data.clone();
    spec.seed = cfg.seed();
    let ds = generate_synthetic(&spec)?;
    let header = cfg.data_header();
    let mut paths = Vec::with_capacity(ds.parties.len());
    for (i, records) in ds.parties.iter().enumerate() {
        let path = party_file(out_dir, "party", i);
        io::write_party_file(&path, &header, records)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Encodes plaintext party files into `encoded_<i>.csv`.
pub fn cmd_encode(cfg: &RunConfig, inputs: &[PathBuf], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let Inputs::Plain(parties) = Inputs::load(inputs)? else {
        return Err(Error::InvalidParameter("encode expects plaintext party files".into()));
    };
    let dbs = encode_parties(&parties, &cfg.pipeline)?;
    let header = cfg.header();
    let mut paths = Vec::with_capacity(dbs.len());
    for db in &dbs {
        let path = party_file(out_dir, "encoded", db.party);
        io::write_encoded_file(&path, &header, db)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Links the parties and writes the match set. Protocol mode needs the
/// plaintext files, since every round re-encodes the records; `transcript`
/// then receives the sessions behind each record's most revealing sum.
pub fn cmd_link(cfg: &RunConfig, inputs: &[PathBuf], out: &Path, transcript: Option<&Path>) -> Result<LinkOutcome> {
    if transcript.is_some() && cfg.mode != Mode::CbfProtocol {
        return Err(Error::InvalidParameter(
            "--transcript requires cbf-protocol mode".into(),
        ));
    }
    let inputs = Inputs::load(inputs)?;
    cfg.pipeline.linkage.validate(inputs.record_ids().len())?;
    let outcome = match (cfg.mode, &inputs) {
        (Mode::BfDirect, Inputs::Encoded(dbs)) => link_encoded(dbs, &cfg.pipeline)?,
        (Mode::BfDirect, Inputs::Plain(parties)) => {
            link_encoded(&encode_parties(parties, &cfg.pipeline)?, &cfg.pipeline)?
        }
        (Mode::CbfProtocol, Inputs::Plain(parties)) => {
            let (outcome, scorer) = link_protocol(parties, &cfg.pipeline)?;
            if let Some(path) = transcript {
                let keys: BTreeSet<(usize, Vec<_>)> = scorer
                    .exposures()
                    .into_iter()
                    .map(|(_, e)| (e.round, e.members))
                    .collect();
                let sessions = keys
                    .iter()
                    .map(|(round, members)| scorer.summation(*round, members).map(|(s, _)| s))
                    .collect::<Result<Vec<_>>>()?;
                let file = std::fs::File::create(path)?;
                write_transcript(std::io::BufWriter::new(file), &sessions.iter().collect::<Vec<_>>())?;
            }
            outcome
        }
        (Mode::CbfProtocol, Inputs::Encoded(_)) => {
            return Err(Error::InvalidParameter(
                "cbf-protocol mode re-encodes records every round and needs plaintext party files".into(),
            ))
        }
    };
    io::write_matches_file(out, &cfg.header(), &outcome.matches, &inputs.record_ids())?;
    Ok(outcome)
}

/// Settings of the linkage that produced a match file, read from its config
/// echo and falling back to the current configuration.
fn linkage_columns(cfg: &RunConfig, matches_header: &ConfigHeader) -> ConfigHeader {
    cfg.header()
        .into_iter()
        .map(|(k, v)| {
            let v = matches_header
                .iter()
                .find(|(hk, _)| *hk == k)
                .map_or(v, |(_, hv)| hv.clone());
            (k, v)
        })
        .collect()
}

pub fn quality_row(columns: &ConfigHeader, q: &QualityReport) -> ConfigHeader {
    let mut row = columns.clone();
    row.extend(
        [
            ("true_matches", q.true_matches.to_string()),
            ("false_matches", q.false_matches.to_string()),
            ("false_non_matches", q.false_non_matches.to_string()),
            ("precision", format!("{:.6}", q.precision)),
            ("recall", format!("{:.6}", q.recall)),
            ("f_measure", format!("{:.6}", q.f_measure)),
        ]
        .map(|(k, v)| (k.to_string(), v)),
    );
    row
}

/// Scores a match file against the entity ids in the party files.
pub fn cmd_evaluate(cfg: &RunConfig, inputs: &[PathBuf], matches: &Path, out: Option<&Path>) -> Result<ConfigHeader> {
    let inputs = Inputs::load(inputs)?;
    let header = io::read_header(
        std::fs::File::open(matches).map_err(|e| Error::Data(format!("cannot open {}: {e}", matches.display())))?,
    )?;
    let columns = linkage_columns(cfg, &header);
    let min_size = columns
        .iter()
        .find(|(k, _)| k == "min_subset_size")
        .and_then(|(_, v)| v.parse().ok())
        .unwrap_or(cfg.pipeline.linkage.min_subset_size);
    let set = io::read_matches_file(matches, &inputs.record_ids())?;
    let report = score_linkage(&set, &inputs.truth()?, min_size)?;
    let row = quality_row(&columns, &report);
    if let Some(path) = out {
        io::append_report_row(path, &columns, &row)?;
    }
    Ok(row)
}

/// Runs the linkage in protocol mode and attacks what the linkage unit saw:
/// one row for the plain filters of the exposed records and one for the
/// sums they took part in. The adversary's global database is the union of
/// all party files.
pub fn cmd_attack(cfg: &RunConfig, inputs: &[PathBuf], out: Option<&Path>) -> Result<Vec<ConfigHeader>> {
    let Inputs::Plain(parties) = Inputs::load(inputs)? else {
        return Err(Error::InvalidParameter("attack expects plaintext party files".into()));
    };
    cfg.pipeline.linkage.validate(parties.len())?;
    let (_, scorer) = link_protocol(&parties, &cfg.pipeline)?;
    let plain: Vec<Vec<BloomFilter>> = encode_parties(&parties, &cfg.pipeline)?
        .into_iter()
        .map(|db| db.records.into_iter().map(|r| r.filter).collect())
        .collect();
    let (cbf_targets, bf_targets) = targets_from_exposures(&scorer.exposures(), &plain, &cfg.pipeline.encoding)?;
    let global = parties.concat();
    let mut columns = cfg.header();
    columns.retain(|(k, _)| k != "mode");
    let mut rows = Vec::new();
    for (name, targets) in [("bf", &bf_targets), ("cbf", &cbf_targets)] {
        let report = linkage_attack(targets, &global, &cfg.pipeline.encoding)?;
        let mut row = columns.clone();
        row.extend(
            [
                ("attacked", name.to_string()),
                ("targets", targets.len().to_string()),
                ("global_records", global.len().to_string()),
                ("dr_mean", format!("{:.6}", report.dr_mean)),
                ("dr_marketer", format!("{:.6}", report.dr_marketer)),
            ]
            .map(|(k, v)| (k.to_string(), v)),
        );
        if let Some(path) = out {
            io::append_report_row(path, &cfg.header(), &row)?;
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Prints rows as CSV with one header line.
pub fn print_rows<W: Write>(mut out: W, rows: &[ConfigHeader]) -> Result<()> {
    let mut w = csv::Writer::from_writer(&mut out);
    if let Some(first) = rows.first() {
        w.write_record(first.iter().map(|(k, _)| k.as_str()))?;
    }
    for row in rows {
        w.write_record(row.iter().map(|(_, v)| v.as_str()))?;
    }
    w.flush()?;
    Ok(())
}

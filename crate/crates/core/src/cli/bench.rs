use std::path::Path;
use std::time::{Duration, Instant};

use crate::datagen::{generate_synthetic, OverlapSpec};
use crate::encode::extract_qgrams;
use crate::error::Result;
use crate::eval::score_linkage;
use crate::io::{self, ConfigHeader};
use crate::pipeline::{encode_parties, link_encoded, link_protocol, LinkOutcome, Mode, PipelineConfig};
use crate::record::PlainRecord;

use super::RunConfig;

pub const BENCH_COLUMNS: [&str; 17] = [
    "num_parties",
    "records_per_party",
    "sim_threshold",
    "min_subset_size",
    "mapping",
    "mode",
    "corruption_rate",
    "seed",
    "repeats",
    "runtime_ms",
    "comparisons",
    "blocks",
    "precision",
    "recall",
    "f_measure",
    "mean_qgrams",
    "peak_rss_kb",
];

/// Process high-water mark of resident memory in kB, where the platform
/// exposes it.
pub fn peak_rss_kb() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    status
        .lines()
        .find_map(|l| l.strip_prefix("VmHWM:"))
        .and_then(|v| v.trim().trim_end_matches("kB").trim().parse().ok())
}

/// Average number of distinct q-grams per record, summed over attributes.
pub fn mean_qgrams(parties: &[Vec<PlainRecord>], cfg: &PipelineConfig) -> f64 {
    let (total, count) = parties.iter().flatten().fold((0usize, 0usize), |(t, c), r| {
        let grams: usize = r
            .qid_values()
            .iter()
            .map(|v| extract_qgrams(v, &cfg.encoding).len())
            .sum();
        (t + grams, c + 1)
    });
    if count == 0 {
        0.0
    } else {
        total as f64 / count as f64
    }
}

fn median(mut times: Vec<Duration>) -> Duration {
    times.sort_unstable();
    times[times.len() / 2]
}

/// Sweeps every combination of the bench axes, repeating each cell and
/// reporting the median link time. Cells with `s_m` above the party count
/// are skipped.
pub fn cmd_bench(cfg: &RunConfig, out: &Path) -> Result<Vec<Vec<String>>> {
    let axes = &cfg.bench;
    let mut rows = Vec::new();
    for &p in &axes.parties {
        for &n in &axes.records {
            let mut spec = OverlapSpec::quarter_split(p, n, cfg.seed());
            spec.full_overlap_fraction = cfg.data.full_overlap_fraction;
            if p > 2 {
                spec.subset_overlap_fraction = cfg.data.subset_overlap_fraction;
                spec.subset_size_distribution = vec![cfg.data.subset_overlap_fraction / (p - 2) as f64; p - 2];
            }
            spec.corruption_rate = cfg.data.corruption_rate;
            spec.relative_rate = cfg.data.relative_rate;
            let ds = generate_synthetic(&spec)?;
            let qgrams = mean_qgrams(&ds.parties, &cfg.pipeline);
            let encoded = match cfg.mode {
                Mode::BfDirect => Some(encode_parties(&ds.parties, &cfg.pipeline)?),
                Mode::CbfProtocol => None,
            };

            for &s_t in &axes.thresholds {
                for &s_m in axes.subset_sizes.iter().filter(|&&s| s <= p) {
                    for &mapping in &axes.mappings {
                        let mut run_cfg = cfg.pipeline.clone();
                        run_cfg.linkage.sim_threshold = s_t;
                        run_cfg.linkage.min_subset_size = s_m;
                        run_cfg.linkage.mapping = mapping;
                        let mut times = Vec::with_capacity(axes.repeats);
                        let mut outcome = LinkOutcome::default();
                        for _ in 0..axes.repeats {
                            let start = Instant::now();
                            outcome = match &encoded {
                                Some(dbs) => link_encoded(dbs, &run_cfg)?,
                                None => link_protocol(&ds.parties, &run_cfg)?.0,
                            };
                            times.push(start.elapsed());
                        }
                        let q = score_linkage(&outcome.matches, &ds.truth, s_m)?;
                        rows.push(vec![
                            p.to_string(),
                            n.to_string(),
                            s_t.to_string(),
                            s_m.to_string(),
                            mapping.to_string(),
                            cfg.mode.to_string(),
                            spec.corruption_rate.to_string(),
                            cfg.seed().to_string(),
                            axes.repeats.to_string(),
                            format!("{:.3}", median(times).as_secs_f64() * 1e3),
                            outcome.comparisons.to_string(),
                            outcome.blocks.to_string(),
                            format!("{:.6}", q.precision),
                            format!("{:.6}", q.recall),
                            format!("{:.6}", q.f_measure),
                            format!("{qgrams:.3}"),
                            peak_rss_kb().map(|kb| kb.to_string()).unwrap_or_default(),
                        ]);
                    }
                }
            }
        }
    }
    write_sweep(out, &cfg.header(), &rows)?;
    Ok(rows)
}

fn write_sweep(path: &Path, header: &ConfigHeader, rows: &[Vec<String>]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    io::write_header(&mut file, header)?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(BENCH_COLUMNS)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

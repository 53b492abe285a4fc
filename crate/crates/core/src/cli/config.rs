use std::path::Path;

use clap::Args;
use serde::Deserialize;

use crate::cluster::{LinkageConfig, Mapping};
use crate::datagen::OverlapSpec;
use crate::encode::EncodingParams;
use crate::error::{Error, Result};
use crate::io::ConfigHeader;
use crate::pipeline::{Mode, PipelineConfig, DEFAULT_BLOCK_ATTRS};

/// Settings that can come from a `key = value` config file or from flags.
/// Flags take precedence over the file.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Root seed for every random stream.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long)]
    pub workers: Option<usize>,

    #[arg(long)]
    pub bf_length: Option<usize>,
    #[arg(long)]
    pub num_hashes: Option<usize>,
    #[arg(long)]
    pub gram_length: Option<usize>,

    /// Minimum cluster-to-record similarity.
    #[arg(long)]
    pub sim_threshold: Option<f64>,
    /// Minimum number of records in a reported cluster.
    #[arg(long)]
    pub min_subset_size: Option<usize>,
    /// early, late or greedy.
    #[arg(long)]
    pub mapping: Option<String>,
    /// random, size-descending or quality-descending:<scores>.
    #[arg(long)]
    pub ordering: Option<String>,
    #[arg(long)]
    pub overlap_factor: Option<usize>,
    /// Attributes whose Soundex codes form the blocking key.
    #[arg(long, value_delimiter = ',')]
    pub block_attrs: Option<Vec<String>>,
    /// bf-direct or cbf-protocol.
    #[arg(long)]
    pub mode: Option<String>,

    #[arg(long)]
    pub num_parties: Option<usize>,
    #[arg(long)]
    pub records_per_party: Option<usize>,
    #[arg(long)]
    pub full_overlap: Option<f64>,
    /// Spread evenly over the subset sizes 2 to p-1.
    #[arg(long)]
    pub subset_overlap: Option<f64>,
    #[arg(long)]
    pub corruption_rate: Option<f64>,
    #[arg(long)]
    pub relative_rate: Option<f64>,

    #[arg(long, value_delimiter = ',')]
    pub bench_parties: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub bench_records: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub bench_thresholds: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub bench_subset_sizes: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub bench_mappings: Option<Vec<String>>,
    #[arg(long)]
    pub bench_repeats: Option<usize>,
}

macro_rules! merge {
    ($base:ident, $over:ident, $($field:ident),+ $(,)?) => {
        $( if $over.$field.is_some() { $base.$field = $over.$field; } )+
    };
}

impl Settings {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Data(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::InvalidParameter(format!("config {}: {e}", path.display())))
    }

    /// `self` with every field set in `flags` replaced.
    pub fn overlay(mut self, flags: Settings) -> Self {
        merge!(
            self,
            flags,
            seed,
            workers,
            bf_length,
            num_hashes,
            gram_length,
            sim_threshold,
            min_subset_size,
            mapping,
            ordering,
            overlap_factor,
            block_attrs,
            mode,
            num_parties,
            records_per_party,
            full_overlap,
            subset_overlap,
            corruption_rate,
            relative_rate,
            bench_parties,
            bench_records,
            bench_thresholds,
            bench_subset_sizes,
            bench_mappings,
            bench_repeats,
        );
        self
    }
}

/// Bench sweep axes.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchAxes {
    pub parties: Vec<usize>,
    pub records: Vec<usize>,
    pub thresholds: Vec<f64>,
    pub subset_sizes: Vec<usize>,
    pub mappings: Vec<Mapping>,
    pub repeats: usize,
}

/// Fully resolved and validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub workers: Option<usize>,
    pub pipeline: PipelineConfig,
    pub mode: Mode,
    pub data: OverlapSpec,
    pub bench: BenchAxes,
}

impl RunConfig {
    pub fn resolve(s: Settings) -> Result<Self> {
        let seed = s.seed.unwrap_or(0);
        let defaults = EncodingParams::default();
        let encoding = EncodingParams {
            bf_length: s.bf_length.unwrap_or(defaults.bf_length),
            num_hashes: s.num_hashes.unwrap_or(defaults.num_hashes),
            gram_length: s.gram_length.unwrap_or(defaults.gram_length),
            ..defaults
        };
        encoding.validate()?;

        let lc = LinkageConfig::default();
        let linkage = LinkageConfig {
            sim_threshold: s.sim_threshold.unwrap_or(lc.sim_threshold),
            min_subset_size: s.min_subset_size.unwrap_or(lc.min_subset_size),
            ordering: s
                .ordering
                .as_deref()
                .map(str::parse)
                .transpose()?
                .unwrap_or(lc.ordering),
            mapping: s.mapping.as_deref().map(str::parse).transpose()?.unwrap_or(lc.mapping),
            overlap_factor: s.overlap_factor.unwrap_or(lc.overlap_factor),
        };
        // the upper bound on min_subset_size is checked once the party count is known
        linkage.validate(usize::MAX)?;
        let block_attrs = s
            .block_attrs
            .unwrap_or_else(|| DEFAULT_BLOCK_ATTRS.iter().map(|a| a.to_string()).collect());
        if block_attrs.is_empty() {
            return Err(Error::InvalidParameter(
                "block_attrs must name at least one attribute".into(),
            ));
        }
        let mode = s.mode.as_deref().map(str::parse).transpose()?.unwrap_or_default();

        let num_parties = s.num_parties.unwrap_or(3);
        let records_per_party = s.records_per_party.unwrap_or(1000);
        let mut data = OverlapSpec::quarter_split(num_parties, records_per_party, seed);
        if let Some(full) = s.full_overlap {
            data.full_overlap_fraction = full;
        }
        if let Some(subset) = s.subset_overlap {
            let sizes = num_parties.saturating_sub(2);
            if sizes == 0 && subset > 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "subset_overlap needs at least 3 parties, got {num_parties}"
                )));
            }
            data.subset_overlap_fraction = subset;
            data.subset_size_distribution = vec![subset / sizes.max(1) as f64; sizes];
        }
        data.corruption_rate = s.corruption_rate.unwrap_or(0.0);
        if let Some(rate) = s.relative_rate {
            data.relative_rate = rate;
        }
        data.validate()?;

        let bench = BenchAxes {
            parties: s.bench_parties.unwrap_or_else(|| vec![3, 5, 7, 10]),
            records: s.bench_records.unwrap_or_else(|| vec![1000]),
            thresholds: s.bench_thresholds.unwrap_or_else(|| vec![linkage.sim_threshold]),
            subset_sizes: s.bench_subset_sizes.unwrap_or_else(|| vec![linkage.min_subset_size]),
            mappings: match s.bench_mappings {
                Some(names) => names.iter().map(|m| m.parse()).collect::<Result<_>>()?,
                None => Mapping::ALL.to_vec(),
            },
            repeats: s.bench_repeats.unwrap_or(3),
        };
        if bench.repeats < 3 {
            return Err(Error::InvalidParameter(format!(
                "bench_repeats must be at least 3, got {}",
                bench.repeats
            )));
        }
        if [
            bench.parties.is_empty(),
            bench.records.is_empty(),
            bench.thresholds.is_empty(),
        ]
        .into_iter()
        .chain([bench.subset_sizes.is_empty(), bench.mappings.is_empty()])
        .any(|e| e)
        {
            return Err(Error::InvalidParameter("bench axes must not be empty".into()));
        }
        if bench.parties.iter().any(|&p| p < 2) {
            return Err(Error::InvalidParameter(
                "bench_parties entries must be at least 2".into(),
            ));
        }
        if s.workers == Some(0) {
            return Err(Error::InvalidParameter("workers must be at least 1".into()));
        }

        Ok(Self {
            workers: s.workers,
            pipeline: PipelineConfig {
                encoding,
                linkage,
                block_attrs,
                seed,
            },
            mode,
            data,
            bench,
        })
    }

    pub fn seed(&self) -> u64 {
        self.pipeline.seed
    }

    /// Encoding and linkage settings, echoed into every output file.
    pub fn header(&self) -> ConfigHeader {
        let p = &self.pipeline;
        let pairs: [(&str, String); 11] = [
            ("seed", p.seed.to_string()),
            ("mode", self.mode.to_string()),
            ("bf_length", p.encoding.bf_length.to_string()),
            ("num_hashes", p.encoding.num_hashes.to_string()),
            ("gram_length", p.encoding.gram_length.to_string()),
            ("block_attrs", p.block_attrs.join(",")),
            ("sim_threshold", p.linkage.sim_threshold.to_string()),
            ("min_subset_size", p.linkage.min_subset_size.to_string()),
            ("mapping", p.linkage.mapping.to_string()),
            ("ordering", p.linkage.ordering.to_string()),
            ("overlap_factor", p.linkage.overlap_factor.to_string()),
        ];
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    /// [`RunConfig::header`] plus the data generation settings.
    pub fn data_header(&self) -> ConfigHeader {
        let d = &self.data;
        let mut header = self.header();
        header.extend(
            [
                ("num_parties", d.num_parties.to_string()),
                ("records_per_party", d.records_per_party.to_string()),
                ("full_overlap", d.full_overlap_fraction.to_string()),
                ("subset_overlap", d.subset_overlap_fraction.to_string()),
                ("corruption_rate", d.corruption_rate.to_string()),
                ("relative_rate", d.relative_rate.to_string()),
            ]
            .map(|(k, v)| (k.to_string(), v)),
        );
        header
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let cfg = RunConfig::resolve(Settings::default()).unwrap();
        assert_eq!(cfg.pipeline.encoding.bf_length, 1000);
        assert_eq!(cfg.pipeline.encoding.num_hashes, 30);
        assert_eq!(cfg.pipeline.encoding.gram_length, 2);
        assert_eq!(cfg.pipeline.linkage.sim_threshold, 0.8);
        assert_eq!(cfg.mode, Mode::BfDirect);
        assert_eq!(cfg.bench.repeats, 3);
    }

    #[test]
    fn flags_win_over_file() {
        let file: Settings = toml::from_str("seed = 4\nmapping = \"late\"\nsim_threshold = 0.7\n").unwrap();
        let flags = Settings {
            mapping: Some("greedy".into()),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(file.overlay(flags)).unwrap();
        assert_eq!(cfg.seed(), 4);
        assert_eq!(cfg.pipeline.linkage.mapping, Mapping::Greedy);
        assert_eq!(cfg.pipeline.linkage.sim_threshold, 0.7);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_config_errors() {
        assert!(toml::from_str::<Settings>("threshold = 0.8").is_err());
        let bad = |s: Settings| matches!(RunConfig::resolve(s), Err(Error::InvalidParameter(_)));
        assert!(bad(Settings {
            mapping: Some("optimal".into()),
            ..Default::default()
        }));
        assert!(bad(Settings {
            sim_threshold: Some(1.5),
            ..Default::default()
        }));
        assert!(bad(Settings {
            bench_repeats: Some(2),
            ..Default::default()
        }));
        assert!(bad(Settings {
            bf_length: Some(0),
            ..Default::default()
        }));
    }

    #[test]
    fn subset_overlap_is_spread_evenly() {
        let cfg = RunConfig::resolve(Settings {
            num_parties: Some(6),
            subset_overlap: Some(0.2),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(cfg.data.subset_size_distribution, vec![0.05; 4]);
    }
}

//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints its `ACCEPTANCE <n> PASS|FAIL` line; exits non-zero if
//! any criterion fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use mpprl::assignment::{greedy, hungarian, SimilarityMatrix};
use mpprl::blocking::BlockIndex;
use mpprl::cli::{cmd_encode, cmd_evaluate, cmd_generate, cmd_link, RunConfig, Settings};
use mpprl::cluster::{
    collect_matches, link_blocks, link_early, total_comparisons, DirectScorer, LinkageConfig, Mapping, Member,
    SimilarityKind, TableScorer,
};
use mpprl::datagen::{generate_synthetic, OverlapSpec};
use mpprl::encode::{dice_bf, dice_cbf, encode_record, sum_to_cbf, BloomFilter, EncodingParams};
use mpprl::eval::{linkage_attack, score_linkage, targets_from_exposures};
use mpprl::pipeline::{encode_parties, link_direct, link_joint_reference, link_protocol, PipelineConfig};
use mpprl::protocol::{secure_sum, SummationSession};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------- 1

fn dice_fixtures() -> Outcome {
    // l = 14, k = 2, q = 2; hash seeds chosen so the two names set 7 and 5 bits
    let params = EncodingParams::new(14, 2, 2).unwrap().with_seeds(2, 3);
    let sarah = encode_record(&["sarah"], &params).unwrap();
    let sara = encode_record(&["sara"], &params).unwrap();
    let pair = sarah.dice(&sara);
    let pair_ok = sarah.cardinality() == 7 && sara.cardinality() == 5 && sarah.common_ones(&sara) == 5;

    // three filters summing to 18 ones, 4 positions set in all of them
    let b1 = BloomFilter::from_bit_str("1111110000");
    let b2 = BloomFilter::from_bit_str("1111001100");
    let b3 = BloomFilter::from_bit_str("1111000011");
    let cbf = sum_to_cbf([&b1, &b2, &b3]).unwrap();
    let triple = dice_cbf(&cbf).unwrap();
    let cbf_ok = cbf.total() == 18 && cbf.full_positions() == 4;

    check(
        pair_ok
            && cbf_ok
            && (pair - 0.8333).abs() <= 1e-4
            && (pair - 10.0 / 12.0).abs() <= 1e-9
            && (triple - 0.6667).abs() <= 1e-4
            && (triple - 12.0 / 18.0).abs() <= 1e-9,
        format!("pair dice {pair:.10}, cbf dice {triple:.10}"),
    )
}

// ---------------------------------------------------------------- 2

fn cbf_dice_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let mut mismatches = 0;
    for i in 0..10_000 {
        let len = if i % 2 == 0 { 64 } else { 1000 };
        let p = rng.gen_range(2..=8);
        let density = rng.gen_range(0.05..0.6);
        let filters: Vec<BloomFilter> = (0..p)
            .map(|_| BloomFilter::from_positions(len, (0..len).filter(|_| rng.gen_bool(density))))
            .collect();
        let direct = dice_bf(&filters).unwrap();
        let summed = dice_cbf(&sum_to_cbf(&filters).unwrap()).unwrap();
        if direct.to_bits() != summed.to_bits() {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    check(
        mismatches == 0 && elapsed < Duration::from_secs(10),
        format!("{mismatches} mismatches in 10000 sets, {elapsed:.2?}"),
    )
}

// ---------------------------------------------------------------- 3

/// Best total over every partial injection of rows into columns.
fn brute_force_max(m: &[Vec<f64>]) -> f64 {
    fn go(m: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
        if row == m.len() {
            return 0.0;
        }
        let mut best = go(m, row + 1, used);
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                best = best.max(m[row][c] + go(m, row + 1, used));
                used[c] = false;
            }
        }
        best
    }
    let cols = m.first().map_or(0, Vec::len);
    go(m, 0, &mut vec![false; cols])
}

fn assignment_oracle() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mut wrong = 0;
    let mut greedy_above = 0;
    for _ in 0..1000 {
        let rows = rng.gen_range(1..=7);
        let cols = rng.gen_range(1..=7);
        let m: Vec<Vec<f64>> = (0..rows)
            .map(|_| {
                (0..cols)
                    .map(|_| {
                        if rng.gen_bool(0.3) {
                            0.0
                        } else {
                            // coarse grid so ties occur
                            f64::from(rng.gen_range(1..=20u32)) / 20.0
                        }
                    })
                    .collect()
            })
            .collect();
        let matrix = SimilarityMatrix::from_rows(&m);
        let h = hungarian(&matrix).total_similarity;
        let g = greedy(&matrix, &(0..rows).collect::<Vec<_>>()).total_similarity;
        if (h - brute_force_max(&m)).abs() > 1e-9 {
            wrong += 1;
        }
        if g > h + 1e-9 {
            greedy_above += 1;
        }
    }
    check(
        wrong == 0 && greedy_above == 0,
        format!("{wrong} non-optimal hungarian totals, {greedy_above} greedy totals above hungarian"),
    )
}

// ---------------------------------------------------------------- 4

fn conflict_fixture() -> Outcome {
    let m = SimilarityMatrix::from_rows(&[vec![1.0, 0.9, 0.0], vec![0.9, 0.7, 0.0], vec![0.0, 0.0, 0.8]]);
    let g = greedy(&m, &[0, 1, 2]);
    let h = hungarian(&m);
    check(
        (g.total_similarity - 2.5).abs() < 1e-9
            && (h.total_similarity - 2.6).abs() < 1e-9
            && h.pairs == vec![(0, 1), (1, 0), (2, 2)],
        format!(
            "greedy {:.2}, optimal {:.2} with {:?}",
            g.total_similarity, h.total_similarity, h.pairs
        ),
    )
}

// ---------------------------------------------------------------- 5

/// `r{party}{record}`, one-based.
fn r(code: usize) -> Member {
    (code / 10 - 1, code % 10 - 1)
}

fn named(clusters: &[Vec<Member>]) -> Vec<Vec<usize>> {
    clusters
        .iter()
        .map(|c| c.iter().map(|&(p, i)| (p + 1) * 10 + i + 1).collect())
        .collect()
}

fn early_mapping_fixture() -> Outcome {
    let mut t = TableScorer::new();
    for (a, b, s) in [
        (22, 11, 0.9),
        (23, 13, 0.85),
        (21, 14, 0.8),
        (32, 11, 0.9),
        (32, 22, 0.9),
        (31, 11, 0.85),
        (31, 22, 0.8),
        (32, 12, 0.8),
        (33, 13, 0.9),
        (33, 23, 0.9),
        (34, 14, 0.7),
        (34, 21, 0.7),
        (34, 12, 0.5),
        (41, 13, 0.9),
        (41, 23, 0.85),
        (41, 33, 0.8),
        (43, 12, 0.8),
        (43, 32, 0.9),
    ] {
        t.set(r(a), r(b), s);
    }
    let block: Vec<Vec<usize>> = [4, 3, 4, 3].iter().map(|&n| (0..n).collect()).collect();
    let cfg = LinkageConfig {
        sim_threshold: 0.75,
        ..Default::default()
    };
    let g = link_early("fixture", &block, &[0, 1, 2, 3], &t, &cfg).unwrap();
    let graphs = [g];
    let three = named(&collect_matches(&graphs, 3).clusters);
    let two = named(&collect_matches(&graphs, 2).clusters);
    let expected3 = vec![vec![11, 22, 31], vec![12, 32, 43], vec![13, 23, 33, 41]];
    let mut expected2 = expected3.clone();
    expected2.push(vec![14, 21]);
    check(
        three == expected3 && two == expected2,
        format!("s_m=3 {three:?}; s_m=2 {two:?}"),
    )
}

// ---------------------------------------------------------------- 6, 7

const SEEDS: u64 = 5;
const PARTIES: [usize; 3] = [3, 5, 10];
const CORRUPTION: [f64; 3] = [0.0, 0.2, 0.4];

/// Mean F over the seeds and the wall time of those runs, per
/// `(parties, corruption index, mapping)`.
type Grid = BTreeMap<(usize, usize, Mapping), (f64, Duration)>;

fn quality_grid() -> Grid {
    let mut grid = Grid::new();
    for p in PARTIES {
        for (ci, &corruption) in CORRUPTION.iter().enumerate() {
            let mut sums: BTreeMap<Mapping, (f64, Duration)> = BTreeMap::new();
            for seed in 0..SEEDS {
                let start = Instant::now();
                let ds =
                    generate_synthetic(&OverlapSpec::quarter_split(p, 5000, seed).with_corruption(corruption)).unwrap();
                let generation = start.elapsed();
                for mapping in Mapping::ALL {
                    let start = Instant::now();
                    let mut cfg = PipelineConfig::default();
                    cfg.seed = seed;
                    cfg.linkage.mapping = mapping;
                    let out = link_direct(&ds.parties, &cfg).unwrap();
                    let q = score_linkage(&out.matches, &ds.truth, 2).unwrap();
                    let entry = sums.entry(mapping).or_default();
                    entry.0 += q.f_measure;
                    entry.1 += generation + start.elapsed();
                }
            }
            for (mapping, (f, t)) in sums {
                grid.insert((p, ci, mapping), (f / SEEDS as f64, t));
            }
        }
    }
    grid
}

fn mean_f(grid: &Grid, p: usize, ci: usize, m: Mapping) -> f64 {
    grid[&(p, ci, m)].0
}

fn end_to_end_quality(grid: &Grid) -> Outcome {
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for p in PARTIES {
        let (e, l, g) = (
            mean_f(grid, p, 0, Mapping::Early),
            mean_f(grid, p, 0, Mapping::Late),
            mean_f(grid, p, 0, Mapping::Greedy),
        );
        summary.push(format!("p={p}: late {l:.4} early {e:.4} greedy {g:.4}"));
        if e < 0.95 || l < 0.95 {
            failures.push(format!("p={p} mean F below 0.95"));
        }
        if !(l >= e && e >= g) {
            failures.push(format!("p={p} ordering late >= early >= greedy violated"));
        }
        if p == 10 && e - g < 0.02 {
            failures.push(format!("p=10 early - greedy = {:.4} < 0.02", e - g));
        }
    }
    let slowest = grid.values().map(|v| v.1).max().unwrap_or_default();
    if slowest >= Duration::from_secs(300) {
        failures.push(format!("a configuration took {slowest:.1?}"));
    }
    summary.push(format!("slowest configuration {slowest:.1?}"));
    check(
        failures.is_empty(),
        format!("{}{}", summary.join("; "), fail_suffix(&failures)),
    )
}

fn corruption_sensitivity(grid: &Grid) -> Outcome {
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for p in PARTIES {
        for m in Mapping::ALL {
            let fs: Vec<f64> = (0..CORRUPTION.len()).map(|ci| mean_f(grid, p, ci, m)).collect();
            if !fs.windows(2).all(|w| w[0] > w[1]) {
                failures.push(format!("p={p} {m} not strictly decreasing"));
            }
            summary.push(format!("p={p} {m} {:.3}/{:.3}/{:.3}", fs[0], fs[1], fs[2]));
        }
    }
    check(
        failures.is_empty(),
        format!("{}{}", summary.join("; "), fail_suffix(&failures)),
    )
}

fn fail_suffix(failures: &[String]) -> String {
    if failures.is_empty() {
        String::new()
    } else {
        format!(" | failed: {}", failures.join("; "))
    }
}

// ---------------------------------------------------------------- 8

fn subset_size_axis() -> Outcome {
    const SUBSET_SEEDS: u64 = 3;
    let mut f: BTreeMap<(Mapping, usize), f64> = BTreeMap::new();
    for seed in 0..SUBSET_SEEDS {
        // 5% of records per entity size 2..=10, the rest non-matches
        let ds = generate_synthetic(&OverlapSpec::per_size(10, 1000, 0.05, seed)).unwrap();
        for mapping in Mapping::ALL {
            for s_m in [2, 10] {
                let mut cfg = PipelineConfig::default();
                cfg.seed = seed;
                cfg.linkage.mapping = mapping;
                cfg.linkage.min_subset_size = s_m;
                let out = link_direct(&ds.parties, &cfg).unwrap();
                let q = score_linkage(&out.matches, &ds.truth, s_m).unwrap();
                *f.entry((mapping, s_m)).or_default() += q.f_measure / SUBSET_SEEDS as f64;
            }
        }
    }
    let g2 = f[&(Mapping::Greedy, 2)];
    let g10 = f[&(Mapping::Greedy, 10)];
    let e2 = f[&(Mapping::Early, 2)];
    let l2 = f[&(Mapping::Late, 2)];
    check(
        g2 <= g10 && e2 > g2 && l2 > g2,
        format!("greedy s_m=2 {g2:.4} s_m=10 {g10:.4}; at s_m=2 early {e2:.4} late {l2:.4}"),
    )
}

// ---------------------------------------------------------------- 9

/// Early-mapping comparisons with every record in one block and no
/// matching entities.
fn single_block_comparisons(p: usize, n: usize) -> u64 {
    let mut spec = OverlapSpec::quarter_split(p, n, 9);
    spec.full_overlap_fraction = 0.0;
    spec.subset_overlap_fraction = 0.0;
    spec.subset_size_distribution = vec![0.0; p.saturating_sub(2)];
    spec.relative_rate = 0.0;
    let ds = generate_synthetic(&spec).unwrap();
    let params = EncodingParams::default();
    let filters: Vec<Vec<BloomFilter>> = ds
        .parties
        .iter()
        .map(|party| party.iter().map(|r| r.encode(&params).unwrap()).collect())
        .collect();
    let keys: Vec<Vec<&str>> = ds.parties.iter().map(|party| vec!["one"; party.len()]).collect();
    let order: Vec<usize> = (0..p).collect();
    let scorer = DirectScorer::new(filters, SimilarityKind::Average);
    let graphs = link_blocks(
        &BlockIndex::from_keys(&keys),
        &order,
        &scorer,
        &LinkageConfig::default(),
    )
    .unwrap();
    total_comparisons(&graphs)
}

/// Worst ratio between a measurement and the best single-constant fit
/// `c * x^2` (geometric-mean estimate of `c`).
fn quadratic_fit_spread(points: &[(f64, f64)]) -> f64 {
    let ratios: Vec<f64> = points.iter().map(|(x, y)| y / (x * x)).collect();
    let c = (ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64).exp();
    ratios.iter().map(|r| (r / c).max(c / r)).fold(1.0, f64::max)
}

fn scalability_trend() -> Outcome {
    let by_n: Vec<(f64, f64)> = [1000, 2000, 4000]
        .iter()
        .map(|&n| (n as f64, single_block_comparisons(3, n) as f64))
        .collect();
    let by_p: Vec<(f64, f64)> = [3, 5, 7, 10]
        .iter()
        .map(|&p| (p as f64, single_block_comparisons(p, 500) as f64))
        .collect();
    let spread_n = quadratic_fit_spread(&by_n);
    let spread_p = quadratic_fit_spread(&by_p);
    check(
        spread_n <= 1.5 && spread_p <= 1.5,
        format!("n-sweep {by_n:?} worst ratio {spread_n:.3}; p-sweep {by_p:?} worst ratio {spread_p:.3}"),
    )
}

// ---------------------------------------------------------------- 10

fn protocol_equivalence() -> Outcome {
    let configs = [
        (3, 300, 0.2, 1, Mapping::Early),
        (4, 200, 0.0, 2, Mapping::Late),
        (5, 150, 0.4, 3, Mapping::Greedy),
    ];
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for (p, n, corruption, seed, mapping) in configs {
        let ds = generate_synthetic(&OverlapSpec::quarter_split(p, n, seed).with_corruption(corruption)).unwrap();
        let mut cfg = PipelineConfig::default();
        cfg.seed = seed;
        cfg.linkage.mapping = mapping;
        let (protocol, _) = link_protocol(&ds.parties, &cfg).unwrap();
        let direct = link_joint_reference(&ds.parties, &cfg).unwrap();
        if protocol.matches != direct.matches {
            failures.push(format!("seed {seed}: match sets differ"));
        }
        let stats = protocol.protocol.expect("protocol statistics");
        for (&(round, summands), &(sessions, messages)) in &stats.by_round {
            if messages != sessions * (summands as u64 + 1) {
                failures.push(format!(
                    "seed {seed} round {round}: {messages} messages for {sessions} sessions"
                ));
            }
            // iteration i = round + 1 sums at most i filters in the merge phase
            if round < p && summands > round + 1 {
                failures.push(format!("seed {seed} round {round}: {summands} summands"));
            }
        }
        // every merge iteration i >= 2 has full-cluster sums using i + 1 messages
        for round in 1..p.min(3) {
            if !stats.by_round.keys().any(|&(r, s)| r == round && s == round + 1) {
                failures.push(format!("seed {seed}: no full-cluster sum in round {round}"));
            }
        }
        summary.push(format!(
            "seed {seed} p={p} {mapping}: {} clusters, {} sessions, {} messages",
            protocol.matches.len(),
            stats.sessions,
            stats.messages
        ));
    }
    check(
        failures.is_empty(),
        format!("{}{}", summary.join("; "), fail_suffix(&failures)),
    )
}

// ---------------------------------------------------------------- 11

/// Chi-squared statistic of `samples` over 16 equal-width bins of `u32`.
fn chi_squared_16(samples: &[u32]) -> f64 {
    let mut bins = [0u64; 16];
    for &s in samples {
        bins[(s >> 28) as usize] += 1;
    }
    let expected = samples.len() as f64 / 16.0;
    bins.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum()
}

fn privacy_ordering() -> Outcome {
    let cfg = PipelineConfig::default();
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for corruption in [0.0, 0.2] {
        for seed in 0..3 {
            // 5 parties of 1000 records: 5000 encoded records
            let ds =
                generate_synthetic(&OverlapSpec::quarter_split(5, 1000, seed).with_corruption(corruption)).unwrap();
            let mut run = cfg.clone();
            run.seed = seed;
            let (_, scorer) = link_protocol(&ds.parties, &run).unwrap();
            let plain: Vec<Vec<BloomFilter>> = encode_parties(&ds.parties, &run)
                .unwrap()
                .into_iter()
                .map(|db| db.records.into_iter().map(|r| r.filter).collect())
                .collect();
            let (cbf_targets, bf_targets) = targets_from_exposures(&scorer.exposures(), &plain, &run.encoding).unwrap();
            let global = ds.parties.concat();
            let bf = linkage_attack(&bf_targets, &global, &run.encoding).unwrap();
            let cbf = linkage_attack(&cbf_targets, &global, &run.encoding).unwrap();
            if !(cbf.dr_mean < bf.dr_mean && cbf.dr_marketer < bf.dr_marketer) {
                failures.push(format!("corruption {corruption} seed {seed}"));
            }
            summary.push(format!(
                "c={corruption} seed {seed}: mean {:.3}<{:.3} marketer {:.3}<{:.3}",
                cbf.dr_mean, bf.dr_mean, cbf.dr_marketer, bf.dr_marketer
            ));
        }
    }

    // first party-to-party message of 10,000 three-party sessions
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let len = 64;
    let mut samples = Vec::with_capacity(10_000);
    for id in 0..10_000u64 {
        let filters: Vec<BloomFilter> = (0..3)
            .map(|_| BloomFilter::from_positions(len, (0..len).filter(|_| rng.gen_bool(0.4))))
            .collect();
        let inputs: Vec<(usize, &BloomFilter)> = filters.iter().enumerate().collect();
        let mut session = SummationSession::new(id, len, &mut rng);
        secure_sum(&inputs, &mut session).unwrap();
        samples.push(session.transcript[1].vector[0]);
    }
    let chi2 = chi_squared_16(&samples);
    // critical value of chi-squared with 15 degrees of freedom at 0.01
    if chi2 >= 30.578 {
        failures.push(format!("chi-squared {chi2:.2} rejects uniformity"));
    }
    summary.push(format!("chi-squared {chi2:.2} < 30.578"));
    check(
        failures.is_empty(),
        format!("{}{}", summary.join("; "), fail_suffix(&failures)),
    )
}

// ---------------------------------------------------------------- 12

fn pipeline_files(dir: &std::path::Path, mode: &str) -> (Vec<u8>, Vec<u8>) {
    let cfg = RunConfig::resolve(Settings {
        seed: Some(21),
        num_parties: Some(4),
        records_per_party: Some(400),
        corruption_rate: Some(0.2),
        mapping: Some("late".into()),
        ordering: Some("random".into()),
        mode: Some(mode.into()),
        ..Default::default()
    })
    .unwrap();
    let plain = cmd_generate(&cfg, &dir.join("plain")).unwrap();
    let inputs = if mode == "bf-direct" {
        cmd_encode(&cfg, &plain, &dir.join("encoded")).unwrap()
    } else {
        plain
    };
    let matches = dir.join("matches.csv");
    let report = dir.join("report.csv");
    cmd_link(&cfg, &inputs, &matches, None).unwrap();
    cmd_evaluate(&cfg, &inputs, &matches, Some(&report)).unwrap();
    (std::fs::read(matches).unwrap(), std::fs::read(report).unwrap())
}

fn determinism() -> Outcome {
    let mut failures = Vec::new();
    for mode in ["bf-direct", "cbf-protocol"] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let first = pipeline_files(a.path(), mode);
        let second = pipeline_files(b.path(), mode);
        if first != second {
            failures.push(mode.to_string());
        }
    }
    check(
        failures.is_empty(),
        format!(
            "match and report files byte-identical across two runs{}",
            fail_suffix(&failures)
        ),
    )
}

// ----------------------------------------------------------------

fn main() {
    let mut results: Vec<(usize, Outcome, Duration)> = Vec::new();
    let mut run = |n: usize, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        println!(
            "ACCEPTANCE {n} {} ({elapsed:.1?}) {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
        results.push((n, outcome, elapsed));
    };
    run(1, &dice_fixtures);
    run(2, &cbf_dice_equivalence);
    run(3, &assignment_oracle);
    run(4, &conflict_fixture);
    run(5, &early_mapping_fixture);
    let grid = quality_grid();
    run(6, &|| end_to_end_quality(&grid));
    run(7, &|| corruption_sensitivity(&grid));
    run(8, &subset_size_axis);
    run(9, &scalability_trend);
    run(10, &protocol_equivalence);
    run(11, &privacy_ordering);
    run(12, &determinism);

    let failed: Vec<usize> = results.iter().filter(|r| !r.1.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} passed, {} failed",
        results.len() - failed.len(),
        failed.len()
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}

//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (visible with `cargo test --test acceptance -- --nocapture`).

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use synthony_core::baselines::expected_random_metrics;
use synthony_core::bench::{run_ablations, split_datasets, BenchInputs, SplitSpec};
use synthony_core::calibrate::{calibrate, train_pair, CalibrationConfig, TrainPair};
use synthony_core::data::{Column, Dataset};
use synthony_core::dims::{Dims, Intent, ScaleFactors};
use synthony_core::engine::{match_score, score_pool, AblationFlags};
use synthony_core::metrics::{
    column_shape_score, ndcg, proportion_closer_to_real, spearman, top_k_accuracy, Ranking,
};
use synthony_core::registry::{EngineConfig, ModelConstraints, ModelFamily, ModelSpec, Registry};
use synthony_core::stress::{
    adjusted_skewness, requirement_vector, StressFlags, StressProfile, CARDINALITY_BINS, ROW_BINS,
    SKEW_BINS, ZIPF_BINS,
};
use synthony_core::synthetic::{generate_dataset, planted_fixture, StressSpec};

/// The planted benchmark pinned for criteria 6 and 7.
const PLANTED_FIXTURE_SEED: u64 = 83;

fn verdict(criterion: usize, name: &str, pass: bool) {
    println!(
        "[acceptance] criterion {criterion:>2} ({name}): {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} ({name}) failed");
}

fn profile(skew: f64, cardinality: usize, zipf: f64, rows: usize, correlation: f64) -> StressProfile {
    StressProfile {
        max_abs_skewness: skew,
        max_cardinality: cardinality,
        max_zipf_ratio: zipf,
        row_count: rows,
        correlation_density: correlation,
        flags: StressFlags {
            skew_flag: skew > 2.0,
            cardinality_flag: cardinality > 500,
            zipf_flag: zipf > 0.80,
            small_data_flag: rows < 500,
        },
    }
}

#[test]
fn criterion_01_requirement_quantization_boundaries() {
    let started = Instant::now();
    let mut pass = true;

    let skew_level = |s: f64| requirement_vector(&profile(s, 0, 0.0, 20_000, 0.0)).skew_handling;
    pass &= skew_level(0.4999) == 0;
    pass &= skew_level(0.5) == 1;
    pass &= skew_level(2.9999) == 3;
    pass &= skew_level(3.0) == 4;

    let rows_level = |n: usize| requirement_vector(&profile(0.0, 0, 0.0, n, 0.0)).small_data;
    pass &= rows_level(500) == 3;
    pass &= rows_level(499) == 4;

    const EPS: f64 = 1e-9;
    for (i, edge) in SKEW_BINS.iter().enumerate() {
        pass &= skew_level(edge - EPS) as usize == i;
        pass &= skew_level(*edge) as usize == i + 1;
    }
    for (i, edge) in CARDINALITY_BINS.iter().enumerate() {
        let level =
            |u: usize| requirement_vector(&profile(0.0, u, 0.0, 20_000, 0.0)).cardinality_handling;
        pass &= level(edge - 1) as usize == i;
        pass &= level(*edge) as usize == i + 1;
    }
    for (i, edge) in ZIPF_BINS.iter().enumerate() {
        let level =
            |z: f64| requirement_vector(&profile(0.0, 0, z, 20_000, 0.0)).zipfian_handling;
        pass &= level(edge - EPS) as usize == i;
        pass &= level(*edge) as usize == i + 1;
    }
    for (i, edge) in ROW_BINS.iter().enumerate() {
        pass &= rows_level(*edge) as usize == i;
        pass &= rows_level(edge - 1) as usize == i + 1;
    }
    // Correlation bins (engine defaults).
    let corr_level =
        |f: f64| requirement_vector(&profile(0.0, 0, 0.0, 20_000, f)).correlation_handling;
    for (i, edge) in [0.10, 0.25, 0.50, 0.75].iter().enumerate() {
        pass &= corr_level(edge - EPS) as usize == i;
        pass &= corr_level(*edge) as usize == i + 1;
    }
    // Privacy requirement identically zero.
    pass &= requirement_vector(&profile(9.0, 9_999, 0.99, 10, 1.0)).privacy_dp == 0;

    pass &= started.elapsed().as_secs_f64() < 1.0;
    verdict(1, "requirement quantization boundaries", pass);
}

#[test]
fn criterion_02_decay_curve_all_25_pairs() {
    let expected = [
        // capability 0..=4 (rows) x requirement 0..=4 (columns)
        [1.0, 0.7, 0.4, 0.0, 0.0],
        [1.0, 1.0, 0.7, 0.4, 0.0],
        [1.0, 1.0, 1.0, 0.7, 0.4],
        [1.0, 1.0, 1.0, 1.0, 0.7],
        [1.0, 1.0, 1.0, 1.0, 1.0],
    ];
    let mut pass = true;
    for capability in 0..=4u8 {
        for requirement in 0..=4u8 {
            let got = match_score(capability, requirement).unwrap();
            pass &= got == expected[capability as usize][requirement as usize];
        }
    }
    verdict(2, "decay curve over all 25 pairs", pass);
}

// ---------------------------------------------------------------------------
// Criterion 3: definition-level brute-force oracles, independent of the
// implementations in the metrics module.

fn brute_spearman(predicted: &Ranking, oracle: &Ranking) -> f64 {
    let pred: Vec<&String> = predicted
        .names()
        .iter()
        .filter(|n| oracle.names().contains(n))
        .collect();
    let orac: Vec<&String> = oracle
        .names()
        .iter()
        .filter(|n| predicted.names().contains(n))
        .collect();
    let n = pred.len() as f64;
    let pred_ranks: Vec<f64> = (1..=pred.len()).map(|i| i as f64).collect();
    let orac_ranks: Vec<f64> = pred
        .iter()
        .map(|name| (orac.iter().position(|o| o == name).unwrap() + 1) as f64)
        .collect();
    let mean = (n + 1.0) / 2.0;
    let mut cov = 0.0;
    let mut var_p = 0.0;
    let mut var_o = 0.0;
    for (p, o) in pred_ranks.iter().zip(&orac_ranks) {
        cov += (p - mean) * (o - mean);
        var_p += (p - mean) * (p - mean);
        var_o += (o - mean) * (o - mean);
    }
    cov / (var_p * var_o).sqrt()
}

fn brute_dcg(order: &[usize], relevance: &[f64]) -> f64 {
    order
        .iter()
        .enumerate()
        .map(|(i, model)| relevance[*model] / ((i + 2) as f64).log2())
        .sum()
}

/// Ideal DCG found by enumerating every permutation of the overlap, rather
/// than assuming the sorted order is ideal.
fn brute_ideal_dcg(n: usize) -> f64 {
    let relevance: Vec<f64> = (0..n).map(|rank| (n - rank - 1) as f64).collect();
    let mut items: Vec<usize> = (0..n).collect();
    let mut best: f64 = 0.0;
    heap_permute(&mut items, n, &mut |perm| {
        best = best.max(brute_dcg(perm, &relevance));
    });
    best
}

fn brute_ndcg(predicted: &Ranking, oracle: &Ranking, ideal: f64) -> f64 {
    let orac: Vec<&String> = oracle.names().iter().collect();
    let relevance: Vec<f64> = (0..orac.len())
        .map(|rank| (orac.len() - rank - 1) as f64)
        .collect();
    let order: Vec<usize> = predicted
        .names()
        .iter()
        .map(|name| orac.iter().position(|o| *o == name).unwrap())
        .collect();
    brute_dcg(&order, &relevance) / ideal
}

fn heap_permute<T: Clone>(items: &mut Vec<T>, k: usize, visit: &mut impl FnMut(&[T])) {
    if k <= 1 {
        visit(items);
        return;
    }
    for i in 0..k {
        heap_permute(items, k - 1, visit);
        if k.is_multiple_of(2) {
            items.swap(i, k - 1);
        } else {
            items.swap(0, k - 1);
        }
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut items: Vec<usize> = (0..n).collect();
    heap_permute(&mut items, n, &mut |perm| out.push(perm.to_vec()));
    out
}

fn ranking_of(perm: &[usize]) -> Ranking {
    Ranking::new(perm.iter().map(|i| format!("m{i}")).collect()).unwrap()
}

#[test]
fn criterion_03_metric_oracles_brute_force() {
    let started = Instant::now();
    const TOLERANCE: f64 = 1e-12;
    let mut pass = true;
    let mut compared = 0usize;

    let check_pair = |predicted: &Ranking, oracle: &Ranking, ideal: f64| -> bool {
        let mut ok = true;
        let fast = spearman(predicted, oracle).unwrap();
        ok &= (fast - brute_spearman(predicted, oracle)).abs() < TOLERANCE;
        let fast = ndcg(predicted, oracle).unwrap();
        ok &= (fast - brute_ndcg(predicted, oracle, ideal)).abs() < TOLERANCE;
        ok
    };

    // All permutation pairs exhaustively for n <= 4.
    for n in 2..=4usize {
        let perms = permutations(n);
        let ideal = brute_ideal_dcg(n);
        for a in &perms {
            for b in &perms {
                pass &= check_pair(&ranking_of(a), &ranking_of(b), ideal);
                compared += 1;
            }
        }
    }

    // 5,000 random pairs each for n = 5 and n = 6.
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for n in [5usize, 6] {
        let perms = permutations(n);
        let ideal = brute_ideal_dcg(n);
        for _ in 0..5_000 {
            let a = &perms[rng.random_range(0..perms.len())];
            let b = &perms[rng.random_range(0..perms.len())];
            pass &= check_pair(&ranking_of(a), &ranking_of(b), ideal);
            compared += 1;
        }
    }

    // Top-K against a set-based recount on random pools.
    for trial in 0..200 {
        let n = 2 + (trial % 5);
        let perms = permutations(n);
        let pairs: Vec<(Ranking, Ranking)> = (0..6)
            .map(|_| {
                (
                    ranking_of(&perms[rng.random_range(0..perms.len())]),
                    ranking_of(&perms[rng.random_range(0..perms.len())]),
                )
            })
            .collect();
        for k in 1..=n {
            let fast = top_k_accuracy(&pairs, k).unwrap();
            let slow = pairs
                .iter()
                .filter(|(p, o)| p.names().iter().take(k).any(|m| m == o.best().unwrap()))
                .count() as f64
                / pairs.len() as f64;
            pass &= (fast - slow).abs() < TOLERANCE;
        }
    }

    pass &= compared >= 10_000;
    pass &= started.elapsed().as_secs_f64() < 30.0;
    verdict(3, "metric oracles vs brute force", pass);
}

#[test]
fn criterion_04_skewness_fixture() {
    let value = adjusted_skewness(&[0.0, 0.0, 0.0, 1.0]);
    verdict(4, "adjusted skewness of [0,0,0,1]", (value - 2.0).abs() < 1e-9);
}

#[test]
fn criterion_05_random_baseline_monte_carlo() {
    let pool: Vec<String> = (0..10).map(|i| format!("m{i}")).collect();
    let oracle = Ranking::new(pool.clone()).unwrap();
    let pairs = vec![(pool, oracle)];
    let summary = expected_random_metrics(&pairs, 100_000, 42).unwrap();
    let pass = (0.097..=0.103).contains(&summary.top1)
        && (-0.02..=0.02).contains(&summary.spearman_mean);
    println!(
        "[acceptance]   random baseline: top1 = {:.4}, mean spearman = {:+.4}",
        summary.top1, summary.spearman_mean
    );
    verdict(5, "random baseline Monte-Carlo bounds", pass);
}

fn planted_pairs(
    fixture: &synthony_core::synthetic::PlantedFixture,
) -> Vec<TrainPair> {
    let mut pairs = Vec::new();
    for dataset in &fixture.datasets {
        for intent in Intent::ALL {
            let oracle = fixture.oracle.oracle_ranking(dataset.name(), intent).unwrap();
            pairs.push(train_pair(dataset, intent, oracle, &fixture.registry));
        }
    }
    pairs
}

#[test]
fn criterion_06_planted_registry_recovery() {
    let started = Instant::now();
    let fixture = planted_fixture(PLANTED_FIXTURE_SEED);
    let pairs = planted_pairs(&fixture);
    assert_eq!(pairs.len(), 18, "6 datasets x 3 intents");

    // Joint calibration, 500 trials, seed 42 (the configured defaults).
    let config = CalibrationConfig::joint();
    assert_eq!((config.trials, config.startup_trials, config.seed), (500, 50, 42));
    let result = calibrate(&config, &pairs, &fixture.registry).unwrap();
    println!(
        "[acceptance]   planted recovery: train mean spearman = {:.4}",
        result.best_objective
    );
    let recovered = result.best_objective >= 0.9;

    // Equal-budget race, same seed family for both samplers.
    let mut wins = 0;
    for seed in 100..110u64 {
        let tpe_config = CalibrationConfig {
            seed,
            ..CalibrationConfig::joint()
        };
        // startup == trials degenerates the sampler to pure random search.
        let random_config = CalibrationConfig {
            startup_trials: tpe_config.trials,
            ..tpe_config.clone()
        };
        let tpe = calibrate(&tpe_config, &pairs, &fixture.registry).unwrap();
        let random = calibrate(&random_config, &pairs, &fixture.registry).unwrap();
        if tpe.best_objective > random.best_objective {
            wins += 1;
        }
    }
    println!("[acceptance]   planted recovery: tpe beat random search {wins}/10 seeds");

    let elapsed = started.elapsed();
    println!("[acceptance]   planted recovery: runtime {elapsed:?}");
    let pass = recovered && wins >= 8 && elapsed.as_secs_f64() < 120.0;
    verdict(6, "planted-registry recovery", pass);
}

#[test]
fn criterion_07_ablation_ordering_on_planted_fixture() {
    let fixture = planted_fixture(PLANTED_FIXTURE_SEED);
    let datasets: BTreeMap<String, Dataset> = fixture
        .datasets
        .iter()
        .map(|d| (d.name().to_string(), d.clone()))
        .collect();
    let names: Vec<String> = datasets.keys().cloned().collect();
    // Evaluate the ablations over every planted pair; the corpus side of the
    // harness needs a nominal train list.
    let split = SplitSpec {
        train: split_datasets(&names, 1, 3).unwrap().train,
        test: names.clone(),
    };
    let inputs = BenchInputs {
        datasets: &datasets,
        oracle: &fixture.oracle,
        registry: &fixture.registry,
        split: &split,
        seed: 1,
    };
    let rows = run_ablations(&inputs, fixture.registry.scale_factors.as_ref().unwrap()).unwrap();
    let by_name: BTreeMap<&str, f64> = rows
        .iter()
        .map(|r| (r.variant.as_str(), r.summary.spearman_mean))
        .collect();
    println!(
        "[acceptance]   ablations: full={:.4} bare={:.4} stress_only={:.4} focus_only={:.4}",
        by_name["full"], by_name["bare"], by_name["stress_only"], by_name["focus_only"]
    );
    let pass =
        by_name["full"] >= by_name["bare"] && by_name["stress_only"] >= by_name["focus_only"];
    verdict(7, "ablation ordering on planted fixture", pass);
}

#[test]
fn criterion_08_engine_argmax_invariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let config = EngineConfig::default();
    let mut pass = true;
    for instance in 0..100 {
        // Random dataset with a random stress character.
        let spec = StressSpec {
            name: format!("inv{instance}"),
            rows: rng.random_range(120..1500),
            skew_sigma: rng.random_range(0.0..1.5),
            id_cardinality: if rng.random::<f64>() < 0.4 {
                Some(rng.random_range(20..600))
            } else {
                None
            },
            zipf: Some((rng.random_range(2..20), rng.random_range(0.0..2.0))),
            correlated_followers: rng.random_range(0..3),
            noise_columns: rng.random_range(1..4),
            missing_rate: 0.0,
        };
        let dataset = generate_dataset(&spec, 9000 + instance as u64);
        let profile = synthony_core::stress::stress_profile(&dataset);
        let requirements = requirement_vector(&profile);

        // Random registry with zero quality bonuses.
        let models: Vec<ModelSpec> = (0..8)
            .map(|m| ModelSpec {
                name: format!("g{m}"),
                family: ModelFamily::Statistical,
                capabilities: Dims::from_array([(); 6].map(|_| rng.random_range(0..=4u8))),
                avg_quality_score: 0.0,
                constraints: ModelConstraints::default(),
                extra: Default::default(),
            })
            .collect();
        let registry = Registry {
            version: "inv".to_string(),
            models,
            engine: config.clone(),
            scale_factors: None,
            extra: Default::default(),
        };
        let pool: Vec<&ModelSpec> = registry.models.iter().collect();
        let alphas = ScaleFactors::from_array([(); 6].map(|_| rng.random_range(0.01..10.0)));

        let reference: Vec<String> = score_pool(
            &pool,
            &requirements,
            Some(&alphas),
            &AblationFlags::FULL,
            &config,
        )
        .into_iter()
        .map(|m| m.name)
        .collect();
        for scale in [0.1, 3.0, 10.0] {
            let scaled = ScaleFactors::from_array(alphas.to_array().map(|a| a * scale));
            let ranking: Vec<String> = score_pool(
                &pool,
                &requirements,
                Some(&scaled),
                &AblationFlags::FULL,
                &config,
            )
            .into_iter()
            .map(|m| m.name)
            .collect();
            pass &= ranking == reference;
        }
    }
    verdict(8, "scale-factor argmax invariance", pass);
}

#[test]
fn criterion_09_data_quality_metric_fixtures() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut pass = true;

    // Identity: random mixed tables score exactly 1.0 against themselves.
    for trial in 0..20 {
        let rows = rng.random_range(5..60);
        let numeric: Vec<Option<f64>> =
            (0..rows).map(|_| Some(rng.random_range(-5.0..5.0))).collect();
        let categorical: Vec<Option<String>> = (0..rows)
            .map(|_| Some(format!("c{}", rng.random_range(0..4))))
            .collect();
        let table = Dataset::new(
            format!("t{trial}"),
            vec![
                Column::numeric("x", numeric),
                Column::categorical("c", categorical),
            ],
        )
        .unwrap();
        pass &= column_shape_score(&table, &table).unwrap() == 1.0;
    }

    // PCR extremes, exact.
    let train = Dataset::new(
        "train",
        vec![Column::numeric("x", vec![Some(0.0), Some(1.0), Some(2.0)])],
    )
    .unwrap();
    let holdout = Dataset::new(
        "holdout",
        vec![Column::numeric("x", vec![Some(7.0), Some(8.0), Some(9.0)])],
    )
    .unwrap();
    let copy_of_train = Dataset::new(
        "synth",
        vec![Column::numeric("x", vec![Some(0.0), Some(1.0), Some(2.0)])],
    )
    .unwrap();
    let copy_of_holdout = Dataset::new(
        "synth",
        vec![Column::numeric("x", vec![Some(7.0), Some(8.0), Some(9.0)])],
    )
    .unwrap();
    pass &= proportion_closer_to_real(&copy_of_train, &train, &holdout).unwrap() == 1.0;
    pass &= proportion_closer_to_real(&copy_of_holdout, &train, &holdout).unwrap() == 0.0;

    verdict(9, "data-quality metric fixtures", pass);
}

// ---------------------------------------------------------------------------
// Criteria 10 and 11 drive the compiled binary.

use std::io::Write as _;
use std::process::{Command, Stdio};

fn fixtures_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

/// Runs `synthony serve` over the fixture data root and replays the given
/// request lines, returning the raw response lines.
fn replay_transcript(lines: &str, cache_dir: &std::path::Path) -> Vec<String> {
    let mut child = Command::new(env!("CARGO_BIN_EXE_synthony"))
        .args([
            "serve",
            "--data-root",
            fixtures_dir().join("datasets").to_str().unwrap(),
            "--cache-dir",
            cache_dir.to_str().unwrap(),
        ])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .expect("spawn synthony serve");
    child
        .stdin
        .take()
        .unwrap()
        .write_all(lines.as_bytes())
        .expect("write requests");
    let output = child.wait_with_output().expect("collect responses");
    assert!(output.status.success(), "serve exited with {:?}", output.status);
    String::from_utf8(output.stdout)
        .expect("utf8 responses")
        .lines()
        .map(|l| l.to_string())
        .collect()
}

#[test]
fn criterion_10_rpc_golden_transcript() {
    // The three replayable example commands (list datasets, profile Bean,
    // read the registry resource), plus an out-of-scope method.
    let requests = concat!(
        r#"{"jsonrpc":"2.0", "method":"tools/call", "id":1, "params":{"name":"list_datasets", "arguments":{"format_filter":"csv"}}}"#,
        "\n",
        r#"{"jsonrpc":"2.0", "method":"tools/call", "id":2, "params":{"name":"analyze_stress_profile", "arguments":{"dataset_name":"Bean"}}}"#,
        "\n",
        r#"{"jsonrpc":"2.0", "method":"resources/read", "id":4, "params":{"uri":"models://registry"}}"#,
        "\n",
        r#"{"jsonrpc":"2.0", "method":"prompts/get", "id":5, "params":{"name":"analyze-and-recommend"}}"#,
        "\n",
    );

    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let first = replay_transcript(requests, dir_a.path());
    let second = replay_transcript(requests, dir_b.path());

    let mut pass = first.len() == 4;
    // Byte-stable across runs (responses carry no timestamps).
    pass &= first == second;

    // Byte-stable against the committed golden transcript.
    let golden_path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden/rpc_transcript.jsonl");
    let golden = std::fs::read_to_string(&golden_path).expect("golden transcript present");
    let golden_lines: Vec<&str> = golden.lines().collect();
    pass &= first.iter().map(|s| s.as_str()).collect::<Vec<_>>() == golden_lines;

    // Spot-check shapes: ids echoed, unknown method is -32601.
    let parsed: Vec<serde_json::Value> = first
        .iter()
        .map(|l| serde_json::from_str(l).expect("valid json"))
        .collect();
    pass &= parsed[0]["id"] == 1 && parsed[0]["result"]["datasets"].is_array();
    pass &= parsed[1]["id"] == 2 && parsed[1]["result"]["profile"].is_object();
    pass &= parsed[2]["id"] == 4 && parsed[2]["result"]["document"]["models"].is_array();
    pass &= parsed[3]["id"] == 5 && parsed[3]["error"]["code"] == -32601;

    verdict(10, "rpc golden transcript", pass);
}

#[test]
fn criterion_11_evaluate_is_byte_deterministic() {
    let fixtures = fixtures_dir();
    let run = |out_dir: &std::path::Path| {
        let status = Command::new(env!("CARGO_BIN_EXE_synthony"))
            .args([
                "evaluate",
                "--datasets",
                fixtures.join("datasets").to_str().unwrap(),
                "--oracle",
                fixtures.join("oracle.csv").to_str().unwrap(),
                "--split-file",
                fixtures.join("split.json").to_str().unwrap(),
                "--seed",
                "42",
                "--out-dir",
                out_dir.to_str().unwrap(),
            ])
            .stdout(Stdio::null())
            .status()
            .expect("run synthony evaluate");
        assert!(status.success());
        (
            std::fs::read(out_dir.join("report.txt")).unwrap(),
            std::fs::read(out_dir.join("report.json")).unwrap(),
        )
    };
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let (text_a, json_a) = run(dir_a.path());
    let (text_b, json_b) = run(dir_b.path());
    let pass = text_a == text_b && json_a == json_b && !text_a.is_empty();
    verdict(11, "evaluate reports byte-identical", pass);
}

//! Regenerates the checked-in benchmark fixtures under `fixtures/`:
//! seven synthetic demo datasets, the oracle metric table, and the pinned
//! train/test split. Everything is seeded, so reruns are byte-identical.
//!
//!     cargo run -p synthony-core --example gen_fixtures

use std::path::Path;

use synthony_core::bench::split_datasets;
use synthony_core::registry::builtin_registry;
use synthony_core::synthetic::{dataset_to_csv, demo_fixture};

const DEMO_SEED: u64 = 7;
const SPLIT_SEED: u64 = 42;

fn main() {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let datasets_dir = fixtures.join("datasets");
    std::fs::create_dir_all(&datasets_dir).expect("create fixtures/datasets");

    let registry = builtin_registry();
    let (datasets, oracle) = demo_fixture(DEMO_SEED, &registry);
    for dataset in &datasets {
        let path = datasets_dir.join(format!("{}.csv", dataset.name()));
        std::fs::write(&path, dataset_to_csv(dataset)).expect("write dataset");
        println!(
            "wrote {} ({} rows x {} cols)",
            path.display(),
            dataset.row_count(),
            dataset.column_count()
        );
    }

    let oracle_path = fixtures.join("oracle.csv");
    std::fs::write(&oracle_path, oracle.to_csv_string()).expect("write oracle");
    println!("wrote {} ({} rows)", oracle_path.display(), oracle.rows.len());

    let names: Vec<String> = datasets.iter().map(|d| d.name().to_string()).collect();
    let split = split_datasets(&names, SPLIT_SEED, 4).expect("split");
    let split_path = fixtures.join("split.json");
    std::fs::write(&split_path, serde_json::to_string_pretty(&split).unwrap())
        .expect("write split");
    println!(
        "wrote {} (train {:?} / test {:?})",
        split_path.display(),
        split.train,
        split.test
    );
}

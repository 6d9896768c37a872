//! Every experiment config shipped in the repository must parse and
//! validate (all arms resolvable) before any computation would run.

use std::path::PathBuf;

use robustreg::experiments::ExperimentConfig;

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn all_repo_configs_validate() {
    let dir = configs_dir();
    let mut found = 0;
    for entry in std::fs::read_dir(&dir).expect("configs directory exists") {
        let path = entry.unwrap().path();
        if path.extension().map(|e| e == "json").unwrap_or(false) {
            let config = ExperimentConfig::load(&path)
                .unwrap_or_else(|e| panic!("{} failed to validate: {e}", path.display()));
            assert!(!config.arms.is_empty());
            assert!(!config.cells().unwrap().is_empty());
            found += 1;
        }
    }
    assert!(found >= 5, "expected the five figure configs, found {found}");
}

#[test]
fn config_hash_is_stable_across_load() {
    let path = configs_dir().join("consistency_cauchy.json");
    let a = ExperimentConfig::load(&path).unwrap().sha256();
    let b = ExperimentConfig::load(&path).unwrap().sha256();
    assert_eq!(a, b);
}

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use egoauth_cli::config::AppConfig;
use egoauth_core::ingest::SelectionMode;

/// Settings for synthetic corpora: every frame is fixated, and a block of
/// three blank frames is too small to be a cluster.
pub const SYNTHETIC_TOML: &str = "[ingest]\nselection_mode = \"fixation\"\n[cluster]\nmin_points = 4\n";

pub fn synthetic_config() -> AppConfig {
    let cfg = AppConfig::from_toml(SYNTHETIC_TOML).expect("valid config");
    assert_eq!(cfg.ingest.selection_mode, SelectionMode::Fixation);
    cfg
}

/// Every file under `root`, keyed by relative path.
pub fn file_tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    out
}

/// Rand index of two labelings of the same items: the fraction of pairs on
/// which they agree about "same group".
pub fn rand_index<A: PartialEq, B: PartialEq>(a: &[A], b: &[B]) -> f64 {
    assert_eq!(a.len(), b.len());
    let (mut agree, mut pairs) = (0u64, 0u64);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            pairs += 1;
            if (a[i] == a[j]) == (b[i] == b[j]) {
                agree += 1;
            }
        }
    }
    if pairs == 0 { 1.0 } else { agree as f64 / pairs as f64 }
}

#[test]
fn rand_index_by_hand() {
    assert_eq!(rand_index(&[1, 1, 2, 2], &["a", "a", "b", "b"]), 1.0);
    // Pairs: (0,1) same/same, (0,2) diff/same, (1,2) diff/same.
    assert!((rand_index(&[1, 1, 2], &[0, 0, 0]) - 1.0 / 3.0).abs() < 1e-12);
}

//! Benchmark fixtures.

use std::path::PathBuf;

use korgforge::synthesis::ThreatModel;
use korgforge::tmfile;

/// Loads one of the shipped threat models by file name.
pub fn model(name: &str) -> ThreatModel {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models").join(name);
    tmfile::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

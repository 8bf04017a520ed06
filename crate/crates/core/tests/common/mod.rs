#![allow(dead_code)]

pub mod fd;

use std::path::PathBuf;

/// MovieLens 100K `u.data`: `$ATTREC_ML100K`, else `data/ml-100k/u.data`
/// at the workspace root. Panics with instructions when absent.
pub fn ml100k() -> PathBuf {
    let path = std::env::var_os("ATTREC_ML100K").map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/ml-100k/u.data")
    });
    assert!(
        path.is_file(),
        "MovieLens 100K not found at {}; run scripts/fetch_ml100k.sh or set ATTREC_ML100K",
        path.display()
    );
    path
}

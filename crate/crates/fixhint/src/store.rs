//! Bundle persistence as a single JSON document.

use std::fs;
use std::path::Path;

use fixhint_core::bundle::{ModelBundle, SCHEMA_VERSION};
use serde::Deserialize;

use crate::error::{Error, Result};

pub fn bundle_to_json(bundle: &ModelBundle) -> String {
    serde_json::to_string(bundle).expect("bundle is serializable")
}

pub fn save_bundle(bundle: &ModelBundle, path: &Path) -> Result<()> {
    fs::write(path, bundle_to_json(bundle)).map_err(Error::io(path))
}

#[derive(Deserialize)]
struct Header {
    schema_version: u64,
}

pub fn bundle_from_json(text: &str, path: &Path) -> Result<ModelBundle> {
    let corrupt = |source| Error::Corrupt { path: path.to_path_buf(), source };
    let header: Header = serde_json::from_str(text).map_err(corrupt)?;
    if header.schema_version != u64::from(SCHEMA_VERSION) {
        return Err(Error::Version {
            path: path.to_path_buf(),
            found: header.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    serde_json::from_str(text).map_err(corrupt)
}

pub fn load_bundle(path: &Path) -> Result<ModelBundle> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    bundle_from_json(&text, path)
}

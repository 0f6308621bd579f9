//! Filesystem helpers shared by the dataset, checkpoint, and report writers.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;

/// Write atomically: stage to `<path>.tmp` in the same directory, then rename
/// over the target so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Render an `f64` as decimal with 17 significant digits; round-trips exactly
/// through `str::parse::<f64>`.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serde adapter storing `Vec<f64>` as 17-significant-digit decimal strings.
pub mod f64arr {
    use serde::de::Error as DeError;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| super::format_f64(*x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| D::Error::custom(format!("bad float {s:?}: {e}")))
            })
            .collect()
    }
}

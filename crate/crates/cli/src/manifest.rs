use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliResult;

/// Record written next to every output as `<output>.manifest.json`.
/// `argv` is the resolved argument list, config entries included, so
/// `war <argv...>` repeats the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub flags: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub version: String,
    pub wall_time_secs: f64,
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

impl RunManifest {
    pub fn write_all(&self) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        for out in &self.outputs {
            fs::write(manifest_path(out), &text)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_sits_next_to_output() {
        assert_eq!(
            manifest_path(Path::new("/tmp/run/series.csv")),
            PathBuf::from("/tmp/run/series.csv.manifest.json")
        );
    }
}

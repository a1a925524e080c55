//! Optional settings file, TOML `key = value` pairs at top level.

use std::path::Path;

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub n: Option<u32>,
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    pub format: Option<String>,
    pub reset_model: Option<String>,
    pub ideal_convention: Option<String>,
    pub full_basis: Option<bool>,
    pub score_sum: Option<bool>,
    pub p_x: Option<f64>,
    pub p_cnot: Option<f64>,
    pub p_toffoli: Option<f64>,
    pub p_idle: Option<f64>,
    pub delta_reset: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.message().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_known_keys() {
        let c = FileConfig::parse("n = 4\nshots = 200\nformat = \"csv\"\np_idle = 0.01\nfull_basis = true\n").unwrap();
        assert_eq!((c.n, c.shots, c.p_idle, c.full_basis), (Some(4), Some(200), Some(0.01), Some(true)));
        assert_eq!(c.format.as_deref(), Some("csv"));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_types() {
        assert!(FileConfig::parse("shotz = 3").unwrap_err().contains("shotz"));
        assert!(FileConfig::parse("n = \"four\"").is_err());
    }
}

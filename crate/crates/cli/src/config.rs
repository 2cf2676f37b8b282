//! `key = value` run configuration. Only built-in generator names are
//! accepted; there is no function parsing.

use std::path::Path;

use crate::output::Format;
use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig {
    pub generator: Option<String>,
    pub tolerance: Option<f64>,
    pub format: Option<Format>,
    pub seed: Option<u64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = FileConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| CliError::Usage(format!("config line {}: {what}", lineno + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad("expected key = value"))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "generator" => cfg.generator = Some(value.to_string()),
                "tolerance" => {
                    cfg.tolerance = Some(
                        value
                            .parse()
                            .map_err(|_| bad("tolerance is not a number"))?,
                    )
                }
                "seed" => {
                    cfg.seed = Some(
                        value
                            .parse()
                            .map_err(|_| bad("seed is not an unsigned integer"))?,
                    )
                }
                "format" => {
                    cfg.format = Some(match value {
                        "csv" => Format::Csv,
                        "json" => Format::Json,
                        _ => return Err(bad("format must be csv or json")),
                    })
                }
                other => return Err(bad(&format!("unknown key {other:?}"))),
            }
        }
        Ok(cfg)
    }
}

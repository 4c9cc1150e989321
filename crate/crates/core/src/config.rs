//! Run configuration documents.
//!
//! Configs are TOML; a `.json` file with the same structure is accepted
//! anywhere a TOML file is. Seeds must fit in a signed 64-bit integer to be
//! representable in TOML.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::ExperimentSpec;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verbosity {
    Quiet,
    #[default]
    Normal,
    Verbose,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// One experiment plus where and how to run it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub verbosity: Verbosity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub experiment: ExperimentSpec,
}

/// Many experiments sharing an output root; each gets its own
/// subdirectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchConfig {
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub verbosity: Verbosity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    pub experiments: Vec<ExperimentSpec>,
}

fn is_json(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

pub fn load_document<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_document(&text, is_json(path)).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_document<T: DeserializeOwned>(text: &str, json: bool) -> Result<T> {
    if json {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    } else {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

pub fn to_toml<T: Serialize>(doc: &T) -> Result<String> {
    toml::to_string_pretty(doc).map_err(|e| Error::Config(e.to_string()))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        load_document(path)
    }

    pub fn to_toml(&self) -> Result<String> {
        to_toml(self)
    }
}

impl BatchConfig {
    pub fn load(path: &Path) -> Result<Self> {
        load_document(path)
    }

    pub fn to_toml(&self) -> Result<String> {
        to_toml(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ImageSource;

    const FULL_SCALE: &str = r#"
out = "runs/full-scale"

[experiment]
id = "full-scale"
seed = 2024
input = { phantom = { rows = 378, cols = 284 } }
scheme = "radial"
density = "1x"
noise_sigma = 0.02

[experiment.solver]
mu = 1e12
beta = 10.0
iterations = 100

[experiment.jackknife]
c = 1.0

[experiment.bootstrap]
k = 1000
full_recon_mode = "solve"
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg: RunConfig = parse_document(FULL_SCALE, false).unwrap();
        assert_eq!(cfg.experiment.solver.mu, 1e12);
        assert_eq!(cfg.experiment.bootstrap.unwrap().k, 1000);
        assert_eq!(cfg.experiment.bootstrap.unwrap().stream, 2);
        assert_eq!(
            cfg.experiment.input,
            ImageSource::Phantom {
                rows: 378,
                cols: 284
            }
        );
        let text = cfg.to_toml().unwrap();
        assert_eq!(parse_document::<RunConfig>(&text, false).unwrap(), cfg);
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(parse_document::<RunConfig>(&json, true).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_keys() {
        let bad = FULL_SCALE.replace("noise_sigma", "noise_sigmaa");
        assert!(matches!(
            parse_document::<RunConfig>(&bad, false),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn file_input() {
        let text = r#"
[experiment]
seed = 1
input = { file = "slice.png" }
scheme = "horizontal"
"#;
        let cfg: RunConfig = parse_document(text, false).unwrap();
        assert_eq!(cfg.experiment.input, ImageSource::File("slice.png".into()));
        assert_eq!(cfg.experiment.noise_sigma, 0.02);
        assert!(cfg.experiment.jackknife.is_none());
        assert_eq!(cfg.out, PathBuf::from("out"));
    }
}

//! Experiment configuration: one JSON document per experiment, with
//! dotted `key=value` overrides applied before parsing.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::federation::FederationConfig;
use crate::features::DEFAULT_BANDS;
use crate::fsutil::{read_to_string, write_atomic};
use crate::gnn::{ModelConfig, Readout};
use crate::graph::CorrConfig;
use crate::synthetic::SyntheticConfig;

pub const CONFIG_ARCHIVE_NAME: &str = "config.json";

/// File locations. Unset paths default to fixed names inside `output_dir`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    pub output_dir: PathBuf,
    pub recording: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub positions: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub graphs: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub conv_weights: Option<PathBuf>,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            output_dir: PathBuf::from("out"),
            recording: None,
            labels: None,
            positions: None,
            features: None,
            graphs: None,
            checkpoint: None,
            conv_weights: None,
        }
    }
}

impl PathsConfig {
    fn or_default(&self, p: &Option<PathBuf>, name: &str) -> PathBuf {
        p.clone().unwrap_or_else(|| self.output_dir.join(name))
    }

    pub fn recording(&self) -> PathBuf {
        self.or_default(&self.recording, "recording.sts")
    }

    pub fn labels(&self) -> PathBuf {
        self.or_default(&self.labels, "labels.csv")
    }

    pub fn positions(&self) -> PathBuf {
        self.or_default(&self.positions, "positions.csv")
    }

    pub fn features(&self) -> PathBuf {
        self.or_default(&self.features, "features.ftr")
    }

    pub fn graphs(&self) -> PathBuf {
        self.or_default(&self.graphs, "graphs.gds")
    }

    pub fn checkpoint(&self) -> PathBuf {
        self.or_default(&self.checkpoint, "model.mwt")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractorKind {
    Stat,
    Conv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractorConfig {
    pub kind: ExtractorKind,
    pub n_bands: usize,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        ExtractorConfig {
            kind: ExtractorKind::Stat,
            n_bands: DEFAULT_BANDS,
        }
    }
}

/// Model hyperparameters; the input width comes from the graph data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSettings {
    pub n_layers: usize,
    pub hidden_dim: usize,
    pub dropout_rate: f64,
}

impl Default for ModelSettings {
    fn default() -> Self {
        let m = ModelConfig::new(1);
        ModelSettings {
            n_layers: m.n_layers,
            hidden_dim: m.hidden_dim,
            dropout_rate: m.dropout_rate,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub n_classes: usize,
    pub paths: PathsConfig,
    pub extractor: ExtractorConfig,
    pub correlation: CorrConfig,
    pub model: ModelSettings,
    pub federation: FederationConfig,
    pub synthetic: SyntheticConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            n_classes: 5,
            paths: PathsConfig::default(),
            extractor: ExtractorConfig::default(),
            correlation: CorrConfig::default(),
            model: ModelSettings::default(),
            federation: FederationConfig::default(),
            synthetic: SyntheticConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Parses a JSON document after applying `overrides` (`a.b.c=value`).
    /// Values that parse as JSON are used as such, anything else as a string.
    pub fn from_json(text: &str, overrides: &[String], origin: &str) -> Result<Self> {
        let mut doc: Value = if text.trim().is_empty() {
            Value::Object(Default::default())
        } else {
            serde_json::from_str(text).map_err(|e| Error::Config(format!("{origin}: {e}")))?
        };
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: ExperimentConfig =
            serde_json::from_value(doc).map_err(|e| Error::Config(format!("{origin}: {e}")))?;
        cfg.validate_ranges()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        match path {
            Some(p) => {
                if !p.is_file() {
                    return Err(Error::Config(format!("config file {} does not exist", p.display())));
                }
                Self::from_json(&read_to_string(p)?, overrides, &p.display().to_string())
            }
            None => Self::from_json("", overrides, "<defaults>"),
        }
    }

    pub fn validate_ranges(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(Error::Config(format!("n_classes must be at least 2, got {}", self.n_classes)));
        }
        if self.extractor.n_bands == 0 {
            return Err(Error::Config("extractor.n_bands must be positive".into()));
        }
        self.correlation.validate()?;
        self.model_config(1).validate()?;
        self.federation.validate()?;
        self.synthetic.validate(self.n_classes)?;
        Ok(())
    }

    pub fn model_config(&self, in_dim: usize) -> ModelConfig {
        ModelConfig {
            n_layers: self.model.n_layers,
            in_dim,
            hidden_dim: self.model.hidden_dim,
            n_classes: self.n_classes,
            dropout_rate: self.model.dropout_rate,
            readout: Readout::Mean,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// Writes the resolved configuration next to the command's outputs.
    pub fn archive(&self) -> Result<PathBuf> {
        let path = self.paths.output_dir.join(CONFIG_ARCHIVE_NAME);
        write_atomic(&path, self.to_json().as_bytes())?;
        Ok(path)
    }
}

/// Config error naming `path` unless it is an existing file.
pub fn require_file(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} file {} does not exist", path.display())))
    }
}

fn apply_override(doc: &mut Value, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {spec:?} is not key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::Config(format!("override {spec:?} has an empty key")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("override {key:?}: {part:?} is not inside an object")))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("key has at least one part")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::CorrKind;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = ExperimentConfig::from_json("", &[], "t").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.federation.learning_rate, 0.015);
        assert_eq!(cfg.federation.batch_size, 8);
        assert_eq!(cfg.federation.test_ratio, 0.25);
    }

    #[test]
    fn overrides_nest_and_parse() {
        let cfg = ExperimentConfig::from_json(
            r#"{"federation": {"epochs": 2}}"#,
            &[
                "correlation.kind=pcc".into(),
                "federation.learning_rate=0.1".into(),
                "paths.output_dir=/tmp/x".into(),
                "seed=42".into(),
            ],
            "t",
        )
        .unwrap();
        assert_eq!(cfg.correlation.kind, CorrKind::Pcc);
        assert_eq!(cfg.federation.learning_rate, 0.1);
        assert_eq!(cfg.federation.epochs, 2);
        assert_eq!(cfg.paths.output_dir, PathBuf::from("/tmp/x"));
        assert_eq!(cfg.paths.graphs(), PathBuf::from("/tmp/x/graphs.gds"));
        assert_eq!(cfg.seed, 42);
    }

    #[test]
    fn unknown_keys_rejected() {
        for (doc, set) in [
            (r#"{"bogus": 1}"#, vec![]),
            ("", vec!["federation.clients=3".to_string()]),
            ("", vec!["model.dropout=0.1".to_string()]),
        ] {
            let err = ExperimentConfig::from_json(doc, &set, "t").unwrap_err();
            assert_eq!(err.exit_code(), 2, "{err}");
        }
    }

    #[test]
    fn ranges_checked() {
        for set in [
            "federation.learning_rate=0",
            "federation.test_ratio=1.5",
            "federation.n_clients=4",
            "model.dropout_rate=1.0",
            "n_classes=1",
            "correlation.threshold=2",
        ] {
            assert!(
                ExperimentConfig::from_json("", &[set.to_string()], "t").is_err(),
                "{set} accepted"
            );
        }
        assert!(ExperimentConfig::from_json("", &["bad".into()], "t").is_err());
    }

    #[test]
    fn serialized_config_reparses() {
        let mut cfg = ExperimentConfig::default();
        cfg.federation.rounds = Some(3);
        cfg.paths.labels = Some("l.csv".into());
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json(), &[], "t").unwrap(), cfg);
    }

    #[test]
    fn missing_config_file_names_path() {
        let err = ExperimentConfig::load(Some(Path::new("/nonexistent/exp.json")), &[]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("/nonexistent/exp.json"));
    }
}

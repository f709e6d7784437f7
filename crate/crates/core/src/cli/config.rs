//! Experiment configuration.
//!
//! A config is a JSON object:
//!
//! ```json
//! {
//!   "fixture": "golden",
//!   "task": "vp",
//!   "n_max": 20,
//!   "depth": 6,
//!   "eps_ladder": [0.0625, 0.03125],
//!   "potentials": [{"name": "psi", "observable": {"kind": "constant", "value": 0.0}}],
//!   "seed": 0,
//!   "workers": 4,
//!   "out_dir": "reports",
//!   "strict": false
//! }
//! ```
//!
//! Only `task` and one of `fixture` / `system` are required. An inline `system`
//! replaces the fixture host and `cocycle` its operator's cocycle.

use crate::error::{Error, Result};
use crate::observable::Observable;
use crate::systems::SystemModel;
use crate::tentropy::Hypotheses;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Entropy,
    Pressure,
    Lambda,
    Tau,
    Omega,
    Gamma,
    Ell,
    Essential,
    Compat,
    Vp,
    Identities,
}

impl Task {
    pub fn as_str(self) -> &'static str {
        match self {
            Task::Entropy => "entropy",
            Task::Pressure => "pressure",
            Task::Lambda => "lambda",
            Task::Tau => "tau",
            Task::Omega => "omega",
            Task::Gamma => "gamma",
            Task::Ell => "ell",
            Task::Essential => "essential",
            Task::Compat => "compat",
            Task::Vp => "vp",
            Task::Identities => "identities",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedObservable {
    pub name: String,
    pub observable: Observable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture: Option<String>,
    /// Inline system descriptor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cocycle: Option<Observable>,
    /// Hypotheses for an inline system; fixtures carry their own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypotheses: Option<Hypotheses>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub potentials: Vec<NamedObservable>,
    pub task: Task,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_ladder: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub strict: bool,
}

fn default_n_max() -> usize {
    12
}

fn default_depth() -> usize {
    4
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("reports")
}

impl ExperimentConfig {
    pub fn for_fixture(fixture: &str, task: Task) -> Self {
        ExperimentConfig {
            fixture: Some(fixture.into()),
            system: None,
            cocycle: None,
            hypotheses: None,
            potentials: Vec::new(),
            task,
            n_max: default_n_max(),
            depth: default_depth(),
            eps_ladder: None,
            seed: 0,
            workers: None,
            out_dir: default_out_dir(),
            strict: false,
        }
    }

    /// Parses JSON; schema errors carry the path of the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig =
            serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
                path: e.path().to_string(),
                message: e.inner().to_string(),
            })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |path: &str, message: &str| {
            Err(Error::Config {
                path: path.into(),
                message: message.into(),
            })
        };
        match (&self.fixture, &self.system) {
            (None, None) => return err(".", "one of `fixture` or `system` is required"),
            (Some(_), Some(_)) => {
                return err("system", "give either `fixture` or `system`, not both")
            }
            _ => {}
        }
        if self.n_max == 0 {
            return err("n_max", "must be at least 1");
        }
        if self.depth == 0 {
            return err("depth", "must be at least 1");
        }
        if let Some(ladder) = &self.eps_ladder {
            if ladder.is_empty() {
                return err("eps_ladder", "must not be empty");
            }
            for (i, e) in ladder.iter().enumerate() {
                if !(*e > 0.0 && e.is_finite()) {
                    return err(
                        &format!("eps_ladder[{i}]"),
                        "radii must be positive and finite",
                    );
                }
                if i > 0 && *e >= ladder[i - 1] {
                    return err(
                        &format!("eps_ladder[{i}]"),
                        "radii must be strictly decreasing",
                    );
                }
            }
        }
        if self.workers == Some(0) {
            return err("workers", "must be at least 1");
        }
        Ok(())
    }

    /// Canonical JSON rendering, also the input of the fingerprint.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    /// Stem of the report file names.
    pub fn stem(&self) -> String {
        let name = self.fixture.clone().unwrap_or_else(|| "inline".into());
        format!("{name}_{}", self.task.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = ExperimentConfig::from_json(r#"{"fixture": "golden", "task": "vp"}"#).unwrap();
        assert_eq!(c.n_max, 12);
        assert_eq!(c.task, Task::Vp);
        assert_eq!(c.stem(), "golden_vp");
    }

    #[test]
    fn schema_errors_name_the_field() {
        match ExperimentConfig::from_json(r#"{"fixture": "golden", "task": "vp", "n_max": "many"}"#)
        {
            Err(Error::Config { path, .. }) => assert_eq!(path, "n_max"),
            other => panic!("{other:?}"),
        }
        match ExperimentConfig::from_json(
            r#"{"fixture": "golden", "task": "vp", "eps_ladder": [0.1, 0.2]}"#,
        ) {
            Err(Error::Config { path, .. }) => assert_eq!(path, "eps_ladder[1]"),
            other => panic!("{other:?}"),
        }
        match ExperimentConfig::from_json(
            r#"{"fixture": "golden", "task": "vp", "potentials": [{"name": "a", "observable": {"kind": "nope"}}]}"#,
        ) {
            Err(Error::Config { path, .. }) => assert!(path.starts_with("potentials[0]"), "{path}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fingerprint_is_stable_and_sensitive() {
        let a = ExperimentConfig::for_fixture("golden", Task::Vp);
        let mut b = a.clone();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.seed = 1;
        assert_ne!(a.fingerprint(), b.fingerprint());
        let round = ExperimentConfig::from_json(&a.canonical_json()).unwrap();
        assert_eq!(round, a);
    }
}

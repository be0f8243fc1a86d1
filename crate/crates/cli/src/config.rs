//! Run configuration: one JSON document holding the model fields next to
//! the run options.

use std::path::{Path, PathBuf};

use monochain::{Composition, ModelSpec};
use serde::Deserialize;

use crate::Failure;

#[derive(Debug, Default, Deserialize)]
pub struct RunOptions {
    pub start: Option<String>,
    /// Upper state for `couple`.
    pub y: Option<String>,
    pub epsilon: Option<f64>,
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    pub max_steps: Option<usize>,
    pub n_max: Option<usize>,
    /// State-count cap for exact computations.
    pub cap: Option<u64>,
    /// Samples for the one-step checks of `couple`.
    pub check_samples: Option<usize>,
    pub output: Option<PathBuf>,
    pub trajectory_output: Option<PathBuf>,
}

#[derive(Debug)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub opts: RunOptions,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::capability(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, Failure> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Failure::validation(format!("config is not valid JSON: {e}")))?;
        let model = ModelSpec::deserialize(&value)
            .map_err(|e| Failure::validation(format!("invalid model: {e}")))?;
        let opts = RunOptions::deserialize(&value)
            .map_err(|e| Failure::validation(format!("invalid run options: {e}")))?;
        Ok(Self { model, opts })
    }

    fn state(&self, text: Option<&str>, field: &str) -> Result<Composition, Failure> {
        let text = text.ok_or_else(|| Failure::validation(format!("missing {field:?} state")))?;
        let x = Composition::parse_csv(text)?;
        self.model.check_state(&x)?;
        Ok(x)
    }

    pub fn start(&self) -> Result<Composition, Failure> {
        self.state(self.opts.start.as_deref(), "start")
    }

    pub fn upper(&self) -> Result<Composition, Failure> {
        self.state(self.opts.y.as_deref(), "y")
    }

    pub fn epsilon(&self) -> Result<f64, Failure> {
        let eps = self.opts.epsilon.unwrap_or(0.01);
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Failure::validation(format!("epsilon must be positive, got {eps}")));
        }
        Ok(eps)
    }
}

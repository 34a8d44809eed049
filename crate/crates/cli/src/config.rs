//! Run configuration: one TOML file with a section per pipeline stage.
//! Every field has a documented default; command-line flags override file
//! values. Unknown keys are rejected.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use powerpath_core::inference::InferenceConfig;
use powerpath_core::preprocess::PreprocessConfig;
use powerpath_core::tracker::TrackerConfig;

/// Library-generation knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LibraryGenConfig {
    pub route_reps: usize,
    pub segment_reps: usize,
}

impl Default for LibraryGenConfig {
    fn default() -> Self {
        LibraryGenConfig {
            route_reps: 10,
            segment_reps: 2,
        }
    }
}

/// Evaluation knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Tracking error bound as a fraction of route length.
    pub bound_frac: f64,
    /// Consecutive in-bound ticks required to declare convergence.
    pub dwell_ticks: usize,
    /// Monte Carlo trials per track for the random-route baseline.
    pub baseline_trials: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            bound_frac: 0.05,
            dwell_ticks: 5,
            baseline_trials: 1000,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Global seed; every stochastic path derives from it unless a command
    /// flag overrides it.
    pub seed: u64,
    pub preprocess: PreprocessConfig,
    pub tracker: TrackerConfig,
    pub inference: InferenceConfig,
    pub library: LibraryGenConfig,
    pub eval: EvalConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                let cfg: RunConfig = toml::from_str(&text)
                    .with_context(|| format!("parsing config {}", p.display()))?;
                cfg.preprocess
                    .validate()
                    .context("invalid [preprocess] section")?;
                cfg.tracker
                    .preprocess
                    .validate()
                    .context("invalid [tracker.preprocess] section")?;
                cfg.inference
                    .preprocess
                    .validate()
                    .context("invalid [inference.preprocess] section")?;
                Ok(cfg)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips_through_toml() {
        let cfg = RunConfig::default();
        let text = toml::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.seed, cfg.seed);
        assert_eq!(back.eval.bound_frac, cfg.eval.bound_frac);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = toml::from_str::<RunConfig>("nonsense_key = 1\n");
        assert!(err.is_err());
        let err = toml::from_str::<RunConfig>("[preprocess]\nwindow_length = 5\n");
        assert!(err.is_err());
    }
}

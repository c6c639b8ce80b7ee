use std::path::{Path, PathBuf};

use serde::Deserialize;
use vmadmit::estimator::Features;
use vmadmit::io::Precision;
use vmadmit::reference::baseline_params;
use vmadmit::{Error, ModelParams, Result, SimConfig, SolveOptions, StopRule, SweepSpec, TrainConfig};

/// One JSON document with a section per subcommand. Every section is optional;
/// a subcommand fails with a config error only if it needs a missing one.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelParams>,
    pub solver: SolveOptions,
    pub evaluate: EvaluateSection,
    pub sim: SimConfig,
    pub sweep: Option<SweepSection>,
    pub train: TrainConfig,
    pub predict: PredictSection,
    pub output: OutputSection,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateSection {
    pub stop: StopRule,
    /// Grid cap; defaults to the solver's cap.
    pub cap: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub values_reward: Vec<f64>,
    pub values_lambda2: Vec<f64>,
    pub values_mu2: Vec<f64>,
    /// Parameters held fixed; defaults to the `model` section.
    pub base: Option<ModelParams>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictSection {
    pub points: Option<Vec<Features>>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub precision: Precision,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let config: RunConfig = serde_json::from_str(&text)?;
        if let Some(model) = &config.model {
            model.validate()?;
        }
        Ok(config)
    }

    pub fn model(&self) -> Result<ModelParams> {
        self.model
            .ok_or_else(|| Error::Config("this subcommand needs a `model` section in --config".into()))
    }

    /// The configured sweep, or the reference grid around the model.
    pub fn sweep(&self) -> Result<SweepSpec> {
        match &self.sweep {
            Some(s) => Ok(SweepSpec {
                values_reward: s.values_reward.clone(),
                values_lambda2: s.values_lambda2.clone(),
                values_mu2: s.values_mu2.clone(),
                base: match s.base {
                    Some(b) => b,
                    None => self.model()?,
                },
            }),
            None => Ok(SweepSpec::reference_grid(self.model()?)),
        }
    }

    /// Fixed parameters for prediction comparisons; the baseline if no model is given.
    pub fn predict_base(&self) -> ModelParams {
        self.model.unwrap_or_else(|| baseline_params(1.0))
    }

    /// `R = 1.3, 2.3, ..., 8.3` with `λ2 = 1`, `μ2 = 8` unless overridden.
    pub fn predict_points(&self) -> Vec<Features> {
        let base = self.predict_base();
        self.predict.points.clone().unwrap_or_else(|| {
            (0..8)
                .map(|k| [1.3 + k as f64, base.lambda1, 1.0, base.mu1, 8.0])
                .collect()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_all_defaults() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert!(c.model.is_none());
        assert_eq!(c.solver, SolveOptions::default());
        assert!(c.model().is_err());
    }

    #[test]
    fn unknown_sections_are_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"modle": {}}"#).is_err());
    }

    #[test]
    fn sections_parse() {
        let text = r#"{
            "model": {"lambda1": 1, "lambda2": 2, "mu1": 6, "mu2": 8, "capacity_C": 10,
                      "vms_per_pu_b": 5, "alpha": 0.1, "reward_R": 5, "preempt_cost_r": 0.5,
                      "holding": {"kind": "square_sum"}},
            "solver": {"cap": "auto", "tol": 1e-8},
            "evaluate": {"stop": {"rule": "tolerance", "tol": 1e-9, "max_iter": 1000}},
            "sim": {"replications": 10, "initial": {"n1": 1, "n2": 3}},
            "output": {"precision": "full"}
        }"#;
        let c: RunConfig = serde_json::from_str(text).unwrap();
        assert_eq!(c.model().unwrap(), baseline_params(5.0));
        assert_eq!(c.solver.tol, 1e-8);
        assert_eq!(c.sim.replications, 10);
        assert_eq!(c.output.precision, Precision::Full);
        assert_eq!(c.sweep().unwrap().len(), 200);
        assert_eq!(c.predict_points()[7], [8.3, 1.0, 1.0, 6.0, 8.0]);
    }
}

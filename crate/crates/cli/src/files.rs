use drccp_core::model::{DrccpProblem, SampleSet};
use drccp_core::reformulate::TransportNetwork;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Transport network with its training cost samples and model settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportFile {
    pub network: TransportNetwork<f64>,
    pub samples: SampleSet<f64>,
    pub risk: f64,
    pub radius: f64,
    /// Fraction of sample coordinates clipped into the cost box.
    #[serde(default)]
    pub clip_rate: f64,
    #[serde(default)]
    pub seed: u64,
}

/// Instance files read by `build`, `solve` and `oracle`, tagged by `kind`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputFile {
    Problem(DrccpProblem<f64>),
    Transport(TransportFile),
}

impl InputFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let file: InputFile = serde_json::from_str(text).map_err(|e| CliError::Invalid(format!("bad instance file: {e}")))?;
        file.check()?;
        Ok(file)
    }

    pub fn check(&self) -> Result<(), CliError> {
        match self {
            InputFile::Problem(_) => Ok(()),
            InputFile::Transport(t) => {
                t.network.check().map_err(|e| CliError::Invalid(e.to_string()))?;
                if t.samples.dim() != t.network.n_arcs() {
                    return Err(CliError::Invalid(format!(
                        "cost samples have dimension {}, the network has {} arcs",
                        t.samples.dim(),
                        t.network.n_arcs()
                    )));
                }
                if !(0.0..1.0).contains(&t.risk) || !(t.radius >= 0.0) {
                    return Err(CliError::Invalid("transport risk must lie in [0, 1) and the radius must be nonnegative".into()));
                }
                Ok(())
            }
        }
    }
}

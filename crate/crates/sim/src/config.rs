use std::path::Path;

use intersection_core::{BidDistribution, IntersectionParams};
use serde::{Deserialize, Serialize};

use crate::error::SimError;

/// Pricing mechanism applied to every arriving user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    /// Queue-based chain with the mean lane arrival probability.
    Queue,
    /// Lane-based chain with per-lane probabilities.
    Lane,
    /// Static VCG baseline.
    Static,
}

impl Mechanism {
    pub fn name(self) -> &'static str {
        match self {
            Mechanism::Queue => "queue",
            Mechanism::Lane => "lane",
            Mechanism::Static => "static",
        }
    }
}

impl std::str::FromStr for Mechanism {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        match s {
            "queue" => Ok(Mechanism::Queue),
            "lane" => Ok(Mechanism::Lane),
            "static" => Ok(Mechanism::Static),
            other => Err(SimError::Config(format!("unknown mechanism {other:?} (expected queue, lane or static)"))),
        }
    }
}

/// How arriving users choose their declared bid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BidPolicy {
    Truthful,
    /// Declared bid drawn from the bid distribution independently of the true value.
    IndependentUniform,
}

/// How a misreport grid is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SweepProtocol {
    /// Every user is replayed against the same future arrivals once per
    /// declared bin, at the same position inside the bin as their true value.
    #[default]
    Paired,
    /// Raw mean cost of the users whose true and declared values fall in each cell.
    Binned,
}

impl SweepProtocol {
    pub fn name(self) -> &'static str {
        match self {
            SweepProtocol::Paired => "paired",
            SweepProtocol::Binned => "binned",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub true_bins: usize,
    pub declared_bins: usize,
    #[serde(default)]
    pub protocol: SweepProtocol,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self { true_bins: 10, declared_bins: 10, protocol: SweepProtocol::Paired }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub params: IntersectionParams,
    pub mechanism: Mechanism,
    pub users: usize,
    pub seed: u64,
    pub bins: usize,
    pub sweep: Option<SweepSpec>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        self.params.validate()?;
        if self.users == 0 {
            return Err(SimError::Config("users must be at least 1".into()));
        }
        if self.bins == 0 {
            return Err(SimError::Config("bins must be at least 1".into()));
        }
        if let Some(s) = self.sweep {
            if s.true_bins == 0 || s.declared_bins == 0 {
                return Err(SimError::Config("sweep grids need at least one bin per axis".into()));
            }
        }
        if self.params.arrival_probs.iter().all(|&p| p == 0.0) {
            return Err(SimError::Config("at least one lane needs a positive arrival probability".into()));
        }
        Ok(())
    }

    pub fn step_seconds(&self) -> f64 {
        self.params.step_cost
    }
}

/// On-disk JSON configuration; rates are per hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub lanes: usize,
    #[serde(default = "default_step")]
    pub step_seconds: f64,
    pub arrival_probs: Vec<f64>,
    pub value_low_per_hour: f64,
    pub value_high_per_hour: f64,
    pub mechanism: String,
    pub users: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

fn default_step() -> f64 {
    1.0
}

fn default_bins() -> usize {
    30
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| SimError::Config(format!("{}: {e}", path.display())))
    }

    pub fn into_sim(self) -> Result<SimConfig, SimError> {
        let dist =
            BidDistribution::uniform_hourly(self.value_low_per_hour, self.value_high_per_hour, self.step_seconds)?;
        let probs =
            if self.arrival_probs.len() == 1 { vec![self.arrival_probs[0]; self.lanes] } else { self.arrival_probs };
        let config = SimConfig {
            params: IntersectionParams::new(self.lanes, self.step_seconds, probs, dist)?,
            mechanism: self.mechanism.parse()?,
            users: self.users,
            seed: self.seed,
            bins: self.bins,
            sweep: self.sweep,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Parses a probability written as a decimal or a fraction such as `1/3`.
pub fn parse_prob(s: &str) -> Result<f64, String> {
    let value = match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| format!("invalid numerator in {s:?}"))?;
            let den: f64 = den.trim().parse().map_err(|_| format!("invalid denominator in {s:?}"))?;
            if den == 0.0 {
                return Err(format!("zero denominator in {s:?}"));
            }
            num / den
        }
        None => s.trim().parse().map_err(|_| format!("invalid probability {s:?}"))?,
    };
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(format!("probability {s:?} outside [0, 1]"))
    }
}

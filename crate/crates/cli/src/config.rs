use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use passive_engine::engine::CycleParams;
use passive_engine::quasistatic::Strategy;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::Subcommand)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Run one cycle and report every quantity
    Cycle,
    /// Work and efficiency of the m = n = 1 cycle against the hot gap
    Fig4,
    /// Region labels and activation membership on the passive grid
    Fig5,
    /// Quasi-static trajectory in the energy-entropy plane
    Fig6,
    /// Best cycle under a machine-dimension cap
    Optimize,
    /// Closed form against the permutation oracle
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// `energy`, `entropy` or `alpha=X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StrategySpec {
    Energy,
    Entropy,
    Alpha(f64),
}

impl StrategySpec {
    pub fn strategy(self) -> Strategy {
        match self {
            StrategySpec::Energy => Strategy::EnergyConserving,
            StrategySpec::Entropy => Strategy::EntropyConserving,
            StrategySpec::Alpha(a) => Strategy::Constant(a),
        }
    }
}

impl FromStr for StrategySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "energy" => Ok(StrategySpec::Energy),
            "entropy" => Ok(StrategySpec::Entropy),
            _ => {
                let value = s
                    .strip_prefix("alpha=")
                    .ok_or_else(|| format!("expected energy, entropy or alpha=X, got '{s}'"))?;
                Ok(StrategySpec::Alpha(parse_finite(value)?))
            }
        }
    }
}

impl TryFrom<String> for StrategySpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<StrategySpec> for String {
    fn from(s: StrategySpec) -> String {
        match s {
            StrategySpec::Energy => "energy".into(),
            StrategySpec::Entropy => "entropy".into(),
            StrategySpec::Alpha(a) => format!("alpha={a}"),
        }
    }
}

/// `LO:HI:STEPS`, both ends included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SweepSpec {
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.lo];
        }
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| self.lo + (self.hi - self.lo) * (k as f64 / last))
            .collect()
    }
}

impl FromStr for SweepSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, steps] = parts.as_slice() else {
            return Err(format!("expected LO:HI:STEPS, got '{s}'"));
        };
        let lo = parse_finite(lo)?;
        let hi = parse_finite(hi)?;
        let steps: usize = steps.parse().map_err(|_| format!("invalid step count '{steps}'"))?;
        if steps == 0 || hi < lo {
            return Err(format!("empty sweep '{s}'"));
        }
        Ok(SweepSpec { lo, hi, steps })
    }
}

impl TryFrom<String> for SweepSpec {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<SweepSpec> for String {
    fn from(s: SweepSpec) -> String {
        format!("{}:{}:{}", s.lo, s.hi, s.steps)
    }
}

pub fn parse_finite(s: &str) -> Result<f64, String> {
    let x: f64 = s.trim().parse().map_err(|_| format!("invalid number '{s}'"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("non-finite number '{s}'"))
    }
}

/// One `M:N` pair.
pub fn parse_cycle(s: &str) -> Result<CycleParams, String> {
    let (m, n) = s.split_once(':').ok_or_else(|| format!("expected M:N, got '{s}'"))?;
    let m = m.trim().parse().map_err(|_| format!("invalid m in '{s}'"))?;
    let n = n.trim().parse().map_err(|_| format!("invalid n in '{s}'"))?;
    CycleParams::new(m, n).map_err(|e| e.to_string())
}

/// Everything a run depends on. Unset fields fall back to per-command
/// defaults at dispatch time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: Command,
    pub state: Option<Vec<f64>>,
    pub beta: Option<f64>,
    pub energies: Option<Vec<f64>>,
    pub m: Option<usize>,
    pub n: Option<usize>,
    pub sweep_gap: Option<SweepSpec>,
    pub strategy: Option<StrategySpec>,
    pub grid: Option<usize>,
    pub cycles: Option<Vec<CycleParams>>,
    pub max_dim: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inject_perturbation: Option<f64>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            state: None,
            beta: None,
            energies: None,
            m: None,
            n: None,
            sweep_gap: None,
            strategy: None,
            grid: None,
            cycles: None,
            max_dim: None,
            out: None,
            format: Format::Csv,
            inject_perturbation: None,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        if self.state.as_deref().is_some_and(|s| !finite(s)) || self.energies.as_deref().is_some_and(|e| !finite(e)) {
            return Err("state and energies must be finite".into());
        }
        if self.beta.is_some_and(|b| !b.is_finite() || b < 0.0) {
            return Err("beta must be finite and non-negative".into());
        }
        if self.state.is_some() && self.beta.is_some() {
            return Err("give either a state or a beta, not both".into());
        }
        if self.m == Some(0) || self.n == Some(0) {
            return Err("m and n must be positive".into());
        }
        Ok(())
    }
}

/// A config file holds either a bare [`RunConfig`] or a full report.
#[derive(Deserialize)]
#[serde(untagged)]
enum ConfigFile {
    Report { config: RunConfig },
    Bare(RunConfig),
}

pub fn load(path: &Path) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    match serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))? {
        ConfigFile::Report { config } | ConfigFile::Bare(config) => Ok(config),
    }
}

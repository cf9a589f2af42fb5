//! Experiment configuration: one JSON document per run, with a `command`
//! field and the blocks that command needs. Unknown keys are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer};
use serde::Deserialize;

use crate::loadcontrol::{OneFixed, TwoFixed};
use crate::model::{LeadTime, MarketParams, Policy};
use crate::sim::{VerifySettings, DEFAULT_BATCHES};
use crate::utility::{UtilityDescriptor, UtilityModel};

use super::CliError;

pub const DEFAULT_LAMBDA_POINTS: usize = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Equilibrium,
    Range,
    Curve,
    Profit,
    RiskSweep,
    Simulate,
    Epsopt,
}

impl CommandName {
    pub fn as_str(&self) -> &'static str {
        match self {
            CommandName::Equilibrium => "equilibrium",
            CommandName::Range => "range",
            CommandName::Curve => "curve",
            CommandName::Profit => "profit",
            CommandName::RiskSweep => "risk-sweep",
            CommandName::Simulate => "simulate",
            CommandName::Epsopt => "epsopt",
        }
    }
}

/// A lead time given as a number or as `"none"` / `"inf"` (never compensate).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeadTimeSpec(pub LeadTime);

impl<'de> Deserialize<'de> for LeadTimeSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Word(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(d) => Ok(LeadTimeSpec(LeadTime::Finite(d))),
            Raw::Word(w) if matches!(w.as_str(), "none" | "inf") => Ok(LeadTimeSpec(LeadTime::NoCompensation)),
            Raw::Word(w) => Err(de::Error::custom(format!("lead time must be a number or \"none\", got {w:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub d: LeadTimeSpec,
    pub p: f64,
    #[serde(default)]
    pub l: f64,
}

/// Any subset of the three policy parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedSpec {
    pub d: Option<LeadTimeSpec>,
    pub p: Option<f64>,
    pub l: Option<f64>,
}

/// Fixed parameters resolved by how many are given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fixed {
    One(OneFixed),
    Two(TwoFixed),
}

impl FixedSpec {
    fn count(&self) -> usize {
        self.d.is_some() as usize + self.p.is_some() as usize + self.l.is_some() as usize
    }

    pub fn resolve(&self) -> Result<Fixed, CliError> {
        let d = self.d.map(|s| s.0);
        Ok(match (d, self.p, self.l) {
            (None, Some(p), None) => Fixed::One(OneFixed::Price(p)),
            (None, None, Some(l)) => Fixed::One(OneFixed::Compensation(l)),
            (Some(d), None, None) => Fixed::One(OneFixed::LeadTime(d)),
            (None, Some(price), Some(compensation)) => Fixed::Two(TwoFixed::PriceCompensation { price, compensation }),
            (Some(lead_time), None, Some(compensation)) => {
                Fixed::Two(TwoFixed::LeadTimeCompensation { lead_time, compensation })
            }
            (Some(lead_time), Some(price), None) => Fixed::Two(TwoFixed::LeadTimePrice { lead_time, price }),
            _ => {
                return Err(CliError::Config(format!(
                    "`fixed` must name one or two of d, p, l; got {}",
                    self.count()
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    #[serde(default = "default_customers")]
    pub n_customers: usize,
    pub warmup: Option<usize>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_batches")]
    pub batches: usize,
    #[serde(default)]
    pub lambda_offset: f64,
}

fn default_customers() -> usize {
    200_000
}
fn default_seed() -> u64 {
    42
}
fn default_batches() -> usize {
    DEFAULT_BATCHES
}

impl Default for SimSpec {
    fn default() -> Self {
        Self {
            n_customers: default_customers(),
            warmup: None,
            seed: default_seed(),
            batches: default_batches(),
            lambda_offset: 0.0,
        }
    }
}

impl SimSpec {
    pub fn settings(&self, seed_override: Option<u64>) -> VerifySettings {
        VerifySettings {
            n_customers: self.n_customers,
            warmup: self.warmup,
            seed: seed_override.unwrap_or(self.seed),
            batches: self.batches,
            lambda_offset: self.lambda_offset,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: CommandName,
    pub params: MarketParams,
    pub utility: UtilityDescriptor,
    pub policy: Option<PolicySpec>,
    pub fixed: Option<FixedSpec>,
    /// Explicit target rates.
    pub lambdas: Option<Vec<f64>>,
    /// Number of rates on the default grid when `lambdas` is absent.
    pub lambda_points: Option<usize>,
    pub r_grid: Option<Vec<f64>>,
    pub curve_points: Option<usize>,
    pub sim: Option<SimSpec>,
    pub epsilon: Option<f64>,
    /// Output directory, used when `--out` is not given.
    pub out: Option<PathBuf>,
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(config_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn require<'a, T>(&self, value: &'a Option<T>, key: &str) -> Result<&'a T, CliError> {
        value
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("`{}` needs a `{key}` block", self.command.as_str())))
    }

    /// Checks everything a command needs before any computation starts.
    pub fn validate(&self) -> Result<(), CliError> {
        self.params.validate().map_err(config_err)?;
        self.utility.build().map_err(config_err)?;
        if let Some(ls) = &self.lambdas {
            if ls.is_empty() || ls.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(CliError::Config("`lambdas` must be non-empty and non-negative".into()));
            }
        }
        if let Some(rs) = &self.r_grid {
            if rs.is_empty() || rs.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
                return Err(CliError::Config("`r_grid` must be non-empty and positive".into()));
            }
        }
        if matches!(self.lambda_points, Some(n) if n < 2) {
            return Err(CliError::Config("`lambda_points` must be at least 2".into()));
        }
        if matches!(self.curve_points, Some(n) if n < 2) {
            return Err(CliError::Config("`curve_points` must be at least 2".into()));
        }
        match self.command {
            CommandName::Equilibrium => {
                self.policy()?;
            }
            CommandName::Simulate => {
                self.policy()?;
                let sim = self.sim.unwrap_or_default();
                if sim.batches < crate::sim::MIN_BATCHES || sim.n_customers == 0 {
                    return Err(CliError::Config("`sim` needs at least 10 batches and some customers".into()));
                }
            }
            CommandName::Range => {
                self.fixed_parameters()?;
            }
            CommandName::Curve => {
                if !matches!(self.fixed_parameters()?, Fixed::One(_)) {
                    return Err(CliError::Config("`curve` fixes exactly one parameter".into()));
                }
                self.require(&self.lambdas, "lambdas")?;
            }
            CommandName::RiskSweep => {
                if !matches!(self.fixed_parameters()?, Fixed::Two(_)) {
                    return Err(CliError::Config("`risk-sweep` fixes exactly two parameters".into()));
                }
                self.require(&self.lambdas, "lambdas")?;
            }
            CommandName::Profit => {
                self.profit_fixed()?;
            }
            CommandName::Epsopt => {
                let eps = *self.require(&self.epsilon, "epsilon")?;
                if !(eps > 0.0) {
                    return Err(CliError::Config("`epsilon` must be positive".into()));
                }
            }
        }
        Ok(())
    }

    pub fn utility_model(&self) -> Result<UtilityModel, CliError> {
        self.utility.build().map_err(config_err)
    }

    pub fn policy(&self) -> Result<Policy, CliError> {
        let spec = self.require(&self.policy, "policy")?;
        Policy::new(spec.d.0, spec.p, spec.l, &self.params).map_err(config_err)
    }

    pub fn fixed_parameters(&self) -> Result<Fixed, CliError> {
        let fixed = self.require(&self.fixed, "fixed")?.resolve()?;
        // validate the fixed values against the market by building a policy
        let c = self.params.waiting_cost;
        let check = |d: LeadTime, p: f64, l: f64| Policy::new(d, p, l, &self.params).map(|_| ()).map_err(config_err);
        match fixed {
            Fixed::One(OneFixed::Price(p)) => check(LeadTime::Finite(0.0), p, 0.0)?,
            Fixed::One(OneFixed::Compensation(l)) => check(LeadTime::Finite(0.0), 0.0, l)?,
            Fixed::One(OneFixed::LeadTime(d)) => check(d, 0.0, c)?,
            Fixed::Two(TwoFixed::PriceCompensation { price, compensation }) => {
                check(LeadTime::Finite(0.0), price, compensation)?
            }
            Fixed::Two(TwoFixed::LeadTimeCompensation { lead_time, compensation }) => check(lead_time, 0.0, compensation)?,
            Fixed::Two(TwoFixed::LeadTimePrice { lead_time, price }) => check(lead_time, price, 0.0)?,
        }
        Ok(fixed)
    }

    /// The three one-parameter constraints plotted by `profit`.
    pub fn profit_fixed(&self) -> Result<[OneFixed; 3], CliError> {
        let spec = self.require(&self.fixed, "fixed")?;
        match (spec.p, spec.l, spec.d) {
            (Some(p), Some(l), Some(d)) => {
                if d.0 == LeadTime::NoCompensation {
                    return Err(CliError::Config("`profit` needs a finite fixed lead time".into()));
                }
                Policy::new(d.0, p, l, &self.params).map_err(config_err)?;
                Ok([OneFixed::Price(p), OneFixed::Compensation(l), OneFixed::LeadTime(d.0)])
            }
            _ => Err(CliError::Config("`profit` needs fixed values for all of d, p and l".into())),
        }
    }

    pub fn lambda_points(&self) -> usize {
        self.lambda_points.unwrap_or(DEFAULT_LAMBDA_POINTS)
    }

    pub fn curve_points(&self) -> usize {
        self.curve_points.unwrap_or(crate::loadcontrol::DEFAULT_CURVE_POINTS)
    }

    /// `0.05, 0.10, …, 2.00` unless given.
    pub fn r_grid(&self) -> Vec<f64> {
        self.r_grid
            .clone()
            .unwrap_or_else(|| (1..=40).map(|i| i as f64 / 20.0).collect())
    }
}

//! Customer utility functions.
//!
//! Every model is strictly increasing and concave, and strictly concave far
//! enough in the left tail. [`validate`] checks those properties numerically on
//! a grid; the linear model is accepted with a flag because it is only used as
//! a risk-neutral reference.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// `|r·z|` below which the CARA utility switches to its series form.
const CARA_SERIES_CUTOFF: f64 = 1e-8;

pub const DEFAULT_GRID_LO: f64 = -50.0;
pub const DEFAULT_GRID_HI: f64 = 50.0;
pub const DEFAULT_GRID_POINTS: usize = 401;
pub const DEFAULT_TOL: f64 = 1e-9;

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct CustomUtility {
    eval: Evaluator,
    checked: bool,
}

#[derive(Clone)]
pub enum UtilityKind {
    /// Constant absolute risk aversion `U(z) = (1 - e^{-rz}) / r`.
    Cara { r: f64 },
    /// Risk-neutral reference `U(z) = z`.
    Linear,
    Custom(CustomUtility),
}

impl fmt::Debug for UtilityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UtilityKind::Cara { r } => f.debug_struct("Cara").field("r", r).finish(),
            UtilityKind::Linear => f.write_str("Linear"),
            UtilityKind::Custom(c) => f
                .debug_struct("Custom")
                .field("checked", &c.checked)
                .finish_non_exhaustive(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct UtilityModel {
    kind: UtilityKind,
    label: String,
}

impl UtilityModel {
    pub fn cara(r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(invalid(format!("CARA risk aversion must be positive, got {r}")));
        }
        Ok(Self {
            kind: UtilityKind::Cara { r },
            label: format!("cara(r={r})"),
        })
    }

    pub fn linear() -> Self {
        Self {
            kind: UtilityKind::Linear,
            label: "linear".to_string(),
        }
    }

    /// A user-supplied utility, checked on the default grid before it is
    /// returned.
    pub fn custom(
        label: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let mut model = Self::custom_unchecked(label, eval);
        let report = validate_default(&model)?;
        if let Verdict::Fail(reason) = report.verdict {
            return Err(Error::InvalidUtility {
                label: model.label,
                reason,
            });
        }
        if let UtilityKind::Custom(c) = &mut model.kind {
            c.checked = true;
        }
        Ok(model)
    }

    /// A user-supplied utility that has not been validated. Equilibrium
    /// routines refuse it until it is rebuilt through [`UtilityModel::custom`].
    pub fn custom_unchecked(
        label: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            kind: UtilityKind::Custom(CustomUtility {
                eval: Arc::new(eval),
                checked: false,
            }),
            label: label.into(),
        }
    }

    pub fn kind(&self) -> &UtilityKind {
        &self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn risk_aversion(&self) -> Option<f64> {
        match self.kind {
            UtilityKind::Cara { r } => Some(r),
            _ => None,
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.kind, UtilityKind::Linear)
    }

    /// Fails for custom models that skipped validation.
    pub fn ensure_usable(&self) -> Result<()> {
        match &self.kind {
            UtilityKind::Custom(c) if !c.checked => Err(Error::UnvalidatedUtility {
                label: self.label.clone(),
            }),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        match &self.kind {
            UtilityKind::Cara { r } => cara(*r, z),
            UtilityKind::Linear => z,
            UtilityKind::Custom(c) => (c.eval)(z),
        }
    }
}

impl UtilityModel {
    /// `U(b) − U(a)`, computed without cancellation for CARA so that it stays
    /// positive where both values round to the same float.
    pub fn increment(&self, a: f64, b: f64) -> f64 {
        match &self.kind {
            UtilityKind::Cara { r } => {
                let scale = (-r * a).exp().min(f64::MAX);
                (scale * -(-r * (b - a)).exp_m1() / r).min(f64::MAX)
            }
            UtilityKind::Linear => b - a,
            UtilityKind::Custom(c) => (c.eval)(b) - (c.eval)(a),
        }
    }
}

fn cara(r: f64, z: f64) -> f64 {
    let rz = r * z;
    if rz.abs() < CARA_SERIES_CUTOFF {
        z * (1.0 - 0.5 * rz)
    } else {
        // saturate instead of overflowing to -inf for very negative arguments
        (-(-rz).exp_m1() / r).max(f64::MIN)
    }
}

/// Serialized form used in experiment configs: `{"kind":"cara","r":0.5}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum UtilityDescriptor {
    Cara { r: f64 },
    Linear,
}

impl UtilityDescriptor {
    pub fn build(&self) -> Result<UtilityModel> {
        match *self {
            UtilityDescriptor::Cara { r } => UtilityModel::cara(r),
            UtilityDescriptor::Linear => Ok(UtilityModel::linear()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Pass,
    /// Monotone and weakly concave but never strictly concave on the grid.
    PassRiskNeutral,
    Fail(String),
}

impl Verdict {
    pub fn passed(&self) -> bool {
        !matches!(self, Verdict::Fail(_))
    }
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub verdict: Verdict,
    pub min_first_difference: f64,
    pub max_second_difference: f64,
    pub min_second_difference_left: f64,
    pub flags: Vec<String>,
}

/// Grid check of monotonicity (first differences > 0), concavity (second
/// differences <= tol) and strict concavity somewhere in the left half of the
/// grid (some second difference < -tol).
pub fn validate(u: &UtilityModel, grid: &[f64], tol: f64) -> Result<ValidationReport> {
    if grid.len() < 3 {
        return Err(invalid("validation grid needs at least 3 points"));
    }
    if !(tol > 0.0) {
        return Err(invalid("validation tolerance must be positive"));
    }
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(invalid("validation grid must be strictly increasing"));
    }
    let values: Vec<f64> = grid.iter().map(|&z| u.eval(z)).collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Ok(ValidationReport {
            verdict: Verdict::Fail(format!("non-finite value at z={}", grid[i])),
            min_first_difference: f64::NAN,
            max_second_difference: f64::NAN,
            min_second_difference_left: f64::NAN,
            flags: vec![],
        });
    }

    let steps: Vec<f64> = grid.windows(2).map(|w| u.increment(w[0], w[1])).collect();
    let min_first = steps.iter().copied().fold(f64::INFINITY, f64::min);

    // second differences normalised to a non-uniform grid
    let second: Vec<f64> = (1..grid.len() - 1)
        .map(|i| {
            let h0 = grid[i] - grid[i - 1];
            let h1 = grid[i + 1] - grid[i];
            let slope1 = steps[i] / h1;
            let slope0 = steps[i - 1] / h0;
            (slope1 - slope0) * 0.5 * (h0 + h1)
        })
        .collect();
    let max_second = second.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let left = second.len().div_ceil(2);
    let min_second_left = second[..left]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);

    let mut flags = Vec::new();
    let verdict = if !(min_first > 0.0) {
        Verdict::Fail("not strictly increasing on the grid".into())
    } else if max_second > tol {
        Verdict::Fail("not concave on the grid".into())
    } else if min_second_left < -tol {
        Verdict::Pass
    } else {
        flags.push("risk-neutral reference, strict concavity in the left tail violated".into());
        Verdict::PassRiskNeutral
    };

    Ok(ValidationReport {
        verdict,
        min_first_difference: min_first,
        max_second_difference: max_second,
        min_second_difference_left: min_second_left,
        flags,
    })
}

pub fn default_grid() -> Vec<f64> {
    let n = DEFAULT_GRID_POINTS;
    let step = (DEFAULT_GRID_HI - DEFAULT_GRID_LO) / (n - 1) as f64;
    (0..n).map(|i| DEFAULT_GRID_LO + step * i as f64).collect()
}

pub fn validate_default(u: &UtilityModel) -> Result<ValidationReport> {
    validate(u, &default_grid(), DEFAULT_TOL)
}

//! Load control: which input rates a provider can induce when some policy
//! parameters are fixed, the pricing curves that induce them, and the profit
//! attainable along those curves.

mod achievable;
mod curve;
mod profit;
mod risk;

use std::fmt;

pub use achievable::{achievable_one_fixed, achievable_two_fixed, free_parameter_range, lambda_cf, FreeRange};
pub use curve::{trace_pricing_curve, CurvePoint, PricingCurve, DEFAULT_CURVE_POINTS};
pub use profit::{
    eps_optimal_policy, h_envelope, lambda_star, optimal_profit_constrained, optimal_profit_constrained_with, profit_g1, EpsOptimal, ProfitCell,
    ProfitConstraint,
};
pub use risk::{free_parameter_value, risk_sweep, RiskSweepRow};

use crate::model::LeadTime;

/// Interval of input rates with per-endpoint open/closed flags.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AchievableInterval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
    pub empty: bool,
    pub singleton: bool,
}

/// Offset below an open upper endpoint at which grid sweeps stop, relative to μ.
pub const OPEN_END_OFFSET: f64 = 1e-6;

impl AchievableInterval {
    pub fn empty() -> Self {
        Self {
            lo: 0.0,
            hi: 0.0,
            lo_closed: false,
            hi_closed: false,
            empty: true,
            singleton: false,
        }
    }

    pub fn singleton(x: f64) -> Self {
        Self {
            lo: x,
            hi: x,
            lo_closed: true,
            hi_closed: true,
            empty: false,
            singleton: true,
        }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        if lo == hi {
            return Self::singleton(lo);
        }
        Self {
            lo,
            hi,
            lo_closed: true,
            hi_closed: true,
            empty: false,
            singleton: false,
        }
    }

    /// `[lo, hi)`.
    pub fn half_open(lo: f64, hi: f64) -> Self {
        Self {
            hi_closed: false,
            ..Self::closed(lo, hi)
        }
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        if self.empty {
            return false;
        }
        let above_lo = if self.lo_closed { x >= self.lo - tol } else { x > self.lo };
        let below_hi = if self.hi_closed { x <= self.hi + tol } else { x < self.hi };
        above_lo && below_hi
    }

    /// Largest rate a sweep should visit: `hi`, or `hi − 1e−6·μ` when open.
    pub fn sweep_hi(&self, mu: f64) -> f64 {
        if self.hi_closed {
            self.hi
        } else {
            self.hi - OPEN_END_OFFSET * mu
        }
    }

    /// `n` evenly spaced rates from `lo` to [`Self::sweep_hi`].
    pub fn grid(&self, n: usize, mu: f64) -> Vec<f64> {
        if self.empty {
            return Vec::new();
        }
        if self.singleton || n < 2 {
            return vec![self.lo];
        }
        linspace(self.lo, self.sweep_hi(mu), n)
    }
}

impl fmt::Display for AchievableInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.empty {
            return f.write_str("{}");
        }
        if self.singleton {
            return write!(f, "{{{}}}", self.lo);
        }
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_closed { '[' } else { '(' },
            self.lo,
            self.hi,
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => {
            let step = (b - a) / (n - 1) as f64;
            (0..n).map(|i| if i == n - 1 { b } else { a + step * i as f64 }).collect()
        }
    }
}

/// Two fixed policy parameters; the third is free.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TwoFixed {
    PriceCompensation { price: f64, compensation: f64 },
    LeadTimeCompensation { lead_time: LeadTime, compensation: f64 },
    LeadTimePrice { lead_time: LeadTime, price: f64 },
}

impl TwoFixed {
    /// Name of the free parameter: `d`, `p` or `l`.
    pub fn free_name(&self) -> &'static str {
        match self {
            TwoFixed::PriceCompensation { .. } => "d",
            TwoFixed::LeadTimeCompensation { .. } => "p",
            TwoFixed::LeadTimePrice { .. } => "l",
        }
    }
}

/// One fixed policy parameter; the other two trace a pricing curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OneFixed {
    Price(f64),
    Compensation(f64),
    LeadTime(LeadTime),
}

impl OneFixed {
    pub fn name(&self) -> &'static str {
        match self {
            OneFixed::Price(_) => "p",
            OneFixed::Compensation(_) => "l",
            OneFixed::LeadTime(_) => "d",
        }
    }

    /// Column names of the two free coordinates of a pricing curve.
    pub fn free_names(&self) -> (&'static str, &'static str) {
        match self {
            OneFixed::Price(_) => ("d", "l"),
            OneFixed::Compensation(_) => ("d", "p"),
            OneFixed::LeadTime(_) => ("l", "p"),
        }
    }
}

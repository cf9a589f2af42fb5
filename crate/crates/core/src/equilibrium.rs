//! Symmetric join/balk equilibria and the inverse problems: the lead time,
//! entrance fee or compensation rate that induces a target input rate when the
//! other two policy parameters are fixed.

use std::fmt;

use crate::error::{invalid, Error, Result};
use crate::loadcontrol::{achievable_two_fixed, lambda_cf, AchievableInterval, TwoFixed};
use crate::model::{k_limit_at_mu, k_value, sojourn_rate, ExtendedValue, LeadTime, MarketParams, Policy};
use crate::numeric::bisect;
use crate::utility::UtilityModel;

/// Absolute tolerance on equilibrium rates.
pub const RATE_TOL: f64 = 1e-9;
/// Iteration cap for every bisection.
pub const MAX_BISECTIONS: usize = 200;
/// Relative width at which parameter bisections stop.
const PARAM_XTOL: f64 = 1e-13;
/// Rates closer than `CF_MATCH · μ` to the compensation-free equilibrium are
/// treated as equal to it.
const CF_MATCH: f64 = 1e-8;

/// Which branch of the equilibrium characterisation produced an outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquilibriumCase {
    /// `p = R, l = c, d = 0`: customers are indifferent at every load.
    Indifferent,
    /// `p = R` otherwise: nobody joins.
    FullPrice,
    /// `K(0) ≤ 0`: joining does not pay even in an empty system.
    NoJoinAtZero,
    /// `K(0) > 0 > K(μ⁻)`: unique root of `K`, capped by the market.
    InteriorRoot,
    /// `K(μ⁻) ≥ 0`: everyone joins (or no equilibrium when `Λ ≥ μ`).
    JoinAtCapacity,
}

impl EquilibriumCase {
    pub fn label(&self) -> &'static str {
        match self {
            EquilibriumCase::Indifferent => "indifferent",
            EquilibriumCase::FullPrice => "full_price",
            EquilibriumCase::NoJoinAtZero => "no_join_at_zero",
            EquilibriumCase::InteriorRoot => "interior_root",
            EquilibriumCase::JoinAtCapacity => "join_at_capacity",
        }
    }
}

impl fmt::Display for EquilibriumCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EquilibriumKind {
    Unique(f64),
    Continuum(AchievableInterval),
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumOutcome {
    pub kind: EquilibriumKind,
    pub case: EquilibriumCase,
    /// `K(0)`, when it was evaluated.
    pub k_at_zero: Option<ExtendedValue>,
    pub k_limit: ExtendedValue,
    /// `K` at the returned rate for unique outcomes.
    pub k_at_rate: Option<ExtendedValue>,
}

impl EquilibriumOutcome {
    pub fn unique_rate(&self) -> Option<f64> {
        match self.kind {
            EquilibriumKind::Unique(l) => Some(l),
            _ => None,
        }
    }
}

/// Solve for the symmetric equilibrium input rate under `policy`.
pub fn solve_equilibrium(policy: &Policy, params: &MarketParams, u: &UtilityModel) -> Result<EquilibriumOutcome> {
    params.validate()?;
    u.ensure_usable()?;
    let k_limit = k_limit_at_mu(policy, params, u);
    let outcome = |kind, case, k_at_zero, k_at_rate| EquilibriumOutcome {
        kind,
        case,
        k_at_zero,
        k_limit,
        k_at_rate,
    };

    if policy.price == params.reward {
        if policy.is_boundary(params) {
            let interval = if params.market_binds() {
                AchievableInterval::closed(0.0, params.market_rate)
            } else {
                AchievableInterval::half_open(0.0, params.service_rate)
            };
            return Ok(outcome(
                EquilibriumKind::Continuum(interval),
                EquilibriumCase::Indifferent,
                None,
                None,
            ));
        }
        return Ok(outcome(
            EquilibriumKind::Unique(0.0),
            EquilibriumCase::FullPrice,
            None,
            None,
        ));
    }

    let k0 = k_value(0.0, policy, params, u)?;
    if !k0.is_positive() {
        return Ok(outcome(
            EquilibriumKind::Unique(0.0),
            EquilibriumCase::NoJoinAtZero,
            Some(k0),
            Some(k0),
        ));
    }

    if k_limit.is_nonnegative() {
        if params.market_binds() {
            let k = k_value(params.market_rate, policy, params, u)?;
            return Ok(outcome(
                EquilibriumKind::Unique(params.market_rate),
                EquilibriumCase::JoinAtCapacity,
                Some(k0),
                Some(k),
            ));
        }
        return Ok(outcome(
            EquilibriumKind::None,
            EquilibriumCase::JoinAtCapacity,
            Some(k0),
            None,
        ));
    }

    let hi = params.max_feasible_rate();
    let k_hi = k_value(hi, policy, params, u)?;
    if k_hi.is_nonnegative() {
        return Ok(outcome(
            EquilibriumKind::Unique(hi),
            EquilibriumCase::InteriorRoot,
            Some(k0),
            Some(k_hi),
        ));
    }
    let (lo, _) = bisect(
        |x| Ok::<_, Error>(k_value(x, policy, params, u)?.is_nonnegative()),
        0.0,
        hi,
        RATE_TOL,
        MAX_BISECTIONS,
    )?;
    let k = k_value(lo, policy, params, u)?;
    Ok(outcome(
        EquilibriumKind::Unique(lo),
        EquilibriumCase::InteriorRoot,
        Some(k0),
        Some(k),
    ))
}

fn check_target(lambda: f64, params: &MarketParams) -> Result<()> {
    if !(lambda >= 0.0) || lambda > params.max_feasible_rate() {
        return Err(invalid(format!(
            "target rate {lambda} outside [0, {}]",
            params.max_feasible_rate()
        )));
    }
    Ok(())
}

fn at_market(lambda: f64, params: &MarketParams) -> bool {
    params.market_binds() && (lambda - params.market_rate).abs() <= CF_MATCH * params.service_rate
}

fn not_achievable(lambda: f64, fixed: TwoFixed, params: &MarketParams, u: &UtilityModel) -> Error {
    match achievable_two_fixed(fixed, params, u) {
        Ok(interval) => Error::NotAchievable { lambda, interval },
        Err(e) => e,
    }
}

/// Position of `lambda` relative to the compensation-free equilibrium rate.
enum CfPosition {
    Below,
    At,
    Above,
}

fn cf_position(lambda: f64, price: f64, params: &MarketParams, u: &UtilityModel) -> Result<CfPosition> {
    let cf = lambda_cf(price, params.waiting_cost, params, u)?;
    let tol = CF_MATCH * params.service_rate;
    Ok(if (lambda - cf).abs() <= tol {
        CfPosition::At
    } else if lambda < cf {
        CfPosition::Below
    } else {
        CfPosition::Above
    })
}

/// Largest lead time `d` with `λᵉ(d, p, l) = λ`.
///
/// Returns [`LeadTime::NoCompensation`] when the supremum is infinite, which
/// happens exactly at the compensation-free rate `λ_CF(p; c)`.
pub fn required_leadtime(
    lambda: f64,
    price: f64,
    compensation: f64,
    params: &MarketParams,
    u: &UtilityModel,
) -> Result<LeadTime> {
    check_target(lambda, params)?;
    u.ensure_usable()?;
    let fixed = TwoFixed::PriceCompensation { price, compensation };
    let policy_at = |d: f64| Policy::finite(d, price, compensation, params);
    policy_at(0.0)?;

    if price == params.reward {
        // only λ = 0 is reachable, and it is for every lead time (d = 0 with
        // l = c would be the indifferent boundary, but the supremum is d → ∞)
        return if lambda == 0.0 {
            Ok(LeadTime::NoCompensation)
        } else {
            Err(not_achievable(lambda, fixed, params, u))
        };
    }

    match cf_position(lambda, price, params, u)? {
        CfPosition::At => return Ok(LeadTime::NoCompensation),
        CfPosition::Below => return Err(not_achievable(lambda, fixed, params, u)),
        CfPosition::Above => {}
    }

    // K(λ, ·) is decreasing in d; the largest d keeping K(λ, d) ≥ 0 is the root
    // (for λ = Λ the same point bounds the inequality form).
    let k_at = |d: f64| -> Result<ExtendedValue> { k_value(lambda, &policy_at(d)?, params, u) };
    if !k_at(0.0)?.is_nonnegative() {
        return Err(not_achievable(lambda, fixed, params, u));
    }
    let nu = sojourn_rate(lambda, params)?;
    let mut hi = 50.0 / nu;
    while k_at(hi)?.is_nonnegative() {
        hi *= 2.0;
        if hi > 1e6 / nu {
            return Ok(LeadTime::NoCompensation);
        }
    }
    let (lo, _) = bisect(|d| Ok::<_, Error>(k_at(d)?.is_nonnegative()), 0.0, hi, PARAM_XTOL * hi, MAX_BISECTIONS)?;
    Ok(LeadTime::Finite(lo))
}

/// Largest entrance fee `p ∈ [0, R]` with `λᵉ(d, p, l) = λ`.
pub fn required_price(
    lambda: f64,
    lead_time: LeadTime,
    compensation: f64,
    params: &MarketParams,
    u: &UtilityModel,
) -> Result<f64> {
    check_target(lambda, params)?;
    u.ensure_usable()?;
    let fixed = TwoFixed::LeadTimeCompensation {
        lead_time,
        compensation,
    };
    let policy_at = |p: f64| Policy::new(lead_time, p, compensation, params);
    let boundary = policy_at(params.reward)?.is_boundary(params);

    if boundary {
        // K does not depend on λ: only Λ < μ is reachable, by any p < R, and
        // the supremum p → R is the indifferent boundary itself
        return if at_market(lambda, params) {
            Err(Error::SupremumNotAttained { lambda })
        } else {
            Err(not_achievable(lambda, fixed, params, u))
        };
    }
    if lambda == 0.0 {
        return Ok(params.reward);
    }

    let k_at = |p: f64| -> Result<ExtendedValue> { k_value(lambda, &policy_at(p)?, params, u) };
    if !k_at(0.0)?.is_nonnegative() {
        return Err(not_achievable(lambda, fixed, params, u));
    }
    let (lo, _) = bisect(
        |p| Ok::<_, Error>(k_at(p)?.is_nonnegative()),
        0.0,
        params.reward,
        PARAM_XTOL * params.reward,
        MAX_BISECTIONS,
    )?;
    Ok(lo)
}

/// Smallest compensation rate `l ∈ [0, c]` with `λᵉ(d, p, l) = λ`.
pub fn required_compensation(
    lambda: f64,
    lead_time: LeadTime,
    price: f64,
    params: &MarketParams,
    u: &UtilityModel,
) -> Result<f64> {
    check_target(lambda, params)?;
    u.ensure_usable()?;
    let fixed = TwoFixed::LeadTimePrice { lead_time, price };
    let policy_at = |l: f64| Policy::new(lead_time, price, l, params);
    policy_at(0.0)?;

    if price == params.reward {
        return if lambda == 0.0 {
            Ok(0.0)
        } else {
            Err(not_achievable(lambda, fixed, params, u))
        };
    }
    match cf_position(lambda, price, params, u)? {
        CfPosition::At => return Ok(0.0),
        CfPosition::Below => return Err(not_achievable(lambda, fixed, params, u)),
        CfPosition::Above => {}
    }
    if lead_time == LeadTime::NoCompensation {
        return Err(not_achievable(lambda, fixed, params, u));
    }

    let c = params.waiting_cost;
    let k_at = |l: f64| -> Result<ExtendedValue> { k_value(lambda, &policy_at(l)?, params, u) };
    if !k_at(c)?.is_nonnegative() {
        return Err(not_achievable(lambda, fixed, params, u));
    }
    let (_, hi) = bisect(|l| Ok::<_, Error>(!k_at(l)?.is_nonnegative()), 0.0, c, PARAM_XTOL * c, MAX_BISECTIONS)?;
    Ok(hi)
}

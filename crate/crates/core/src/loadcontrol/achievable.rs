use crate::equilibrium::{required_compensation, required_price, solve_equilibrium, EquilibriumKind};
use crate::error::{invalid, Error, Result};
use crate::model::{LeadTime, MarketParams, Policy};
use crate::utility::UtilityModel;

use super::{AchievableInterval, OneFixed, TwoFixed};

/// Equilibrium rate without compensation when the waiting cost is `cost_rate`:
/// `λᵉ_CF(p; cost_rate)`.
pub fn lambda_cf(price: f64, cost_rate: f64, params: &MarketParams, u: &UtilityModel) -> Result<f64> {
    if !(cost_rate > 0.0) {
        return Err(invalid(format!("cost rate must be positive, got {cost_rate}")));
    }
    let params = params.with_waiting_cost(cost_rate);
    let policy = Policy::no_compensation(price, &params)?;
    match solve_equilibrium(&policy, &params, u)?.kind {
        EquilibriumKind::Unique(x) => Ok(x),
        _ => Err(Error::NoEquilibrium),
    }
}

/// `[0, hi]` or `[lo, hi]` whose upper end is the equilibrium of `policy`, or
/// `[lo, μ)` when that equilibrium does not exist because joining always pays.
fn up_to_equilibrium(lo: f64, policy: &Policy, params: &MarketParams, u: &UtilityModel) -> Result<AchievableInterval> {
    match solve_equilibrium(policy, params, u)?.kind {
        EquilibriumKind::Unique(hi) => Ok(AchievableInterval::closed(lo, hi.max(lo))),
        EquilibriumKind::None => Ok(AchievableInterval::half_open(lo, params.service_rate)),
        EquilibriumKind::Continuum(iv) => Ok(iv),
    }
}

/// `[lo, Λ]` when the market binds, otherwise `[lo, μ)`.
fn up_to_capacity(lo: f64, params: &MarketParams) -> AchievableInterval {
    if params.market_binds() {
        AchievableInterval::closed(lo, params.market_rate)
    } else {
        AchievableInterval::half_open(lo, params.service_rate)
    }
}

/// Rates that are the unique equilibrium for some value of the free parameter.
pub fn achievable_two_fixed(fixed: TwoFixed, params: &MarketParams, u: &UtilityModel) -> Result<AchievableInterval> {
    params.validate()?;
    let c = params.waiting_cost;
    match fixed {
        TwoFixed::PriceCompensation { price, compensation } => {
            Policy::finite(0.0, price, compensation, params)?;
            if price == params.reward {
                return Ok(AchievableInterval::singleton(0.0));
            }
            let lo = lambda_cf(price, c, params, u)?;
            if compensation == c {
                Ok(up_to_capacity(lo, params))
            } else if compensation == 0.0 {
                Ok(AchievableInterval::singleton(lo))
            } else {
                let hi = lambda_cf(price, c - compensation, params, u)?;
                Ok(AchievableInterval::closed(lo, hi))
            }
        }
        TwoFixed::LeadTimeCompensation { lead_time, compensation } => {
            let policy = Policy::new(lead_time, 0.0, compensation, params)?;
            if policy.lead_time.is_zero() && compensation == c {
                return Ok(if params.market_binds() {
                    AchievableInterval::singleton(params.market_rate)
                } else {
                    AchievableInterval::empty()
                });
            }
            up_to_equilibrium(0.0, &policy, params, u)
        }
        TwoFixed::LeadTimePrice { lead_time, price } => {
            Policy::new(lead_time, price, 0.0, params)?;
            if price == params.reward {
                return Ok(AchievableInterval::singleton(0.0));
            }
            let lo = lambda_cf(price, c, params, u)?;
            match lead_time {
                LeadTime::NoCompensation => Ok(AchievableInterval::singleton(lo)),
                LeadTime::Finite(_) => {
                    let full = Policy::new(lead_time, price, c, params)?;
                    up_to_equilibrium(lo, &full, params, u)
                }
            }
        }
    }
}

/// Rates that are the unique equilibrium for some values of the two free
/// parameters.
pub fn achievable_one_fixed(fixed: OneFixed, params: &MarketParams, u: &UtilityModel) -> Result<AchievableInterval> {
    params.validate()?;
    let c = params.waiting_cost;
    match fixed {
        OneFixed::Price(price) => {
            Policy::no_compensation(price, params)?;
            if price == params.reward {
                return Ok(AchievableInterval::singleton(0.0));
            }
            let lo = lambda_cf(price, c, params, u)?;
            Ok(up_to_capacity(lo, params))
        }
        OneFixed::Compensation(l) => {
            Policy::finite(0.0, 0.0, l, params)?;
            if l == c {
                return Ok(up_to_capacity(0.0, params));
            }
            Ok(AchievableInterval::closed(0.0, lambda_cf(0.0, c - l, params, u)?))
        }
        OneFixed::LeadTime(lead_time) => match lead_time {
            LeadTime::NoCompensation => Ok(AchievableInterval::closed(0.0, lambda_cf(0.0, c, params, u)?)),
            LeadTime::Finite(d) => {
                let policy = Policy::finite(d, 0.0, c, params)?;
                if d == 0.0 {
                    return Ok(up_to_capacity(0.0, params));
                }
                up_to_equilibrium(0.0, &policy, params, u)
            }
        },
    }
}

/// Range of one free parameter at a target rate, as shown alongside each
/// pricing curve: the compensation range for a fixed price, the price range
/// for a fixed compensation or lead time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeRange {
    pub lo: f64,
    pub hi: f64,
}

pub fn free_parameter_range(fixed: OneFixed, lambda: f64, params: &MarketParams, u: &UtilityModel) -> Result<FreeRange> {
    let c = params.waiting_cost;
    let interval = achievable_one_fixed(fixed, params, u)?;
    if !interval.contains(lambda, 1e-9 * params.service_rate) {
        return Err(Error::NotAchievable { lambda, interval });
    }
    let cf_max = lambda_cf(0.0, c, params, u)?;
    // lowest price that still yields λ: the compensation-free price while that
    // is non-negative, zero beyond
    let price_floor = || -> Result<f64> {
        if lambda <= cf_max {
            required_price(lambda, LeadTime::NoCompensation, 0.0, params, u)
        } else {
            Ok(0.0)
        }
    };
    match fixed {
        OneFixed::Price(price) => {
            let lo = required_compensation(lambda, LeadTime::Finite(0.0), price, params, u)?;
            Ok(FreeRange { lo, hi: c })
        }
        OneFixed::Compensation(l) => {
            let hi = if l == c {
                params.reward
            } else {
                required_price(lambda, LeadTime::Finite(0.0), l, params, u)?
            };
            Ok(FreeRange { lo: price_floor()?, hi })
        }
        OneFixed::LeadTime(lead_time) => {
            let hi = if lead_time.is_zero() {
                params.reward
            } else {
                required_price(lambda, lead_time, c, params, u)?
            };
            Ok(FreeRange { lo: price_floor()?, hi })
        }
    }
}

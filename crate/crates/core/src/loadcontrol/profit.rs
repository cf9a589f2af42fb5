use log::debug;
use rayon::prelude::*;

use crate::equilibrium::{required_compensation, required_leadtime, required_price, solve_equilibrium};
use crate::error::{invalid, Error, Result};
use crate::model::{expected_lateness, sojourn_rate, LeadTime, MarketParams, Policy};
use crate::utility::UtilityModel;

use super::{achievable_one_fixed, lambda_cf, trace_pricing_curve, OneFixed, TwoFixed, DEFAULT_CURVE_POINTS};

/// Provider profit per unit time: fees minus expected compensation.
pub fn profit_g1(lambda: f64, policy: &Policy, params: &MarketParams) -> Result<f64> {
    sojourn_rate(lambda, params)?;
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let payout = match policy.lead_time {
        LeadTime::NoCompensation => 0.0,
        lt => policy.compensation() * expected_lateness(lambda, lt, params)?,
    };
    Ok(lambda * (policy.price - payout))
}

/// Risk-neutral upper envelope `λ (R − c/(μ−λ))` of the profit at rate λ.
pub fn h_envelope(lambda: f64, params: &MarketParams) -> Result<f64> {
    let nu = sojourn_rate(lambda, params)?;
    Ok(lambda * (params.reward - params.waiting_cost / nu))
}

/// Maximizer of [`h_envelope`] over `[0, min(Λ, μ))`.
pub fn lambda_star(params: &MarketParams) -> f64 {
    let mu = params.service_rate;
    let scale = params.waiting_cost * mu / params.reward;
    if scale >= mu * mu {
        return 0.0;
    }
    (mu - scale.sqrt()).min(params.market_rate).max(0.0)
}

/// A policy within ε of the envelope at `λ*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsOptimal {
    pub policy: Policy,
    pub lambda: f64,
    pub profit: f64,
    pub envelope: f64,
    /// `R − p` of the returned policy.
    pub delta: f64,
    pub iterations: usize,
}

impl EpsOptimal {
    pub fn gap(&self) -> f64 {
        self.envelope - self.profit
    }
}

/// δ below which halving stops, relative to R.
const DELTA_FLOOR: f64 = 1e-10;

/// Agreement required between the witness policy's equilibrium and `λ*`.
const WITNESS_TOL: f64 = 1e-6;

/// Fully compensating policy `(dᵉ(λ*, R−δ, c), R−δ, c)`, halving δ until its
/// profit is within `epsilon` of `H(λ*)`.
pub fn eps_optimal_policy(epsilon: f64, params: &MarketParams, u: &UtilityModel) -> Result<EpsOptimal> {
    if !(epsilon > 0.0) {
        return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    params.validate()?;
    u.ensure_usable()?;
    let r = params.reward;
    let c = params.waiting_cost;
    let target = lambda_star(params);
    let envelope = h_envelope(target, params)?;
    if target == 0.0 {
        return Ok(EpsOptimal {
            policy: Policy::no_compensation(r, params)?,
            lambda: 0.0,
            profit: 0.0,
            envelope,
            delta: 0.0,
            iterations: 0,
        });
    }

    let cf_price = if target <= lambda_cf(0.0, c, params, u)? {
        required_price(target, LeadTime::NoCompensation, 0.0, params, u)?
    } else {
        0.0
    };
    let mut delta = (r - cf_price) / 2.0;
    let mut best: Option<EpsOptimal> = None;
    let mut iterations = 0;
    while delta >= DELTA_FLOOR * r {
        iterations += 1;
        let price = r - delta;
        let d = required_leadtime(target, price, c, params, u)?;
        let policy = Policy::new(d, price, c, params)?;
        let profit = profit_g1(target, &policy, params)?;
        let candidate = EpsOptimal {
            policy,
            lambda: target,
            profit,
            envelope,
            delta,
            iterations,
        };
        debug!("eps-optimal: δ={delta:e} G={profit} H={envelope}");
        if best.is_none_or(|b| profit > b.profit) {
            best = Some(candidate);
        }
        if profit >= envelope - epsilon {
            let reached = solve_equilibrium(&policy, params, u)?.unique_rate();
            match reached {
                Some(x) if (x - target).abs() <= WITNESS_TOL => return Ok(candidate),
                _ => debug!("eps-optimal: witness equilibrium {reached:?} misses λ*={target}"),
            }
        }
        delta /= 2.0;
    }
    let best = best.ok_or_else(|| invalid("no candidate policy at the optimal rate"))?;
    Err(Error::EpsilonUnderflow {
        epsilon,
        best_gap: best.gap(),
        best: Box::new(best),
    })
}

/// Which profit curve to evaluate over a grid of rates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProfitConstraint {
    /// `λ · p_CF(λ)`: no compensation.
    CompensationFree,
    /// `H(λ)`: the full-flexibility supremum.
    Envelope,
    One(OneFixed),
    Two(TwoFixed),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfitCell {
    pub lambda: f64,
    /// `None` where the rate is not achievable under the constraint.
    pub profit: Option<f64>,
}

fn unreachable_as_none<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::NotAchievable { .. } | Error::SupremumNotAttained { .. } | Error::Unstable { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn best_profit(
    constraint: ProfitConstraint,
    lambda: f64,
    params: &MarketParams,
    u: &UtilityModel,
    grid_size: usize,
) -> Result<Option<f64>> {
    match constraint {
        ProfitConstraint::Envelope => {
            if lambda > params.market_rate {
                return Ok(None);
            }
            unreachable_as_none(h_envelope(lambda, params))
        }
        ProfitConstraint::CompensationFree => {
            let price = required_price(lambda, LeadTime::NoCompensation, 0.0, params, u);
            Ok(unreachable_as_none(price)?.map(|p| lambda * p))
        }
        ProfitConstraint::One(fixed) => {
            let interval = achievable_one_fixed(fixed, params, u)?;
            if !interval.contains(lambda, 1e-9 * params.service_rate) {
                return Ok(None);
            }
            let curve = trace_pricing_curve(fixed, lambda, grid_size, params, u);
            Ok(unreachable_as_none(curve)?.map(|c| c.best().profit))
        }
        ProfitConstraint::Two(fixed) => {
            let policy = match fixed {
                TwoFixed::PriceCompensation { price, compensation } => {
                    unreachable_as_none(required_leadtime(lambda, price, compensation, params, u))?
                        .map(|d| Policy::new(d, price, compensation, params))
                }
                TwoFixed::LeadTimeCompensation { lead_time, compensation } => {
                    unreachable_as_none(required_price(lambda, lead_time, compensation, params, u))?
                        .map(|p| Policy::new(lead_time, p, compensation, params))
                }
                TwoFixed::LeadTimePrice { lead_time, price } => {
                    unreachable_as_none(required_compensation(lambda, lead_time, price, params, u))?
                        .map(|l| Policy::new(lead_time, price, l, params))
                }
            };
            match policy {
                Some(p) => Ok(Some(profit_g1(lambda, &p?, params)?)),
                None => Ok(None),
            }
        }
    }
}

/// Best attainable profit at each rate of `lambdas` under `constraint`.
/// Output order follows the input grid.
pub fn optimal_profit_constrained(
    constraint: ProfitConstraint,
    lambdas: &[f64],
    params: &MarketParams,
    u: &UtilityModel,
) -> Result<Vec<ProfitCell>> {
    optimal_profit_constrained_with(constraint, lambdas, params, u, DEFAULT_CURVE_POINTS)
}

/// As [`optimal_profit_constrained`] with a custom pricing-curve resolution.
pub fn optimal_profit_constrained_with(
    constraint: ProfitConstraint,
    lambdas: &[f64],
    params: &MarketParams,
    u: &UtilityModel,
    curve_points: usize,
) -> Result<Vec<ProfitCell>> {
    params.validate()?;
    lambdas
        .par_iter()
        .map(|&lambda| {
            Ok(ProfitCell {
                lambda,
                profit: best_profit(constraint, lambda, params, u, curve_points)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn base() -> MarketParams {
        MarketParams::base_case()
    }
    fn cara() -> UtilityModel {
        UtilityModel::cara(0.5).unwrap()
    }

    #[test]
    fn profit_examples() {
        let p = base();
        let cf = Policy::no_compensation(10.0, &p).unwrap();
        assert_eq!(profit_g1(8.0, &cf, &p).unwrap(), 80.0);
        let pol = Policy::base_case();
        let expect = 8.0 * (10.0 - 4.5 * (-2.0f64).exp() / 4.0);
        assert_relative_eq!(profit_g1(8.0, &pol, &p).unwrap(), expect, epsilon = 1e-12);
        assert_relative_eq!(expect, 78.781, epsilon = 1e-3);
        assert_eq!(profit_g1(0.0, &pol, &p).unwrap(), 0.0);
        assert!(profit_g1(12.0, &pol, &p).is_err());
    }

    #[test]
    fn envelope_examples() {
        let p = base();
        assert_eq!(h_envelope(0.0, &p).unwrap(), 0.0);
        assert_relative_eq!(h_envelope(11.0, &p).unwrap(), 77.0, epsilon = 1e-12);
        let ls = lambda_star(&p);
        assert_relative_eq!(ls, 12.0 - (8.0f64 * 12.0 / 15.0).sqrt(), epsilon = 1e-12);
        assert!((ls - 9.47).abs() < 0.01);
        assert!((h_envelope(ls, &p).unwrap() - 112.1).abs() < 0.01);
        assert_eq!(lambda_star(&p.with_market_rate(5.0)), 5.0);
        assert_relative_eq!(lambda_star(&p.with_waiting_cost(1e-12)), 12.0, epsilon = 1e-5);
        assert_eq!(lambda_star(&p.with_waiting_cost(1e3)), 0.0);
    }

    #[test]
    fn envelope_peaks_at_lambda_star() {
        let p = base();
        let ls = lambda_star(&p);
        let h = h_envelope(ls, &p).unwrap();
        for i in 0..200 {
            let x = 11.99 * i as f64 / 199.0;
            assert!(h_envelope(x, &p).unwrap() <= h + 1e-12);
        }
    }

    #[test]
    fn eps_optimal_base_case() {
        let p = base();
        let u = cara();
        let out = eps_optimal_policy(0.1, &p, &u).unwrap();
        assert_eq!(out.policy.compensation(), 8.0);
        assert!(out.profit >= out.envelope - 0.1 && out.profit < out.envelope);
        // λ* is above the largest compensation-free rate, so p_CF(λ*) is 0
        assert!(out.lambda > lambda_cf(0.0, 8.0, &p, &u).unwrap());
        assert!(out.policy.price > 0.0 && out.policy.price < 15.0);
        let eq = solve_equilibrium(&out.policy, &p, &u).unwrap();
        assert!((eq.unique_rate().unwrap() - lambda_star(&p)).abs() < 1e-6);
    }

    #[test]
    fn eps_optimal_vacuous_and_underflow() {
        let p = base();
        let u = cara();
        let h = h_envelope(lambda_star(&p), &p).unwrap();
        let out = eps_optimal_policy(h + 1.0, &p, &u).unwrap();
        assert_eq!(out.iterations, 1);
        match eps_optimal_policy(1e-12, &p, &u) {
            Err(Error::EpsilonUnderflow { best, .. }) => assert!(best.profit < h),
            other => panic!("expected underflow, got {other:?}"),
        }
        assert!(eps_optimal_policy(0.0, &p, &u).is_err());
    }

    #[test]
    fn eps_optimal_profit_grows_as_delta_shrinks() {
        let p = base();
        let u = cara();
        let mut last = f64::NEG_INFINITY;
        for eps in [10.0, 1.0, 0.1, 0.01, 1e-3] {
            let out = eps_optimal_policy(eps, &p, &u).unwrap();
            assert!(out.profit >= last);
            last = out.profit;
        }
    }

    #[test]
    fn eps_optimal_risk_neutral() {
        let p = base();
        let out = eps_optimal_policy(1e-6, &p, &UtilityModel::linear()).unwrap();
        assert!(out.gap() <= 1e-6);
    }

    #[test]
    fn constrained_profit_markers_and_order() {
        let p = base();
        let u = cara();
        let grid = [1.0, 5.0, 7.0, 9.0, 11.0];
        let cf = optimal_profit_constrained(ProfitConstraint::CompensationFree, &grid, &p, &u).unwrap();
        assert_eq!(cf.iter().map(|c| c.lambda).collect::<Vec<_>>(), grid);
        assert!(cf[0].profit.is_some() && cf[4].profit.is_none());
        let h = optimal_profit_constrained(ProfitConstraint::Envelope, &grid, &p, &u).unwrap();
        for (a, b) in cf.iter().zip(&h) {
            if let Some(x) = a.profit {
                assert!(x < b.profit.unwrap());
            }
        }
        let pl = optimal_profit_constrained(
            ProfitConstraint::Two(TwoFixed::PriceCompensation {
                price: 10.0,
                compensation: 4.5,
            }),
            &grid,
            &p,
            &u,
        )
        .unwrap();
        assert!(pl[3].profit.is_some() && pl[0].profit.is_none());
    }

    #[test]
    fn fixed_leadtime_curve_between_cf_and_envelope() {
        let p = base();
        let u = cara();
        let grid = [1.0, 4.0, 7.0];
        let d = optimal_profit_constrained_with(
            ProfitConstraint::One(OneFixed::LeadTime(LeadTime::Finite(0.5))),
            &grid,
            &p,
            &u,
            30,
        )
        .unwrap();
        let cf = optimal_profit_constrained(ProfitConstraint::CompensationFree, &grid, &p, &u).unwrap();
        for (i, &x) in grid.iter().enumerate() {
            let g = d[i].profit.unwrap();
            assert!(g >= cf[i].profit.unwrap() - 1e-9);
            assert!(g < h_envelope(x, &p).unwrap());
        }
    }
}

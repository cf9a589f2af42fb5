use rayon::prelude::*;

use crate::equilibrium::{required_compensation, required_leadtime, required_price};
use crate::error::{Error, Result};
use crate::model::{LeadTime, MarketParams};
use crate::utility::UtilityModel;

use super::TwoFixed;

/// The free parameter needed for `lambda`, or `None` if no value achieves it.
/// An unbounded lead time is reported as `f64::INFINITY`.
pub fn free_parameter_value(
    fixed: TwoFixed,
    lambda: f64,
    params: &MarketParams,
    u: &UtilityModel,
) -> Result<Option<f64>> {
    let value = match fixed {
        TwoFixed::PriceCompensation { price, compensation } => {
            required_leadtime(lambda, price, compensation, params, u).map(|d| match d {
                LeadTime::Finite(d) => d,
                LeadTime::NoCompensation => f64::INFINITY,
            })
        }
        TwoFixed::LeadTimeCompensation { lead_time, compensation } => {
            required_price(lambda, lead_time, compensation, params, u)
        }
        TwoFixed::LeadTimePrice { lead_time, price } => required_compensation(lambda, lead_time, price, params, u),
    };
    match value {
        Ok(v) => Ok(Some(v)),
        Err(Error::NotAchievable { .. } | Error::SupremumNotAttained { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskSweepRow {
    pub r: f64,
    pub lambda: f64,
    pub value: Option<f64>,
}

/// The free parameter of `fixed` for each (r, λ) pair under CARA utility,
/// ordered by r then λ.
pub fn risk_sweep(fixed: TwoFixed, lambdas: &[f64], r_grid: &[f64], params: &MarketParams) -> Result<Vec<RiskSweepRow>> {
    params.validate()?;
    let cells: Vec<(f64, f64)> = r_grid.iter().flat_map(|&r| lambdas.iter().map(move |&l| (r, l))).collect();
    cells
        .into_par_iter()
        .map(|(r, lambda)| {
            let u = UtilityModel::cara(r)?;
            Ok(RiskSweepRow {
                r,
                lambda,
                value: free_parameter_value(fixed, lambda, params, &u)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r_grid() -> Vec<f64> {
        (1..=20).map(|i| i as f64 / 10.0).collect()
    }

    fn column(rows: &[RiskSweepRow], lambda: f64) -> Vec<Option<f64>> {
        rows.iter().filter(|r| r.lambda == lambda).map(|r| r.value).collect()
    }

    #[test]
    fn free_price_falls_with_risk_aversion() {
        let p = MarketParams::base_case();
        let fixed = TwoFixed::LeadTimeCompensation {
            lead_time: LeadTime::Finite(0.5),
            compensation: 4.5,
        };
        let rows = risk_sweep(fixed, &[3.0, 6.0, 9.0], &r_grid(), &p).unwrap();
        assert_eq!(rows.len(), 60);
        assert_eq!(rows[0].r, 0.1);
        for lambda in [3.0, 6.0, 9.0] {
            let col = column(&rows, lambda);
            let mut seen_none = false;
            for w in col.windows(2) {
                if let (Some(a), Some(b)) = (w[0], w[1]) {
                    assert!(b <= a + 1e-9, "λ={lambda}");
                }
                seen_none |= w[0].is_none();
                assert!(!(seen_none && w[1].is_some()), "achievability must not return at higher r");
            }
        }
    }

    #[test]
    fn free_compensation_rises_with_risk_aversion() {
        let p = MarketParams::base_case();
        let fixed = TwoFixed::LeadTimePrice {
            lead_time: LeadTime::Finite(0.5),
            price: 5.0,
        };
        let rows = risk_sweep(fixed, &[11.0, 11.5], &r_grid(), &p).unwrap();
        for lambda in [11.0, 11.5] {
            let col = column(&rows, lambda);
            assert!(col.iter().all(Option::is_some), "high λ stays achievable");
            for w in col.windows(2) {
                assert!(w[1].unwrap() >= w[0].unwrap() - 1e-9);
            }
        }
    }
}

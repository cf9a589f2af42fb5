use rayon::prelude::*;

use crate::equilibrium::{required_compensation, required_leadtime, required_price};
use crate::error::{invalid, Error, Result};
use crate::model::{sojourn_rate, LeadTime, MarketParams, Policy};
use crate::numeric::golden_section_max;
use crate::utility::UtilityModel;

use super::{achievable_one_fixed, lambda_cf, linspace, profit_g1, OneFixed};

pub const DEFAULT_CURVE_POINTS: usize = 200;

/// Lead-time span swept on a fixed-`l` curve when every lead time is
/// feasible, in units of the mean sojourn time.
const OPEN_LEADTIME_SPAN: f64 = 20.0;

/// Where a curve stops short of the indifferent boundary `d = 0, l = c`.
const BOUNDARY_OFFSET: f64 = 1e-6;

const GOLDEN_XTOL: f64 = 1e-10;
const GOLDEN_MAX_ITER: usize = 200;
const REFINE_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// The swept free parameter.
    pub sweep: f64,
    pub policy: Policy,
    pub profit: f64,
}

impl CurvePoint {
    /// The two free coordinates in the order of [`OneFixed::free_names`];
    /// an infinite lead time is reported as `f64::INFINITY`.
    pub fn coordinates(&self, fixed: OneFixed) -> (f64, f64) {
        let d = match self.policy.lead_time {
            LeadTime::Finite(d) => d,
            LeadTime::NoCompensation => f64::INFINITY,
        };
        let p = self.policy.price;
        let l = self.policy.compensation();
        match fixed {
            OneFixed::Price(_) => (d, l),
            OneFixed::Compensation(_) => (d, p),
            OneFixed::LeadTime(_) => (l, p),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PricingCurve {
    pub fixed: OneFixed,
    pub target_lambda: f64,
    pub points: Vec<CurvePoint>,
    /// Index of the grid argmax (first one on ties).
    pub maximizer: usize,
    /// Golden-section refinement around the grid argmax, kept only when it
    /// beats the grid.
    pub refined: Option<CurvePoint>,
}

impl PricingCurve {
    pub fn grid_best(&self) -> &CurvePoint {
        &self.points[self.maximizer]
    }

    pub fn best(&self) -> &CurvePoint {
        self.refined.as_ref().unwrap_or_else(|| self.grid_best())
    }
}

/// The swept parameter's range and the map from it to a point on the curve.
struct Sweep<'a> {
    lo: f64,
    hi: f64,
    fixed: OneFixed,
    lambda: f64,
    params: &'a MarketParams,
    u: &'a UtilityModel,
}

impl Sweep<'_> {
    fn point(&self, x: f64) -> Result<CurvePoint> {
        let (lambda, params, u) = (self.lambda, self.params, self.u);
        let policy = match self.fixed {
            OneFixed::Price(p) => {
                let d = required_leadtime(lambda, p, x, params, u)?;
                Policy::new(d, p, x, params)?
            }
            OneFixed::Compensation(l) => {
                let p = required_price(lambda, LeadTime::Finite(x), l, params, u)?;
                Policy::finite(x, p, l, params)?
            }
            OneFixed::LeadTime(d) => {
                let p = required_price(lambda, d, x, params, u)?;
                Policy::new(d, p, x, params)?
            }
        };
        Ok(CurvePoint {
            sweep: x,
            policy,
            profit: profit_g1(lambda, &policy, params)?,
        })
    }
}

fn sweep_range(fixed: OneFixed, lambda: f64, params: &MarketParams, u: &UtilityModel) -> Result<(f64, f64)> {
    let c = params.waiting_cost;
    let above_cf_max = || -> Result<bool> { Ok(lambda > lambda_cf(0.0, c, params, u)? + 1e-9 * params.service_rate) };
    match fixed {
        OneFixed::Price(p) => {
            let lo = required_compensation(lambda, LeadTime::Finite(0.0), p, params, u)?;
            Ok((lo, c))
        }
        OneFixed::Compensation(l) => {
            let nu = sojourn_rate(lambda, params)?;
            let hi = if above_cf_max()? {
                match required_leadtime(lambda, 0.0, l, params, u)? {
                    LeadTime::Finite(d) => d,
                    LeadTime::NoCompensation => OPEN_LEADTIME_SPAN / nu,
                }
            } else {
                OPEN_LEADTIME_SPAN / nu
            };
            let lo = if l == c { BOUNDARY_OFFSET * hi } else { 0.0 };
            Ok((lo, hi))
        }
        OneFixed::LeadTime(d) => {
            if d == LeadTime::NoCompensation {
                return Err(invalid("a pricing curve needs a finite lead time"));
            }
            let lo = if above_cf_max()? {
                required_compensation(lambda, d, 0.0, params, u)?
            } else {
                0.0
            };
            let hi = if d.is_zero() { c * (1.0 - BOUNDARY_OFFSET) } else { c };
            Ok((lo, hi))
        }
    }
}

/// Traces the set of policies with one parameter fixed that induce
/// `lambda` as the unique equilibrium, with the profit at each point.
pub fn trace_pricing_curve(
    fixed: OneFixed,
    lambda: f64,
    grid_size: usize,
    params: &MarketParams,
    u: &UtilityModel,
) -> Result<PricingCurve> {
    if grid_size < 2 {
        return Err(invalid("a pricing curve needs at least two points"));
    }
    let interval = achievable_one_fixed(fixed, params, u)?;
    if !interval.contains(lambda, 1e-9 * params.service_rate) {
        return Err(Error::NotAchievable { lambda, interval });
    }
    let (lo, hi) = sweep_range(fixed, lambda, params, u)?;
    let sweep = Sweep {
        lo,
        hi,
        fixed,
        lambda,
        params,
        u,
    };
    let points = linspace(sweep.lo, sweep.hi, grid_size)
        .into_par_iter()
        .map(|x| sweep.point(x))
        .collect::<Result<Vec<_>>>()?;

    let maximizer = points
        .iter()
        .enumerate()
        .fold(0, |best, (i, pt)| if pt.profit > points[best].profit { i } else { best });

    let a = points[maximizer.saturating_sub(1)].sweep;
    let b = points[(maximizer + 1).min(points.len() - 1)].sweep;
    let (x, _) = golden_section_max(
        |x| sweep.point(x).map(|pt| pt.profit),
        a,
        b,
        GOLDEN_XTOL * (1.0 + b.abs()),
        GOLDEN_MAX_ITER,
    )?;
    let candidate = sweep.point(x)?;
    // ignore gains at the level of root-finding noise
    let grid_max = points[maximizer].profit;
    let refined = (candidate.profit > grid_max + REFINE_MARGIN * (1.0 + grid_max.abs())).then_some(candidate);

    Ok(PricingCurve {
        fixed,
        target_lambda: lambda,
        points,
        maximizer,
        refined,
    })
}

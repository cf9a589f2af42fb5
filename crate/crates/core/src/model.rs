//! Steady-state laws of the unobservable M/M/1 queue and the expected utility
//! gain `K` of a joining customer.
//!
//! Under a symmetric strategy that produces input rate `λ < μ`, a joining
//! customer's sojourn time is exponential with rate `ν = μ − λ`. With a policy
//! `(d, p, l)` the net benefit is `R − p − cX + l(X − d)⁺` and
//! `K = E[U(R − p − cX + l(X − d)⁺)] − U(0)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numeric;
use crate::utility::{UtilityKind, UtilityModel};

/// Relative margin below `μ` used wherever the open interval `[0, μ)` needs a
/// largest representable rate.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// Partial integrals below this are declared divergent for custom utilities.
pub const DIVERGENCE_SENTINEL: f64 = -1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketParams {
    /// Potential arrival rate Λ.
    #[serde(rename = "Lambda")]
    pub market_rate: f64,
    /// Service rate μ.
    #[serde(rename = "mu")]
    pub service_rate: f64,
    /// Service reward R.
    #[serde(rename = "R")]
    pub reward: f64,
    /// Waiting cost per unit time c.
    #[serde(rename = "c")]
    pub waiting_cost: f64,
}

impl MarketParams {
    pub fn new(market_rate: f64, service_rate: f64, reward: f64, waiting_cost: f64) -> Result<Self> {
        let params = Self {
            market_rate,
            service_rate,
            reward,
            waiting_cost,
        };
        params.validate()?;
        Ok(params)
    }

    /// `R = 15, c = 8, μ = 12` with a market large enough not to bind (Λ = 20).
    pub fn base_case() -> Self {
        Self {
            market_rate: 20.0,
            service_rate: 12.0,
            reward: 15.0,
            waiting_cost: 8.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.market_rate) {
            return Err(invalid("Lambda must be positive and finite"));
        }
        if !ok(self.service_rate) {
            return Err(invalid("mu must be positive and finite"));
        }
        if !ok(self.reward) {
            return Err(invalid("R must be positive and finite"));
        }
        if !ok(self.waiting_cost) {
            return Err(invalid("c must be positive and finite"));
        }
        Ok(())
    }

    pub fn with_waiting_cost(&self, waiting_cost: f64) -> Self {
        Self {
            waiting_cost,
            ..*self
        }
    }

    pub fn with_market_rate(&self, market_rate: f64) -> Self {
        Self {
            market_rate,
            ..*self
        }
    }

    /// Largest rate treated as stable, `μ(1 − 1e−9)`.
    pub fn rate_cap(&self) -> f64 {
        self.service_rate * (1.0 - STABILITY_MARGIN)
    }

    /// `min(Λ, μ(1 − 1e−9))`.
    pub fn max_feasible_rate(&self) -> f64 {
        self.market_rate.min(self.rate_cap())
    }

    /// True when the market, not stability, bounds the input rate.
    pub fn market_binds(&self) -> bool {
        self.market_rate < self.service_rate
    }
}

/// Quoted lead time. `NoCompensation` is the `d → ∞` limit in which the
/// compensation is never paid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LeadTime {
    Finite(f64),
    NoCompensation,
}

impl LeadTime {
    pub fn finite(&self) -> Option<f64> {
        match *self {
            LeadTime::Finite(d) => Some(d),
            LeadTime::NoCompensation => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(*self, LeadTime::Finite(d) if d == 0.0)
    }
}

impl fmt::Display for LeadTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LeadTime::Finite(d) => write!(f, "{d}"),
            LeadTime::NoCompensation => f.write_str("inf"),
        }
    }
}

/// Provider policy `(d, p, l)`: lead time, entrance fee and compensation rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Policy {
    pub lead_time: LeadTime,
    pub price: f64,
    compensation: f64,
}

impl Policy {
    pub fn new(lead_time: LeadTime, price: f64, compensation: f64, params: &MarketParams) -> Result<Self> {
        if let LeadTime::Finite(d) = lead_time {
            if !(d.is_finite() && d >= 0.0) {
                return Err(invalid(format!("lead time must be finite and >= 0, got {d}")));
            }
        }
        if !price.is_finite() || price > params.reward {
            return Err(invalid(format!(
                "entrance fee must be finite and <= R={}, got {price}",
                params.reward
            )));
        }
        if !(compensation >= 0.0 && compensation <= params.waiting_cost) {
            return Err(invalid(format!(
                "compensation must lie in [0, c={}], got {compensation}",
                params.waiting_cost
            )));
        }
        let compensation = match lead_time {
            LeadTime::NoCompensation => 0.0,
            LeadTime::Finite(_) => compensation,
        };
        Ok(Self {
            lead_time,
            price,
            compensation,
        })
    }

    pub fn finite(d: f64, price: f64, compensation: f64, params: &MarketParams) -> Result<Self> {
        Self::new(LeadTime::Finite(d), price, compensation, params)
    }

    pub fn no_compensation(price: f64, params: &MarketParams) -> Result<Self> {
        Self::new(LeadTime::NoCompensation, price, 0.0, params)
    }

    /// `(d, p, l) = (0.5, 10, 4.5)`.
    pub fn base_case() -> Self {
        Self {
            lead_time: LeadTime::Finite(0.5),
            price: 10.0,
            compensation: 4.5,
        }
    }

    /// Compensation rate actually paid (zero without a finite lead time).
    pub fn compensation(&self) -> f64 {
        self.compensation
    }

    /// `d = 0, p = R, l = c`: every stable rate is an equilibrium.
    pub fn is_boundary(&self, params: &MarketParams) -> bool {
        self.lead_time.is_zero()
            && self.price == params.reward
            && self.compensation == params.waiting_cost
    }

    /// Full compensation from a finite lead time.
    pub fn fully_compensates(&self, params: &MarketParams) -> bool {
        self.lead_time.finite().is_some() && self.compensation == params.waiting_cost
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(d={}, p={}, l={})",
            self.lead_time, self.price, self.compensation
        )
    }
}

/// A real value or −∞. `NegInfinity` orders below every finite value.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum ExtendedValue {
    NegInfinity,
    Finite(f64),
}

impl ExtendedValue {
    pub const ZERO: ExtendedValue = ExtendedValue::Finite(0.0);

    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExtendedValue::Finite(v) => Some(v),
            ExtendedValue::NegInfinity => None,
        }
    }

    pub fn is_neg_infinity(&self) -> bool {
        matches!(self, ExtendedValue::NegInfinity)
    }

    pub fn is_positive(&self) -> bool {
        matches!(*self, ExtendedValue::Finite(v) if v > 0.0)
    }

    pub fn is_nonnegative(&self) -> bool {
        matches!(*self, ExtendedValue::Finite(v) if v >= 0.0)
    }

    /// `f64` view with −∞ mapped to `f64::NEG_INFINITY`.
    pub fn to_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::NEG_INFINITY)
    }
}

impl fmt::Display for ExtendedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedValue::Finite(v) => write!(f, "{v}"),
            ExtendedValue::NegInfinity => f.write_str("-inf"),
        }
    }
}

fn check_rate(lambda: f64, params: &MarketParams) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(invalid(format!("input rate must be finite and >= 0, got {lambda}")));
    }
    if lambda >= params.service_rate {
        return Err(Error::Unstable {
            lambda,
            mu: params.service_rate,
        });
    }
    Ok(())
}

/// Rate `ν = μ − λ` of the exponential steady-state sojourn time.
pub fn sojourn_rate(lambda: f64, params: &MarketParams) -> Result<f64> {
    check_rate(lambda, params)?;
    Ok(params.service_rate - lambda)
}

/// `L(λ, d) = E[(X − d)⁺] = e^{−νd}/ν`; zero without compensation.
pub fn expected_lateness(lambda: f64, lead_time: LeadTime, params: &MarketParams) -> Result<f64> {
    let nu = sojourn_rate(lambda, params)?;
    Ok(match lead_time {
        LeadTime::Finite(d) => (-nu * d).exp() / nu,
        LeadTime::NoCompensation => 0.0,
    })
}

/// Argument of the utility for a customer who spends time `x` in the system.
pub fn net_benefit(x: f64, policy: &Policy, params: &MarketParams) -> f64 {
    let base = params.reward - policy.price - params.waiting_cost * x;
    match policy.lead_time {
        LeadTime::Finite(d) => base + policy.compensation() * (x - d).max(0.0),
        LeadTime::NoCompensation => base,
    }
}

/// Closed-form `K` for CARA utility.
///
/// With `a = rc − ν` and `s = c − l`,
/// `E[e^{r(cX − l(X−d)⁺)}] = ν(e^{ad} − 1)/a + ν e^{ad}/(ν − rs)` for `ν > rs`,
/// and `K = (1 − e^{−r(R−p)}·A)/r`. The expectation diverges when `l < c` and
/// `ν ≤ rs`.
pub fn k_cara(lambda: f64, policy: &Policy, params: &MarketParams, r: f64) -> Result<ExtendedValue> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid(format!("risk aversion must be positive, got {r}")));
    }
    let nu = sojourn_rate(lambda, params)?;
    let c = params.waiting_cost;
    let l = policy.compensation();
    let d = policy.lead_time.finite().unwrap_or(0.0);
    let s = c - l;
    if l < c && nu <= r * s {
        return Ok(ExtendedValue::NegInfinity);
    }

    let a = r * c - nu;
    let tail = 1.0 / (nu - r * s);
    let ln_a = if a.abs() < 1e-9 * r * c {
        // removable singularity: (e^{ad} − 1)/a → d
        (nu * (d * (1.0 + 0.5 * a * d) + (a * d).exp() * tail)).ln()
    } else if a > 0.0 {
        // factor out e^{ad} so large lead times do not overflow
        nu.ln() + a * d + ((-(-a * d).exp_m1()) / a + tail).ln()
    } else {
        (nu * ((a * d).exp_m1() / a + (a * d).exp() * tail)).ln()
    };
    let k = -(ln_a - r * (params.reward - policy.price)).exp_m1() / r;
    Ok(ExtendedValue::Finite(k.max(f64::MIN)))
}

/// Risk-neutral `K = R − p − c/ν + l·L(λ, d)`.
pub fn k_linear(lambda: f64, policy: &Policy, params: &MarketParams) -> Result<ExtendedValue> {
    let nu = sojourn_rate(lambda, params)?;
    let lateness = expected_lateness(lambda, policy.lead_time, params)?;
    Ok(ExtendedValue::Finite(
        params.reward - policy.price - params.waiting_cost / nu + policy.compensation() * lateness,
    ))
}

/// `K` by direct integration of `U(net benefit)` against the `Exp(ν)` density.
///
/// The range is split at the kink `x = d`, and the tail is cut at
/// `x_max ≥ d + 50/ν`, grown until an analytic bound on the remainder (CARA,
/// linear) drops below `tol`. Custom utilities grow the range until the next
/// chunk contributes less than `tol`, and report −∞ once the partial integral
/// falls below [`DIVERGENCE_SENTINEL`].
pub fn k_quadrature(
    lambda: f64,
    policy: &Policy,
    params: &MarketParams,
    u: &UtilityModel,
    tol: f64,
) -> Result<ExtendedValue> {
    if !(tol > 0.0) {
        return Err(invalid("quadrature tolerance must be positive"));
    }
    let nu = sojourn_rate(lambda, params)?;
    let c = params.waiting_cost;
    let l = policy.compensation();
    let s = c - l;
    let (kink, z0) = match policy.lead_time {
        LeadTime::Finite(d) => (d, params.reward - policy.price - l * d),
        LeadTime::NoCompensation => (0.0, params.reward - policy.price),
    };

    if let UtilityKind::Cara { r } = u.kind() {
        if l < c && nu <= r * s {
            return Ok(ExtendedValue::NegInfinity);
        }
    }

    let ln_nu = nu.ln();
    let integrand = |x: f64| -> f64 {
        let z = net_benefit(x, policy, params);
        match u.kind() {
            // (w − e^{−rz}·w)/r with w = ν e^{−νx}, combined in log space
            UtilityKind::Cara { r } => {
                let w = (ln_nu - nu * x).exp();
                (w - (ln_nu - nu * x - r * z).exp()) / r
            }
            _ => {
                let w = (ln_nu - nu * x).exp();
                if w == 0.0 {
                    0.0
                } else {
                    u.eval(z) * w
                }
            }
        }
    };

    let integrate = |a: f64, b: f64, abs_tol: f64| -> Result<f64> {
        let q = numeric::integrate(integrand, a, b, abs_tol, 1e-13, 20_000);
        if !q.converged {
            return Err(Error::Quadrature {
                lo: a,
                hi: b,
                error: q.error,
            });
        }
        Ok(q.value)
    };

    let mut total = integrate(0.0, kink, 0.25 * tol)?;
    let mut x_max = kink + 50.0 / nu;

    match u.kind() {
        UtilityKind::Cara { r } => {
            let decay = nu - r * s;
            let bound = |x: f64| (r * z0.abs()).exp() / r * nu * (-decay * x).exp() / decay;
            grow_until(&mut x_max, kink, |x| bound(x) < 0.25 * tol)?;
            total += integrate(kink, x_max, 0.5 * tol)?;
        }
        UtilityKind::Linear => {
            let bound = |x: f64| (-nu * x).exp() * (z0.abs() + s * x + s / nu);
            grow_until(&mut x_max, kink, |x| bound(x) < 0.25 * tol)?;
            total += integrate(kink, x_max, 0.5 * tol)?;
        }
        UtilityKind::Custom(_) => {
            // a non-finite partial integral is an overflowed divergent tail
            let diverged = |v: f64| !v.is_finite() || v < DIVERGENCE_SENTINEL;
            let q = numeric::integrate(integrand, kink, x_max, 0.25 * tol, 1e-13, 20_000);
            if diverged(total + q.value) {
                return Ok(ExtendedValue::NegInfinity);
            }
            if !q.converged {
                return Err(Error::Quadrature { lo: kink, hi: x_max, error: q.error });
            }
            total += q.value;
            let mut lo = x_max;
            let mut settled = false;
            for _ in 0..60 {
                let hi = kink + 2.0 * (lo - kink);
                let q = numeric::integrate(integrand, lo, hi, 0.125 * tol, 1e-13, 20_000);
                if diverged(total + q.value) {
                    return Ok(ExtendedValue::NegInfinity);
                }
                if !q.converged {
                    return Err(Error::Quadrature { lo, hi, error: q.error });
                }
                total += q.value;
                lo = hi;
                if q.value.abs() < 0.25 * tol {
                    settled = true;
                    break;
                }
            }
            if !settled {
                return Err(Error::Quadrature { lo: kink, hi: lo, error: f64::INFINITY });
            }
        }
    }
    Ok(ExtendedValue::Finite(total - u.eval(0.0)))
}

fn grow_until(x_max: &mut f64, kink: f64, done: impl Fn(f64) -> bool) -> Result<()> {
    for _ in 0..80 {
        if done(*x_max) {
            return Ok(());
        }
        *x_max = kink + 2.0 * (*x_max - kink);
    }
    Err(Error::Quadrature {
        lo: kink,
        hi: *x_max,
        error: f64::INFINITY,
    })
}

/// Tolerance used by [`k_value`] for utilities without a closed form.
pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-10;

/// `K(λ, d, p, l)` by the fastest exact route for the model: closed form for
/// CARA and linear utilities, quadrature otherwise.
pub fn k_value(lambda: f64, policy: &Policy, params: &MarketParams, u: &UtilityModel) -> Result<ExtendedValue> {
    match u.kind() {
        UtilityKind::Cara { r } => k_cara(lambda, policy, params, *r),
        UtilityKind::Linear => k_linear(lambda, policy, params),
        UtilityKind::Custom(_) => k_quadrature(lambda, policy, params, u, DEFAULT_QUADRATURE_TOL),
    }
}

/// `lim_{λ→μ⁻} K`: −∞ unless the policy compensates fully from a finite lead
/// time, in which case `U(R − p − cd) − U(0)`.
pub fn k_limit_at_mu(policy: &Policy, params: &MarketParams, u: &UtilityModel) -> ExtendedValue {
    match policy.lead_time {
        LeadTime::Finite(d) if policy.compensation() == params.waiting_cost => ExtendedValue::Finite(
            u.eval(params.reward - policy.price - params.waiting_cost * d) - u.eval(0.0),
        ),
        _ => ExtendedValue::NegInfinity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn base() -> MarketParams {
        MarketParams::base_case()
    }

    #[test]
    fn sojourn_rate_examples() {
        assert_eq!(sojourn_rate(0.0, &base()).unwrap(), 12.0);
        assert_eq!(sojourn_rate(8.0, &base()).unwrap(), 4.0);
        assert!(matches!(sojourn_rate(12.0, &base()), Err(Error::Unstable { .. })));
        assert!(sojourn_rate(-1.0, &base()).is_err());
    }

    #[test]
    fn lateness_examples() {
        let p = base();
        assert_eq!(expected_lateness(8.0, LeadTime::Finite(0.0), &p).unwrap(), 0.25);
        // oracle: ∫_d^∞ (t − d) ν e^{−νt} dt by quadrature
        let nu = 4.0;
        let d = 0.5;
        let q = numeric::integrate(|t| (t - d) * nu * (-nu * t).exp(), d, d + 40.0, 1e-14, 1e-14, 1000);
        assert_relative_eq!(q.value, 0.033_833_820_809_153_176, max_relative = 1e-12);
        assert_relative_eq!(
            expected_lateness(8.0, LeadTime::Finite(0.5), &p).unwrap(),
            q.value,
            max_relative = 1e-12
        );
        assert_eq!(expected_lateness(0.0, LeadTime::NoCompensation, &p).unwrap(), 0.0);
    }

    #[test]
    fn net_benefit_examples() {
        let p = base();
        let pol = Policy::base_case();
        assert_eq!(net_benefit(0.0, &pol, &p), 5.0);
        assert_eq!(net_benefit(0.5, &pol, &p), 1.0);
        assert_eq!(net_benefit(1.5, &pol, &p), -2.5);
    }

    #[test]
    fn policy_validation() {
        let p = base();
        assert!(Policy::finite(0.5, 16.0, 1.0, &p).is_err());
        assert!(Policy::finite(0.5, 10.0, 9.0, &p).is_err());
        assert!(Policy::finite(-0.1, 10.0, 1.0, &p).is_err());
        let nc = Policy::new(LeadTime::NoCompensation, 10.0, 3.0, &p).unwrap();
        assert_eq!(nc.compensation(), 0.0);
    }

    #[test]
    fn full_compensation_from_zero_is_constant() {
        let p = base();
        let pol = Policy::finite(0.0, 10.0, 8.0, &p).unwrap();
        let u = UtilityModel::cara(0.5).unwrap();
        for lambda in [0.0, 3.0, 9.0, 11.99] {
            let k = k_cara(lambda, &pol, &p, 0.5).unwrap().finite().unwrap();
            assert_relative_eq!(k, 1.835_830_002_752_202_4, max_relative = 1e-12);
            let kq = k_quadrature(lambda, &pol, &p, &u, 1e-11).unwrap().finite().unwrap();
            assert_relative_eq!(kq, k, max_relative = 1e-9);
        }
    }

    #[test]
    fn divergent_regime() {
        let p = base();
        let pol = Policy::base_case();
        let u = UtilityModel::cara(0.5).unwrap();
        assert!(k_cara(11.0, &pol, &p, 0.5).unwrap().is_neg_infinity());
        assert!(k_quadrature(11.0, &pol, &p, &u, 1e-10).unwrap().is_neg_infinity());
        // boundary ν = r(c − l) diverges too
        let pol = Policy::finite(0.5, 10.0, 4.0, &p).unwrap();
        assert!(k_cara(10.0, &pol, &p, 0.5).unwrap().is_neg_infinity());
    }

    #[test]
    fn cf_roots() {
        let p = base();
        for (price, expect) in [(10.0, 7.642_298_040_664_592), (0.0, 7.997_786_438_232_993)] {
            let pol = Policy::no_compensation(price, &p).unwrap();
            let k = k_cara(expect, &pol, &p, 0.5).unwrap().finite().unwrap();
            assert!(k.abs() < 1e-12, "price {price}: K={k}");
        }
    }

    #[test]
    fn limits_at_mu() {
        let p = base();
        let u = UtilityModel::cara(0.5).unwrap();
        assert!(k_limit_at_mu(&Policy::base_case(), &p, &u).is_neg_infinity());
        let full = Policy::finite(0.5, 10.0, 8.0, &p).unwrap();
        let lim = k_limit_at_mu(&full, &p, &u).finite().unwrap();
        assert_relative_eq!(lim, u.eval(1.0), max_relative = 1e-15);
        assert_relative_eq!(lim, 0.786_938_680_574_733, max_relative = 1e-12);
        let edge = Policy::finite(0.0, 15.0, 8.0, &p).unwrap();
        assert_eq!(k_limit_at_mu(&edge, &p, &u), ExtendedValue::ZERO);
        // the closed form approaches the limit
        let near = k_cara(12.0 - 1e-7, &full, &p, 0.5).unwrap().finite().unwrap();
        assert!((near - lim).abs() < 1e-5);
        assert!(k_limit_at_mu(&Policy::no_compensation(0.0, &p).unwrap(), &p, &u).is_neg_infinity());
    }

    #[test]
    fn reduction_identities() {
        let p = base();
        let r = 0.5;
        for lambda in [0.5, 4.0, 7.0, 9.5] {
            for price in [0.0, 5.0, 12.0] {
                let cf = k_cara(lambda, &Policy::no_compensation(price, &p).unwrap(), &p, r).unwrap();
                let big_d = k_cara(lambda, &Policy::finite(400.0, price, 3.0, &p).unwrap(), &p, r).unwrap();
                match (cf, big_d) {
                    (ExtendedValue::Finite(a), ExtendedValue::Finite(b)) => assert_relative_eq!(a, b, max_relative = 1e-9),
                    (a, b) => assert_eq!(a, b),
                }
                let l = 3.0;
                let zero_d = k_cara(lambda, &Policy::finite(0.0, price, l, &p).unwrap(), &p, r).unwrap();
                let reduced = k_cara(
                    lambda,
                    &Policy::no_compensation(price, &p).unwrap(),
                    &p.with_waiting_cost(p.waiting_cost - l),
                    r,
                )
                .unwrap();
                match (zero_d, reduced) {
                    (ExtendedValue::Finite(a), ExtendedValue::Finite(b)) => assert_relative_eq!(a, b, max_relative = 1e-12, epsilon = 1e-14),
                    (a, b) => assert_eq!(a, b),
                }
            }
        }
    }

    #[test]
    fn removable_singularity_is_continuous() {
        let p = base();
        let r = 0.5;
        // rc = 4 so ν = 4 ⇔ λ = 8
        let pol = Policy::finite(0.7, 9.0, 6.0, &p).unwrap();
        let at = k_cara(8.0, &pol, &p, r).unwrap().finite().unwrap();
        let left = k_cara(8.0 - 1e-6, &pol, &p, r).unwrap().finite().unwrap();
        let right = k_cara(8.0 + 1e-6, &pol, &p, r).unwrap().finite().unwrap();
        assert!((at - left).abs() < 1e-5 && (at - right).abs() < 1e-5);
        let u = UtilityModel::cara(r).unwrap();
        let q = k_quadrature(8.0, &pol, &p, &u, 1e-12).unwrap().finite().unwrap();
        assert_relative_eq!(at, q, max_relative = 1e-9);
    }

    #[test]
    fn linear_quadrature_matches_analytic() {
        let p = base();
        let u = UtilityModel::linear();
        for (lambda, d, price, l) in [(0.0, 0.0, 0.0, 0.0), (8.0, 0.5, 10.0, 4.5), (11.5, 2.0, 3.0, 7.9)] {
            let pol = Policy::finite(d, price, l, &p).unwrap();
            let a = k_linear(lambda, &pol, &p).unwrap().finite().unwrap();
            let q = k_quadrature(lambda, &pol, &p, &u, 1e-12).unwrap().finite().unwrap();
            assert!((a - q).abs() <= 1e-10 * (1.0 + a.abs()), "{a} vs {q}");
        }
    }

    #[test]
    fn custom_divergence_sentinel() {
        let p = base();
        // a steeper-than-CARA tail makes the expectation diverge at any load
        let u = UtilityModel::custom("cubic-log", |z: f64| if z >= 0.0 { z.ln_1p() } else { z * z * z / 3.0 + z })
            .unwrap();
        let pol = Policy::no_compensation(10.0, &p).unwrap();
        let k = k_quadrature(11.9, &pol, &p, &u, 1e-8).unwrap();
        assert!(k.finite().is_some());
        let u = UtilityModel::custom("exp-tail", |z: f64| z - (-2.0 * z).exp_m1() / 2.0).unwrap();
        assert!(k_quadrature(11.0, &pol, &p, &u, 1e-8).unwrap().is_neg_infinity());
    }

    #[test]
    fn extended_value_ordering() {
        assert!(ExtendedValue::NegInfinity < ExtendedValue::Finite(f64::MIN));
        assert!(ExtendedValue::Finite(-1.0) < ExtendedValue::ZERO);
        assert!(!ExtendedValue::NegInfinity.is_nonnegative());
    }
}

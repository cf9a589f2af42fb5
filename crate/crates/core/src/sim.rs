//! Discrete-event simulation of the single-server FCFS queue, used as an
//! independent check on the closed forms and on equilibrium fixed points.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::equilibrium::{solve_equilibrium, EquilibriumKind};
use crate::error::{Error, Result};
use crate::model::{expected_lateness, net_benefit, sojourn_rate, MarketParams, Policy};
use crate::utility::UtilityModel;

pub const DEFAULT_BATCHES: usize = 30;
pub const MIN_BATCHES: usize = 10;
pub const CONFIDENCE: f64 = 0.99;
pub const KS_SIGNIFICANCE: f64 = 0.01;
const WARMUP_FRACTION: f64 = 0.05;
const HEAVY_LOAD: f64 = 0.9;

const ARRIVAL_STREAM: u64 = 0;
const SERVICE_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub lambda_in: f64,
    pub mu: f64,
    pub n_customers: usize,
    pub warmup: usize,
    pub seed: u64,
    pub batches: usize,
}

impl SimConfig {
    /// Default warmup (5% of `n`, doubled above 90% load) and batch count.
    pub fn new(lambda_in: f64, mu: f64, n_customers: usize, seed: u64) -> Self {
        Self {
            lambda_in,
            mu,
            n_customers,
            warmup: default_warmup(lambda_in, mu, n_customers),
            seed,
            batches: DEFAULT_BATCHES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::Simulation(format!("service rate must be positive, got {}", self.mu)));
        }
        if !(self.lambda_in > 0.0) {
            return Err(Error::Simulation(format!("arrival rate must be positive, got {}", self.lambda_in)));
        }
        if self.lambda_in >= self.mu {
            return Err(Error::Unstable {
                lambda: self.lambda_in,
                mu: self.mu,
            });
        }
        if self.batches < MIN_BATCHES {
            return Err(Error::Simulation(format!("need at least {MIN_BATCHES} batches, got {}", self.batches)));
        }
        if self.n_customers <= self.warmup || self.n_customers - self.warmup < self.batches {
            return Err(Error::Simulation(format!(
                "{} customers leave too few after a warmup of {} for {} batches",
                self.n_customers, self.warmup, self.batches
            )));
        }
        Ok(())
    }
}

pub fn default_warmup(lambda_in: f64, mu: f64, n_customers: usize) -> usize {
    let mut w = (WARMUP_FRACTION * n_customers as f64).round() as usize;
    if lambda_in / mu > HEAVY_LOAD {
        w *= 2;
    }
    w
}

/// Post-warmup observations, one entry per customer in arrival order.
#[derive(Debug, Clone, PartialEq)]
pub struct SojournSample {
    pub sojourns: Vec<f64>,
    pub services: Vec<f64>,
    pub interarrivals: Vec<f64>,
}

impl SojournSample {
    pub fn len(&self) -> usize {
        self.sojourns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sojourns.is_empty()
    }
}

/// Poisson arrivals, exponential services, one server, first come first served.
pub fn simulate_sojourns(config: &SimConfig) -> Result<SojournSample> {
    config.validate()?;
    let mut arrivals_rng = ChaCha8Rng::seed_from_u64(config.seed);
    arrivals_rng.set_stream(ARRIVAL_STREAM);
    let mut services_rng = ChaCha8Rng::seed_from_u64(config.seed);
    services_rng.set_stream(SERVICE_STREAM);
    let service = Exp::new(config.mu).map_err(|e| Error::Simulation(e.to_string()))?;
    let interarrival = Exp::new(config.lambda_in).map_err(|e| Error::Simulation(e.to_string()))?;

    let keep = config.n_customers - config.warmup;
    let mut out = SojournSample {
        sojourns: Vec::with_capacity(keep),
        services: Vec::with_capacity(keep),
        interarrivals: Vec::with_capacity(keep),
    };
    let mut clock = 0.0;
    let mut last_departure = 0.0f64;
    for i in 0..config.n_customers {
        let gap = interarrival.sample(&mut arrivals_rng);
        let s = service.sample(&mut services_rng);
        clock += gap;
        let departure = clock.max(last_departure) + s;
        if i >= config.warmup {
            out.sojourns.push(departure - clock);
            out.services.push(s);
            out.interarrivals.push(gap);
        }
        last_departure = departure;
    }
    Ok(out)
}

/// Batch-means point estimate with a 99% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn contains(&self, x: f64) -> bool {
        (x - self.mean).abs() <= self.half_width
    }

    pub fn within_se(&self, x: f64, k: f64) -> bool {
        (x - self.mean).abs() <= k * self.std_error
    }
}

fn t_quantile(dof: usize) -> Result<f64> {
    let t = StudentsT::new(0.0, 1.0, dof as f64).map_err(|e| Error::Simulation(e.to_string()))?;
    Ok(t.inverse_cdf(0.5 + CONFIDENCE / 2.0))
}

fn batch_means(batch_values: &[f64]) -> Result<Estimate> {
    let b = batch_values.len();
    let mean = batch_values.iter().sum::<f64>() / b as f64;
    let var = batch_values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
    let std_error = (var / b as f64).sqrt();
    Ok(Estimate {
        mean,
        half_width: t_quantile(b - 1)? * std_error,
        std_error,
    })
}

/// Splits `n` observations into `batches` contiguous batches of equal size,
/// dropping the remainder at the end.
fn batch_ranges(n: usize, batches: usize) -> impl Iterator<Item = std::ops::Range<usize>> {
    let size = n / batches;
    (0..batches).map(move |i| i * size..(i + 1) * size)
}

fn estimate_mean(values: &[f64], batches: usize) -> Result<Estimate> {
    let means: Vec<f64> = batch_ranges(values.len(), batches)
        .map(|r| values[r.clone()].iter().sum::<f64>() / r.len() as f64)
        .collect();
    batch_means(&means)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimReport {
    pub sojourn: Estimate,
    pub lateness: Estimate,
    pub k: Estimate,
    pub utilization: Estimate,
    pub n_effective: usize,
}

/// Sample means of sojourn time, lateness past the lead time, net expected
/// utility and server utilization, with batch-means confidence intervals.
pub fn estimate_metrics(
    sample: &SojournSample,
    policy: &Policy,
    params: &MarketParams,
    u: &UtilityModel,
    batches: usize,
) -> Result<SimReport> {
    if batches < MIN_BATCHES {
        return Err(Error::Simulation(format!("need at least {MIN_BATCHES} batches, got {batches}")));
    }
    if sample.len() < batches {
        return Err(Error::Simulation(format!(
            "{} observations are too few for {batches} batches",
            sample.len()
        )));
    }
    u.ensure_usable()?;
    let lead = policy.lead_time.finite();
    let lateness: Vec<f64> = match lead {
        Some(d) => sample.sojourns.iter().map(|x| (x - d).max(0.0)).collect(),
        None => vec![0.0; sample.len()],
    };
    let u0 = u.eval(0.0);
    let k: Vec<f64> = sample.sojourns.iter().map(|&x| u.eval(net_benefit(x, policy, params)) - u0).collect();
    let utilization: Vec<f64> = batch_ranges(sample.len(), batches)
        .map(|r| {
            let busy: f64 = sample.services[r.clone()].iter().sum();
            let span: f64 = sample.interarrivals[r].iter().sum();
            (busy / span).min(1.0)
        })
        .collect();
    Ok(SimReport {
        sojourn: estimate_mean(&sample.sojourns, batches)?,
        lateness: estimate_mean(&lateness, batches)?,
        k: estimate_mean(&k, batches)?,
        utilization: batch_means(&utilization)?,
        n_effective: sample.len() / batches * batches,
    })
}

/// One-sample Kolmogorov–Smirnov test against an exponential law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub thinning: usize,
}

impl KsResult {
    pub fn passed(&self) -> bool {
        self.p_value >= KS_SIGNIFICANCE
    }
}

/// Asymptotic Kolmogorov tail `P(K > x)`.
fn kolmogorov_tail(x: f64) -> f64 {
    if x < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * x * x).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Tests every `thinning`-th value of `values` against `Exp(rate)`.
pub fn ks_exponential(values: &[f64], rate: f64, thinning: usize) -> Result<KsResult> {
    let step = thinning.max(1);
    let mut xs: Vec<f64> = values.iter().step_by(step).copied().collect();
    if xs.len() < 2 {
        return Err(Error::Simulation("too few observations for a KS test".into()));
    }
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let statistic = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = -(-rate * x).exp_m1();
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    let sqrt_n = n.sqrt();
    let p_value = kolmogorov_tail((sqrt_n + 0.12 + 0.11 / sqrt_n) * statistic);
    Ok(KsResult {
        statistic,
        p_value,
        n: xs.len(),
        thinning: step,
    })
}

/// Spacing between sojourn observations that are treated as independent:
/// ten relaxation times of the queue, counted in arrivals.
pub fn decorrelation_lag(lambda: f64, mu: f64) -> usize {
    let gap = (mu.sqrt() - lambda.sqrt()).powi(2);
    (10.0 * lambda / gap).ceil().max(1.0) as usize
}

/// Run-length settings for [`verify_equilibrium`]; the rate comes from the
/// equilibrium itself, shifted by `lambda_offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifySettings {
    pub n_customers: usize,
    pub warmup: Option<usize>,
    pub seed: u64,
    pub batches: usize,
    pub lambda_offset: f64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            n_customers: 200_000,
            warmup: None,
            seed: 42,
            batches: DEFAULT_BATCHES,
            lambda_offset: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyReport {
    pub equilibrium_rate: f64,
    pub simulated_rate: f64,
    pub config: SimConfig,
    pub report: SimReport,
    pub ks: KsResult,
    pub analytic_sojourn: f64,
    pub analytic_lateness: f64,
    pub k_contains_zero: bool,
    pub passed: bool,
}

/// Simulates at the equilibrium rate of `policy` and checks that joining is
/// a break-even decision there and that sojourn times are exponential.
pub fn verify_equilibrium(
    policy: &Policy,
    params: &MarketParams,
    u: &UtilityModel,
    settings: &VerifySettings,
) -> Result<VerifyReport> {
    let outcome = solve_equilibrium(policy, params, u)?;
    let lambda_e = match outcome.kind {
        EquilibriumKind::Unique(x) if x > 0.0 && x < params.market_rate => x,
        other => {
            return Err(Error::NotInterior(format!(
                "{other:?} ({}); the fixed point check needs 0 < λ < Λ",
                outcome.case.label()
            )))
        }
    };
    let lambda = lambda_e + settings.lambda_offset;
    let mu = params.service_rate;
    let config = SimConfig {
        lambda_in: lambda,
        mu,
        n_customers: settings.n_customers,
        warmup: settings.warmup.unwrap_or_else(|| default_warmup(lambda, mu, settings.n_customers)),
        seed: settings.seed,
        batches: settings.batches,
    };
    let sample = simulate_sojourns(&config)?;
    let report = estimate_metrics(&sample, policy, params, u, settings.batches)?;
    let nu = sojourn_rate(lambda, params)?;
    let ks = ks_exponential(&sample.sojourns, nu, decorrelation_lag(lambda, mu))?;
    let k_contains_zero = report.k.contains(0.0);
    Ok(VerifyReport {
        equilibrium_rate: lambda_e,
        simulated_rate: lambda,
        config,
        report,
        ks,
        analytic_sojourn: 1.0 / nu,
        analytic_lateness: expected_lateness(lambda, policy.lead_time, params)?,
        k_contains_zero,
        passed: k_contains_zero && ks.passed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::LeadTime;

    fn cara() -> UtilityModel {
        UtilityModel::cara(0.5).unwrap()
    }

    #[test]
    fn config_validation() {
        let c = SimConfig::new(8.0, 12.0, 1000, 1);
        assert_eq!(c.warmup, 50);
        assert!(c.validate().is_ok());
        assert_eq!(SimConfig::new(11.5, 12.0, 1000, 1).warmup, 100);
        assert!(SimConfig { batches: 5, ..c }.validate().is_err());
        assert!(SimConfig { lambda_in: 12.0, ..c }.validate().is_err());
        assert!(SimConfig { warmup: 1000, ..c }.validate().is_err());
    }

    #[test]
    fn mean_sojourn_matches_queueing_law() {
        let cfg = SimConfig {
            warmup: 10_000,
            ..SimConfig::new(8.0, 12.0, 200_000, 7)
        };
        let s = simulate_sojourns(&cfg).unwrap();
        let est = estimate_mean(&s.sojourns, 30).unwrap();
        assert!(est.within_se(0.25, 3.0), "{est:?}");
    }

    #[test]
    fn light_traffic() {
        let s = simulate_sojourns(&SimConfig::new(0.01, 12.0, 20_000, 3)).unwrap();
        let est = estimate_mean(&s.sojourns, 30).unwrap();
        assert!(est.within_se(1.0 / 11.99, 3.0), "{est:?}");
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = SimConfig::new(8.0, 12.0, 5_000, 11);
        assert_eq!(simulate_sojourns(&cfg).unwrap(), simulate_sojourns(&cfg).unwrap());
        let other = SimConfig { seed: 12, ..cfg };
        assert_ne!(simulate_sojourns(&cfg).unwrap(), simulate_sojourns(&other).unwrap());
    }

    #[test]
    fn services_do_not_depend_on_arrival_rate() {
        let a = simulate_sojourns(&SimConfig { warmup: 0, ..SimConfig::new(2.0, 12.0, 1000, 5) }).unwrap();
        let b = simulate_sojourns(&SimConfig { warmup: 0, ..SimConfig::new(9.0, 12.0, 1000, 5) }).unwrap();
        assert_eq!(a.services, b.services);
    }

    #[test]
    fn metrics_at_rate_eight() {
        let params = MarketParams::base_case();
        let policy = Policy::base_case();
        let s = simulate_sojourns(&SimConfig::new(8.0, 12.0, 200_000, 42)).unwrap();
        let rep = estimate_metrics(&s, &policy, &params, &cara(), 30).unwrap();
        let l = expected_lateness(8.0, LeadTime::Finite(0.5), &params).unwrap();
        assert!((l - 0.0338338).abs() < 1e-6);
        assert!(rep.lateness.within_se(l, 3.0), "{:?}", rep.lateness);
        assert!(rep.utilization.within_se(8.0 / 12.0, 3.0), "{:?}", rep.utilization);
        assert!(rep.sojourn.half_width >= 0.0 && rep.utilization.mean < 1.0);

        let lin = estimate_metrics(&s, &policy, &params, &UtilityModel::linear(), 30).unwrap();
        let expect = 15.0 - 10.0 - 8.0 / 4.0 + 4.5 * l;
        assert!(lin.k.within_se(expect, 3.0), "{:?} vs {expect}", lin.k);
    }

    #[test]
    fn too_few_batches() {
        let s = simulate_sojourns(&SimConfig::new(8.0, 12.0, 1000, 1)).unwrap();
        let err = estimate_metrics(&s, &Policy::base_case(), &MarketParams::base_case(), &cara(), 5);
        assert!(err.is_err());
    }

    #[test]
    fn ks_detects_wrong_rate() {
        let s = simulate_sojourns(&SimConfig::new(8.0, 12.0, 200_000, 9)).unwrap();
        let lag = decorrelation_lag(8.0, 12.0);
        assert!(ks_exponential(&s.sojourns, 4.0, lag).unwrap().passed());
        assert!(!ks_exponential(&s.sojourns, 5.0, lag).unwrap().passed());
    }

    #[test]
    fn kolmogorov_tail_values() {
        assert!((kolmogorov_tail(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_tail(1.6276) - 0.01).abs() < 1e-4);
        assert_eq!(kolmogorov_tail(0.1), 1.0);
    }

    #[test]
    fn base_equilibrium_passes() {
        let params = MarketParams::base_case();
        let rep = verify_equilibrium(&Policy::base_case(), &params, &cara(), &VerifySettings::default()).unwrap();
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn off_equilibrium_fails() {
        // at r = 0.5 the utility samples near the base equilibrium have no
        // finite variance, so the check uses milder risk aversion
        let params = MarketParams::base_case();
        let u = UtilityModel::cara(0.1).unwrap();
        let up = VerifySettings {
            lambda_offset: 0.5,
            ..Default::default()
        };
        let rep = verify_equilibrium(&Policy::base_case(), &params, &u, &up).unwrap();
        assert!(!rep.passed && rep.report.k.mean + rep.report.k.half_width < 0.0, "{rep:?}");
        let down = VerifySettings {
            lambda_offset: -0.5,
            ..Default::default()
        };
        let rep = verify_equilibrium(&Policy::base_case(), &params, &u, &down).unwrap();
        assert!(rep.report.k.mean - rep.report.k.half_width > 0.0, "{rep:?}");
        let at = verify_equilibrium(&Policy::base_case(), &params, &u, &VerifySettings::default()).unwrap();
        assert!(at.passed, "{at:?}");
    }

    #[test]
    fn rejects_boundary_equilibria() {
        let params = MarketParams::base_case();
        let full = Policy::no_compensation(15.0, &params).unwrap();
        assert!(matches!(
            verify_equilibrium(&full, &params, &cara(), &VerifySettings::default()),
            Err(Error::NotInterior(_))
        ));
    }
}

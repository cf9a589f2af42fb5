use proptest::prelude::*;

use qc_core::equilibrium::{required_compensation, required_price, solve_equilibrium, EquilibriumKind, RATE_TOL};
use qc_core::loadcontrol::{achievable_two_fixed, h_envelope, lambda_cf, profit_g1, TwoFixed};
use qc_core::model::{k_cara, k_quadrature, k_value, ExtendedValue, LeadTime};
use qc_core::sim::{simulate_sojourns, SimConfig};
use qc_core::{MarketParams, Policy, UtilityModel};

fn base() -> MarketParams {
    MarketParams::base_case()
}

fn finite(k: ExtendedValue) -> Option<f64> {
    k.finite()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn cara_is_increasing_and_anchored(r in 0.01f64..3.0, a in -20.0f64..20.0, gap in 1e-3f64..5.0) {
        let u = UtilityModel::cara(r).unwrap();
        prop_assert_eq!(u.eval(0.0), 0.0);
        if r * (a + gap) < 30.0 {
            prop_assert!(u.eval(a + gap) > u.eval(a));
        }
        prop_assert!(u.increment(a, a + gap) > 0.0);
    }

    #[test]
    fn k_decreases_in_rate_price_and_lead_time(
        r in 0.05f64..2.0,
        d in 0.0f64..3.0,
        p in 0.0f64..14.0,
        l in 0.1f64..8.0,
        lambda in 0.0f64..11.0,
        step in 0.01f64..0.9,
    ) {
        let params = base();
        let u = UtilityModel::cara(r).unwrap();
        let k = |lam: f64, d: f64, p: f64, l: f64| k_value(lam, &Policy::finite(d, p, l, &params).unwrap(), &params, &u).unwrap();
        let k0 = k(lambda, d, p, l);
        if let Some(k0) = finite(k0) {
            let in_rate = k(lambda + step, d, p, l);
            prop_assert!(in_rate.finite().is_none_or(|v| v < k0));
            prop_assert!(finite(k(lambda, d, p + step, l)).unwrap() < k0);
            prop_assert!(finite(k(lambda, d + step, p, l)).unwrap() < k0);
            if l + step <= 8.0 {
                prop_assert!(finite(k(lambda, d, p, l + step)).unwrap() >= k0);
            }
        }
    }

    #[test]
    fn closed_form_matches_quadrature(
        r in 0.05f64..2.0,
        d in 0.0f64..3.0,
        p in -10.0f64..15.0,
        l in 0.0f64..8.0,
        lambda in 0.0f64..11.9,
    ) {
        let params = base();
        let policy = Policy::finite(d, p, l, &params).unwrap();
        let u = UtilityModel::cara(r).unwrap();
        let a = k_cara(lambda, &policy, &params, r).unwrap();
        let q = k_quadrature(lambda, &policy, &params, &u, 1e-12).unwrap();
        match (a, q) {
            (ExtendedValue::Finite(a), ExtendedValue::Finite(q)) => {
                // close to the divergence edge the tail converges slowly
                let nu = params.service_rate - lambda;
                let margin = nu - r * (8.0 - l);
                let tol = if margin > 0.1 { 1e-8 } else { 1e-5 };
                prop_assert!((a - q).abs() <= tol * (1.0 + a.abs()), "{} vs {}", a, q);
            }
            (ExtendedValue::NegInfinity, ExtendedValue::NegInfinity) => {}
            other => prop_assert!(false, "mismatch {:?}", other),
        }
    }

    #[test]
    fn equilibrium_root_is_a_zero(d in 0.0f64..3.0, p in 0.0f64..14.9, l in 0.0f64..8.0, r in 0.05f64..2.0) {
        let params = base();
        let u = UtilityModel::cara(r).unwrap();
        let policy = Policy::finite(d, p, l, &params).unwrap();
        let eq = solve_equilibrium(&policy, &params, &u).unwrap();
        if let EquilibriumKind::Unique(x) = eq.kind {
            let k = |lam: f64| k_value(lam, &policy, &params, &u).unwrap();
            let tol = 10.0 * RATE_TOL * params.service_rate;
            if x > tol {
                prop_assert!(k(x - tol).is_nonnegative());
            } else {
                prop_assert!(!k(tol).is_positive());
            }
            if x + tol < params.service_rate * (1.0 - 1e-9) {
                prop_assert!(!k(x + tol).is_positive() || x >= params.market_rate);
            }
        }
    }

    #[test]
    fn price_inverse_round_trips(lambda in 0.5f64..11.5, d in 0.0f64..2.0, l in 0.0f64..7.9) {
        let params = base();
        let u = UtilityModel::cara(0.5).unwrap();
        if let Ok(p) = required_price(lambda, LeadTime::Finite(d), l, &params, &u) {
            let policy = Policy::finite(d, p, l, &params).unwrap();
            let x = solve_equilibrium(&policy, &params, &u).unwrap().unique_rate().unwrap();
            prop_assert!((x - lambda).abs() < 1e-6, "{} vs {}", x, lambda);
        }
    }

    #[test]
    fn compensation_inverse_round_trips(lambda in 7.7f64..11.5, d in 0.0f64..2.0, p in 0.0f64..10.0) {
        let params = base();
        let u = UtilityModel::cara(0.5).unwrap();
        if let Ok(l) = required_compensation(lambda, LeadTime::Finite(d), p, &params, &u) {
            let policy = Policy::finite(d, p, l, &params).unwrap();
            let eq = solve_equilibrium(&policy, &params, &u).unwrap();
            if let Some(x) = eq.unique_rate() {
                prop_assert!((x - lambda).abs() < 1e-6, "{} vs {}", x, lambda);
            }
        }
    }

    #[test]
    fn profit_stays_below_envelope(lambda in 0.1f64..11.9, d in 0.0f64..2.0, l in 0.0f64..7.9) {
        let params = base();
        let u = UtilityModel::cara(0.5).unwrap();
        if let Ok(p) = required_price(lambda, LeadTime::Finite(d), l, &params, &u) {
            let policy = Policy::finite(d, p, l, &params).unwrap();
            let g = profit_g1(lambda, &policy, &params).unwrap();
            prop_assert!(g < h_envelope(lambda, &params).unwrap());
        }
    }

    #[test]
    fn free_leadtime_interval_brackets_cf_rates(p in 0.0f64..14.0, l in 0.0f64..7.99) {
        let params = base();
        let u = UtilityModel::cara(0.5).unwrap();
        let iv = achievable_two_fixed(TwoFixed::PriceCompensation { price: p, compensation: l }, &params, &u).unwrap();
        let lo = lambda_cf(p, 8.0, &params, &u).unwrap();
        let hi = lambda_cf(p, 8.0 - l, &params, &u).unwrap();
        prop_assert!((iv.lo - lo).abs() < 1e-9 * (1.0 + lo));
        prop_assert!((iv.hi - hi).abs() < 1e-9 * (1.0 + hi));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn simulation_is_reproducible(seed in any::<u64>(), lambda in 1.0f64..11.0) {
        let cfg = SimConfig::new(lambda, 12.0, 2_000, seed);
        let a = simulate_sojourns(&cfg).unwrap();
        let b = simulate_sojourns(&cfg).unwrap();
        prop_assert_eq!(a.sojourns, b.sojourns);
        prop_assert!(a.services.iter().all(|&s| s > 0.0));
    }
}

#[test]
fn equilibrium_rate_is_monotone_on_a_grid() {
    let params = base();
    let u = UtilityModel::cara(0.5).unwrap();
    let rate = |d: f64, p: f64, l: f64| {
        let policy = Policy::finite(d, p, l, &params).unwrap();
        match solve_equilibrium(&policy, &params, &u).unwrap().kind {
            EquilibriumKind::Unique(x) => x,
            EquilibriumKind::None => params.service_rate,
            EquilibriumKind::Continuum(_) => panic!("unexpected continuum"),
        }
    };
    let tol = RATE_TOL * params.service_rate;
    for i in 0..20 {
        let p = 14.5 * i as f64 / 19.0;
        for j in 0..19 {
            let (l0, l1) = (8.0 * j as f64 / 19.0, 8.0 * (j + 1) as f64 / 19.0);
            assert!(rate(0.5, p, l1) >= rate(0.5, p, l0) - tol, "l at p={p}");
            let (d0, d1) = (0.05 + 0.15 * j as f64, 0.05 + 0.15 * (j + 1) as f64);
            assert!(rate(d1, p, 4.5) <= rate(d0, p, 4.5) + tol, "d at p={p}");
        }
    }
}

//! Pricing curves: all (d, l), (d, p) or (l, p) pairs that induce a target
//! rate, and where on each curve the profit peaks.
//!
//! cargo run --example pricing_curves

use qc_core::loadcontrol::{trace_pricing_curve, OneFixed};
use qc_core::model::LeadTime;
use qc_core::{MarketParams, UtilityModel};

fn main() -> qc_core::Result<()> {
    let params = MarketParams::base_case();
    let u = UtilityModel::cara(0.5)?;
    let cases = [
        (OneFixed::Price(10.0), vec![7.8, 8.5, 9.5, 10.5, 11.5]),
        (OneFixed::Compensation(4.5), vec![2.0, 5.0, 7.0, 9.0, 10.0]),
        (OneFixed::LeadTime(LeadTime::Finite(0.5)), vec![2.0, 5.0, 7.0, 9.0, 11.0]),
    ];
    for (fixed, lambdas) in cases {
        let (f1, f2) = fixed.free_names();
        println!("{fixed:?}");
        for lambda in lambdas {
            let curve = trace_pricing_curve(fixed, lambda, 200, &params, &u)?;
            let first = curve.points.first().unwrap().coordinates(fixed);
            let last = curve.points.last().unwrap().coordinates(fixed);
            let best = curve.best();
            let (a, b) = best.coordinates(fixed);
            println!(
                "  λ={lambda:<5} {f1}:{:.3}..{:.3}  {f2}:{:.3}..{:.3}  best G={:.3} at {f1}={a:.4}, {f2}={b:.4}",
                first.0, last.0, first.1, last.1, best.profit
            );
        }
    }
    Ok(())
}

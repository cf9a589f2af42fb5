//! Which input rates the provider can induce when some policy parameters
//! are fixed.
//!
//! cargo run --example achievable_ranges

use qc_core::loadcontrol::{achievable_one_fixed, achievable_two_fixed, lambda_cf, OneFixed, TwoFixed};
use qc_core::model::LeadTime;
use qc_core::{MarketParams, UtilityModel};

fn main() -> qc_core::Result<()> {
    let params = MarketParams::base_case();
    let u = UtilityModel::cara(0.5)?;
    let c = params.waiting_cost;

    println!("λ_CF(10; c)  = {:.4}", lambda_cf(10.0, c, &params, &u)?);
    println!("λ_CF(0; c)   = {:.4}  (largest rate without compensation)", lambda_cf(0.0, c, &params, &u)?);

    println!("\none parameter fixed:");
    for fixed in [
        OneFixed::Price(10.0),
        OneFixed::Compensation(4.5),
        OneFixed::LeadTime(LeadTime::Finite(0.5)),
        OneFixed::Price(15.0),
    ] {
        println!("  {fixed:?}: {}", achievable_one_fixed(fixed, &params, &u)?);
    }

    println!("\ntwo parameters fixed:");
    for fixed in [
        TwoFixed::PriceCompensation { price: 10.0, compensation: 4.5 },
        TwoFixed::PriceCompensation { price: 10.0, compensation: 8.0 },
        TwoFixed::LeadTimeCompensation { lead_time: LeadTime::Finite(0.5), compensation: 4.5 },
        TwoFixed::LeadTimePrice { lead_time: LeadTime::Finite(0.5), price: 10.0 },
        TwoFixed::LeadTimeCompensation { lead_time: LeadTime::Finite(0.0), compensation: c },
    ] {
        println!("  {fixed:?}: {}", achievable_two_fixed(fixed, &params, &u)?);
    }

    // with a small market the fully compensated zero lead time pins λ = Λ
    let small = params.with_market_rate(6.0);
    let iv = achievable_two_fixed(
        TwoFixed::LeadTimeCompensation { lead_time: LeadTime::Finite(0.0), compensation: c },
        &small,
        &u,
    )?;
    println!("  same with Λ = 6: {iv}");
    Ok(())
}

//! How the free policy parameter needed for a target rate moves with the
//! risk aversion coefficient.
//!
//! cargo run --example risk_aversion_sweep

use qc_core::loadcontrol::{risk_sweep, TwoFixed};
use qc_core::model::LeadTime;
use qc_core::MarketParams;

fn main() -> qc_core::Result<()> {
    let params = MarketParams::base_case();
    let r_grid: Vec<f64> = (1..=20).map(|i| i as f64 / 10.0).collect();
    let d = LeadTime::Finite(0.5);
    let cases = [
        (TwoFixed::LeadTimeCompensation { lead_time: d, compensation: 4.5 }, vec![3.0, 6.0, 9.0]),
        (TwoFixed::LeadTimePrice { lead_time: d, price: 5.0 }, vec![10.0, 11.0, 11.5]),
        (TwoFixed::PriceCompensation { price: 10.0, compensation: 6.0 }, vec![9.0, 10.0]),
    ];
    for (fixed, lambdas) in cases {
        let free = fixed.free_name();
        println!("{fixed:?}");
        let rows = risk_sweep(fixed, &lambdas, &r_grid, &params)?;
        for &lambda in &lambdas {
            let col: Vec<String> = rows
                .iter()
                .filter(|r| r.lambda == lambda)
                .map(|r| r.value.map_or("  -  ".into(), |v| format!("{v:5.2}")))
                .collect();
            println!("  λ={lambda:<4} {free}(r=0.1..2.0): {}", col.join(" "));
        }
    }
    Ok(())
}

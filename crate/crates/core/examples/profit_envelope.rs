//! Best profit per input rate without compensation, with one parameter
//! fixed, and under full flexibility (the envelope H).
//!
//! cargo run --release --example profit_envelope

use qc_core::loadcontrol::{
    h_envelope, lambda_star, linspace, optimal_profit_constrained, OneFixed, ProfitCell, ProfitConstraint,
};
use qc_core::model::LeadTime;
use qc_core::{MarketParams, UtilityModel};

fn peak(cells: &[ProfitCell]) -> (f64, f64) {
    cells
        .iter()
        .filter_map(|c| c.profit.map(|g| (c.lambda, g)))
        .fold((f64::NAN, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
}

fn main() -> qc_core::Result<()> {
    let params = MarketParams::base_case();
    let u = UtilityModel::cara(0.5)?;
    let grid = linspace(0.0, params.service_rate * (1.0 - 1e-6), 120);

    let star = lambda_star(&params);
    println!("λ* = {star:.4}, H(λ*) = {:.4}", h_envelope(star, &params)?);

    let curves = [
        ("no compensation", ProfitConstraint::CompensationFree),
        ("p = 10 fixed", ProfitConstraint::One(OneFixed::Price(10.0))),
        ("l = 4.5 fixed", ProfitConstraint::One(OneFixed::Compensation(4.5))),
        ("d = 0.5 fixed", ProfitConstraint::One(OneFixed::LeadTime(LeadTime::Finite(0.5)))),
        ("envelope H", ProfitConstraint::Envelope),
    ];
    let mut h_peak = f64::NAN;
    let mut cf_peak = f64::NAN;
    for (name, constraint) in curves {
        let cells = optimal_profit_constrained(constraint, &grid, &params, &u)?;
        let (x, g) = peak(&cells);
        println!("{name:<16} peak {g:9.4} at λ = {x:.4}");
        match constraint {
            ProfitConstraint::CompensationFree => cf_peak = g,
            ProfitConstraint::Envelope => h_peak = g,
            _ => {}
        }
    }
    println!("no-compensation peak / envelope peak = {:.4}", cf_peak / h_peak);
    Ok(())
}

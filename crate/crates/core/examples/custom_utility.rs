//! A user-supplied utility: validated on a grid, then used through the
//! quadrature path.
//!
//! cargo run --example custom_utility

use qc_core::equilibrium::solve_equilibrium;
use qc_core::model::{k_cara, k_quadrature};
use qc_core::utility::{validate_default, UtilityModel};
use qc_core::{MarketParams, Policy};

fn main() -> qc_core::Result<()> {
    let params = MarketParams::base_case();
    let policy = Policy::base_case();

    // the same exponential utility, but opaque to the closed form
    let opaque = UtilityModel::custom("cara-0.5", |z: f64| -(-0.5 * z).exp_m1() / 0.5)?;
    let k_q = k_quadrature(8.0, &policy, &params, &opaque, 1e-10)?;
    let k_c = k_cara(8.0, &policy, &params, 0.5)?;
    println!("K(8) by quadrature {k_q}, closed form {k_c}");

    let log_like = UtilityModel::custom("log-like", |z: f64| if z >= 0.0 { z.ln_1p() } else { z - z * z / 2.0 })?;
    println!("{:?}", validate_default(&log_like)?.verdict);
    let eq = solve_equilibrium(&policy, &params, &log_like)?;
    println!("log-like utility: {:?} [{}]", eq.kind, eq.case);

    match UtilityModel::custom("convex", |z: f64| z.exp()) {
        Ok(_) => println!("convex utility accepted?"),
        Err(e) => println!("convex utility rejected: {e}"),
    }
    Ok(())
}

//! No policy attains the envelope, but fully compensating policies with a
//! fee close to R get arbitrarily close.
//!
//! cargo run --example epsilon_optimal

use qc_core::loadcontrol::eps_optimal_policy;
use qc_core::{Error, MarketParams, UtilityModel};

fn main() -> qc_core::Result<()> {
    let params = MarketParams::base_case();
    let u = UtilityModel::cara(0.5)?;
    for eps in [10.0, 1.0, 0.1, 1e-3, 1e-12] {
        match eps_optimal_policy(eps, &params, &u) {
            Ok(e) => println!(
                "ε={eps:<6e} {}  G={:.6}  H={:.6}  gap={:.2e}",
                e.policy,
                e.profit,
                e.envelope,
                e.gap()
            ),
            Err(Error::EpsilonUnderflow { best, best_gap, .. }) => {
                println!("ε={eps:<6e} not reachable; best {} with gap {best_gap:.2e}", best.policy)
            }
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

//! Checks the base-case equilibrium against a discrete-event simulation.
//!
//! cargo run --release --example simulation_oracle

use qc_core::sim::{verify_equilibrium, VerifySettings};
use qc_core::{MarketParams, Policy, UtilityModel};

fn main() -> qc_core::Result<()> {
    let params = MarketParams::base_case();
    let u = UtilityModel::cara(0.5)?;
    let policy = Policy::base_case();
    for offset in [0.0, 0.5, -0.5] {
        let settings = VerifySettings {
            lambda_offset: offset,
            ..Default::default()
        };
        let rep = verify_equilibrium(&policy, &params, &u, &settings)?;
        let r = &rep.report;
        println!("λ = {:.4} (equilibrium {:+.1})", rep.simulated_rate, offset);
        println!("  sojourn   {:.5} ± {:.5}  analytic {:.5}", r.sojourn.mean, r.sojourn.half_width, rep.analytic_sojourn);
        println!("  lateness  {:.5} ± {:.5}  analytic {:.5}", r.lateness.mean, r.lateness.half_width, rep.analytic_lateness);
        println!("  K         {:.5} ± {:.5}", r.k.mean, r.k.half_width);
        println!("  KS p      {:.3}", rep.ks.p_value);
        println!("  verdict   {}", if rep.passed { "pass" } else { "fail" });
    }
    Ok(())
}

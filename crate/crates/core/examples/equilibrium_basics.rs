//! Equilibrium joining rates for a few policies at the base market.
//!
//! cargo run --example equilibrium_basics

use qc_core::equilibrium::{solve_equilibrium, EquilibriumKind};
use qc_core::model::{k_value, LeadTime};
use qc_core::{MarketParams, Policy, UtilityModel};

fn main() -> qc_core::Result<()> {
    let params = MarketParams::base_case();
    let u = UtilityModel::cara(0.5)?;

    let policies = [
        ("base", Policy::base_case()),
        ("no compensation", Policy::no_compensation(10.0, &params)?),
        ("full price", Policy::finite(0.5, 15.0, 4.5, &params)?),
        ("indifferent", Policy::finite(0.0, 15.0, 8.0, &params)?),
        ("cheap, fully compensated", Policy::finite(3.0, 0.0, 8.0, &params)?),
    ];
    for (name, policy) in policies {
        let out = solve_equilibrium(&policy, &params, &u)?;
        let what = match out.kind {
            EquilibriumKind::Unique(x) => format!("unique λ = {x:.6}"),
            EquilibriumKind::Continuum(iv) => format!("every rate in {iv}"),
            EquilibriumKind::None => "no equilibrium".to_string(),
        };
        println!("{name:<26} {policy}  ->  {what}  [{}]", out.case);
    }

    // K along λ for the base policy: positive below the root, negative above
    let policy = Policy::base_case();
    println!("\n  λ      K(λ)");
    for lambda in [0.0, 3.0, 6.0, 9.0, 9.7, 10.0, 11.0] {
        println!("{lambda:5.1}  {}", k_value(lambda, &policy, &params, &u)?);
    }
    let d = LeadTime::Finite(0.5);
    println!("\nexpected lateness past d=0.5 at λ=8: {}", qc_core::model::expected_lateness(8.0, d, &params)?);
    Ok(())
}

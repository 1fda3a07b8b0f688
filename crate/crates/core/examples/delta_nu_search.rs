//! Multistart estimate of the distance from the cyclic quadratic form to
//! sums of `nu` squares with bounded coefficients, for increasing `nu`.
//!
//! cargo run --release --example delta_nu_search

use matsos::gallery::{build_q_lambda, delta_nu_profile, DeltaNuQuery, QLambdaParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let q = build_q_lambda(QLambdaParams { lambda: 0.02 });
    let mut query = DeltaNuQuery::new(4, 2.0);
    query.seed = 7;
    let profile = delta_nu_profile(&q, &query)?;
    for (nu, d) in profile.estimates.iter().enumerate().skip(1) {
        println!("nu = {nu}: delta_nu <= {d:.6}");
    }
    Ok(())
}

//! The cyclic 3x3 quadratic form: positive definite off the origin, and for
//! small lambda not a sum of squares of linear vector fields.
//!
//! cargo run --release --example q_lambda_certificates

use matsos::gallery::{
    det_expansion, q_lambda_at, q_lambda_non_sos_certificate, q_lambda_positivity_certificate, QLambdaParams,
    NON_SOS_THRESHOLD,
};
use matsos::grid::GridSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = GridSpec::sphere(3, 10_000).with_seed(1);
    for lambda in [0.005, 0.02, NON_SOS_THRESHOLD, 0.1] {
        let p = QLambdaParams { lambda };
        let c = q_lambda_non_sos_certificate(p)?;
        let pos = q_lambda_positivity_certificate(p, &grid)?;
        println!(
            "lambda = {lambda:.5}: 18 sqrt(2 lambda) = {:.6}, {:?}; positivity {:?}",
            c.bound, c.verdict, pos.verdict
        );
    }
    let w = [1.0, 1.0, 1.0];
    let l = 0.02;
    println!("det Q(1,1,1) = {:.12}, expansion {:.12}", q_lambda_at(l, &w).det(), det_expansion(l, &w));
    Ok(())
}

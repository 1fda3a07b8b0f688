//! Diagonal ellipticity and subordination on three inputs: the cyclic
//! quadratic form, a smooth diagonal, and the Grushin matrix, which is not
//! subordinate near the origin.
//!
//! cargo run --release --example subordinate_checks

use matsos::decompose::SymMatFun;
use matsos::gallery::{build_q_lambda, grushin_2x2, QLambdaParams};
use matsos::grid::GridSpec;
use matsos::jet::ScalarExpr;
use matsos::report::Condition;
use matsos::verify::{diag_elliptic_check, subordinate_check};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let x = ScalarExpr::var(0);
    let smooth = SymMatFun::diagonal(&[x.powi(2) + 1.0, x.cos() + 2.0], 1);
    let cases = [
        ("q-lambda", build_q_lambda(QLambdaParams { lambda: 0.02 }), GridSpec::shells(3, 0.05, 1.0, 10, 24)),
        ("smooth diagonal", smooth, GridSpec::shells(1, 0.05, 1.0, 20, 2)),
        ("grushin", grushin_2x2(0.5), GridSpec::shells(1, 0.05, 0.3, 20, 2)),
    ];
    for (name, a, grid) in cases {
        let e = diag_elliptic_check(&a, &grid)?;
        let s = subordinate_check(&a, &grid)?;
        let quad = s.find(Condition::SubordinateQuadraticForm).map(|r| r.verdict);
        let entry = s.find(Condition::SubordinateEntrywise).map(|r| r.verdict);
        println!(
            "{name:<16} elliptic {:?}; subordinate {:?} (worst {:?}); quadratic form {quad:?}, entrywise {entry:?}",
            e.verdict, s.verdict, s.worst_ratio
        );
    }
    Ok(())
}

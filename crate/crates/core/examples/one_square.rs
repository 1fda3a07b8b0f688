//! Peeling one square off a matrix function and writing a pivot as a sum of
//! squares with both scalar backends.
//!
//! cargo run --release --example one_square

use matsos::decompose::{iterated_sd, one_sd, scalar_sos, ScalarSosBackend, SymMatFun};
use matsos::grid::GridSpec;
use matsos::jet::ScalarExpr;
use matsos::report::Condition;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (x, y) = (ScalarExpr::var(0), ScalarExpr::var(1));
    // [[2 + x^2, x y, 0], [x y, 1 + y^2, x], [0, x, 3]]
    let a = SymMatFun::new(3, 2, |i, j| match (i, j) {
        (0, 0) => x.powi(2) + 2.0,
        (1, 1) => y.powi(2) + 1.0,
        (2, 2) => ScalarExpr::constant(3.0),
        (0, 1) => &x * &y,
        (1, 2) => x.clone(),
        _ => ScalarExpr::zero(),
    });
    let grid = GridSpec::cube(2, -1.0, 1.0, 9);

    let o = one_sd(&a, &grid)?;
    println!("Z = ({})", o.z.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", "));
    let q = o.q.expect("3x3 leaves a 2x2 residual");
    println!("Q(0.5, -0.5) = {:?}", q.eval(&[0.5, -0.5])?);

    let d = iterated_sd(&a, 4, &grid)?;
    let r = d.certificate(Condition::Reconstruction).expect("always attached");
    println!("full peel: reconstruction {:?}, max rel err {:?}", r.verdict, r.worst_ratio);

    let f = x.powi(4) + y.powi(2) * x.powi(2);
    for backend in [ScalarSosBackend::principal_sqrt(0.1), ScalarSosBackend::split_by_sign_cell(0.1, 3)] {
        let s = scalar_sos(&f, &backend, &grid)?;
        println!(
            "{}: {} factor(s), structural root {}, contract {:?}",
            backend.id.id(),
            s.factors.len(),
            s.structural,
            s.report.verdict
        );
    }
    Ok(())
}

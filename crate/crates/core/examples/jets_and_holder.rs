//! Exact Taylor jets of expression trees, flat functions, Hölder seminorm
//! estimates and the omega-monotonicity test.
//!
//! cargo run --release --example jets_and_holder

use matsos::grid::GridSpec;
use matsos::jet::{eval_jet, eval_log, holder_seminorm, omega_monotone_check, MonotoneSpec, ScalarExpr};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (x, y) = (ScalarExpr::var(0), ScalarExpr::var(1));
    let f = (&x * &y).sin() + x.powi(3);
    let j = eval_jet(&f, &[0.3, 0.7], 4)?;
    println!("f = {f}");
    println!("  value {:.12}, gradient {:?}", j.value(), j.gradient());
    println!("  d^2f/dx dy = {:?}", j.partial(&[1, 1]));

    let flat = x.flat();
    let j0 = eval_jet(&flat, &[0.0], 4)?;
    let top = (0..=4).map(|d| j0.max_abs(d)).fold(0.0, f64::max);
    println!("exp(-1/x^2) at 0: largest partial up to order 4 = {top}");
    let tiny = eval_log(&flat, &[0.01])?;
    println!("exp(-1/x^2) at 0.01: ln value = {}", tiny.ln_abs);

    let g = x.flat();
    let grid = GridSpec::cube(1, -1.0, 1.0, 41);
    for delta in [0.5, 1.0] {
        let s = holder_seminorm(&g, &[0.1], &[4], delta, &grid)?;
        println!("exp(-1/x^2): [D^4]_({delta}) near 0.1 >= {s:.4}");
    }

    let h = x.powi(2) + y.powi(2);
    let r = omega_monotone_check(&h, &MonotoneSpec::new(1.0, 16.0)?, &GridSpec::shells(2, 0.05, 1.0, 8, 8))?;
    println!("x^2 + y^2 omega-monotone: {:?}, sup ratio {:?}", r.verdict, r.worst_ratio);
    Ok(())
}

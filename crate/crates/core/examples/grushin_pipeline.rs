//! End-to-end decomposition of the 2x2 Grushin-type matrix
//! `[[1, g f], [g f, f^2]]`, `f = exp(-1/x^2)`: one square is peeled, the
//! residual `(1 - g^2) f^2` is kept as a 1x1 block.
//!
//! cargo run --release --example grushin_pipeline

use matsos::gallery::grushin_2x2;
use matsos::grid::GridSpec;
use matsos::verify::{decomposition_pipeline, PipelineParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gamma = 0.5;
    let a = grushin_2x2(gamma);
    let grid = GridSpec::shells(1, 0.06, 1.0, 30, 2);
    let out = decomposition_pipeline(&a, &PipelineParams::new(2, 0.25, 0.1, 0.2), &grid)?;

    for r in &out.reports {
        println!("{:<28} {:?} worst {:?}", r.condition.id(), r.verdict, r.worst_ratio);
    }
    let d = out.decomposition.expect("not refused");
    for s in &d.steps {
        let z: Vec<String> = s.z.iter().map(|e| e.to_string()).collect();
        println!("Z_{} = ({})", s.k, z.join(", "));
    }
    let q = d.residual.as_ref().expect("depth 2 leaves a residual");
    println!("residual = {}", q.get(0, 0));
    for x in [0.2, 0.5, 0.9] {
        let f = (-1.0f64 / (x * x)).exp();
        println!("  x = {x}: residual {:.6e}, (1 - g^2) f^2 = {:.6e}", q.eval(&[x])?.get(0, 0), (1.0 - gamma * gamma) * f * f);
    }
    println!("summary: {:?}", out.summary.verdict);
    Ok(())
}

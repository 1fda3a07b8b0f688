//! Block examples built from the flat 3x3 function: the pipeline accepts
//! `M` when `F` is left as the residual block, refuses it when asked to
//! peel through `F`, and the two flat blocks of `N` are not comparable.
//!
//! cargo run --release --example block_examples

use matsos::gallery::{build_blocks, comparability_check, m7_trace_reference, BlockKind, BlockParams};
use matsos::grid::GridSpec;
use matsos::verify::{decomposition_pipeline, PipelineParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = BlockParams::default();
    let m = build_blocks(BlockKind::M7, &params)?;
    let grid = GridSpec::shells(4, 0.1, 0.9, 10, 12).with_seed(3);

    let r = comparability_check(&m, &m7_trace_reference(&params)?, &grid)?;
    println!("M vs diag(I_4, tr F I_3): {:?}, alpha/beta = {:?}", r.verdict, r.worst_ratio);

    let mut p = PipelineParams::new(5, 0.3, 0.1, 0.2);
    p.holder_centers = 2;
    let out = decomposition_pipeline(&m, &p, &grid)?;
    println!("p = 5: refusal {:?}, summary {:?}", out.refusal.as_ref().map(|r| &r.failed), out.summary.verdict);

    p.p = 8;
    let out = decomposition_pipeline(&m, &p, &grid)?;
    match &out.refusal {
        Some(r) => println!("p = 8: refused, failed {:?}", r.failed),
        None => println!("p = 8: not refused"),
    }

    let n = build_blocks(BlockKind::N8, &params)?;
    let f = n.principal(&[4, 5, 6]);
    let g = n.principal(&[7, 8, 9]);
    let r = comparability_check(&f, &g, &grid)?;
    println!("F vs G: {:?}, ln(alpha/beta) = {}", r.verdict, r.details["ln_ratio"]);
    Ok(())
}

//! Fourth-order regularity of the flat 3x3 block away from t = 0, and the
//! growth condition that rules out C^{1,beta} square roots.
//!
//! cargo run --release --example flat_sharpness

use matsos::gallery::{build_f_phi_psi, failure_condition_check, flat_domain_grid, FPhiPsiParams};
use matsos::grid::{GridSpec, PointSet, Radii};
use matsos::verify::{strong_check_with, StrongParams};
use matsos::Condition;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = FPhiPsiParams::default();
    let f = build_f_phi_psi(&p)?;
    let grid = flat_domain_grid((0.2, 0.9, 6), (0.05, 0.9, 8), 8);

    let mut off = StrongParams::new(3, 0.2, 0.01, 0.01);
    off.holder_centers = 2;
    let r = strong_check_with(&f, &off, &grid)?;
    let inner = r.find(Condition::OffDiagInner).expect("inner family");
    println!("off-diagonal, eps = 0.2: {:?} (worst ratio {:?})", inner.verdict, inner.worst_ratio);

    let mut diag = StrongParams::new(3, 0.3, 0.01, 0.01);
    diag.holder_centers = 2;
    let r = strong_check_with(&f, &diag, &grid)?;
    let d = r.find(Condition::DiagDerivative).expect("diagonal family");
    println!("diagonal, eps = 0.3:     {:?} (worst ratio {:?})", d.verdict, d.worst_ratio);
    let inner = r.find(Condition::OffDiagInner).expect("inner family");
    println!("off-diagonal, eps = 0.3: {:?} (worst ratio {:?})", inner.verdict, inner.worst_ratio);

    let t = GridSpec::new(1, PointSet::Shells { dim: 1, radii: Radii::Geometric { min: 1e-3, max: 0.9, count: 30 }, directions: 1 });
    for beta in [0.5, 0.9] {
        let r = failure_condition_check(&p, beta, &t)?;
        println!("beta = {beta}: obstruction {} sup ratio {:?}", r.details["obstruction"], r.worst_ratio);
    }
    Ok(())
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::flat::{f_phi_psi_in, FPhiPsiParams};
use super::GalleryError;
use crate::decompose::SymMatFun;
use crate::grid::GridSpec;
use crate::jet::ScalarExpr;
use crate::report::{BoundRule, CheckReport, Condition, Verdict};
use crate::symmat::{comparability_bracket, SymError, SymMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockKind {
    M7,
    N8,
    P7,
}

/// Ingredients of the block examples. All blocks live in `(x, y, z, t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockParams {
    #[serde(default)]
    pub f_phi_psi: FPhiPsiParams,
    /// Flat function for the second 3x3 block of `N`, in variable 0;
    /// defaults to `exp(-1/|t|)`.
    #[serde(default)]
    pub rho: Option<ScalarExpr>,
    /// Last two diagonal entries of `P`; default to the traces of the two
    /// 3x3 flat blocks.
    #[serde(default)]
    pub f: Option<ScalarExpr>,
    #[serde(default)]
    pub g: Option<ScalarExpr>,
}

impl Default for BlockParams {
    fn default() -> Self {
        BlockParams { f_phi_psi: FPhiPsiParams::default(), rho: None, f: None, g: None }
    }
}

impl BlockParams {
    pub fn rho(&self) -> ScalarExpr {
        self.rho.clone().unwrap_or_else(|| ScalarExpr::var(0).flat_with(1.0, 1.0))
    }

    /// Parameters of the `rho` block: same `lambda` and `h`, `psi = (rho t^2)^4`.
    pub fn g_params(&self) -> FPhiPsiParams {
        FPhiPsiParams {
            lambda: self.f_phi_psi.lambda,
            phi: self.rho(),
            psi: None,
            h: self.f_phi_psi.h.clone(),
        }
    }
}

fn f_block(p: &FPhiPsiParams) -> SymMatFun {
    f_phi_psi_in(p, &[0, 1, 2], 3, 4)
}

fn trace(m: &SymMatFun) -> ScalarExpr {
    ScalarExpr::sum(m.diag_entries())
}

/// `M = diag(I_4, F)` (7x7), `N = diag(M, G)` (10x10) with `G` built from
/// `rho`, and `P = diag(1, 1, 1, 1, 1, f, g)`.
pub fn build_blocks(kind: BlockKind, params: &BlockParams) -> Result<SymMatFun, GalleryError> {
    params.f_phi_psi.validate()?;
    let id4 = SymMatFun::constant(&SymMatrix::identity(4), 4);
    let m = || SymMatFun::block_diag(&[&id4, &f_block(&params.f_phi_psi)]);
    Ok(match kind {
        BlockKind::M7 => m(),
        BlockKind::N8 => {
            let gp = params.g_params();
            gp.validate()?;
            SymMatFun::block_diag(&[&m(), &f_block(&gp)])
        }
        BlockKind::P7 => {
            let f = params.f.clone().unwrap_or_else(|| trace(&f_block(&params.f_phi_psi)));
            let g = params.g.clone().unwrap_or_else(|| trace(&f_block(&params.g_params())));
            if f.nvars() > 4 || g.nvars() > 4 {
                return Err(GalleryError::Param("f and g must be expressions in (x, y, z, t)".into()));
            }
            let mut d = vec![ScalarExpr::one(); 5];
            d.push(f);
            d.push(g);
            SymMatFun::diagonal(&d, 4)
        }
    })
}

/// The comparison matrix `diag(I_4, tr(F) I_3)` for `M`.
pub fn m7_trace_reference(params: &BlockParams) -> Result<SymMatFun, GalleryError> {
    params.f_phi_psi.validate()?;
    let f = trace(&f_block(&params.f_phi_psi));
    let mut d = vec![ScalarExpr::one(); 4];
    d.extend(std::iter::repeat(f).take(3));
    Ok(SymMatFun::diagonal(&d, 4))
}

/// One pair of constants `beta B <= A <= alpha B` over the whole grid.
/// Each sample is normalized by the largest entry of each matrix before the
/// bracket is taken, and `ln alpha`, `ln beta` are tracked in log form, so
/// flat scales far apart stay resolvable. Passes when `alpha / beta` stays
/// within the rule's cap.
pub fn comparability_check(a: &SymMatFun, b: &SymMatFun, grid: &GridSpec) -> Result<CheckReport, GalleryError> {
    if a.n() != b.n() {
        return Err(GalleryError::Param(format!("dimension mismatch {} vs {}", a.n(), b.n())));
    }
    let rule = BoundRule::default();
    let samples = grid.samples();
    let per: Vec<Result<Option<(f64, f64)>, GalleryError>> = samples
        .points
        .par_iter()
        .map(|x| {
            let (ma, mb) = (a.eval(x)?, b.eval(x)?);
            let (sa, sb) = (ma.max_abs(), mb.max_abs());
            if sa == 0.0 && sb == 0.0 {
                return Ok(None);
            }
            if sa == 0.0 || sb == 0.0 {
                return Ok(Some((f64::NEG_INFINITY, f64::INFINITY)));
            }
            let (lo, hi) = match comparability_bracket(&ma.scale(1.0 / sa), &mb.scale(1.0 / sb)) {
                Ok(v) => v,
                Err(SymError::NotPsd(_)) => return Ok(Some((f64::NEG_INFINITY, f64::INFINITY))),
                Err(e) => return Err(e.into()),
            };
            let shift = sa.ln() - sb.ln();
            Ok(Some((lo.max(0.0).ln() + shift, hi.ln() + shift)))
        })
        .collect();
    let mut ln_beta = f64::INFINITY;
    let mut ln_alpha = f64::NEG_INFINITY;
    let mut at_beta = None;
    let mut at_alpha = None;
    let mut r = CheckReport::new(Condition::BlockComparability, Verdict::Pass);
    r.counts.excluded = samples.excluded;
    for (x, p) in samples.points.iter().zip(per) {
        let Some((lb, la)) = p? else {
            r.counts.excluded += 1;
            continue;
        };
        r.counts.evaluated += 1;
        if lb < ln_beta {
            ln_beta = lb;
            at_beta = Some(x.clone());
        }
        if la > ln_alpha {
            ln_alpha = la;
            at_alpha = Some(x.clone());
        }
    }
    if r.counts.evaluated == 0 {
        r.verdict = Verdict::InconclusiveByFlatness;
        return Ok(r);
    }
    let ln_ratio = ln_alpha - ln_beta;
    r.verdict = if ln_ratio <= rule.c_max.ln() { Verdict::Pass } else { Verdict::Fail };
    r.worst_ratio = Some(ln_ratio.min(709.0).exp());
    r.constant = r.worst_ratio;
    r.witness = if ln_alpha > -ln_beta { at_alpha } else { at_beta };
    r = r.detail("ln_alpha", ln_alpha).detail("ln_beta", ln_beta).detail("ln_ratio", ln_ratio);
    if ln_beta.is_finite() && ln_alpha.is_finite() {
        r = r.param("beta", ln_beta.exp()).param("alpha", ln_alpha.exp());
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        let p = BlockParams::default();
        assert_eq!(build_blocks(BlockKind::M7, &p).unwrap().n(), 7);
        assert_eq!(build_blocks(BlockKind::N8, &p).unwrap().n(), 10);
        let pm = build_blocks(BlockKind::P7, &p).unwrap();
        assert_eq!(pm.n(), 7);
        let v = pm.eval(&[0.2, 0.1, 0.3, 0.4]).unwrap();
        assert_eq!(&v.diagonal()[..5], &[1.0; 5]);
        assert!(v.get(5, 5) > 0.0 && v.get(6, 6) > 0.0);
    }

    #[test]
    fn m7_is_upper_left_identity() {
        let m = build_blocks(BlockKind::M7, &BlockParams::default()).unwrap();
        let v = m.eval(&[0.3, -0.2, 0.1, 0.6]).unwrap();
        for i in 0..4 {
            for j in 0..7 {
                assert_eq!(v.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
    }
}

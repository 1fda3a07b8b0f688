use rayon::prelude::*;

use super::VerifyError;
use crate::decompose::{SymMatFun, PIVOT_FLOOR};
use crate::grid::GridSpec;
use crate::report::{BoundRule, CheckReport, Condition, RatioSweep, Verdict};
use crate::symmat::{eigen, relative_to, SymMatrix};

/// `sup_xi |d_k A xi|^2 / xi^T A xi` at one point: the top generalized
/// eigenvalue of `(d_k A)^2` against `A`, maximized over `k`. Rows with a
/// numerically zero diagonal are dropped when their derivative rows vanish.
fn quadratic_ratio(a: &SymMatrix, grads: &[SymMatrix]) -> Result<Option<f64>, VerifyError> {
    let n = a.n();
    let keep: Vec<usize> = (0..n).filter(|&i| a.get(i, i) >= PIVOT_FLOOR).collect();
    let dropped_live = (0..n)
        .filter(|i| !keep.contains(i))
        .any(|i| grads.iter().any(|g| (0..n).any(|j| g.get(i, j) != 0.0)));
    if dropped_live {
        return Ok(Some(f64::INFINITY));
    }
    if keep.is_empty() {
        return Ok(None);
    }
    let a = a.principal(&keep);
    // equilibrate by the diagonal; the generalized eigenvalues are unchanged
    let s: Vec<f64> = a.diagonal().iter().map(|v| 1.0 / v.sqrt()).collect();
    let a_eq = a.congruence_diag(&s);
    let ea = eigen(&a_eq)?;
    let mut worst = 0.0f64;
    let mut all_zero = true;
    for g in grads {
        let g = g.principal(&keep);
        if g.max_abs() != 0.0 {
            all_zero = false;
        }
        let g2 = SymMatrix::from_fn(g.n(), |i, j| (0..g.n()).map(|k| g.get(i, k) * g.get(k, j)).sum());
        let g2_eq = g2.congruence_diag(&s);
        if ea.min() <= 1e-14 * ea.max() {
            if g2_eq.max_abs() > 0.0 {
                return Ok(Some(f64::INFINITY));
            }
            continue;
        }
        worst = worst.max(eigen(&relative_to(&g2_eq, &a_eq)?)?.max());
    }
    if all_zero {
        return Ok(Some(0.0));
    }
    Ok(Some(worst))
}

/// `|grad a_ij|^2 / min(a_ii, a_jj)`, maximized over entries.
fn entrywise_ratio(a: &SymMatrix, grads: &[SymMatrix]) -> Option<f64> {
    let n = a.n();
    let mut worst: Option<f64> = None;
    for i in 0..n {
        for j in i..n {
            let g2: f64 = grads.iter().map(|g| g.get(i, j).powi(2)).sum();
            let m = a.get(i, i).min(a.get(j, j)).max(0.0);
            if g2 == 0.0 && m == 0.0 {
                continue;
            }
            let r = if m == 0.0 { f64::INFINITY } else { g2 / m };
            worst = Some(worst.map_or(r, |w| w.max(r)));
        }
    }
    worst
}

/// Subordination: `|d_k A xi|^2 <= Gamma^2 xi^T A xi` for every first order
/// partial, tested as a sampled ratio with the growth rule. The entrywise
/// criterion `|grad a_ij|^2 <~ min(a_ii, a_jj)` is evaluated independently;
/// the top-level verdict follows the quadratic form and `details.agree`
/// records whether the two verdicts match.
pub fn subordinate_check(a: &SymMatFun, grid: &GridSpec) -> Result<CheckReport, VerifyError> {
    subordinate_check_with(a, grid, &BoundRule::default())
}

pub fn subordinate_check_with(a: &SymMatFun, grid: &GridSpec, rule: &BoundRule) -> Result<CheckReport, VerifyError> {
    let samples = grid.samples();
    let per: Vec<Result<(Option<f64>, Option<f64>), VerifyError>> = samples
        .points
        .par_iter()
        .map(|x| {
            let v = a.eval(x)?;
            let grads = a.gradients(x)?;
            Ok((quadratic_ratio(&v, &grads)?, entrywise_ratio(&v, &grads)))
        })
        .collect();
    let mut quad = RatioSweep::new();
    let mut entry = RatioSweep::new();
    quad.excluded = samples.excluded;
    entry.excluded = samples.excluded;
    for (x, p) in samples.points.iter().zip(per) {
        let (q, e) = p?;
        let r = grid.radius(x);
        match q {
            Some(v) => quad.push_ratio(r, x, v),
            None => quad.exclude(),
        }
        match e {
            Some(v) => entry.push_ratio(r, x, v),
            None => entry.exclude(),
        }
    }
    let qr = quad.report(Condition::SubordinateQuadraticForm, rule);
    let er = entry.report(Condition::SubordinateEntrywise, rule);
    let agree = qr.verdict == er.verdict;
    let mut r = CheckReport::new(Condition::Subordinate, qr.verdict);
    r.worst_ratio = qr.worst_ratio;
    r.constant = qr.worst_ratio.map(f64::sqrt);
    r.witness = qr.witness.clone();
    r.counts = qr.counts.clone();
    if let Some(g2) = qr.worst_ratio {
        r = r.param("Gamma", g2.sqrt());
    }
    r = r.detail("agree", agree);
    if !agree {
        r = r.note("quadratic-form and entrywise verdicts differ");
    }
    if r.verdict == Verdict::Fail && qr.worst_ratio.map_or(false, f64::is_finite) {
        r = r.note("derivative ratio grows toward the origin or exceeds the constant cap");
    }
    r.parts = vec![qr, er];
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::ScalarExpr;

    #[test]
    fn smooth_diagonal_is_subordinate() {
        let x = ScalarExpr::var(0);
        let y = ScalarExpr::var(1);
        let a = SymMatFun::diagonal(&[x.powi(2) + y.powi(2), ScalarExpr::one() + x.powi(2)], 2);
        let r = subordinate_check(&a, &GridSpec::shells(2, 0.01, 1.0, 12, 8)).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.details["agree"], serde_json::json!(true));
    }

    #[test]
    fn grushin_is_not_subordinate() {
        let x = ScalarExpr::var(0);
        let f = x.flat();
        let a = SymMatFun::new(2, 1, |i, j| match (i, j) {
            (0, 0) => ScalarExpr::one(),
            (1, 1) => f.powi(2),
            _ => &f * 0.5,
        });
        let r = subordinate_check(&a, &GridSpec::shells(1, 0.05, 0.3, 20, 2)).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.worst_ratio.unwrap() > 1e3);
    }
}

use rayon::prelude::*;

use super::VerifyError;
use crate::decompose::{SymMatFun, PIVOT_FLOOR};
use crate::grid::GridSpec;
use crate::jet::{Evaluator, ScalarExpr};
use crate::report::{BoundRule, CheckReport, Condition, Counts, RatioSweep, Verdict};
use crate::symmat::{eigen, relative_to, SymMatrix, PSD_TOL};

enum Sample {
    /// A diagonal entry is numerically zero along with its row.
    Degenerate,
    /// Not positive definite at this point.
    Indefinite(f64),
    Bracket(f64, f64),
}

fn classify(m: &SymMatrix) -> Result<Sample, VerifyError> {
    let n = m.n();
    let d = m.diagonal();
    if d.iter().any(|v| *v < PIVOT_FLOOR) {
        // below double range a zero diagonal is only compatible with a PSD
        // matrix when its row is tiny as well
        let incompatible = (0..n).filter(|&i| d[i] < PIVOT_FLOOR).any(|i| {
            d[i] < -PIVOT_FLOOR || (0..n).any(|j| j != i && m.get(i, j).powi(2) > d[j].max(0.0) * PIVOT_FLOOR)
        });
        if incompatible {
            return Ok(Sample::Indefinite(d.iter().cloned().fold(f64::INFINITY, f64::min)));
        }
        return Ok(Sample::Degenerate);
    }
    let e = eigen(&relative_to(m, &m.diag_part())?)?;
    if e.min() <= 0.0 {
        return Ok(Sample::Indefinite(e.min()));
    }
    Ok(Sample::Bracket(e.min(), e.max()))
}

/// Positive definiteness off the origin and one comparability bracket
/// `beta D <= A <= alpha D` against the diagonal part `D`, over all samples.
/// Passes when every sample is positive definite and `alpha / beta <= c_max`.
pub fn diag_elliptic_check(a: &SymMatFun, grid: &GridSpec) -> Result<CheckReport, VerifyError> {
    diag_elliptic_check_with(a, grid, &BoundRule::default())
}

pub fn diag_elliptic_check_with(a: &SymMatFun, grid: &GridSpec, rule: &BoundRule) -> Result<CheckReport, VerifyError> {
    let samples = grid.samples();
    let evaluated: Vec<Result<Sample, VerifyError>> =
        samples.points.par_iter().map(|x| classify(&a.eval(x)?)).collect();
    let mut beta = f64::INFINITY;
    let mut alpha = 0.0f64;
    let mut witness = None;
    let mut indefinite: Option<(Vec<f64>, f64)> = None;
    let mut counts = Counts { excluded: samples.excluded, ..Default::default() };
    for (x, s) in samples.points.iter().zip(evaluated) {
        match s? {
            Sample::Degenerate => {
                counts.excluded += 1;
                counts.flagged += 1;
            }
            Sample::Indefinite(v) => {
                counts.evaluated += 1;
                if indefinite.is_none() {
                    indefinite = Some((x.clone(), v));
                }
            }
            Sample::Bracket(lo, hi) => {
                counts.evaluated += 1;
                if lo < beta {
                    beta = lo;
                    witness = Some(x.clone());
                }
                alpha = alpha.max(hi);
            }
        }
    }
    let ratio = if indefinite.is_some() { f64::INFINITY } else { alpha / beta };
    let verdict = if counts.evaluated == 0 {
        Verdict::InconclusiveByFlatness
    } else if ratio <= rule.c_max {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let mut r = CheckReport::new(Condition::DiagonalEllipticity, verdict);
    if beta.is_finite() {
        r = r.param("beta", beta).param("alpha", alpha);
    }
    r.worst_ratio = Some(ratio);
    r.constant = Some(ratio);
    r.witness = witness;
    if let Some((x, v)) = indefinite {
        r.witness = Some(x);
        r = r.note(format!("not positive definite at a sample (smallest value {v:e})"));
    }
    r.counts = counts;
    if r.counts.flagged > 0 {
        r = r.note("samples with diagonal entries below 1e-300 are excluded as numerically flat");
    }
    Ok(r)
}

/// Eigenvalues nonnegative and `lambda_max / lambda_min <= K` with one `K`
/// over the grid. With a reference entry `a` the bracket of `Q / a` is
/// reported as a second part.
pub fn quasiconformal_check(
    q: &SymMatFun,
    reference: Option<&ScalarExpr>,
    grid: &GridSpec,
) -> Result<CheckReport, VerifyError> {
    let rule = BoundRule::default();
    let samples = grid.samples();
    let per: Vec<Result<Option<(f64, f64, f64)>, VerifyError>> = samples
        .points
        .par_iter()
        .map(|x| {
            let mut ev = Evaluator::new(x, 0)?;
            let m = q.eval_with(&mut ev)?;
            let r = match reference {
                Some(e) => ev.value(e)?,
                None => 1.0,
            };
            if m.max_abs() < PIVOT_FLOOR {
                return Ok(None);
            }
            let e = eigen(&m)?;
            Ok(Some((e.min(), e.max(), r)))
        })
        .collect();
    let mut k_max = 0.0f64;
    let mut witness = None;
    let mut negative = None;
    let mut counts = Counts { excluded: samples.excluded, ..Default::default() };
    let mut bracket = (f64::INFINITY, 0.0f64, None::<Vec<f64>>);
    let mut ref_counts = Counts::default();
    for (x, p) in samples.points.iter().zip(per) {
        let Some((lo, hi, r)) = p? else {
            counts.excluded += 1;
            ref_counts.excluded += 1;
            continue;
        };
        counts.evaluated += 1;
        if lo < -PSD_TOL * hi.abs() && negative.is_none() {
            negative = Some((x.clone(), lo));
        }
        let k = if lo <= 0.0 { f64::INFINITY } else { hi / lo };
        if witness.is_none() || k > k_max {
            k_max = k;
            witness = Some(x.clone());
        }
        if reference.is_some() {
            if r < PIVOT_FLOOR {
                ref_counts.excluded += 1;
                continue;
            }
            ref_counts.evaluated += 1;
            if lo / r < bracket.0 {
                bracket.0 = lo / r;
                bracket.2 = Some(x.clone());
            }
            bracket.1 = bracket.1.max(hi / r);
        }
    }
    let verdict = if counts.evaluated == 0 {
        Verdict::InconclusiveByFlatness
    } else if negative.is_none() && k_max <= rule.c_max {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let mut rep = CheckReport::new(Condition::Quasiconformal, verdict);
    rep.worst_ratio = Some(k_max);
    rep.constant = Some(k_max);
    rep.witness = witness;
    rep.counts = counts;
    if let Some((x, v)) = negative {
        rep.witness = Some(x);
        rep = rep.note(format!("negative eigenvalue {v:e}"));
    }
    if reference.is_some() {
        let (beta, alpha, at) = bracket;
        let v = if ref_counts.evaluated == 0 {
            Verdict::InconclusiveByFlatness
        } else if beta > 1.0 / rule.c_max && alpha <= rule.c_max {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        let mut part = CheckReport::new(Condition::ResidualReferenceComparable, v);
        if ref_counts.evaluated > 0 {
            part = part.param("beta", beta).param("alpha", alpha);
            part.worst_ratio = Some(alpha / beta);
            part.constant = part.worst_ratio;
        }
        part.witness = at;
        part.counts = ref_counts;
        let k_part = rep.clone();
        let mut combined = CheckReport::combine(Condition::Quasiconformal, vec![k_part, part]);
        combined.params = rep.params.clone();
        combined.worst_ratio = Some(k_max);
        combined.constant = Some(k_max);
        rep = combined;
    }
    Ok(rep)
}

/// Pairwise ratios of the diagonal entries `a_pp, ..., a_nn` (1-based `p`)
/// within `[1/ratio, ratio]`.
pub fn tail_diagonal_check(a: &SymMatFun, p: usize, ratio: f64, grid: &GridSpec) -> Result<CheckReport, VerifyError> {
    let n = a.n();
    let samples = grid.samples();
    let mut sweep = RatioSweep::new();
    sweep.excluded = samples.excluded;
    for x in &samples.points {
        let mut ev = Evaluator::new(x, 0)?;
        let d: Vec<f64> = (p - 1..n).map(|i| ev.value(a.get(i, i))).collect::<Result<_, _>>()?;
        let r = grid.radius(x);
        let mut worst: Option<f64> = None;
        for i in 0..d.len() {
            for j in i + 1..d.len() {
                let (u, v) = (d[i].max(0.0), d[j].max(0.0));
                if u == 0.0 && v == 0.0 {
                    continue;
                }
                let q = if u == 0.0 || v == 0.0 { f64::INFINITY } else { (u / v).max(v / u) };
                worst = Some(worst.map_or(q, |w| w.max(q)));
            }
        }
        match worst {
            Some(w) => sweep.push_ratio(r, x, w),
            None if d.len() > 1 => sweep.exclude(),
            None => sweep.push_ratio(r, x, 1.0),
        }
    }
    let rule = BoundRule { c_max: ratio, slope_tol: f64::INFINITY, inner_share: 1.0 };
    Ok(sweep.report(Condition::TailDiagonalComparable, &rule).param("p", p as f64).param("R", ratio))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> GridSpec {
        GridSpec::shells(1, 0.05, 1.0, 30, 2)
    }

    #[test]
    fn positive_diagonal_is_elliptic_with_unit_bracket() {
        let x = ScalarExpr::var(0);
        let a = SymMatFun::diagonal(&[x.powi(2), x.powi(4) + 1.0], 1);
        let r = diag_elliptic_check(&a, &line()).unwrap();
        assert!(r.passed());
        assert!((r.params["beta"] - 1.0).abs() < 1e-12);
        assert!((r.params["alpha"] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nearly_singular_off_diagonal_fails() {
        let x = ScalarExpr::var(0);
        let off = ScalarExpr::one() - x.flat();
        let a = SymMatFun::new(2, 1, |i, j| if i == j { ScalarExpr::one() } else { off.clone() });
        let r = diag_elliptic_check(&a, &line()).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        assert!(r.worst_ratio.unwrap() > 1e6);
    }

    #[test]
    fn one_by_one_is_quasiconformal() {
        let x = ScalarExpr::var(0);
        let q = SymMatFun::diagonal(&[x.powi(2) + 0.5], 1);
        let r = quasiconformal_check(&q, None, &line()).unwrap();
        assert!(r.passed());
        assert_eq!(r.worst_ratio, Some(1.0));
    }

    #[test]
    fn flat_diagonal_is_not_quasiconformal() {
        let x = ScalarExpr::var(0);
        let q = SymMatFun::diagonal(&[ScalarExpr::one(), x.flat()], 1);
        let r = quasiconformal_check(&q, None, &line()).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn tail_ratio_bounds() {
        let x = ScalarExpr::var(0);
        let a = SymMatFun::diagonal(&[ScalarExpr::one(), x.powi(2) + 1.0, (x.powi(2) + 1.0) * 3.0], 1);
        assert!(tail_diagonal_check(&a, 2, 100.0, &line()).unwrap().passed());
        let b = SymMatFun::diagonal(&[ScalarExpr::one(), x.powi(2)], 1);
        assert_eq!(tail_diagonal_check(&b, 1, 100.0, &line()).unwrap().verdict, Verdict::Fail);
    }
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::VerifyError;
use crate::decompose::SymMatFun;
use crate::grid::GridSpec;
use crate::jet::{eval_log, holder_seminorms_degree, Evaluator, JetError, ScalarExpr};
use crate::report::{BoundRule, CheckReport, Condition, RatioSweep};

/// Parameters of the fourth-order regularity families.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrongParams {
    pub ell: usize,
    pub epsilon: f64,
    pub delta_prime: f64,
    pub delta_pp: f64,
    /// Hölder exponent is `2 delta`; by default `delta` solves
    /// `delta' = 2 delta (1 + delta) / (2 + delta)`.
    #[serde(default)]
    pub delta: Option<f64>,
    /// Samples (innermost first) at which Hölder seminorms are estimated.
    #[serde(default = "default_centers")]
    pub holder_centers: usize,
    #[serde(default)]
    pub rule: BoundRule,
}

fn default_centers() -> usize {
    4
}

/// Positive root of `2 d^2 + (2 - dp) d - 2 dp = 0`.
pub fn delta_from_delta_prime(dp: f64) -> f64 {
    let b = 2.0 - dp;
    (-b + (b * b + 16.0 * dp).sqrt()) / 4.0
}

impl StrongParams {
    pub fn new(ell: usize, epsilon: f64, delta_prime: f64, delta_pp: f64) -> StrongParams {
        StrongParams {
            ell,
            epsilon,
            delta_prime,
            delta_pp,
            delta: None,
            holder_centers: default_centers(),
            rule: BoundRule::default(),
        }
    }

    pub fn holder_delta(&self) -> f64 {
        self.delta.unwrap_or_else(|| delta_from_delta_prime(self.delta_prime))
    }

    fn validate(&self, n: usize) -> Result<(), VerifyError> {
        let bad = |s: String| Err(VerifyError::Param(s));
        if !(1..=n).contains(&self.ell) {
            return bad(format!("ell = {} outside 1..={n}", self.ell));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon = {} outside (0, 1)", self.epsilon));
        }
        for (name, v) in [("delta'", self.delta_prime), ("delta''", self.delta_pp)] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{name} = {v} outside (0, 1)"));
            }
        }
        Ok(())
    }
}

/// Exponent `[1 - |mu| eps]_+ + delta'` of the diagonal family.
pub fn diag_exponent(order: usize, epsilon: f64, delta_prime: f64) -> f64 {
    (1.0 - order as f64 * epsilon).max(0.0) + delta_prime
}

/// Exponent `[1/2 + (2 - |mu|) eps]_+ + delta''` of the off-diagonal families.
pub fn offdiag_exponent(order: usize, epsilon: f64, delta_pp: f64) -> f64 {
    (0.5 + (2.0 - order as f64) * epsilon).max(0.0) + delta_pp
}

/// `base^e`; bases above 1 use the epsilon-free exponent `floor_e` so that
/// the bound is monotone in epsilon. Returns the value and whether the
/// fallback applied.
fn bound(base: f64, e: f64, floor_e: f64) -> (f64, bool) {
    let b = base.max(0.0);
    if b > 1.0 {
        (b.powf(floor_e), true)
    } else {
        (b.powf(e), false)
    }
}

#[derive(Default)]
struct Family {
    sweep: RatioSweep,
    by_degree: [f64; 5],
}

impl Family {
    fn push(&mut self, deg: usize, r: f64, x: &[f64], lhs: f64, rhs: f64, flagged: bool) {
        let before = self.sweep.len();
        self.sweep.push(r, x, lhs, rhs);
        if self.sweep.len() > before {
            let ratio = if rhs == 0.0 { f64::INFINITY } else { lhs.abs() / rhs };
            self.by_degree[deg] = self.by_degree[deg].max(ratio);
        }
        if flagged {
            self.sweep.flagged += 1;
        }
    }

    fn merge(&mut self, o: Family) {
        self.sweep.merge(o.sweep);
        for d in 0..5 {
            self.by_degree[d] = self.by_degree[d].max(o.by_degree[d]);
        }
    }
}

/// Diagonal, inner and outer families at one sample.
fn families_at(a: &SymMatFun, p: &StrongParams, grid: &GridSpec, x: &[f64]) -> Result<[Family; 3], VerifyError> {
    let n = a.n();
    let ell = p.ell;
    let r = grid.radius(x);
    let jets = a.jets(x, 4)?;
    let jet = |i: usize, j: usize| if i <= j { &jets[i][j - i] } else { &jets[j][i - j] };
    let diag: Vec<f64> = (0..n).map(|k| jet(k, k).value()).collect();
    let m: Vec<f64> = diag
        .iter()
        .scan(f64::INFINITY, |acc, &v| {
            *acc = acc.min(v);
            Some(*acc)
        })
        .collect();
    let mut out = [Family::default(), Family::default(), Family::default()];
    for k in 0..ell {
        for d in 1..=4 {
            let (rhs, fl) = bound(diag[k], diag_exponent(d, p.epsilon, p.delta_prime), p.delta_prime);
            out[0].push(d, r, x, jet(k, k).max_abs(d), rhs, fl);
        }
    }
    for k in 0..ell {
        for j in k + 1..n {
            // inner pairs use m_j, outer pairs (j beyond ell) use m_k
            let (fam, base) = if j < ell { (1, m[j]) } else { (2, m[k]) };
            for d in 0..=4 {
                let (rhs, fl) = bound(base, offdiag_exponent(d, p.epsilon, p.delta_pp), p.delta_pp);
                out[fam].push(d, r, x, jet(k, j).max_abs(d), rhs, fl);
            }
        }
    }
    Ok(out)
}

fn holder_sweeps(
    a: &SymMatFun,
    p: &StrongParams,
    grid: &GridSpec,
    points: &[Vec<f64>],
) -> Result<[RatioSweep; 3], VerifyError> {
    let n = a.n();
    let ell = p.ell;
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| grid.radius(&points[i]).total_cmp(&grid.radius(&points[j])));
    let centers: Vec<&Vec<f64>> = order.iter().take(p.holder_centers).map(|&i| &points[i]).collect();
    let mut tasks: Vec<(usize, &ScalarExpr)> = Vec::new();
    for k in 0..ell {
        tasks.push((0, a.get(k, k)));
        for j in k + 1..n {
            tasks.push((if j < ell { 1 } else { 2 }, a.get(k, j)));
        }
    }
    let exponent = 2.0 * p.holder_delta();
    let jobs: Vec<(usize, &Vec<f64>, &ScalarExpr)> =
        centers.iter().flat_map(|x| tasks.iter().map(move |(f, e)| (*f, *x, *e))).collect();
    let vals: Vec<Result<Option<f64>, JetError>> = jobs
        .par_iter()
        .map(|(_, x, e)| {
            if e.as_const().is_some() {
                return Ok(Some(0.0));
            }
            match holder_seminorms_degree(e, x, 4, exponent, &grid.pairs, grid.seed) {
                Ok(v) => Ok(Some(v.iter().fold(0.0f64, |m, (_, s)| m.max(*s)))),
                Err(JetError::Domain { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut out = [RatioSweep::new(), RatioSweep::new(), RatioSweep::new()];
    for ((fam, x, _), v) in jobs.iter().zip(vals) {
        match v? {
            Some(s) => out[*fam].push(grid.radius(x), x, s, 1.0),
            None => {
                out[*fam].exclude();
                out[*fam].flagged += 1;
            }
        }
    }
    Ok(out)
}

/// The six families of fourth-order inequalities with diagonal minima
/// `m_k = min_{s<=k} a_ss`:
///
/// * diagonal: `|D^mu a_kk| <~ a_kk^([1 - |mu| eps]_+ + delta')`, `1 <= |mu| <= 4`, `k <= ell`;
/// * inner: `|D^mu a_kj| <~ m_j^([1/2 + (2 - |mu|) eps]_+ + delta'')`, `k < j <= ell`;
/// * outer: the same bound with `m_k`, for `k <= ell < j`;
///
/// each with a companion bounding the `2 delta` Hölder seminorm of the
/// fourth derivatives, estimated at the innermost samples.
pub fn strong_check(
    a: &SymMatFun,
    ell: usize,
    epsilon: f64,
    delta_p: f64,
    delta_pp: f64,
    grid: &GridSpec,
) -> Result<CheckReport, VerifyError> {
    strong_check_with(a, &StrongParams::new(ell, epsilon, delta_p, delta_pp), grid)
}

pub fn strong_check_with(a: &SymMatFun, p: &StrongParams, grid: &GridSpec) -> Result<CheckReport, VerifyError> {
    p.validate(a.n())?;
    let samples = grid.samples();
    let per: Vec<Result<[Family; 3], VerifyError>> =
        samples.points.par_iter().map(|x| families_at(a, p, grid, x)).collect();
    let mut fams = [Family::default(), Family::default(), Family::default()];
    for f in per {
        let [d, i, o] = f?;
        fams[0].merge(d);
        fams[1].merge(i);
        fams[2].merge(o);
    }
    for f in &mut fams {
        f.sweep.excluded += samples.excluded;
    }
    let holder = if p.holder_centers > 0 {
        holder_sweeps(a, p, grid, &samples.points)?
    } else {
        [RatioSweep::new(), RatioSweep::new(), RatioSweep::new()]
    };
    let conds = [
        (Condition::DiagDerivative, Condition::DiagHolder),
        (Condition::OffDiagInner, Condition::OffDiagInnerHolder),
        (Condition::OffDiagOuter, Condition::OffDiagOuterHolder),
    ];
    let mut parts = Vec::new();
    for ((fam, h), (c, ch)) in fams.into_iter().zip(holder).zip(conds) {
        let empty = fam.sweep.is_empty() && fam.sweep.excluded == samples.excluded;
        let mut r = fam.sweep.report(c, &p.rule).detail("by_degree", fam.by_degree);
        if empty {
            r = r.note("no index pairs in range; vacuous");
        }
        if r.counts.flagged > 0 {
            r = r.note("samples with base above 1 use the epsilon-free exponent");
        }
        parts.push(r);
        let mut hr = h.report(ch, &p.rule).param("holder_exponent", 2.0 * p.holder_delta());
        if hr.counts.flagged > 0 {
            hr = hr.note("seminorm undefined near some centers; excluded");
        }
        parts.push(hr);
    }
    let mut rep = CheckReport::combine(Condition::StrongRegularity, parts);
    rep = rep
        .param("ell", p.ell as f64)
        .param("epsilon", p.epsilon)
        .param("delta_prime", p.delta_prime)
        .param("delta_pp", p.delta_pp)
        .param("delta", p.holder_delta());
    if p.epsilon < 0.25 {
        rep = rep.note("epsilon below 1/4: outside the range the decomposition theorem assumes");
    }
    Ok(rep)
}

/// Scalar hypothesis for a sum of squares of `C^{2,delta}` functions:
/// `|grad^4 f| <~ f^(delta/(2+delta))` and `|grad^2 f| <~ f^(2 delta (1+delta)/(2+delta))`.
pub fn diffprov_check(f: &ScalarExpr, delta: f64, grid: &GridSpec) -> Result<CheckReport, VerifyError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(VerifyError::Param(format!("delta = {delta} outside (0, 1)")));
    }
    let e4 = delta / (2.0 + delta);
    let e2 = 2.0 * delta * (1.0 + delta) / (2.0 + delta);
    let rule = BoundRule::default();
    let samples = grid.samples();
    let per: Vec<Result<(f64, f64, f64, f64), VerifyError>> = samples
        .points
        .par_iter()
        .map(|x| {
            let j = Evaluator::new(x, 4)?.jet(f)?;
            if j.value() < 0.0 {
                return Err(VerifyError::Param(format!("f negative at {x:?}")));
            }
            let l = eval_log(f, x)?;
            let pow = |a: f64| if l.is_zero() { 0.0 } else { (a * l.ln_abs).exp() };
            Ok((j.tensor_norm(4), pow(e4), j.tensor_norm(2), pow(e2)))
        })
        .collect();
    let mut s4 = RatioSweep::new();
    let mut s2 = RatioSweep::new();
    s4.excluded = samples.excluded;
    s2.excluded = samples.excluded;
    for (x, v) in samples.points.iter().zip(per) {
        let (l4, r4, l2, r2) = v?;
        let r = grid.radius(x);
        s4.push(r, x, l4, r4);
        s2.push(r, x, l2, r2);
    }
    let mut a = s4.report(Condition::ScalarSosHypothesis, &rule).param("exponent", e4);
    a.label = Some("|grad^4 f| <~ f^(delta/(2+delta))".into());
    let mut b = s2.report(Condition::ScalarSosHypothesis, &rule).param("exponent", e2);
    b.label = Some("|grad^2 f| <~ f^(2 delta (1+delta)/(2+delta))".into());
    Ok(CheckReport::combine(Condition::ScalarSosHypothesis, vec![a, b]).param("delta", delta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Verdict;

    #[test]
    fn delta_inversion() {
        for d in [0.05, 0.1, 0.3, 0.8] {
            let dp = 2.0 * d * (1.0 + d) / (2.0 + d);
            assert!((delta_from_delta_prime(dp) - d).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_block_is_vacuous() {
        let a = SymMatFun::constant(&crate::symmat::SymMatrix::identity(3), 2);
        let g = GridSpec::shells(2, 0.05, 1.0, 6, 4);
        let r = strong_check(&a, 3, 0.25, 0.1, 0.1, &g).unwrap();
        assert!(r.passed());
        assert_eq!(r.find(Condition::DiagDerivative).unwrap().worst_ratio, Some(0.0));
    }

    #[test]
    fn flat_diagonal_passes() {
        let x = ScalarExpr::var(0);
        let y = ScalarExpr::var(1);
        let f = (x.powi(2) + y.powi(2)).flat_with(2.0, 1.0);
        let a = SymMatFun::diagonal(&[f], 2);
        let g = GridSpec::shells(2, 0.05, 1.0, 12, 6);
        let r = strong_check(&a, 1, 0.3, 0.05, 0.05, &g).unwrap();
        assert!(r.find(Condition::DiagDerivative).unwrap().passed(), "{r:#?}");
    }

    #[test]
    fn diffprov_examples() {
        let x = ScalarExpr::var(0);
        let g = GridSpec::shells(1, 0.01, 1.0, 40, 2);
        assert!(diffprov_check(&x.flat_with(2.0, 2.0), 0.1, &g).unwrap().passed());
        assert_eq!(diffprov_check(&x.powi(2), 0.5, &g).unwrap().verdict, Verdict::Fail);
    }

    #[test]
    fn zero_region_is_excluded() {
        let x = ScalarExpr::var(0);
        // bump in x - 2 vanishes identically on [-1, 1]
        let f = (x - 2.0).bump();
        let r = diffprov_check(&f, 0.1, &GridSpec::shells(1, 0.01, 1.0, 10, 2)).unwrap();
        assert_eq!(r.verdict, Verdict::InconclusiveByFlatness);
        assert!(r.counts.excluded > 0);
    }
}

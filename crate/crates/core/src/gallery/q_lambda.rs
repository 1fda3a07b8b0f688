use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GalleryError;
use crate::decompose::SymMatFun;
use crate::grid::{norm, GridSpec};
use crate::jet::{eval_jet, ScalarExpr};
use crate::report::{CheckReport, Condition, Verdict};
use crate::symmat::SymMatrix;

/// Largest `lambda` for which the non-SOS certificate is claimed.
pub const NON_SOS_THRESHOLD: f64 = 2.0 / 81.0;

/// Slack allowed in the minor lower bounds and relative error allowed in the
/// determinant expansion.
pub const POSITIVITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QLambdaParams {
    pub lambda: f64,
}

impl Default for QLambdaParams {
    fn default() -> Self {
        QLambdaParams { lambda: 0.02 }
    }
}

impl QLambdaParams {
    pub fn validate(&self) -> Result<(), GalleryError> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(GalleryError::Param(format!("lambda = {} outside (0, 1)", self.lambda)));
        }
        Ok(())
    }
}

/// Cyclic quadratic form in `(x, y, z)` (variables 0, 1, 2):
/// diagonal `x^2 + l y^2 + 2 z^2` and its cyclic shifts, off-diagonal
/// `-xy, -xz, -yz`. `lambda = 0` is allowed here.
pub fn build_q_lambda(p: QLambdaParams) -> SymMatFun {
    q_lambda_in(p.lambda, &[ScalarExpr::var(0), ScalarExpr::var(1), ScalarExpr::var(2)], 3)
}

/// `Q_lambda` at `z = 1`, in `(x, y)`.
pub fn build_q_lambda_dehomogenized(p: QLambdaParams) -> SymMatFun {
    q_lambda_in(p.lambda, &[ScalarExpr::var(0), ScalarExpr::var(1), ScalarExpr::one()], 2)
}

/// `Q_lambda(w)` for arbitrary coordinate expressions.
pub(crate) fn q_lambda_in(lambda: f64, w: &[ScalarExpr], nvars: usize) -> SymMatFun {
    let sq: Vec<ScalarExpr> = w.iter().map(|e| e.powi(2)).collect();
    SymMatFun::new(3, nvars, |i, j| {
        if i == j {
            let (a, b, c) = (i, (i + 1) % 3, (i + 2) % 3);
            &sq[a] + &sq[b] * lambda + &sq[c] * 2.0
        } else {
            -(&w[i] * &w[j])
        }
    })
}

/// Numeric `Q_lambda(x, y, z)`.
pub fn q_lambda_at(lambda: f64, w: &[f64; 3]) -> SymMatrix {
    SymMatrix::from_fn(3, |i, j| {
        if i == j {
            let (a, b, c) = (w[i], w[(i + 1) % 3], w[(i + 2) % 3]);
            a * a + lambda * b * b + 2.0 * c * c
        } else {
            -w[i] * w[j]
        }
    })
}

/// Term-by-term expansion of `det Q_lambda` as a polynomial in `lambda`.
pub fn det_expansion(lambda: f64, w: &[f64; 3]) -> f64 {
    let [x, y, z] = *w;
    let (x2, y2, z2) = (x * x, y * y, z * z);
    let cyc_a = x2 * z2 * z2 + z2 * y2 * y2 + y2 * x2 * x2;
    let cyc_b = x2 * y2 * y2 + y2 * z2 * z2 + z2 * x2 * x2;
    let sixth = x2 * x2 * x2 + y2 * y2 * y2 + z2 * z2 * z2;
    let xyz = x2 * y2 * z2;
    lambda.powi(3) * xyz
        + lambda * lambda * (2.0 * cyc_a + cyc_b)
        + 2.0 * lambda * (sixth + 2.0 * cyc_b + 3.0 * xyz)
        + 4.0 * (cyc_a + xyz)
}

/// Lower bounds for the three leading principal minors:
/// `min(l,1)|W|^2`, `min(l,2)(x^4+y^4+z^4)`, `2 l (x^6+y^6+z^6)`.
pub fn minor_lower_bounds(lambda: f64, w: &[f64; 3]) -> [f64; 3] {
    let s2: f64 = w.iter().map(|v| v * v).sum();
    let s4: f64 = w.iter().map(|v| v.powi(4)).sum();
    let s6: f64 = w.iter().map(|v| v.powi(6)).sum();
    [lambda.min(1.0) * s2, lambda.min(2.0) * s4, 2.0 * lambda * s6]
}

fn leading_minors(q: &SymMatrix) -> [f64; 3] {
    let m1 = q.get(0, 0);
    let m2 = q.get(0, 0) * q.get(1, 1) - q.get(0, 1).powi(2);
    [m1, m2, q.det()]
}

/// At every sphere sample: each leading principal minor minus its lower
/// bound is at least `-1e-9`, and the determinant expansion agrees with the
/// direct determinant to `1e-9` relative. The grid supplies points in the
/// first three coordinates; they are projected to the unit sphere.
pub fn q_lambda_positivity_certificate(p: QLambdaParams, grid: &GridSpec) -> Result<CheckReport, GalleryError> {
    if !(p.lambda > 0.0) {
        return Err(GalleryError::Param(format!("lambda = {} must be positive", p.lambda)));
    }
    if grid.nvars < 3 {
        return Err(GalleryError::Param("positivity certificate needs a grid in 3 variables".into()));
    }
    let samples = grid.samples();
    let per: Vec<Option<([f64; 3], f64, Vec<f64>)>> = samples
        .points
        .par_iter()
        .map(|x| {
            let r = norm(&x[..3]);
            if r == 0.0 {
                return None;
            }
            let w = [x[0] / r, x[1] / r, x[2] / r];
            let q = q_lambda_at(p.lambda, &w);
            let m = leading_minors(&q);
            let b = minor_lower_bounds(p.lambda, &w);
            let slack = [m[0] - b[0], m[1] - b[1], m[2] - b[2]];
            let rel = (det_expansion(p.lambda, &w) - m[2]).abs() / m[2].abs().max(f64::MIN_POSITIVE);
            Some((slack, rel, w.to_vec()))
        })
        .collect();
    let mut min_slack = [f64::INFINITY; 3];
    let mut worst_rel = 0.0f64;
    let mut witness = None;
    let mut evaluated = 0;
    let mut excluded = samples.excluded;
    for s in per {
        let Some((slack, rel, w)) = s else {
            excluded += 1;
            continue;
        };
        evaluated += 1;
        for k in 0..3 {
            if slack[k] < min_slack[k] {
                min_slack[k] = slack[k];
                if slack[k] < -POSITIVITY_TOL {
                    witness = Some(w.clone());
                }
            }
        }
        if rel > worst_rel {
            worst_rel = rel;
            if rel > POSITIVITY_TOL && witness.is_none() {
                witness = Some(w.clone());
            }
        }
    }
    let ok = min_slack.iter().all(|s| *s >= -POSITIVITY_TOL) && worst_rel <= POSITIVITY_TOL;
    let verdict = if evaluated == 0 {
        Verdict::Inconclusive
    } else if ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let mut r = CheckReport::new(Condition::QLambdaPositivity, verdict)
        .param("lambda", p.lambda)
        .detail("min_slack", min_slack.to_vec())
        .detail("det_expansion_rel_err", worst_rel);
    r.witness = witness;
    r.counts.evaluated = evaluated;
    r.counts.excluded = excluded;
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonSosVerdict {
    NotSosOfLinearForms,
    Inconclusive,
}

/// Coefficient identities forced on any representation
/// `Q(x, y) = sum_l (M_l u)(M_l u)^T`, `u = (x, y, 1)`, and the resulting
/// Cauchy-Schwarz bound. With `m_ij` the vector of `(M_l)_ij` over `l`:
/// `|m_ij|^2` is the coefficient of `u_j^2` in `Q_ii`, and the cross
/// coefficients give `m_ii . m_jj + m_ij . m_ji`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonSosCertificate {
    pub lambda: f64,
    /// `|m_ij|^2`, row-major.
    pub norms_sq: [[f64; 3]; 3],
    /// `m_11.m_22 + m_21.m_12`, `m_11.m_33 + m_31.m_13`, `m_22.m_33 + m_32.m_23`.
    pub dot_sums: [f64; 3],
    /// `6 (|m_21||m_12| + |m_32||m_23| + |m_31||m_13|)`; a representation
    /// needs `4 <= bound`.
    pub bound: f64,
    pub verdict: NonSosVerdict,
}

impl NonSosCertificate {
    pub fn report(&self) -> CheckReport {
        let v = match self.verdict {
            NonSosVerdict::NotSosOfLinearForms => Verdict::Pass,
            NonSosVerdict::Inconclusive => Verdict::Inconclusive,
        };
        let mut r = CheckReport::new(Condition::QLambdaNonSos, v)
            .param("lambda", self.lambda)
            .param("bound", self.bound)
            .detail("verdict", self.verdict)
            .detail("norms_sq", self.norms_sq)
            .detail("dot_sums", self.dot_sums);
        r.constant = Some(self.bound);
        if self.verdict == NonSosVerdict::Inconclusive {
            r = r.note("bound is not below 4; no contradiction");
        }
        r
    }
}

/// Reads the pinned coefficients off the dehomogenized form with exact jets
/// at the origin, then forms the bound `18 sqrt(2 lambda)`. The verdict is
/// not-SOS iff the bound is below 4 by more than rounding.
pub fn q_lambda_non_sos_certificate(p: QLambdaParams) -> Result<NonSosCertificate, GalleryError> {
    if !(p.lambda >= 0.0) {
        return Err(GalleryError::Param(format!("lambda = {} must be nonnegative", p.lambda)));
    }
    let q = build_q_lambda_dehomogenized(p);
    let origin = [0.0, 0.0];
    let jet = |i: usize, j: usize| eval_jet(q.get(i, j), &origin, 2);
    let mut norms_sq = [[0.0; 3]; 3];
    for i in 0..3 {
        let d = jet(i, i)?;
        // u = (x, y, 1): squares of x and y are second-order coefficients
        norms_sq[i][0] = d.coefficient(&[2, 0]).unwrap_or(0.0);
        norms_sq[i][1] = d.coefficient(&[0, 2]).unwrap_or(0.0);
        norms_sq[i][2] = d.value();
    }
    let cross = |i: usize, j: usize, mu: [usize; 2]| -> Result<f64, GalleryError> {
        Ok(jet(i, j)?.coefficient(&mu).unwrap_or(0.0))
    };
    let dot_sums = [cross(0, 1, [1, 1])?, cross(0, 2, [1, 0])?, cross(1, 2, [0, 1])?];
    let pair = |a: (usize, usize), b: (usize, usize)| (norms_sq[a.0][a.1] * norms_sq[b.0][b.1]).sqrt();
    let bound = 6.0 * (pair((1, 0), (0, 1)) + pair((2, 1), (1, 2)) + pair((2, 0), (0, 2)));
    let verdict = if bound < 4.0 - 1e-12 {
        NonSosVerdict::NotSosOfLinearForms
    } else {
        NonSosVerdict::Inconclusive
    };
    Ok(NonSosCertificate { lambda: p.lambda, norms_sq, dot_sums, bound, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_values() {
        let q = build_q_lambda(QLambdaParams { lambda: 0.3 }).eval(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(q.diagonal(), vec![1.0, 2.0, 0.3]);
        assert_eq!((q.get(0, 1), q.get(0, 2), q.get(1, 2)), (0.0, 0.0, 0.0));
    }

    #[test]
    fn expression_matches_numeric() {
        let l = 0.07;
        let q = build_q_lambda(QLambdaParams { lambda: l });
        let w = [0.3, -1.2, 0.7];
        let a = q.eval(&w).unwrap();
        let b = q_lambda_at(l, &w);
        assert!(a.sub(&b).unwrap().max_abs() < 1e-15);
        let d = build_q_lambda_dehomogenized(QLambdaParams { lambda: l }).eval(&[0.3, -1.2]).unwrap();
        assert!(d.sub(&q_lambda_at(l, &[0.3, -1.2, 1.0])).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn det_at_ones() {
        let l: f64 = 0.2;
        let want = l.powi(3) + 9.0 * l * l + 24.0 * l + 16.0;
        assert!((det_expansion(l, &[1.0, 1.0, 1.0]) - want).abs() < 1e-12);
        assert!((q_lambda_at(l, &[1.0, 1.0, 1.0]).det() - want).abs() < 1e-12);
    }

    #[test]
    fn lambda_zero_det_vanishes_on_axes() {
        for w in [[1.0, 0.0, 0.0], [0.0, -2.0, 0.0], [0.0, 0.0, 0.5]] {
            assert_eq!(q_lambda_at(0.0, &w).det().abs(), 0.0);
            assert_eq!(det_expansion(0.0, &w), 0.0);
        }
    }

    #[test]
    fn pinned_coefficients() {
        let c = q_lambda_non_sos_certificate(QLambdaParams { lambda: 0.02 }).unwrap();
        assert_eq!(c.norms_sq, [[1.0, 0.02, 2.0], [2.0, 1.0, 0.02], [0.02, 2.0, 1.0]]);
        assert_eq!(c.dot_sums, [-1.0, -1.0, -1.0]);
        assert!((c.bound - 3.6).abs() < 1e-12);
        assert_eq!(c.verdict, NonSosVerdict::NotSosOfLinearForms);
        let edge = q_lambda_non_sos_certificate(QLambdaParams { lambda: NON_SOS_THRESHOLD }).unwrap();
        assert!((edge.bound - 4.0).abs() < 1e-12);
        assert_eq!(edge.verdict, NonSosVerdict::Inconclusive);
    }

    #[test]
    fn positivity_on_sphere() {
        let r = q_lambda_positivity_certificate(QLambdaParams::default(), &GridSpec::sphere(3, 500)).unwrap();
        assert!(r.passed(), "{r:?}");
    }
}

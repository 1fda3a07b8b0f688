use serde::{Deserialize, Serialize};

use super::DecomposeError;
use crate::grid::GridSpec;
use crate::jet::{eval_log, Evaluator, JetError, Node, ScalarExpr};
use crate::report::{BoundRule, CheckReport, Condition, Counts, RatioSweep, Verdict};

/// Which construction produces the factors `g_i` with `sum g_i^2 = f`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BackendId {
    /// One factor: a square root read off the expression tree when `f` is a
    /// recognizable square, otherwise the numeric `sqrt(f)`.
    PrincipalSqrt,
    /// Several factors `r * phi_i` where `r` is the principal root and the
    /// `phi_i` are products of sines and cosines with `sum phi_i^2 = 1`.
    SplitBySignCell,
}

impl BackendId {
    pub fn id(&self) -> &'static str {
        match self {
            BackendId::PrincipalSqrt => "principal-sqrt",
            BackendId::SplitBySignCell => "split-by-sign-cell",
        }
    }
}

/// Scalar sum-of-squares backend with the exponents of the factor contract.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarSosBackend {
    pub id: BackendId,
    pub delta: f64,
    /// Defaults to `2 delta (1 + delta) / (2 + delta)`.
    #[serde(default)]
    pub delta_prime: Option<f64>,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Number of factors for the split backend.
    #[serde(default = "default_cells")]
    pub cells: usize,
    #[serde(default)]
    pub rule: BoundRule,
}

fn default_epsilon() -> f64 {
    0.25
}

fn default_cells() -> usize {
    2
}

/// `2 delta (1 + delta) / (2 + delta)`.
pub fn default_delta_prime(delta: f64) -> f64 {
    2.0 * delta * (1.0 + delta) / (2.0 + delta)
}

impl ScalarSosBackend {
    pub fn principal_sqrt(delta: f64) -> ScalarSosBackend {
        ScalarSosBackend {
            id: BackendId::PrincipalSqrt,
            delta,
            delta_prime: None,
            epsilon: default_epsilon(),
            cells: 1,
            rule: BoundRule::default(),
        }
    }

    pub fn split_by_sign_cell(delta: f64, cells: usize) -> ScalarSosBackend {
        ScalarSosBackend { id: BackendId::SplitBySignCell, cells, ..ScalarSosBackend::principal_sqrt(delta) }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> ScalarSosBackend {
        self.epsilon = epsilon;
        self
    }

    pub fn with_delta_prime(mut self, dp: f64) -> ScalarSosBackend {
        self.delta_prime = Some(dp);
        self
    }

    pub fn delta_prime(&self) -> f64 {
        self.delta_prime.unwrap_or_else(|| default_delta_prime(self.delta))
    }

    /// Exponent of `E` bounding `|grad t|`: `([1 - 2 eps]_+ + delta') / 2`.
    pub fn gradient_exponent(&self) -> f64 {
        0.5 * ((1.0 - 2.0 * self.epsilon).max(0.0) + self.delta_prime())
    }

    /// Exponent of `E` bounding `|hess t|`: `delta^2 / (2 + delta)`.
    pub fn hessian_exponent(&self) -> f64 {
        self.delta * self.delta / (2.0 + self.delta)
    }

    pub fn validate(&self) -> Result<(), DecomposeError> {
        let bad = |s: String| Err(DecomposeError::Param(s));
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta = {} outside (0, 1)", self.delta));
        }
        let dp = self.delta_prime();
        if !(dp > 0.0 && dp < 1.0) {
            return bad(format!("delta' = {dp} outside (0, 1)"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon = {} outside (0, 1)", self.epsilon));
        }
        if self.id == BackendId::SplitBySignCell && !(2..=8).contains(&self.cells) {
            return bad(format!("split backend needs 2..=8 cells, got {}", self.cells));
        }
        Ok(())
    }
}

/// Square root of `f` read off the tree, nonnegative wherever `f` is defined.
/// Recognizes constants, `exp`, flat factors, even powers with exponent
/// divisible by 4, real powers and products of these.
pub fn principal_root(f: &ScalarExpr) -> Option<ScalarExpr> {
    root_on_tree(f, true)
}

/// Some `g` with `g^2 = f`, sign not controlled (`x^2` gives `x`).
pub fn square_factor(f: &ScalarExpr) -> Option<ScalarExpr> {
    root_on_tree(f, false)
}

fn root_on_tree(f: &ScalarExpr, principal: bool) -> Option<ScalarExpr> {
    match f.node() {
        Node::Const { value } if *value >= 0.0 => Some(ScalarExpr::constant(value.sqrt())),
        Node::Exp { arg } => Some((arg * 0.5).exp()),
        Node::Flat { arg, coeff, power } => Some(arg.flat_with(0.5 * coeff, *power)),
        Node::Powi { arg, exponent } if exponent % 2 == 0 && *exponent != 0 => {
            let h = exponent / 2;
            if principal && h % 2 != 0 {
                // |arg|^h is not smooth at zeros of arg
                arg.as_const().map(|c| ScalarExpr::constant(c.abs().powi(h)))
            } else {
                Some(arg.powi(h))
            }
        }
        Node::Pow { arg, exponent } => Some(arg.powf(0.5 * exponent)),
        Node::Product { factors } => {
            let roots: Option<Vec<ScalarExpr>> = factors.iter().map(|g| root_on_tree(g, principal)).collect();
            roots.map(ScalarExpr::product)
        }
        _ => None,
    }
}

/// Factors of a scalar sum of squares and the contract report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarSos {
    pub factors: Vec<ScalarExpr>,
    /// True when the root was read off the tree rather than taken numerically.
    pub structural: bool,
    pub report: CheckReport,
}

fn cell_weights(nvars: usize, cells: usize) -> Vec<ScalarExpr> {
    let angle = |i: usize| {
        let v = ScalarExpr::var(i % nvars.max(1));
        (v * 0.5) + ScalarExpr::constant(0.3 + 0.4 * i as f64)
    };
    let mut out = Vec::with_capacity(cells);
    let mut carry = ScalarExpr::one();
    for i in 0..cells - 1 {
        let th = angle(i);
        out.push(&carry * th.cos());
        carry = &carry * th.sin();
    }
    out.push(carry);
    out
}

/// Factors `g_1..g_I` with `sum g_i^2 = f`, and a report on the factor
/// contract: `|t| <= E^(1/2)`, `|grad t| <~ E^a`, `|hess t| <~ E^b`.
pub fn scalar_sos(
    f: &ScalarExpr,
    backend: &ScalarSosBackend,
    grid: &GridSpec,
) -> Result<ScalarSos, DecomposeError> {
    backend.validate()?;
    let samples = grid.samples();
    for x in &samples.points {
        let v = Evaluator::new(x, 0)?.value(f)?;
        if v < 0.0 {
            return Err(DecomposeError::Negative { point: x.clone(), value: v });
        }
    }
    let (root, structural) = match principal_root(f) {
        Some(r) => (r, true),
        None => match square_factor(f) {
            Some(r) => (r, true),
            None => (f.sqrt(), false),
        },
    };
    let factors = match backend.id {
        BackendId::PrincipalSqrt => vec![root],
        BackendId::SplitBySignCell => {
            cell_weights(grid.nvars, backend.cells).into_iter().map(|w| &root * w).collect()
        }
    };
    let mut report = contract_report(f, &factors, backend, grid, &samples.points)?;
    report.counts.excluded += samples.excluded;
    if !structural {
        report = report.note("square root taken numerically");
        if report.verdict == Verdict::Fail {
            report = report.note("numeric root fails the smoothness bounds; supply f as a declared square or try another backend");
        }
    }
    report = report
        .param("delta", backend.delta)
        .param("delta_prime", backend.delta_prime())
        .param("epsilon", backend.epsilon)
        .detail("backend", backend.id.id())
        .detail("factors", factors.len());
    Ok(ScalarSos { factors, structural, report })
}

fn contract_report(
    f: &ScalarExpr,
    factors: &[ScalarExpr],
    backend: &ScalarSosBackend,
    grid: &GridSpec,
    points: &[Vec<f64>],
) -> Result<CheckReport, DecomposeError> {
    let ga = backend.gradient_exponent();
    let ha = backend.hessian_exponent();
    let mut identity = 0.0f64;
    let mut identity_at: Option<Vec<f64>> = None;
    let mut value = RatioSweep::new();
    let mut grad = RatioSweep::new();
    let mut hess = RatioSweep::new();
    let mut counts = Counts::default();
    for x in points {
        let r = grid.radius(x);
        let mut ev = Evaluator::new(x, 2)?;
        let fv = ev.value(f)?;
        let le = eval_log(f, x)?;
        let mut jets = Vec::with_capacity(factors.len());
        let mut undefined = false;
        for g in factors {
            match ev.jet(g) {
                Ok(j) => jets.push(j),
                Err(JetError::Domain { .. }) => {
                    undefined = true;
                    break;
                }
                Err(e) => return Err(e.into()),
            }
        }
        if undefined {
            // numeric root at a zero of f
            counts.flagged += 1;
            counts.excluded += 1;
            continue;
        }
        counts.evaluated += 1;
        let s: f64 = jets.iter().map(|j| j.value() * j.value()).sum();
        let rel = (s - fv).abs() / fv.abs().max(f64::MIN_POSITIVE);
        let rel = if s == fv { 0.0 } else { rel };
        if rel > identity || identity_at.is_none() {
            identity = identity.max(rel);
            identity_at = Some(x.clone());
        }
        let pow = |a: f64| if le.is_zero() { 0.0 } else { (a * le.ln_abs).exp() };
        for j in &jets {
            value.push(r, x, j.value(), pow(0.5));
            grad.push(r, x, j.tensor_norm(1), pow(ga));
            hess.push(r, x, j.tensor_norm(2), pow(ha));
        }
    }
    let mut id = CheckReport::new(
        Condition::Reconstruction,
        if identity <= 1e-10 { Verdict::Pass } else { Verdict::Fail },
    );
    id.worst_ratio = Some(identity);
    id.witness = identity_at;
    id.counts = counts.clone();
    id.label = Some("sum of squares identity".into());
    // the value bound is exact, not up to a constant
    let exact = BoundRule { c_max: 1.0 + 1e-12, slope_tol: f64::INFINITY, inner_share: 1.0 };
    let mut v = value.report(Condition::PivotSosContract, &exact);
    v.label = Some("|t| <= E^(1/2)".into());
    let mut g = grad.report(Condition::PivotSosContract, &backend.rule).param("exponent", ga);
    g.label = Some("|grad t| <~ E^a".into());
    let mut h = hess.report(Condition::PivotSosContract, &backend.rule).param("exponent", ha);
    h.label = Some("|hess t| <~ E^b".into());
    let mut rep = CheckReport::combine(Condition::PivotSosContract, vec![id, v, g, h]);
    if counts.flagged > 0 {
        rep.counts.flagged = counts.flagged;
        rep = rep.note("numeric root undefined at zeros of f; those samples are excluded");
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> GridSpec {
        GridSpec::shells(1, 0.02, 1.0, 40, 2)
    }

    #[test]
    fn constant_has_single_root() {
        let s = scalar_sos(&ScalarExpr::constant(9.0), &ScalarSosBackend::principal_sqrt(0.1), &line()).unwrap();
        assert_eq!(s.factors, vec![ScalarExpr::constant(3.0)]);
        assert!(s.report.passed());
    }

    #[test]
    fn flat_root_is_structural() {
        let x = ScalarExpr::var(0);
        let f = x.flat_with(2.0, 2.0);
        let s = scalar_sos(&f, &ScalarSosBackend::principal_sqrt(0.1), &line()).unwrap();
        assert!(s.structural);
        assert_eq!(s.factors[0], x.flat());
        assert!(s.report.passed(), "{:?}", s.report);
    }

    #[test]
    fn quartic_fails_hessian_bound() {
        let x = ScalarExpr::var(0);
        let s = scalar_sos(&x.powi(4), &ScalarSosBackend::principal_sqrt(0.5), &line()).unwrap();
        assert_eq!(s.factors[0], x.powi(2));
        assert_eq!(s.report.verdict, Verdict::Fail);
    }

    #[test]
    fn split_factors_sum_to_f() {
        let x = ScalarExpr::var(0);
        let y = ScalarExpr::var(1);
        let f = (x.powi(2) + y.powi(2) + 1.0).exp();
        let g = GridSpec::cube(2, -1.0, 1.0, 5);
        let s = scalar_sos(&f, &ScalarSosBackend::split_by_sign_cell(0.1, 3), &g).unwrap();
        assert_eq!(s.factors.len(), 3);
        let id = &s.report.parts[0];
        assert!(id.worst_ratio.unwrap() <= 1e-12);
    }

    #[test]
    fn negative_input_is_rejected() {
        let x = ScalarExpr::var(0);
        let e = scalar_sos(&(x - 0.5), &ScalarSosBackend::principal_sqrt(0.1), &line());
        assert!(matches!(e, Err(DecomposeError::Negative { .. })));
    }

    #[test]
    fn odd_half_power_is_not_principal() {
        let x = ScalarExpr::var(0);
        assert!(principal_root(&x.powi(2)).is_none());
        assert_eq!(principal_root(&x.powi(4)), Some(x.powi(2)));
        assert_eq!(square_factor(&x.powi(2)), Some(x.clone()));
    }
}

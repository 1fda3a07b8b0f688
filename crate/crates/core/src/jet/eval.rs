use std::collections::HashMap;
use std::sync::Arc;

use super::expr::{Node, RecipDomain, ScalarExpr};
use super::taylor::{self, Jet4, Layout, Taylor, MAX_ORDER, MAX_VARS};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JetError {
    #[error("expression uses variable {index} but the point has {got} coordinates")]
    VarCount { index: usize, got: usize },
    #[error("{got} variables requested, at most {MAX_VARS} supported")]
    TooManyVars { got: usize },
    #[error("derivative order {0} exceeds the supported maximum of 4")]
    Order(usize),
    #[error("{node} evaluated outside its domain (argument {value}) at {point:?}")]
    Domain { node: &'static str, value: f64, point: Vec<f64> },
    #[error("{node} produced a non-finite value at {point:?}")]
    NonFinite { node: &'static str, point: Vec<f64> },
}

fn kind(node: &Node) -> &'static str {
    match node {
        Node::Var { .. } => "var",
        Node::Const { .. } => "const",
        Node::Sum { .. } => "sum",
        Node::Product { .. } => "product",
        Node::Neg { .. } => "neg",
        Node::Powi { .. } => "powi",
        Node::Pow { .. } => "pow",
        Node::Recip { .. } => "recip",
        Node::Sqrt { .. } => "sqrt",
        Node::Exp { .. } => "exp",
        Node::Ln { .. } => "ln",
        Node::Sin { .. } => "sin",
        Node::Cos { .. } => "cos",
        Node::Abs { .. } => "abs",
        Node::Flat { .. } => "flat",
        Node::Bump { .. } => "bump",
    }
}

/// Memoizing jet evaluator for one point and order.
///
/// Shared subtrees are evaluated once, so a whole matrix of entries built
/// from common pieces can be evaluated through a single instance.
pub struct Evaluator {
    point: Vec<f64>,
    layout: Arc<Layout>,
    // the expression is kept alive so its address cannot be reused
    memo: HashMap<usize, (ScalarExpr, Taylor)>,
    values: Option<Box<Evaluator>>,
}

impl Evaluator {
    pub fn new(point: &[f64], order: usize) -> Result<Evaluator, JetError> {
        if order > MAX_ORDER {
            return Err(JetError::Order(order));
        }
        if point.len() > MAX_VARS {
            return Err(JetError::TooManyVars { got: point.len() });
        }
        Ok(Evaluator {
            point: point.to_vec(),
            layout: Layout::get(point.len().max(1), order),
            memo: HashMap::new(),
            values: None,
        })
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn jet(&mut self, e: &ScalarExpr) -> Result<Jet4, JetError> {
        let t = self.eval(e)?;
        Ok(Jet4::new(self.point.clone(), t))
    }

    pub fn value(&mut self, e: &ScalarExpr) -> Result<f64, JetError> {
        if self.layout.order == 0 {
            return Ok(self.eval(e)?.value());
        }
        if self.values.is_none() {
            self.values = Some(Box::new(Evaluator::new(&self.point, 0)?));
        }
        Ok(self.values.as_mut().unwrap().eval(e)?.value())
    }

    fn domain(&self, node: &'static str, value: f64) -> JetError {
        JetError::Domain { node, value, point: self.point.clone() }
    }

    /// Structural zero: a flat primitive at its flat point, a bump outside its
    /// support, or any product/power containing one. Such a node has the zero
    /// jet whatever its cofactors are.
    pub fn flat_zero(&mut self, e: &ScalarExpr) -> Result<bool, JetError> {
        Ok(match e.node() {
            Node::Const { value } => *value == 0.0,
            Node::Flat { arg, .. } => self.value(arg)? == 0.0,
            Node::Bump { arg } => self.value(arg)?.abs() >= 1.0,
            Node::Product { factors } => {
                for f in factors {
                    if self.flat_zero(f)? {
                        return Ok(true);
                    }
                }
                false
            }
            Node::Sum { terms } => {
                for t in terms {
                    if !self.flat_zero(t)? {
                        return Ok(false);
                    }
                }
                true
            }
            Node::Powi { arg, exponent } if *exponent > 0 => self.flat_zero(arg)?,
            Node::Pow { arg, exponent } if *exponent > 0.0 => self.flat_zero(arg)?,
            Node::Sqrt { arg } | Node::Neg { arg } | Node::Abs { arg } => self.flat_zero(arg)?,
            _ => false,
        })
    }

    fn eval(&mut self, e: &ScalarExpr) -> Result<Taylor, JetError> {
        let key = e.key();
        if let Some((_, t)) = self.memo.get(&key) {
            return Ok(t.clone());
        }
        let t = self.eval_node(e)?;
        if !t.is_finite() {
            return Err(JetError::NonFinite { node: kind(e.node()), point: self.point.clone() });
        }
        self.memo.insert(key, (e.clone(), t.clone()));
        Ok(t)
    }

    fn eval_node(&mut self, e: &ScalarExpr) -> Result<Taylor, JetError> {
        let order = self.layout.order;
        let l = self.layout.clone();
        Ok(match e.node() {
            Node::Var { index } => {
                if *index >= self.point.len() {
                    return Err(JetError::VarCount { index: *index, got: self.point.len() });
                }
                Taylor::variable(&l, *index, self.point[*index])
            }
            Node::Const { value } => Taylor::constant(&l, *value),
            Node::Sum { terms } => {
                let mut acc = Taylor::zero(&l);
                for t in terms {
                    let v = self.eval(t)?;
                    acc.add_assign(&v);
                }
                acc
            }
            Node::Product { factors } => {
                for f in factors {
                    if self.flat_zero(f)? {
                        return Ok(Taylor::zero(&l));
                    }
                }
                // an overflowing cofactor of an underflowed flat factor is not an error
                let mut parts = Vec::with_capacity(factors.len());
                let mut overflow = None;
                for f in factors {
                    match self.eval(f) {
                        Ok(p) => parts.push(p),
                        Err(e @ JetError::NonFinite { .. }) => overflow = Some(e),
                        Err(e) => return Err(e),
                    }
                }
                if parts.iter().any(|p| p.is_zero()) {
                    return Ok(Taylor::zero(&l));
                }
                if let Some(e) = overflow {
                    return Err(e);
                }
                let mut acc = parts[0].clone();
                for p in &parts[1..] {
                    acc = acc.mul(p);
                }
                acc
            }
            Node::Neg { arg } => self.eval(arg)?.scale(-1.0),
            Node::Powi { arg, exponent } => {
                if *exponent > 0 && self.flat_zero(arg)? {
                    return Ok(Taylor::zero(&l));
                }
                let a = self.eval(arg)?;
                if *exponent < 0 && a.value() == 0.0 {
                    return Err(self.domain("powi", 0.0));
                }
                a.compose(&taylor::powi_coeffs(a.value(), *exponent))
            }
            Node::Pow { arg, exponent } => {
                if *exponent > 0.0 && self.flat_zero(arg)? {
                    return Ok(Taylor::zero(&l));
                }
                let a = self.eval(arg)?;
                let a0 = a.value();
                if a0 < 0.0 || (a0 == 0.0 && (*exponent < 0.0 || order > 0)) {
                    return Err(self.domain("pow", a0));
                }
                if a0 == 0.0 {
                    Taylor::zero(&l)
                } else {
                    a.compose(&taylor::pow_coeffs(a0, *exponent))
                }
            }
            Node::Recip { arg, domain } => {
                let a = self.eval(arg)?;
                let a0 = a.value();
                let ok = match domain {
                    RecipDomain::Positive => a0 > 0.0,
                    RecipDomain::Nonzero => a0 != 0.0,
                };
                if !ok {
                    return Err(self.domain("recip", a0));
                }
                a.compose(&taylor::recip_coeffs(a0))
            }
            Node::Sqrt { arg } => {
                if self.flat_zero(arg)? {
                    return Ok(Taylor::zero(&l));
                }
                let a = self.eval(arg)?;
                let a0 = a.value();
                if a0 < 0.0 || (a0 == 0.0 && order > 0) {
                    return Err(self.domain("sqrt", a0));
                }
                if a0 == 0.0 {
                    Taylor::zero(&l)
                } else {
                    a.compose(&taylor::pow_coeffs(a0, 0.5))
                }
            }
            Node::Exp { arg } => {
                let a = self.eval(arg)?;
                a.compose(&taylor::exp_coeffs(a.value()))
            }
            Node::Ln { arg } => {
                let a = self.eval(arg)?;
                if a.value() <= 0.0 {
                    return Err(self.domain("ln", a.value()));
                }
                a.compose(&taylor::ln_coeffs(a.value()))
            }
            Node::Sin { arg } => {
                let a = self.eval(arg)?;
                a.compose(&taylor::sin_coeffs(a.value()))
            }
            Node::Cos { arg } => {
                let a = self.eval(arg)?;
                a.compose(&taylor::cos_coeffs(a.value()))
            }
            Node::Abs { arg } => {
                if self.flat_zero(arg)? {
                    return Ok(Taylor::zero(&l));
                }
                let a = self.eval(arg)?;
                let a0 = a.value();
                if a0 == 0.0 && order > 0 {
                    return Err(self.domain("abs", a0));
                }
                if a0 < 0.0 {
                    a.scale(-1.0)
                } else {
                    a
                }
            }
            Node::Flat { arg, coeff, power } => {
                let a = self.eval(arg)?;
                let a0 = a.value();
                if a0 == 0.0 {
                    return Ok(Taylor::zero(&l));
                }
                let f = taylor::flat_coeffs(a0, *coeff, *power, order);
                if f.iter().all(|&v| v == 0.0) {
                    return Ok(Taylor::zero(&l));
                }
                a.compose(&f)
            }
            Node::Bump { arg } => {
                let a = self.eval(arg)?;
                let f = taylor::bump_coeffs(a.value(), order);
                if f.iter().all(|&v| v == 0.0) {
                    return Ok(Taylor::zero(&l));
                }
                a.compose(&f)
            }
        })
    }
}

/// All mixed partials of `expr` at `point` up to total order `order` (≤ 4).
pub fn eval_jet(expr: &ScalarExpr, point: &[f64], order: usize) -> Result<Jet4, JetError> {
    Evaluator::new(point, order)?.jet(expr)
}

/// Value of `expr` at `point`.
pub fn eval(expr: &ScalarExpr, point: &[f64]) -> Result<f64, JetError> {
    Evaluator::new(point, 0)?.value(expr)
}

/// Signed log-magnitude `sign * exp(ln_abs)`, used where values underflow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogValue {
    pub sign: f64,
    pub ln_abs: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue { sign: 0.0, ln_abs: f64::NEG_INFINITY };

    pub fn from_f64(v: f64) -> LogValue {
        if v == 0.0 {
            LogValue::ZERO
        } else {
            LogValue { sign: v.signum(), ln_abs: v.abs().ln() }
        }
    }

    pub fn to_f64(self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.ln_abs.exp()
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0.0
    }
}

/// Value of `expr` in signed log-magnitude form.
///
/// Flat and bump primitives contribute their exponent exactly, so ratios of
/// quantities far below the smallest positive double stay measurable.
pub fn eval_log(expr: &ScalarExpr, point: &[f64]) -> Result<LogValue, JetError> {
    let mut memo = HashMap::new();
    log_inner(expr, point, &mut memo)
}

fn log_inner(
    e: &ScalarExpr,
    point: &[f64],
    memo: &mut HashMap<usize, LogValue>,
) -> Result<LogValue, JetError> {
    if let Some(v) = memo.get(&e.key()) {
        return Ok(*v);
    }
    let dom = |node, value| JetError::Domain { node, value, point: point.to_vec() };
    let v = match e.node() {
        Node::Var { index } => {
            let x = *point.get(*index).ok_or(JetError::VarCount { index: *index, got: point.len() })?;
            LogValue::from_f64(x)
        }
        Node::Const { value } => LogValue::from_f64(*value),
        Node::Sum { terms } => {
            let parts: Vec<LogValue> =
                terms.iter().map(|t| log_inner(t, point, memo)).collect::<Result<_, _>>()?;
            let m = parts.iter().filter(|p| !p.is_zero()).map(|p| p.ln_abs).fold(f64::NEG_INFINITY, f64::max);
            if m == f64::NEG_INFINITY {
                LogValue::ZERO
            } else {
                let s: f64 = parts.iter().filter(|p| !p.is_zero()).map(|p| p.sign * (p.ln_abs - m).exp()).sum();
                if s == 0.0 {
                    LogValue::ZERO
                } else {
                    LogValue { sign: s.signum(), ln_abs: m + s.abs().ln() }
                }
            }
        }
        Node::Product { factors } => {
            let mut acc = LogValue { sign: 1.0, ln_abs: 0.0 };
            for f in factors {
                let v = log_inner(f, point, memo)?;
                if v.is_zero() {
                    acc = LogValue::ZERO;
                    break;
                }
                acc.sign *= v.sign;
                acc.ln_abs += v.ln_abs;
            }
            acc
        }
        Node::Neg { arg } => {
            let v = log_inner(arg, point, memo)?;
            LogValue { sign: -v.sign, ln_abs: v.ln_abs }
        }
        Node::Powi { arg, exponent } => {
            let v = log_inner(arg, point, memo)?;
            if v.is_zero() {
                if *exponent < 0 {
                    return Err(dom("powi", 0.0));
                }
                LogValue::ZERO
            } else {
                let sign = if exponent % 2 == 0 { 1.0 } else { v.sign };
                LogValue { sign, ln_abs: *exponent as f64 * v.ln_abs }
            }
        }
        Node::Pow { arg, exponent } => {
            let v = log_inner(arg, point, memo)?;
            if v.sign < 0.0 || (v.is_zero() && *exponent < 0.0) {
                return Err(dom("pow", v.to_f64()));
            }
            if v.is_zero() {
                LogValue::ZERO
            } else {
                LogValue { sign: 1.0, ln_abs: exponent * v.ln_abs }
            }
        }
        Node::Recip { arg, domain } => {
            let v = log_inner(arg, point, memo)?;
            let ok = match domain {
                RecipDomain::Positive => v.sign > 0.0,
                RecipDomain::Nonzero => v.sign != 0.0,
            };
            if !ok {
                return Err(dom("recip", v.to_f64()));
            }
            LogValue { sign: v.sign, ln_abs: -v.ln_abs }
        }
        Node::Sqrt { arg } => {
            let v = log_inner(arg, point, memo)?;
            if v.sign < 0.0 {
                return Err(dom("sqrt", v.to_f64()));
            }
            if v.is_zero() {
                LogValue::ZERO
            } else {
                LogValue { sign: 1.0, ln_abs: 0.5 * v.ln_abs }
            }
        }
        Node::Exp { arg } => LogValue { sign: 1.0, ln_abs: log_inner(arg, point, memo)?.to_f64() },
        Node::Ln { arg } => {
            let v = log_inner(arg, point, memo)?;
            if v.sign <= 0.0 {
                return Err(dom("ln", v.to_f64()));
            }
            LogValue::from_f64(v.ln_abs)
        }
        Node::Sin { arg } => LogValue::from_f64(log_inner(arg, point, memo)?.to_f64().sin()),
        Node::Cos { arg } => LogValue::from_f64(log_inner(arg, point, memo)?.to_f64().cos()),
        Node::Abs { arg } => {
            let v = log_inner(arg, point, memo)?;
            LogValue { sign: v.sign.abs(), ln_abs: v.ln_abs }
        }
        Node::Flat { arg, coeff, power } => {
            let v = log_inner(arg, point, memo)?;
            if v.is_zero() {
                LogValue::ZERO
            } else {
                LogValue { sign: 1.0, ln_abs: -coeff * (-power * v.ln_abs).exp() }
            }
        }
        Node::Bump { arg } => {
            let u = log_inner(arg, point, memo)?.to_f64();
            if u.abs() >= 1.0 {
                LogValue::ZERO
            } else {
                LogValue { sign: 1.0, ln_abs: 1.0 - 1.0 / (1.0 - u * u) }
            }
        }
    };
    memo.insert(e.key(), v);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> ScalarExpr {
        ScalarExpr::var(0)
    }

    #[test]
    fn square_at_three() {
        let j = eval_jet(&x().powi(2), &[3.0], 2).unwrap();
        assert_eq!(j.value(), 9.0);
        assert_eq!(j.partial(&[1]), Some(6.0));
        assert_eq!(j.partial(&[2]), Some(2.0));
        assert_eq!(j.partial(&[3]), None);
    }

    #[test]
    fn flat_at_origin_is_zero_jet() {
        let j = eval_jet(&x().flat(), &[0.0], 4).unwrap();
        assert!(j.entries().iter().all(|(_, v)| *v == 0.0));
    }

    #[test]
    fn flat_times_singular_factor_at_origin() {
        // t^-3 * exp(-1/t^2) is smooth with zero jet at the origin
        let e = x().powi(-3) * x().flat();
        let j = eval_jet(&e, &[0.0], 4).unwrap();
        assert!(j.entries().iter().all(|(_, v)| *v == 0.0));
        // and far below the underflow threshold too
        let j = eval_jet(&e, &[1e-200], 4).unwrap();
        assert!(j.entries().iter().all(|(_, v)| *v == 0.0));
    }

    #[test]
    fn reciprocal_domain_errors() {
        let e = (x() - 1.0).recip();
        assert!(matches!(eval(&e, &[0.5]), Err(JetError::Domain { node: "recip", .. })));
        assert!(eval(&e, &[1.5]).is_ok());
    }

    #[test]
    fn missing_coordinate_is_reported() {
        let e = ScalarExpr::var(2);
        assert!(matches!(eval(&e, &[1.0, 2.0]), Err(JetError::VarCount { index: 2, got: 2 })));
        assert!(matches!(eval_jet(&x(), &[0.0], 5), Err(JetError::Order(5))));
    }

    #[test]
    fn sqrt_root_at_zero() {
        let e = x().abs().powf(0.5);
        assert_eq!(eval(&e, &[0.0]).unwrap(), 0.0);
        assert!(eval_jet(&e, &[0.0], 1).is_err());
        assert!(eval(&x().sqrt(), &[-1.0]).is_err());
    }

    #[test]
    fn log_eval_below_underflow() {
        // ln exp(-1/t^2)^4 at t = 0.01 is -40000
        let e = x().flat().powi(4) * x().powi(8);
        let v = eval_log(&e, &[0.01]).unwrap();
        assert_eq!(v.sign, 1.0);
        let expect = -40000.0 + 8.0 * 0.01f64.ln();
        assert!((v.ln_abs - expect).abs() < 1e-9 * expect.abs());
        assert_eq!(eval(&e, &[0.01]).unwrap(), 0.0);
    }

    #[test]
    fn log_eval_signed_sum() {
        let e = x() - 3.0;
        let v = eval_log(&e, &[1.0]).unwrap();
        assert_eq!(v.sign, -1.0);
        assert!((v.to_f64() + 2.0).abs() < 1e-15);
    }
}

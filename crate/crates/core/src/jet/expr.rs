use std::fmt;
use std::ops;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Where a reciprocal is allowed to be evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecipDomain {
    /// Argument must be strictly positive.
    Positive,
    /// Argument must be nonzero.
    Nonzero,
}

/// One node of an expression tree.
///
/// The serialized form is a JSON object tagged by `kind`; children sit under
/// `arg` (unary), `terms` (sum) or `factors` (product), parameters under their
/// own names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Var { index: usize },
    Const { value: f64 },
    Sum { terms: Vec<ScalarExpr> },
    Product { factors: Vec<ScalarExpr> },
    Neg { arg: ScalarExpr },
    Powi { arg: ScalarExpr, exponent: i32 },
    Pow { arg: ScalarExpr, exponent: f64 },
    Recip { arg: ScalarExpr, domain: RecipDomain },
    Sqrt { arg: ScalarExpr },
    Exp { arg: ScalarExpr },
    Ln { arg: ScalarExpr },
    Sin { arg: ScalarExpr },
    Cos { arg: ScalarExpr },
    Abs { arg: ScalarExpr },
    /// `exp(-coeff * |t|^(-power))`, extended by 0 at `t = 0`.
    Flat { arg: ScalarExpr, coeff: f64, power: f64 },
    /// `exp(1 - 1/(1 - u^2))` on `|u| < 1`, 0 elsewhere.
    Bump { arg: ScalarExpr },
}

/// Scalar function of up to 8 real variables, stored as a shared tree.
///
/// Cloning is cheap. Builders fold constants and flatten nested sums and
/// products but perform no other simplification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScalarExpr(Arc<Node>);

impl ScalarExpr {
    pub fn from_node(node: Node) -> Self {
        ScalarExpr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn key(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn var(index: usize) -> Self {
        Self::from_node(Node::Var { index })
    }

    pub fn constant(value: f64) -> Self {
        Self::from_node(Node::Const { value })
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const { value } => Some(*value),
            _ => None,
        }
    }

    /// True when the tree is the literal constant 0.
    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn sum(terms: Vec<ScalarExpr>) -> Self {
        let mut flat = Vec::with_capacity(terms.len());
        let mut c = 0.0;
        for t in terms {
            match t.node() {
                Node::Const { value } => c += value,
                Node::Sum { terms } => {
                    for s in terms {
                        match s.node() {
                            Node::Const { value } => c += value,
                            _ => flat.push(s.clone()),
                        }
                    }
                }
                _ => flat.push(t),
            }
        }
        if c != 0.0 {
            flat.push(Self::constant(c));
        }
        match flat.len() {
            0 => Self::zero(),
            1 => flat.pop().unwrap(),
            _ => Self::from_node(Node::Sum { terms: flat }),
        }
    }

    pub fn product(factors: Vec<ScalarExpr>) -> Self {
        let mut flat = Vec::with_capacity(factors.len());
        let mut c = 1.0;
        for f in factors {
            match f.node() {
                Node::Const { value } => c *= value,
                Node::Product { factors } => {
                    for g in factors {
                        match g.node() {
                            Node::Const { value } => c *= value,
                            _ => flat.push(g.clone()),
                        }
                    }
                }
                _ => flat.push(f),
            }
        }
        if c == 0.0 {
            return Self::zero();
        }
        if c != 1.0 {
            flat.insert(0, Self::constant(c));
        }
        match flat.len() {
            0 => Self::one(),
            1 => flat.pop().unwrap(),
            _ => Self::from_node(Node::Product { factors: flat }),
        }
    }

    pub fn neg(&self) -> Self {
        match self.node() {
            Node::Const { value } => Self::constant(-value),
            Node::Neg { arg } => arg.clone(),
            _ => Self::from_node(Node::Neg { arg: self.clone() }),
        }
    }

    pub fn powi(&self, exponent: i32) -> Self {
        match (self.node(), exponent) {
            (_, 1) => self.clone(),
            (_, 0) => Self::one(),
            (Node::Const { value }, n) if n > 0 || *value != 0.0 => Self::constant(value.powi(n)),
            _ => Self::from_node(Node::Powi { arg: self.clone(), exponent }),
        }
    }

    /// Real power; the argument must stay nonnegative (positive when
    /// derivatives are requested).
    pub fn powf(&self, exponent: f64) -> Self {
        if exponent == 1.0 {
            return self.clone();
        }
        if exponent == 0.0 {
            return Self::one();
        }
        match self.node() {
            Node::Const { value } if *value > 0.0 => Self::constant(value.powf(exponent)),
            _ => Self::from_node(Node::Pow { arg: self.clone(), exponent }),
        }
    }

    /// Reciprocal with a positivity domain.
    pub fn recip(&self) -> Self {
        self.recip_in(RecipDomain::Positive)
    }

    pub fn recip_in(&self, domain: RecipDomain) -> Self {
        match self.node() {
            Node::Const { value } if *value != 0.0 => {
                if domain == RecipDomain::Positive && *value < 0.0 {
                    Self::from_node(Node::Recip { arg: self.clone(), domain })
                } else {
                    Self::constant(1.0 / value)
                }
            }
            _ => Self::from_node(Node::Recip { arg: self.clone(), domain }),
        }
    }

    pub fn sqrt(&self) -> Self {
        match self.node() {
            Node::Const { value } if *value >= 0.0 => Self::constant(value.sqrt()),
            _ => Self::from_node(Node::Sqrt { arg: self.clone() }),
        }
    }

    pub fn exp(&self) -> Self {
        match self.node() {
            Node::Const { value } => Self::constant(value.exp()),
            _ => Self::from_node(Node::Exp { arg: self.clone() }),
        }
    }

    pub fn ln(&self) -> Self {
        match self.node() {
            Node::Const { value } if *value > 0.0 => Self::constant(value.ln()),
            _ => Self::from_node(Node::Ln { arg: self.clone() }),
        }
    }

    pub fn sin(&self) -> Self {
        Self::from_node(Node::Sin { arg: self.clone() })
    }

    pub fn cos(&self) -> Self {
        Self::from_node(Node::Cos { arg: self.clone() })
    }

    pub fn abs(&self) -> Self {
        match self.node() {
            Node::Const { value } => Self::constant(value.abs()),
            _ => Self::from_node(Node::Abs { arg: self.clone() }),
        }
    }

    /// `exp(-1/t^2)` composed with this expression.
    pub fn flat(&self) -> Self {
        self.flat_with(1.0, 2.0)
    }

    /// `exp(-coeff * |t|^(-power))` composed with this expression.
    pub fn flat_with(&self, coeff: f64, power: f64) -> Self {
        Self::from_node(Node::Flat { arg: self.clone(), coeff, power })
    }

    pub fn bump(&self) -> Self {
        Self::from_node(Node::Bump { arg: self.clone() })
    }

    /// Number of coordinates a point needs for this expression.
    pub fn nvars(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |node| {
            if let Node::Var { index } = node {
                n = n.max(index + 1);
            }
        });
        n
    }

    /// Number of distinct nodes (shared subtrees counted once).
    pub fn node_count(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        fn walk(e: &ScalarExpr, seen: &mut std::collections::HashSet<usize>) {
            if !seen.insert(e.key()) {
                return;
            }
            for c in e.children() {
                walk(c, seen);
            }
        }
        walk(self, &mut seen);
        seen.len()
    }

    pub fn children(&self) -> Vec<&ScalarExpr> {
        match self.node() {
            Node::Var { .. } | Node::Const { .. } => vec![],
            Node::Sum { terms } => terms.iter().collect(),
            Node::Product { factors } => factors.iter().collect(),
            Node::Neg { arg }
            | Node::Powi { arg, .. }
            | Node::Pow { arg, .. }
            | Node::Recip { arg, .. }
            | Node::Sqrt { arg }
            | Node::Exp { arg }
            | Node::Ln { arg }
            | Node::Sin { arg }
            | Node::Cos { arg }
            | Node::Abs { arg }
            | Node::Flat { arg, .. }
            | Node::Bump { arg } => vec![arg],
        }
    }

    fn visit(&self, f: &mut dyn FnMut(&Node)) {
        f(self.node());
        for c in self.children() {
            c.visit(f);
        }
    }

    /// Replace variable `index` by `value` everywhere.
    pub fn substitute(&self, index: usize, value: &ScalarExpr) -> ScalarExpr {
        let mut memo = std::collections::HashMap::new();
        self.subst_inner(index, value, &mut memo)
    }

    fn subst_inner(
        &self,
        index: usize,
        value: &ScalarExpr,
        memo: &mut std::collections::HashMap<usize, ScalarExpr>,
    ) -> ScalarExpr {
        if let Some(e) = memo.get(&self.key()) {
            return e.clone();
        }
        let mut s = |e: &ScalarExpr| e.subst_inner(index, value, memo);
        let out = match self.node() {
            Node::Var { index: i } if *i == index => value.clone(),
            Node::Var { .. } | Node::Const { .. } => self.clone(),
            Node::Sum { terms } => ScalarExpr::sum(terms.iter().map(&mut s).collect()),
            Node::Product { factors } => ScalarExpr::product(factors.iter().map(&mut s).collect()),
            Node::Neg { arg } => s(arg).neg(),
            Node::Powi { arg, exponent } => s(arg).powi(*exponent),
            Node::Pow { arg, exponent } => s(arg).powf(*exponent),
            Node::Recip { arg, domain } => s(arg).recip_in(*domain),
            Node::Sqrt { arg } => s(arg).sqrt(),
            Node::Exp { arg } => s(arg).exp(),
            Node::Ln { arg } => s(arg).ln(),
            Node::Sin { arg } => s(arg).sin(),
            Node::Cos { arg } => s(arg).cos(),
            Node::Abs { arg } => s(arg).abs(),
            Node::Flat { arg, coeff, power } => s(arg).flat_with(*coeff, *power),
            Node::Bump { arg } => s(arg).bump(),
        };
        memo.insert(self.key(), out.clone());
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("expression trees always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

impl From<f64> for ScalarExpr {
    fn from(v: f64) -> Self {
        ScalarExpr::constant(v)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl ops::$tr<ScalarExpr> for ScalarExpr {
            type Output = ScalarExpr;
            fn $m(self, rhs: ScalarExpr) -> ScalarExpr {
                let f: fn(&ScalarExpr, &ScalarExpr) -> ScalarExpr = $body;
                f(&self, &rhs)
            }
        }
        impl ops::$tr<&ScalarExpr> for &ScalarExpr {
            type Output = ScalarExpr;
            fn $m(self, rhs: &ScalarExpr) -> ScalarExpr {
                let f: fn(&ScalarExpr, &ScalarExpr) -> ScalarExpr = $body;
                f(self, rhs)
            }
        }
        impl ops::$tr<&ScalarExpr> for ScalarExpr {
            type Output = ScalarExpr;
            fn $m(self, rhs: &ScalarExpr) -> ScalarExpr {
                let f: fn(&ScalarExpr, &ScalarExpr) -> ScalarExpr = $body;
                f(&self, rhs)
            }
        }
        impl ops::$tr<ScalarExpr> for &ScalarExpr {
            type Output = ScalarExpr;
            fn $m(self, rhs: ScalarExpr) -> ScalarExpr {
                let f: fn(&ScalarExpr, &ScalarExpr) -> ScalarExpr = $body;
                f(self, &rhs)
            }
        }
        impl ops::$tr<f64> for ScalarExpr {
            type Output = ScalarExpr;
            fn $m(self, rhs: f64) -> ScalarExpr {
                let f: fn(&ScalarExpr, &ScalarExpr) -> ScalarExpr = $body;
                f(&self, &ScalarExpr::constant(rhs))
            }
        }
        impl ops::$tr<f64> for &ScalarExpr {
            type Output = ScalarExpr;
            fn $m(self, rhs: f64) -> ScalarExpr {
                let f: fn(&ScalarExpr, &ScalarExpr) -> ScalarExpr = $body;
                f(self, &ScalarExpr::constant(rhs))
            }
        }
        impl ops::$tr<ScalarExpr> for f64 {
            type Output = ScalarExpr;
            fn $m(self, rhs: ScalarExpr) -> ScalarExpr {
                let f: fn(&ScalarExpr, &ScalarExpr) -> ScalarExpr = $body;
                f(&ScalarExpr::constant(self), &rhs)
            }
        }
        impl ops::$tr<&ScalarExpr> for f64 {
            type Output = ScalarExpr;
            fn $m(self, rhs: &ScalarExpr) -> ScalarExpr {
                let f: fn(&ScalarExpr, &ScalarExpr) -> ScalarExpr = $body;
                f(&ScalarExpr::constant(self), rhs)
            }
        }
    };
}

binop!(Add, add, |a, b| ScalarExpr::sum(vec![a.clone(), b.clone()]));
binop!(Sub, sub, |a, b| ScalarExpr::sum(vec![a.clone(), b.neg()]));
binop!(Mul, mul, |a, b| ScalarExpr::product(vec![a.clone(), b.clone()]));
binop!(Div, div, |a, b| ScalarExpr::product(vec![
    a.clone(),
    b.recip_in(RecipDomain::Nonzero)
]));

impl ops::Neg for ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        ScalarExpr::neg(&self)
    }
}

impl ops::Neg for &ScalarExpr {
    type Output = ScalarExpr;
    fn neg(self) -> ScalarExpr {
        ScalarExpr::neg(self)
    }
}

const VAR_NAMES: [&str; 8] = ["x", "y", "z", "t", "u", "v", "w", "s"];

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Var { index } => match VAR_NAMES.get(*index) {
                Some(n) => write!(f, "{n}"),
                None => write!(f, "x{index}"),
            },
            Node::Const { value } => write!(f, "{value}"),
            Node::Sum { terms } => {
                write!(f, "(")?;
                for (i, t) in terms.iter().enumerate() {
                    if i > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
            Node::Product { factors } => {
                for (i, t) in factors.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    write!(f, "{t}")?;
                }
                Ok(())
            }
            Node::Neg { arg } => write!(f, "-({arg})"),
            Node::Powi { arg, exponent } => write!(f, "({arg})^{exponent}"),
            Node::Pow { arg, exponent } => write!(f, "({arg})^{exponent}"),
            Node::Recip { arg, .. } => write!(f, "1/({arg})"),
            Node::Sqrt { arg } => write!(f, "sqrt({arg})"),
            Node::Exp { arg } => write!(f, "exp({arg})"),
            Node::Ln { arg } => write!(f, "ln({arg})"),
            Node::Sin { arg } => write!(f, "sin({arg})"),
            Node::Cos { arg } => write!(f, "cos({arg})"),
            Node::Abs { arg } => write!(f, "|{arg}|"),
            Node::Flat { arg, coeff, power } => {
                if *coeff == 1.0 && *power == 2.0 {
                    write!(f, "flat({arg})")
                } else {
                    write!(f, "flat[{coeff},{power}]({arg})")
                }
            }
            Node::Bump { arg } => write!(f, "bump({arg})"),
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::jet::{Evaluator, Jet4, JetError, ScalarExpr};
use crate::symmat::SymMatrix;

/// Optional structure declared alongside a matrix function.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StructureTags {
    /// Variables spanning the subspace the matrix is singular on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grushin_subspace: Option<Vec<usize>>,
    /// Half-open index ranges `[start, end)` of constant diagonal blocks.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constant_blocks: Vec<(usize, usize)>,
}

/// Symmetric `n x n` matrix of scalar expressions in `nvars` variables.
/// Only the upper triangle is stored, so `a_kj` and `a_jk` are one object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymMatFun {
    n: usize,
    nvars: usize,
    /// Row `i` holds `a_ii, a_i,i+1, ..., a_i,n-1`.
    upper: Vec<Vec<ScalarExpr>>,
    #[serde(default)]
    pub tags: StructureTags,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MatFunError {
    #[error("dimension {0} outside 1..=16")]
    Dimension(usize),
    #[error("upper-triangle row {row} has {got} entries, expected {expected}")]
    Shape { row: usize, got: usize, expected: usize },
    #[error("entry ({0},{1}) uses more variables than declared")]
    Vars(usize, usize),
}

impl SymMatFun {
    pub fn new(n: usize, nvars: usize, f: impl Fn(usize, usize) -> ScalarExpr) -> SymMatFun {
        assert!((1..=crate::symmat::MAX_DIM).contains(&n), "dimension {n} outside 1..=16");
        let upper = (0..n).map(|i| (i..n).map(|j| f(i, j)).collect()).collect();
        SymMatFun { n, nvars, upper, tags: StructureTags::default() }
    }

    pub fn from_upper(nvars: usize, upper: Vec<Vec<ScalarExpr>>) -> Result<SymMatFun, MatFunError> {
        let m = SymMatFun { n: upper.len(), nvars, upper, tags: StructureTags::default() };
        m.validate()?;
        Ok(m)
    }

    /// Shape and variable-count checks (used after deserializing).
    pub fn validate(&self) -> Result<(), MatFunError> {
        if !(1..=crate::symmat::MAX_DIM).contains(&self.n) || self.upper.len() != self.n {
            return Err(MatFunError::Dimension(self.upper.len()));
        }
        for (i, row) in self.upper.iter().enumerate() {
            if row.len() != self.n - i {
                return Err(MatFunError::Shape { row: i, got: row.len(), expected: self.n - i });
            }
            for (k, e) in row.iter().enumerate() {
                if e.nvars() > self.nvars {
                    return Err(MatFunError::Vars(i, i + k));
                }
            }
        }
        Ok(())
    }

    /// Constant matrix function.
    pub fn constant(m: &SymMatrix, nvars: usize) -> SymMatFun {
        SymMatFun::new(m.n(), nvars, |i, j| ScalarExpr::constant(m.get(i, j)))
    }

    pub fn diagonal(d: &[ScalarExpr], nvars: usize) -> SymMatFun {
        SymMatFun::new(d.len(), nvars, |i, j| if i == j { d[i].clone() } else { ScalarExpr::zero() })
    }

    pub fn with_tags(mut self, tags: StructureTags) -> SymMatFun {
        self.tags = tags;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn get(&self, i: usize, j: usize) -> &ScalarExpr {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        &self.upper[i][j - i]
    }

    pub fn diag_entries(&self) -> Vec<ScalarExpr> {
        (0..self.n).map(|i| self.get(i, i).clone()).collect()
    }

    pub fn map(&self, f: impl Fn(usize, usize, &ScalarExpr) -> ScalarExpr) -> SymMatFun {
        SymMatFun::new(self.n, self.nvars, |i, j| f(i, j, self.get(i, j))).with_tags(self.tags.clone())
    }

    pub fn principal(&self, ix: &[usize]) -> SymMatFun {
        SymMatFun::new(ix.len(), self.nvars, |i, j| self.get(ix[i], ix[j]).clone())
    }

    /// Rows and columns reordered so that position `i` holds original index `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> SymMatFun {
        self.principal(perm)
    }

    /// Block diagonal assembly.
    pub fn block_diag(blocks: &[&SymMatFun]) -> SymMatFun {
        let nvars = blocks.iter().map(|b| b.nvars).max().unwrap_or(0);
        let mut offsets = Vec::new();
        let mut n = 0;
        for b in blocks {
            offsets.push(n);
            n += b.n;
        }
        SymMatFun::new(n, nvars, |i, j| {
            for (k, b) in blocks.iter().enumerate() {
                let o = offsets[k];
                if i >= o && i < o + b.n {
                    return if j >= o && j < o + b.n { b.get(i - o, j - o).clone() } else { ScalarExpr::zero() };
                }
            }
            ScalarExpr::zero()
        })
    }

    /// Values at one point.
    pub fn eval(&self, x: &[f64]) -> Result<SymMatrix, JetError> {
        let mut ev = Evaluator::new(x, 0)?;
        self.eval_with(&mut ev)
    }

    pub fn eval_with(&self, ev: &mut Evaluator) -> Result<SymMatrix, JetError> {
        let mut m = SymMatrix::zeros(self.n);
        for i in 0..self.n {
            for j in i..self.n {
                m.set(i, j, ev.value(self.get(i, j))?);
            }
        }
        Ok(m)
    }

    /// Jets of every upper-triangle entry, row by row.
    pub fn jets(&self, x: &[f64], order: usize) -> Result<Vec<Vec<Jet4>>, JetError> {
        let mut ev = Evaluator::new(x, order)?;
        self.upper.iter().map(|row| row.iter().map(|e| ev.jet(e)).collect()).collect()
    }

    /// `d/dx_k A` at `x`, for every variable `k`.
    pub fn gradients(&self, x: &[f64]) -> Result<Vec<SymMatrix>, JetError> {
        let jets = self.jets(x, 1)?;
        let nv = x.len();
        Ok((0..nv)
            .map(|k| {
                let mut mu = vec![0; nv];
                mu[k] = 1;
                SymMatrix::from_fn(self.n, |i, j| jets[i][j - i].partial(&mu).unwrap_or(0.0))
            })
            .collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("matrix functions always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_symmetric_storage() {
        let x = ScalarExpr::var(0);
        let a = SymMatFun::new(2, 1, |i, j| if i == j { ScalarExpr::one() } else { x.clone() });
        assert_eq!(a.get(0, 1), a.get(1, 0));
        let m = a.eval(&[0.25]).unwrap();
        assert_eq!(m.get(1, 0), 0.25);
    }

    #[test]
    fn block_diag_places_blocks() {
        let a = SymMatFun::constant(&SymMatrix::identity(2), 0);
        let b = SymMatFun::constant(&SymMatrix::from_diag(&[3.0]), 0);
        let c = SymMatFun::block_diag(&[&a, &b]);
        assert_eq!(c.n(), 3);
        assert_eq!(c.eval(&[]).unwrap(), SymMatrix::from_diag(&[1.0, 1.0, 3.0]));
    }

    #[test]
    fn json_round_trip() {
        let x = ScalarExpr::var(0);
        let a = SymMatFun::new(2, 1, |i, j| if i == j { x.flat() } else { x.clone() * 0.5 });
        let back: SymMatFun = serde_json::from_str(&a.to_json()).unwrap();
        assert_eq!(back, a);
        back.validate().unwrap();
    }
}

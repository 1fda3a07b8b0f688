//! Small dense symmetric matrices: Jacobi eigensolver, PSD square roots,
//! bordered determinants, Löwner order and comparability.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const MAX_DIM: usize = 16;
/// Default PSD tolerance, relative to the largest entry magnitude.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SymError {
    #[error("dimension {0} outside 1..=16")]
    Dimension(usize),
    #[error("dimension mismatch: {0} vs {1}")]
    Mismatch(usize, usize),
    #[error("matrix has a non-finite entry")]
    NonFinite,
    #[error("matrix is not symmetric (entry ({0},{1}) differs from its transpose)")]
    NotSymmetric(usize, usize),
    #[error("matrix is not positive semidefinite: smallest eigenvalue {0}")]
    NotPsd(f64),
    #[error("matrix is numerically singular (determinant {det}, scale {scale})")]
    Singular { det: f64, scale: f64 },
    #[error("comparability bracket requires 0 < beta < alpha, got beta={beta}, alpha={alpha}")]
    Bracket { beta: f64, alpha: f64 },
    #[error("leading entry {0} is not positive")]
    NonPositivePivot(f64),
}

/// Symmetric `n x n` matrix, upper triangle stored row by row.
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

fn idx(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

impl SymMatrix {
    pub fn zeros(n: usize) -> SymMatrix {
        assert!((1..=MAX_DIM).contains(&n), "dimension {n} outside 1..=16");
        SymMatrix { n, data: vec![0.0; n * (n + 1) / 2] }
    }

    pub fn identity(n: usize) -> SymMatrix {
        SymMatrix::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(d: &[f64]) -> SymMatrix {
        let mut m = SymMatrix::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.set(i, i, v);
        }
        m
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> SymMatrix {
        let mut m = SymMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// From full rows; the two triangles must agree to `1e-12` relative.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<SymMatrix, SymError> {
        let n = rows.len();
        if !(1..=MAX_DIM).contains(&n) {
            return Err(SymError::Dimension(n));
        }
        for r in rows {
            if r.len() != n {
                return Err(SymError::Mismatch(n, r.len()));
            }
        }
        let scale = rows.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            for j in 0..n {
                if !rows[i][j].is_finite() {
                    return Err(SymError::NonFinite);
                }
                if (rows[i][j] - rows[j][i]).abs() > 1e-12 * scale {
                    return Err(SymError::NotSymmetric(i, j));
                }
            }
        }
        Ok(SymMatrix::from_fn(n, |i, j| rows[i][j]))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[idx(self.n, i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = idx(self.n, i, j);
        self.data[k] = v;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j)).collect()).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn diag_part(&self) -> SymMatrix {
        SymMatrix::from_diag(&self.diagonal())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    fn zip(&self, o: &SymMatrix, f: impl Fn(f64, f64) -> f64) -> Result<SymMatrix, SymError> {
        if self.n != o.n {
            return Err(SymError::Mismatch(self.n, o.n));
        }
        Ok(SymMatrix { n: self.n, data: self.data.iter().zip(&o.data).map(|(a, b)| f(*a, *b)).collect() })
    }

    pub fn add(&self, o: &SymMatrix) -> Result<SymMatrix, SymError> {
        self.zip(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &SymMatrix) -> Result<SymMatrix, SymError> {
        self.zip(o, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix { n: self.n, data: self.data.iter().map(|v| v * s).collect() }
    }

    /// `v v^T`.
    pub fn outer(v: &[f64]) -> SymMatrix {
        SymMatrix::from_fn(v.len(), |i, j| v[i] * v[j])
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum()).collect()
    }

    pub fn quad(&self, v: &[f64]) -> f64 {
        self.matvec(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// Principal submatrix on the given indices.
    pub fn principal(&self, ix: &[usize]) -> SymMatrix {
        SymMatrix::from_fn(ix.len(), |i, j| self.get(ix[i], ix[j]))
    }

    /// `P^T M P` for the permutation sending position `i` to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> SymMatrix {
        self.principal(perm)
    }

    /// `S M S` for the diagonal matrix `S = diag(s)`.
    pub fn congruence_diag(&self, s: &[f64]) -> SymMatrix {
        SymMatrix::from_fn(self.n, |i, j| s[i] * self.get(i, j) * s[j])
    }

    fn dense(&self) -> Vec<Vec<f64>> {
        self.rows()
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> f64 {
        let mut a = self.dense();
        let n = self.n;
        let mut det = 1.0;
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            if a[p][k] == 0.0 {
                return 0.0;
            }
            if p != k {
                a.swap(p, k);
                det = -det;
            }
            det *= a[k][k];
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
            }
        }
        det
    }

    /// Solve `M x = b` by LU with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, SymError> {
        let n = self.n;
        if b.len() != n {
            return Err(SymError::Mismatch(n, b.len()));
        }
        let mut a = self.dense();
        let mut x = b.to_vec();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            if a[p][k] == 0.0 {
                return Err(SymError::Singular { det: 0.0, scale: self.max_abs() });
            }
            a.swap(p, k);
            x.swap(p, k);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                x[i] -= f * x[k];
            }
        }
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
            x[k] = (x[k] - s) / a[k][k];
        }
        Ok(x)
    }

    /// Bordered matrix `[[alpha, v^T], [v, M]]`.
    pub fn bordered(alpha: f64, v: &[f64], m: &SymMatrix) -> Result<SymMatrix, SymError> {
        if v.len() != m.n {
            return Err(SymError::Mismatch(v.len(), m.n));
        }
        Ok(SymMatrix::from_fn(m.n + 1, |i, j| match (i, j) {
            (0, 0) => alpha,
            (0, j) => v[j - 1],
            (i, j) => m.get(i - 1, j - 1),
        }))
    }
}

impl Serialize for SymMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<SymMatrix, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        SymMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors
/// (`vectors[k]` belongs to `values[k]`).
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl Eigen {
    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// `V diag(g(lambda)) V^T`.
    pub fn apply(&self, g: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.values.len();
        let gv: Vec<f64> = self.values.iter().map(|&l| g(l)).collect();
        SymMatrix::from_fn(n, |i, j| (0..n).map(|k| self.vectors[k][i] * gv[k] * self.vectors[k][j]).sum())
    }
}

/// Cyclic Jacobi eigendecomposition.
///
/// Rotations are skipped only when the off-diagonal entry is negligible
/// relative to its two diagonal entries, which keeps small eigenvalues of
/// graded matrices accurate.
pub fn eigen(m: &SymMatrix) -> Result<Eigen, SymError> {
    if !m.is_finite() {
        return Err(SymError::NonFinite);
    }
    let n = m.n;
    let mut a = m.dense();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p][p];
                let aqq = a[q][q];
                if apq.abs() <= f64::EPSILON * 0.5 * (app.abs() * aqq.abs()).sqrt()
                    || apq.abs() < f64::MIN_POSITIVE
                {
                    a[p][q] = 0.0;
                    a[q][p] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    Ok(Eigen {
        values: order.iter().map(|&k| a[k][k]).collect(),
        vectors: order.iter().map(|&k| (0..n).map(|i| v[i][k]).collect()).collect(),
    })
}

pub fn min_eigenvalue(m: &SymMatrix) -> Result<f64, SymError> {
    Ok(eigen(m)?.min())
}

/// Absolute PSD tolerance for `m`: `PSD_TOL * max|m_ij|`.
pub fn psd_tol(m: &SymMatrix) -> f64 {
    PSD_TOL * m.max_abs()
}

/// Symmetric PSD square root; eigenvalues within tolerance below zero are clamped.
pub fn sqrt_psd(m: &SymMatrix) -> Result<SymMatrix, SymError> {
    let e = eigen(m)?;
    let tol = PSD_TOL.max(psd_tol(m));
    if e.min() < -tol {
        return Err(SymError::NotPsd(e.min()));
    }
    Ok(e.apply(|l| l.max(0.0).sqrt()))
}

/// `(alpha - v^T M^-1 v) det M`, the determinant of `[[alpha, v^T], [v, M]]`.
pub fn bordered_det(alpha: f64, v: &[f64], m: &SymMatrix) -> Result<f64, SymError> {
    if v.len() != m.n {
        return Err(SymError::Mismatch(v.len(), m.n));
    }
    let det = m.det();
    let scale = m.max_abs().powi(m.n as i32);
    if det.abs() <= 1e-12 * scale || det == 0.0 {
        return Err(SymError::Singular { det, scale });
    }
    let x = m.solve(v)?;
    let q: f64 = x.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok((alpha - q) * det)
}

/// `A ≼ B`: smallest eigenvalue of `B - A` at least `-tol`.
pub fn loewner_leq(a: &SymMatrix, b: &SymMatrix, tol: f64) -> Result<bool, SymError> {
    Ok(min_eigenvalue(&b.sub(a)?)? >= -tol)
}

/// `beta B ≼ A ≼ alpha B`.
pub fn comparable(a: &SymMatrix, b: &SymMatrix, beta: f64, alpha: f64, tol: f64) -> Result<bool, SymError> {
    if !(beta > 0.0 && beta < alpha) {
        return Err(SymError::Bracket { beta, alpha });
    }
    Ok(loewner_leq(&b.scale(beta), a, tol)? && loewner_leq(a, &b.scale(alpha), tol)?)
}

/// Tightest `(beta, alpha)` with `beta B ≼ A ≼ alpha B` at one point, for `B`
/// positive definite: the extreme eigenvalues of `B^-1/2 A B^-1/2`.
pub fn comparability_bracket(a: &SymMatrix, b: &SymMatrix) -> Result<(f64, f64), SymError> {
    if a.n != b.n {
        return Err(SymError::Mismatch(a.n, b.n));
    }
    let h = relative_to(a, b)?;
    let e = eigen(&h)?;
    Ok((e.min(), e.max()))
}

/// `B^-1/2 A B^-1/2`; diagonal `B` is handled by plain scaling.
pub fn relative_to(a: &SymMatrix, b: &SymMatrix) -> Result<SymMatrix, SymError> {
    let is_diag = (0..b.n).all(|i| (i + 1..b.n).all(|j| b.get(i, j) == 0.0));
    if is_diag {
        let d = b.diagonal();
        if let Some(&bad) = d.iter().find(|&&v| v <= 0.0) {
            return Err(SymError::NotPsd(bad));
        }
        let s: Vec<f64> = d.iter().map(|v| 1.0 / v.sqrt()).collect();
        return Ok(a.congruence_diag(&s));
    }
    let e = eigen(b)?;
    if e.min() <= 0.0 {
        return Err(SymError::NotPsd(e.min()));
    }
    let r = e.apply(|l| 1.0 / l.sqrt());
    Ok(congruence(&r, a))
}

/// `R A R` for symmetric `R`.
pub fn congruence(r: &SymMatrix, a: &SymMatrix) -> SymMatrix {
    let n = a.n;
    let ra: Vec<Vec<f64>> =
        (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| r.get(i, k) * a.get(k, j)).sum()).collect()).collect();
    SymMatrix::from_fn(n, |i, j| (0..n).map(|k| ra[i][k] * r.get(k, j)).sum())
}

/// Witness of a sampled comparability bracket.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparabilityWitness {
    pub beta: f64,
    pub alpha: f64,
    pub worst_point: Vec<f64>,
    /// Smallest eigenvalue of `A - beta B` at the worst point.
    pub min_eig_lower: f64,
    /// Smallest eigenvalue of `alpha B - A` at the worst point.
    pub min_eig_upper: f64,
}

impl ComparabilityWitness {
    /// Tightest common bracket over sampled `(point, A, B)` triples; the
    /// worst point is where `alpha/beta` is attained on the lower side.
    pub fn from_samples(samples: &[(Vec<f64>, SymMatrix, SymMatrix)]) -> Result<ComparabilityWitness, SymError> {
        let mut beta = f64::INFINITY;
        let mut alpha: f64 = 0.0;
        let mut worst = Vec::new();
        for (x, a, b) in samples {
            let (lo, hi) = comparability_bracket(a, b)?;
            if lo < beta {
                beta = lo;
                worst = x.clone();
            }
            alpha = alpha.max(hi);
        }
        let (mut l, mut u) = (0.0, 0.0);
        if let Some((_, a, b)) = samples.iter().find(|(x, _, _)| *x == worst) {
            l = min_eigenvalue(&a.sub(&b.scale(beta))?)?;
            u = min_eigenvalue(&b.scale(alpha).sub(a)?)?;
        }
        Ok(ComparabilityWitness { beta, alpha, worst_point: worst, min_eig_lower: l, min_eig_upper: u })
    }
}

/// Result of the `bᵀD⁻¹b / a11` test on `[[a11, bᵀ], [b, D]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub gamma: f64,
    /// `gamma >= 1`: the strict inequality needed for peeling fails.
    pub boundary: bool,
    /// An eigenvalue of `D` was raised to the floor `1e-14 max|D|`.
    pub ill_conditioned: bool,
    /// Off-diagonal `(k, j, |a_kj| / sqrt(a_kk a_jj))` exceeding `gamma`.
    pub violations: Vec<(usize, usize, f64)>,
}

pub fn necc_cond_gamma(a: &SymMatrix) -> Result<GammaEstimate, SymError> {
    let n = a.n;
    let a11 = a.get(0, 0);
    if !(a11 > 0.0) {
        return Err(SymError::NonPositivePivot(a11));
    }
    if n == 1 {
        return Ok(GammaEstimate { gamma: 0.0, boundary: false, ill_conditioned: false, violations: vec![] });
    }
    let ix: Vec<usize> = (1..n).collect();
    let d = a.principal(&ix);
    let b: Vec<f64> = (1..n).map(|j| a.get(0, j)).collect();
    let e = eigen(&d)?;
    let dmax = d.max_abs();
    if dmax == 0.0 || e.min() < -psd_tol(&d) {
        return Err(SymError::Singular { det: d.det(), scale: dmax });
    }
    let floor = 1e-14 * dmax;
    let ill = e.values.iter().any(|&l| l < floor);
    let mut q = 0.0;
    for (k, &l) in e.values.iter().enumerate() {
        let c: f64 = e.vectors[k].iter().zip(&b).map(|(u, v)| u * v).sum();
        q += c * c / l.max(floor);
    }
    let gamma = (q / a11).sqrt();
    let mut violations = Vec::new();
    for k in 0..n {
        for j in k + 1..n {
            let s = (a.get(k, k) * a.get(j, j)).sqrt();
            let r = if s > 0.0 { a.get(k, j).abs() / s } else if a.get(k, j) == 0.0 { 0.0 } else { f64::INFINITY };
            if r > gamma * (1.0 + 1e-12) + 1e-15 {
                violations.push((k, j, r));
            }
        }
    }
    Ok(GammaEstimate { gamma, boundary: gamma >= 1.0 - 1e-12, ill_conditioned: ill, violations })
}

/// `[[h2 - alpha H, v^T], [v, F - alpha f]]` is PSD, tested through its
/// Schur complement: `h2 - alpha H > 0`, `G = F - alpha f` positive definite
/// and `v^T G^-1 v <= h2 - alpha H`.
pub fn alpha_shift_psd(
    h2: f64,
    big_h: f64,
    v: &[f64],
    big_f: &SymMatrix,
    small_f: &SymMatrix,
    alpha: f64,
) -> Result<bool, SymError> {
    if v.len() != big_f.n {
        return Err(SymError::Mismatch(v.len(), big_f.n));
    }
    let s = h2 - alpha * big_h;
    let g = big_f.sub(&small_f.scale(alpha))?;
    if !(s > 0.0) {
        return Ok(false);
    }
    let e = eigen(&g)?;
    if e.min() <= 0.0 {
        return Ok(false);
    }
    let mut q = 0.0;
    for (k, &l) in e.values.iter().enumerate() {
        let c: f64 = e.vectors[k].iter().zip(v).map(|(a, b)| a * b).sum();
        q += c * c / l;
    }
    Ok(q <= s * (1.0 + 1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> SymMatrix {
        SymMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn packed_indexing() {
        let a = SymMatrix::from_fn(4, |i, j| (10 * i + j) as f64);
        for i in 0..4 {
            for j in 0..4 {
                let (p, q) = if i <= j { (i, j) } else { (j, i) };
                assert_eq!(a.get(i, j), (10 * p + q) as f64);
            }
        }
    }

    #[test]
    fn identity_eigenvalues() {
        let e = eigen(&SymMatrix::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn two_by_two_eigenvalues() {
        // roots of l^2 - 2l - 3
        let e = eigen(&m(&[&[1.0, 2.0], &[2.0, 1.0]])).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn diagonal_eigenvectors() {
        let e = eigen(&SymMatrix::from_diag(&[9.0, 4.0])).unwrap();
        assert_eq!(e.values, vec![4.0, 9.0]);
        assert_eq!(e.vectors[0], vec![0.0, 1.0]);
    }

    #[test]
    fn graded_small_eigenvalue_is_relative_accurate() {
        // diag(1, 1e-200) coupled at the geometric-mean scale
        let c = 0.5e-100;
        let a = m(&[&[1.0, c], &[c, 1e-200]]);
        let e = eigen(&a).unwrap();
        // det = 1e-200 - 0.25e-200 = 0.75e-200; small eigenvalue ~ det / 1
        assert!((e.values[0] / 0.75e-200 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sqrt_examples() {
        assert_eq!(sqrt_psd(&SymMatrix::identity(4)).unwrap(), SymMatrix::identity(4));
        let s = sqrt_psd(&SymMatrix::from_diag(&[4.0, 9.0])).unwrap();
        assert!((s.get(0, 0) - 2.0).abs() < 1e-15 && (s.get(1, 1) - 3.0).abs() < 1e-15);
        let a = m(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let s = sqrt_psd(&a).unwrap();
        let rows = s.rows();
        for i in 0..2 {
            for j in 0..2 {
                let v: f64 = (0..2).map(|k| rows[i][k] * rows[k][j]).sum();
                assert!((v - a.get(i, j)).abs() < 1e-10);
            }
        }
        assert!(matches!(sqrt_psd(&SymMatrix::from_diag(&[1.0, -1e-3])), Err(SymError::NotPsd(_))));
    }

    #[test]
    fn bordered_examples() {
        assert_eq!(bordered_det(1.0, &[0.0, 0.0], &SymMatrix::identity(2)).unwrap(), 1.0);
        let mm = m(&[&[2.0, 0.0], &[0.0, 3.0]]);
        let v = bordered_det(1.0, &[1.0, 1.0], &mm).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
        assert!(bordered_det(1.0, &[1.0, 1.0], &m(&[&[1.0, 1.0], &[1.0, 1.0]])).is_err());
    }

    #[test]
    fn comparability_examples() {
        let a = SymMatrix::from_diag(&[1.0, 2.0]);
        let b = SymMatrix::from_diag(&[2.0, 4.0]);
        assert!(matches!(comparable(&a, &b, 0.5, 0.5, 0.0), Err(SymError::Bracket { .. })));
        assert!(comparable(&a, &b, 0.4, 0.6, 0.0).unwrap());
        assert!(comparable(&a, &a, 0.5, 2.0, 0.0).unwrap());
        assert!(loewner_leq(&SymMatrix::identity(2), &SymMatrix::from_diag(&[2.0, 2.0]), 0.0).unwrap());
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(necc_cond_gamma(&SymMatrix::identity(3)).unwrap().gamma, 0.0);
        let f: f64 = 0.3;
        let g = necc_cond_gamma(&m(&[&[1.0, 0.5 * f], &[0.5 * f, f * f]])).unwrap();
        assert!((g.gamma - 0.5).abs() < 1e-15);
        assert!(!g.boundary && g.violations.is_empty());
        let g = necc_cond_gamma(&m(&[&[1.0, 1.0], &[1.0, 1.0]])).unwrap();
        assert!(g.boundary);
    }

    #[test]
    fn alpha_shift_examples() {
        let f = SymMatrix::identity(2);
        assert!(alpha_shift_psd(2.0, 1.0, &[0.0, 0.0], &f.scale(2.0), &f, 1.0).unwrap());
        let one = SymMatrix::identity(1);
        // v^T G^-1 v = 1 = h2 - alpha H exactly
        assert!(alpha_shift_psd(2.0, 1.0, &[1.0], &one.scale(2.0), &one, 1.0).unwrap());
        assert!(!alpha_shift_psd(10.0, 1.0, &[0.0, 0.0], &f.scale(2.0), &f, 3.0).unwrap());
    }

    #[test]
    fn json_is_row_major() {
        let a = m(&[&[1.0, 2.0], &[2.0, 5.0]]);
        assert_eq!(serde_json::to_string(&a).unwrap(), "[[1.0,2.0],[2.0,5.0]]");
        let back: SymMatrix = serde_json::from_str("[[1.0,2.0],[2.0,5.0]]").unwrap();
        assert_eq!(back, a);
        assert!(serde_json::from_str::<SymMatrix>("[[1.0,2.0],[3.0,5.0]]").is_err());
    }
}

use serde::{Deserialize, Serialize};

use super::matfun::SymMatFun;
use super::sos::{principal_root, scalar_sos, ScalarSosBackend};
use super::DecomposeError;
use crate::grid::GridSpec;
use crate::jet::{holder_seminorms_degree, Evaluator, JetError, ScalarExpr};
use crate::report::{BoundRule, CheckReport, Condition, Counts, Verdict};
use crate::symmat::{eigen, SymMatrix};

/// Below this a sampled pivot counts as zero.
pub const PIVOT_FLOOR: f64 = 1e-300;
/// Relative tolerance of the reconstruction identities.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;
/// Centers per field used for Hölder seminorm estimates during assembly.
const HOLDER_CENTERS: usize = 3;

/// One peeling step of the 1-square decomposition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeelStep {
    /// 1-based step index.
    pub k: usize,
    /// `E_k`, the leading entry of `Q_k`.
    pub pivot: ScalarExpr,
    /// First row of `Q_k` in original indexing (zeros before `k`).
    pub row: Vec<ScalarExpr>,
    /// `Z_k = row / sqrt(E_k)`.
    pub z: Vec<ScalarExpr>,
    /// Scalar factors `t_{k,i}` with `sum_i t_{k,i}^2 = E_k`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub factors: Vec<ScalarExpr>,
    /// Fields `X_{k,i}` with `sum_i X_{k,i} X_{k,i}^T = Z_k Z_k^T`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<Vec<ScalarExpr>>,
}

/// `A = sum_k Z_k Z_k^T + embed(Q_p)` with optional vector-field assembly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquareDecomposition {
    pub n: usize,
    pub nvars: usize,
    /// Depth `p`: steps `1..p-1` were peeled, the residual has size `n - p + 1`.
    pub depth: usize,
    pub steps: Vec<PeelStep>,
    pub residual: Option<SymMatFun>,
    pub certificates: Vec<CheckReport>,
}

/// Output of a single peel.
#[derive(Clone, Debug, PartialEq)]
pub struct OneSquare {
    pub z: Vec<ScalarExpr>,
    /// `None` when `A` is `1 x 1`.
    pub q: Option<SymMatFun>,
    pub counts: Counts,
}

/// `sqrt(a)` on the tree when possible, numeric otherwise.
fn root(a: &ScalarExpr) -> ScalarExpr {
    principal_root(a).unwrap_or_else(|| a.sqrt())
}

/// Expression-level peel of the leading entry. Returns `Z`, the first row
/// and the Schur complement `Q`.
fn peel_exprs(a: &SymMatFun) -> (Vec<ScalarExpr>, Vec<ScalarExpr>, Option<SymMatFun>) {
    let n = a.n();
    let a11 = a.get(0, 0).clone();
    let s = root(&a11);
    let inv_s = s.recip();
    let inv_a11 = a11.recip();
    let row: Vec<ScalarExpr> = (0..n).map(|j| a.get(0, j).clone()).collect();
    let mut z = vec![s];
    z.extend(row[1..].iter().map(|a1j| a1j * &inv_s));
    let q = (n > 1).then(|| {
        SymMatFun::new(n - 1, a.nvars(), |i, j| {
            let (a1i, a1j) = (&row[i + 1], &row[j + 1]);
            let cross = if i == j { a1i.powi(2) } else { a1i * a1j };
            a.get(i + 1, j + 1) - &(&cross * &inv_a11)
        })
    });
    (z, row, q)
}

/// Sample mask of points where `pivot` is flat; errors when it is negative
/// or vanishes without being flat.
fn scan_pivot(
    k: usize,
    pivot: &ScalarExpr,
    points: &[Vec<f64>],
    scale: &[f64],
    skip: &mut [bool],
) -> Result<Counts, DecomposeError> {
    let mut counts = Counts::default();
    for (i, x) in points.iter().enumerate() {
        if skip[i] {
            counts.excluded += 1;
            continue;
        }
        let mut ev = Evaluator::new(x, 0)?;
        let v = ev.value(pivot)?;
        if v < -1e-14 * scale[i] {
            return Err(DecomposeError::NegativePivot { k, point: x.clone(), value: v });
        }
        if v < PIVOT_FLOOR {
            let flat = ev.flat_zero(pivot)? || {
                let j = Evaluator::new(x, 4)?.jet(pivot);
                matches!(j, Ok(j) if j.entries().iter().all(|(_, c)| c.abs() < PIVOT_FLOOR))
            };
            if !flat {
                return Err(DecomposeError::PivotVanishing { k, point: x.clone(), value: v });
            }
            skip[i] = true;
            counts.excluded += 1;
            continue;
        }
        counts.evaluated += 1;
    }
    Ok(counts)
}

fn sample_scales(a: &SymMatFun, points: &[Vec<f64>]) -> Result<Vec<f64>, DecomposeError> {
    points.iter().map(|x| Ok(a.eval(x)?.max_abs())).collect()
}

/// 1-square decomposition: `Z = (sqrt a11, a12/sqrt a11, ...)` and
/// `Q = [a_kj - a_1k a_1j / a_11]`, so that `A = Z Z^T + embed(Q)`.
pub fn one_sd(a: &SymMatFun, grid: &GridSpec) -> Result<OneSquare, DecomposeError> {
    let samples = grid.samples();
    let scale = sample_scales(a, &samples.points)?;
    let mut skip = vec![false; samples.points.len()];
    let mut counts = scan_pivot(1, a.get(0, 0), &samples.points, &scale, &mut skip)?;
    counts.excluded += samples.excluded;
    let (z, _, q) = peel_exprs(a);
    Ok(OneSquare { z, q, counts })
}

/// Peel `p - 1` times. `p = n + 1` peels everything; `p = 1` returns `A` as
/// the residual. Attaches the reconstruction certificate, the sampled
/// Löwner brackets of each peel against the tail diagonal, and the
/// comparability of the residual with `a_pp I`.
pub fn iterated_sd(a: &SymMatFun, p: usize, grid: &GridSpec) -> Result<SquareDecomposition, DecomposeError> {
    let n = a.n();
    if !(1..=n + 1).contains(&p) {
        return Err(DecomposeError::Depth { p, max: n + 1 });
    }
    let samples = grid.samples();
    let scale = sample_scales(a, &samples.points)?;
    let mut skip = vec![false; samples.points.len()];
    let mut steps = Vec::new();
    let mut q = Some(a.clone());
    let mut pivot_counts = Counts::default();
    for k in 1..p {
        let cur = q.take().expect("residual exists before the last step");
        let pivot = cur.get(0, 0).clone();
        let c = scan_pivot(k, &pivot, &samples.points, &scale, &mut skip)?;
        pivot_counts.add(&c);
        let (zs, rs, next) = peel_exprs(&cur);
        let pad = |v: Vec<ScalarExpr>| {
            let mut out = vec![ScalarExpr::zero(); k - 1];
            out.extend(v);
            out
        };
        steps.push(PeelStep { k, pivot, row: pad(rs), z: pad(zs), factors: vec![], fields: vec![] });
        q = next;
    }
    let residual = q.map(|r| r.with_tags(Default::default()));
    let mut d = SquareDecomposition { n, nvars: a.nvars(), depth: p, steps, residual, certificates: vec![] };
    let rule = BoundRule::default();
    let mut rec = reconstruction(a, &d, &samples.points, &skip)?;
    rec.counts.excluded += samples.excluded;
    d.certificates.push(rec);
    d.certificates.push(peel_brackets(a, &d, &samples.points, &skip, &rule)?);
    if let Some(r) = &d.residual {
        d.certificates.push(residual_bracket(a, r, p, &samples.points, &skip, &rule)?);
    }
    Ok(d)
}

/// Values of `sum_k Z_k Z_k^T + embed(Q_p)` at `x`.
fn assembled(d: &SquareDecomposition, ev: &mut Evaluator) -> Result<SymMatrix, JetError> {
    let n = d.n;
    let mut m = SymMatrix::zeros(n);
    for s in &d.steps {
        let z: Vec<f64> = s.z.iter().map(|e| ev.value(e)).collect::<Result<_, _>>()?;
        for i in 0..n {
            for j in i..n {
                m.set(i, j, m.get(i, j) + z[i] * z[j]);
            }
        }
    }
    if let Some(r) = &d.residual {
        let o = n - r.n();
        let qv = r.eval_with(ev)?;
        for i in 0..r.n() {
            for j in i..r.n() {
                m.set(o + i, o + j, m.get(o + i, o + j) + qv.get(i, j));
            }
        }
    }
    Ok(m)
}

fn rel_residual(a: &SymMatrix, b: &SymMatrix) -> f64 {
    let diff = a.sub(b).map(|m| m.max_abs()).unwrap_or(f64::INFINITY);
    if diff == 0.0 {
        0.0
    } else {
        diff / a.max_abs().max(f64::MIN_POSITIVE)
    }
}

fn reconstruction(
    a: &SymMatFun,
    d: &SquareDecomposition,
    points: &[Vec<f64>],
    skip: &[bool],
) -> Result<CheckReport, DecomposeError> {
    let mut worst = 0.0f64;
    let mut witness = None;
    let mut counts = Counts::default();
    for (i, x) in points.iter().enumerate() {
        if skip[i] {
            counts.excluded += 1;
            continue;
        }
        let mut ev = Evaluator::new(x, 0)?;
        let av = a.eval_with(&mut ev)?;
        let rv = assembled(d, &mut ev)?;
        counts.evaluated += 1;
        let r = rel_residual(&av, &rv);
        if witness.is_none() || r > worst {
            worst = r;
            witness = Some(x.clone());
        }
    }
    let verdict = if counts.evaluated == 0 {
        Verdict::InconclusiveByFlatness
    } else if worst <= RECONSTRUCTION_TOL {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let mut r = CheckReport::new(Condition::Reconstruction, verdict).param("tolerance", RECONSTRUCTION_TOL);
    r.worst_ratio = Some(worst);
    r.witness = witness;
    r.counts = counts;
    r.label = Some("A = sum Z_k Z_k^T + embed(Q_p)".into());
    Ok(r)
}

/// Sampled constants of
/// `c a_kk e_k e_k^T <= Z_k Z_k^T + sum_{m>k} a_mm e_m e_m^T <= C sum_{m>=k} a_mm e_m e_m^T`.
fn peel_brackets(
    a: &SymMatFun,
    d: &SquareDecomposition,
    points: &[Vec<f64>],
    skip: &[bool],
    rule: &BoundRule,
) -> Result<CheckReport, DecomposeError> {
    let n = d.n;
    let mut parts = Vec::new();
    for s in &d.steps {
        let k0 = s.k - 1;
        let m = n - k0;
        let mut c_low = f64::INFINITY;
        let mut c_high = 0.0f64;
        let mut at = None;
        let mut counts = Counts::default();
        for (i, x) in points.iter().enumerate() {
            if skip[i] {
                counts.excluded += 1;
                continue;
            }
            let mut ev = Evaluator::new(x, 0)?;
            let diag: Vec<f64> = (k0..n).map(|j| ev.value(a.get(j, j))).collect::<Result<_, _>>()?;
            if diag.iter().any(|v| *v <= PIVOT_FLOOR) {
                counts.excluded += 1;
                continue;
            }
            let z: Vec<f64> = s.z[k0..].iter().map(|e| ev.value(e)).collect::<Result<_, _>>()?;
            let mut mk = SymMatrix::outer(&z);
            for j in 1..m {
                mk.set(j, j, mk.get(j, j) + diag[j]);
            }
            // upper constant: largest eigenvalue of D^{-1/2} M D^{-1/2}
            let inv: Vec<f64> = diag.iter().map(|v| 1.0 / v.sqrt()).collect();
            let upper = eigen(&mk.congruence_diag(&inv))?.max();
            // lower constant: 1 / (a_kk e_1^T M^{-1} e_1)
            let mut e1 = vec![0.0; m];
            e1[0] = 1.0;
            let lower = match mk.congruence_diag(&inv).solve(&e1) {
                Ok(sol) if sol[0] > 0.0 => 1.0 / sol[0],
                _ => 0.0,
            };
            counts.evaluated += 1;
            if lower < c_low {
                c_low = lower;
                at = Some(x.clone());
            }
            c_high = c_high.max(upper);
        }
        let ok = counts.evaluated == 0 || (c_low > 1.0 / rule.c_max && c_high <= rule.c_max);
        let verdict = if counts.evaluated == 0 {
            Verdict::InconclusiveByFlatness
        } else if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        let mut r = CheckReport::new(Condition::PeelComparable, verdict).param("k", s.k as f64);
        if counts.evaluated > 0 {
            r = r.detail("c", c_low).detail("C", c_high);
            r.worst_ratio = Some(c_high.max(1.0 / c_low));
            r.constant = r.worst_ratio;
        }
        r.witness = at;
        r.counts = counts;
        r.label = Some(format!("peel {} against the tail diagonal", s.k));
        parts.push(r);
    }
    Ok(CheckReport::combine(Condition::PeelComparable, parts))
}

/// Sampled bracket `beta a_pp I <= Q_p <= alpha a_pp I`.
fn residual_bracket(
    a: &SymMatFun,
    r: &SymMatFun,
    p: usize,
    points: &[Vec<f64>],
    skip: &[bool],
    rule: &BoundRule,
) -> Result<CheckReport, DecomposeError> {
    let mut beta = f64::INFINITY;
    let mut alpha = 0.0f64;
    let mut at = None;
    let mut counts = Counts::default();
    for (i, x) in points.iter().enumerate() {
        if skip[i] {
            counts.excluded += 1;
            continue;
        }
        let mut ev = Evaluator::new(x, 0)?;
        let app = ev.value(a.get(p - 1, p - 1))?;
        if app <= PIVOT_FLOOR {
            counts.excluded += 1;
            continue;
        }
        let e = eigen(&r.eval_with(&mut ev)?.scale(1.0 / app))?;
        counts.evaluated += 1;
        if e.min() < beta {
            beta = e.min();
            at = Some(x.clone());
        }
        alpha = alpha.max(e.max());
    }
    let verdict = if counts.evaluated == 0 {
        Verdict::InconclusiveByFlatness
    } else if beta > 1.0 / rule.c_max && alpha <= rule.c_max {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let mut rep = CheckReport::new(Condition::ResidualReferenceComparable, verdict).param("p", p as f64);
    if counts.evaluated > 0 {
        rep = rep.detail("beta", beta).detail("alpha", alpha);
        rep.worst_ratio = Some(alpha / beta);
        rep.constant = rep.worst_ratio;
    }
    rep.witness = at;
    rep.counts = counts;
    rep.label = Some("Q_p against a_pp I".into());
    Ok(rep)
}

/// Attach factors `t_{k,i}` of each pivot and the fields
/// `X_{k,i} = sum_{j>=k} t_{k,i} q_kj / E_k e_j`. Adds the pivot contract
/// reports, the identity `sum_i X X^T = Z Z^T`, and sampled derivative sizes
/// and Hölder seminorms of the fields.
pub fn assemble_x(
    decomp: &SquareDecomposition,
    backend: &ScalarSosBackend,
    epsilon: f64,
    delta: f64,
    delta2: f64,
    grid: &GridSpec,
) -> Result<SquareDecomposition, DecomposeError> {
    if !(0.0 < delta2 && delta2 < 1.0) {
        return Err(DecomposeError::Param(format!("delta'' = {delta2} outside (0, 1)")));
    }
    let mut backend = *backend;
    backend.epsilon = epsilon;
    backend.delta = delta;
    backend.validate()?;
    let mut d = decomp.clone();
    d.certificates.retain(|c| !matches!(c.condition, Condition::PivotSosContract | Condition::SquareAssembly));
    let mut contracts = Vec::new();
    for s in &mut d.steps {
        let sos = scalar_sos(&s.pivot, &backend, grid)?;
        let k0 = s.k - 1;
        let inv_e = s.pivot.recip();
        s.fields = sos
            .factors
            .iter()
            .map(|t| {
                (0..d.n)
                    .map(|j| match j.cmp(&k0) {
                        std::cmp::Ordering::Less => ScalarExpr::zero(),
                        std::cmp::Ordering::Equal => t.clone(),
                        std::cmp::Ordering::Greater => t * &s.row[j] * &inv_e,
                    })
                    .collect()
            })
            .collect();
        s.factors = sos.factors;
        let mut rep = sos.report.param("k", s.k as f64);
        rep.label = Some(format!("factors of E_{}", s.k));
        contracts.push(rep);
    }
    let mut contract = CheckReport::combine(Condition::PivotSosContract, contracts);
    contract.label = Some("pivot factor contract".into());
    d.certificates.push(contract);
    d.certificates.push(field_report(&d, delta, grid)?);
    Ok(d)
}

#[derive(Serialize)]
struct FieldSizes {
    k: usize,
    i: usize,
    /// Max over samples and components of `|D^mu X|` for `|mu| = 0, 1, 2`.
    derivative_max: [f64; 3],
    /// Max over sampled centers of the `|mu| = 2` Hölder seminorm estimates.
    holder2: f64,
}

fn field_report(d: &SquareDecomposition, delta: f64, grid: &GridSpec) -> Result<CheckReport, DecomposeError> {
    let samples = grid.samples();
    let mut worst = 0.0f64;
    let mut witness = None;
    let mut counts = Counts::default();
    let mut sizes = Vec::new();
    for s in &d.steps {
        for (i, field) in s.fields.iter().enumerate() {
            sizes.push(FieldSizes { k: s.k, i: i + 1, derivative_max: [0.0; 3], holder2: 0.0 });
            let fs = sizes.last_mut().unwrap();
            let mut centers = 0;
            for x in &samples.points {
                let mut ev = Evaluator::new(x, 2)?;
                let mut jets = Vec::with_capacity(field.len());
                let mut ok = true;
                for e in field {
                    match ev.jet(e) {
                        Ok(j) => jets.push(j),
                        Err(JetError::Domain { .. }) => {
                            ok = false;
                            break;
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
                if !ok {
                    continue;
                }
                for j in &jets {
                    for deg in 0..3 {
                        fs.derivative_max[deg] = fs.derivative_max[deg].max(j.max_abs(deg));
                    }
                }
                if centers < HOLDER_CENTERS && grid.nvars > 0 {
                    let mut got = true;
                    for e in field.iter().filter(|e| e.as_const().is_none()) {
                        match holder_seminorms_degree(e, x, 2, delta, &grid.pairs, grid.seed) {
                            Ok(v) => {
                                for (_, h) in v {
                                    fs.holder2 = fs.holder2.max(h);
                                }
                            }
                            Err(JetError::Domain { .. }) => got = false,
                            Err(e) => return Err(e.into()),
                        }
                    }
                    if got {
                        centers += 1;
                    }
                }
            }
        }
    }
    for x in &samples.points {
        let mut ev = Evaluator::new(x, 0)?;
        let mut sum = SymMatrix::zeros(d.n);
        let mut zz = SymMatrix::zeros(d.n);
        let mut ok = true;
        for s in &d.steps {
            let vals = |v: &[ScalarExpr], ev: &mut Evaluator| v.iter().map(|e| ev.value(e)).collect::<Result<Vec<f64>, _>>();
            let z = match vals(&s.z, &mut ev) {
                Ok(z) => z,
                Err(JetError::Domain { .. }) => {
                    ok = false;
                    break;
                }
                Err(e) => return Err(e.into()),
            };
            zz = zz.add(&SymMatrix::outer(&z))?;
            for f in &s.fields {
                match vals(f, &mut ev) {
                    Ok(xv) => sum = sum.add(&SymMatrix::outer(&xv))?,
                    Err(JetError::Domain { .. }) => ok = false,
                    Err(e) => return Err(e.into()),
                }
            }
        }
        if !ok {
            counts.excluded += 1;
            continue;
        }
        counts.evaluated += 1;
        let r = rel_residual(&zz, &sum);
        if witness.is_none() || r > worst {
            worst = r;
            witness = Some(x.clone());
        }
    }
    let verdict = if counts.evaluated == 0 {
        Verdict::InconclusiveByFlatness
    } else if worst <= RECONSTRUCTION_TOL {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let mut r = CheckReport::new(Condition::SquareAssembly, verdict)
        .param("tolerance", RECONSTRUCTION_TOL)
        .param("delta", delta)
        .detail("fields", sizes);
    r.worst_ratio = Some(worst);
    r.witness = witness;
    r.counts = counts;
    r.label = Some("sum_i X_ki X_ki^T = Z_k Z_k^T".into());
    Ok(r)
}

impl SquareDecomposition {
    pub fn certificate(&self, c: Condition) -> Option<&CheckReport> {
        self.certificates.iter().find_map(|r| r.find(c))
    }

    /// Values of the assembled right-hand side at `x`.
    pub fn assembled_at(&self, x: &[f64]) -> Result<SymMatrix, JetError> {
        let mut ev = Evaluator::new(x, 0)?;
        assembled(self, &mut ev)
    }

    /// Values of `Z_k` at `x`, one vector per step.
    pub fn z_at(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, JetError> {
        let mut ev = Evaluator::new(x, 0)?;
        self.steps.iter().map(|s| s.z.iter().map(|e| ev.value(e)).collect()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("decompositions always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::ScalarSosBackend;
    use crate::symmat::SymMatrix;

    fn point() -> GridSpec {
        GridSpec::explicit(vec![vec![]])
    }

    fn consts(rows: &[Vec<f64>]) -> SymMatFun {
        SymMatFun::constant(&SymMatrix::from_rows(rows).unwrap(), 0)
    }

    #[test]
    fn identity_peels_to_identity() {
        let a = SymMatFun::constant(&SymMatrix::identity(3), 0);
        let o = one_sd(&a, &point()).unwrap();
        assert_eq!(o.z.iter().map(|e| e.as_const().unwrap()).collect::<Vec<_>>(), vec![1.0, 0.0, 0.0]);
        assert_eq!(o.q.unwrap().eval(&[]).unwrap(), SymMatrix::identity(2));
    }

    #[test]
    fn two_by_two_constant() {
        let o = one_sd(&consts(&[vec![4.0, 2.0], vec![2.0, 5.0]]), &point()).unwrap();
        let z: Vec<f64> = o.z.iter().map(|e| e.as_const().unwrap()).collect();
        assert_eq!(z, vec![2.0, 1.0]);
        assert_eq!(o.q.unwrap().get(0, 0).as_const(), Some(4.0));
    }

    #[test]
    fn diagonal_full_peel() {
        let a = consts(&[vec![4.0, 0.0, 0.0], vec![0.0, 9.0, 0.0], vec![0.0, 0.0, 25.0]]);
        let d = iterated_sd(&a, 3, &point()).unwrap();
        let z = d.z_at(&[]).unwrap();
        assert_eq!(z[0], vec![2.0, 0.0, 0.0]);
        assert_eq!(z[1], vec![0.0, 3.0, 0.0]);
        assert_eq!(d.residual.unwrap().get(0, 0).as_const(), Some(25.0));
    }

    #[test]
    fn depth_out_of_range() {
        let a = SymMatFun::constant(&SymMatrix::identity(2), 0);
        assert!(matches!(iterated_sd(&a, 4, &point()), Err(DecomposeError::Depth { .. })));
        assert!(matches!(iterated_sd(&a, 0, &point()), Err(DecomposeError::Depth { .. })));
    }

    #[test]
    fn vanishing_pivot_is_an_error() {
        let x = ScalarExpr::var(0);
        let a = SymMatFun::new(2, 1, |i, j| if i == j { x.powi(2) } else { ScalarExpr::zero() });
        let g = GridSpec::explicit(vec![vec![0.0], vec![0.5]]);
        assert!(matches!(one_sd(&a, &g), Err(DecomposeError::PivotVanishing { .. })));
    }

    #[test]
    fn flat_pivot_is_excluded() {
        let x = ScalarExpr::var(0);
        let a = SymMatFun::new(2, 1, |i, j| if i == j { x.flat() } else { ScalarExpr::zero() });
        let g = GridSpec::explicit(vec![vec![0.0], vec![0.5]]);
        let o = one_sd(&a, &g).unwrap();
        assert_eq!(o.counts.excluded, 1);
        assert_eq!(o.counts.evaluated, 1);
    }

    #[test]
    fn grushin_peel_and_fields() {
        let x = ScalarExpr::var(0);
        let f = x.flat();
        let g = 0.5;
        let a = SymMatFun::new(2, 1, |i, j| match (i, j) {
            (0, 0) => ScalarExpr::one(),
            (1, 1) => f.powi(2),
            _ => &f * g,
        });
        let grid = GridSpec::shells(1, 0.05, 1.0, 20, 2);
        let d = iterated_sd(&a, 2, &grid).unwrap();
        assert!(d.certificate(Condition::Reconstruction).unwrap().passed());
        let comp = d.certificate(Condition::ResidualReferenceComparable).unwrap();
        let beta = comp.details["beta"].as_f64().unwrap();
        assert!((beta - 0.75).abs() < 1e-12);
        let d = assemble_x(&d, &ScalarSosBackend::principal_sqrt(0.1), 0.25, 0.1, 0.1, &grid).unwrap();
        let xf = &d.steps[0].fields[0];
        for t in [0.3, 0.7, -0.4] {
            let fx = (-1.0 / (t * t) as f64).exp();
            let v0 = crate::jet::eval(&xf[0], &[t]).unwrap();
            let v1 = crate::jet::eval(&xf[1], &[t]).unwrap();
            assert_eq!(v0, 1.0);
            assert!((v1 - g * fx).abs() <= 1e-15 * fx);
        }
        assert!(d.certificate(Condition::SquareAssembly).unwrap().passed());
    }
}

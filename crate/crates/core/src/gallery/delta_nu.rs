use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GalleryError;
use crate::decompose::SymMatFun;
use crate::grid::{norm, stream_rng, GridSpec};
use crate::jet::{Evaluator, Modulus, ScalarExpr};
use crate::symmat::SymMatrix;

pub const MAX_NU: usize = 16;
/// Cap on `sphere_samples * multistarts * (nu + 1)`.
pub const MAX_BUDGET: usize = 50_000_000;

/// How a collection of linear forms is subtracted from `L(W)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaNuMode {
    /// `S_l(W) = F_l W` with `F_l` a 3x3 coefficient matrix; the residual is
    /// `L(W) - sum_l S_l S_l^T`.
    #[default]
    MatrixDyad,
    /// `S_l(W) = f_l . W` scalar; the residual is `L(W) - (sum_l S_l^2) I`.
    Scalar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaNuQuery {
    pub nu: usize,
    /// Bound on every coefficient.
    pub c0: f64,
    #[serde(default = "default_samples")]
    pub sphere_samples: usize,
    #[serde(default = "default_starts")]
    pub multistarts: usize,
    #[serde(default)]
    pub mode: DeltaNuMode,
    #[serde(default = "default_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_samples() -> usize {
    400
}

fn default_starts() -> usize {
    8
}

fn default_iters() -> usize {
    200
}

impl DeltaNuQuery {
    pub fn new(nu: usize, c0: f64) -> DeltaNuQuery {
        DeltaNuQuery {
            nu,
            c0,
            sphere_samples: default_samples(),
            multistarts: default_starts(),
            mode: DeltaNuMode::default(),
            max_iters: default_iters(),
            seed: 0,
        }
    }

    fn validate(&self) -> Result<(), GalleryError> {
        if self.nu > MAX_NU {
            return Err(GalleryError::Budget(format!("nu = {} above {MAX_NU}", self.nu)));
        }
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err(GalleryError::Param(format!("C0 = {} must be positive", self.c0)));
        }
        if self.sphere_samples == 0 || self.multistarts == 0 {
            return Err(GalleryError::Param("sample and start counts must be positive".into()));
        }
        let budget = self.sphere_samples.saturating_mul(self.multistarts).saturating_mul(self.nu + 1);
        if budget > MAX_BUDGET {
            return Err(GalleryError::Budget(format!("sample budget {budget} above {MAX_BUDGET}")));
        }
        Ok(())
    }

    fn dim(&self) -> usize {
        match self.mode {
            DeltaNuMode::MatrixDyad => 9,
            DeltaNuMode::Scalar => 3,
        }
    }
}

/// Estimates for every `0..=nu` together with the best coefficients found.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaNuProfile {
    pub estimates: Vec<f64>,
    pub best: Vec<f64>,
}

struct Objective {
    mats: Vec<SymMatrix>,
    points: Vec<[f64; 3]>,
    mode: DeltaNuMode,
}

impl Objective {
    /// Squared Frobenius residual at sample `k`.
    fn at(&self, coeffs: &[f64], k: usize) -> f64 {
        let w = &self.points[k];
        let l = &self.mats[k];
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = l.get(i, j);
            }
        }
        match self.mode {
            DeltaNuMode::MatrixDyad => {
                for f in coeffs.chunks(9) {
                    let s = [
                        f[0] * w[0] + f[1] * w[1] + f[2] * w[2],
                        f[3] * w[0] + f[4] * w[1] + f[5] * w[2],
                        f[6] * w[0] + f[7] * w[1] + f[8] * w[2],
                    ];
                    for i in 0..3 {
                        for j in 0..3 {
                            m[i][j] -= s[i] * s[j];
                        }
                    }
                }
            }
            DeltaNuMode::Scalar => {
                let sum: f64 = coeffs.chunks(3).map(|f| (f[0] * w[0] + f[1] * w[1] + f[2] * w[2]).powi(2)).sum();
                for (i, row) in m.iter_mut().enumerate() {
                    row[i] -= sum;
                }
            }
        }
        m.iter().flatten().map(|v| v * v).sum()
    }

    /// Inf over the sphere samples.
    fn value(&self, coeffs: &[f64]) -> f64 {
        (0..self.points.len()).map(|k| self.at(coeffs, k)).fold(f64::INFINITY, f64::min)
    }
}

/// Compass search in the box `[-c0, c0]^d`, halving the step on failure.
fn compass(obj: &Objective, start: Vec<f64>, c0: f64, max_iters: usize) -> (f64, Vec<f64>) {
    let mut x = start;
    let mut fx = obj.value(&x);
    let mut step = c0 / 4.0;
    for _ in 0..max_iters {
        let mut improved = false;
        for i in 0..x.len() {
            for dir in [1.0, -1.0] {
                let old = x[i];
                x[i] = (old + dir * step).clamp(-c0, c0);
                let f = obj.value(&x);
                if f < fx {
                    fx = f;
                    improved = true;
                    break;
                }
                x[i] = old;
            }
        }
        if !improved {
            step /= 2.0;
            if step < c0 * 1e-9 {
                break;
            }
        }
    }
    (fx, x)
}

fn objective(l: &SymMatFun, q: &DeltaNuQuery) -> Result<Objective, GalleryError> {
    if l.n() != 3 || l.nvars() > 3 {
        return Err(GalleryError::Param("delta_nu needs a 3x3 form in at most 3 variables".into()));
    }
    let pts = GridSpec::sphere(3, q.sphere_samples).with_seed(q.seed).points();
    let mut mats = Vec::with_capacity(pts.len());
    let mut points = Vec::with_capacity(pts.len());
    for p in pts {
        let r = norm(&p);
        let w = [p[0] / r, p[1] / r, p[2] / r];
        mats.push(l.eval(&w)?);
        points.push(w);
    }
    Ok(Objective { mats, points, mode: q.mode })
}

/// `delta_k` for `k = 0..=nu`: the smallest sampled value of
/// `inf_W |L(W) - sum_l S_l(W) S_l(W)^T|_F` found by multistart compass
/// search over coefficients bounded by `C0`. Every search for `k` also
/// starts from the best solution for `k - 1` padded with a zero form, so the
/// profile is nonincreasing.
pub fn delta_nu_profile(l: &SymMatFun, q: &DeltaNuQuery) -> Result<DeltaNuProfile, GalleryError> {
    q.validate()?;
    let obj = objective(l, q)?;
    let d = q.dim();
    let mut best: Vec<f64> = Vec::new();
    let mut estimates = vec![obj.value(&best).max(0.0).sqrt()];
    for k in 1..=q.nu {
        let mut starts: Vec<Vec<f64>> = Vec::with_capacity(q.multistarts + 1);
        let mut padded = best.clone();
        padded.resize(k * d, 0.0);
        starts.push(padded);
        let mut rng = stream_rng(q.seed, 1000 + k as u64);
        for _ in 0..q.multistarts {
            starts.push((0..k * d).map(|_| rng.gen_range(-q.c0..=q.c0)).collect());
        }
        let runs: Vec<(f64, Vec<f64>)> =
            starts.into_par_iter().map(|s| compass(&obj, s, q.c0, q.max_iters)).collect();
        let (f, x) = runs.into_iter().fold((f64::INFINITY, Vec::new()), |acc, r| if r.0 < acc.0 { r } else { acc });
        let prev = *estimates.last().unwrap_or(&f64::INFINITY);
        let v = f.max(0.0).sqrt();
        if v <= prev {
            best = x;
            estimates.push(v);
        } else {
            // the padded start reproduces `prev`; keep it
            best.resize(k * d, 0.0);
            estimates.push(prev);
        }
    }
    Ok(DeltaNuProfile { estimates, best })
}

pub fn delta_nu_estimate(l: &SymMatFun, q: &DeltaNuQuery) -> Result<f64, GalleryError> {
    Ok(*delta_nu_profile(l, q)?.estimates.last().unwrap_or(&0.0))
}

/// Sampled lower bound for
/// `sup|h| + sup|grad h| + sup |grad h(W) - grad h(W')| / omega(|W - W'|)`
/// over the grid points in the closed unit ball. `|h|` is the Euclidean
/// norm of the vector and `|grad h|` the Frobenius norm of its Jacobian;
/// pairs farther apart than 1 are skipped.
pub fn c1omega_norm_estimate(h: &[ScalarExpr], omega: Modulus, grid: &GridSpec) -> Result<f64, GalleryError> {
    let pts: Vec<Vec<f64>> = grid.samples().points.into_iter().filter(|p| norm(p) <= 1.0 + 1e-12).collect();
    let vals: Vec<Result<(f64, Vec<f64>), GalleryError>> = pts
        .par_iter()
        .map(|x| {
            let mut ev = Evaluator::new(x, 1)?;
            let mut v2 = 0.0;
            let mut grad = Vec::with_capacity(h.len() * x.len());
            for e in h {
                let j = ev.jet(e)?;
                v2 += j.value().powi(2);
                grad.extend(j.gradient());
            }
            Ok((v2.sqrt(), grad))
        })
        .collect();
    let vals: Vec<(f64, Vec<f64>)> = vals.into_iter().collect::<Result<_, _>>()?;
    let sup_h = vals.iter().fold(0.0f64, |m, v| m.max(v.0));
    let sup_g = vals.iter().fold(0.0f64, |m, v| m.max(norm(&v.1)));
    let semi = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut best = 0.0f64;
            for j in i + 1..pts.len() {
                let d: Vec<f64> = pts[i].iter().zip(&pts[j]).map(|(a, b)| a - b).collect();
                let dist = norm(&d);
                if dist == 0.0 || dist > 1.0 {
                    continue;
                }
                let dg: Vec<f64> = vals[i].1.iter().zip(&vals[j].1).map(|(a, b)| a - b).collect();
                best = best.max(norm(&dg) / omega.eval(dist));
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(sup_h + sup_g + semi)
}

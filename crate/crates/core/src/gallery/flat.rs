use serde::{Deserialize, Serialize};

use super::q_lambda::q_lambda_in;
use super::GalleryError;
use crate::decompose::SymMatFun;
use crate::grid::{GridFactor, GridSpec, PointSet, Radii};
use crate::jet::{eval_log, Node, ScalarExpr};
use crate::report::{BoundRule, CheckReport, Condition, RatioSweep, Verdict};

/// Ingredients of `F = phi(t) Q_lambda(W) + (psi(t) + phi(r) h(t/r)) I_3`
/// on `B(0,1) x (-1,1)`, with `W = (x, y, z)` and `r = |W|`.
///
/// `phi`, `psi` and `h` are expressions in variable 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FPhiPsiParams {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_phi")]
    pub phi: ScalarExpr,
    /// Defaults to `(phi(t) t^2)^4`.
    #[serde(default)]
    pub psi: Option<ScalarExpr>,
    /// Defaults to the standard bump on `(-1, 1)`.
    #[serde(default)]
    pub h: Option<ScalarExpr>,
}

fn default_lambda() -> f64 {
    0.02
}

fn default_phi() -> ScalarExpr {
    ScalarExpr::var(0).flat()
}

impl Default for FPhiPsiParams {
    fn default() -> Self {
        FPhiPsiParams { lambda: default_lambda(), phi: default_phi(), psi: None, h: None }
    }
}

impl FPhiPsiParams {
    /// Same `phi`, with `psi = (phi(t) t^2)^k`.
    pub fn with_psi_power(mut self, k: i32) -> Self {
        let t = ScalarExpr::var(0);
        self.psi = Some((&self.phi * t.powi(2)).powi(k));
        self
    }

    pub fn psi(&self) -> ScalarExpr {
        self.psi.clone().unwrap_or_else(|| {
            let t = ScalarExpr::var(0);
            (&self.phi * t.powi(2)).powi(4)
        })
    }

    pub fn h(&self) -> ScalarExpr {
        self.h.clone().unwrap_or_else(|| ScalarExpr::var(0).bump())
    }

    pub fn validate(&self) -> Result<(), GalleryError> {
        if !(self.lambda >= 0.0 && self.lambda < 1.0) {
            return Err(GalleryError::Param(format!("lambda = {} outside [0, 1)", self.lambda)));
        }
        for (name, e) in [("phi", &self.phi), ("psi", &self.psi()), ("h", &self.h())] {
            if e.nvars() > 1 {
                return Err(GalleryError::Param(format!("{name} must be an expression in variable 0 only")));
            }
        }
        Ok(())
    }
}

/// `phi(r)` with `r^2 = s`. A flat primitive `exp(-c|t|^-p)` becomes
/// `exp(-c s^(-p/2))`, which stays differentiable at `s = 0`.
pub(crate) fn radial(phi: &ScalarExpr, s: &ScalarExpr) -> ScalarExpr {
    match phi.node() {
        Node::Flat { arg, coeff, power } if matches!(arg.node(), Node::Var { index: 0 }) => {
            s.flat_with(*coeff, power / 2.0)
        }
        _ => phi.substitute(0, &s.sqrt()),
    }
}

/// The 3x3 flat matrix function in `(x, y, z, t)` (variables 0..4).
pub fn build_f_phi_psi(p: &FPhiPsiParams) -> Result<SymMatFun, GalleryError> {
    p.validate()?;
    Ok(f_phi_psi_in(p, &[0, 1, 2], 3, 4))
}

/// `F` over the given variable slots, for embedding in larger blocks.
pub(crate) fn f_phi_psi_in(p: &FPhiPsiParams, w_vars: &[usize; 3], t_var: usize, nvars: usize) -> SymMatFun {
    let w: Vec<ScalarExpr> = w_vars.iter().map(|&i| ScalarExpr::var(i)).collect();
    let t = ScalarExpr::var(t_var);
    let s = ScalarExpr::sum(w.iter().map(|v| v.powi(2)).collect());
    let phi_t = p.phi.substitute(0, &t);
    let psi_t = p.psi().substitute(0, &t);
    let u = &t * s.sqrt().recip();
    let eta = radial(&p.phi, &s) * p.h().substitute(0, &u);
    let diag = &psi_t + &eta;
    let l = q_lambda_in(p.lambda, &w, nvars);
    l.map(|i, j, e| {
        let scaled = &phi_t * e;
        if i == j {
            scaled + &diag
        } else {
            scaled
        }
    })
}

/// Trace of `F`.
pub fn f_phi_psi_trace(p: &FPhiPsiParams) -> Result<ScalarExpr, GalleryError> {
    let f = build_f_phi_psi(p)?;
    Ok(ScalarExpr::sum(f.diag_entries()))
}

/// Product grid over `(W, t)`: `W` on geometric shells `r_min..r_max`
/// (`r_count` radii, `dirs` directions), `t` at `+-` geometric values in
/// `t_min..t_max`.
pub fn flat_domain_grid(
    (t_min, t_max, t_count): (f64, f64, usize),
    (r_min, r_max, r_count): (f64, f64, usize),
    dirs: usize,
) -> GridSpec {
    GridSpec::new(
        4,
        PointSet::Product {
            factors: vec![
                GridFactor {
                    vars: vec![0, 1, 2],
                    set: PointSet::Shells {
                        dim: 3,
                        radii: Radii::Geometric { min: r_min, max: r_max, count: r_count },
                        directions: dirs,
                    },
                },
                GridFactor {
                    vars: vec![3],
                    set: PointSet::Shells {
                        dim: 1,
                        radii: Radii::Geometric { min: t_min, max: t_max, count: t_count },
                        directions: 2,
                    },
                },
            ],
        },
    )
}

/// Whether `psi(t) <~ phi(t)^(2/beta) t^(4/beta)` as `t -> 0`, and whether
/// `tau(t) = psi(t) / (phi(t) t^2)` tends to 0. Both together make the
/// non-SOS obstruction for `C^{1,beta}` fields active; a bounded first ratio
/// also means the necessary divergence for such a decomposition fails.
///
/// `t` is the last coordinate of each grid point. Everything is evaluated in
/// log form, so samples far below the double range are fine.
pub fn failure_condition_check(p: &FPhiPsiParams, beta: f64, grid: &GridSpec) -> Result<CheckReport, GalleryError> {
    p.validate()?;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(GalleryError::Param(format!("beta = {beta} outside (0, 1)")));
    }
    let (phi, psi) = (p.phi.clone(), p.psi());
    let samples = grid.samples();
    let mut sweep = RatioSweep::new();
    sweep.excluded = samples.excluded;
    let mut taus: Vec<(f64, f64)> = Vec::new();
    let mut max_dev = 0.0f64;
    for x in &samples.points {
        let t = x.last().copied().unwrap_or(0.0).abs();
        if t == 0.0 {
            sweep.exclude();
            continue;
        }
        let lphi = eval_log(&phi, &[t])?;
        let lpsi = eval_log(&psi, &[t])?;
        if lphi.is_zero() {
            sweep.exclude();
            continue;
        }
        let lt = t.ln();
        let (ln_ratio, ln_tau) = if lpsi.is_zero() {
            (f64::NEG_INFINITY, f64::NEG_INFINITY)
        } else {
            (
                lpsi.ln_abs - 2.0 / beta * lphi.ln_abs - 4.0 / beta * lt,
                lpsi.ln_abs - lphi.ln_abs - 2.0 * lt,
            )
        };
        let ratio = ln_ratio.clamp(-745.0, 709.0).exp();
        max_dev = max_dev.max((ratio - 1.0).abs());
        sweep.push_ratio(t, &[t], ratio);
        taus.push((t, ln_tau));
    }
    let rule = BoundRule::default();
    let bounded = sweep.report(Condition::FailureCondition, &rule);
    taus.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (tau_to_zero, decades) = match (taus.first(), taus.last()) {
        (Some(lo), Some(hi)) if taus.len() > 1 => {
            let monotone = taus.windows(2).all(|w| w[0].1 <= w[1].1 + 1e-9 * w[1].1.abs().max(1.0));
            (monotone && lo.1 <= hi.1 - 1e3f64.ln(), (hi.0 / lo.0).log10())
        }
        _ => (false, 0.0),
    };
    let divergence_fails = bounded.verdict == Verdict::Pass;
    let active = divergence_fails && tau_to_zero;
    let mut r = CheckReport::new(
        Condition::FailureCondition,
        if active { Verdict::Pass } else { Verdict::Inconclusive },
    )
    .param("beta", beta)
    .detail("obstruction", if active { "active" } else { "inactive" })
    .detail("ratio_bounded", divergence_fails)
    .detail("divergence_fails", divergence_fails)
    .detail("tau_to_zero", tau_to_zero)
    .detail("t_decades", decades)
    .detail("max_abs_ratio_minus_one", max_dev);
    r.worst_ratio = bounded.worst_ratio;
    r.constant = bounded.worst_ratio;
    r.witness = bounded.witness.clone();
    r.counts = bounded.counts.clone();
    if let Some(g) = bounded.details.get("growth_exponent") {
        r = r.detail("growth_exponent", g.clone());
    }
    if decades < 3.0 {
        r = r.note("t spans fewer than three decades");
    }
    if !tau_to_zero {
        r = r.note("tau(t) does not tend to 0 on the sampled range");
    }
    Ok(r)
}

use serde::{Deserialize, Serialize};

use super::eval::{Evaluator, JetError};
use super::expr::ScalarExpr;
use crate::grid::{norm, random_unit, stream_rng, GridSpec};
use crate::report::{CheckReport, Condition, Counts, Verdict};

/// Modulus of continuity `omega_s`: `t^s` for `s > 0`, and the logarithmic
/// `1/(2 + ln(1/t))` for `s = 0`. Arguments above 1 are clamped to 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Modulus {
    pub s: f64,
}

impl Modulus {
    pub fn power(s: f64) -> Modulus {
        Modulus { s }
    }

    pub fn log() -> Modulus {
        Modulus { s: 0.0 }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        if t == 0.0 {
            return 0.0;
        }
        if self.s == 0.0 {
            1.0 / (2.0 + (1.0 / t).ln())
        } else {
            t.powf(self.s)
        }
    }
}

/// `f(y) <= C * omega_s(f(x))` for `y` in the ball `B(x/2, |x|/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneSpec {
    pub s: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MonotoneError {
    #[error("invalid monotonicity spec: {0}")]
    Spec(String),
    #[error("every sampled point of the ball around {0:?} lies inside the exclusion radius")]
    BallExcluded(Vec<f64>),
    #[error(transparent)]
    Jet(#[from] JetError),
}

impl MonotoneSpec {
    pub fn new(s: f64, c: f64) -> Result<MonotoneSpec, MonotoneError> {
        if !(0.0..=1.0).contains(&s) {
            return Err(MonotoneError::Spec(format!("exponent {s} outside [0, 1]")));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(MonotoneError::Spec(format!("constant {c} must be finite and positive")));
        }
        Ok(MonotoneSpec { s, c })
    }

    pub fn modulus(&self) -> Modulus {
        Modulus { s: self.s }
    }
}

const RHO: [f64; 5] = [0.0, 0.5, 0.9, 0.99, 0.999];

/// Sampled ω-monotonicity test. The worst ratio is `sup f(y) / omega(f(x))`;
/// the verdict passes when it stays at most `C`. Samples with `f(x) > 1`
/// are flagged (omega is clamped there).
pub fn omega_monotone_check(
    f: &ScalarExpr,
    spec: &MonotoneSpec,
    grid: &GridSpec,
) -> Result<CheckReport, MonotoneError> {
    let samples = grid.samples();
    let omega = spec.modulus();
    let mut rng = stream_rng(grid.seed, 2);
    let dim = grid.nvars;
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for _ in 0..(2 * dim + 4) {
        dirs.push(random_unit(dim, &mut rng));
    }
    let mut worst = 0.0f64;
    let mut witness: Option<Vec<f64>> = None;
    let mut counts = Counts::default();
    for x in &samples.points {
        let r = norm(x);
        if r == 0.0 {
            continue;
        }
        let fx = Evaluator::new(x, 0)?.value(f)?;
        if fx > 1.0 {
            counts.flagged += 1;
        }
        let w = omega.eval(fx);
        let toward: Vec<f64> = x.iter().map(|v| v / r).collect();
        let away: Vec<f64> = toward.iter().map(|v| -v).collect();
        let mut any = false;
        for d in std::iter::once(&toward).chain(std::iter::once(&away)).chain(dirs.iter()) {
            for rho in RHO {
                let y: Vec<f64> = x.iter().zip(d).map(|(xi, di)| 0.5 * xi + 0.5 * r * rho * di).collect();
                if grid.radius(&y) < grid.exclusion_radius {
                    continue;
                }
                any = true;
                let fy = Evaluator::new(&y, 0)?.value(f)?;
                if fy == 0.0 && w == 0.0 {
                    counts.excluded += 1;
                    continue;
                }
                counts.evaluated += 1;
                let ratio = if w == 0.0 { f64::INFINITY } else { fy / w };
                if witness.is_none() || ratio > worst {
                    worst = ratio;
                    witness = Some(x.clone());
                }
            }
        }
        if !any {
            return Err(MonotoneError::BallExcluded(x.clone()));
        }
    }
    let verdict = if counts.evaluated == 0 {
        Verdict::InconclusiveByFlatness
    } else if worst <= spec.c * (1.0 + 1e-12) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let mut rep = CheckReport::new(Condition::OmegaMonotone, verdict)
        .param("s", spec.s)
        .param("C", spec.c);
    rep.worst_ratio = Some(worst);
    rep.constant = Some(worst);
    rep.witness = witness;
    rep.counts = counts;
    if rep.counts.flagged > 0 {
        rep = rep.note("f(x) > 1 at some samples; omega evaluated at the clamped argument 1");
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r2() -> ScalarExpr {
        let x = ScalarExpr::var(0);
        let y = ScalarExpr::var(1);
        x.powi(2) + y.powi(2)
    }

    fn grid() -> GridSpec {
        GridSpec::shells(2, 0.05, 0.7, 8, 6).with_exclusion(0.01)
    }

    #[test]
    fn constant_is_monotone() {
        let spec = MonotoneSpec::new(0.5, 1.0).unwrap();
        let r = omega_monotone_check(&ScalarExpr::one(), &spec, &grid()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!((r.worst_ratio.unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn squared_norm_is_monotone() {
        let spec = MonotoneSpec::new(1.0, 1.0).unwrap();
        let r = omega_monotone_check(&r2(), &spec, &grid()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.worst_ratio.unwrap() <= 1.0);
    }

    #[test]
    fn flat_radial_profile_is_monotone() {
        let spec = MonotoneSpec::new(1.0, 1.0).unwrap();
        let f = (-(r2().sqrt().recip())).exp();
        let r = omega_monotone_check(&f, &spec, &grid()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn log_modulus_clamps() {
        let m = Modulus::log();
        assert_eq!(m.eval(0.0), 0.0);
        assert_eq!(m.eval(1.0), 0.5);
        assert_eq!(m.eval(5.0), 0.5);
    }

    #[test]
    fn ball_inside_exclusion_is_an_error() {
        let spec = MonotoneSpec::new(1.0, 1.0).unwrap();
        let g = GridSpec::explicit(vec![vec![0.1, 0.0]]).with_exclusion(0.1);
        let e = omega_monotone_check(&r2(), &spec, &g);
        assert!(matches!(e, Err(MonotoneError::BallExcluded(_))));
    }

    #[test]
    fn spec_validation() {
        assert!(MonotoneSpec::new(1.5, 1.0).is_err());
        assert!(MonotoneSpec::new(0.5, 0.0).is_err());
    }
}

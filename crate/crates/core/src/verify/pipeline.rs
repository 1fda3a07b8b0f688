use serde::{Deserialize, Serialize};

use super::{
    diag_elliptic_check, quasiconformal_check, strong_check_with, subordinate_check, tail_diagonal_check,
    StrongParams, VerifyError,
};
use crate::decompose::{assemble_x, default_delta_prime, iterated_sd, BackendId, ScalarSosBackend, SquareDecomposition, SymMatFun};
use crate::grid::GridSpec;
use crate::report::{CheckReport, Condition, Verdict};

/// Parameters of the end-to-end decomposition run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    /// Depth: peel `p - 1` times. `p = 1` keeps `A` whole.
    pub p: usize,
    pub epsilon: f64,
    pub delta: f64,
    /// Defaults to `2 delta (1 + delta) / (2 + delta)`.
    #[serde(default)]
    pub delta_prime: Option<f64>,
    pub delta_pp: f64,
    #[serde(default = "default_backend")]
    pub backend: BackendId,
    #[serde(default = "default_cells")]
    pub cells: usize,
    /// Bound `R` for pairwise ratios of the tail diagonal entries.
    #[serde(default = "default_tail_ratio")]
    pub tail_ratio: f64,
    #[serde(default = "default_centers")]
    pub holder_centers: usize,
    /// Decompose even when a hypothesis fails.
    #[serde(default)]
    pub force: bool,
}

fn default_backend() -> BackendId {
    BackendId::PrincipalSqrt
}

fn default_cells() -> usize {
    2
}

fn default_tail_ratio() -> f64 {
    100.0
}

fn default_centers() -> usize {
    4
}

impl PipelineParams {
    pub fn new(p: usize, epsilon: f64, delta: f64, delta_pp: f64) -> PipelineParams {
        PipelineParams {
            p,
            epsilon,
            delta,
            delta_prime: None,
            delta_pp,
            backend: default_backend(),
            cells: default_cells(),
            tail_ratio: default_tail_ratio(),
            holder_centers: default_centers(),
            force: false,
        }
    }

    pub fn delta_prime(&self) -> f64 {
        self.delta_prime.unwrap_or_else(|| default_delta_prime(self.delta))
    }

    pub fn backend(&self) -> ScalarSosBackend {
        let b = match self.backend {
            BackendId::PrincipalSqrt => ScalarSosBackend::principal_sqrt(self.delta),
            BackendId::SplitBySignCell => ScalarSosBackend::split_by_sign_cell(self.delta, self.cells),
        };
        b.with_epsilon(self.epsilon).with_delta_prime(self.delta_prime())
    }

    pub fn strong(&self, ell: usize) -> StrongParams {
        let mut s = StrongParams::new(ell, self.epsilon, self.delta_prime(), self.delta_pp);
        s.delta = Some(self.delta);
        s.holder_centers = self.holder_centers;
        s
    }

    /// Ranges the decomposition theorem assumes.
    pub fn validate(&self, n: usize) -> Result<(), VerifyError> {
        let bad = |s: String| Err(VerifyError::Param(s));
        if !(1..=n + 1).contains(&self.p) {
            return bad(format!("p = {} outside 1..={}", self.p, n + 1));
        }
        if !(0.25..1.0).contains(&self.epsilon) {
            return bad(format!("epsilon = {} outside [1/4, 1)", self.epsilon));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta = {} outside (0, 1)", self.delta));
        }
        let dp = self.delta_prime();
        if !(dp > 0.0 && dp < 1.0) {
            return bad(format!("delta' = {dp} outside (0, 1)"));
        }
        if !(self.delta_pp > self.delta && self.delta_pp < 1.0) {
            return bad(format!("delta'' = {} must lie in (delta, 1)", self.delta_pp));
        }
        if !(self.tail_ratio >= 1.0) {
            return bad(format!("tail ratio {} below 1", self.tail_ratio));
        }
        Ok(())
    }
}

/// Why the pipeline declined to decompose.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refusal {
    /// Identifiers of the failed conditions, most specific first.
    pub failed: Vec<String>,
    pub witness: Option<Vec<f64>>,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutcome {
    pub decomposition: Option<SquareDecomposition>,
    pub reports: Vec<CheckReport>,
    pub refusal: Option<Refusal>,
    pub summary: CheckReport,
}

fn failed_leaves(r: &CheckReport, out: &mut Vec<(String, Option<Vec<f64>>)>) {
    if r.verdict != Verdict::Fail {
        return;
    }
    let before = out.len();
    for p in &r.parts {
        failed_leaves(p, out);
    }
    if out.len() == before {
        out.push((r.condition.id(), r.witness.clone()));
    }
}

/// Check the hypotheses, then peel `p - 1` times, factor the pivots,
/// assemble the fields and certify the residual. A failed hypothesis stops
/// the run with a [`Refusal`] unless `force` is set.
pub fn decomposition_pipeline(
    a: &SymMatFun,
    params: &PipelineParams,
    grid: &GridSpec,
) -> Result<PipelineOutcome, VerifyError> {
    let n = a.n();
    params.validate(n)?;
    let p = params.p;
    let mut reports = Vec::new();
    if p == 1 {
        let d = iterated_sd(a, 1, grid)?;
        reports.push(quasiconformal_check(a, None, grid)?);
        return Ok(finish(Some(d), reports, None, Vec::new()));
    }
    reports.push(diag_elliptic_check(a, grid)?);
    reports.push(strong_check_with(a, &params.strong(p - 1), grid)?);
    if p <= n {
        reports.push(tail_diagonal_check(a, p, params.tail_ratio, grid)?);
    }
    let mut failed = Vec::new();
    for r in &reports {
        failed_leaves(r, &mut failed);
    }
    let refusal = (!failed.is_empty()).then(|| Refusal {
        message: format!(
            "hypothesis failed: {}",
            failed.iter().map(|(c, _)| c.as_str()).collect::<Vec<_>>().join(", ")
        ),
        witness: failed[0].1.clone(),
        failed: failed.iter().map(|(c, _)| c.clone()).collect(),
    });
    if refusal.is_some() && !params.force {
        return Ok(finish(None, reports, refusal, Vec::new()));
    }
    let mut notes = Vec::new();
    let d = iterated_sd(a, p, grid)?;
    let d = assemble_x(&d, &params.backend(), params.epsilon, params.delta, params.delta_pp, grid)?;
    if let Some(q) = &d.residual {
        reports.push(quasiconformal_check(q, Some(a.get(p - 1, p - 1)), grid)?);
        let at_p = strong_check_with(a, &params.strong(p), grid)?;
        if at_p.passed() {
            let sub = subordinate_check(q, grid)?;
            let mut r = CheckReport::combine(Condition::ResidualSubordinate, vec![sub]);
            r.label = Some("residual block".into());
            reports.push(r);
        } else {
            notes.push("regularity at ell = p not established; residual subordination not checked".to_string());
        }
    }
    Ok(finish(Some(d), reports, refusal, notes))
}

fn finish(
    d: Option<SquareDecomposition>,
    reports: Vec<CheckReport>,
    refusal: Option<Refusal>,
    notes: Vec<String>,
) -> PipelineOutcome {
    let mut all = reports.clone();
    if let Some(d) = &d {
        all.extend(d.certificates.iter().cloned());
    }
    let mut summary = CheckReport::combine(Condition::DecompositionPipeline, all);
    if refusal.is_some() && d.is_none() {
        summary.verdict = Verdict::Fail;
        summary = summary.note("decomposition refused");
    }
    summary.notes.extend(notes);
    // parts are kept in `reports` and the decomposition's certificates
    summary.parts.clear();
    PipelineOutcome { decomposition: d, reports, refusal, summary }
}

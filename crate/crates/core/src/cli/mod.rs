//! Batch front end: JSON run configurations in, JSON reports out.
//!
//! A [`RunConfig`] names a matrix (a gallery item or an inline expression
//! tree), a pipeline and its parameters. [`run`] executes it and returns a
//! [`Report`]; the exit code is part of the report.

mod config;

pub use config::{config_schema, ConfigError, MatrixSource, PipelineKind, RunConfig, CONFIG_VERSION};

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::decompose::{SquareDecomposition, SymMatFun};
use crate::gallery::{
    build_blocks, comparability_check, failure_condition_check, flat_domain_grid, list_gallery, m7_trace_reference,
    q_lambda_non_sos_certificate, q_lambda_positivity_certificate, BlockKind, BlockParams, FPhiPsiParams,
    GalleryEntry, QLambdaParams,
};
use crate::grid::GridSpec;
use crate::report::{CheckReport, Condition, Verdict};
use crate::verify::{
    decomposition_pipeline, diag_elliptic_check, strong_check_with, subordinate_check, PipelineParams, Refusal,
};

pub const REPORT_SCHEMA: &str = "matsos-report/1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_REFUSED: i32 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub k: usize,
    pub pivot: String,
    pub z: Vec<String>,
    pub fields: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualSummary {
    pub size: usize,
    /// Upper triangle, row by row.
    pub display: Vec<Vec<String>>,
    pub expr: SymMatFun,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionSummary {
    pub depth: usize,
    pub steps: Vec<StepSummary>,
    pub residual: Option<ResidualSummary>,
    /// Largest sampled relative error of `A - sum Z Z^T - Q`.
    #[serde(with = "crate::report::float_repr::option")]
    pub reconstruction_max_error: Option<f64>,
    #[serde(with = "crate::report::float_repr::option")]
    pub assembly_max_error: Option<f64>,
}

impl DecompositionSummary {
    pub fn of(d: &SquareDecomposition) -> DecompositionSummary {
        let worst = |c| d.certificate(c).and_then(|r| r.worst_ratio);
        DecompositionSummary {
            depth: d.depth,
            steps: d
                .steps
                .iter()
                .map(|s| StepSummary {
                    k: s.k,
                    pivot: s.pivot.to_string(),
                    z: s.z.iter().map(|e| e.to_string()).collect(),
                    fields: s.fields.len(),
                })
                .collect(),
            residual: d.residual.as_ref().map(|q| ResidualSummary {
                size: q.n(),
                display: (0..q.n()).map(|i| (i..q.n()).map(|j| q.get(i, j).to_string()).collect()).collect(),
                expr: q.clone(),
            }),
            reconstruction_max_error: worst(Condition::Reconstruction),
            assembly_max_error: worst(Condition::SquareAssembly),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleTotals {
    pub evaluated: usize,
    pub excluded: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub tool_version: String,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gallery: Option<GalleryEntry>,
    pub checks: Vec<CheckReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecompositionSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refusal: Option<Refusal>,
    /// Extra certificate payloads keyed by name.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub certificates: BTreeMap<String, Value>,
    pub samples: SampleTotals,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub exit_code: i32,
    pub timing_ms: u64,
}

impl Report {
    fn new(config: &RunConfig) -> Report {
        Report {
            schema: REPORT_SCHEMA.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config: config.clone(),
            gallery: config.gallery_name().and_then(|n| list_gallery().into_iter().find(|e| e.name == n)),
            checks: Vec::new(),
            decomposition: None,
            refusal: None,
            certificates: BTreeMap::new(),
            samples: SampleTotals::default(),
            verdict: Verdict::Pass,
            error: None,
            exit_code: EXIT_OK,
            timing_ms: 0,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }

    /// JSON with the timing field zeroed, for reproducibility comparisons.
    pub fn to_json_untimed(&self) -> String {
        Report { timing_ms: 0, ..self.clone() }.to_json()
    }

    pub fn check(&self, c: Condition) -> Option<&CheckReport> {
        self.checks.iter().find_map(|r| r.find(c))
    }

    fn finish(&mut self) {
        let mut totals = SampleTotals::default();
        for r in &self.checks {
            totals.evaluated += r.counts.evaluated;
            totals.excluded += r.counts.excluded;
        }
        self.samples = totals;
        let verdicts: Vec<Verdict> = self.checks.iter().map(|r| r.verdict).collect();
        self.verdict = if self.error.is_some() || verdicts.contains(&Verdict::Fail) || self.refusal.is_some() {
            Verdict::Fail
        } else if verdicts.iter().any(|v| *v != Verdict::Pass) {
            Verdict::Inconclusive
        } else {
            Verdict::Pass
        };
        self.exit_code = if self.error.is_some() {
            EXIT_ERROR
        } else if self.verdict == Verdict::Fail {
            EXIT_REFUSED
        } else {
            EXIT_OK
        };
    }
}

type RunResult<T> = Result<T, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// A gallery check that is supposed to fail: passes iff `inner` fails.
fn expect_fail(inner: CheckReport, why: &str) -> CheckReport {
    let v = match inner.verdict {
        Verdict::Fail => Verdict::Pass,
        Verdict::Pass => Verdict::Fail,
        v => v,
    };
    let mut r = CheckReport::new(inner.condition, v);
    r.worst_ratio = inner.worst_ratio;
    r.constant = inner.constant;
    r.witness = inner.witness.clone();
    r.counts = inner.counts.clone();
    r.label = Some(format!("expected failure: {why}"));
    r.parts = vec![inner];
    r
}

fn default_grid(name: Option<&str>, nvars: usize) -> GridSpec {
    match name {
        Some("q-lambda") => GridSpec::sphere(3, 10_000),
        Some("q-lambda-dehomogenized") => GridSpec::cube(2, -1.0, 1.0, 21),
        Some("f-phi-psi") => flat_domain_grid((0.2, 0.9, 8), (0.05, 0.9, 8), 12),
        Some("block-M7" | "block-N8" | "block-P7") => GridSpec::shells(4, 0.1, 0.9, 10, 12),
        Some("grushin-2x2" | "nondiag-noncomparable-2x2") => GridSpec::shells(1, 0.06, 1.0, 30, 2),
        _ if nvars == 0 => GridSpec::explicit(vec![vec![]]),
        _ => GridSpec::shells(nvars, 0.05, 1.0, 12, 8),
    }
}

/// Grid the checks run on: the config's, or the item's default, with the
/// config seed and scale applied.
pub fn effective_grid(config: &RunConfig, nvars: usize) -> GridSpec {
    let mut g = config.grid.clone().unwrap_or_else(|| default_grid(config.gallery_name(), nvars));
    if config.seed != 0 {
        g = g.with_seed(config.seed);
    }
    match config.grid_scale {
        Some(s) if s != 1.0 => g.scaled(s),
        _ => g,
    }
}

fn gallery_params(config: &RunConfig) -> Value {
    match &config.matrix {
        MatrixSource::Gallery { params, .. } if !params.is_null() => params.clone(),
        _ => json!({}),
    }
}

fn from_params<T: for<'de> Deserialize<'de>>(v: &Value) -> RunResult<T> {
    serde_json::from_value(v.clone()).map_err(err)
}

/// Certificates attached to a gallery item.
fn gallery_checks(config: &RunConfig, a: &SymMatFun, grid: &GridSpec, rep: &mut Report) -> RunResult<()> {
    let Some(name) = config.gallery_name() else {
        return Ok(());
    };
    let params = gallery_params(config);
    let lambda = params.get("lambda").and_then(Value::as_f64).unwrap_or(0.02);
    match name {
        "q-lambda" => {
            let p = QLambdaParams { lambda };
            rep.checks.push(q_lambda_positivity_certificate(p, grid).map_err(err)?);
            let c = q_lambda_non_sos_certificate(p).map_err(err)?;
            rep.checks.push(c.report());
            rep.certificates.insert("non_sos".into(), serde_json::to_value(&c).map_err(err)?);
        }
        "q-lambda-dehomogenized" => {
            let c = q_lambda_non_sos_certificate(QLambdaParams { lambda }).map_err(err)?;
            rep.checks.push(c.report());
            rep.certificates.insert("non_sos".into(), serde_json::to_value(&c).map_err(err)?);
            rep.checks.push(diag_elliptic_check(a, grid).map_err(err)?);
        }
        "f-phi-psi" => {
            let p: FPhiPsiParams = from_params(&params)?;
            let beta = params.get("beta").and_then(Value::as_f64).unwrap_or(0.5);
            rep.checks.push(diag_elliptic_check(a, grid).map_err(err)?);
            let t_grid = if config.grid.is_some() {
                grid.clone()
            } else {
                GridSpec::shells(1, 8e-4, 0.9, 40, 1).scaled(config.grid_scale.unwrap_or(1.0))
            };
            rep.checks.push(failure_condition_check(&p, beta, &t_grid).map_err(err)?);
        }
        "block-M7" => {
            let p: BlockParams = block_params(&params)?;
            let reference = m7_trace_reference(&p).map_err(err)?;
            let mut r = comparability_check(a, &reference, grid).map_err(err)?;
            r.label = Some("M vs diag(I_4, tr F I_3)".into());
            rep.checks.push(r);
            rep.checks.push(diag_elliptic_check(a, grid).map_err(err)?);
        }
        "block-N8" => {
            let p: BlockParams = block_params(&params)?;
            rep.checks.push(diag_elliptic_check(a, grid).map_err(err)?);
            let f = build_blocks(BlockKind::M7, &p).map_err(err)?.principal(&[4, 5, 6]);
            let g = a.principal(&[7, 8, 9]);
            let r = comparability_check(&f, &g, grid).map_err(err)?;
            rep.checks.push(expect_fail(r, "the two flat 3x3 blocks are not comparable"));
        }
        "block-P7" => {
            rep.checks.push(diag_elliptic_check(a, grid).map_err(err)?);
        }
        "nondiag-noncomparable-2x2" => {
            let r = diag_elliptic_check(a, grid).map_err(err)?;
            rep.checks.push(expect_fail(r, "not comparable to its diagonal"));
        }
        "grushin-2x2" => {
            if config.params.is_none() {
                let p = PipelineParams::new(2, 0.25, 0.1, 0.2);
                decompose(a, &p, grid, rep)?;
            }
        }
        _ => {}
    }
    Ok(())
}

fn block_params(v: &Value) -> RunResult<BlockParams> {
    let f_phi_psi: FPhiPsiParams = from_params(v)?;
    let pick = |k: &str| v.get(k).cloned().unwrap_or(Value::Null);
    let mut b: BlockParams = from_params(&json!({"rho": pick("rho"), "f": pick("f"), "g": pick("g")}))?;
    b.f_phi_psi = f_phi_psi;
    Ok(b)
}

fn decompose(a: &SymMatFun, p: &PipelineParams, grid: &GridSpec, rep: &mut Report) -> RunResult<()> {
    let out = decomposition_pipeline(a, p, grid).map_err(err)?;
    rep.checks.extend(out.reports);
    if let Some(d) = &out.decomposition {
        rep.checks.extend(d.certificates.iter().cloned());
        rep.decomposition = Some(DecompositionSummary::of(d));
    }
    rep.checks.push(out.summary);
    rep.refusal = out.refusal;
    Ok(())
}

fn verify(a: &SymMatFun, p: &PipelineParams, grid: &GridSpec, rep: &mut Report) -> RunResult<()> {
    rep.checks.push(diag_elliptic_check(a, grid).map_err(err)?);
    rep.checks.push(strong_check_with(a, &p.strong(p.p - 1), grid).map_err(err)?);
    rep.checks.push(subordinate_check(a, grid).map_err(err)?);
    Ok(())
}

fn run_inner(config: &RunConfig, rep: &mut Report) -> RunResult<()> {
    let a = config.matrix().map_err(err)?;
    let grid = effective_grid(config, a.nvars());
    match config.pipeline {
        PipelineKind::Gallery => gallery_checks(config, &a, &grid, rep)?,
        PipelineKind::Verify => verify(&a, params(config)?, &grid, rep)?,
        PipelineKind::Decompose => decompose(&a, params(config)?, &grid, rep)?,
        PipelineKind::All => {
            gallery_checks(config, &a, &grid, rep)?;
            if let Some(p) = &config.params {
                decompose(&a, p, &grid, rep)?;
                rep.checks.push(subordinate_check(&a, &grid).map_err(err)?);
            }
        }
    }
    Ok(())
}

fn params(config: &RunConfig) -> RunResult<&PipelineParams> {
    config.params.as_ref().ok_or_else(|| "params required".to_string())
}

/// Execute a validated config. Errors end up in the report (exit code 1)
/// together with whatever results were produced before them.
pub fn run(config: &RunConfig) -> Report {
    let start = Instant::now();
    let mut rep = Report::new(config);
    if let Err(e) = config.validate().map_err(err).and_then(|_| run_inner(config, &mut rep)) {
        rep.error = Some(e);
    }
    rep.finish();
    rep.timing_ms = start.elapsed().as_millis() as u64;
    rep
}

/// Config running the default certificates of one gallery item.
pub fn gallery_config(name: &str, params: Value) -> RunConfig {
    RunConfig {
        version: CONFIG_VERSION,
        matrix: MatrixSource::Gallery { name: name.into(), params },
        pipeline: PipelineKind::Gallery,
        params: None,
        grid: None,
        grid_scale: None,
        output: None,
        seed: 0,
    }
}

/// Catalog as pretty JSON.
pub fn list_json() -> String {
    serde_json::to_string_pretty(&list_gallery()).expect("catalog serializes")
}

pub fn schema_json() -> String {
    serde_json::to_string_pretty(&config_schema()).expect("schema serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_lambda_gallery_run() {
        let rep = run(&gallery_config("q-lambda", json!({"lambda": 0.02})));
        assert_eq!(rep.exit_code, EXIT_OK, "{}", rep.to_json());
        let c = &rep.certificates["non_sos"];
        assert!((c["bound"].as_f64().unwrap() - 3.6).abs() < 1e-12);
        assert_eq!(c["verdict"], "not-sos-of-linear-forms");
        assert!(rep.check(Condition::QLambdaPositivity).unwrap().passed());
    }

    #[test]
    fn grushin_decompose_run() {
        let c = RunConfig::from_json(
            r#"{"version": 1, "matrix": {"gallery": {"name": "grushin-2x2", "params": {"gamma": 0.5}}},
                "pipeline": "decompose", "params": {"p": 2, "epsilon": 0.25, "delta": 0.1, "delta_pp": 0.2}}"#,
        )
        .unwrap();
        let rep = run(&c);
        assert_eq!(rep.exit_code, EXIT_OK, "{}", rep.to_json());
        let d = rep.decomposition.as_ref().unwrap();
        assert!(d.reconstruction_max_error.unwrap() <= 1e-10);
        assert_eq!(d.residual.as_ref().unwrap().size, 1);
    }

    #[test]
    fn expected_failures_count_as_pass() {
        let rep = run(&gallery_config("nondiag-noncomparable-2x2", Value::Null));
        assert_eq!(rep.verdict, Verdict::Pass, "{}", rep.to_json());
        assert_eq!(rep.checks[0].parts[0].verdict, Verdict::Fail);
    }

    #[test]
    fn deterministic_modulo_timing() {
        let c = gallery_config("q-lambda", Value::Null);
        assert_eq!(run(&c).to_json_untimed(), run(&c).to_json_untimed());
    }
}

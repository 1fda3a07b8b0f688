//! Named example matrix functions and their certificates.
//!
//! Every item in [`list_gallery`] can be built by name with
//! [`build_named`]; parameters are passed as JSON and fall back to the
//! documented defaults.

mod blocks;
mod delta_nu;
mod flat;
mod q_lambda;

pub use blocks::{build_blocks, comparability_check, m7_trace_reference, BlockKind, BlockParams};
pub use delta_nu::{
    c1omega_norm_estimate, delta_nu_estimate, delta_nu_profile, DeltaNuMode, DeltaNuProfile, DeltaNuQuery, MAX_NU,
};
pub use flat::{build_f_phi_psi, f_phi_psi_trace, failure_condition_check, flat_domain_grid, FPhiPsiParams};
pub use q_lambda::{
    build_q_lambda, build_q_lambda_dehomogenized, det_expansion, minor_lower_bounds, q_lambda_at,
    q_lambda_non_sos_certificate, q_lambda_positivity_certificate, NonSosCertificate, NonSosVerdict, QLambdaParams,
    NON_SOS_THRESHOLD, POSITIVITY_TOL,
};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::decompose::SymMatFun;
use crate::jet::{JetError, ScalarExpr};
use crate::symmat::SymError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GalleryError {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("unknown gallery item {0:?}")]
    Unknown(String),
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error(transparent)]
    Sym(#[from] SymError),
}

/// One parameter of a gallery item.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    /// `real` or `expr` (an expression tree in variable 0).
    pub kind: String,
    pub default: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GalleryEntry {
    pub name: String,
    pub size: usize,
    pub nvars: usize,
    pub description: String,
    /// Short tag locating the construction in the literature.
    pub anchor: String,
    pub params: Vec<ParamSpec>,
}

fn real(name: &str, default: f64, range: &str) -> ParamSpec {
    ParamSpec { name: name.into(), kind: "real".into(), default: json!(default), range: Some(range.into()) }
}

fn expr(name: &str, default: &str) -> ParamSpec {
    ParamSpec { name: name.into(), kind: "expr".into(), default: json!(default), range: None }
}

fn entry(name: &str, size: usize, nvars: usize, description: &str, anchor: &str, params: Vec<ParamSpec>) -> GalleryEntry {
    GalleryEntry {
        name: name.into(),
        size,
        nvars,
        description: description.into(),
        anchor: anchor.into(),
        params,
    }
}

fn flat_params() -> Vec<ParamSpec> {
    vec![
        real("lambda", 0.02, "[0, 1)"),
        expr("phi", "exp(-1/t^2)"),
        expr("psi", "(phi(t) t^2)^4"),
        expr("h", "bump on (-1, 1)"),
    ]
}

/// Catalog sorted by name. The content is fixed.
pub fn list_gallery() -> Vec<GalleryEntry> {
    let mut v = vec![
        entry(
            "q-lambda",
            3,
            3,
            "Cyclic quadratic 3x3 form in (x, y, z); positive definite off the origin",
            "psd-not-sos-linear-dyads",
            vec![real("lambda", 0.02, "(0, 1); non-SOS certificate for lambda < 2/81")],
        ),
        entry(
            "q-lambda-dehomogenized",
            3,
            2,
            "The cyclic quadratic form at z = 1, in (x, y)",
            "psd-not-sos-linear-dyads/dehomogenized",
            vec![real("lambda", 0.02, "(0, 1)")],
        ),
        entry(
            "f-phi-psi",
            3,
            4,
            "phi(t) Q(W) + (psi(t) + phi(|W|) h(t/|W|)) I_3 on B(0,1) x (-1,1)",
            "flat-sharpness-example",
            flat_params(),
        ),
        entry(
            "block-M7",
            7,
            4,
            "diag(I_4, F_phi_psi); diagonally comparable to diag(I_4, tr F I_3)",
            "flat-block-example/M",
            flat_params(),
        ),
        entry(
            "block-N8",
            10,
            4,
            "diag(M, G) with G built like F from the incomparable flat rho",
            "flat-block-example/N",
            {
                let mut p = flat_params();
                p.push(expr("rho", "exp(-1/|t|)"));
                p
            },
        ),
        entry(
            "block-P7",
            7,
            4,
            "diag(1, 1, 1, 1, 1, f, g) with elliptical flat f, g",
            "flat-block-example/P",
            {
                let mut p = flat_params();
                p.push(expr("rho", "exp(-1/|t|)"));
                p.push(expr("f", "tr F_phi_psi"));
                p.push(expr("g", "tr G_rho"));
                p
            },
        ),
        entry(
            "grushin-2x2",
            2,
            1,
            "[[1, gamma f], [gamma f, f^2]] with f = exp(-1/x^2)",
            "grushin-two-dyads",
            vec![real("gamma", 0.5, "(-1, 1)")],
        ),
        entry(
            "nondiag-noncomparable-2x2",
            2,
            1,
            "[[1, 1 - f], [1 - f, 1]] with f = exp(-1/x^2); positive definite off the origin, not diagonally comparable",
            "not-diagonally-comparable",
            vec![],
        ),
    ];
    v.sort_by(|a, b| a.name.cmp(&b.name));
    v
}

pub fn grushin_2x2(gamma: f64) -> SymMatFun {
    let f = ScalarExpr::var(0).flat();
    SymMatFun::new(2, 1, |i, j| match (i, j) {
        (0, 0) => ScalarExpr::one(),
        (1, 1) => f.powi(2),
        _ => &f * gamma,
    })
}

pub fn nondiag_noncomparable_2x2() -> SymMatFun {
    let off = ScalarExpr::one() - ScalarExpr::var(0).flat();
    SymMatFun::new(2, 1, |i, j| if i == j { ScalarExpr::one() } else { off.clone() })
}

fn get_real(params: &Value, name: &str, default: f64) -> Result<f64, GalleryError> {
    match params.get(name) {
        None | Some(Value::Null) => Ok(default),
        Some(v) => v.as_f64().ok_or_else(|| GalleryError::Param(format!("{name}: expected a number"))),
    }
}

fn parse<T: for<'de> Deserialize<'de>>(params: &Value) -> Result<T, GalleryError> {
    let v = if params.is_null() { json!({}) } else { params.clone() };
    serde_json::from_value(v).map_err(|e| GalleryError::Param(e.to_string()))
}

fn block_params(params: &Value) -> Result<BlockParams, GalleryError> {
    let v = if params.is_null() { json!({}) } else { params.clone() };
    let f_phi_psi: FPhiPsiParams = parse(&v)?;
    let mut b: BlockParams = parse(&json!({
        "rho": v.get("rho").cloned().unwrap_or(Value::Null),
        "f": v.get("f").cloned().unwrap_or(Value::Null),
        "g": v.get("g").cloned().unwrap_or(Value::Null),
    }))?;
    b.f_phi_psi = f_phi_psi;
    Ok(b)
}

/// Build a catalog item. `params` is a JSON object of overrides (or null).
pub fn build_named(name: &str, params: &Value) -> Result<SymMatFun, GalleryError> {
    match name {
        "q-lambda" | "q-lambda-dehomogenized" => {
            let p = QLambdaParams { lambda: get_real(params, "lambda", 0.02)? };
            p.validate()?;
            Ok(if name == "q-lambda" { build_q_lambda(p) } else { build_q_lambda_dehomogenized(p) })
        }
        "f-phi-psi" => build_f_phi_psi(&parse(params)?),
        "block-M7" => build_blocks(BlockKind::M7, &block_params(params)?),
        "block-N8" => build_blocks(BlockKind::N8, &block_params(params)?),
        "block-P7" => build_blocks(BlockKind::P7, &block_params(params)?),
        "grushin-2x2" => {
            let g = get_real(params, "gamma", 0.5)?;
            if !(g.abs() < 1.0) {
                return Err(GalleryError::Param(format!("gamma = {g} outside (-1, 1)")));
            }
            Ok(grushin_2x2(g))
        }
        "nondiag-noncomparable-2x2" => Ok(nondiag_noncomparable_2x2()),
        _ => Err(GalleryError::Unknown(name.into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_is_sorted_and_complete() {
        let c = list_gallery();
        let names: Vec<&str> = c.iter().map(|e| e.name.as_str()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
        for n in [
            "q-lambda",
            "q-lambda-dehomogenized",
            "f-phi-psi",
            "block-M7",
            "block-N8",
            "block-P7",
            "grushin-2x2",
            "nondiag-noncomparable-2x2",
        ] {
            assert!(names.contains(&n), "{n}");
        }
        assert!(c.iter().all(|e| !e.anchor.is_empty()));
    }

    #[test]
    fn every_entry_builds_with_defaults() {
        for e in list_gallery() {
            let m = build_named(&e.name, &Value::Null).unwrap();
            assert_eq!(m.n(), e.size, "{}", e.name);
            assert_eq!(m.nvars(), e.nvars, "{}", e.name);
        }
        assert!(matches!(build_named("nope", &Value::Null), Err(GalleryError::Unknown(_))));
    }

    #[test]
    fn overrides_are_read() {
        let m = build_named("q-lambda", &json!({"lambda": 0.5})).unwrap();
        assert_eq!(m.eval(&[0.0, 1.0, 0.0]).unwrap().get(0, 0), 0.5);
        assert!(build_named("grushin-2x2", &json!({"gamma": 2.0})).is_err());
    }
}

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::decompose::SymMatFun;
use crate::gallery::{build_named, list_gallery};
use crate::grid::GridSpec;
use crate::verify::PipelineParams;

pub const CONFIG_VERSION: u32 = 1;

/// Where the matrix function comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MatrixSource {
    Gallery {
        name: String,
        #[serde(default)]
        params: Value,
    },
    /// Upper triangle of expression trees, see [`SymMatFun`].
    Inline(SymMatFun),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineKind {
    /// Hypothesis checks, then peeling and assembly.
    Decompose,
    /// Hypothesis checks only.
    Verify,
    /// Certificates attached to a gallery item.
    Gallery,
    #[default]
    All,
}

/// One run, as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub matrix: MatrixSource,
    #[serde(default)]
    pub pipeline: PipelineKind,
    /// Required unless the pipeline is `gallery`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<PipelineParams>,
    /// Defaults to the gallery item's grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    /// Multiplies the point density of the grid (`--grid-scale`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("config field `{field}`: {reason}")]
    Schema { field: String, reason: String },
    #[error("config is not valid JSON: {0}")]
    Json(String),
}

fn schema(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Schema { field: field.into(), reason: reason.into() }
}

/// Field named in a serde error message (`unknown field `x``, `missing field `x``).
fn field_of(msg: &str) -> String {
    msg.split('`').nth(1).unwrap_or("<document>").to_string()
}

impl RunConfig {
    pub fn from_json(s: &str) -> Result<RunConfig, ConfigError> {
        let v: Value = serde_json::from_str(s).map_err(|e| ConfigError::Json(e.to_string()))?;
        let version = v.get("version").ok_or_else(|| schema("version", "missing"))?;
        if version.as_u64() != Some(CONFIG_VERSION as u64) {
            return Err(schema("version", format!("expected {CONFIG_VERSION}, got {version}")));
        }
        let c: RunConfig = serde_json::from_value(v).map_err(|e| {
            let msg = e.to_string();
            schema(&field_of(&msg), msg)
        })?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }

    /// The matrix function this config describes.
    pub fn matrix(&self) -> Result<SymMatFun, ConfigError> {
        match &self.matrix {
            MatrixSource::Gallery { name, params } => {
                build_named(name, params).map_err(|e| schema("matrix.gallery", e.to_string()))
            }
            MatrixSource::Inline(m) => {
                m.validate().map_err(|e| schema("matrix.inline", e.to_string()))?;
                Ok(m.clone())
            }
        }
    }

    pub fn gallery_name(&self) -> Option<&str> {
        match &self.matrix {
            MatrixSource::Gallery { name, .. } => Some(name),
            MatrixSource::Inline(_) => None,
        }
    }

    /// Range checks beyond the JSON shape.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Some(name) = self.gallery_name() {
            if !list_gallery().iter().any(|e| e.name == name) {
                return Err(schema("matrix.gallery.name", format!("unknown gallery item {name:?}")));
            }
        }
        let a = self.matrix()?;
        let n = a.n();
        match (self.pipeline, &self.params) {
            (PipelineKind::Gallery, _) => {
                if self.gallery_name().is_none() {
                    return Err(schema("pipeline", "gallery pipeline needs a gallery matrix"));
                }
            }
            (_, None) => return Err(schema("params", "required for this pipeline")),
            (_, Some(_)) => {}
        }
        if let Some(p) = &self.params {
            if !(p.epsilon >= 0.25 && p.epsilon < 1.0) {
                return Err(schema("params.epsilon", format!("{} outside [1/4, 1)", p.epsilon)));
            }
            if !(p.delta > 0.0 && p.delta < 1.0) {
                return Err(schema("params.delta", format!("{} outside (0, 1)", p.delta)));
            }
            if !(2..=n + 1).contains(&p.p) {
                return Err(schema("params.p", format!("{} outside 2..={}", p.p, n + 1)));
            }
            p.validate(n).map_err(|e| schema("params", e.to_string()))?;
        }
        if let Some(s) = self.grid_scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(schema("grid_scale", format!("{s} must be positive")));
            }
        }
        if let Some(g) = &self.grid {
            if g.nvars != a.nvars() {
                return Err(schema("grid.nvars", format!("{} but the matrix uses {} variables", g.nvars, a.nvars())));
            }
        }
        Ok(())
    }
}

/// JSON Schema of the config and report documents.
pub fn config_schema() -> Value {
    serde_json::json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "matsos run config",
        "version": CONFIG_VERSION,
        "type": "object",
        "required": ["version", "matrix"],
        "additionalProperties": false,
        "properties": {
            "version": {"const": CONFIG_VERSION},
            "matrix": {
                "oneOf": [
                    {
                        "type": "object",
                        "required": ["gallery"],
                        "properties": {"gallery": {
                            "type": "object",
                            "required": ["name"],
                            "properties": {
                                "name": {"enum": list_gallery().iter().map(|e| e.name.clone()).collect::<Vec<_>>()},
                                "params": {"type": "object"}
                            }
                        }}
                    },
                    {
                        "type": "object",
                        "required": ["inline"],
                        "properties": {"inline": {
                            "type": "object",
                            "required": ["n", "nvars", "upper"],
                            "description": "upper[i][j - i] is the expression tree of entry (i, j)"
                        }}
                    }
                ]
            },
            "pipeline": {"enum": ["decompose", "verify", "gallery", "all"], "default": "all"},
            "params": {
                "type": "object",
                "required": ["p", "epsilon", "delta", "delta_pp"],
                "properties": {
                    "p": {"type": "integer", "minimum": 2, "description": "at most n + 1"},
                    "epsilon": {"type": "number", "minimum": 0.25, "exclusiveMaximum": 1},
                    "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                    "delta_prime": {"type": ["number", "null"], "description": "defaults to 2 delta (1 + delta) / (2 + delta)"},
                    "delta_pp": {"type": "number", "description": "in (delta, 1)"},
                    "backend": {"enum": ["principal-sqrt", "split-by-sign-cell"], "default": "principal-sqrt"},
                    "cells": {"type": "integer", "default": 2},
                    "tail_ratio": {"type": "number", "default": 100},
                    "holder_centers": {"type": "integer", "default": 4},
                    "force": {"type": "boolean", "default": false}
                }
            },
            "grid": {"type": "object", "required": ["nvars", "points"]},
            "grid_scale": {"type": "number", "exclusiveMinimum": 0},
            "output": {"type": "string"},
            "seed": {"type": "integer", "minimum": 0, "default": 0}
        }
    })
}

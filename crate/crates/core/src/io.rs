//! JSON loaders for spaces and maps.
//!
//! Space file: `{"labels": [...], "base": "label", "matrix": [[...]]}` or
//! `{"labels": [...], "base": "label", "coords": {"points": [[...]], "p": 1 | 2 | "inf"}}`.
//! Map file: `{"space": "path" | {inline space}, "values": {"label": [v, ...]}, "target_p": 1 | 2 | "inf"}`.
//! Numbers may be JSON numbers or strings such as `"1/3"`; in the rational
//! backend decimals are read exactly.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::lip::LipschitzMap;
use crate::metric::{FiniteMetricSpace, NormP};
use crate::scalar::Scalar;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceFile {
    labels: Vec<String>,
    base: String,
    #[serde(default)]
    matrix: Option<Vec<Vec<Value>>>,
    #[serde(default)]
    coords: Option<CoordsSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CoordsSpec {
    points: Vec<Vec<Value>>,
    p: Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MapFile {
    space: Value,
    values: BTreeMap<String, Vec<Value>>,
    #[serde(default)]
    target_p: Option<Value>,
}

fn scalar<S: Scalar>(v: &Value) -> Result<S> {
    let text = match v {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        other => return Err(Error::Parse(format!("expected a number, got {other}"))),
    };
    S::parse_str(&text).ok_or_else(|| Error::Parse(format!("not a number: {text:?}")))
}

fn norm_p(v: &Value) -> Result<NormP> {
    match v {
        Value::Number(n) => NormP::parse(&n.to_string()),
        Value::String(s) => NormP::parse(s),
        other => Err(Error::Parse(format!("expected 1, 2 or \"inf\", got {other}"))),
    }
}

fn rows<S: Scalar>(rows: &[Vec<Value>]) -> Result<Vec<Vec<S>>> {
    rows.iter().map(|r| r.iter().map(scalar).collect()).collect()
}

fn space_from_value<S: Scalar>(v: Value) -> Result<FiniteMetricSpace<S>> {
    let file: SpaceFile = serde_json::from_value(v)?;
    let base = file.labels.iter().position(|l| *l == file.base).ok_or(Error::UnknownLabel(file.base.clone()))?;
    match (file.matrix, file.coords) {
        (Some(m), None) => FiniteMetricSpace::from_matrix(file.labels, rows(&m)?, base),
        (None, Some(c)) => {
            let coords = rows(&c.points)?;
            if coords.len() != file.labels.len() {
                return Err(Error::LabelMismatch { labels: file.labels.len(), points: coords.len() });
            }
            FiniteMetricSpace::from_coords(file.labels, &coords, norm_p(&c.p)?, base)
        }
        _ => Err(Error::Parse("space file needs exactly one of \"matrix\" and \"coords\"".into())),
    }
}

pub fn parse_space<S: Scalar>(json: &str) -> Result<FiniteMetricSpace<S>> {
    space_from_value(serde_json::from_str(json)?)
}

pub fn load_space<S: Scalar>(path: &Path) -> Result<FiniteMetricSpace<S>> {
    parse_space(&std::fs::read_to_string(path)?)
}

/// Parses a map file; a string `space` is a path relative to `dir`.
pub fn parse_map<S: Scalar>(json: &str, dir: &Path) -> Result<LipschitzMap<S>> {
    let file: MapFile = serde_json::from_str(json)?;
    let space = Arc::new(match file.space {
        Value::String(p) => load_space(&dir.join(p))?,
        inline => space_from_value(inline)?,
    });
    let target = file.target_p.as_ref().map(norm_p).transpose()?.unwrap_or(NormP::Inf);
    let mut values: Vec<Option<Vec<S>>> = vec![None; space.len()];
    for (label, v) in &file.values {
        let i = space.index_of(label).ok_or_else(|| Error::UnknownLabel(label.clone()))?;
        values[i] = Some(v.iter().map(scalar).collect::<Result<_>>()?);
    }
    let dim = values.iter().flatten().map(Vec::len).next().unwrap_or(1);
    let values = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| match v {
            Some(v) => Ok(v),
            None if i == space.base() => Ok(vec![S::zero(); dim]),
            None => Err(Error::Parse(format!("no value for {:?}", space.label(i)))),
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(bad) = values.iter().find(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: bad.len() });
    }
    LipschitzMap::new(space, values, target)
}

pub fn load_map<S: Scalar>(path: &Path) -> Result<LipschitzMap<S>> {
    let dir = path.parent().unwrap_or(Path::new("."));
    parse_map(&std::fs::read_to_string(path)?, dir)
}

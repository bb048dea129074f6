//! Structure and subobject file formats.
//!
//! Structure files are UTF-8 JSON: `{"kind":"group"|"loop","order":n,
//! "table":[[...]]}` with 0-indexed entries and identity 0, or
//! `{"kind":"algebra","field":{...},"dim":d,"structure":[[[c_ijk]]]}` where
//! scalar literals are integers or `"num/den"` strings over the rational
//! field. Subobject files are `{"generators":[indices]}` or
//! `{"basis":[[entries]]}`.

use super::{CheckedStructure, FdAlgebra, FiniteGroup, FiniteLoop, GeneratorSet, StructureError};
use crate::exactlinalg::{FieldSpec, Scalar, Vector};
use serde_json::Value;

fn get<'v>(v: &'v Value, key: &str) -> Result<&'v Value, StructureError> {
    v.get(key)
        .ok_or_else(|| StructureError::BadDescription(format!("missing field \"{key}\"")))
}

fn parse_table(v: &Value, order: usize) -> Result<Vec<Vec<u16>>, StructureError> {
    let rows = v
        .as_array()
        .ok_or_else(|| StructureError::BadDescription("\"table\" must be an array".into()))?;
    if rows.len() != order {
        return Err(StructureError::DimensionMismatch {
            what: format!("table has {} rows, order is {order}", rows.len()),
        });
    }
    rows.iter()
        .map(|row| {
            let row = row.as_array().ok_or_else(|| {
                StructureError::BadDescription("table rows must be arrays".into())
            })?;
            row.iter()
                .map(|x| {
                    let i = x.as_u64().ok_or_else(|| {
                        StructureError::BadDescription(format!("bad table entry {x}"))
                    })?;
                    if i >= order as u64 {
                        return Err(StructureError::BadDescription(format!(
                            "table entry {i} out of range for order {order}"
                        )));
                    }
                    Ok(i as u16)
                })
                .collect()
        })
        .collect()
}

/// Parse and validate a structure description.
pub fn parse_structure(json: &str) -> Result<CheckedStructure, StructureError> {
    let v: Value = serde_json::from_str(json)
        .map_err(|e| StructureError::BadDescription(format!("invalid JSON: {e}")))?;
    let kind = get(&v, "kind")?
        .as_str()
        .ok_or_else(|| StructureError::BadDescription("\"kind\" must be a string".into()))?;
    match kind {
        "group" | "loop" => {
            let order = get(&v, "order")?
                .as_u64()
                .ok_or_else(|| StructureError::BadDescription("\"order\" must be a number".into()))?
                as usize;
            if order == 0 || order > u16::MAX as usize {
                return Err(StructureError::BadDescription(format!(
                    "order {order} out of supported range"
                )));
            }
            let table = parse_table(get(&v, "table")?, order)?;
            if kind == "group" {
                Ok(CheckedStructure::Group(FiniteGroup::from_table(table)?))
            } else {
                Ok(CheckedStructure::Loop(FiniteLoop::from_table(table)?))
            }
        }
        "algebra" => {
            let field: FieldSpec = serde_json::from_value(get(&v, "field")?.clone())
                .map_err(|e| StructureError::BadDescription(format!("bad field spec: {e}")))?;
            field.validate()?;
            let dim = get(&v, "dim")?
                .as_u64()
                .ok_or_else(|| StructureError::BadDescription("\"dim\" must be a number".into()))?
                as usize;
            let tensor = get(&v, "structure")?
                .as_array()
                .ok_or_else(|| StructureError::BadDescription("\"structure\" must be an array".into()))?;
            let mut constants: Vec<Vec<Vec<Scalar>>> = Vec::with_capacity(tensor.len());
            for plane in tensor {
                let plane = plane.as_array().ok_or_else(|| {
                    StructureError::BadDescription("structure planes must be arrays".into())
                })?;
                let mut rows: Vec<Vec<Scalar>> = Vec::with_capacity(plane.len());
                for cell in plane {
                    let cell = cell.as_array().ok_or_else(|| {
                        StructureError::BadDescription("structure cells must be arrays".into())
                    })?;
                    let mut scalars: Vec<Scalar> = Vec::with_capacity(cell.len());
                    for entry in cell {
                        scalars.push(field.parse_literal(entry)?);
                    }
                    rows.push(scalars);
                }
                constants.push(rows);
            }
            Ok(CheckedStructure::Algebra(FdAlgebra::new(
                field, dim, constants,
            )?))
        }
        other => Err(StructureError::BadDescription(format!(
            "unknown kind \"{other}\""
        ))),
    }
}

/// Parse a subobject description relative to an ambient structure.
pub fn parse_subobject(
    json: &str,
    ambient: &CheckedStructure,
) -> Result<GeneratorSet, StructureError> {
    let v: Value = serde_json::from_str(json)
        .map_err(|e| StructureError::BadDescription(format!("invalid JSON: {e}")))?;
    if let Some(gens) = v.get("generators") {
        let gens = gens
            .as_array()
            .ok_or_else(|| StructureError::BadDescription("\"generators\" must be an array".into()))?;
        let indices = gens
            .iter()
            .map(|x| {
                x.as_u64().map(|i| i as usize).ok_or_else(|| {
                    StructureError::BadDescription(format!("bad generator index {x}"))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        return Ok(GeneratorSet::Elements(indices));
    }
    if let Some(basis) = v.get("basis") {
        let Some(alg) = ambient.as_algebra() else {
            return Err(StructureError::BadDescription(
                "\"basis\" subobjects need an algebra ambient".into(),
            ));
        };
        let field = alg.field();
        let rows = basis
            .as_array()
            .ok_or_else(|| StructureError::BadDescription("\"basis\" must be an array".into()))?;
        let vectors: Vec<Vector> = rows
            .iter()
            .map(|row| {
                let row = row.as_array().ok_or_else(|| {
                    StructureError::BadDescription("basis rows must be arrays".into())
                })?;
                row.iter()
                    .map(|x| field.parse_literal(x).map_err(StructureError::from))
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        return Ok(GeneratorSet::Vectors(vectors));
    }
    Err(StructureError::BadDescription(
        "subobject file needs \"generators\" or \"basis\"".into(),
    ))
}

/// Canonical JSON for a checked structure (inverse of `parse_structure`).
pub fn structure_to_json(s: &CheckedStructure) -> Value {
    match s {
        CheckedStructure::Group(g) => serde_json::json!({
            "kind": "group",
            "order": g.order(),
            "table": g.table_rows(),
        }),
        CheckedStructure::Loop(l) => serde_json::json!({
            "kind": "loop",
            "order": l.order(),
            "table": l.table_rows(),
        }),
        CheckedStructure::Algebra(a) => {
            let d = a.dim();
            let tensor: Vec<Vec<Vec<Value>>> = (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| (0..d).map(|k| a.constant(i, j, k).to_json()).collect())
                        .collect()
                })
                .collect();
            serde_json::json!({
                "kind": "algebra",
                "field": a.field(),
                "dim": d,
                "structure": tensor,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_group_round_trip() {
        let json = r#"{"kind":"group","order":2,"table":[[0,1],[1,0]]}"#;
        let s = parse_structure(json).unwrap();
        assert_eq!(s.kind(), "group");
        let back = structure_to_json(&s);
        let reparsed = parse_structure(&back.to_string()).unwrap();
        assert_eq!(s, reparsed);
    }

    #[test]
    fn parse_algebra_with_rational_literals() {
        let json = r#"{"kind":"algebra","field":{"type":"rational"},"dim":1,"structure":[[["1/2"]]]}"#;
        let s = parse_structure(json).unwrap();
        let a = s.as_algebra().unwrap();
        let half = a.constant(0, 0, 0);
        let f = a.field();
        assert_eq!(f.add(half, half), f.one());
    }

    #[test]
    fn bad_files_are_rejected_with_diagnostics() {
        assert!(parse_structure("not json").is_err());
        assert!(parse_structure(r#"{"kind":"widget"}"#).is_err());
        let err =
            parse_structure(r#"{"kind":"group","order":2,"table":[[0,1],[1,1]]}"#).unwrap_err();
        assert!(matches!(err, StructureError::NotLatin { .. }));
        let err =
            parse_structure(r#"{"kind":"algebra","field":{"type":"prime","p":4},"dim":0,"structure":[]}"#)
                .unwrap_err();
        assert!(matches!(err, StructureError::Linalg(_)));
    }

    #[test]
    fn parse_subobject_kinds() {
        let g = parse_structure(r#"{"kind":"group","order":2,"table":[[0,1],[1,0]]}"#).unwrap();
        match parse_subobject(r#"{"generators":[1]}"#, &g).unwrap() {
            GeneratorSet::Elements(v) => assert_eq!(v, vec![1]),
            _ => panic!(),
        }
        assert!(parse_subobject(r#"{"basis":[[1]]}"#, &g).is_err());
        assert!(parse_subobject(r#"{}"#, &g).is_err());
    }
}

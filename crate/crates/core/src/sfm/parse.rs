//! Strict reader and writer for `reconstruction.json`.
//!
//! The document is a top-level array of reconstructions; only the first is
//! used. Bare `NaN`/`Infinity` tokens (as written by Python's `json` module)
//! and overflowing literals are accepted lexically so they can be reported as
//! schema errors at their path instead of as opaque syntax errors.

use std::collections::BTreeMap;

use nalgebra::Vector3;
use serde_json::{json, Map, Value};

use super::{Camera, Reconstruction, Shot, SparsePoint};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseOptions {
    /// Drop invalid shots and points instead of failing.
    pub lenient: bool,
}

/// Diagnostics gathered while parsing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParseReport {
    /// Shot counts of the reconstructions after the first, which are ignored.
    pub ignored_reconstructions: Vec<usize>,
    /// Unknown fields encountered (ignored).
    pub unknown_fields: usize,
    /// Items dropped in lenient mode, with the offending path.
    pub dropped: Vec<String>,
}

const RECONSTRUCTION_KEYS: &[&str] = &["cameras", "shots", "points"];
const SHOT_KEYS: &[&str] = &["rotation", "translation", "camera"];
const POINT_KEYS: &[&str] = &["coordinates", "color"];

pub fn parse_reconstruction(text: &str, options: &ParseOptions) -> Result<(Reconstruction, ParseReport)> {
    let doc = parse_json(text)?;
    let Value::Array(items) = doc else {
        return Err(Error::SchemaError("$".into()));
    };
    let Some(first) = items.first() else {
        return Err(Error::NoReconstruction);
    };
    let mut report = ParseReport {
        ignored_reconstructions: items[1..]
            .iter()
            .map(|r| r.get("shots").and_then(Value::as_object).map_or(0, Map::len))
            .collect(),
        ..Default::default()
    };
    for (i, n) in report.ignored_reconstructions.iter().enumerate() {
        log::warn!("ignoring reconstruction #{} with {n} shots", i + 1);
    }

    let obj = first
        .as_object()
        .ok_or_else(|| Error::SchemaError("[0]".into()))?;
    report.unknown_fields += count_unknown(obj, RECONSTRUCTION_KEYS);

    let cameras = parse_cameras(obj, &mut report)?;

    let shots_obj = obj
        .get("shots")
        .ok_or_else(|| Error::SchemaError("shots".into()))?
        .as_object()
        .ok_or_else(|| Error::SchemaError("shots".into()))?;
    let mut shots = BTreeMap::new();
    for (id, raw) in shots_obj {
        match parse_shot(id, raw, &cameras, &mut report) {
            Ok(shot) => {
                shots.insert(id.clone(), shot);
            }
            Err(Error::SchemaError(path)) if options.lenient => {
                log::warn!("dropping shot {id}: invalid `{path}`");
                report.dropped.push(path);
            }
            Err(e) => return Err(e),
        }
    }

    let mut points = Vec::new();
    match obj.get("points") {
        None | Some(Value::Null) => {}
        Some(Value::Object(map)) => {
            for (id, raw) in map {
                match parse_point(id, raw, &mut report) {
                    Ok(p) => points.push(p),
                    Err(Error::SchemaError(path)) if options.lenient => {
                        report.dropped.push(path);
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        Some(_) => return Err(Error::SchemaError("points".into())),
    }

    let rec = Reconstruction {
        cameras,
        shots,
        points,
    };
    rec.validate()?;
    Ok((rec, report))
}

fn parse_cameras(obj: &Map<String, Value>, report: &mut ParseReport) -> Result<BTreeMap<String, Camera>> {
    let map = obj
        .get("cameras")
        .and_then(Value::as_object)
        .ok_or_else(|| Error::SchemaError("cameras".into()))?;
    let mut cameras = BTreeMap::new();
    for (id, raw) in map {
        let path = format!("cameras.{id}");
        let fields = raw.as_object().ok_or_else(|| Error::SchemaError(path.clone()))?;
        let projection_type = fields
            .get("projection_type")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::SchemaError(format!("{path}.projection_type")))?
            .to_string();
        let mut camera = Camera {
            projection_type,
            width: None,
            height: None,
            params: BTreeMap::new(),
        };
        for (key, value) in fields {
            let field_path = format!("{path}.{key}");
            match key.as_str() {
                "projection_type" => {}
                "width" | "height" => {
                    let v = value
                        .as_u64()
                        .ok_or_else(|| Error::SchemaError(field_path.clone()))?;
                    if key == "width" {
                        camera.width = Some(v);
                    } else {
                        camera.height = Some(v);
                    }
                }
                _ if is_numeric(value) => {
                    camera.params.insert(key.clone(), number(value, &field_path)?);
                }
                _ => report.unknown_fields += 1,
            }
        }
        cameras.insert(id.clone(), camera);
    }
    Ok(cameras)
}

fn parse_shot(
    id: &str,
    raw: &Value,
    cameras: &BTreeMap<String, Camera>,
    report: &mut ParseReport,
) -> Result<Shot> {
    let path = format!("shots.{id}");
    let fields = raw.as_object().ok_or_else(|| Error::SchemaError(path.clone()))?;
    report.unknown_fields += count_unknown(fields, SHOT_KEYS);
    let rotation = vec3(fields.get("rotation"), &format!("{path}.rotation"))?;
    let translation = vec3(fields.get("translation"), &format!("{path}.translation"))?;
    let camera = fields
        .get("camera")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::SchemaError(format!("{path}.camera")))?;
    if !cameras.contains_key(camera) {
        return Err(Error::SchemaError(format!("{path}.camera")));
    }
    Shot::new(id, camera, rotation, translation).map_err(|_| Error::SchemaError(format!("{path}.rotation")))
}

fn parse_point(id: &str, raw: &Value, report: &mut ParseReport) -> Result<SparsePoint> {
    let path = format!("points.{id}");
    let fields = raw.as_object().ok_or_else(|| Error::SchemaError(path.clone()))?;
    report.unknown_fields += count_unknown(fields, POINT_KEYS);
    let position = vec3(fields.get("coordinates"), &format!("{path}.coordinates"))?;
    let color_path = format!("{path}.color");
    let c = vec3(fields.get("color"), &color_path)?;
    let mut color = [0u8; 3];
    for (i, v) in c.iter().enumerate() {
        if !(0.0..=255.0).contains(v) {
            return Err(Error::SchemaError(format!("{color_path}[{i}]")));
        }
        color[i] = v.round() as u8;
    }
    Ok(SparsePoint {
        id: id.to_string(),
        position,
        color,
    })
}

fn count_unknown(obj: &Map<String, Value>, known: &[&str]) -> usize {
    obj.keys().filter(|k| !known.contains(&k.as_str())).count()
}

fn is_numeric(v: &Value) -> bool {
    v.is_number() || matches!(v.as_str(), Some(s) if NON_FINITE.contains(&s))
}

fn number(v: &Value, path: &str) -> Result<f64> {
    match v.as_f64() {
        Some(x) if x.is_finite() => Ok(x),
        _ => Err(Error::SchemaError(path.to_string())),
    }
}

fn vec3(v: Option<&Value>, path: &str) -> Result<Vector3<f64>> {
    let arr = v
        .and_then(Value::as_array)
        .filter(|a| a.len() == 3)
        .ok_or_else(|| Error::SchemaError(path.to_string()))?;
    let mut out = Vector3::zeros();
    for (i, item) in arr.iter().enumerate() {
        out[i] = number(item, &format!("{path}[{i}]"))?;
    }
    Ok(out)
}

/// Placeholder strings substituted for non-finite literals.
const NON_FINITE: &[&str] = &["NaN", "Infinity", "-Infinity"];

fn parse_json(text: &str) -> Result<Value> {
    match serde_json::from_str(text) {
        Ok(v) => Ok(v),
        Err(original) => {
            // Retry with non-finite literals quoted; report the original
            // error (and offset) if that does not help.
            if let Some(patched) = quote_non_finite(text) {
                if let Ok(v) = serde_json::from_str(&patched) {
                    return Ok(v);
                }
            }
            Err(Error::ParseError {
                offset: byte_offset(text, original.line(), original.column()),
                message: original.to_string(),
            })
        }
    }
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}

/// Rewrite bare `NaN`, `Infinity`, `-Infinity` and overflowing numbers
/// outside strings as quoted placeholders. Returns `None` when nothing
/// changed.
fn quote_non_finite(text: &str) -> Option<String> {
    let bytes = text.as_bytes();
    let mut out = String::with_capacity(text.len());
    let mut changed = false;
    let mut i = 0;
    let mut copied = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'"' => {
                i += 1;
                while i < bytes.len() && bytes[i] != b'"' {
                    i += if bytes[i] == b'\\' { 2 } else { 1 };
                }
                i += 1;
            }
            b'-' | b'0'..=b'9' | b'N' | b'I' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || matches!(bytes[i], b'-' | b'+' | b'.'))
                {
                    i += 1;
                }
                let token = &text[start..i];
                let replacement = match token {
                    "NaN" => Some("NaN"),
                    "Infinity" => Some("Infinity"),
                    "-Infinity" => Some("-Infinity"),
                    _ => match token.parse::<f64>() {
                        Ok(v) if v.is_infinite() && v > 0.0 => Some("Infinity"),
                        Ok(v) if v.is_infinite() => Some("-Infinity"),
                        _ => None,
                    },
                };
                if let Some(r) = replacement {
                    out.push_str(&text[copied..start]);
                    out.push('"');
                    out.push_str(r);
                    out.push('"');
                    copied = i;
                    changed = true;
                }
            }
            _ => i += 1,
        }
    }
    if !changed {
        return None;
    }
    out.push_str(&text[copied.min(text.len())..]);
    Some(out)
}

/// Serialize a reconstruction as a one-element `reconstruction.json` array.
pub fn to_json(rec: &Reconstruction) -> String {
    let cameras: Map<String, Value> = rec
        .cameras
        .iter()
        .map(|(id, c)| {
            let mut fields = Map::new();
            fields.insert("projection_type".into(), json!(c.projection_type));
            if let Some(w) = c.width {
                fields.insert("width".into(), json!(w));
            }
            if let Some(h) = c.height {
                fields.insert("height".into(), json!(h));
            }
            for (k, v) in &c.params {
                fields.insert(k.clone(), json!(v));
            }
            (id.clone(), Value::Object(fields))
        })
        .collect();
    let shots: Map<String, Value> = rec
        .shots
        .iter()
        .map(|(id, s)| {
            (
                id.clone(),
                json!({
                    "rotation": s.rotation.as_slice(),
                    "translation": s.translation.as_slice(),
                    "camera": s.camera,
                }),
            )
        })
        .collect();
    let points: Map<String, Value> = rec
        .points
        .iter()
        .map(|p| {
            (
                p.id.clone(),
                json!({
                    "coordinates": p.position.as_slice(),
                    "color": p.color.map(f64::from),
                }),
            )
        })
        .collect();
    let doc = json!([{ "cameras": cameras, "shots": shots, "points": points }]);
    serde_json::to_string_pretty(&doc).expect("reconstruction serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_SHOT: &str = r#"[{
        "cameras": {"cam": {"projection_type": "spherical", "width": 5760, "height": 2880}},
        "shots": {"a.jpg": {"rotation": [0, 0, 0], "translation": [1, 2, 3], "camera": "cam",
                             "capture_time": 0.0}},
        "points": {"1": {"coordinates": [0.5, 0.25, -1], "color": [255, 0, 10]}},
        "reference_lla": {"latitude": 0}
    }]"#;

    fn parse(text: &str) -> Result<(Reconstruction, ParseReport)> {
        parse_reconstruction(text, &ParseOptions::default())
    }

    #[test]
    fn one_shot_document() {
        let (rec, report) = parse(ONE_SHOT).unwrap();
        assert_eq!(rec.shots["a.jpg"].position(), Vector3::new(-1.0, -2.0, -3.0));
        assert_eq!(rec.points[0].color, [255, 0, 10]);
        assert_eq!(rec.cameras["cam"].width, Some(5760));
        assert_eq!(report.unknown_fields, 2);
        assert!(report.ignored_reconstructions.is_empty());
    }

    #[test]
    fn missing_shots() {
        let doc = r#"[{"cameras": {}, "points": {}}]"#;
        assert!(matches!(parse(doc), Err(Error::SchemaError(p)) if p == "shots"));
    }

    #[test]
    fn empty_array() {
        assert!(matches!(parse("[]"), Err(Error::NoReconstruction)));
        assert!(matches!(parse("{}"), Err(Error::SchemaError(_))));
    }

    #[test]
    fn malformed_json_offset() {
        let doc = "[{\"shots\": {,}}]";
        match parse(doc) {
            Err(Error::ParseError { offset, .. }) => assert_eq!(offset, 12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_finite_literals() {
        for lit in ["NaN", "Infinity", "-Infinity", "1e999"] {
            let doc = ONE_SHOT.replace("\"rotation\": [0, 0, 0]", &format!("\"rotation\": [0, {lit}, 0]"));
            match parse(&doc) {
                Err(Error::SchemaError(p)) => assert_eq!(p, "shots.a.jpg.rotation[1]"),
                other => panic!("{lit}: unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn nan_inside_string_untouched() {
        assert_eq!(quote_non_finite(r#"{"a": "NaN", "b": 1}"#), None);
        assert_eq!(
            quote_non_finite(r#"{"a": "x\"NaN", "b": NaN}"#).unwrap(),
            r#"{"a": "x\"NaN", "b": "NaN"}"#
        );
    }

    #[test]
    fn lenient_drops_bad_shot() {
        let doc = r#"[{
            "cameras": {"c": {"projection_type": "spherical"}},
            "shots": {
                "good": {"rotation": [0,0,0], "translation": [0,0,0], "camera": "c"},
                "bad": {"rotation": [0,NaN,0], "translation": [0,0,0], "camera": "c"},
                "orphan": {"rotation": [0,0,0], "translation": [0,0,0], "camera": "x"}
            }
        }]"#;
        assert!(parse(doc).is_err());
        let (rec, report) = parse_reconstruction(doc, &ParseOptions { lenient: true }).unwrap();
        assert_eq!(rec.shots.len(), 1);
        assert_eq!(report.dropped.len(), 2);
    }

    #[test]
    fn multiple_reconstructions_reported() {
        let doc = format!(
            "[{}, {{\"shots\": {{\"x\": {{}}, \"y\": {{}}}}}}]",
            ONE_SHOT.trim().trim_start_matches('[').trim_end_matches(']')
        );
        let (rec, report) = parse(&doc).unwrap();
        assert_eq!(rec.shots.len(), 1);
        assert_eq!(report.ignored_reconstructions, vec![2]);
    }

    #[test]
    fn serialize_fixpoint() {
        let (rec, _) = parse(ONE_SHOT).unwrap();
        let text = to_json(&rec);
        let (again, report) = parse(&text).unwrap();
        assert_eq!(again, rec);
        assert_eq!(report.unknown_fields, 0);
        assert_eq!(to_json(&again), text);
    }
}

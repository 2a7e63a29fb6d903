//! JSON encoding of structured values, used for `rexp encode|decode` and
//! bench inputs.
//!
//! ```json
//! {"type": "real", "values": [1.5, null, "NaN", "Inf"],
//!  "attributes": [["names", {"type": "character", "values": ["a", "b", "c", "d"]}]]}
//! ```
//!
//! `type` is one of `null`, `logical`, `integer`, `real`, `complex`,
//! `character`, `raw`, `list` or `unsupported`. `null` elements are NA.
//! Reals may also be the strings `NaN`, `Inf` and `-Inf`; complex elements
//! are `[re, im]` pairs; raw values are one hex string; list values are
//! nested value objects. `unsupported` carries a `kind` instead of values.

use dynabuf_core::{Complex, RData, RValue, NA_INTEGER};
use serde_json::{json, Map, Value as Json};

/// Bit pattern of the host's real NA, a NaN distinct from ordinary NaN.
pub const NA_REAL_BITS: u64 = 0x7ff0_0000_0000_07a2;

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("{path}: {message}")]
pub struct ValueFileError {
    pub path: String,
    pub message: String,
}

fn err(path: &str, message: impl Into<String>) -> ValueFileError {
    ValueFileError {
        path: if path.is_empty() { "$".into() } else { path.to_string() },
        message: message.into(),
    }
}

pub fn parse_str(text: &str) -> Result<RValue, ValueFileError> {
    let json: Json = serde_json::from_str(text).map_err(|e| err("", format!("invalid JSON: {e}")))?;
    from_json(&json)
}

pub fn from_json(json: &Json) -> Result<RValue, ValueFileError> {
    value_at(json, "$")
}

fn value_at(json: &Json, path: &str) -> Result<RValue, ValueFileError> {
    let obj = json.as_object().ok_or_else(|| err(path, "expected an object"))?;
    let ty = obj
        .get("type")
        .and_then(Json::as_str)
        .ok_or_else(|| err(path, "missing string field `type`"))?;
    let values_path = format!("{path}.values");
    let values = || -> Result<&Vec<Json>, ValueFileError> {
        obj.get("values")
            .and_then(Json::as_array)
            .ok_or_else(|| err(path, "missing array field `values`"))
    };
    let at = |i: usize| format!("{values_path}[{i}]");

    let data = match ty {
        "null" => RData::Null,
        "unsupported" => {
            let kind = obj
                .get("kind")
                .and_then(Json::as_str)
                .ok_or_else(|| err(path, "missing string field `kind`"))?;
            RData::Unsupported(kind.to_string())
        }
        "logical" => RData::Logical(
            values()?
                .iter()
                .enumerate()
                .map(|(i, v)| match v {
                    Json::Null => Ok(None),
                    Json::Bool(b) => Ok(Some(*b)),
                    _ => Err(err(&at(i), "expected true, false or null")),
                })
                .collect::<Result<_, _>>()?,
        ),
        "integer" => RData::Int(
            values()?
                .iter()
                .enumerate()
                .map(|(i, v)| match v {
                    Json::Null => Ok(NA_INTEGER),
                    v => v
                        .as_i64()
                        .and_then(|n| i32::try_from(n).ok())
                        .filter(|n| *n != NA_INTEGER)
                        .ok_or_else(|| err(&at(i), "expected a 32-bit integer (excluding its minimum) or null")),
                })
                .collect::<Result<_, _>>()?,
        ),
        "real" => RData::Real(
            values()?
                .iter()
                .enumerate()
                .map(|(i, v)| real(v).ok_or_else(|| err(&at(i), "expected a number, null, \"NaN\", \"Inf\" or \"-Inf\"")))
                .collect::<Result<_, _>>()?,
        ),
        "complex" => RData::Complex(
            values()?
                .iter()
                .enumerate()
                .map(|(i, v)| match v.as_array().map(Vec::as_slice) {
                    Some([re, im]) => match (real(re), real(im)) {
                        (Some(re), Some(im)) => Ok(Complex::new(re, im)),
                        _ => Err(err(&at(i), "expected real parts")),
                    },
                    _ => Err(err(&at(i), "expected a [re, im] pair")),
                })
                .collect::<Result<_, _>>()?,
        ),
        "character" => RData::String(
            values()?
                .iter()
                .enumerate()
                .map(|(i, v)| match v {
                    Json::Null => Ok(None),
                    Json::String(s) => Ok(Some(s.clone())),
                    _ => Err(err(&at(i), "expected a string or null")),
                })
                .collect::<Result<_, _>>()?,
        ),
        "raw" => {
            let hex = obj
                .get("values")
                .and_then(Json::as_str)
                .ok_or_else(|| err(path, "raw values must be a hex string"))?;
            RData::Raw(parse_hex(hex).ok_or_else(|| err(&values_path, "invalid hex string"))?)
        }
        "list" => RData::List(
            values()?
                .iter()
                .enumerate()
                .map(|(i, v)| value_at(v, &at(i)))
                .collect::<Result<_, _>>()?,
        ),
        other => return Err(err(path, format!("unknown type `{other}`"))),
    };

    let mut attributes = Vec::new();
    if let Some(attrs) = obj.get("attributes") {
        let attrs = attrs.as_array().ok_or_else(|| err(path, "`attributes` must be an array"))?;
        for (i, a) in attrs.iter().enumerate() {
            let apath = format!("{path}.attributes[{i}]");
            match a.as_array().map(Vec::as_slice) {
                Some([Json::String(name), value]) => {
                    attributes.push((name.clone(), value_at(value, &format!("{apath}[1]"))?));
                }
                _ => return Err(err(&apath, "expected a [name, value] pair")),
            }
        }
    }
    Ok(RValue { data, attributes })
}

fn real(v: &Json) -> Option<f64> {
    match v {
        Json::Null => Some(f64::from_bits(NA_REAL_BITS)),
        Json::String(s) => match s.as_str() {
            "NaN" => Some(f64::NAN),
            "Inf" => Some(f64::INFINITY),
            "-Inf" => Some(f64::NEG_INFINITY),
            _ => None,
        },
        v => v.as_f64(),
    }
}

fn real_json(d: f64) -> Json {
    if d.to_bits() == NA_REAL_BITS {
        Json::Null
    } else if d.is_nan() {
        json!("NaN")
    } else if d.is_infinite() {
        json!(if d > 0.0 { "Inf" } else { "-Inf" })
    } else {
        json!(d)
    }
}

fn parse_hex(s: &str) -> Option<Vec<u8>> {
    if !s.len().is_multiple_of(2) {
        return None;
    }
    (0..s.len())
        .step_by(2)
        .map(|i| s.get(i..i + 2).and_then(|b| u8::from_str_radix(b, 16).ok()))
        .collect()
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn to_json(v: &RValue) -> Json {
    let mut obj = Map::new();
    let (ty, values) = match &v.data {
        RData::Null => ("null", None),
        RData::Unsupported(kind) => {
            obj.insert("kind".into(), json!(kind));
            ("unsupported", None)
        }
        RData::Logical(x) => ("logical", Some(json!(x))),
        RData::Int(x) => (
            "integer",
            Some(Json::Array(
                x.iter().map(|&i| if i == NA_INTEGER { Json::Null } else { json!(i) }).collect(),
            )),
        ),
        RData::Real(x) => ("real", Some(Json::Array(x.iter().map(|&d| real_json(d)).collect()))),
        RData::Complex(x) => (
            "complex",
            Some(Json::Array(x.iter().map(|c| json!([real_json(c.re), real_json(c.im)])).collect())),
        ),
        RData::String(x) => ("character", Some(json!(x))),
        RData::Raw(x) => ("raw", Some(json!(hex(x)))),
        RData::List(x) => ("list", Some(Json::Array(x.iter().map(to_json).collect()))),
    };
    obj.insert("type".into(), json!(ty));
    if let Some(values) = values {
        obj.insert("values".into(), values);
    }
    if !v.attributes.is_empty() {
        let attrs = v.attributes.iter().map(|(n, a)| json!([n, to_json(a)])).collect();
        obj.insert("attributes".into(), Json::Array(attrs));
    }
    Json::Object(obj)
}

/// Compact, key-ordered rendering; the bench's raw size.
pub fn canonical_text(v: &RValue) -> String {
    to_json(v).to_string()
}

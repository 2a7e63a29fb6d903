//! Coercion between host values and stored field values.
//!
//! The host value model is vector based: every host value is a homogeneous
//! sequence, and a scalar is a sequence of length one. Booleans are
//! three-state, integers are 32-bit with [`NA_INTEGER`] as the missing marker,
//! and 64-bit integers surface either as reals or as decimal strings depending
//! on [`CoercionOptions::int64_as_string`].

use std::collections::HashSet;

use crate::message::DynamicMessage;
use crate::schema::{DescriptorPool, EnumDescriptor, FieldDescriptor, FieldType};
use crate::value::Value;

/// Missing-value marker for host integers.
pub const NA_INTEGER: i32 = i32::MIN;

const TWO_POW_31: f64 = 2147483648.0;
const TWO_POW_32: f64 = 4294967296.0;
const TWO_POW_63: f64 = 9223372036854775808.0;
const TWO_POW_64: f64 = 18446744073709551616.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub fn new(re: f64, im: f64) -> Self {
        Complex { re, im }
    }
}

/// Host-side value: a homogeneous sequence of one kind.
#[derive(Debug, Clone, PartialEq)]
pub enum HostValue {
    /// `None` is NA.
    Logical(Vec<Option<bool>>),
    /// [`NA_INTEGER`] is NA.
    Int(Vec<i32>),
    Real(Vec<f64>),
    /// `None` is NA.
    Str(Vec<Option<String>>),
    Bytes(Vec<Vec<u8>>),
    Complex(Vec<Complex>),
    Message(Vec<DynamicMessage>),
}

impl HostValue {
    pub fn len(&self) -> usize {
        match self {
            HostValue::Logical(v) => v.len(),
            HostValue::Int(v) => v.len(),
            HostValue::Real(v) => v.len(),
            HostValue::Str(v) => v.len(),
            HostValue::Bytes(v) => v.len(),
            HostValue::Complex(v) => v.len(),
            HostValue::Message(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            HostValue::Logical(_) => "logical",
            HostValue::Int(_) => "integer",
            HostValue::Real(_) => "double",
            HostValue::Str(_) => "character",
            HostValue::Bytes(_) => "raw",
            HostValue::Complex(_) => "complex",
            HostValue::Message(_) => "message",
        }
    }

    /// The single string of a length-one non-NA character value.
    pub fn as_str(&self) -> Option<&str> {
        match self {
            HostValue::Str(v) if v.len() == 1 => v[0].as_deref(),
            _ => None,
        }
    }
    pub fn as_int(&self) -> Option<i32> {
        match self {
            HostValue::Int(v) if v.len() == 1 => Some(v[0]),
            _ => None,
        }
    }
    pub fn as_real(&self) -> Option<f64> {
        match self {
            HostValue::Real(v) if v.len() == 1 => Some(v[0]),
            _ => None,
        }
    }
    pub fn as_logical(&self) -> Option<Option<bool>> {
        match self {
            HostValue::Logical(v) if v.len() == 1 => Some(v[0]),
            _ => None,
        }
    }
    pub fn as_message(&self) -> Option<&DynamicMessage> {
        match self {
            HostValue::Message(v) if v.len() == 1 => Some(&v[0]),
            _ => None,
        }
    }
}

impl From<&str> for HostValue {
    fn from(s: &str) -> Self {
        HostValue::Str(vec![Some(s.to_string())])
    }
}
impl From<String> for HostValue {
    fn from(s: String) -> Self {
        HostValue::Str(vec![Some(s)])
    }
}
impl From<i32> for HostValue {
    fn from(v: i32) -> Self {
        HostValue::Int(vec![v])
    }
}
impl From<f64> for HostValue {
    fn from(v: f64) -> Self {
        HostValue::Real(vec![v])
    }
}
impl From<bool> for HostValue {
    fn from(v: bool) -> Self {
        HostValue::Logical(vec![Some(v)])
    }
}
impl From<Option<bool>> for HostValue {
    fn from(v: Option<bool>) -> Self {
        HostValue::Logical(vec![v])
    }
}
impl From<Vec<f64>> for HostValue {
    fn from(v: Vec<f64>) -> Self {
        HostValue::Real(v)
    }
}
impl From<Vec<i32>> for HostValue {
    fn from(v: Vec<i32>) -> Self {
        HostValue::Int(v)
    }
}
impl From<Vec<&str>> for HostValue {
    fn from(v: Vec<&str>) -> Self {
        HostValue::Str(v.into_iter().map(|s| Some(s.to_string())).collect())
    }
}
impl From<DynamicMessage> for HostValue {
    fn from(m: DynamicMessage) -> Self {
        HostValue::Message(vec![m])
    }
}
impl From<Vec<DynamicMessage>> for HostValue {
    fn from(v: Vec<DynamicMessage>) -> Self {
        HostValue::Message(v)
    }
}

/// Options controlling stored-to-host conversion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CoercionOptions {
    /// Return 64-bit integer fields as decimal strings instead of reals.
    pub int64_as_string: bool,
}

impl CoercionOptions {
    pub fn int64_as_string(enabled: bool) -> Self {
        CoercionOptions {
            int64_as_string: enabled,
        }
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum CoercionError {
    #[error("NA boolean values can not be stored in bool Protocol Buffer fields")]
    NaBoolean,
    #[error("field `{field}`: NA values can not be stored in {ty} fields")]
    NaValue { field: String, ty: &'static str },
    #[error("field `{field}`: value {value} is out of range for {ty}")]
    OutOfRange {
        field: String,
        value: String,
        ty: &'static str,
    },
    #[error("field `{field}`: value {value} is not an integer")]
    NotIntegral { field: String, value: f64 },
    #[error("field `{field}`: `{text}` is not a valid decimal integer")]
    InvalidInteger { field: String, text: String },
    #[error("field `{field}`: `{name}` is not a constant of enum `{enum_name}`")]
    UnknownEnumName {
        field: String,
        name: String,
        enum_name: String,
    },
    #[error("field `{field}`: {number} is not a value of enum `{enum_name}`")]
    UnknownEnumNumber {
        field: String,
        number: i64,
        enum_name: String,
    },
    #[error("field `{field}`: cannot store {found} values in a {expected} field")]
    KindMismatch {
        field: String,
        expected: String,
        found: &'static str,
    },
    #[error("field `{field}`: expected message of type `{expected}`, got `{found}`")]
    WrongMessageType {
        field: String,
        expected: String,
        found: String,
    },
}

/// Converts a host value into the stored values of `field`, one per element.
pub fn host_to_wire(
    pool: &DescriptorPool,
    field: &FieldDescriptor,
    value: &HostValue,
) -> Result<Vec<Value>, CoercionError> {
    let name = field.name();
    let ty = field.field_type();
    let mismatch = || CoercionError::KindMismatch {
        field: name.to_string(),
        expected: ty.kind_name().to_string(),
        found: value.kind_name(),
    };
    match ty {
        FieldType::Double | FieldType::Float => {
            let reals: Vec<f64> = match value {
                HostValue::Real(v) => v.clone(),
                HostValue::Int(v) => v
                    .iter()
                    .map(|&i| non_na_int(field, i, ty).map(f64::from))
                    .collect::<Result<_, _>>()?,
                _ => return Err(mismatch()),
            };
            Ok(reals
                .into_iter()
                .map(|r| {
                    if matches!(ty, FieldType::Float) {
                        Value::Float(r as f32)
                    } else {
                        Value::Double(r)
                    }
                })
                .collect())
        }
        FieldType::Int32 | FieldType::Sint32 | FieldType::Sfixed32 => match value {
            HostValue::Int(v) => v
                .iter()
                .map(|&i| non_na_int(field, i, ty).map(Value::Int32))
                .collect(),
            HostValue::Real(v) => v
                .iter()
                .map(|&r| {
                    integral(field, r, -TWO_POW_31, TWO_POW_31, "int32").map(|r| Value::Int32(r as i32))
                })
                .collect(),
            _ => Err(mismatch()),
        },
        FieldType::Uint32 | FieldType::Fixed32 => match value {
            HostValue::Int(v) => v
                .iter()
                .map(|&i| {
                    let i = non_na_int(field, i, ty)?;
                    u32::try_from(i).map(Value::Uint32).map_err(|_| out_of_range(field, i, "uint32"))
                })
                .collect(),
            HostValue::Real(v) => v
                .iter()
                .map(|&r| integral(field, r, 0.0, TWO_POW_32, "uint32").map(|r| Value::Uint32(r as u32)))
                .collect(),
            _ => Err(mismatch()),
        },
        FieldType::Int64 | FieldType::Sint64 | FieldType::Sfixed64 => match value {
            HostValue::Int(v) => v
                .iter()
                .map(|&i| non_na_int(field, i, ty).map(|i| Value::Int64(i as i64)))
                .collect(),
            HostValue::Real(v) => v
                .iter()
                .map(|&r| integral(field, r, -TWO_POW_63, TWO_POW_63, "int64").map(|r| Value::Int64(r as i64)))
                .collect(),
            HostValue::Str(v) => v
                .iter()
                .map(|s| {
                    let s = non_na_str(field, s, ty)?;
                    parse_decimal_i64(s)
                        .map(Value::Int64)
                        .ok_or_else(|| invalid_integer(field, s))
                })
                .collect(),
            _ => Err(mismatch()),
        },
        FieldType::Uint64 | FieldType::Fixed64 => match value {
            HostValue::Int(v) => v
                .iter()
                .map(|&i| {
                    let i = non_na_int(field, i, ty)?;
                    u64::try_from(i).map(Value::Uint64).map_err(|_| out_of_range(field, i, "uint64"))
                })
                .collect(),
            HostValue::Real(v) => v
                .iter()
                .map(|&r| integral(field, r, 0.0, TWO_POW_64, "uint64").map(|r| Value::Uint64(r as u64)))
                .collect(),
            HostValue::Str(v) => v
                .iter()
                .map(|s| {
                    let s = non_na_str(field, s, ty)?;
                    parse_decimal_u64(s)
                        .map(Value::Uint64)
                        .ok_or_else(|| invalid_integer(field, s))
                })
                .collect(),
            _ => Err(mismatch()),
        },
        FieldType::Bool => match value {
            HostValue::Logical(v) => v
                .iter()
                .map(|b| b.map(Value::Bool).ok_or(CoercionError::NaBoolean))
                .collect(),
            _ => Err(mismatch()),
        },
        FieldType::String => match value {
            HostValue::Str(v) => v
                .iter()
                .map(|s| non_na_str(field, s, ty).map(|s| Value::String(s.to_string())))
                .collect(),
            _ => Err(mismatch()),
        },
        FieldType::Bytes => match value {
            HostValue::Str(v) => v
                .iter()
                .map(|s| non_na_str(field, s, ty).map(|s| Value::Bytes(s.as_bytes().to_vec())))
                .collect(),
            HostValue::Bytes(v) => Ok(v.iter().cloned().map(Value::Bytes).collect()),
            _ => Err(mismatch()),
        },
        FieldType::Enum(enum_name) => {
            let Some(e) = pool.enum_type(enum_name) else {
                return Err(mismatch());
            };
            match value {
                HostValue::Str(v) => v
                    .iter()
                    .map(|s| {
                        let s = non_na_str(field, s, ty)?;
                        e.value_by_name(s)
                            .map(|c| Value::Enum(c.number()))
                            .ok_or_else(|| CoercionError::UnknownEnumName {
                                field: name.to_string(),
                                name: s.to_string(),
                                enum_name: enum_name.clone(),
                            })
                    })
                    .collect(),
                HostValue::Int(v) => v
                    .iter()
                    .map(|&i| enum_number(field, &e, non_na_int(field, i, ty)? as i64))
                    .collect(),
                HostValue::Real(v) => v
                    .iter()
                    .map(|&r| {
                        let r = integral(field, r, -TWO_POW_31, TWO_POW_31, "enum")?;
                        enum_number(field, &e, r as i64)
                    })
                    .collect(),
                _ => Err(mismatch()),
            }
        }
        FieldType::Message(type_name) => match value {
            HostValue::Message(v) => v
                .iter()
                .map(|m| {
                    if m.descriptor().full_name() == type_name {
                        Ok(Value::Message(Box::new(m.clone())))
                    } else {
                        Err(CoercionError::WrongMessageType {
                            field: name.to_string(),
                            expected: type_name.clone(),
                            found: m.descriptor().full_name().to_string(),
                        })
                    }
                })
                .collect(),
            _ => Err(mismatch()),
        },
        FieldType::Unresolved(_) => Err(mismatch()),
    }
}

/// Converts stored values of `field` into the host kind given by the
/// field's type (single and repeated labels map to the same kind).
pub fn wire_to_host(field: &FieldDescriptor, values: &[Value], opts: &CoercionOptions) -> HostValue {
    let ty = field.field_type();
    match ty {
        FieldType::Double | FieldType::Float | FieldType::Uint32 | FieldType::Fixed32 => HostValue::Real(
            values
                .iter()
                .filter_map(|v| match v {
                    Value::Double(d) => Some(*d),
                    Value::Float(f) => Some(f64::from(*f)),
                    Value::Uint32(u) => Some(f64::from(*u)),
                    _ => None,
                })
                .collect(),
        ),
        FieldType::Int32 | FieldType::Sint32 | FieldType::Sfixed32 => HostValue::Int(
            values
                .iter()
                .filter_map(|v| match v {
                    Value::Int32(i) => Some(*i),
                    _ => None,
                })
                .collect(),
        ),
        FieldType::Int64
        | FieldType::Sint64
        | FieldType::Sfixed64
        | FieldType::Uint64
        | FieldType::Fixed64 => {
            let ints = values.iter().filter_map(|v| match v {
                Value::Int64(i) => Some(i128::from(*i)),
                Value::Uint64(u) => Some(i128::from(*u)),
                _ => None,
            });
            if opts.int64_as_string {
                HostValue::Str(ints.map(|i| Some(i.to_string())).collect())
            } else {
                HostValue::Real(ints.map(|i| i as f64).collect())
            }
        }
        FieldType::Bool => HostValue::Logical(
            values
                .iter()
                .filter_map(|v| match v {
                    Value::Bool(b) => Some(Some(*b)),
                    _ => None,
                })
                .collect(),
        ),
        FieldType::String => HostValue::Str(
            values
                .iter()
                .filter_map(|v| match v {
                    Value::String(s) => Some(Some(s.clone())),
                    _ => None,
                })
                .collect(),
        ),
        FieldType::Bytes => HostValue::Bytes(
            values
                .iter()
                .filter_map(|v| match v {
                    Value::Bytes(b) => Some(b.clone()),
                    _ => None,
                })
                .collect(),
        ),
        FieldType::Enum(_) => HostValue::Int(
            values
                .iter()
                .filter_map(|v| match v {
                    Value::Enum(n) => Some(*n),
                    _ => None,
                })
                .collect(),
        ),
        FieldType::Message(_) | FieldType::Unresolved(_) => HostValue::Message(
            values
                .iter()
                .filter_map(|v| v.as_message().cloned())
                .collect(),
        ),
    }
}

/// Number of pairwise-distinct elements under host equality.
///
/// Reals compare numerically (`0.0 == -0.0`) with all NaNs equal to each other.
pub fn distinct_count(value: &HostValue) -> usize {
    fn count<T: Eq + std::hash::Hash>(it: impl Iterator<Item = T>) -> usize {
        it.collect::<HashSet<T>>().len()
    }
    fn real_key(r: f64) -> u64 {
        if r.is_nan() {
            f64::NAN.to_bits()
        } else if r == 0.0 {
            0
        } else {
            r.to_bits()
        }
    }
    match value {
        HostValue::Logical(v) => count(v.iter()),
        HostValue::Int(v) => count(v.iter()),
        HostValue::Real(v) => count(v.iter().map(|r| real_key(*r))),
        HostValue::Str(v) => count(v.iter()),
        HostValue::Bytes(v) => count(v.iter()),
        HostValue::Complex(v) => count(v.iter().map(|c| (real_key(c.re), real_key(c.im)))),
        HostValue::Message(v) => {
            let mut distinct: Vec<&DynamicMessage> = Vec::new();
            for m in v {
                if !distinct.contains(&m) {
                    distinct.push(m);
                }
            }
            distinct.len()
        }
    }
}

/// Parses an optionally signed decimal integer at full 64-bit precision.
pub fn parse_decimal_i64(s: &str) -> Option<i64> {
    let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

pub fn parse_decimal_u64(s: &str) -> Option<u64> {
    let digits = s.strip_prefix('+').unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

fn non_na_int(field: &FieldDescriptor, i: i32, ty: &FieldType) -> Result<i32, CoercionError> {
    if i == NA_INTEGER {
        Err(CoercionError::NaValue {
            field: field.name().to_string(),
            ty: static_kind(ty),
        })
    } else {
        Ok(i)
    }
}

fn non_na_str<'a>(field: &FieldDescriptor, s: &'a Option<String>, ty: &FieldType) -> Result<&'a str, CoercionError> {
    s.as_deref().ok_or_else(|| CoercionError::NaValue {
        field: field.name().to_string(),
        ty: static_kind(ty),
    })
}

fn static_kind(ty: &FieldType) -> &'static str {
    match ty {
        FieldType::Double => "double",
        FieldType::Float => "float",
        FieldType::Int32 => "int32",
        FieldType::Int64 => "int64",
        FieldType::Uint32 => "uint32",
        FieldType::Uint64 => "uint64",
        FieldType::Sint32 => "sint32",
        FieldType::Sint64 => "sint64",
        FieldType::Fixed32 => "fixed32",
        FieldType::Fixed64 => "fixed64",
        FieldType::Sfixed32 => "sfixed32",
        FieldType::Sfixed64 => "sfixed64",
        FieldType::Bool => "bool",
        FieldType::String => "string",
        FieldType::Bytes => "bytes",
        FieldType::Enum(_) => "enum",
        FieldType::Message(_) | FieldType::Unresolved(_) => "message",
    }
}

/// Checks `r` is integral and within `[lo, hi)`.
fn integral(field: &FieldDescriptor, r: f64, lo: f64, hi: f64, ty: &'static str) -> Result<f64, CoercionError> {
    if !r.is_finite() || r.fract() != 0.0 {
        return Err(CoercionError::NotIntegral {
            field: field.name().to_string(),
            value: r,
        });
    }
    if r < lo || r >= hi {
        return Err(out_of_range(field, r, ty));
    }
    Ok(r)
}

fn out_of_range(field: &FieldDescriptor, v: impl ToString, ty: &'static str) -> CoercionError {
    CoercionError::OutOfRange {
        field: field.name().to_string(),
        value: v.to_string(),
        ty,
    }
}

fn invalid_integer(field: &FieldDescriptor, s: &str) -> CoercionError {
    CoercionError::InvalidInteger {
        field: field.name().to_string(),
        text: s.to_string(),
    }
}

fn enum_number(field: &FieldDescriptor, e: &EnumDescriptor, n: i64) -> Result<Value, CoercionError> {
    i32::try_from(n)
        .ok()
        .and_then(|n| e.value_by_number(n))
        .map(|c| Value::Enum(c.number()))
        .ok_or_else(|| CoercionError::UnknownEnumNumber {
            field: field.name().to_string(),
            number: n,
            enum_name: e.full_name().to_string(),
        })
}

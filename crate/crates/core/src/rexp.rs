//! Structured host values and their mapping to the `rexp.REXP` universal schema.

use crate::bridge::{Complex, NA_INTEGER};
use crate::bundled;
use crate::message::DynamicMessage;
use crate::value::Value;
use crate::wire::{self, WireError};

pub const REXP_TYPE: &str = "rexp.REXP";

/// `REXP.RClass` constants.
pub mod rclass {
    pub const STRING: i32 = 0;
    pub const RAW: i32 = 1;
    pub const REAL: i32 = 2;
    pub const COMPLEX: i32 = 3;
    pub const INTEGER: i32 = 4;
    pub const LIST: i32 = 5;
    pub const LOGICAL: i32 = 6;
    pub const NULLTYPE: i32 = 7;
}

const RBOOL_F: i32 = 0;
const RBOOL_T: i32 = 1;
const RBOOL_NA: i32 = 2;

/// Payload of a structured value. Every variant is a vector; scalars have
/// length one.
#[derive(Debug, Clone, PartialEq)]
pub enum RData {
    Null,
    Logical(Vec<Option<bool>>),
    /// [`NA_INTEGER`] marks NA.
    Int(Vec<i32>),
    Real(Vec<f64>),
    Complex(Vec<Complex>),
    String(Vec<Option<String>>),
    Raw(Vec<u8>),
    List(Vec<RValue>),
    /// A value kind with no representation in the schema (functions,
    /// environments, formulas, ...), labelled by kind.
    Unsupported(String),
}

/// A structured value with ordered, named attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct RValue {
    pub data: RData,
    pub attributes: Vec<(String, RValue)>,
}

impl RValue {
    pub fn new(data: RData) -> Self {
        RValue {
            data,
            attributes: Vec::new(),
        }
    }
    pub fn null() -> Self {
        Self::new(RData::Null)
    }
    pub fn logical(v: Vec<Option<bool>>) -> Self {
        Self::new(RData::Logical(v))
    }
    pub fn int(v: Vec<i32>) -> Self {
        Self::new(RData::Int(v))
    }
    pub fn real(v: Vec<f64>) -> Self {
        Self::new(RData::Real(v))
    }
    pub fn complex(v: Vec<Complex>) -> Self {
        Self::new(RData::Complex(v))
    }
    pub fn string<S: Into<String>>(v: impl IntoIterator<Item = S>) -> Self {
        Self::new(RData::String(v.into_iter().map(|s| Some(s.into())).collect()))
    }
    pub fn string_na(v: Vec<Option<String>>) -> Self {
        Self::new(RData::String(v))
    }
    pub fn raw(v: Vec<u8>) -> Self {
        Self::new(RData::Raw(v))
    }
    pub fn list(v: Vec<RValue>) -> Self {
        Self::new(RData::List(v))
    }
    pub fn unsupported(kind: impl Into<String>) -> Self {
        Self::new(RData::Unsupported(kind.into()))
    }

    /// Named list: elements plus a `names` attribute.
    pub fn named_list<S: Into<String>>(items: impl IntoIterator<Item = (S, RValue)>) -> Self {
        let (names, values): (Vec<String>, Vec<RValue>) = items.into_iter().map(|(n, v)| (n.into(), v)).unzip();
        Self::list(values).with_attr("names", Self::string(names))
    }

    /// Appends an attribute, replacing any existing one of the same name in place.
    pub fn with_attr(mut self, name: impl Into<String>, value: RValue) -> Self {
        self.set_attr(name, value);
        self
    }

    pub fn set_attr(&mut self, name: impl Into<String>, value: RValue) {
        let name = name.into();
        match self.attributes.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = value,
            None => self.attributes.push((name, value)),
        }
    }

    pub fn attr(&self, name: &str) -> Option<&RValue> {
        self.attributes.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    /// Element names from the `names` attribute; NA names become `None`.
    pub fn names(&self) -> Option<&[Option<String>]> {
        match self.attr("names").map(|v| &v.data) {
            Some(RData::String(s)) => Some(s),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        match &self.data {
            RData::Null | RData::Unsupported(_) => 0,
            RData::Logical(v) => v.len(),
            RData::Int(v) => v.len(),
            RData::Real(v) => v.len(),
            RData::Complex(v) => v.len(),
            RData::String(v) => v.len(),
            RData::Raw(v) => v.len(),
            RData::List(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind_name(&self) -> &str {
        match &self.data {
            RData::Null => "NULL",
            RData::Logical(_) => "logical",
            RData::Int(_) => "integer",
            RData::Real(_) => "double",
            RData::Complex(_) => "complex",
            RData::String(_) => "character",
            RData::Raw(_) => "raw",
            RData::List(_) => "list",
            RData::Unsupported(k) => k,
        }
    }

    /// Number of unsupported nodes, attribute values included.
    pub fn unsupported_count(&self) -> usize {
        let own = usize::from(matches!(self.data, RData::Unsupported(_)));
        let children: usize = match &self.data {
            RData::List(items) => items.iter().map(RValue::unsupported_count).sum(),
            _ => 0,
        };
        own + children + self.attributes.iter().map(|(_, v)| v.unsupported_count()).sum::<usize>()
    }
}

/// `true` when no node of `v`, including attribute values, is unsupported.
pub fn can_serialize(v: &RValue) -> bool {
    v.unsupported_count() == 0
}

/// Deep equality: reals and complex parts compare by bit pattern, attribute
/// order is significant.
pub fn value_equal(a: &RValue, b: &RValue) -> bool {
    let data = match (&a.data, &b.data) {
        (RData::Real(x), RData::Real(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(p, q)| p.to_bits() == q.to_bits())
        }
        (RData::Complex(x), RData::Complex(y)) => {
            x.len() == y.len()
                && x
                    .iter()
                    .zip(y)
                    .all(|(p, q)| p.re.to_bits() == q.re.to_bits() && p.im.to_bits() == q.im.to_bits())
        }
        (RData::List(x), RData::List(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| value_equal(p, q)),
        (x, y) => x == y,
    };
    data && a.attributes.len() == b.attributes.len()
        && a
            .attributes
            .iter()
            .zip(&b.attributes)
            .all(|((n1, v1), (n2, v2))| n1 == n2 && value_equal(v1, v2))
}

/// Encoded payload plus one warning per unsupported node skipped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Serialized {
    pub bytes: Vec<u8>,
    pub warnings: Vec<String>,
}

/// Encodes `v` as a `rexp.REXP` payload. Unsupported values become NULL and
/// unsupported attribute values are dropped, each with a warning.
pub fn serialize_value(v: &RValue) -> Serialized {
    let mut warnings = Vec::new();
    let m = to_message(v, &mut warnings);
    Serialized {
        bytes: wire::encode_message(&m),
        warnings,
    }
}

/// Builds the `rexp.REXP` message for `v`, collecting warnings.
pub fn to_message(v: &RValue, warnings: &mut Vec<String>) -> DynamicMessage {
    let pool = bundled::pool();
    let mut m = DynamicMessage::new(pool, REXP_TYPE).expect("bundled rexp schema");
    let set = |m: &mut DynamicMessage, name: &str, v: Value| m.set_value(name, v).expect("rexp field");
    let put = |m: &mut DynamicMessage, name: &str, vs: Vec<Value>| m.set_values(name, vs).expect("rexp field");

    let class = match &v.data {
        RData::Null => rclass::NULLTYPE,
        RData::Unsupported(kind) => {
            warnings.push(format!("skipping value of unsupported type `{kind}`; serialized as NULL"));
            set(&mut m, "rclass", Value::Enum(rclass::NULLTYPE));
            return m;
        }
        RData::Logical(x) => {
            let vs = x
                .iter()
                .map(|b| {
                    Value::Enum(match b {
                        Some(true) => RBOOL_T,
                        Some(false) => RBOOL_F,
                        None => RBOOL_NA,
                    })
                })
                .collect();
            put(&mut m, "booleanValue", vs);
            rclass::LOGICAL
        }
        RData::Int(x) => {
            put(&mut m, "intValue", x.iter().map(|&i| Value::Int32(i)).collect());
            rclass::INTEGER
        }
        RData::Real(x) => {
            put(&mut m, "realValue", x.iter().map(|&r| Value::Double(r)).collect());
            rclass::REAL
        }
        RData::Complex(x) => {
            let vs = x
                .iter()
                .map(|c| {
                    let mut cm = DynamicMessage::new(pool, "rexp.CMPLX").expect("bundled rexp schema");
                    set(&mut cm, "real", Value::Double(c.re));
                    set(&mut cm, "imag", Value::Double(c.im));
                    Value::from(cm)
                })
                .collect();
            put(&mut m, "complexValue", vs);
            rclass::COMPLEX
        }
        RData::String(x) => {
            let vs = x
                .iter()
                .map(|s| {
                    let mut sm = DynamicMessage::new(pool, "rexp.STRING").expect("bundled rexp schema");
                    match s {
                        Some(s) => set(&mut sm, "strval", Value::String(s.clone())),
                        None => set(&mut sm, "isNA", Value::Bool(true)),
                    }
                    Value::from(sm)
                })
                .collect();
            put(&mut m, "stringValue", vs);
            rclass::STRING
        }
        RData::Raw(x) => {
            set(&mut m, "rawValue", Value::Bytes(x.clone()));
            rclass::RAW
        }
        RData::List(items) => {
            let vs = items.iter().map(|item| Value::from(to_message(item, warnings))).collect();
            put(&mut m, "rexpValue", vs);
            rclass::LIST
        }
    };
    set(&mut m, "rclass", Value::Enum(class));

    let mut names = Vec::new();
    let mut values = Vec::new();
    for (name, value) in &v.attributes {
        if let RData::Unsupported(kind) = &value.data {
            warnings.push(format!("dropping attribute `{name}` of unsupported type `{kind}`"));
            continue;
        }
        names.push(Value::String(name.clone()));
        values.push(Value::from(to_message(value, warnings)));
    }
    put(&mut m, "attrName", names);
    put(&mut m, "attrValue", values);
    m
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum RexpError {
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error("expected a `rexp.REXP` message, got `{0}`")]
    WrongType(String),
    #[error("missing rclass")]
    MissingClass,
    #[error("rclass {0} is not a defined RClass value")]
    InvalidClass(i64),
    #[error("field `{field}` is populated but rclass is {class}")]
    ClassMismatch { class: &'static str, field: String },
    #[error("{names} attribute names but {values} attribute values")]
    AttributeMismatch { names: usize, values: usize },
    #[error("complex element without an imaginary part")]
    MissingImaginary,
}

/// Decodes a `rexp.REXP` payload.
pub fn unserialize_value(payload: &[u8]) -> Result<RValue, RexpError> {
    let m = wire::decode_named(bundled::pool(), REXP_TYPE, payload)?;
    from_message(&m)
}

pub fn from_message(m: &DynamicMessage) -> Result<RValue, RexpError> {
    if m.type_name() != REXP_TYPE {
        return Err(RexpError::WrongType(m.type_name().to_string()));
    }
    let class = match m.values("rclass").expect("rexp field").first() {
        Some(Value::Enum(c)) => *c,
        _ => {
            let unknown = m.unknown_fields().iter().find(|u| u.number == 1);
            return Err(match unknown.and_then(|u| wire::decode_varint(&u.payload, 0).ok()) {
                Some((raw, _)) => RexpError::InvalidClass(raw as i32 as i64),
                None => RexpError::MissingClass,
            });
        }
    };
    let class_name = class_name(class);
    let value_field = match class {
        rclass::STRING => Some("stringValue"),
        rclass::RAW => Some("rawValue"),
        rclass::REAL => Some("realValue"),
        rclass::COMPLEX => Some("complexValue"),
        rclass::INTEGER => Some("intValue"),
        rclass::LIST => Some("rexpValue"),
        rclass::LOGICAL => Some("booleanValue"),
        _ => None,
    };
    for other in ["realValue", "intValue", "booleanValue", "stringValue", "rawValue", "complexValue", "rexpValue"] {
        if Some(other) != value_field && m.has(other).expect("rexp field") {
            return Err(RexpError::ClassMismatch {
                class: class_name,
                field: other.to_string(),
            });
        }
    }
    let vals = |name: &str| m.values(name).expect("rexp field");
    let data = match class {
        rclass::STRING => RData::String(
            vals("stringValue")
                .iter()
                .filter_map(Value::as_message)
                .map(|s| {
                    let na = matches!(s.get_value("isNA"), Ok(Value::Bool(true)));
                    if na {
                        None
                    } else {
                        match s.get_value("strval") {
                            Ok(Value::String(x)) => Some(x),
                            _ => Some(String::new()),
                        }
                    }
                })
                .collect(),
        ),
        rclass::RAW => RData::Raw(match vals("rawValue").first() {
            Some(Value::Bytes(b)) => b.clone(),
            _ => Vec::new(),
        }),
        rclass::REAL => RData::Real(
            vals("realValue")
                .iter()
                .filter_map(|v| match v {
                    Value::Double(d) => Some(*d),
                    _ => None,
                })
                .collect(),
        ),
        rclass::COMPLEX => RData::Complex(
            vals("complexValue")
                .iter()
                .filter_map(Value::as_message)
                .map(|c| {
                    if !c.has("imag").expect("rexp field") {
                        return Err(RexpError::MissingImaginary);
                    }
                    let part = |n: &str| match c.get_value(n) {
                        Ok(Value::Double(d)) => d,
                        _ => 0.0,
                    };
                    Ok(Complex::new(part("real"), part("imag")))
                })
                .collect::<Result<_, _>>()?,
        ),
        rclass::INTEGER => RData::Int(
            vals("intValue")
                .iter()
                .filter_map(|v| match v {
                    Value::Int32(i) => Some(*i),
                    _ => None,
                })
                .collect(),
        ),
        rclass::LIST => RData::List(
            vals("rexpValue")
                .iter()
                .filter_map(Value::as_message)
                .map(from_message)
                .collect::<Result<_, _>>()?,
        ),
        rclass::LOGICAL => RData::Logical(
            vals("booleanValue")
                .iter()
                .map(|v| match v {
                    Value::Enum(RBOOL_T) => Some(true),
                    Value::Enum(RBOOL_F) => Some(false),
                    _ => None,
                })
                .collect(),
        ),
        _ => RData::Null,
    };

    let names = vals("attrName");
    let values = vals("attrValue");
    if names.len() != values.len() {
        return Err(RexpError::AttributeMismatch {
            names: names.len(),
            values: values.len(),
        });
    }
    let mut attributes = Vec::with_capacity(names.len());
    for (n, v) in names.iter().zip(values) {
        let (Value::String(n), Some(v)) = (n, v.as_message()) else {
            unreachable!("schema-typed attribute fields")
        };
        attributes.push((n.clone(), from_message(v)?));
    }
    Ok(RValue { data, attributes })
}

fn class_name(c: i32) -> &'static str {
    match c {
        rclass::STRING => "STRING",
        rclass::RAW => "RAW",
        rclass::REAL => "REAL",
        rclass::COMPLEX => "COMPLEX",
        rclass::INTEGER => "INTEGER",
        rclass::LIST => "LIST",
        rclass::LOGICAL => "LOGICAL",
        _ => "NULLTYPE",
    }
}

impl From<&RValue> for crate::bridge::HostValue {
    /// Atomic payloads as host vectors; lists and NULL become an empty
    /// logical vector.
    fn from(v: &RValue) -> Self {
        use crate::bridge::HostValue;
        match &v.data {
            RData::Logical(x) => HostValue::Logical(x.clone()),
            RData::Int(x) => HostValue::Int(x.clone()),
            RData::Real(x) => HostValue::Real(x.clone()),
            RData::Complex(x) => HostValue::Complex(x.clone()),
            RData::String(x) => HostValue::Str(x.clone()),
            RData::Raw(x) => HostValue::Bytes(vec![x.clone()]),
            _ => HostValue::Logical(Vec::new()),
        }
    }
}

/// Whether `i` is the integer NA marker.
pub fn is_na_int(i: i32) -> bool {
    i == NA_INTEGER
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_is_two_bytes() {
        let s = serialize_value(&RValue::null());
        assert_eq!(s.bytes, [0x08, 0x07]);
        assert!(s.warnings.is_empty());
    }

    #[test]
    fn logical_maps_to_rboolean() {
        let s = serialize_value(&RValue::logical(vec![Some(true), Some(false), None]));
        assert_eq!(s.bytes, [0x08, 0x06, 0x20, 0x01, 0x20, 0x00, 0x20, 0x02]);
    }

    #[test]
    fn int_na_travels_through_sint32() {
        let v = RValue::int(vec![NA_INTEGER, 1]);
        let s = serialize_value(&v);
        assert_eq!(s.bytes, [0x08, 0x04, 0x1a, 0x06, 0xff, 0xff, 0xff, 0xff, 0x0f, 0x02]);
        assert!(value_equal(&unserialize_value(&s.bytes).unwrap(), &v));
    }

    #[test]
    fn string_na_and_empty_are_distinct() {
        let v = RValue::string_na(vec![Some(String::new()), None, Some("a".into())]);
        let back = unserialize_value(&serialize_value(&v).bytes).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn unsupported_root_becomes_null_with_warning() {
        let s = serialize_value(&RValue::unsupported("closure"));
        assert_eq!(s.bytes, [0x08, 0x07]);
        assert_eq!(s.warnings.len(), 1);
    }

    #[test]
    fn unsupported_attribute_is_dropped() {
        let v = RValue::list(vec![RValue::real(vec![1.0])])
            .with_attr("class", RValue::string(["nfnGroupedData", "data.frame"]))
            .with_attr("formula", RValue::unsupported("formula"))
            .with_attr("dim", RValue::int(vec![1, 1]));
        assert!(!can_serialize(&v));
        let s = serialize_value(&v);
        assert_eq!(s.warnings.len(), 1);
        let back = unserialize_value(&s.bytes).unwrap();
        assert!(!value_equal(&back, &v));
        assert_eq!(back.attr("class"), v.attr("class"));
        assert_eq!(back.attr("dim"), v.attr("dim"));
        assert!(back.attr("formula").is_none());
    }

    #[test]
    fn class_mismatch_rejected() {
        // rclass REAL with an intValue block.
        let bytes = [0x08, 0x02, 0x1a, 0x01, 0x02];
        assert!(matches!(unserialize_value(&bytes), Err(RexpError::ClassMismatch { .. })));
    }

    #[test]
    fn invalid_class_rejected() {
        assert_eq!(unserialize_value(&[0x08, 0x09]), Err(RexpError::InvalidClass(9)));
        assert_eq!(unserialize_value(&[]), Err(RexpError::MissingClass));
    }

    #[test]
    fn attribute_length_mismatch_rejected() {
        // rclass NULLTYPE plus one attrName without a value.
        let bytes = [0x08, 0x07, 0x5a, 0x01, b'a'];
        assert_eq!(
            unserialize_value(&bytes),
            Err(RexpError::AttributeMismatch { names: 1, values: 0 })
        );
    }

    #[test]
    fn value_equal_is_bitwise_on_reals() {
        let nan = RValue::real(vec![f64::NAN]);
        assert!(value_equal(&nan, &nan.clone()));
        assert!(!value_equal(&RValue::real(vec![0.0]), &RValue::real(vec![-0.0])));
        assert!(!value_equal(
            &RValue::list(vec![RValue::int(vec![1])]),
            &RValue::list(vec![RValue::real(vec![1.0])])
        ));
    }
}

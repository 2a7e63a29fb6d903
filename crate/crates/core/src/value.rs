//! Typed field values as stored in a message and carried on the wire.

use std::fmt;

use crate::message::DynamicMessage;
use crate::schema::FieldType;

/// One stored element of a field, typed by the field's declared type.
#[derive(Clone)]
pub enum Value {
    Double(f64),
    Float(f32),
    /// int32, sint32, sfixed32
    Int32(i32),
    /// int64, sint64, sfixed64
    Int64(i64),
    /// uint32, fixed32
    Uint32(u32),
    /// uint64, fixed64
    Uint64(u64),
    Bool(bool),
    String(String),
    Bytes(Vec<u8>),
    /// Enum constant number.
    Enum(i32),
    Message(Box<DynamicMessage>),
}

impl Value {
    /// Whether this value is storable in a field of type `ty`.
    pub fn matches(&self, ty: &FieldType) -> bool {
        matches!(
            (self, ty),
            (Value::Double(_), FieldType::Double)
                | (Value::Float(_), FieldType::Float)
                | (Value::Int32(_), FieldType::Int32 | FieldType::Sint32 | FieldType::Sfixed32)
                | (Value::Int64(_), FieldType::Int64 | FieldType::Sint64 | FieldType::Sfixed64)
                | (Value::Uint32(_), FieldType::Uint32 | FieldType::Fixed32)
                | (Value::Uint64(_), FieldType::Uint64 | FieldType::Fixed64)
                | (Value::Bool(_), FieldType::Bool)
                | (Value::String(_), FieldType::String)
                | (Value::Bytes(_), FieldType::Bytes)
                | (Value::Enum(_), FieldType::Enum(_))
        ) || matches!((self, ty), (Value::Message(m), FieldType::Message(name)) if m.descriptor().full_name() == name)
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Double(_) => "double",
            Value::Float(_) => "float",
            Value::Int32(_) => "int32",
            Value::Int64(_) => "int64",
            Value::Uint32(_) => "uint32",
            Value::Uint64(_) => "uint64",
            Value::Bool(_) => "bool",
            Value::String(_) => "string",
            Value::Bytes(_) => "bytes",
            Value::Enum(_) => "enum",
            Value::Message(_) => "message",
        }
    }

    pub fn as_message(&self) -> Option<&DynamicMessage> {
        match self {
            Value::Message(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_message_mut(&mut self) -> Option<&mut DynamicMessage> {
        match self {
            Value::Message(m) => Some(m),
            _ => None,
        }
    }
}

/// Floating point values compare by bit pattern so that NaN payloads
/// survive equality checks after a round trip.
impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        use Value::*;
        match (self, other) {
            (Double(a), Double(b)) => a.to_bits() == b.to_bits(),
            (Float(a), Float(b)) => a.to_bits() == b.to_bits(),
            (Int32(a), Int32(b)) => a == b,
            (Int64(a), Int64(b)) => a == b,
            (Uint32(a), Uint32(b)) => a == b,
            (Uint64(a), Uint64(b)) => a == b,
            (Bool(a), Bool(b)) => a == b,
            (String(a), String(b)) => a == b,
            (Bytes(a), Bytes(b)) => a == b,
            (Enum(a), Enum(b)) => a == b,
            (Message(a), Message(b)) => a == b,
            _ => false,
        }
    }
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Double(v) => write!(f, "Double({v:?})"),
            Value::Float(v) => write!(f, "Float({v:?})"),
            Value::Int32(v) => write!(f, "Int32({v})"),
            Value::Int64(v) => write!(f, "Int64({v})"),
            Value::Uint32(v) => write!(f, "Uint32({v})"),
            Value::Uint64(v) => write!(f, "Uint64({v})"),
            Value::Bool(v) => write!(f, "Bool({v})"),
            Value::String(v) => write!(f, "String({v:?})"),
            Value::Bytes(v) => write!(f, "Bytes({v:02x?})"),
            Value::Enum(v) => write!(f, "Enum({v})"),
            Value::Message(m) => m.fmt(f),
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Double(v)
    }
}
impl From<i32> for Value {
    fn from(v: i32) -> Self {
        Value::Int32(v)
    }
}
impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int64(v)
    }
}
impl From<u32> for Value {
    fn from(v: u32) -> Self {
        Value::Uint32(v)
    }
}
impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Uint64(v)
    }
}
impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}
impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::String(v.to_string())
    }
}
impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::String(v)
    }
}
impl From<DynamicMessage> for Value {
    fn from(m: DynamicMessage) -> Self {
        Value::Message(Box::new(m))
    }
}

//! Binary wire format: varints, zigzag, field keys and message encode/decode.

use std::fmt;
use std::sync::Arc;

use crate::message::DynamicMessage;
use crate::schema::{DescriptorPool, FieldDescriptor, FieldType, MessageDescriptor};
use crate::value::Value;

/// Nesting limit for embedded messages on decode.
pub const MAX_DEPTH: usize = 100;
const MAX_VARINT_LEN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WireType {
    Varint = 0,
    Fixed64 = 1,
    LengthDelimited = 2,
    Fixed32 = 5,
}

impl WireType {
    pub fn from_code(code: u8) -> Option<WireType> {
        match code {
            0 => Some(WireType::Varint),
            1 => Some(WireType::Fixed64),
            2 => Some(WireType::LengthDelimited),
            5 => Some(WireType::Fixed32),
            _ => None,
        }
    }

    /// Wire type of a single element of `ty` outside a packed block.
    pub fn for_field_type(ty: &FieldType) -> WireType {
        match ty {
            FieldType::Double | FieldType::Fixed64 | FieldType::Sfixed64 => WireType::Fixed64,
            FieldType::Float | FieldType::Fixed32 | FieldType::Sfixed32 => WireType::Fixed32,
            FieldType::String | FieldType::Bytes | FieldType::Message(_) | FieldType::Unresolved(_) => {
                WireType::LengthDelimited
            }
            _ => WireType::Varint,
        }
    }
}

impl fmt::Display for WireType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WireType::Varint => "varint",
            WireType::Fixed64 => "fixed64",
            WireType::LengthDelimited => "length-delimited",
            WireType::Fixed32 => "fixed32",
        })
    }
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum WireError {
    #[error("truncated input at offset {offset}")]
    Truncated { offset: usize },
    #[error("varint at offset {offset} is longer than 10 bytes")]
    VarintTooLong { offset: usize },
    #[error("invalid wire type {code} at offset {offset}")]
    InvalidWireType { code: u8, offset: usize },
    #[error("invalid field number {number} at offset {offset}")]
    InvalidTag { number: u64, offset: usize },
    #[error("length prefix {length} at offset {offset} exceeds the {remaining} remaining bytes")]
    LengthOverflow {
        length: u64,
        offset: usize,
        remaining: usize,
    },
    #[error("field `{field}`: wire type {found} does not match declared type {expected}")]
    WireTypeMismatch {
        field: String,
        expected: String,
        found: WireType,
    },
    #[error("field `{field}`: string is not valid UTF-8")]
    InvalidUtf8 { field: String },
    #[error("message nesting exceeds {MAX_DEPTH} levels")]
    RecursionLimit,
    #[error("unknown message type `{0}`")]
    UnknownType(String),
}

// ---- primitives ---------------------------------------------------------------

pub fn encode_varint(mut v: u64, out: &mut Vec<u8>) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

pub fn varint_bytes(v: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(varint_len(v));
    encode_varint(v, &mut out);
    out
}

pub fn varint_len(v: u64) -> usize {
    let bits = 64 - (v | 1).leading_zeros() as usize;
    bits.div_ceil(7)
}

/// Decodes a varint starting at `offset`, returning the value and the
/// number of bytes consumed.
pub fn decode_varint(buf: &[u8], offset: usize) -> Result<(u64, usize), WireError> {
    let mut value = 0u64;
    for i in 0..MAX_VARINT_LEN {
        let Some(&b) = buf.get(offset + i) else {
            return Err(WireError::Truncated { offset: offset + i });
        };
        value |= u64::from(b & 0x7f) << (7 * i);
        if b & 0x80 == 0 {
            return Ok((value, i + 1));
        }
    }
    Err(WireError::VarintTooLong { offset })
}

pub fn zigzag_encode(n: i64) -> u64 {
    ((n << 1) ^ (n >> 63)) as u64
}

pub fn zigzag_decode(n: u64) -> i64 {
    ((n >> 1) as i64) ^ -((n & 1) as i64)
}

pub fn zigzag_encode32(n: i32) -> u32 {
    ((n << 1) ^ (n >> 31)) as u32
}

pub fn zigzag_decode32(n: u32) -> i32 {
    ((n >> 1) as i32) ^ -((n & 1) as i32)
}

pub fn field_key(tag: u32, wire_type: WireType) -> Vec<u8> {
    varint_bytes(key_value(tag, wire_type))
}

fn key_value(tag: u32, wire_type: WireType) -> u64 {
    (u64::from(tag) << 3) | wire_type as u64
}

// ---- unknown fields -----------------------------------------------------------

/// A field whose tag the decoding descriptor does not declare.
///
/// `payload` holds the value bytes exactly as read: the varint bytes, the
/// fixed-width bytes, or the contents of a length-delimited field (without
/// its length prefix).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownField {
    pub number: u32,
    pub wire_type: WireType,
    pub payload: Vec<u8>,
}

impl UnknownField {
    pub fn varint(number: u32, value: u64) -> Self {
        UnknownField {
            number,
            wire_type: WireType::Varint,
            payload: varint_bytes(value),
        }
    }

    fn encoded_len(&self) -> usize {
        let body = match self.wire_type {
            WireType::LengthDelimited => varint_len(self.payload.len() as u64) + self.payload.len(),
            _ => self.payload.len(),
        };
        varint_len(key_value(self.number, self.wire_type)) + body
    }

    fn encode(&self, out: &mut Vec<u8>) {
        encode_varint(key_value(self.number, self.wire_type), out);
        if self.wire_type == WireType::LengthDelimited {
            encode_varint(self.payload.len() as u64, out);
        }
        out.extend_from_slice(&self.payload);
    }
}

/// Unknown fields in the order they were read.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UnknownFieldSet {
    fields: Vec<UnknownField>,
}

impl UnknownFieldSet {
    pub fn push(&mut self, field: UnknownField) {
        self.fields.push(field);
    }
    pub fn iter(&self) -> std::slice::Iter<'_, UnknownField> {
        self.fields.iter()
    }
    pub fn len(&self) -> usize {
        self.fields.len()
    }
    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }
    pub fn clear(&mut self) {
        self.fields.clear();
    }
}

impl Extend<UnknownField> for UnknownFieldSet {
    fn extend<T: IntoIterator<Item = UnknownField>>(&mut self, iter: T) {
        self.fields.extend(iter);
    }
}

impl<'a> IntoIterator for &'a UnknownFieldSet {
    type Item = &'a UnknownField;
    type IntoIter = std::slice::Iter<'a, UnknownField>;
    fn into_iter(self) -> Self::IntoIter {
        self.fields.iter()
    }
}

// ---- encoding -----------------------------------------------------------------

/// Serializes set fields in ascending tag order, then unknown fields.
pub fn encode_message(m: &DynamicMessage) -> Vec<u8> {
    let mut out = Vec::with_capacity(byte_size(m));
    encode_into(m, &mut out);
    out
}

pub fn encode_into(m: &DynamicMessage, out: &mut Vec<u8>) {
    for (field, values) in m.set_fields() {
        if field.is_packed() {
            encode_varint(key_value(field.number(), WireType::LengthDelimited), out);
            let body: usize = values.iter().map(|v| value_len(v, field.field_type())).sum();
            encode_varint(body as u64, out);
            for v in values {
                encode_value(v, field.field_type(), out);
            }
        } else {
            let wt = WireType::for_field_type(field.field_type());
            for v in values {
                encode_varint(key_value(field.number(), wt), out);
                encode_value(v, field.field_type(), out);
            }
        }
    }
    for u in m.unknown_fields() {
        u.encode(out);
    }
}

/// Exact length of [`encode_message`] output, computed without encoding.
pub fn byte_size(m: &DynamicMessage) -> usize {
    let mut size = 0;
    for (field, values) in m.set_fields() {
        if field.is_packed() {
            let body: usize = values.iter().map(|v| value_len(v, field.field_type())).sum();
            size += varint_len(key_value(field.number(), WireType::LengthDelimited)) + varint_len(body as u64) + body;
        } else {
            let key = varint_len(key_value(field.number(), WireType::for_field_type(field.field_type())));
            size += values
                .iter()
                .map(|v| key + value_len(v, field.field_type()))
                .sum::<usize>();
        }
    }
    size + m.unknown_fields().iter().map(UnknownField::encoded_len).sum::<usize>()
}

fn value_len(v: &Value, ty: &FieldType) -> usize {
    match (v, ty) {
        (Value::Double(_), _) | (Value::Int64(_), FieldType::Sfixed64) | (Value::Uint64(_), FieldType::Fixed64) => 8,
        (Value::Float(_), _) | (Value::Int32(_), FieldType::Sfixed32) | (Value::Uint32(_), FieldType::Fixed32) => 4,
        (Value::Int32(i), FieldType::Sint32) => varint_len(u64::from(zigzag_encode32(*i))),
        (Value::Int32(i), _) => varint_len(*i as i64 as u64),
        (Value::Int64(i), FieldType::Sint64) => varint_len(zigzag_encode(*i)),
        (Value::Int64(i), _) => varint_len(*i as u64),
        (Value::Uint32(u), _) => varint_len(u64::from(*u)),
        (Value::Uint64(u), _) => varint_len(*u),
        (Value::Bool(_), _) => 1,
        (Value::Enum(n), _) => varint_len(*n as i64 as u64),
        (Value::String(s), _) => varint_len(s.len() as u64) + s.len(),
        (Value::Bytes(b), _) => varint_len(b.len() as u64) + b.len(),
        (Value::Message(m), _) => {
            let n = byte_size(m);
            varint_len(n as u64) + n
        }
    }
}

fn encode_value(v: &Value, ty: &FieldType, out: &mut Vec<u8>) {
    match (v, ty) {
        (Value::Double(d), _) => out.extend_from_slice(&d.to_bits().to_le_bytes()),
        (Value::Float(f), _) => out.extend_from_slice(&f.to_bits().to_le_bytes()),
        (Value::Int64(i), FieldType::Sfixed64) => out.extend_from_slice(&i.to_le_bytes()),
        (Value::Uint64(u), FieldType::Fixed64) => out.extend_from_slice(&u.to_le_bytes()),
        (Value::Int32(i), FieldType::Sfixed32) => out.extend_from_slice(&i.to_le_bytes()),
        (Value::Uint32(u), FieldType::Fixed32) => out.extend_from_slice(&u.to_le_bytes()),
        (Value::Int32(i), FieldType::Sint32) => encode_varint(u64::from(zigzag_encode32(*i)), out),
        (Value::Int32(i), _) => encode_varint(*i as i64 as u64, out),
        (Value::Int64(i), FieldType::Sint64) => encode_varint(zigzag_encode(*i), out),
        (Value::Int64(i), _) => encode_varint(*i as u64, out),
        (Value::Uint32(u), _) => encode_varint(u64::from(*u), out),
        (Value::Uint64(u), _) => encode_varint(*u, out),
        (Value::Bool(b), _) => out.push(u8::from(*b)),
        (Value::Enum(n), _) => encode_varint(*n as i64 as u64, out),
        (Value::String(s), _) => {
            encode_varint(s.len() as u64, out);
            out.extend_from_slice(s.as_bytes());
        }
        (Value::Bytes(b), _) => {
            encode_varint(b.len() as u64, out);
            out.extend_from_slice(b);
        }
        (Value::Message(m), _) => {
            encode_varint(byte_size(m) as u64, out);
            encode_into(m, out);
        }
    }
}

// ---- decoding -----------------------------------------------------------------

/// Parses `payload` as a message of type `descriptor`.
pub fn decode_message(
    pool: &DescriptorPool,
    descriptor: &Arc<MessageDescriptor>,
    payload: &[u8],
) -> Result<DynamicMessage, WireError> {
    let mut m = DynamicMessage::from_descriptor(pool, descriptor.clone());
    merge_bytes(&mut m, payload, 0, 0)?;
    Ok(m)
}

/// Parses `payload` as a message of the named type.
pub fn decode_named(pool: &DescriptorPool, type_name: &str, payload: &[u8]) -> Result<DynamicMessage, WireError> {
    let d = pool
        .message(type_name)
        .ok_or_else(|| WireError::UnknownType(type_name.to_string()))?;
    decode_message(pool, &d, payload)
}

/// Merges wire data into an existing message.
pub fn merge_from_bytes(m: &mut DynamicMessage, payload: &[u8]) -> Result<(), WireError> {
    merge_bytes(m, payload, 0, 0)
}

fn need(buf: &[u8], pos: usize, n: usize) -> Result<&[u8], WireError> {
    buf.get(pos..pos + n).ok_or(WireError::Truncated { offset: buf.len() })
}

/// `base` is the absolute offset of `buf` in the outermost payload, used for
/// error positions.
fn merge_bytes(m: &mut DynamicMessage, buf: &[u8], base: usize, depth: usize) -> Result<(), WireError> {
    if depth > MAX_DEPTH {
        return Err(WireError::RecursionLimit);
    }
    let mut pos = 0;
    while pos < buf.len() {
        let key_offset = pos;
        let (key, n) = decode_varint(buf, pos).map_err(|e| rebase(e, base))?;
        pos += n;
        let code = (key & 7) as u8;
        let wire_type = WireType::from_code(code).ok_or(WireError::InvalidWireType {
            code,
            offset: base + key_offset,
        })?;
        let number = key >> 3;
        if number == 0 || number > u64::from(crate::schema::MAX_TAG) {
            return Err(WireError::InvalidTag {
                number,
                offset: base + key_offset,
            });
        }
        let number = number as u32;

        let value_start = pos;
        let payload: &[u8] = match wire_type {
            WireType::Varint => {
                let (_, n) = decode_varint(buf, pos).map_err(|e| rebase(e, base))?;
                pos += n;
                &buf[value_start..pos]
            }
            WireType::Fixed64 => {
                let s = need(buf, pos, 8).map_err(|e| rebase(e, base))?;
                pos += 8;
                s
            }
            WireType::Fixed32 => {
                let s = need(buf, pos, 4).map_err(|e| rebase(e, base))?;
                pos += 4;
                s
            }
            WireType::LengthDelimited => {
                let (len, n) = decode_varint(buf, pos).map_err(|e| rebase(e, base))?;
                pos += n;
                let remaining = buf.len() - pos;
                if len > remaining as u64 {
                    return Err(WireError::LengthOverflow {
                        length: len,
                        offset: base + value_start,
                        remaining,
                    });
                }
                let s = &buf[pos..pos + len as usize];
                pos += len as usize;
                s
            }
        };

        let field = m.descriptor().field_by_number(number).cloned();
        match field {
            None => m.unknown_fields_mut().push(UnknownField {
                number,
                wire_type,
                payload: payload.to_vec(),
            }),
            Some(field) => {
                let payload_base = base + pos - payload.len();
                decode_field(m, &field, wire_type, payload, payload_base, depth)?;
            }
        }
    }
    Ok(())
}

fn rebase(e: WireError, base: usize) -> WireError {
    match e {
        WireError::Truncated { offset } => WireError::Truncated { offset: offset + base },
        WireError::VarintTooLong { offset } => WireError::VarintTooLong { offset: offset + base },
        other => other,
    }
}

fn decode_field(
    m: &mut DynamicMessage,
    field: &FieldDescriptor,
    wire_type: WireType,
    payload: &[u8],
    base: usize,
    depth: usize,
) -> Result<(), WireError> {
    let ty = field.field_type();
    let expected = WireType::for_field_type(ty);
    if wire_type == WireType::LengthDelimited && expected != WireType::LengthDelimited {
        if !field.is_repeated() {
            return Err(mismatch(field, wire_type));
        }
        let mut pos = 0;
        while pos < payload.len() {
            let (v, n) = read_scalar(payload, pos, expected, field).map_err(|e| rebase(e, base))?;
            pos += n;
            store_scalar(m, field, v, &payload[pos - n..pos]);
        }
        return Ok(());
    }
    if wire_type != expected {
        return Err(mismatch(field, wire_type));
    }
    match ty {
        FieldType::String => {
            let s = std::str::from_utf8(payload).map_err(|_| WireError::InvalidUtf8 {
                field: field.name().to_string(),
            })?;
            store(m, field, Value::String(s.to_string()));
        }
        FieldType::Bytes => store(m, field, Value::Bytes(payload.to_vec())),
        FieldType::Message(name) | FieldType::Unresolved(name) => {
            let pool = m.pool().clone();
            let d = pool.message(name).ok_or_else(|| WireError::UnknownType(name.clone()))?;
            if field.is_repeated() {
                let mut child = DynamicMessage::from_descriptor(&pool, d);
                merge_bytes(&mut child, payload, base, depth + 1)?;
                m.raw_push(field.number(), Value::Message(Box::new(child)));
            } else {
                match m.raw_slot(field.number()).and_then(|s| s[0].as_message_mut()) {
                    Some(existing) => merge_bytes(existing, payload, base, depth + 1)?,
                    None => {
                        let mut child = DynamicMessage::from_descriptor(&pool, d);
                        merge_bytes(&mut child, payload, base, depth + 1)?;
                        m.raw_set(field.number(), Value::Message(Box::new(child)));
                    }
                }
            }
        }
        _ => {
            let (v, _) = read_scalar(payload, 0, expected, field).map_err(|e| rebase(e, base))?;
            store_scalar(m, field, v, payload);
        }
    }
    Ok(())
}

fn mismatch(field: &FieldDescriptor, found: WireType) -> WireError {
    WireError::WireTypeMismatch {
        field: field.name().to_string(),
        expected: field.field_type().kind_name().to_string(),
        found,
    }
}

fn store(m: &mut DynamicMessage, field: &FieldDescriptor, v: Value) {
    if field.is_repeated() {
        m.raw_push(field.number(), v);
    } else {
        m.raw_set(field.number(), v);
    }
}

/// Stores a decoded scalar; enum numbers the enum does not declare become
/// unknown varint fields.
fn store_scalar(m: &mut DynamicMessage, field: &FieldDescriptor, v: Value, raw: &[u8]) {
    if let (Value::Enum(n), FieldType::Enum(e)) = (&v, field.field_type()) {
        let known = m.pool().enum_type(e).is_some_and(|e| e.value_by_number(*n).is_some());
        if !known {
            m.unknown_fields_mut().push(UnknownField {
                number: field.number(),
                wire_type: WireType::Varint,
                payload: raw.to_vec(),
            });
            return;
        }
    }
    store(m, field, v);
}

fn read_scalar(buf: &[u8], pos: usize, wt: WireType, field: &FieldDescriptor) -> Result<(Value, usize), WireError> {
    let ty = field.field_type();
    match wt {
        WireType::Fixed64 => {
            let b: [u8; 8] = need(buf, pos, 8)?.try_into().expect("8 bytes");
            let v = match ty {
                FieldType::Double => Value::Double(f64::from_bits(u64::from_le_bytes(b))),
                FieldType::Sfixed64 => Value::Int64(i64::from_le_bytes(b)),
                _ => Value::Uint64(u64::from_le_bytes(b)),
            };
            Ok((v, 8))
        }
        WireType::Fixed32 => {
            let b: [u8; 4] = need(buf, pos, 4)?.try_into().expect("4 bytes");
            let v = match ty {
                FieldType::Float => Value::Float(f32::from_bits(u32::from_le_bytes(b))),
                FieldType::Sfixed32 => Value::Int32(i32::from_le_bytes(b)),
                _ => Value::Uint32(u32::from_le_bytes(b)),
            };
            Ok((v, 4))
        }
        WireType::Varint => {
            let (raw, n) = decode_varint(buf, pos)?;
            let v = match ty {
                FieldType::Int32 => Value::Int32(raw as i32),
                FieldType::Sint32 => Value::Int32(zigzag_decode32(raw as u32)),
                FieldType::Int64 => Value::Int64(raw as i64),
                FieldType::Sint64 => Value::Int64(zigzag_decode(raw)),
                FieldType::Uint32 => Value::Uint32(raw as u32),
                FieldType::Uint64 => Value::Uint64(raw),
                FieldType::Bool => Value::Bool(raw != 0),
                FieldType::Enum(_) => Value::Enum(raw as i32),
                _ => unreachable!("varint wire type only for integral fields"),
            };
            Ok((v, n))
        }
        WireType::LengthDelimited => unreachable!("scalar elements are never length-delimited"),
    }
}

impl DynamicMessage {
    pub fn encode(&self) -> Vec<u8> {
        encode_message(self)
    }

    pub fn byte_size(&self) -> usize {
        byte_size(self)
    }

    pub fn decode(pool: &DescriptorPool, type_name: &str, payload: &[u8]) -> Result<Self, WireError> {
        decode_named(pool, type_name, payload)
    }
}

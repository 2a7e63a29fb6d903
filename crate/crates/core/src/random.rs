//! Seeded generators for messages and structured values, used by property
//! tests and benchmarks.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::bridge::{Complex, NA_INTEGER};
use crate::message::DynamicMessage;
use crate::rexp::{RData, RValue};
use crate::schema::{DescriptorPool, FieldDescriptor, FieldType, MessageDescriptor};
use crate::value::Value;

/// Shape limits for generated messages.
#[derive(Debug, Clone, Copy)]
pub struct MessageGen {
    pub max_depth: usize,
    pub max_repeated: usize,
    /// Probability an optional field is set.
    pub fill: f64,
    /// Always set required fields, so messages are initialized.
    pub initialized: bool,
    /// Emit NaNs with arbitrary payloads and signs; otherwise only the
    /// canonical NaN, which text round trips preserve.
    pub nan_payloads: bool,
}

impl Default for MessageGen {
    fn default() -> Self {
        MessageGen {
            max_depth: 4,
            max_repeated: 6,
            fill: 0.6,
            initialized: true,
            nan_payloads: true,
        }
    }
}

impl MessageGen {
    pub fn message<R: Rng + ?Sized>(&self, rng: &mut R, pool: &DescriptorPool, d: &std::sync::Arc<MessageDescriptor>) -> DynamicMessage {
        self.message_at(rng, pool, d, 0)
    }

    fn message_at<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        pool: &DescriptorPool,
        d: &std::sync::Arc<MessageDescriptor>,
        depth: usize,
    ) -> DynamicMessage {
        let mut m = DynamicMessage::from_descriptor(pool, d.clone());
        for f in d.fields() {
            let nested = f.is_message();
            let too_deep = nested && depth >= self.max_depth;
            if f.is_repeated() {
                if too_deep {
                    continue;
                }
                let n = rng.random_range(0..=self.max_repeated);
                let vals: Vec<Value> = (0..n).map(|_| self.value(rng, pool, f, depth)).collect();
                m.set_values(f.name(), vals).expect("generated value matches field");
            } else {
                let set = (f.is_required() && self.initialized) || rng.random_bool(self.fill);
                if set && !(too_deep && !(f.is_required() && self.initialized)) {
                    let v = self.value(rng, pool, f, depth);
                    m.set_value(f.name(), v).expect("generated value matches field");
                }
            }
        }
        m
    }

    fn value<R: Rng + ?Sized>(&self, rng: &mut R, pool: &DescriptorPool, f: &FieldDescriptor, depth: usize) -> Value {
        match f.field_type() {
            FieldType::Double => Value::Double(self.f64(rng)),
            FieldType::Float => Value::Float(self.f32(rng)),
            FieldType::Int32 | FieldType::Sint32 | FieldType::Sfixed32 => Value::Int32(edgy_i64(rng) as i32),
            FieldType::Int64 | FieldType::Sint64 | FieldType::Sfixed64 => Value::Int64(edgy_i64(rng)),
            FieldType::Uint32 | FieldType::Fixed32 => Value::Uint32(edgy_i64(rng) as u32),
            FieldType::Uint64 | FieldType::Fixed64 => Value::Uint64(edgy_i64(rng) as u64),
            FieldType::Bool => Value::Bool(rng.random()),
            FieldType::String => Value::String(random_string(rng, 24)),
            FieldType::Bytes => {
                let n = rng.random_range(0..24);
                Value::Bytes((0..n).map(|_| rng.random()).collect())
            }
            FieldType::Enum(e) => {
                let e = pool.enum_type(e).expect("resolved enum");
                Value::Enum(e.values().choose(rng).expect("enums have values").number())
            }
            FieldType::Message(name) | FieldType::Unresolved(name) => {
                let d = pool.message(name).expect("resolved message");
                Value::from(self.message_at(rng, pool, &d, depth + 1))
            }
        }
    }

    fn f64<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let v = edgy_f64(rng);
        if v.is_nan() && !self.nan_payloads {
            f64::NAN
        } else {
            v
        }
    }

    fn f32<R: Rng + ?Sized>(&self, rng: &mut R) -> f32 {
        let v = match rng.random_range(0..6) {
            0 => f32::from_bits(rng.random()),
            1 => [0.0, -0.0, 1.0, f32::MAX, f32::MIN_POSITIVE, f32::INFINITY][rng.random_range(0..6)],
            _ => rng.random_range(-1e6f32..1e6),
        };
        if v.is_nan() && !self.nan_payloads {
            f32::NAN
        } else {
            v
        }
    }
}

/// Integers biased towards boundaries and small magnitudes.
pub fn edgy_i64<R: Rng + ?Sized>(rng: &mut R) -> i64 {
    match rng.random_range(0..8) {
        0 => *[0, 1, -1, i64::MIN, i64::MAX, i32::MIN as i64, i32::MAX as i64, u32::MAX as i64, 1 << 53, (1 << 53) + 1]
            .choose(rng)
            .unwrap(),
        1 | 2 => rng.random_range(-300..300),
        3 => rng.random::<i32>() as i64,
        _ => rng.random(),
    }
}

/// Reals covering special values, arbitrary bit patterns and ordinary numbers.
pub fn edgy_f64<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    match rng.random_range(0..8) {
        0 => f64::from_bits(rng.random()),
        1 => *[0.0, -0.0, 1.0, -1.0, f64::MAX, f64::MIN_POSITIVE, f64::INFINITY, f64::NEG_INFINITY, f64::NAN, 5e-324]
            .choose(rng)
            .unwrap(),
        2 => rng.random_range(-1000..1000) as f64,
        _ => rng.random_range(-1e9..1e9),
    }
}

pub fn random_string<R: Rng + ?Sized>(rng: &mut R, max_len: usize) -> String {
    const EXTRA: &[char] = &['\n', '\t', '"', '\\', '\'', 'é', 'ß', '中', '😀', '\u{7f}', '\u{1}'];
    let n = rng.random_range(0..=max_len);
    (0..n)
        .map(|_| {
            if rng.random_bool(0.85) {
                rng.random_range(' '..='~')
            } else {
                *EXTRA.choose(rng).unwrap()
            }
        })
        .collect()
}

/// Shape limits for generated structured values.
#[derive(Debug, Clone, Copy)]
pub struct ValueGen {
    pub max_depth: usize,
    pub max_len: usize,
    /// Probability that a generated node is unsupported.
    pub unsupported_rate: f64,
    /// Probability of attaching attributes to a node.
    pub attr_rate: f64,
}

impl Default for ValueGen {
    fn default() -> Self {
        ValueGen {
            max_depth: 8,
            max_len: 1000,
            unsupported_rate: 0.0,
            attr_rate: 0.3,
        }
    }
}

impl ValueGen {
    pub fn value<R: Rng + ?Sized>(&self, rng: &mut R) -> RValue {
        self.node(rng, 0)
    }

    fn len<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let cap = match rng.random_range(0..20) {
            0 => self.max_len,
            1..=4 => 100.min(self.max_len),
            _ => 10.min(self.max_len),
        };
        rng.random_range(0..=cap)
    }

    fn node<R: Rng + ?Sized>(&self, rng: &mut R, depth: usize) -> RValue {
        if self.unsupported_rate > 0.0 && rng.random_bool(self.unsupported_rate) {
            let kind = *["closure", "environment", "formula", "language", "externalptr"].choose(rng).unwrap();
            return RValue::unsupported(kind);
        }
        let list_ok = depth + 1 < self.max_depth;
        let choice = rng.random_range(0..if list_ok { 10 } else { 8 });
        let data = match choice {
            0 => RData::Null,
            1 => RData::Logical(
                (0..self.len(rng))
                    .map(|_| match rng.random_range(0..3) {
                        0 => None,
                        1 => Some(true),
                        _ => Some(false),
                    })
                    .collect(),
            ),
            2 => RData::Int(
                (0..self.len(rng))
                    .map(|_| if rng.random_bool(0.1) { NA_INTEGER } else { edgy_i64(rng) as i32 })
                    .collect(),
            ),
            3 => RData::Real((0..self.len(rng)).map(|_| edgy_f64(rng)).collect()),
            4 => RData::Complex(
                (0..self.len(rng))
                    .map(|_| Complex::new(edgy_f64(rng), edgy_f64(rng)))
                    .collect(),
            ),
            5 => RData::String(
                (0..self.len(rng))
                    .map(|_| if rng.random_bool(0.1) { None } else { Some(random_string(rng, 12)) })
                    .collect(),
            ),
            6 => {
                let mut raw = vec![0u8; self.len(rng)];
                rng.fill_bytes(&mut raw);
                RData::Raw(raw)
            }
            7 => RData::Real(Vec::new()),
            _ => {
                let n = rng.random_range(0..=4);
                RData::List((0..n).map(|_| self.node(rng, depth + 1)).collect())
            }
        };
        let mut v = RValue::new(data);
        if depth + 1 < self.max_depth && rng.random_bool(self.attr_rate) {
            let n = rng.random_range(1..=3);
            for i in 0..n {
                let name = ["names", "class", "dim", "row.names", "levels", "comment"][i % 6];
                let value = self.node(rng, depth + 1);
                v.attributes.push((format!("{name}{}", if i >= 6 { i.to_string() } else { String::new() }), value));
            }
        }
        v
    }
}

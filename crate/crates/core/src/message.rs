//! Dynamic messages: tag-indexed field storage bound to a message descriptor.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::bridge::{host_to_wire, wire_to_host, CoercionError, CoercionOptions, HostValue};
use crate::schema::{DefaultValue, DescriptorPool, FieldDescriptor, FieldType, MessageDescriptor};
use crate::value::Value;
use crate::wire::UnknownFieldSet;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum MessageError {
    #[error("unknown message type `{0}`")]
    UnknownType(String),
    #[error("message `{message}` has no field {field}")]
    UnknownField { message: String, field: String },
    #[error("field `{0}` is not repeated")]
    NotRepeated(String),
    #[error("field `{field}`: index {index} out of range 1..={len}")]
    IndexOutOfRange { field: String, index: usize, len: usize },
    #[error("field `{field}`: expected {expected}, got {found}")]
    TypeMismatch {
        field: String,
        expected: String,
        found: String,
    },
    #[error("field `{field}`: expected {expected} value(s), got {found}")]
    LengthMismatch {
        field: String,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Coercion(#[from] CoercionError),
}

/// Addresses a field by exact name or by tag number.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selector<'a> {
    Name(&'a str),
    Tag(u32),
}

impl<'a> From<&'a str> for Selector<'a> {
    fn from(s: &'a str) -> Self {
        Selector::Name(s)
    }
}
impl<'a> From<&'a String> for Selector<'a> {
    fn from(s: &'a String) -> Self {
        Selector::Name(s)
    }
}
impl From<u32> for Selector<'_> {
    fn from(t: u32) -> Self {
        Selector::Tag(t)
    }
}

impl fmt::Display for Selector<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selector::Name(n) => write!(f, "`{n}`"),
            Selector::Tag(t) => write!(f, "with tag {t}"),
        }
    }
}

/// A mutable message of any type loaded in a [`DescriptorPool`].
///
/// Non-repeated fields hold exactly one stored value when set; repeated fields
/// hold their elements in order, and an empty repeated field is unset.
#[derive(Clone)]
pub struct DynamicMessage {
    pool: DescriptorPool,
    descriptor: Arc<MessageDescriptor>,
    fields: BTreeMap<u32, Vec<Value>>,
    unknown: UnknownFieldSet,
}

impl DynamicMessage {
    /// Empty message of the named type.
    pub fn new(pool: &DescriptorPool, type_name: &str) -> Result<Self, MessageError> {
        let descriptor = pool
            .message(type_name)
            .ok_or_else(|| MessageError::UnknownType(type_name.to_string()))?;
        Ok(Self::from_descriptor(pool, descriptor))
    }

    pub fn from_descriptor(pool: &DescriptorPool, descriptor: Arc<MessageDescriptor>) -> Self {
        DynamicMessage {
            pool: pool.clone(),
            descriptor,
            fields: BTreeMap::new(),
            unknown: UnknownFieldSet::default(),
        }
    }

    /// Message of the named type with the given fields set, in order.
    pub fn with_fields<'a, I>(pool: &DescriptorPool, type_name: &str, initial: I) -> Result<Self, MessageError>
    where
        I: IntoIterator<Item = (&'a str, HostValue)>,
    {
        let mut m = Self::new(pool, type_name)?;
        for (name, value) in initial {
            m.set(name, value)?;
        }
        Ok(m)
    }

    pub fn descriptor(&self) -> &Arc<MessageDescriptor> {
        &self.descriptor
    }

    pub fn pool(&self) -> &DescriptorPool {
        &self.pool
    }

    pub fn type_name(&self) -> &str {
        self.descriptor.full_name()
    }

    pub fn unknown_fields(&self) -> &UnknownFieldSet {
        &self.unknown
    }

    pub fn unknown_fields_mut(&mut self) -> &mut UnknownFieldSet {
        &mut self.unknown
    }

    /// Resolves a selector against the descriptor. Names match exactly.
    pub fn field<'s>(&self, selector: impl Into<Selector<'s>>) -> Result<&FieldDescriptor, MessageError> {
        let selector = selector.into();
        let found = match selector {
            Selector::Name(n) => self.descriptor.field_by_name(n),
            Selector::Tag(t) => self.descriptor.field_by_number(t),
        };
        found.ok_or_else(|| MessageError::UnknownField {
            message: self.descriptor.full_name().to_string(),
            field: selector.to_string(),
        })
    }

    fn field_cloned<'s>(&self, selector: impl Into<Selector<'s>>) -> Result<FieldDescriptor, MessageError> {
        self.field(selector).cloned()
    }

    /// Number of fields currently set.
    pub fn set_count(&self) -> usize {
        self.fields.len()
    }

    /// Set fields in ascending tag order with their stored values.
    pub fn set_fields(&self) -> impl Iterator<Item = (&FieldDescriptor, &[Value])> {
        self.fields.iter().filter_map(|(tag, values)| {
            self.descriptor
                .field_by_number(*tag)
                .map(|f| (f, values.as_slice()))
        })
    }

    // ---- typed access -------------------------------------------------

    /// Stored values of a field; empty when unset.
    pub fn values<'s>(&self, selector: impl Into<Selector<'s>>) -> Result<&[Value], MessageError> {
        let tag = self.field(selector)?.number();
        Ok(self.fields.get(&tag).map(Vec::as_slice).unwrap_or(&[]))
    }

    /// Value of a non-repeated field, falling back to its default when unset.
    pub fn get_value<'s>(&self, selector: impl Into<Selector<'s>>) -> Result<Value, MessageError> {
        let field = self.field(selector)?;
        if field.is_repeated() {
            return Err(MessageError::TypeMismatch {
                field: field.name().to_string(),
                expected: "a non-repeated field".into(),
                found: "repeated field".into(),
            });
        }
        Ok(match self.fields.get(&field.number()) {
            Some(v) => v[0].clone(),
            None => self.default_value(field),
        })
    }

    /// Replaces a field's stored values after type checking each element.
    pub fn set_values<'s>(&mut self, selector: impl Into<Selector<'s>>, values: Vec<Value>) -> Result<(), MessageError> {
        let field = self.field_cloned(selector)?;
        if !field.is_repeated() && values.len() != 1 {
            return Err(MessageError::LengthMismatch {
                field: field.name().to_string(),
                expected: 1,
                found: values.len(),
            });
        }
        for v in &values {
            self.check_value(&field, v)?;
        }
        if values.is_empty() {
            self.fields.remove(&field.number());
        } else {
            self.fields.insert(field.number(), values);
        }
        Ok(())
    }

    pub fn set_value<'s>(&mut self, selector: impl Into<Selector<'s>>, value: Value) -> Result<(), MessageError> {
        self.set_values(selector, vec![value])
    }

    /// Appends to a repeated field.
    pub fn push_value<'s>(&mut self, selector: impl Into<Selector<'s>>, value: Value) -> Result<(), MessageError> {
        let field = self.field_cloned(selector)?;
        if !field.is_repeated() {
            return Err(MessageError::NotRepeated(field.name().to_string()));
        }
        self.check_value(&field, &value)?;
        self.fields.entry(field.number()).or_default().push(value);
        Ok(())
    }

    /// Mutable access to a singular embedded message, creating it when unset.
    pub fn message_mut<'s>(&mut self, selector: impl Into<Selector<'s>>) -> Result<&mut DynamicMessage, MessageError> {
        let field = self.field_cloned(selector)?;
        if field.is_repeated() || !field.is_message() {
            return Err(MessageError::TypeMismatch {
                field: field.name().to_string(),
                expected: "a singular message field".into(),
                found: format!("{} {}", field.label(), field.field_type().kind_name()),
            });
        }
        let default = self.default_value(&field);
        let slot = self.fields.entry(field.number()).or_insert_with(|| vec![default]);
        Ok(slot[0].as_message_mut().expect("message field holds a message"))
    }

    /// Stores already-validated values, used by decoders.
    pub(crate) fn raw_push(&mut self, tag: u32, value: Value) {
        self.fields.entry(tag).or_default().push(value);
    }

    pub(crate) fn raw_set(&mut self, tag: u32, value: Value) {
        self.fields.insert(tag, vec![value]);
    }

    pub(crate) fn raw_slot(&mut self, tag: u32) -> Option<&mut Vec<Value>> {
        self.fields.get_mut(&tag)
    }

    fn check_value(&self, field: &FieldDescriptor, v: &Value) -> Result<(), MessageError> {
        let mismatch = |found: String| MessageError::TypeMismatch {
            field: field.name().to_string(),
            expected: match field.field_type() {
                FieldType::Message(n) | FieldType::Enum(n) => n.clone(),
                t => t.kind_name().to_string(),
            },
            found,
        };
        if !v.matches(field.field_type()) {
            let found = match v {
                Value::Message(m) => m.type_name().to_string(),
                other => other.kind_name().to_string(),
            };
            return Err(mismatch(found));
        }
        if let (Value::Enum(n), FieldType::Enum(e)) = (v, field.field_type()) {
            let declared = self.pool.enum_type(e).is_some_and(|e| e.value_by_number(*n).is_some());
            if !declared {
                return Err(mismatch(format!("undeclared enum number {n}")));
            }
        }
        Ok(())
    }

    /// Explicit `[default]`, else the type's zero value, first enum constant
    /// or empty message.
    pub fn default_value(&self, field: &FieldDescriptor) -> Value {
        default_for(&self.pool, field)
    }

    // ---- host-value access ------------------------------------------------

    pub fn get<'s>(&self, selector: impl Into<Selector<'s>>) -> Result<HostValue, MessageError> {
        self.get_with(selector, &CoercionOptions::default())
    }

    /// Host view of a field: all elements for repeated fields, the stored
    /// value or default for the others.
    pub fn get_with<'s>(&self, selector: impl Into<Selector<'s>>, opts: &CoercionOptions) -> Result<HostValue, MessageError> {
        let field = self.field(selector)?;
        Ok(self.host_view(field, opts))
    }

    fn host_view(&self, field: &FieldDescriptor, opts: &CoercionOptions) -> HostValue {
        match self.fields.get(&field.number()) {
            Some(values) => wire_to_host(field, values, opts),
            None if field.is_repeated() => wire_to_host(field, &[], opts),
            None => wire_to_host(field, &[self.default_value(field)], opts),
        }
    }

    /// Sets a field from a host value. Repeated fields take every element
    /// (an empty value clears them); others need exactly one element.
    pub fn set<'s>(&mut self, selector: impl Into<Selector<'s>>, value: impl Into<HostValue>) -> Result<(), MessageError> {
        let field = self.field_cloned(selector)?;
        let values = self.coerce(&field, &value.into())?;
        self.store(&field, values);
        Ok(())
    }

    fn coerce(&self, field: &FieldDescriptor, value: &HostValue) -> Result<Vec<Value>, MessageError> {
        let values = host_to_wire(&self.pool, field, value)?;
        if !field.is_repeated() && values.len() != 1 {
            return Err(MessageError::LengthMismatch {
                field: field.name().to_string(),
                expected: 1,
                found: values.len(),
            });
        }
        Ok(values)
    }

    fn store(&mut self, field: &FieldDescriptor, values: Vec<Value>) {
        if values.is_empty() {
            self.fields.remove(&field.number());
        } else {
            self.fields.insert(field.number(), values);
        }
    }

    /// Appends host elements to a repeated field.
    pub fn add<'s>(&mut self, selector: impl Into<Selector<'s>>, value: impl Into<HostValue>) -> Result<(), MessageError> {
        let field = self.field_cloned(selector)?;
        if !field.is_repeated() {
            return Err(MessageError::NotRepeated(field.name().to_string()));
        }
        let values = host_to_wire(&self.pool, &field, &value.into())?;
        if !values.is_empty() {
            self.fields.entry(field.number()).or_default().extend(values);
        }
        Ok(())
    }

    /// Elements at 1-based `indices`, in the order given.
    pub fn fetch<'s>(&self, selector: impl Into<Selector<'s>>, indices: &[usize]) -> Result<HostValue, MessageError> {
        self.fetch_with(selector, indices, &CoercionOptions::default())
    }

    pub fn fetch_with<'s>(
        &self,
        selector: impl Into<Selector<'s>>,
        indices: &[usize],
        opts: &CoercionOptions,
    ) -> Result<HostValue, MessageError> {
        let field = self.field(selector)?;
        let stored = self.fields.get(&field.number()).map(Vec::as_slice).unwrap_or(&[]);
        let zero_based = check_indices(field, indices, stored.len())?;
        let picked: Vec<Value> = zero_based.iter().map(|&i| stored[i].clone()).collect();
        Ok(wire_to_host(field, &picked, opts))
    }

    /// Overwrites the elements at 1-based `indices` with the elements of `value`.
    pub fn set_at<'s>(
        &mut self,
        selector: impl Into<Selector<'s>>,
        indices: &[usize],
        value: impl Into<HostValue>,
    ) -> Result<(), MessageError> {
        let field = self.field_cloned(selector)?;
        let len = self.field_len(&field);
        let zero_based = check_indices(&field, indices, len)?;
        let values = host_to_wire(&self.pool, &field, &value.into())?;
        if values.len() != zero_based.len() {
            return Err(MessageError::LengthMismatch {
                field: field.name().to_string(),
                expected: zero_based.len(),
                found: values.len(),
            });
        }
        let slot = self.fields.get_mut(&field.number()).expect("indices checked against a set field");
        for (i, v) in zero_based.into_iter().zip(values) {
            slot[i] = v;
        }
        Ok(())
    }

    /// Swaps element `left[k]` with `right[k]` for each k (1-based).
    pub fn swap<'s>(&mut self, selector: impl Into<Selector<'s>>, left: &[usize], right: &[usize]) -> Result<(), MessageError> {
        let field = self.field_cloned(selector)?;
        if !field.is_repeated() {
            return Err(MessageError::NotRepeated(field.name().to_string()));
        }
        if left.len() != right.len() {
            return Err(MessageError::LengthMismatch {
                field: field.name().to_string(),
                expected: left.len(),
                found: right.len(),
            });
        }
        let len = self.field_len(&field);
        let l = check_indices(&field, left, len)?;
        let r = check_indices(&field, right, len)?;
        if let Some(slot) = self.fields.get_mut(&field.number()) {
            for (a, b) in l.into_iter().zip(r) {
                slot.swap(a, b);
            }
        }
        Ok(())
    }

    /// Element count; 1 or 0 for non-repeated fields.
    pub fn field_size<'s>(&self, selector: impl Into<Selector<'s>>) -> Result<usize, MessageError> {
        let field = self.field(selector)?;
        Ok(self.field_len(field))
    }

    fn field_len(&self, field: &FieldDescriptor) -> usize {
        self.fields.get(&field.number()).map_or(0, Vec::len)
    }

    pub fn has<'s>(&self, selector: impl Into<Selector<'s>>) -> Result<bool, MessageError> {
        let field = self.field(selector)?;
        Ok(self.fields.contains_key(&field.number()))
    }

    pub fn clear<'s>(&mut self, selector: impl Into<Selector<'s>>) -> Result<(), MessageError> {
        let tag = self.field(selector)?.number();
        self.fields.remove(&tag);
        Ok(())
    }

    /// Unsets every field and drops unknown fields.
    pub fn clear_all(&mut self) {
        self.fields.clear();
        self.unknown = UnknownFieldSet::default();
    }

    /// Whether every required field is set, recursively through set
    /// embedded messages.
    pub fn is_initialized(&self) -> bool {
        self.missing_required().is_empty()
    }

    /// Dotted paths of unset required fields, e.g. `phone[1].number`.
    pub fn missing_required(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_missing("", &mut out);
        out
    }

    fn collect_missing(&self, prefix: &str, out: &mut Vec<String>) {
        for f in self.descriptor.fields() {
            let path = format!("{prefix}{}", f.name());
            match self.fields.get(&f.number()) {
                None if f.is_required() => out.push(path),
                None => {}
                Some(values) if f.is_message() => {
                    for (i, v) in values.iter().enumerate() {
                        if let Some(m) = v.as_message() {
                            let p = if f.is_repeated() {
                                format!("{path}[{}].", i + 1)
                            } else {
                                format!("{path}.")
                            };
                            m.collect_missing(&p, out);
                        }
                    }
                }
                Some(_) => {}
            }
        }
    }

    /// Sets several fields at once; nothing changes unless every pair is valid.
    pub fn update<'a, I>(&mut self, pairs: I) -> Result<(), MessageError>
    where
        I: IntoIterator<Item = (&'a str, HostValue)>,
    {
        let mut staged = Vec::new();
        for (name, value) in pairs {
            let field = self.field_cloned(name)?;
            let values = self.coerce(&field, &value)?;
            staged.push((field, values));
        }
        for (field, values) in staged {
            self.store(&field, values);
        }
        Ok(())
    }

    /// One `(name, value)` entry per declared field, in declaration order,
    /// using the same values `get` would return.
    pub fn to_named_list(&self, opts: &CoercionOptions) -> Vec<(String, HostValue)> {
        self.descriptor
            .fields()
            .iter()
            .map(|f| (f.name().to_string(), self.host_view(f, opts)))
            .collect()
    }

    /// Merges `other` into `self`: singular scalars are overwritten, singular
    /// messages merged recursively, repeated fields appended, unknown fields
    /// appended.
    pub fn merge_from(&mut self, other: &DynamicMessage) {
        for (tag, values) in &other.fields {
            let repeated = self.descriptor.field_by_number(*tag).is_some_and(|f| f.is_repeated());
            match self.fields.get_mut(tag) {
                Some(existing) if repeated => existing.extend(values.iter().cloned()),
                Some(existing) => match (&mut existing[0], &values[0]) {
                    (Value::Message(a), Value::Message(b)) => a.merge_from(b),
                    (slot, v) => *slot = v.clone(),
                },
                None => {
                    self.fields.insert(*tag, values.clone());
                }
            }
        }
        self.unknown.extend(other.unknown.iter().cloned());
    }
}

pub(crate) fn default_for(pool: &DescriptorPool, field: &FieldDescriptor) -> Value {
    let ty = field.field_type();
    if let Some(d) = field.default_value() {
        let int = |d: &DefaultValue| -> i128 {
            match d {
                DefaultValue::Int(i) => i128::from(*i),
                DefaultValue::UInt(u) => i128::from(*u),
                DefaultValue::Float(f) => *f as i128,
                _ => 0,
            }
        };
        let float = |d: &DefaultValue| -> f64 {
            match d {
                DefaultValue::Float(f) => *f,
                DefaultValue::Int(i) => *i as f64,
                DefaultValue::UInt(u) => *u as f64,
                _ => 0.0,
            }
        };
        match (ty, d) {
            (FieldType::Double, d) => return Value::Double(float(d)),
            (FieldType::Float, d) => return Value::Float(float(d) as f32),
            (FieldType::Int32 | FieldType::Sint32 | FieldType::Sfixed32, d) => return Value::Int32(int(d) as i32),
            (FieldType::Int64 | FieldType::Sint64 | FieldType::Sfixed64, d) => return Value::Int64(int(d) as i64),
            (FieldType::Uint32 | FieldType::Fixed32, d) => return Value::Uint32(int(d) as u32),
            (FieldType::Uint64 | FieldType::Fixed64, d) => return Value::Uint64(int(d) as u64),
            (FieldType::Bool, DefaultValue::Bool(b)) => return Value::Bool(*b),
            (FieldType::String, DefaultValue::String(s)) => return Value::String(s.clone()),
            (FieldType::Bytes, DefaultValue::Bytes(b)) => return Value::Bytes(b.clone()),
            (FieldType::Bytes, DefaultValue::String(s)) => return Value::Bytes(s.as_bytes().to_vec()),
            (FieldType::Enum(e), DefaultValue::Enum(name)) => {
                if let Some(c) = pool.enum_type(e).and_then(|e| e.value_by_name(name).cloned()) {
                    return Value::Enum(c.number());
                }
            }
            _ => {}
        }
    }
    match ty {
        FieldType::Double => Value::Double(0.0),
        FieldType::Float => Value::Float(0.0),
        FieldType::Int32 | FieldType::Sint32 | FieldType::Sfixed32 => Value::Int32(0),
        FieldType::Int64 | FieldType::Sint64 | FieldType::Sfixed64 => Value::Int64(0),
        FieldType::Uint32 | FieldType::Fixed32 => Value::Uint32(0),
        FieldType::Uint64 | FieldType::Fixed64 => Value::Uint64(0),
        FieldType::Bool => Value::Bool(false),
        FieldType::String => Value::String(String::new()),
        FieldType::Bytes => Value::Bytes(Vec::new()),
        FieldType::Enum(e) => Value::Enum(
            pool.enum_type(e)
                .and_then(|e| e.values().first().map(|v| v.number()))
                .unwrap_or(0),
        ),
        FieldType::Message(name) | FieldType::Unresolved(name) => {
            let d = pool
                .message(name)
                .expect("field types in a loaded pool resolve");
            Value::Message(Box::new(DynamicMessage::from_descriptor(pool, d)))
        }
    }
}

fn check_indices(field: &FieldDescriptor, indices: &[usize], len: usize) -> Result<Vec<usize>, MessageError> {
    indices
        .iter()
        .map(|&i| {
            if i >= 1 && i <= len {
                Ok(i - 1)
            } else {
                Err(MessageError::IndexOutOfRange {
                    field: field.name().to_string(),
                    index: i,
                    len,
                })
            }
        })
        .collect()
}

impl PartialEq for DynamicMessage {
    fn eq(&self, other: &Self) -> bool {
        self.descriptor.full_name() == other.descriptor.full_name()
            && self.fields == other.fields
            && self.unknown == other.unknown
    }
}

impl fmt::Debug for DynamicMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct(self.descriptor.full_name());
        for (field, values) in self.set_fields() {
            if field.is_repeated() {
                s.field(field.name(), &values);
            } else {
                s.field(field.name(), &values[0]);
            }
        }
        if !self.unknown.is_empty() {
            s.field("<unknown>", &self.unknown);
        }
        s.finish()
    }
}

impl fmt::Display for DynamicMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::text::summary_line(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundled;
    use crate::bridge::HostValue;
    use proptest::prelude::*;

    fn person() -> DynamicMessage {
        DynamicMessage::new(bundled::pool(), "tutorial.Person").unwrap()
    }

    fn phone(number: &str) -> DynamicMessage {
        DynamicMessage::with_fields(bundled::pool(), "tutorial.Person.PhoneNumber", [("number", number.into())]).unwrap()
    }

    #[test]
    fn new_message_with_fields() {
        let p = DynamicMessage::with_fields(
            bundled::pool(),
            "tutorial.Person",
            [("name", "Murray".into()), ("id", 1.into())],
        )
        .unwrap();
        assert_eq!(p.to_string(), "message of type 'tutorial.Person' with 2 fields set");
        assert_eq!(person().set_count(), 0);
        let err = DynamicMessage::with_fields(bundled::pool(), "tutorial.Person", [("bogus", 1.into())]).unwrap_err();
        assert!(matches!(err, MessageError::UnknownField { .. }));
    }

    #[test]
    fn get_and_set_by_name_and_tag() {
        let mut p = person();
        p.set("name", "Murray").unwrap();
        p.set("email", "murray@stokely.org").unwrap();
        p.set(2u32, 3).unwrap();
        assert_eq!(p.get("name").unwrap(), HostValue::from("Murray"));
        assert_eq!(p.get(2u32).unwrap(), HostValue::Int(vec![3]));
        assert_eq!(p.get("email").unwrap(), HostValue::from("murray@stokely.org"));
        assert!(matches!(p.get("nam"), Err(MessageError::UnknownField { .. })));
        assert!(matches!(p.get(9u32), Err(MessageError::UnknownField { .. })));
    }

    #[test]
    fn unset_fields_read_defaults() {
        let p = person();
        assert_eq!(p.get("email").unwrap(), HostValue::Str(vec![Some(String::new())]));
        assert_eq!(p.get("id").unwrap(), HostValue::Int(vec![0]));
        assert_eq!(p.get("phone").unwrap(), HostValue::Message(vec![]));
        let ph = phone("1");
        // [default = HOME]
        assert_eq!(ph.get("type").unwrap(), HostValue::Int(vec![1]));
        let rexp = DynamicMessage::new(bundled::pool(), "rexp.STRING").unwrap();
        assert_eq!(rexp.get("isNA").unwrap(), HostValue::Logical(vec![Some(false)]));
    }

    #[test]
    fn enum_set_by_name_or_number() {
        let mut ph = phone("555");
        ph.set("type", "WORK").unwrap();
        assert_eq!(ph.get_value("type").unwrap(), Value::Enum(2));
        ph.set("type", 0).unwrap();
        assert_eq!(ph.get_value("type").unwrap(), Value::Enum(0));
        assert!(ph.set("type", "NOPE").is_err());
        assert!(ph.set("type", 7).is_err());
    }

    #[test]
    fn has_and_clear() {
        let mut p = person();
        assert!(!p.has("email").unwrap());
        p.set("name", "Murray").unwrap();
        assert!(p.has("name").unwrap());
        p.add("phone", phone("1")).unwrap();
        assert!(p.has("phone").unwrap());
        let before = p.byte_size();
        p.clear("name").unwrap();
        assert!(!p.has("name").unwrap());
        assert!(p.byte_size() < before);
        p.clear("phone").unwrap();
        assert_eq!(p.field_size("phone").unwrap(), 0);
        p.set("name", "x").unwrap();
        p.set("id", 1).unwrap();
        p.set("email", "y").unwrap();
        p.clear_all();
        assert_eq!(p.set_count(), 0);
    }

    #[test]
    fn repeated_operations() {
        let mut p = person();
        p.add("phone", HostValue::Message(vec![phone("a"), phone("b")])).unwrap();
        assert_eq!(p.field_size("phone").unwrap(), 2);
        p.swap("phone", &[1], &[2]).unwrap();
        let first = p.fetch("phone", &[1]).unwrap();
        assert_eq!(first, HostValue::Message(vec![phone("b")]));
        p.set_at("phone", &[2], phone("c")).unwrap();
        assert_eq!(p.fetch("phone", &[2, 1]).unwrap(), HostValue::Message(vec![phone("c"), phone("b")]));
        assert!(matches!(p.fetch("phone", &[3]), Err(MessageError::IndexOutOfRange { .. })));
        assert!(matches!(p.fetch("phone", &[0]), Err(MessageError::IndexOutOfRange { .. })));
        assert!(matches!(p.add("name", "x"), Err(MessageError::NotRepeated(_))));
        assert!(matches!(p.swap("id", &[1], &[1]), Err(MessageError::NotRepeated(_))));
        p.set("name", "n").unwrap();
        assert_eq!(p.field_size("name").unwrap(), 1);
        assert_eq!(p.field_size("email").unwrap(), 0);
    }

    #[test]
    fn singular_fields_need_one_value() {
        let mut p = person();
        assert!(matches!(
            p.set("id", vec![1, 2]),
            Err(MessageError::LengthMismatch { expected: 1, found: 2, .. })
        ));
        assert!(p.set("id", Vec::<i32>::new()).is_err());
    }

    #[test]
    fn is_initialized_recurses() {
        let mut p = DynamicMessage::with_fields(bundled::pool(), "tutorial.Person", [("name", "M".into()), ("id", 1.into())])
            .unwrap();
        assert!(p.is_initialized());
        p.clear("id").unwrap();
        assert!(!p.is_initialized());
        p.set("id", 1).unwrap();
        let empty_phone = DynamicMessage::new(bundled::pool(), "tutorial.Person.PhoneNumber").unwrap();
        p.add("phone", empty_phone).unwrap();
        assert!(!p.is_initialized());
        assert_eq!(p.missing_required(), ["phone[1].number"]);
    }

    #[test]
    fn update_is_atomic() {
        let mut p = person();
        p.update([("id", 5.into()), ("email", "x@y".into())]).unwrap();
        assert_eq!(p.get("id").unwrap(), HostValue::Int(vec![5]));
        let before = p.clone();
        assert!(p.update([("id", 6.into()), ("bogus", 1.into())]).is_err());
        assert_eq!(p, before);
        assert!(p.update([("id", 6.into()), ("email", 1.into())]).is_err());
        assert_eq!(p, before);
    }

    #[test]
    fn clone_is_deep() {
        let mut p = person();
        p.add("phone", phone("1")).unwrap();
        let original = p.clone();
        let mut c = p.clone();
        c.set("name", "other").unwrap();
        c.message_mut("phone").unwrap_err();
        if let Some(Value::Message(ph)) = c.raw_slot(4).and_then(|s| s.first_mut()) {
            ph.set("number", "2").unwrap();
        }
        assert_eq!(p, original);
        assert_ne!(c, original);
    }

    #[test]
    fn named_list_follows_declaration_order() {
        let p = DynamicMessage::with_fields(bundled::pool(), "tutorial.Person", [("name", "Murray".into()), ("id", 1.into())])
            .unwrap();
        let list = p.to_named_list(&CoercionOptions::default());
        let expected = vec![
            ("name".to_string(), HostValue::from("Murray")),
            ("id".to_string(), HostValue::Int(vec![1])),
            ("email".to_string(), HostValue::from("")),
            ("phone".to_string(), HostValue::Message(vec![])),
        ];
        assert_eq!(list, expected);
        let by_get: Vec<_> = p
            .descriptor()
            .fields()
            .iter()
            .map(|f| (f.name().to_string(), p.get(f.name()).unwrap()))
            .collect();
        assert_eq!(list, by_get);
    }

    #[test]
    fn set_of_get_keeps_bytes() {
        let mut p = DynamicMessage::with_fields(bundled::pool(), "tutorial.Person", [("name", "Murray".into()), ("id", 1.into())])
            .unwrap();
        p.add("phone", phone("1")).unwrap();
        let bytes = p.encode();
        for f in ["name", "id", "phone"] {
            let v = p.get(f).unwrap();
            p.set(f, v).unwrap();
            assert_eq!(p.encode(), bytes, "{f}");
        }
    }

    #[test]
    fn typed_values_are_checked() {
        let mut p = person();
        assert!(matches!(p.set_value("id", Value::String("x".into())), Err(MessageError::TypeMismatch { .. })));
        assert!(p.set_value("phone", Value::from(phone("1"))).is_ok());
        assert!(p.set_value("phone", Value::from(person())).is_err());
        assert!(p.push_value("phone", Value::from(person())).is_err());
        let mut ph = phone("1");
        assert!(ph.set_value("type", Value::Enum(9)).is_err());
    }

    #[test]
    fn message_mut_creates_singular_messages() {
        let pool = bundled::pool();
        let mut f = DynamicMessage::new(pool, "google.protobuf.FieldDescriptorProto").unwrap();
        f.message_mut("options").unwrap().set("packed", true).unwrap();
        assert!(f.has("options").unwrap());
        assert!(f.message_mut("name").is_err());
    }

    #[test]
    fn merge_from_follows_proto_rules() {
        let pool = bundled::pool();
        let mut a = DynamicMessage::new(pool, "google.protobuf.FieldDescriptorProto").unwrap();
        a.set("name", "a").unwrap();
        a.message_mut("options").unwrap().set("packed", false).unwrap();
        let mut b = DynamicMessage::new(pool, "google.protobuf.FieldDescriptorProto").unwrap();
        b.set("number", 3).unwrap();
        b.message_mut("options").unwrap().set("packed", true).unwrap();
        a.merge_from(&b);
        assert_eq!(a.get("name").unwrap(), HostValue::from("a"));
        assert_eq!(a.get("number").unwrap(), HostValue::Int(vec![3]));
        let opts = a.get_value("options").unwrap();
        assert_eq!(opts.as_message().unwrap().get_value("packed").unwrap(), Value::Bool(true));
    }

    #[derive(Debug, Clone)]
    enum Op {
        SetName(String),
        SetId(i32),
        ClearEmail,
        SetEmail(String),
        AddPhone(String),
        ClearPhone,
        Swap(usize, usize),
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![
            "[a-z]{0,5}".prop_map(Op::SetName),
            any::<i32>().prop_filter("NA", |i| *i != i32::MIN).prop_map(Op::SetId),
            Just(Op::ClearEmail),
            "[a-z@.]{0,6}".prop_map(Op::SetEmail),
            "[0-9]{1,4}".prop_map(Op::AddPhone),
            Just(Op::ClearPhone),
            (1usize..4, 1usize..4).prop_map(|(a, b)| Op::Swap(a, b)),
        ]
    }

    #[derive(Default, Debug)]
    struct Model {
        name: Option<String>,
        id: Option<i32>,
        email: Option<String>,
        phones: Vec<String>,
    }

    proptest! {
        #[test]
        fn matches_reference_model(ops in proptest::collection::vec(op(), 0..40)) {
            let mut m = person();
            let mut model = Model::default();
            for op in ops {
                match op {
                    Op::SetName(s) => { m.set("name", s.as_str()).unwrap(); model.name = Some(s); }
                    Op::SetId(i) => { m.set("id", i).unwrap(); model.id = Some(i); }
                    Op::ClearEmail => { m.clear("email").unwrap(); model.email = None; }
                    Op::SetEmail(s) => { m.set("email", s.as_str()).unwrap(); model.email = Some(s); }
                    Op::AddPhone(s) => { m.add("phone", phone(&s)).unwrap(); model.phones.push(s); }
                    Op::ClearPhone => { m.clear("phone").unwrap(); model.phones.clear(); }
                    Op::Swap(a, b) => {
                        let r = m.swap("phone", &[a], &[b]);
                        if a <= model.phones.len() && b <= model.phones.len() {
                            prop_assert!(r.is_ok());
                            model.phones.swap(a - 1, b - 1);
                        } else {
                            prop_assert!(r.is_err());
                        }
                    }
                }
                prop_assert_eq!(m.has("name").unwrap(), model.name.is_some());
                prop_assert_eq!(m.has("id").unwrap(), model.id.is_some());
                prop_assert_eq!(m.has("email").unwrap(), model.email.is_some());
                prop_assert_eq!(m.field_size("phone").unwrap(), model.phones.len());
                prop_assert_eq!(m.get("name").unwrap(), HostValue::from(model.name.clone().unwrap_or_default()));
                prop_assert_eq!(m.get("id").unwrap(), HostValue::Int(vec![model.id.unwrap_or(0)]));
                let phones: Vec<_> = model.phones.iter().map(|s| phone(s)).collect();
                prop_assert_eq!(m.get("phone").unwrap(), HostValue::Message(phones));
            }
        }

        #[test]
        fn clone_is_independent(ops in proptest::collection::vec(op(), 1..20)) {
            let mut original = person();
            original.set("name", "base").unwrap();
            original.add("phone", phone("1")).unwrap();
            let snapshot = original.encode();
            let mut c = original.clone();
            for op in ops {
                let _ = match op {
                    Op::SetName(s) => c.set("name", s.as_str()),
                    Op::SetId(i) => c.set("id", i),
                    Op::ClearEmail => c.clear("email"),
                    Op::SetEmail(s) => c.set("email", s.as_str()),
                    Op::AddPhone(s) => c.add("phone", phone(&s)),
                    Op::ClearPhone => c.clear("phone"),
                    Op::Swap(a, b) => c.swap("phone", &[a], &[b]),
                };
            }
            prop_assert_eq!(original.encode(), snapshot);
        }
    }
}

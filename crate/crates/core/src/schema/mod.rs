//! Schema reflection: `.proto` parsing, descriptor types and the descriptor pool.

mod loader;
mod parser;
mod pool;
mod render;

use std::fmt;
use std::sync::Arc;

pub use loader::ProtoLoader;
pub use parser::parse_proto_source;
pub use pool::{Descriptor, DescriptorPool, FieldRef};

/// Lowest and highest tag numbers accepted on a field.
pub const MIN_TAG: u32 = 1;
pub const MAX_TAG: u32 = (1 << 29) - 1;
/// Tag range reserved by the wire format implementation.
pub const RESERVED_TAGS: std::ops::RangeInclusive<u32> = 19000..=19999;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SchemaError {
    #[error("{file}:{line}:{column}: {message}")]
    Syntax {
        file: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{message}: duplicate tag number {number} (fields `{first}` and `{second}`)")]
    DuplicateTag {
        message: String,
        number: u32,
        first: String,
        second: String,
    },
    #[error("{scope}: duplicate name `{name}`")]
    DuplicateName { scope: String, name: String },
    #[error("field `{field}`: invalid tag number {number}")]
    InvalidTag { field: String, number: i64 },
    #[error("field `{field}`: {reason}")]
    InvalidField { field: String, reason: String },
    #[error("unknown type `{name}` referenced from `{scope}`")]
    UnknownType { name: String, scope: String },
    #[error("`{name}` is already defined with a different definition")]
    Conflict { name: String },
    #[error("{file}: import `{import}` cannot be resolved")]
    UnresolvedImport { file: String, import: String },
    #[error("circular import: {}", chain.join(" -> "))]
    CircularImport { chain: Vec<String> },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// Index or lookup failure on an already loaded descriptor.
#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum LookupError {
    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("no enum constant named `{0}`")]
    UnknownName(String),
    #[error("no enum constant with number {0}")]
    UnknownNumber(i32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Optional,
    Required,
    Repeated,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Optional => "optional",
            Label::Required => "required",
            Label::Repeated => "repeated",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Declared type of a field. Named types carry the referenced full name once
/// resolved; `Unresolved` keeps the name as written until pool resolution.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FieldType {
    Double,
    Float,
    Int32,
    Int64,
    Uint32,
    Uint64,
    Sint32,
    Sint64,
    Fixed32,
    Fixed64,
    Sfixed32,
    Sfixed64,
    Bool,
    String,
    Bytes,
    Enum(String),
    Message(String),
    Unresolved(String),
}

impl FieldType {
    pub fn from_keyword(word: &str) -> Option<FieldType> {
        Some(match word {
            "double" => FieldType::Double,
            "float" => FieldType::Float,
            "int32" => FieldType::Int32,
            "int64" => FieldType::Int64,
            "uint32" => FieldType::Uint32,
            "uint64" => FieldType::Uint64,
            "sint32" => FieldType::Sint32,
            "sint64" => FieldType::Sint64,
            "fixed32" => FieldType::Fixed32,
            "fixed64" => FieldType::Fixed64,
            "sfixed32" => FieldType::Sfixed32,
            "sfixed64" => FieldType::Sfixed64,
            "bool" => FieldType::Bool,
            "string" => FieldType::String,
            "bytes" => FieldType::Bytes,
            _ => return None,
        })
    }

    /// Keyword for scalar types, `enum`/`message` for named ones.
    pub fn kind_name(&self) -> &str {
        match self {
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
            FieldType::Message(_) => "message",
            FieldType::Unresolved(_) => "unresolved",
        }
    }

    /// Numeric, bool and enum fields may use packed encoding.
    pub fn is_packable(&self) -> bool {
        !matches!(
            self,
            FieldType::String | FieldType::Bytes | FieldType::Message(_) | FieldType::Unresolved(_)
        )
    }

    pub fn type_ref(&self) -> Option<&str> {
        match self {
            FieldType::Enum(n) | FieldType::Message(n) | FieldType::Unresolved(n) => Some(n),
            _ => None,
        }
    }
}

/// Declared `[default = ...]` value of a field.
#[derive(Debug, Clone)]
pub enum DefaultValue {
    Int(i64),
    UInt(u64),
    Float(f64),
    Bool(bool),
    String(String),
    Bytes(Vec<u8>),
    /// Enum constant name.
    Enum(String),
}

impl PartialEq for DefaultValue {
    fn eq(&self, other: &Self) -> bool {
        use DefaultValue::*;
        match (self, other) {
            (Int(a), Int(b)) => a == b,
            (UInt(a), UInt(b)) => a == b,
            (Float(a), Float(b)) => a.to_bits() == b.to_bits(),
            (Bool(a), Bool(b)) => a == b,
            (String(a), String(b)) => a == b,
            (Bytes(a), Bytes(b)) => a == b,
            (Enum(a), Enum(b)) => a == b,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDescriptor {
    pub(crate) name: String,
    pub(crate) full_name: String,
    pub(crate) number: u32,
    pub(crate) label: Label,
    pub(crate) ty: FieldType,
    pub(crate) packed: bool,
    pub(crate) default: Option<DefaultValue>,
    pub(crate) containing_type: String,
}

impl FieldDescriptor {
    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn full_name(&self) -> &str {
        &self.full_name
    }
    /// Declared tag number.
    pub fn number(&self) -> u32 {
        self.number
    }
    pub fn label(&self) -> Label {
        self.label
    }
    pub fn field_type(&self) -> &FieldType {
        &self.ty
    }
    /// Full name of the referenced message or enum type.
    pub fn type_ref(&self) -> Option<&str> {
        self.ty.type_ref()
    }
    pub fn is_packed(&self) -> bool {
        self.packed
    }
    pub fn is_required(&self) -> bool {
        self.label == Label::Required
    }
    pub fn is_optional(&self) -> bool {
        self.label == Label::Optional
    }
    pub fn is_repeated(&self) -> bool {
        self.label == Label::Repeated
    }
    pub fn has_default_value(&self) -> bool {
        self.default.is_some()
    }
    pub fn default_value(&self) -> Option<&DefaultValue> {
        self.default.as_ref()
    }
    /// Full name of the message declaring this field.
    pub fn containing_type(&self) -> &str {
        &self.containing_type
    }
    pub fn is_message(&self) -> bool {
        matches!(self.ty, FieldType::Message(_))
    }
}

impl fmt::Display for FieldDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "descriptor for field '{}' of type '{}'",
            self.name, self.containing_type
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumValueDescriptor {
    pub(crate) name: String,
    pub(crate) full_name: String,
    pub(crate) number: i32,
}

impl EnumValueDescriptor {
    pub fn name(&self) -> &str {
        &self.name
    }
    /// Enum constants are scoped alongside their enum, as in `tutorial.Person.HOME`.
    pub fn full_name(&self) -> &str {
        &self.full_name
    }
    pub fn number(&self) -> i32 {
        self.number
    }
}

impl fmt::Display for EnumValueDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "enum value descriptor {}", self.full_name)
    }
}

/// Selects one constant of an enum.
#[derive(Debug, Clone, Copy)]
pub enum EnumSelector<'a> {
    /// 1-based declaration position.
    Index(usize),
    Name(&'a str),
    Number(i32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumDescriptor {
    pub(crate) name: String,
    pub(crate) full_name: String,
    pub(crate) values: Vec<EnumValueDescriptor>,
    pub(crate) containing_type: Option<String>,
}

impl EnumDescriptor {
    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn full_name(&self) -> &str {
        &self.full_name
    }
    pub fn values(&self) -> &[EnumValueDescriptor] {
        &self.values
    }
    pub fn value_count(&self) -> usize {
        self.values.len()
    }
    pub fn containing_type(&self) -> Option<&str> {
        self.containing_type.as_deref()
    }
    pub fn has(&self, name: &str) -> bool {
        self.values.iter().any(|v| v.name == name)
    }

    pub fn value(&self, selector: EnumSelector<'_>) -> Result<&EnumValueDescriptor, LookupError> {
        match selector {
            EnumSelector::Index(i) => i
                .checked_sub(1)
                .and_then(|i| self.values.get(i))
                .ok_or(LookupError::IndexOutOfRange {
                    index: i,
                    len: self.values.len(),
                }),
            EnumSelector::Name(name) => self
                .value_by_name(name)
                .ok_or_else(|| LookupError::UnknownName(name.to_string())),
            EnumSelector::Number(n) => self
                .value_by_number(n)
                .ok_or(LookupError::UnknownNumber(n)),
        }
    }

    pub fn value_by_name(&self, name: &str) -> Option<&EnumValueDescriptor> {
        self.values.iter().find(|v| v.name == name)
    }

    /// First declared constant with `number`; aliases resolve to the earliest name.
    pub fn value_by_number(&self, number: i32) -> Option<&EnumValueDescriptor> {
        self.values.iter().find(|v| v.number == number)
    }
}

impl fmt::Display for EnumDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.containing_type {
            Some(parent) => write!(
                f,
                "descriptor for enum '{}' of type '{}' with {} values",
                self.name,
                parent,
                self.values.len()
            ),
            None => write!(
                f,
                "descriptor for enum '{}' with {} values",
                self.full_name,
                self.values.len()
            ),
        }
    }
}

/// Result of resolving a member name inside a message descriptor.
#[derive(Debug, Clone)]
pub enum Member<'a> {
    Field(&'a FieldDescriptor),
    Enum(&'a Arc<EnumDescriptor>),
    Message(&'a Arc<MessageDescriptor>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MessageDescriptor {
    pub(crate) name: String,
    pub(crate) full_name: String,
    pub(crate) fields: Vec<FieldDescriptor>,
    pub(crate) nested_types: Vec<Arc<MessageDescriptor>>,
    pub(crate) enum_types: Vec<Arc<EnumDescriptor>>,
    pub(crate) containing_type: Option<String>,
    pub(crate) file: String,
}

impl MessageDescriptor {
    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn full_name(&self) -> &str {
        &self.full_name
    }
    pub fn fields(&self) -> &[FieldDescriptor] {
        &self.fields
    }
    pub fn nested_types(&self) -> &[Arc<MessageDescriptor>] {
        &self.nested_types
    }
    pub fn enum_types(&self) -> &[Arc<EnumDescriptor>] {
        &self.enum_types
    }
    /// Full name of the enclosing message; `None` for top-level messages.
    pub fn containing_type(&self) -> Option<&str> {
        self.containing_type.as_deref()
    }
    /// Name of the `.proto` file that declared this message.
    pub fn file_name(&self) -> &str {
        &self.file
    }

    pub fn field_count(&self) -> usize {
        self.fields.len()
    }
    pub fn nested_type_count(&self) -> usize {
        self.nested_types.len()
    }
    pub fn enum_type_count(&self) -> usize {
        self.enum_types.len()
    }

    /// 1-based positional field accessor.
    pub fn field(&self, index: usize) -> Result<&FieldDescriptor, LookupError> {
        one_based(&self.fields, index)
    }
    pub fn nested_type(&self, index: usize) -> Result<&Arc<MessageDescriptor>, LookupError> {
        one_based(&self.nested_types, index)
    }
    pub fn enum_type(&self, index: usize) -> Result<&Arc<EnumDescriptor>, LookupError> {
        one_based(&self.enum_types, index)
    }

    pub fn field_by_name(&self, name: &str) -> Option<&FieldDescriptor> {
        self.fields.iter().find(|f| f.name == name)
    }
    pub fn field_by_number(&self, number: u32) -> Option<&FieldDescriptor> {
        self.fields.iter().find(|f| f.number == number)
    }

    /// Resolves `member` against field names, then nested enums, then nested messages.
    pub fn navigate(&self, member: &str) -> Option<Member<'_>> {
        if let Some(f) = self.field_by_name(member) {
            return Some(Member::Field(f));
        }
        if let Some(e) = self.enum_types.iter().find(|e| e.name == member) {
            return Some(Member::Enum(e));
        }
        self.nested_types
            .iter()
            .find(|m| m.name == member)
            .map(Member::Message)
    }
}

impl fmt::Display for MessageDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "descriptor for type '{}'", self.full_name)
    }
}

fn one_based<T>(items: &[T], index: usize) -> Result<&T, LookupError> {
    index
        .checked_sub(1)
        .and_then(|i| items.get(i))
        .ok_or(LookupError::IndexOutOfRange {
            index,
            len: items.len(),
        })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FileDescriptor {
    pub(crate) filename: String,
    pub(crate) package: String,
    pub(crate) imports: Vec<String>,
    pub(crate) messages: Vec<Arc<MessageDescriptor>>,
    pub(crate) enums: Vec<Arc<EnumDescriptor>>,
}

impl FileDescriptor {
    pub fn filename(&self) -> &str {
        &self.filename
    }
    pub fn package(&self) -> &str {
        &self.package
    }
    pub fn imports(&self) -> &[String] {
        &self.imports
    }
    pub fn messages(&self) -> &[Arc<MessageDescriptor>] {
        &self.messages
    }
    pub fn enums(&self) -> &[Arc<EnumDescriptor>] {
        &self.enums
    }

    /// Top-level message or enum declared under `name`.
    pub fn member(&self, name: &str) -> Option<Descriptor> {
        if let Some(m) = self.messages.iter().find(|m| m.name == name) {
            return Some(Descriptor::Message(m.clone()));
        }
        self.enums
            .iter()
            .find(|e| e.name == name)
            .map(|e| Descriptor::Enum(e.clone()))
    }

    /// Every message (nested included) declared in this file, depth first.
    pub fn all_messages(&self) -> Vec<Arc<MessageDescriptor>> {
        fn walk(m: &Arc<MessageDescriptor>, out: &mut Vec<Arc<MessageDescriptor>>) {
            out.push(m.clone());
            for n in &m.nested_types {
                walk(n, out);
            }
        }
        let mut out = Vec::new();
        for m in &self.messages {
            walk(m, &mut out);
        }
        out
    }

    /// Every enum (nested included) declared in this file.
    pub fn all_enums(&self) -> Vec<Arc<EnumDescriptor>> {
        let mut out: Vec<_> = self.enums.clone();
        for m in self.all_messages() {
            out.extend(m.enum_types.iter().cloned());
        }
        out
    }

    /// Canonical `.proto` rendering. Re-parsing it yields an equal descriptor tree.
    pub fn to_proto_source(&self) -> String {
        render::render_file(self)
    }
}

impl fmt::Display for FileDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "file descriptor for package {} ({})",
            self.package, self.filename
        )
    }
}

/// Joins a scope and a simple name with a dot, skipping an empty scope.
pub(crate) fn qualify(scope: &str, name: &str) -> String {
    if scope.is_empty() {
        name.to_string()
    } else {
        format!("{scope}.{name}")
    }
}

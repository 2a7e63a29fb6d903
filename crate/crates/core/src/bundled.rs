//! Schemas shipped with the crate and the descriptor self-description.

use std::sync::OnceLock;

use crate::message::DynamicMessage;
use crate::schema::{
    parse_proto_source, DefaultValue, Descriptor, DescriptorPool, EnumDescriptor, FieldDescriptor, FieldType,
    FileDescriptor, Label, MessageDescriptor,
};
use crate::value::Value;

pub const ADDRESSBOOK_PROTO: &str = include_str!("../../../proto/addressbook.proto");
pub const REXP_PROTO: &str = include_str!("../../../proto/rexp.proto");
pub const HISTOGRAM_PROTO: &str = include_str!("../../../proto/histogram.proto");
pub const DESCRIPTOR_PROTO: &str = include_str!("../../../proto/descriptor.proto");

/// `(filename, source)` of every bundled schema.
pub const SOURCES: [(&str, &str); 4] = [
    ("addressbook.proto", ADDRESSBOOK_PROTO),
    ("rexp.proto", REXP_PROTO),
    ("histogram.proto", HISTOGRAM_PROTO),
    ("descriptor.proto", DESCRIPTOR_PROTO),
];

/// Parsed bundled files, in [`SOURCES`] order.
pub fn files() -> Vec<FileDescriptor> {
    SOURCES
        .iter()
        .map(|(name, src)| parse_proto_source(src, name).expect("bundled schema parses"))
        .collect()
}

/// Pool holding every bundled schema.
pub fn pool() -> &'static DescriptorPool {
    static POOL: OnceLock<DescriptorPool> = OnceLock::new();
    POOL.get_or_init(|| DescriptorPool::new().load(files()).expect("bundled schemas load"))
}

// ---- self-description ---------------------------------------------------------

/// Describes any descriptor as a message of the reduced descriptor schema:
/// `DescriptorProto`, `EnumDescriptorProto` or `FieldDescriptorProto`.
pub fn descriptor_to_message(d: &Descriptor) -> DynamicMessage {
    match d {
        Descriptor::Message(m) => message_proto(m),
        Descriptor::Enum(e) => enum_proto(e),
        Descriptor::Field(f) => field_proto(f),
    }
}

/// Describes a file as a `google.protobuf.FileDescriptorProto`.
pub fn file_to_message(f: &FileDescriptor) -> DynamicMessage {
    let mut out = new("google.protobuf.FileDescriptorProto");
    set(&mut out, "name", Value::String(f.filename().to_string()));
    if !f.package().is_empty() {
        set(&mut out, "package", Value::String(f.package().to_string()));
    }
    for i in f.imports() {
        push(&mut out, "dependency", Value::String(i.clone()));
    }
    for m in f.messages() {
        push(&mut out, "message_type", Value::from(message_proto(m)));
    }
    for e in f.enums() {
        push(&mut out, "enum_type", Value::from(enum_proto(e)));
    }
    out
}

fn new(type_name: &str) -> DynamicMessage {
    DynamicMessage::new(pool(), type_name).expect("bundled type")
}

fn set(m: &mut DynamicMessage, field: &str, v: Value) {
    m.set_value(field, v).expect("value matches bundled schema");
}

fn push(m: &mut DynamicMessage, field: &str, v: Value) {
    m.push_value(field, v).expect("value matches bundled schema");
}

fn message_proto(d: &MessageDescriptor) -> DynamicMessage {
    let mut out = new("google.protobuf.DescriptorProto");
    set(&mut out, "name", Value::String(d.name().to_string()));
    for f in d.fields() {
        push(&mut out, "field", Value::from(field_proto(f)));
    }
    for n in d.nested_types() {
        push(&mut out, "nested_type", Value::from(message_proto(n)));
    }
    for e in d.enum_types() {
        push(&mut out, "enum_type", Value::from(enum_proto(e)));
    }
    out
}

fn enum_proto(e: &EnumDescriptor) -> DynamicMessage {
    let mut out = new("google.protobuf.EnumDescriptorProto");
    set(&mut out, "name", Value::String(e.name().to_string()));
    for v in e.values() {
        let mut value = new("google.protobuf.EnumValueDescriptorProto");
        set(&mut value, "name", Value::String(v.name().to_string()));
        set(&mut value, "number", Value::Int32(v.number()));
        push(&mut out, "value", Value::from(value));
    }
    out
}

fn field_proto(f: &FieldDescriptor) -> DynamicMessage {
    let mut out = new("google.protobuf.FieldDescriptorProto");
    set(&mut out, "name", Value::String(f.name().to_string()));
    set(&mut out, "number", Value::Int32(f.number() as i32));
    let label = match f.label() {
        Label::Optional => 1,
        Label::Required => 2,
        Label::Repeated => 3,
    };
    set(&mut out, "label", Value::Enum(label));
    set(&mut out, "type", Value::Enum(type_code(f.field_type())));
    if let Some(r) = f.type_ref() {
        set(&mut out, "type_name", Value::String(format!(".{r}")));
    }
    if let Some(d) = f.default_value() {
        set(&mut out, "default_value", Value::String(default_text(d)));
    }
    if f.is_packed() {
        let mut opts = new("google.protobuf.FieldOptions");
        set(&mut opts, "packed", Value::Bool(true));
        set(&mut out, "options", Value::from(opts));
    }
    out
}

/// `FieldDescriptorProto.Type` number of a field type.
pub fn type_code(ty: &FieldType) -> i32 {
    match ty {
        FieldType::Double => 1,
        FieldType::Float => 2,
        FieldType::Int64 => 3,
        FieldType::Uint64 => 4,
        FieldType::Int32 => 5,
        FieldType::Fixed64 => 6,
        FieldType::Fixed32 => 7,
        FieldType::Bool => 8,
        FieldType::String => 9,
        FieldType::Message(_) | FieldType::Unresolved(_) => 11,
        FieldType::Bytes => 12,
        FieldType::Uint32 => 13,
        FieldType::Enum(_) => 14,
        FieldType::Sfixed32 => 15,
        FieldType::Sfixed64 => 16,
        FieldType::Sint32 => 17,
        FieldType::Sint64 => 18,
    }
}

fn default_text(d: &DefaultValue) -> String {
    match d {
        DefaultValue::Int(v) => v.to_string(),
        DefaultValue::UInt(v) => v.to_string(),
        DefaultValue::Float(v) => crate::text::format_f64(*v),
        DefaultValue::Bool(v) => v.to_string(),
        DefaultValue::String(s) => s.clone(),
        DefaultValue::Bytes(b) => b
            .iter()
            .map(|&c| match c {
                b'\\' => "\\\\".to_string(),
                0x20..=0x7e => (c as char).to_string(),
                _ => format!("\\{c:03o}"),
            })
            .collect(),
        DefaultValue::Enum(n) => n.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_pool_has_all_files() {
        let p = pool();
        for name in [
            "tutorial.Person",
            "tutorial.AddressBook",
            "rexp.REXP",
            "rexp.STRING",
            "rexp.CMPLX",
            "HistogramTools.HistogramState",
            "google.protobuf.DescriptorProto",
        ] {
            assert!(p.message(name).is_some(), "{name}");
        }
        assert_eq!(p.files().len(), 4);
    }

    #[test]
    fn field_self_description() {
        let phone = pool().lookup("tutorial.Person.phone").unwrap();
        let m = descriptor_to_message(&phone);
        assert_eq!(m.get_value("name").unwrap(), Value::String("phone".into()));
        assert_eq!(m.get_value("label").unwrap(), Value::Enum(3));
        assert_eq!(m.get_value("type").unwrap(), Value::Enum(11));
        assert_eq!(
            m.get_value("type_name").unwrap(),
            Value::String(".tutorial.Person.PhoneNumber".into())
        );
    }

    #[test]
    fn packed_and_default_are_described() {
        let real = pool().lookup("rexp.REXP.realValue").unwrap();
        let m = descriptor_to_message(&real);
        let opts = m.get_value("options").unwrap();
        assert_eq!(opts.as_message().unwrap().get_value("packed").unwrap(), Value::Bool(true));
        let ty = pool().lookup("tutorial.Person.PhoneNumber.type").unwrap();
        let m = descriptor_to_message(&ty);
        assert_eq!(m.get_value("default_value").unwrap(), Value::String("HOME".into()));
    }

    #[test]
    fn file_self_description() {
        let f = pool().file("addressbook.proto").unwrap();
        let m = file_to_message(&f);
        assert_eq!(m.get_value("package").unwrap(), Value::String("tutorial".into()));
        assert_eq!(m.field_size("message_type").unwrap(), 2);
    }
}

use std::fmt::Write;

use super::{DefaultValue, EnumDescriptor, FieldDescriptor, FieldType, FileDescriptor, MessageDescriptor};

pub(super) fn render_file(file: &FileDescriptor) -> String {
    let mut out = String::from("syntax = \"proto2\";\n");
    if !file.package.is_empty() {
        let _ = writeln!(out, "package {};", file.package);
    }
    for import in &file.imports {
        let _ = writeln!(out, "import \"{}\";", escape(import.as_bytes()));
    }
    for e in &file.enums {
        out.push('\n');
        render_enum(e, 0, &mut out);
    }
    for m in &file.messages {
        out.push('\n');
        render_message(m, 0, &mut out);
    }
    out
}

fn indent(depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

fn render_enum(e: &EnumDescriptor, depth: usize, out: &mut String) {
    indent(depth, out);
    let _ = writeln!(out, "enum {} {{", e.name);
    for v in &e.values {
        indent(depth + 1, out);
        let _ = writeln!(out, "{} = {};", v.name, v.number);
    }
    indent(depth, out);
    out.push_str("}\n");
}

fn render_message(m: &MessageDescriptor, depth: usize, out: &mut String) {
    indent(depth, out);
    let _ = writeln!(out, "message {} {{", m.name);
    for e in &m.enum_types {
        render_enum(e, depth + 1, out);
    }
    for n in &m.nested_types {
        render_message(n, depth + 1, out);
    }
    for f in &m.fields {
        indent(depth + 1, out);
        render_field(f, out);
    }
    indent(depth, out);
    out.push_str("}\n");
}

fn render_field(f: &FieldDescriptor, out: &mut String) {
    let ty = match &f.ty {
        FieldType::Enum(n) | FieldType::Message(n) => format!(".{n}"),
        FieldType::Unresolved(n) => n.clone(),
        other => other.kind_name().to_string(),
    };
    let _ = write!(out, "{} {} {} = {}", f.label, ty, f.name, f.number);
    let mut opts = Vec::new();
    if f.packed {
        opts.push("packed = true".to_string());
    }
    if let Some(d) = &f.default {
        opts.push(format!("default = {}", render_default(d)));
    }
    if !opts.is_empty() {
        let _ = write!(out, " [{}]", opts.join(", "));
    }
    out.push_str(";\n");
}

fn render_default(d: &DefaultValue) -> String {
    match d {
        DefaultValue::Int(v) => v.to_string(),
        DefaultValue::UInt(v) => v.to_string(),
        DefaultValue::Float(v) if v.is_nan() => "nan".into(),
        DefaultValue::Float(v) if v.is_infinite() => if *v > 0.0 { "inf" } else { "-inf" }.into(),
        DefaultValue::Float(v) => format!("{v:e}"),
        DefaultValue::Bool(v) => v.to_string(),
        DefaultValue::String(s) => format!("\"{}\"", escape(s.as_bytes())),
        DefaultValue::Bytes(b) => format!("\"{}\"", escape(b)),
        DefaultValue::Enum(n) => n.clone(),
    }
}

fn escape(bytes: &[u8]) -> String {
    let mut s = String::new();
    for &b in bytes {
        match b {
            b'"' => s.push_str("\\\""),
            b'\\' => s.push_str("\\\\"),
            b'\n' => s.push_str("\\n"),
            0x20..=0x7e => s.push(b as char),
            _ => {
                let _ = write!(s, "\\x{b:02x}");
            }
        }
    }
    s
}

//! Human-readable text format.

use std::fmt::Write;
use std::sync::Arc;

use crate::message::DynamicMessage;
use crate::schema::{DescriptorPool, FieldDescriptor, FieldType, MessageDescriptor};
use crate::value::Value;

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
#[error("{line}:{column}: {message}")]
pub struct TextError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// `message of type '<full name>' with <k> fields set`
pub fn summary_line(m: &DynamicMessage) -> String {
    format!(
        "message of type '{}' with {} fields set",
        m.type_name(),
        m.set_count()
    )
}

/// Structure dump: the summary line followed by the text rendering.
pub fn debug_string(m: &DynamicMessage) -> String {
    format!("{}\n{}", summary_line(m), print_text(m))
}

/// One `name: value` line per set element in tag order; nested messages as
/// indented blocks. Unknown fields are not printed.
pub fn print_text(m: &DynamicMessage) -> String {
    let mut out = String::new();
    print_into(m, 0, &mut out);
    out
}

fn print_into(m: &DynamicMessage, depth: usize, out: &mut String) {
    for (field, values) in m.set_fields() {
        for v in values {
            for _ in 0..depth {
                out.push_str("  ");
            }
            match v {
                Value::Message(child) => {
                    let _ = writeln!(out, "{} {{", field.name());
                    print_into(child, depth + 1, out);
                    for _ in 0..depth {
                        out.push_str("  ");
                    }
                    out.push_str("}\n");
                }
                _ => {
                    let _ = writeln!(out, "{}: {}", field.name(), format_scalar(m.pool(), field, v));
                }
            }
        }
    }
}

fn format_scalar(pool: &DescriptorPool, field: &FieldDescriptor, v: &Value) -> String {
    match v {
        Value::Double(d) => format_f64(*d),
        Value::Float(f) => format_f32(*f),
        Value::Int32(i) => i.to_string(),
        Value::Int64(i) => i.to_string(),
        Value::Uint32(u) => u.to_string(),
        Value::Uint64(u) => u.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::String(s) => quote_str(s),
        Value::Bytes(b) => quote_bytes(b),
        Value::Enum(n) => field
            .type_ref()
            .and_then(|e| pool.enum_type(e))
            .and_then(|e| e.value_by_number(*n).map(|c| c.name().to_string()))
            .unwrap_or_else(|| n.to_string()),
        Value::Message(_) => unreachable!("messages print as blocks"),
    }
}

/// Shortest text that parses back to the same value.
pub fn format_f64(d: f64) -> String {
    if d.is_nan() {
        "nan".into()
    } else if d.is_infinite() {
        if d > 0.0 { "inf" } else { "-inf" }.into()
    } else if d != 0.0 && (d.abs() >= 1e16 || d.abs() < 1e-5) {
        format!("{d:e}")
    } else {
        format!("{d}")
    }
}

pub fn format_f32(f: f32) -> String {
    if f.is_nan() {
        "nan".into()
    } else if f.is_infinite() {
        if f > 0.0 { "inf" } else { "-inf" }.into()
    } else if f != 0.0 && (f.abs() >= 1e16 || f.abs() < 1e-5) {
        format!("{f:e}")
    } else {
        format!("{f}")
    }
}

fn quote_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            '"' => out.push_str("\\\""),
            '\'' => out.push_str("\\'"),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 || c as u32 == 0x7f => {
                let _ = write!(out, "\\x{:02x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn quote_bytes(b: &[u8]) -> String {
    let mut out = String::with_capacity(b.len() + 2);
    out.push('"');
    for &c in b {
        match c {
            b'\n' => out.push_str("\\n"),
            b'\r' => out.push_str("\\r"),
            b'\t' => out.push_str("\\t"),
            b'"' => out.push_str("\\\""),
            b'\'' => out.push_str("\\'"),
            b'\\' => out.push_str("\\\\"),
            0x20..=0x7e => out.push(c as char),
            _ => {
                let _ = write!(out, "\\x{c:02x}");
            }
        }
    }
    out.push('"');
    out
}

// ---- parsing ------------------------------------------------------------------

/// Parses text produced by [`print_text`], tolerating `#` comments, a colon
/// before `{`, `<...>` blocks, `[a, b]` lists and `,`/`;` separators.
pub fn parse_text(
    pool: &DescriptorPool,
    descriptor: &Arc<MessageDescriptor>,
    text: &str,
) -> Result<DynamicMessage, TextError> {
    let mut p = TextParser::new(text)?;
    let mut m = DynamicMessage::from_descriptor(pool, descriptor.clone());
    p.parse_fields(&mut m, None, 0)?;
    Ok(m)
}

pub fn parse_text_named(pool: &DescriptorPool, type_name: &str, text: &str) -> Result<DynamicMessage, TextError> {
    let d = pool.message(type_name).ok_or_else(|| TextError {
        line: 1,
        column: 1,
        message: format!("unknown message type `{type_name}`"),
    })?;
    parse_text(pool, &d, text)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Str(Vec<u8>),
    Sym(char),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) | Tok::Number(s) => format!("`{s}`"),
            Tok::Str(_) => "string".into(),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct TextParser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
}

impl TextParser {
    fn new(text: &str) -> Result<Self, TextError> {
        Ok(TextParser {
            toks: tokenize(text)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn here(&self) -> (usize, usize) {
        let (_, l, c) = self.toks[self.pos];
        (l, c)
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> TextError {
        let (line, column) = self.here();
        TextError {
            line,
            column,
            message: message.into(),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Sym(c) {
            self.next();
            true
        } else {
            false
        }
    }

    fn parse_fields(&mut self, m: &mut DynamicMessage, close: Option<char>, depth: usize) -> Result<(), TextError> {
        if depth > crate::wire::MAX_DEPTH {
            return Err(self.error("message nesting too deep"));
        }
        loop {
            match self.peek().clone() {
                Tok::Eof => {
                    return match close {
                        None => Ok(()),
                        Some(c) => Err(self.error(format!("expected `{c}` before end of input"))),
                    }
                }
                Tok::Sym(c) if Some(c) == close => {
                    self.next();
                    return Ok(());
                }
                Tok::Ident(name) => {
                    let field = m.descriptor().field_by_name(&name).cloned().ok_or_else(|| {
                        self.error(format!("message `{}` has no field named `{name}`", m.type_name()))
                    })?;
                    self.next();
                    self.parse_field(m, &field, depth)?;
                    if !self.eat(',') {
                        self.eat(';');
                    }
                }
                other => return Err(self.error(format!("expected field name, found {}", other.describe()))),
            }
        }
    }

    fn parse_field(&mut self, m: &mut DynamicMessage, field: &FieldDescriptor, depth: usize) -> Result<(), TextError> {
        let colon = self.eat(':');
        if !colon && !field.is_message() {
            return Err(self.error(format!("field `{}`: expected `:`", field.name())));
        }
        if *self.peek() == Tok::Sym('[') {
            if !field.is_repeated() {
                return Err(self.error(format!("field `{}`: list value for a non-repeated field", field.name())));
            }
            self.next();
            if self.eat(']') {
                return Ok(());
            }
            loop {
                self.parse_value(m, field, depth)?;
                if self.eat(']') {
                    return Ok(());
                }
                if !self.eat(',') {
                    return Err(self.error(format!("field `{}`: expected `,` or `]`", field.name())));
                }
            }
        }
        self.parse_value(m, field, depth)
    }

    fn parse_value(&mut self, m: &mut DynamicMessage, field: &FieldDescriptor, depth: usize) -> Result<(), TextError> {
        let (line, column) = self.here();
        let value = if let FieldType::Message(name) = field.field_type() {
            let close = match self.next() {
                Tok::Sym('{') => '}',
                Tok::Sym('<') => '>',
                other => {
                    return Err(TextError {
                        line,
                        column,
                        message: format!("field `{}`: expected `{{`, found {}", field.name(), other.describe()),
                    })
                }
            };
            let d = m.pool().message(name).expect("field types in a loaded pool resolve");
            let mut child = DynamicMessage::from_descriptor(m.pool(), d);
            self.parse_fields(&mut child, Some(close), depth + 1)?;
            Value::Message(Box::new(child))
        } else {
            let tok = self.next();
            let tok = match tok {
                Tok::Str(mut bytes) => {
                    while let Tok::Str(more) = self.peek().clone() {
                        self.next();
                        bytes.extend(more);
                    }
                    Tok::Str(bytes)
                }
                t => t,
            };
            scalar_value(m.pool(), field, &tok).map_err(|message| TextError {
                line,
                column,
                message: format!("field `{}`: {message}", field.name()),
            })?
        };
        let result = if field.is_repeated() {
            m.push_value(field.name(), value)
        } else if m.has(field.name()).unwrap_or(false) {
            return Err(TextError {
                line,
                column,
                message: format!("field `{}`: non-repeated field specified more than once", field.name()),
            });
        } else {
            m.set_value(field.name(), value)
        };
        result.map_err(|e| TextError {
            line,
            column,
            message: e.to_string(),
        })
    }
}

fn scalar_value(pool: &DescriptorPool, field: &FieldDescriptor, tok: &Tok) -> Result<Value, String> {
    let ty = field.field_type();
    let bad = || format!("invalid {} value {}", ty.kind_name(), tok.describe());
    match ty {
        FieldType::Double | FieldType::Float => {
            let (Tok::Number(s) | Tok::Ident(s)) = tok else {
                return Err(bad());
            };
            if matches!(ty, FieldType::Float) {
                parse_f32(s).map(Value::Float).ok_or_else(bad)
            } else {
                parse_float(s).map(Value::Double).ok_or_else(bad)
            }
        }
        FieldType::Int32 | FieldType::Sint32 | FieldType::Sfixed32 => {
            let i = int_token(tok).ok_or_else(bad)?;
            i32::try_from(i).map(Value::Int32).map_err(|_| bad())
        }
        FieldType::Int64 | FieldType::Sint64 | FieldType::Sfixed64 => {
            let i = int_token(tok).ok_or_else(bad)?;
            i64::try_from(i).map(Value::Int64).map_err(|_| bad())
        }
        FieldType::Uint32 | FieldType::Fixed32 => {
            let i = int_token(tok).ok_or_else(bad)?;
            u32::try_from(i).map(Value::Uint32).map_err(|_| bad())
        }
        FieldType::Uint64 | FieldType::Fixed64 => {
            let i = int_token(tok).ok_or_else(bad)?;
            u64::try_from(i).map(Value::Uint64).map_err(|_| bad())
        }
        FieldType::Bool => match tok {
            Tok::Ident(s) if s == "true" || s == "t" || s == "True" => Ok(Value::Bool(true)),
            Tok::Ident(s) if s == "false" || s == "f" || s == "False" => Ok(Value::Bool(false)),
            Tok::Number(s) if s == "1" => Ok(Value::Bool(true)),
            Tok::Number(s) if s == "0" => Ok(Value::Bool(false)),
            _ => Err(bad()),
        },
        FieldType::String => match tok {
            Tok::Str(b) => String::from_utf8(b.clone())
                .map(Value::String)
                .map_err(|_| "string is not valid UTF-8".to_string()),
            _ => Err(bad()),
        },
        FieldType::Bytes => match tok {
            Tok::Str(b) => Ok(Value::Bytes(b.clone())),
            _ => Err(bad()),
        },
        FieldType::Enum(e) => {
            let e = pool.enum_type(e).ok_or_else(bad)?;
            let c = match tok {
                Tok::Ident(s) => e.value_by_name(s),
                Tok::Number(_) => int_token(tok)
                    .and_then(|i| i32::try_from(i).ok())
                    .and_then(|n| e.value_by_number(n)),
                _ => None,
            };
            c.map(|c| Value::Enum(c.number()))
                .ok_or_else(|| format!("{} is not a constant of enum `{}`", tok.describe(), e.full_name()))
        }
        FieldType::Message(_) | FieldType::Unresolved(_) => Err(bad()),
    }
}

fn int_token(tok: &Tok) -> Option<i128> {
    let Tok::Number(s) = tok else { return None };
    let (neg, digits) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.as_str()),
    };
    let magnitude = if let Some(hex) = digits.strip_prefix("0x").or_else(|| digits.strip_prefix("0X")) {
        i128::from_str_radix(hex, 16).ok()?
    } else if digits.len() > 1 && digits.starts_with('0') {
        i128::from_str_radix(&digits[1..], 8).ok()?
    } else {
        if !digits.bytes().all(|b| b.is_ascii_digit()) || digits.is_empty() {
            return None;
        }
        digits.parse::<i128>().ok()?
    };
    Some(if neg { -magnitude } else { magnitude })
}

fn parse_float(s: &str) -> Option<f64> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let lower = body.to_ascii_lowercase();
    let v = match lower.as_str() {
        "inf" | "infinity" => f64::INFINITY,
        "nan" => f64::NAN,
        _ => {
            let trimmed = lower.strip_suffix('f').unwrap_or(&lower);
            if trimmed.starts_with("0x") {
                int_token(&Tok::Number(trimmed.to_string()))? as f64
            } else {
                if !trimmed.bytes().next().is_some_and(|b| b.is_ascii_digit() || b == b'.') {
                    return None;
                }
                trimmed.parse::<f64>().ok()?
            }
        }
    };
    Some(if neg { -v } else { v })
}

/// Single-precision parse straight from text, avoiding double rounding.
fn parse_f32(s: &str) -> Option<f32> {
    let d = parse_float(s)?;
    if !d.is_finite() || s.contains(['x', 'X']) {
        return Some(d as f32);
    }
    let body = s.strip_suffix(['f', 'F']).unwrap_or(s);
    body.parse::<f32>().ok()
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize, usize)>, TextError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, column, message: &str| TextError {
        line,
        column,
        message: message.to_string(),
    };
    while i < bytes.len() {
        let c = bytes[i];
        let (start_line, start_col) = (line, col);
        match c {
            b'\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            b' ' | b'\t' | b'\r' => {
                i += 1;
                col += 1;
            }
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'"' | b'\'' => {
                let quote = c;
                i += 1;
                col += 1;
                let mut out = Vec::new();
                loop {
                    let Some(&b) = bytes.get(i) else {
                        return Err(err(start_line, start_col, "unterminated string"));
                    };
                    if b == b'\n' {
                        return Err(err(start_line, start_col, "unterminated string"));
                    }
                    i += 1;
                    col += 1;
                    if b == quote {
                        break;
                    }
                    if b != b'\\' {
                        out.push(b);
                        continue;
                    }
                    let Some(&e) = bytes.get(i) else {
                        return Err(err(start_line, start_col, "unterminated string"));
                    };
                    i += 1;
                    col += 1;
                    match e {
                        b'n' => out.push(b'\n'),
                        b'r' => out.push(b'\r'),
                        b't' => out.push(b'\t'),
                        b'a' => out.push(0x07),
                        b'b' => out.push(0x08),
                        b'f' => out.push(0x0c),
                        b'v' => out.push(0x0b),
                        b'"' | b'\'' | b'\\' | b'?' => out.push(e),
                        b'x' | b'X' => {
                            let mut v = 0u32;
                            let mut n = 0;
                            while n < 2 && bytes.get(i).is_some_and(|b| b.is_ascii_hexdigit()) {
                                v = v * 16 + (bytes[i] as char).to_digit(16).unwrap();
                                i += 1;
                                col += 1;
                                n += 1;
                            }
                            if n == 0 {
                                return Err(err(line, col, "`\\x` escape without hex digits"));
                            }
                            out.push(v as u8);
                        }
                        b'0'..=b'7' => {
                            let mut v = u32::from(e - b'0');
                            let mut n = 1;
                            while n < 3 && bytes.get(i).is_some_and(|b| (b'0'..=b'7').contains(b)) {
                                v = v * 8 + u32::from(bytes[i] - b'0');
                                i += 1;
                                col += 1;
                                n += 1;
                            }
                            if v > 0xff {
                                return Err(err(line, col, "octal escape out of range"));
                            }
                            out.push(v as u8);
                        }
                        _ => return Err(err(line, col - 1, "invalid escape sequence")),
                    }
                }
                toks.push((Tok::Str(out), start_line, start_col));
            }
            b'{' | b'}' | b'<' | b'>' | b'[' | b']' | b':' | b',' | b';' => {
                toks.push((Tok::Sym(c as char), line, col));
                i += 1;
                col += 1;
            }
            _ if c.is_ascii_alphabetic() || c == b'_' => {
                let s = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'.') {
                    i += 1;
                }
                col += i - s;
                toks.push((Tok::Ident(text[s..i].to_string()), start_line, start_col));
            }
            _ if c.is_ascii_digit() || c == b'-' || c == b'.' || c == b'+' => {
                let s = i;
                i += 1;
                while i < bytes.len() {
                    let b = bytes[i];
                    let exp_sign = (b == b'-' || b == b'+') && matches!(bytes[i - 1], b'e' | b'E') && !text[s..i].contains(['x', 'X']);
                    if b.is_ascii_alphanumeric() || b == b'.' || b == b'_' || exp_sign {
                        i += 1;
                    } else {
                        break;
                    }
                }
                col += i - s;
                let raw = &text[s..i];
                let raw = raw.strip_prefix('+').unwrap_or(raw);
                toks.push((Tok::Number(raw.to_string()), start_line, start_col));
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(err(line, col, &format!("unexpected character `{ch}`")));
            }
        }
    }
    toks.push((Tok::Eof, line, col));
    Ok(toks)
}

impl DynamicMessage {
    pub fn to_text(&self) -> String {
        print_text(self)
    }

    pub fn summary(&self) -> String {
        summary_line(self)
    }
}

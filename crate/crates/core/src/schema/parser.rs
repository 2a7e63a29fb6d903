//! Recursive-descent parser for the supported proto2 subset.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use super::{
    qualify, DefaultValue, EnumDescriptor, EnumValueDescriptor, FieldDescriptor, FieldType,
    FileDescriptor, Label, MessageDescriptor, SchemaError, MAX_TAG, MIN_TAG, RESERVED_TAGS,
};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    /// Numeric literal kept as written; sign is a separate symbol.
    Number(String),
    Str(Vec<u8>),
    Sym(char),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    column: usize,
    file: &'a str,
}

impl<'a> Lexer<'a> {
    fn error(&self, line: usize, column: usize, message: impl Into<String>) -> SchemaError {
        SchemaError::Syntax {
            file: self.file.to_string(),
            line,
            column,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<u8> {
        self.src.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let c = self.peek()?;
        self.pos += 1;
        if c == b'\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) -> Result<(), SchemaError> {
        loop {
            match (self.peek(), self.peek_at(1)) {
                (Some(c), _) if c.is_ascii_whitespace() => {
                    self.bump();
                }
                (Some(b'/'), Some(b'/')) => {
                    while let Some(c) = self.peek() {
                        if c == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                (Some(b'/'), Some(b'*')) => {
                    let (line, column) = (self.line, self.column);
                    self.bump();
                    self.bump();
                    loop {
                        match (self.peek(), self.peek_at(1)) {
                            (Some(b'*'), Some(b'/')) => {
                                self.bump();
                                self.bump();
                                break;
                            }
                            (Some(_), _) => {
                                self.bump();
                            }
                            (None, _) => {
                                return Err(self.error(line, column, "unterminated block comment"))
                            }
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn next_token(&mut self) -> Result<Token, SchemaError> {
        self.skip_trivia()?;
        let (line, column) = (self.line, self.column);
        let Some(c) = self.peek() else {
            return Ok(Token {
                tok: Tok::Eof,
                line,
                column,
            });
        };
        let tok = if c.is_ascii_alphabetic() || c == b'_' {
            let start = self.pos;
            while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                self.bump();
            }
            Tok::Ident(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
        } else if c.is_ascii_digit() || (c == b'.' && matches!(self.peek_at(1), Some(d) if d.is_ascii_digit()))
        {
            let start = self.pos;
            while let Some(c) = self.peek() {
                let exp_sign = (c == b'+' || c == b'-')
                    && matches!(self.src[self.pos - 1], b'e' | b'E')
                    && !self.src[start..self.pos].starts_with(b"0x")
                    && !self.src[start..self.pos].starts_with(b"0X");
                if c.is_ascii_alphanumeric() || c == b'.' || exp_sign {
                    self.bump();
                } else {
                    break;
                }
            }
            Tok::Number(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
        } else if c == b'"' || c == b'\'' {
            Tok::Str(self.string_literal(c, line, column)?)
        } else if b"{}[]()<>;=,.-+:".contains(&c) {
            self.bump();
            Tok::Sym(c as char)
        } else {
            return Err(self.error(line, column, format!("unexpected character `{}`", c as char)));
        };
        Ok(Token { tok, line, column })
    }

    fn string_literal(&mut self, quote: u8, line: usize, column: usize) -> Result<Vec<u8>, SchemaError> {
        self.bump();
        let mut out = Vec::new();
        loop {
            let Some(c) = self.bump() else {
                return Err(self.error(line, column, "unterminated string literal"));
            };
            match c {
                b'\n' => return Err(self.error(line, column, "newline in string literal")),
                c if c == quote => return Ok(out),
                b'\\' => {
                    let Some(e) = self.bump() else {
                        return Err(self.error(line, column, "unterminated string literal"));
                    };
                    match e {
                        b'n' => out.push(b'\n'),
                        b'r' => out.push(b'\r'),
                        b't' => out.push(b'\t'),
                        b'a' => out.push(0x07),
                        b'b' => out.push(0x08),
                        b'f' => out.push(0x0c),
                        b'v' => out.push(0x0b),
                        b'\\' | b'\'' | b'"' | b'?' => out.push(e),
                        b'x' | b'X' => {
                            let mut v: u32 = 0;
                            let mut n = 0;
                            while n < 2 {
                                match self.peek() {
                                    Some(h) if h.is_ascii_hexdigit() => {
                                        v = v * 16 + (h as char).to_digit(16).unwrap();
                                        self.bump();
                                        n += 1;
                                    }
                                    _ => break,
                                }
                            }
                            if n == 0 {
                                return Err(self.error(self.line, self.column, "invalid \\x escape"));
                            }
                            out.push(v as u8);
                        }
                        b'0'..=b'7' => {
                            let mut v: u32 = (e - b'0') as u32;
                            for _ in 0..2 {
                                match self.peek() {
                                    Some(d @ b'0'..=b'7') => {
                                        v = v * 8 + (d - b'0') as u32;
                                        self.bump();
                                    }
                                    _ => break,
                                }
                            }
                            if v > 0xff {
                                return Err(self.error(self.line, self.column, "octal escape out of range"));
                            }
                            out.push(v as u8);
                        }
                        other => {
                            return Err(self.error(
                                self.line,
                                self.column,
                                format!("unknown escape `\\{}`", other as char),
                            ))
                        }
                    }
                }
                c => out.push(c),
            }
        }
    }
}

/// Literal captured from `[default = ...]`, converted once the field type is known.
#[derive(Debug, Clone)]
enum Literal {
    Ident(String),
    Number { negative: bool, text: String },
    Str(Vec<u8>),
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    current: Token,
    package: String,
}

/// Parses `.proto` source text into a file descriptor.
///
/// Names defined in the same file are resolved; references to imported types
/// stay [`FieldType::Unresolved`] until the file is loaded into a pool.
pub fn parse_proto_source(source: &str, filename: &str) -> Result<FileDescriptor, SchemaError> {
    let mut lexer = Lexer {
        src: source.as_bytes(),
        pos: 0,
        line: 1,
        column: 1,
        file: filename,
    };
    let current = lexer.next_token()?;
    let mut p = Parser {
        lexer,
        current,
        package: String::new(),
    };
    let mut file = p.parse_file(filename)?;
    resolve_local(&mut file)?;
    Ok(file)
}

impl<'a> Parser<'a> {
    fn advance(&mut self) -> Result<Token, SchemaError> {
        let next = self.lexer.next_token()?;
        Ok(std::mem::replace(&mut self.current, next))
    }

    fn error_here(&self, message: impl Into<String>) -> SchemaError {
        self.lexer
            .error(self.current.line, self.current.column, message)
    }

    fn describe(tok: &Tok) -> String {
        match tok {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::Str(_) => "string literal".into(),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::Eof => "end of file".into(),
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), SchemaError> {
        if self.current.tok == Tok::Sym(c) {
            self.advance()?;
            Ok(())
        } else {
            Err(self.error_here(format!(
                "expected `{c}`, found {}",
                Self::describe(&self.current.tok)
            )))
        }
    }

    fn eat_sym(&mut self, c: char) -> Result<bool, SchemaError> {
        if self.current.tok == Tok::Sym(c) {
            self.advance()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn is_ident(&self, word: &str) -> bool {
        matches!(&self.current.tok, Tok::Ident(s) if s == word)
    }

    fn expect_ident(&mut self) -> Result<String, SchemaError> {
        match &self.current.tok {
            Tok::Ident(s) => {
                let s = s.clone();
                self.advance()?;
                Ok(s)
            }
            other => Err(self.error_here(format!(
                "expected identifier, found {}",
                Self::describe(other)
            ))),
        }
    }

    /// Dotted name, optionally with a leading dot.
    fn expect_dotted(&mut self) -> Result<String, SchemaError> {
        let mut out = String::new();
        if self.eat_sym('.')? {
            out.push('.');
        }
        out.push_str(&self.expect_ident()?);
        while self.current.tok == Tok::Sym('.') {
            self.advance()?;
            out.push('.');
            out.push_str(&self.expect_ident()?);
        }
        Ok(out)
    }

    fn expect_string(&mut self) -> Result<Vec<u8>, SchemaError> {
        match &self.current.tok {
            Tok::Str(s) => {
                let mut s = s.clone();
                self.advance()?;
                // adjacent literals concatenate
                while let Tok::Str(more) = &self.current.tok {
                    s.extend_from_slice(more);
                    self.advance()?;
                }
                Ok(s)
            }
            other => Err(self.error_here(format!(
                "expected string literal, found {}",
                Self::describe(other)
            ))),
        }
    }

    fn parse_file(&mut self, filename: &str) -> Result<FileDescriptor, SchemaError> {
        let mut file = FileDescriptor {
            filename: filename.to_string(),
            package: String::new(),
            imports: Vec::new(),
            messages: Vec::new(),
            enums: Vec::new(),
        };
        let mut seen_package = false;
        let mut top_names = HashSet::new();
        loop {
            match self.current.tok.clone() {
                Tok::Eof => break,
                Tok::Sym(';') => {
                    self.advance()?;
                }
                Tok::Ident(word) => match word.as_str() {
                    "syntax" => {
                        self.advance()?;
                        self.expect_sym('=')?;
                        let s = self.expect_string()?;
                        if s != b"proto2" {
                            return Err(self.error_here(format!(
                                "unsupported syntax `{}`; only proto2 is accepted",
                                String::from_utf8_lossy(&s)
                            )));
                        }
                        self.expect_sym(';')?;
                    }
                    "package" => {
                        if seen_package {
                            return Err(self.error_here("multiple package declarations"));
                        }
                        self.advance()?;
                        let name = self.expect_dotted()?;
                        if name.starts_with('.') {
                            return Err(self.error_here("package name cannot start with `.`"));
                        }
                        self.expect_sym(';')?;
                        file.package = name.clone();
                        self.package = name;
                        seen_package = true;
                    }
                    "import" => {
                        self.advance()?;
                        if self.is_ident("public") || self.is_ident("weak") {
                            self.advance()?;
                        }
                        let path = self.expect_string()?;
                        self.expect_sym(';')?;
                        file.imports.push(String::from_utf8_lossy(&path).into_owned());
                    }
                    "option" => {
                        // file-level options carry no meaning here; skip them
                        self.advance()?;
                        self.skip_option_body()?;
                    }
                    "message" => {
                        self.advance()?;
                        let scope = self.package.clone();
                        let m = self.parse_message(&scope, None, filename)?;
                        if !top_names.insert(m.name.clone()) {
                            return Err(SchemaError::DuplicateName {
                                scope: filename.to_string(),
                                name: m.name,
                            });
                        }
                        file.messages.push(Arc::new(m));
                    }
                    "enum" => {
                        self.advance()?;
                        let scope = self.package.clone();
                        let e = self.parse_enum(&scope, None)?;
                        if !top_names.insert(e.name.clone()) {
                            return Err(SchemaError::DuplicateName {
                                scope: filename.to_string(),
                                name: e.name,
                            });
                        }
                        file.enums.push(Arc::new(e));
                    }
                    "service" | "extend" => {
                        return Err(self.error_here(format!("`{word}` is not supported")))
                    }
                    _ => return Err(self.error_here(format!("unexpected `{word}` at top level"))),
                },
                other => {
                    return Err(self.error_here(format!(
                        "unexpected {} at top level",
                        Self::describe(&other)
                    )))
                }
            }
        }
        Ok(file)
    }

    fn skip_option_body(&mut self) -> Result<(), SchemaError> {
        if self.eat_sym('(')? {
            self.expect_dotted()?;
            self.expect_sym(')')?;
            while self.eat_sym('.')? {
                self.expect_ident()?;
            }
        } else {
            self.expect_dotted()?;
        }
        self.expect_sym('=')?;
        self.eat_sym('-')?;
        match self.current.tok {
            Tok::Ident(_) | Tok::Number(_) => {
                self.advance()?;
            }
            Tok::Str(_) => {
                self.expect_string()?;
            }
            _ => return Err(self.error_here("expected option value")),
        }
        self.expect_sym(';')
    }

    fn parse_message(
        &mut self,
        scope: &str,
        parent: Option<&str>,
        filename: &str,
    ) -> Result<MessageDescriptor, SchemaError> {
        let name = self.expect_ident()?;
        let full_name = qualify(scope, &name);
        self.expect_sym('{')?;
        let mut msg = MessageDescriptor {
            name,
            full_name: full_name.clone(),
            fields: Vec::new(),
            nested_types: Vec::new(),
            enum_types: Vec::new(),
            containing_type: parent.map(str::to_string),
            file: filename.to_string(),
        };
        let mut type_names = HashSet::new();
        loop {
            match self.current.tok.clone() {
                Tok::Sym('}') => {
                    self.advance()?;
                    break;
                }
                Tok::Sym(';') => {
                    self.advance()?;
                }
                Tok::Ident(word) => match word.as_str() {
                    "message" => {
                        self.advance()?;
                        let nested = self.parse_message(&full_name, Some(&full_name), filename)?;
                        if !type_names.insert(nested.name.clone()) {
                            return Err(SchemaError::DuplicateName {
                                scope: full_name,
                                name: nested.name,
                            });
                        }
                        msg.nested_types.push(Arc::new(nested));
                    }
                    "enum" => {
                        self.advance()?;
                        let e = self.parse_enum(&full_name, Some(&full_name))?;
                        if !type_names.insert(e.name.clone()) {
                            return Err(SchemaError::DuplicateName {
                                scope: full_name,
                                name: e.name,
                            });
                        }
                        msg.enum_types.push(Arc::new(e));
                    }
                    "required" | "optional" | "repeated" => {
                        let field = self.parse_field(&full_name)?;
                        if let Some(prev) = msg.fields.iter().find(|f| f.number == field.number) {
                            return Err(SchemaError::DuplicateTag {
                                message: full_name,
                                number: field.number,
                                first: prev.name.clone(),
                                second: field.name,
                            });
                        }
                        if msg.fields.iter().any(|f| f.name == field.name) {
                            return Err(SchemaError::DuplicateName {
                                scope: full_name,
                                name: field.name,
                            });
                        }
                        msg.fields.push(field);
                    }
                    "oneof" | "extensions" | "extend" | "reserved" | "option" | "map" | "group" => {
                        return Err(self.error_here(format!("`{word}` is not supported")))
                    }
                    _ => {
                        return Err(self.error_here(format!(
                            "expected field label (required, optional, repeated), found `{word}`"
                        )))
                    }
                },
                Tok::Eof => return Err(self.error_here(format!("unterminated message `{}`", msg.name))),
                other => {
                    return Err(self.error_here(format!(
                        "unexpected {} in message body",
                        Self::describe(&other)
                    )))
                }
            }
        }
        Ok(msg)
    }

    fn parse_field(&mut self, scope: &str) -> Result<FieldDescriptor, SchemaError> {
        let label = match self.expect_ident()?.as_str() {
            "required" => Label::Required,
            "optional" => Label::Optional,
            _ => Label::Repeated,
        };
        if self.is_ident("group") {
            return Err(self.error_here("groups are not supported"));
        }
        let type_name = self.expect_dotted()?;
        let ty = FieldType::from_keyword(&type_name).unwrap_or(FieldType::Unresolved(type_name));
        let name = self.expect_ident()?;
        let full_name = qualify(scope, &name);
        self.expect_sym('=')?;
        let negative = self.eat_sym('-')?;
        let number = match &self.current.tok {
            Tok::Number(text) => parse_int_literal(text)
                .map(|v| if negative { -(v as i128) } else { v as i128 })
                .ok_or_else(|| self.error_here(format!("invalid tag number `{text}`")))?,
            other => {
                return Err(self.error_here(format!(
                    "expected tag number, found {}",
                    Self::describe(other)
                )))
            }
        };
        self.advance()?;
        if number < MIN_TAG as i128 || number > MAX_TAG as i128 || RESERVED_TAGS.contains(&(number as u32)) {
            return Err(SchemaError::InvalidTag {
                field: full_name,
                number: number.clamp(i64::MIN as i128, i64::MAX as i128) as i64,
            });
        }
        let number = number as u32;

        let mut packed = None;
        let mut default = None;
        if self.eat_sym('[')? {
            loop {
                let opt = self.expect_ident()?;
                self.expect_sym('=')?;
                match opt.as_str() {
                    "packed" => {
                        if packed.is_some() {
                            return Err(self.error_here("duplicate `packed` option"));
                        }
                        let v = self.expect_ident()?;
                        packed = Some(match v.as_str() {
                            "true" => true,
                            "false" => false,
                            _ => return Err(self.error_here("`packed` expects true or false")),
                        });
                    }
                    "default" => {
                        if default.is_some() {
                            return Err(self.error_here("duplicate `default` option"));
                        }
                        default = Some(self.parse_literal()?);
                    }
                    other => return Err(self.error_here(format!("unsupported field option `{other}`"))),
                }
                if !self.eat_sym(',')? {
                    break;
                }
            }
            self.expect_sym(']')?;
        }
        self.expect_sym(';')?;

        let packed = packed.unwrap_or(false);
        if packed && label != Label::Repeated {
            return Err(SchemaError::InvalidField {
                field: full_name,
                reason: "`packed` is only valid on repeated fields".into(),
            });
        }
        if packed && matches!(ty, FieldType::String | FieldType::Bytes) {
            return Err(SchemaError::InvalidField {
                field: full_name,
                reason: format!("`packed` is not valid on {} fields", ty.kind_name()),
            });
        }
        let default = match default {
            None => None,
            Some(_) if label == Label::Repeated => {
                return Err(SchemaError::InvalidField {
                    field: full_name,
                    reason: "repeated fields cannot have a default".into(),
                })
            }
            Some(lit) => Some(convert_default(&ty, lit).map_err(|reason| SchemaError::InvalidField {
                field: full_name.clone(),
                reason,
            })?),
        };
        Ok(FieldDescriptor {
            name,
            full_name,
            number,
            label,
            ty,
            packed,
            default,
            containing_type: scope.to_string(),
        })
    }

    fn parse_literal(&mut self) -> Result<Literal, SchemaError> {
        let negative = self.eat_sym('-')?;
        let lit = match &self.current.tok {
            Tok::Number(text) => Literal::Number {
                negative,
                text: text.clone(),
            },
            Tok::Ident(word) if negative => Literal::Number {
                negative,
                text: word.clone(),
            },
            Tok::Ident(word) => Literal::Ident(word.clone()),
            Tok::Str(_) if !negative => {
                let s = self.expect_string()?;
                return Ok(Literal::Str(s));
            }
            other => {
                return Err(self.error_here(format!(
                    "expected default value, found {}",
                    Self::describe(other)
                )))
            }
        };
        self.advance()?;
        Ok(lit)
    }

    fn parse_enum(&mut self, scope: &str, parent: Option<&str>) -> Result<EnumDescriptor, SchemaError> {
        let name = self.expect_ident()?;
        let full_name = qualify(scope, &name);
        self.expect_sym('{')?;
        let mut values: Vec<EnumValueDescriptor> = Vec::new();
        loop {
            match self.current.tok.clone() {
                Tok::Sym('}') => {
                    self.advance()?;
                    break;
                }
                Tok::Sym(';') => {
                    self.advance()?;
                }
                Tok::Ident(word) if word == "option" || word == "reserved" => {
                    return Err(self.error_here(format!("`{word}` is not supported in enums")))
                }
                Tok::Ident(value_name) => {
                    self.advance()?;
                    self.expect_sym('=')?;
                    let negative = self.eat_sym('-')?;
                    let number = match &self.current.tok {
                        Tok::Number(text) => parse_int_literal(text)
                            .map(|v| if negative { -(v as i128) } else { v as i128 })
                            .filter(|v| *v >= i32::MIN as i128 && *v <= i32::MAX as i128)
                            .ok_or_else(|| self.error_here(format!("invalid enum value `{text}`")))?,
                        other => {
                            return Err(self.error_here(format!(
                                "expected enum value number, found {}",
                                Self::describe(other)
                            )))
                        }
                    };
                    self.advance()?;
                    if self.current.tok == Tok::Sym('[') {
                        return Err(self.error_here("enum value options are not supported"));
                    }
                    self.expect_sym(';')?;
                    if values.iter().any(|v| v.name == value_name) {
                        return Err(SchemaError::DuplicateName {
                            scope: full_name,
                            name: value_name,
                        });
                    }
                    values.push(EnumValueDescriptor {
                        full_name: qualify(scope, &value_name),
                        name: value_name,
                        number: number as i32,
                    });
                }
                Tok::Eof => return Err(self.error_here(format!("unterminated enum `{name}`"))),
                other => {
                    return Err(self.error_here(format!(
                        "unexpected {} in enum body",
                        Self::describe(&other)
                    )))
                }
            }
        }
        if values.is_empty() {
            return Err(SchemaError::InvalidField {
                field: full_name,
                reason: "enums must declare at least one value".into(),
            });
        }
        Ok(EnumDescriptor {
            name,
            full_name,
            values,
            containing_type: parent.map(str::to_string),
        })
    }
}

/// Decimal, hex (`0x`) or octal (leading `0`) integer literal.
fn parse_int_literal(text: &str) -> Option<u64> {
    if let Some(hex) = text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16).ok()
    } else if text.len() > 1 && text.starts_with('0') {
        u64::from_str_radix(&text[1..], 8).ok()
    } else {
        text.parse().ok()
    }
}

fn parse_float_literal(negative: bool, text: &str) -> Option<f64> {
    let v = match text {
        "inf" | "infinity" => f64::INFINITY,
        "nan" => f64::NAN,
        _ => match parse_int_literal(text) {
            Some(i) if !text.contains(['.', 'e', 'E']) => i as f64,
            _ => text.parse::<f64>().ok()?,
        },
    };
    Some(if negative { -v } else { v })
}

fn convert_default(ty: &FieldType, lit: Literal) -> Result<DefaultValue, String> {
    let bad = |what: &str| format!("default value is not a valid {what}");
    match ty {
        FieldType::Double | FieldType::Float => match lit {
            Literal::Number { negative, text } => parse_float_literal(negative, &text)
                .map(DefaultValue::Float)
                .ok_or_else(|| bad(ty.kind_name())),
            Literal::Ident(word) if word == "inf" || word == "nan" => {
                Ok(DefaultValue::Float(parse_float_literal(false, &word).unwrap()))
            }
            _ => Err(bad(ty.kind_name())),
        },
        FieldType::Int32 | FieldType::Sint32 | FieldType::Sfixed32 | FieldType::Int64 | FieldType::Sint64
        | FieldType::Sfixed64 => {
            let Literal::Number { negative, text } = lit else {
                return Err(bad(ty.kind_name()));
            };
            let magnitude = parse_int_literal(&text).ok_or_else(|| bad(ty.kind_name()))? as i128;
            let v = if negative { -magnitude } else { magnitude };
            let (lo, hi) = if matches!(ty, FieldType::Int64 | FieldType::Sint64 | FieldType::Sfixed64) {
                (i64::MIN as i128, i64::MAX as i128)
            } else {
                (i32::MIN as i128, i32::MAX as i128)
            };
            if v < lo || v > hi {
                return Err(format!("default value out of range for {}", ty.kind_name()));
            }
            Ok(DefaultValue::Int(v as i64))
        }
        FieldType::Uint32 | FieldType::Fixed32 | FieldType::Uint64 | FieldType::Fixed64 => {
            let Literal::Number { negative, text } = lit else {
                return Err(bad(ty.kind_name()));
            };
            let v = parse_int_literal(&text).ok_or_else(|| bad(ty.kind_name()))?;
            let hi = if matches!(ty, FieldType::Uint64 | FieldType::Fixed64) {
                u64::MAX
            } else {
                u32::MAX as u64
            };
            if (negative && v != 0) || v > hi {
                return Err(format!("default value out of range for {}", ty.kind_name()));
            }
            Ok(DefaultValue::UInt(v))
        }
        FieldType::Bool => match lit {
            Literal::Ident(w) if w == "true" => Ok(DefaultValue::Bool(true)),
            Literal::Ident(w) if w == "false" => Ok(DefaultValue::Bool(false)),
            _ => Err(bad("bool")),
        },
        FieldType::String => match lit {
            Literal::Str(bytes) => String::from_utf8(bytes)
                .map(DefaultValue::String)
                .map_err(|_| "string default is not valid UTF-8".to_string()),
            _ => Err(bad("string")),
        },
        FieldType::Bytes => match lit {
            Literal::Str(bytes) => Ok(DefaultValue::Bytes(bytes)),
            _ => Err(bad("bytes")),
        },
        FieldType::Enum(_) | FieldType::Unresolved(_) => match lit {
            Literal::Ident(w) => Ok(DefaultValue::Enum(w)),
            _ => Err("enum default must name a constant".into()),
        },
        FieldType::Message(_) => Err("message fields cannot have a default".into()),
    }
}

/// What a full name denotes when resolving field type references.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TypeKind {
    Message,
    Enum,
}

/// Resolves `name` as written inside `scope` using protobuf's inner-to-outer
/// scoping; a leading dot makes the name absolute.
pub(crate) fn resolve_type_name(
    name: &str,
    scope: &str,
    lookup: impl Fn(&str) -> Option<TypeKind>,
) -> Option<(String, TypeKind)> {
    if let Some(abs) = name.strip_prefix('.') {
        return lookup(abs).map(|k| (abs.to_string(), k));
    }
    let parts: Vec<&str> = if scope.is_empty() {
        Vec::new()
    } else {
        scope.split('.').collect()
    };
    for i in (0..=parts.len()).rev() {
        let candidate = qualify(&parts[..i].join("."), name);
        if let Some(k) = lookup(&candidate) {
            return Some((candidate, k));
        }
    }
    None
}

/// Names declared in `file`, keyed by full name.
pub(crate) fn declared_types(file: &FileDescriptor) -> HashMap<String, TypeKind> {
    let mut out = HashMap::new();
    for m in file.all_messages() {
        out.insert(m.full_name.clone(), TypeKind::Message);
    }
    for e in file.all_enums() {
        out.insert(e.full_name.clone(), TypeKind::Enum);
    }
    out
}

/// Rewrites field types of every message in `file` through `resolve`.
pub(crate) fn map_fields(
    file: &FileDescriptor,
    resolve: &mut impl FnMut(&FieldDescriptor) -> Result<FieldDescriptor, SchemaError>,
) -> Result<FileDescriptor, SchemaError> {
    fn walk(
        m: &MessageDescriptor,
        resolve: &mut impl FnMut(&FieldDescriptor) -> Result<FieldDescriptor, SchemaError>,
    ) -> Result<MessageDescriptor, SchemaError> {
        let mut out = m.clone();
        out.fields = m.fields.iter().map(&mut *resolve).collect::<Result<_, _>>()?;
        out.nested_types = m
            .nested_types
            .iter()
            .map(|n| walk(n, resolve).map(Arc::new))
            .collect::<Result<_, _>>()?;
        Ok(out)
    }
    let mut out = file.clone();
    out.messages = file
        .messages
        .iter()
        .map(|m| walk(m, resolve).map(Arc::new))
        .collect::<Result<_, _>>()?;
    Ok(out)
}

/// Applies a resolved kind to a field, validating kind-dependent options.
pub(crate) fn bind_field_type(
    field: &FieldDescriptor,
    full: String,
    kind: TypeKind,
) -> Result<FieldDescriptor, SchemaError> {
    let mut f = field.clone();
    match kind {
        TypeKind::Enum => f.ty = FieldType::Enum(full),
        TypeKind::Message => {
            if f.packed {
                return Err(SchemaError::InvalidField {
                    field: f.full_name.clone(),
                    reason: "`packed` is not valid on message fields".into(),
                });
            }
            if f.default.is_some() {
                return Err(SchemaError::InvalidField {
                    field: f.full_name.clone(),
                    reason: "message fields cannot have a default".into(),
                });
            }
            f.ty = FieldType::Message(full);
        }
    }
    Ok(f)
}

fn resolve_local(file: &mut FileDescriptor) -> Result<(), SchemaError> {
    let declared = declared_types(file);
    let resolved = map_fields(file, &mut |f| match &f.ty {
        FieldType::Unresolved(name) => {
            match resolve_type_name(name, &f.containing_type, |n| declared.get(n).copied()) {
                Some((full, kind)) => bind_field_type(f, full, kind),
                None => Ok(f.clone()),
            }
        }
        _ => Ok(f.clone()),
    })?;
    // enum defaults can be checked once the enum is known locally
    let enums: HashMap<String, Arc<EnumDescriptor>> = resolved
        .all_enums()
        .into_iter()
        .map(|e| (e.full_name.clone(), e))
        .collect();
    for m in resolved.all_messages() {
        for f in &m.fields {
            check_enum_default(f, |n| enums.get(n).cloned())?;
        }
    }
    *file = resolved;
    Ok(())
}

pub(crate) fn check_enum_default(
    f: &FieldDescriptor,
    enum_by_name: impl Fn(&str) -> Option<Arc<EnumDescriptor>>,
) -> Result<(), SchemaError> {
    if let (FieldType::Enum(en), Some(DefaultValue::Enum(constant))) = (&f.ty, &f.default) {
        if let Some(e) = enum_by_name(en) {
            if !e.has(constant) {
                return Err(SchemaError::InvalidField {
                    field: f.full_name.clone(),
                    reason: format!("default `{constant}` is not a constant of `{en}`"),
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str) -> Result<FileDescriptor, SchemaError> {
        parse_proto_source(src, "test.proto")
    }

    #[test]
    fn package_only() {
        let f = parse("package x;").unwrap();
        assert_eq!(f.package(), "x");
        assert!(f.messages().is_empty());
        assert!(f.enums().is_empty());
    }

    #[test]
    fn comments_and_nested_resolution() {
        let f = parse(
            "// leading\npackage a.b; /* block\n comment */\nmessage Outer {\n  enum Kind { X = 0; Y = -1; }\n  message Inner { optional Kind k = 1 [default = Y]; }\n  repeated Inner inner = 1;\n  optional .a.b.Outer.Kind kind = 2;\n}\n",
        )
        .unwrap();
        let outer = &f.messages()[0];
        assert_eq!(outer.full_name(), "a.b.Outer");
        let inner = &outer.nested_types()[0];
        assert_eq!(inner.full_name(), "a.b.Outer.Inner");
        assert_eq!(inner.containing_type(), Some("a.b.Outer"));
        assert_eq!(inner.fields()[0].field_type(), &FieldType::Enum("a.b.Outer.Kind".into()));
        assert_eq!(outer.fields()[0].field_type(), &FieldType::Message("a.b.Outer.Inner".into()));
        assert_eq!(outer.fields()[1].type_ref(), Some("a.b.Outer.Kind"));
        assert_eq!(outer.enum_types()[0].values()[1].number(), -1);
    }

    #[test]
    fn unknown_names_stay_pending() {
        let f = parse("package p; import \"other.proto\"; message M { optional Remote r = 1; }").unwrap();
        assert_eq!(f.imports(), ["other.proto".to_string()]);
        assert_eq!(f.messages()[0].fields()[0].field_type(), &FieldType::Unresolved("Remote".into()));
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse("package p;\nmessage M {\n  optional int32 = 1;\n}").unwrap_err();
        match err {
            SchemaError::Syntax { line, column, .. } => {
                assert_eq!((line, column), (3, 18));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_tag_rejected() {
        let err = parse("message M { optional int32 a = 1; optional int32 b = 1; }").unwrap_err();
        assert!(matches!(err, SchemaError::DuplicateTag { number: 1, .. }), "{err}");
    }

    #[test]
    fn duplicate_field_name_rejected() {
        let err = parse("message M { optional int32 a = 1; optional int32 a = 2; }").unwrap_err();
        assert!(matches!(err, SchemaError::DuplicateName { .. }), "{err}");
    }

    #[test]
    fn bad_tags_rejected() {
        for tag in ["0", "-3", "19000", "19999", "536870912"] {
            let err = parse(&format!("message M {{ optional int32 a = {tag}; }}")).unwrap_err();
            assert!(matches!(err, SchemaError::InvalidTag { .. }), "{tag}: {err}");
        }
        parse("message M { optional int32 a = 18999; optional int32 b = 20000; optional int32 c = 536870911; }")
            .unwrap();
    }

    #[test]
    fn packed_validation() {
        assert!(parse("message M { optional int32 a = 1 [packed=true]; }").is_err());
        assert!(parse("message M { repeated string a = 1 [packed=true]; }").is_err());
        assert!(parse("message M { message N {} repeated N a = 1 [packed=true]; }").is_err());
        let f = parse("message M { enum E { A = 0; } repeated E a = 1 [packed=true]; }").unwrap();
        assert!(f.messages()[0].fields()[0].is_packed());
    }

    #[test]
    fn defaults_are_typed() {
        let f = parse(
            "message M {\n optional double d = 1 [default = -1.5e3];\n optional uint32 u = 2 [default = 0x10];\n optional string s = 3 [default = \"a\\n\\x41\" \"b\"];\n optional bool b = 4 [default = true];\n optional float f = 5 [default = -inf];\n optional int64 i = 6 [default = -9223372036854775808];\n}",
        )
        .unwrap();
        let fs = f.messages()[0].fields();
        assert_eq!(fs[0].default_value(), Some(&DefaultValue::Float(-1500.0)));
        assert_eq!(fs[1].default_value(), Some(&DefaultValue::UInt(16)));
        assert_eq!(fs[2].default_value(), Some(&DefaultValue::String("a\nAb".into())));
        assert_eq!(fs[3].default_value(), Some(&DefaultValue::Bool(true)));
        assert_eq!(fs[4].default_value(), Some(&DefaultValue::Float(f64::NEG_INFINITY)));
        assert_eq!(fs[5].default_value(), Some(&DefaultValue::Int(i64::MIN)));
    }

    #[test]
    fn bad_defaults_rejected() {
        assert!(parse("message M { optional int32 a = 1 [default = \"x\"]; }").is_err());
        assert!(parse("message M { optional int32 a = 1 [default = 2147483648]; }").is_err());
        assert!(parse("message M { optional uint32 a = 1 [default = -1]; }").is_err());
        assert!(parse("message M { optional bool a = 1 [default = 1]; }").is_err());
        assert!(parse("message M { repeated int32 a = 1 [default = 1]; }").is_err());
        assert!(parse("message M { enum E { A = 0; } optional E a = 1 [default = B]; }").is_err());
    }

    #[test]
    fn unsupported_constructs_rejected() {
        for src in [
            "syntax = \"proto3\";",
            "service S {}",
            "message M { oneof o { int32 a = 1; } }",
            "message M { extensions 100 to 200; }",
            "message M { repeated group G = 1 { } }",
            "message M { optional int32 a = 1 [deprecated = true]; }",
            "enum E { option allow_alias = true; A = 0; }",
            "enum E { }",
        ] {
            assert!(parse(src).is_err(), "{src}");
        }
    }

    #[test]
    fn enum_aliases_allowed() {
        let f = parse("enum E { A = 1; B = 1; }").unwrap();
        let e = &f.enums()[0];
        assert_eq!(e.value_by_number(1).unwrap().name(), "A");
    }

    #[test]
    fn identifiers_cannot_start_with_digit() {
        assert!(parse("message 9M {}").is_err());
    }

    #[test]
    fn unterminated_comment_and_string() {
        assert!(parse("/* never closed").is_err());
        assert!(parse("import \"x.proto;").is_err());
    }
}

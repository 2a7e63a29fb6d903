use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use super::parser::{bind_field_type, check_enum_default, declared_types, map_fields, resolve_type_name, TypeKind};
use super::{EnumDescriptor, FieldDescriptor, FieldType, FileDescriptor, MessageDescriptor, SchemaError};

/// A field addressed through its containing message.
#[derive(Debug, Clone)]
pub struct FieldRef {
    message: Arc<MessageDescriptor>,
    index: usize,
}

impl FieldRef {
    pub fn message(&self) -> &Arc<MessageDescriptor> {
        &self.message
    }
}

impl Deref for FieldRef {
    type Target = FieldDescriptor;
    fn deref(&self) -> &FieldDescriptor {
        &self.message.fields[self.index]
    }
}

/// Any descriptor reachable by full name.
#[derive(Debug, Clone)]
pub enum Descriptor {
    Message(Arc<MessageDescriptor>),
    Enum(Arc<EnumDescriptor>),
    Field(FieldRef),
}

impl Descriptor {
    pub fn full_name(&self) -> &str {
        match self {
            Descriptor::Message(m) => m.full_name(),
            Descriptor::Enum(e) => e.full_name(),
            Descriptor::Field(f) => f.full_name(),
        }
    }

    pub fn as_message(&self) -> Option<&Arc<MessageDescriptor>> {
        match self {
            Descriptor::Message(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_enum(&self) -> Option<&Arc<EnumDescriptor>> {
        match self {
            Descriptor::Enum(e) => Some(e),
            _ => None,
        }
    }
}

impl fmt::Display for Descriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Descriptor::Message(m) => m.fmt(f),
            Descriptor::Enum(e) => e.fmt(f),
            Descriptor::Field(x) => (**x).fmt(f),
        }
    }
}

#[derive(Debug, Default)]
struct PoolInner {
    files: Vec<Arc<FileDescriptor>>,
    messages: HashMap<String, Arc<MessageDescriptor>>,
    enums: HashMap<String, Arc<EnumDescriptor>>,
}

/// Registry of loaded descriptors keyed by fully qualified name.
///
/// A pool is immutable: [`DescriptorPool::load`] returns a new pool and leaves
/// the receiver untouched. Clones share storage and may be sent across threads.
#[derive(Debug, Clone, Default)]
pub struct DescriptorPool {
    inner: Arc<PoolInner>,
}

impl DescriptorPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `files`, resolving imported type references.
    ///
    /// Reloading a structurally identical definition is a no-op; a different
    /// definition under an existing full name is a [`SchemaError::Conflict`].
    pub fn load(&self, files: Vec<FileDescriptor>) -> Result<DescriptorPool, SchemaError> {
        let known_files: Vec<&str> = self
            .inner
            .files
            .iter()
            .map(|f| f.filename.as_str())
            .chain(files.iter().map(|f| f.filename.as_str()))
            .collect();
        for f in &files {
            for import in &f.imports {
                if !known_files.iter().any(|k| import_matches(k, import)) {
                    return Err(SchemaError::UnresolvedImport {
                        file: f.filename.clone(),
                        import: import.clone(),
                    });
                }
            }
        }

        let mut kinds: HashMap<String, TypeKind> = HashMap::new();
        for name in self.inner.messages.keys() {
            kinds.insert(name.clone(), TypeKind::Message);
        }
        for name in self.inner.enums.keys() {
            kinds.insert(name.clone(), TypeKind::Enum);
        }
        for f in &files {
            for (name, kind) in declared_types(f) {
                match kinds.get(&name) {
                    Some(k) if *k != kind => return Err(SchemaError::Conflict { name }),
                    _ => {
                        kinds.insert(name, kind);
                    }
                }
            }
        }

        let mut resolved = Vec::with_capacity(files.len());
        for f in &files {
            resolved.push(map_fields(f, &mut |field| match &field.ty {
                FieldType::Unresolved(name) => {
                    match resolve_type_name(name, &field.containing_type, |n| kinds.get(n).copied()) {
                        Some((full, kind)) => bind_field_type(field, full, kind),
                        None => Err(SchemaError::UnknownType {
                            name: name.clone(),
                            scope: field.containing_type.clone(),
                        }),
                    }
                }
                _ => Ok(field.clone()),
            })?);
        }

        let mut inner = PoolInner {
            files: self.inner.files.clone(),
            messages: self.inner.messages.clone(),
            enums: self.inner.enums.clone(),
        };
        for file in resolved {
            for m in file.all_messages() {
                match inner.messages.get(&m.full_name) {
                    Some(existing) if **existing != *m => {
                        return Err(SchemaError::Conflict { name: m.full_name.clone() })
                    }
                    Some(_) => {}
                    None => {
                        inner.messages.insert(m.full_name.clone(), m);
                    }
                }
            }
            for e in file.all_enums() {
                match inner.enums.get(&e.full_name) {
                    Some(existing) if **existing != *e => {
                        return Err(SchemaError::Conflict { name: e.full_name.clone() })
                    }
                    Some(_) => {}
                    None => {
                        inner.enums.insert(e.full_name.clone(), e);
                    }
                }
            }
            match inner.files.iter().find(|f| f.filename == file.filename) {
                Some(existing) if **existing != file => {
                    return Err(SchemaError::Conflict { name: file.filename.clone() })
                }
                Some(_) => {}
                None => inner.files.push(Arc::new(file)),
            }
        }

        for m in inner.messages.values() {
            for f in &m.fields {
                check_enum_default(f, |n| inner.enums.get(n).cloned())?;
            }
        }
        Ok(DescriptorPool { inner: Arc::new(inner) })
    }

    /// Exact full-name lookup of a message, enum, or field (`pkg.Msg.field`).
    pub fn lookup(&self, full_name: &str) -> Option<Descriptor> {
        if let Some(m) = self.inner.messages.get(full_name) {
            return Some(Descriptor::Message(m.clone()));
        }
        if let Some(e) = self.inner.enums.get(full_name) {
            return Some(Descriptor::Enum(e.clone()));
        }
        let (parent, field) = full_name.rsplit_once('.')?;
        let message = self.inner.messages.get(parent)?;
        let index = message.fields.iter().position(|f| f.name == field)?;
        Some(Descriptor::Field(FieldRef {
            message: message.clone(),
            index,
        }))
    }

    pub fn message(&self, full_name: &str) -> Option<Arc<MessageDescriptor>> {
        self.inner.messages.get(full_name).cloned()
    }

    pub fn enum_type(&self, full_name: &str) -> Option<Arc<EnumDescriptor>> {
        self.inner.enums.get(full_name).cloned()
    }

    /// Descriptor of the message enclosing `message`, if nested.
    pub fn containing_type(&self, message: &MessageDescriptor) -> Option<Arc<MessageDescriptor>> {
        message.containing_type().and_then(|n| self.message(n))
    }

    pub fn file(&self, filename: &str) -> Option<Arc<FileDescriptor>> {
        self.inner.files.iter().find(|f| f.filename == filename).cloned()
    }

    /// File descriptor that declared `message`.
    pub fn file_of(&self, message: &MessageDescriptor) -> Option<Arc<FileDescriptor>> {
        self.file(message.file_name())
    }

    pub fn files(&self) -> &[Arc<FileDescriptor>] {
        &self.inner.files
    }

    /// Sorted full names of every registered message and enum.
    pub fn names(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self.inner.messages.keys().chain(self.inner.enums.keys()).collect();
        set.into_iter().cloned().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.inner.messages.is_empty() && self.inner.enums.is_empty() && self.inner.files.is_empty()
    }
}

/// An import path is satisfied by a file whose name equals it or ends with `/import`.
fn import_matches(filename: &str, import: &str) -> bool {
    let filename = filename.replace('\\', "/");
    filename == import || filename.ends_with(&format!("/{import}"))
}

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use super::{parse_proto_source, DescriptorPool, FileDescriptor, SchemaError};

/// Reads `.proto` files from disk, following imports through a search path.
///
/// Imports are looked up in each search directory in order, then next to the
/// importing file.
#[derive(Debug, Clone, Default)]
pub struct ProtoLoader {
    search_paths: Vec<PathBuf>,
}

impl ProtoLoader {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_search_paths<I, P>(paths: I) -> Self
    where
        I: IntoIterator<Item = P>,
        P: Into<PathBuf>,
    {
        Self {
            search_paths: paths.into_iter().map(Into::into).collect(),
        }
    }

    pub fn add_search_path(&mut self, path: impl Into<PathBuf>) {
        self.search_paths.push(path.into());
    }

    pub fn search_paths(&self) -> &[PathBuf] {
        &self.search_paths
    }

    /// Parses every path (a `.proto` file, or a directory whose `.proto`
    /// files are all taken) plus transitive imports, in dependency order.
    pub fn read<P: AsRef<Path>>(&self, paths: &[P]) -> Result<Vec<FileDescriptor>, SchemaError> {
        let mut state = ReadState::default();
        for p in paths {
            let p = p.as_ref();
            if p.is_dir() {
                let mut entries: Vec<PathBuf> = fs::read_dir(p)
                    .map_err(|e| io_error(p, e))?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|e| e.extension().is_some_and(|x| x == "proto") && e.is_file())
                    .collect();
                entries.sort();
                for e in entries {
                    self.visit(&e, &mut state)?;
                }
            } else {
                self.visit(p, &mut state)?;
            }
        }
        Ok(state.out)
    }

    /// Reads `paths` and loads the result into `pool`.
    pub fn load_into<P: AsRef<Path>>(
        &self,
        pool: &DescriptorPool,
        paths: &[P],
    ) -> Result<DescriptorPool, SchemaError> {
        pool.load(self.read(paths)?)
    }

    fn visit(&self, path: &Path, state: &mut ReadState) -> Result<(), SchemaError> {
        let canonical = fs::canonicalize(path).map_err(|e| io_error(path, e))?;
        if let Some(pos) = state.stack.iter().position(|p| *p == canonical) {
            let mut chain: Vec<String> = state.stack[pos..]
                .iter()
                .map(|p| p.display().to_string())
                .collect();
            chain.push(canonical.display().to_string());
            return Err(SchemaError::CircularImport { chain });
        }
        if state.done.contains(&canonical) {
            return Ok(());
        }
        let source = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        let file = parse_proto_source(&source, &path.display().to_string())?;
        state.stack.push(canonical.clone());
        for import in &file.imports {
            let found = self.locate(import, path).ok_or_else(|| SchemaError::UnresolvedImport {
                file: file.filename.clone(),
                import: import.clone(),
            })?;
            self.visit(&found, state)?;
        }
        state.stack.pop();
        state.done.insert(canonical);
        state.out.push(file);
        Ok(())
    }

    fn locate(&self, import: &str, from: &Path) -> Option<PathBuf> {
        self.search_paths
            .iter()
            .map(|dir| dir.join(import))
            .chain(from.parent().map(|dir| dir.join(import)))
            .find(|p| p.is_file())
    }
}

#[derive(Default)]
struct ReadState {
    stack: Vec<PathBuf>,
    done: HashSet<PathBuf>,
    out: Vec<FileDescriptor>,
}

fn io_error(path: &Path, e: std::io::Error) -> SchemaError {
    SchemaError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

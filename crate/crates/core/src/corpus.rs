//! A corpus is a set of parsed units under one root directory. The first
//! path component of every file is its project; class names resolve within
//! a project.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;
use walkdir::WalkDir;

use crate::frontend::{
    parse_unit, print_unit, ClassDecl, ClassId, FrontendError, MethodDecl, MethodId, SourceUnit,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error(transparent)]
    Parse(#[from] FrontendError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus root {0} does not exist")]
    MissingRoot(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub units: Vec<SourceUnit>,
}

impl Corpus {
    pub fn new(mut units: Vec<SourceUnit>) -> Self {
        units.sort_by(|a, b| a.file_path.cmp(&b.file_path));
        Self { units }
    }

    /// Parses every `.java` file below `root`, in path order. File paths are
    /// stored relative to `root` with `/` separators.
    pub fn load(root: &Path) -> Result<Self, CorpusError> {
        if !root.is_dir() {
            return Err(CorpusError::MissingRoot(root.to_path_buf()));
        }
        let mut files: Vec<(String, PathBuf)> = Vec::new();
        for entry in WalkDir::new(root).sort_by_file_name() {
            let entry = entry.map_err(|e| CorpusError::Io {
                path: root.to_path_buf(),
                source: e.into(),
            })?;
            let path = entry.path();
            if entry.file_type().is_file() && path.extension().is_some_and(|e| e == "java") {
                let rel = path.strip_prefix(root).unwrap_or(path);
                let rel = rel
                    .components()
                    .map(|c| c.as_os_str().to_string_lossy())
                    .collect::<Vec<_>>()
                    .join("/");
                files.push((rel, path.to_path_buf()));
            }
        }
        let units = files
            .par_iter()
            .map(|(rel, path)| {
                let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
                    path: path.clone(),
                    source,
                })?;
                Ok(parse_unit(&text, rel)?)
            })
            .collect::<Result<Vec<_>, CorpusError>>()?;
        Ok(Self::new(units))
    }

    /// Writes every unit below `root` using the printer.
    pub fn write(&self, root: &Path) -> Result<(), CorpusError> {
        for u in &self.units {
            let path = root.join(&u.file_path);
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir).map_err(|source| CorpusError::Io {
                    path: dir.to_path_buf(),
                    source,
                })?;
            }
            fs::write(&path, print_unit(u)).map_err(|source| CorpusError::Io { path, source })?;
        }
        Ok(())
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassDecl> {
        self.units.iter().flat_map(|u| u.classes.iter())
    }

    pub fn methods(&self) -> impl Iterator<Item = (&ClassDecl, &MethodDecl)> {
        self.classes()
            .flat_map(|c| c.methods.iter().map(move |m| (c, m)))
    }

    pub fn method_count(&self) -> usize {
        self.units.iter().map(SourceUnit::method_count).sum()
    }

    pub fn class(&self, id: &ClassId) -> Option<&ClassDecl> {
        self.units
            .iter()
            .filter(|u| u.file_path == id.file())
            .flat_map(|u| u.classes.iter())
            .find(|c| &c.id == id)
    }

    pub fn class_mut(&mut self, id: &ClassId) -> Option<&mut ClassDecl> {
        self.units
            .iter_mut()
            .filter(|u| u.file_path == id.file())
            .flat_map(|u| u.classes.iter_mut())
            .find(|c| &c.id == id)
    }

    pub fn method(&self, id: &MethodId) -> Option<(&ClassDecl, &MethodDecl)> {
        crate::frontend::find_enclosing(&self.units, id).ok()
    }

    /// Project names in sorted order.
    pub fn projects(&self) -> Vec<String> {
        let mut p: Vec<String> = self.classes().map(|c| c.id.project().to_string()).collect();
        p.sort();
        p.dedup();
        p
    }

    /// Units of one project as a corpus of their own.
    pub fn project(&self, name: &str) -> Corpus {
        Corpus::new(
            self.units
                .iter()
                .filter(|u| project_of_file(&u.file_path) == name)
                .cloned()
                .collect(),
        )
    }

    /// Index from (project, class name) to class ids.
    pub fn class_index(&self) -> ClassIndex {
        let mut by_name: HashMap<(String, String), Vec<ClassId>> = HashMap::new();
        for c in self.classes() {
            by_name
                .entry((c.id.project().to_string(), c.name.clone()))
                .or_default()
                .push(c.id.clone());
        }
        ClassIndex { by_name }
    }

    /// Structural equality that ignores the order of methods within a class.
    pub fn same_structure(&self, other: &Corpus) -> bool {
        canonical(self) == canonical(other)
    }
}

fn project_of_file(file: &str) -> &str {
    file.split_once('/').map(|(p, _)| p).unwrap_or("")
}

fn canonical(c: &Corpus) -> Corpus {
    let mut c = c.clone();
    for u in &mut c.units {
        for class in &mut u.classes {
            class
                .methods
                .sort_by(|a, b| (&a.name, a.arity()).cmp(&(&b.name, b.arity())));
        }
    }
    c
}

#[derive(Debug, Clone, Default)]
pub struct ClassIndex {
    by_name: HashMap<(String, String), Vec<ClassId>>,
}

impl ClassIndex {
    /// The unique class called `name` in `project`; ambiguous names do not resolve.
    pub fn resolve(&self, project: &str, name: &str) -> Option<&ClassId> {
        match self.by_name.get(&(project.to_string(), name.to_string())) {
            Some(ids) if ids.len() == 1 => Some(&ids[0]),
            _ => None,
        }
    }
}

/// Method count per class, for quick before/after comparisons.
pub fn methods_per_class(corpus: &Corpus) -> BTreeMap<ClassId, usize> {
    corpus
        .classes()
        .map(|c| (c.id.clone(), c.methods.len()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn load_and_write_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("corpus");
        fs::create_dir_all(root.join("p1/sub")).unwrap();
        fs::create_dir_all(root.join("p2")).unwrap();
        fs::write(
            root.join("p1/A.java"),
            "class A { int f(B b) { return b.g(); } }",
        )
        .unwrap();
        fs::write(
            root.join("p1/sub/B.java"),
            "class B { int g() { return 1; } }",
        )
        .unwrap();
        fs::write(root.join("p2/A.java"), "class A {}").unwrap();
        fs::write(root.join("p2/notes.txt"), "ignored").unwrap();

        let c = Corpus::load(&root).unwrap();
        assert_eq!(c.units.len(), 3);
        assert_eq!(c.projects(), vec!["p1".to_string(), "p2".to_string()]);
        assert_eq!(c.units[1].file_path, "p1/sub/B.java");
        let idx = c.class_index();
        assert_eq!(
            idx.resolve("p1", "B"),
            Some(&ClassId::new("p1/sub/B.java", "B"))
        );
        assert_eq!(idx.resolve("p2", "B"), None);
        assert_eq!(c.project("p1").units.len(), 2);

        let out = dir.path().join("out");
        c.write(&out).unwrap();
        assert_eq!(Corpus::load(&out).unwrap(), c);
    }

    #[test]
    fn parse_errors_carry_file() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("p")).unwrap();
        fs::write(dir.path().join("p/Bad.java"), "class A { public int x; }").unwrap();
        let err = Corpus::load(dir.path()).unwrap_err().to_string();
        assert!(err.starts_with("p/Bad.java:1:"), "{err}");
    }
}

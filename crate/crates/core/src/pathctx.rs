//! Path-contexts: leaf pairs joined by their syntactic path through the
//! lowest common ancestor.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::frontend::{AstNode, MethodDecl, MethodId, NodeKind};

/// Placeholder substituted for the method's own name inside its bag.
pub const METHOD_NAME: &str = "METHOD_NAME";

pub const UP: char = '↑';
pub const DOWN: char = '↓';

/// A syntactic path between two leaves.
///
/// `up` runs from the start leaf towards (not including) the common ancestor,
/// `down` from below the ancestor to the end leaf. Leaf labels are part of
/// the path; leaf tokens are not.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AstPath {
    pub up: Vec<NodeKind>,
    pub apex: NodeKind,
    pub down: Vec<NodeKind>,
}

impl AstPath {
    /// Number of nodes on the path, both leaf labels included.
    pub fn len(&self) -> usize {
        self.up.len() + 1 + self.down.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl FromStr for AstPath {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let kind =
            |k: &str| NodeKind::from_name(k).ok_or_else(|| format!("unknown node label {k:?}"));
        let mut parts = s.split(DOWN);
        let head = parts.next().unwrap_or("");
        let mut up: Vec<NodeKind> = head.split(UP).map(kind).collect::<Result<_, _>>()?;
        let apex = up.pop().ok_or_else(|| "empty path".to_string())?;
        let down = parts.map(kind).collect::<Result<_, _>>()?;
        Ok(AstPath { up, apex, down })
    }
}

impl fmt::Display for AstPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&path_to_string(self))
    }
}

/// `Name↑BinaryExpression↑...↑Apex↓...↓Name`.
pub fn path_to_string(path: &AstPath) -> String {
    let mut s = String::new();
    for k in &path.up {
        s.push_str(k.as_str());
        s.push(UP);
    }
    s.push_str(path.apex.as_str());
    for k in &path.down {
        s.push(DOWN);
        s.push_str(k.as_str());
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PathContext {
    pub start_token: String,
    pub path: AstPath,
    pub end_token: String,
}

impl PathContext {
    pub fn path_string(&self) -> String {
        path_to_string(&self.path)
    }
}

impl FromStr for PathContext {
    type Err = String;

    /// Parses `start,path,end`. Tokens never contain commas.
    fn from_str(s: &str) -> Result<Self, String> {
        let (start, rest) = s
            .split_once(',')
            .ok_or_else(|| format!("malformed context {s:?}"))?;
        let (path, end) = rest
            .rsplit_once(',')
            .ok_or_else(|| format!("malformed context {s:?}"))?;
        Ok(PathContext {
            start_token: start.to_string(),
            path: path.parse()?,
            end_token: end.to_string(),
        })
    }
}

impl Serialize for PathContext {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PathContext {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for PathContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.start_token, self.path, self.end_token)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractionLimits {
    pub max_length: usize,
    pub max_width: usize,
    pub max_contexts: usize,
    pub seed: u64,
}

impl Default for ExtractionLimits {
    fn default() -> Self {
        Self {
            max_length: 8,
            max_width: 2,
            max_contexts: 200,
            seed: 0,
        }
    }
}

impl ExtractionLimits {
    pub fn unlimited() -> Self {
        Self {
            max_length: usize::MAX,
            max_width: usize::MAX,
            max_contexts: usize::MAX,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.max_length == 0 || self.max_width == 0 || self.max_contexts == 0 {
            return Err("extraction limits must be positive".into());
        }
        Ok(())
    }
}

/// Bag of path-contexts for one method.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextBag {
    pub method_id: MethodId,
    pub contexts: Vec<PathContext>,
    /// Set when the body had fewer than two leaves; `contexts` is then empty.
    pub empty_body: bool,
}

impl ContextBag {
    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    /// One `method_id TAB start,path,end TAB ...` line.
    pub fn to_line(&self) -> String {
        let mut s = self.method_id.0.clone();
        for c in &self.contexts {
            s.push('\t');
            s.push_str(&c.to_string());
        }
        s
    }

    /// Inverse of [`ContextBag::to_line`]. A line without contexts yields an
    /// empty, flagged bag.
    pub fn from_line(line: &str) -> Result<Self, String> {
        let mut parts = line.split('\t');
        let id = parts
            .next()
            .filter(|s| !s.is_empty())
            .ok_or("missing method id")?;
        let contexts = parts
            .map(str::parse)
            .collect::<Result<Vec<PathContext>, _>>()?;
        Ok(ContextBag {
            method_id: MethodId(id.to_string()),
            empty_body: contexts.is_empty(),
            contexts,
        })
    }
}

/// Identifiers verbatim, numbers to `NUM`, strings to `STR`; other literals kept.
pub fn normalize_token(leaf: &AstNode) -> String {
    let tok = leaf.token_str();
    if leaf.kind == NodeKind::Literal {
        if tok.starts_with('"') {
            return "STR".to_string();
        }
        if tok.starts_with(|c: char| c.is_ascii_digit()) {
            return "NUM".to_string();
        }
    }
    tok.to_string()
}

struct LeafInfo {
    /// Child indices from the root down to the leaf.
    route: Vec<usize>,
    /// Labels from the root down to the leaf, same length as `route` + 1.
    labels: Vec<NodeKind>,
}

fn collect(
    node: &AstNode,
    route: &mut Vec<usize>,
    labels: &mut Vec<NodeKind>,
    out: &mut Vec<LeafInfo>,
) {
    labels.push(node.kind);
    if node.token.is_some() {
        out.push(LeafInfo {
            route: route.clone(),
            labels: labels.clone(),
        });
    }
    for (i, c) in node.children.iter().enumerate() {
        route.push(i);
        collect(c, route, labels, out);
        route.pop();
    }
    labels.pop();
}

/// All leaf-pair contexts of `root` in source order that satisfy the length
/// and width limits. No sampling.
pub fn enumerate_contexts(
    root: &AstNode,
    max_length: usize,
    max_width: usize,
) -> Vec<(usize, usize, AstPath)> {
    let mut leaves = Vec::new();
    collect(root, &mut Vec::new(), &mut Vec::new(), &mut leaves);
    let mut out = Vec::new();
    for i in 0..leaves.len() {
        for j in (i + 1)..leaves.len() {
            let (a, b) = (&leaves[i], &leaves[j]);
            let shared = a
                .route
                .iter()
                .zip(&b.route)
                .take_while(|(x, y)| x == y)
                .count();
            // The ancestor sits at depth `shared`; its children on the path are route[shared].
            let up_len = a.labels.len() - shared - 1;
            let down_len = b.labels.len() - shared - 1;
            if up_len + down_len + 1 > max_length {
                continue;
            }
            let width = a.route[shared].abs_diff(b.route[shared]);
            if width > max_width {
                continue;
            }
            let up: Vec<NodeKind> = a.labels[shared + 1..].iter().rev().copied().collect();
            let down: Vec<NodeKind> = b.labels[shared + 1..].to_vec();
            out.push((
                i,
                j,
                AstPath {
                    up,
                    apex: a.labels[shared],
                    down,
                },
            ));
        }
    }
    out
}

/// FNV-1a; stable across platforms and releases.
pub(crate) fn stable_hash(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Extracts the bag of path-contexts of a method.
///
/// Paths run over the whole declaration (return type, name, parameters and
/// body); the method's own name is masked as [`METHOD_NAME`] wherever it
/// appears as a token. Bodies with fewer than two leaves produce an empty
/// bag flagged with `empty_body`.
pub fn extract_contexts(method: &MethodDecl, limits: &ExtractionLimits) -> ContextBag {
    if method.body.leaves().len() < 2 {
        return ContextBag {
            method_id: method.id.clone(),
            contexts: Vec::new(),
            empty_body: true,
        };
    }
    let tree = method.declaration_tree();
    let leaves = tree.leaves();
    let tokens: Vec<String> = leaves
        .iter()
        .map(|l| {
            let t = normalize_token(l);
            if l.kind == NodeKind::Name && t == method.name {
                METHOD_NAME.to_string()
            } else {
                t
            }
        })
        .collect();

    let mut all = enumerate_contexts(&tree, limits.max_length, limits.max_width);
    if all.len() > limits.max_contexts {
        let mut rng = ChaCha8Rng::seed_from_u64(limits.seed ^ stable_hash(&method.id.0));
        let mut keep = index::sample(&mut rng, all.len(), limits.max_contexts).into_vec();
        keep.sort_unstable();
        let mut it = keep.into_iter().peekable();
        let mut idx = 0usize;
        all.retain(|_| {
            let hit = it.peek() == Some(&idx);
            if hit {
                it.next();
            }
            idx += 1;
            hit
        });
    }
    let contexts = all
        .into_iter()
        .map(|(i, j, path)| PathContext {
            start_token: tokens[i].clone(),
            path,
            end_token: tokens[j].clone(),
        })
        .collect();
    ContextBag {
        method_id: method.id.clone(),
        contexts,
        empty_body: false,
    }
}

//! Movable-method detection, synthetic Move Method injection and labeled
//! dataset construction.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ClassIndex, Corpus};
use crate::embed::CodeVector;
use crate::featurize::{class_embedding, make_pair_vector};
use crate::frontend::{AstNode, ClassDecl, ClassId, MethodDecl, MethodId, NodeKind, SourcePos};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum InjectError {
    #[error("{method} cannot be moved: {reason}")]
    NotMovable { method: MethodId, reason: String },
    #[error("target class {0} does not exist")]
    UnresolvedTarget(ClassId),
    #[error("need at least 5 examples to split, got {0}")]
    TooFew(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateMove {
    pub method_id: MethodId,
    pub origin_class_id: ClassId,
    pub target_class_ids: Vec<ClassId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroundTruthEntry {
    pub moved_method_id: MethodId,
    pub original_class_id: ClassId,
    pub injected_class_id: ClassId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub method_id: MethodId,
    pub class_id: ClassId,
    pub label: u8,
    pub feature: Vec<f64>,
}

/// Why a method is not a move candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exclusion {
    Static,
    Constructor,
    NoParameters,
    Empty,
    Getter,
    Setter,
    Delegation,
    UsesOriginState,
}

/// Which filters [`find_candidates`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MovableFilter {
    /// Also reject methods that read or write fields or call methods of their
    /// own class. Needed for a behavior-preserving move; at recommendation
    /// time this is exactly the state an envious method does not touch, so
    /// it is switched off there.
    pub exclude_origin_state: bool,
}

impl MovableFilter {
    pub const STRICT: MovableFilter = MovableFilter {
        exclude_origin_state: true,
    };
    pub const RELAXED: MovableFilter = MovableFilter {
        exclude_origin_state: false,
    };
}

// ---- name analysis -------------------------------------------------------

/// Calls `f` for every `Name` used as a value (not a member name, type or
/// declared variable).
fn for_each_value_name<'a>(node: &'a AstNode, f: &mut impl FnMut(&'a AstNode)) {
    match node.kind {
        NodeKind::Name => f(node),
        NodeKind::Literal => {}
        NodeKind::MethodCall => {
            let (recv, _, args) = node.call_parts().expect("method call");
            if let Some(r) = recv {
                for_each_value_name(r, f);
            }
            for a in args {
                for_each_value_name(a, f);
            }
        }
        NodeKind::FieldAccess => for_each_value_name(&node.children[0], f),
        NodeKind::VariableDeclaration => {
            if let Some(init) = node.children.get(2) {
                for_each_value_name(init, f);
            }
        }
        _ => node.children.iter().for_each(|c| for_each_value_name(c, f)),
    }
}

/// Parameter and local variable names of a method.
fn local_names(m: &MethodDecl) -> HashSet<String> {
    let mut out: HashSet<String> = m.params.iter().map(|p| p.name.clone()).collect();
    m.body.walk(&mut |n| {
        if n.kind == NodeKind::VariableDeclaration {
            out.insert(n.children[1].token_str().to_string());
        }
    });
    out
}

fn single_statement(m: &MethodDecl) -> Option<&AstNode> {
    match m.body.children.as_slice() {
        [s] => Some(s),
        _ => None,
    }
}

fn is_field_name(class: &ClassDecl, m: &MethodDecl, node: &AstNode) -> bool {
    node.kind == NodeKind::Name
        && class.field(node.token_str()).is_some()
        && !m.params.iter().any(|p| p.name == node.token_str())
}

/// `return field;` and nothing else.
pub fn is_getter(class: &ClassDecl, m: &MethodDecl) -> bool {
    match single_statement(m) {
        Some(s) if s.kind == NodeKind::ReturnStatement => {
            matches!(s.children.as_slice(), [v] if is_field_name(class, m, v))
        }
        _ => false,
    }
}

/// `field = expr;` and nothing else.
pub fn is_setter(class: &ClassDecl, m: &MethodDecl) -> bool {
    match single_statement(m) {
        Some(s) if s.kind == NodeKind::ExpressionStatement => {
            let e = &s.children[0];
            e.kind == NodeKind::Assignment && is_field_name(class, m, &e.children[0])
        }
        _ => false,
    }
}

/// A single return or expression statement that is one call whose arguments
/// include every parameter of the method as a bare name.
pub fn is_delegation(m: &MethodDecl) -> bool {
    let Some(s) = single_statement(m) else {
        return false;
    };
    let call = match (s.kind, s.children.as_slice()) {
        (NodeKind::ReturnStatement | NodeKind::ExpressionStatement, [c])
            if c.kind == NodeKind::MethodCall =>
        {
            c
        }
        _ => return false,
    };
    let (_, _, args) = call.call_parts().expect("method call");
    let passed: HashSet<&str> = args
        .iter()
        .filter(|a| a.kind == NodeKind::Name)
        .map(|a| a.token_str())
        .collect();
    m.params.iter().all(|p| passed.contains(p.name.as_str()))
}

/// Whether the body reads or writes a field of `class` or calls one of its
/// methods without a receiver.
pub fn uses_origin_state(class: &ClassDecl, m: &MethodDecl) -> bool {
    let locals = local_names(m);
    let mut hit = false;
    for_each_value_name(&m.body, &mut |n| {
        if !locals.contains(n.token_str()) && class.field(n.token_str()).is_some() {
            hit = true;
        }
    });
    m.body.walk(&mut |n| {
        if let Some((None, name, args)) = n.call_parts() {
            if class.has_method(name, args.len()) {
                hit = true;
            }
        }
    });
    hit
}

/// The structural filters, in a fixed order; `None` if the method passes.
pub fn classify(class: &ClassDecl, m: &MethodDecl, filter: MovableFilter) -> Option<Exclusion> {
    if m.is_static {
        Some(Exclusion::Static)
    } else if m.is_constructor() {
        Some(Exclusion::Constructor)
    } else if m.params.is_empty() {
        Some(Exclusion::NoParameters)
    } else if m.body.children.is_empty() {
        Some(Exclusion::Empty)
    } else if is_getter(class, m) {
        Some(Exclusion::Getter)
    } else if is_setter(class, m) {
        Some(Exclusion::Setter)
    } else if is_delegation(m) {
        Some(Exclusion::Delegation)
    } else if filter.exclude_origin_state && uses_origin_state(class, m) {
        Some(Exclusion::UsesOriginState)
    } else {
        None
    }
}

/// Parameter types of `m` that resolve to a class of the same project other
/// than its own, deduplicated, in parameter order.
pub fn target_classes(index: &ClassIndex, class: &ClassDecl, m: &MethodDecl) -> Vec<ClassId> {
    let mut out: Vec<ClassId> = Vec::new();
    for p in &m.params {
        if let Some(id) = index.resolve(class.id.project(), &p.ty) {
            if id != &class.id && !out.contains(id) {
                out.push(id.clone());
            }
        }
    }
    out
}

/// Move candidates under the strict filter set.
pub fn find_movable(corpus: &Corpus) -> Vec<CandidateMove> {
    find_candidates(corpus, MovableFilter::STRICT)
}

/// Methods passing `filter` together with their parameter-type target
/// classes, in corpus order.
pub fn find_candidates(corpus: &Corpus, filter: MovableFilter) -> Vec<CandidateMove> {
    let index = corpus.class_index();
    corpus
        .units
        .par_iter()
        .flat_map_iter(|u| {
            let index = &index;
            u.classes.iter().flat_map(move |c| {
                c.methods.iter().filter_map(move |m| {
                    if classify(c, m, filter).is_some() {
                        return None;
                    }
                    let targets = target_classes(index, c, m);
                    (!targets.is_empty()).then(|| CandidateMove {
                        method_id: m.id.clone(),
                        origin_class_id: c.id.clone(),
                        target_class_ids: targets,
                    })
                })
            })
        })
        .collect()
}

// ---- moving ----------------------------------------------------------------

struct Rewrite<'a> {
    method: &'a MethodDecl,
    param: &'a str,
    origin: &'a ClassDecl,
    target: &'a ClassDecl,
    locals: &'a HashSet<String>,
}

impl Rewrite<'_> {
    fn fail(&self, reason: String) -> InjectError {
        InjectError::NotMovable {
            method: self.method.id.clone(),
            reason,
        }
    }

    fn is_param(&self, n: &AstNode) -> bool {
        n.kind == NodeKind::Name && n.token_str() == self.param
    }

    /// A name that becomes an unqualified member of the target must not be
    /// shadowed by a local.
    fn check_unshadowed(&self, member: &str) -> Result<(), InjectError> {
        if self.locals.contains(member) {
            return Err(self.fail(format!("member {member} is shadowed by a local")));
        }
        Ok(())
    }

    fn value(&self, node: &mut AstNode) -> Result<(), InjectError> {
        match node.kind {
            NodeKind::Name => {
                let tok = node.token_str();
                if tok == self.param {
                    return Err(
                        self.fail(format!("parameter {tok} is used other than as a receiver"))
                    );
                }
                if self.locals.contains(tok) {
                    return Ok(());
                }
                if self.origin.field(tok).is_some() {
                    let name = std::mem::replace(node, AstNode::name(""));
                    *node = AstNode::node(
                        NodeKind::FieldAccess,
                        vec![AstNode::name(self.param), name],
                        SourcePos::default(),
                    );
                } else if self.target.field(tok).is_some() {
                    return Err(
                        self.fail(format!("{tok} would be captured by a field of the target"))
                    );
                }
                Ok(())
            }
            NodeKind::Literal => Ok(()),
            NodeKind::FieldAccess => {
                if self.is_param(&node.children[0]) {
                    let member = node.children[1].token_str().to_string();
                    self.check_unshadowed(&member)?;
                    *node = AstNode::name(member);
                    Ok(())
                } else {
                    self.value(&mut node.children[0])
                }
            }
            NodeKind::MethodCall => {
                let arity = node.call_parts().expect("method call").2.len();
                if node.qualified {
                    if self.is_param(&node.children[0]) {
                        node.children.remove(0);
                        node.qualified = false;
                    } else {
                        self.value(&mut node.children[0])?;
                    }
                } else {
                    let name = node.children[0].token_str().to_string();
                    if name == self.method.name && arity == self.method.arity() {
                        return Err(self.fail("method is recursive".into()));
                    }
                    if self.origin.has_method(&name, arity) {
                        node.children.insert(0, AstNode::name(self.param));
                        node.qualified = true;
                    } else if self.target.has_method(&name, arity) {
                        return Err(
                            self.fail(format!("call {name} would be captured by the target"))
                        );
                    }
                }
                let first_arg = if node.qualified { 2 } else { 1 };
                for a in &mut node.children[first_arg..] {
                    self.value(a)?;
                }
                Ok(())
            }
            NodeKind::VariableDeclaration => match node.children.get_mut(2) {
                Some(init) => self.value(init),
                None => Ok(()),
            },
            _ => {
                for c in &mut node.children {
                    self.value(c)?;
                }
                Ok(())
            }
        }
    }
}

/// Moves `method_id` into `target`.
///
/// The parameter `p` whose type is the target class becomes a parameter of
/// the origin class's type: accesses `p.x` and `p.g()` turn into plain
/// target members, and uses of origin members are qualified with `p`. The
/// transformation is its own inverse, so moving the method back restores
/// the original declarations.
pub fn perform_move(
    corpus: &Corpus,
    method_id: &MethodId,
    target: &ClassId,
) -> Result<(Corpus, GroundTruthEntry), InjectError> {
    let not_movable = |reason: &str| InjectError::NotMovable {
        method: method_id.clone(),
        reason: reason.to_string(),
    };
    let (origin, method) = corpus
        .method(method_id)
        .ok_or_else(|| not_movable("method not found"))?;
    let target_class = corpus
        .class(target)
        .ok_or_else(|| InjectError::UnresolvedTarget(target.clone()))?;
    if &origin.id == target {
        return Err(not_movable("target is the enclosing class"));
    }
    if method.is_static || method.is_constructor() {
        return Err(not_movable("static methods and constructors stay put"));
    }
    if target_class.has_method(&method.name, method.arity()) {
        return Err(not_movable("target already declares the same signature"));
    }
    let mut typed = method
        .params
        .iter()
        .enumerate()
        .filter(|(_, p)| p.ty == target_class.name);
    let (param_idx, param) = match (typed.next(), typed.next()) {
        (Some(p), None) => p,
        (None, _) => return Err(not_movable("no parameter of the target type")),
        _ => return Err(not_movable("several parameters of the target type")),
    };
    if method.params.iter().any(|p| p.ty == origin.name) {
        return Err(not_movable("a parameter already has the origin type"));
    }
    if origin.field(&param.name).is_some() || target_class.field(&param.name).is_some() {
        return Err(not_movable("parameter name collides with a field"));
    }

    let locals = local_names(method);
    let rw = Rewrite {
        method,
        param: &param.name,
        origin,
        target: target_class,
        locals: &locals,
    };
    let mut moved = method.clone();
    rw.value(&mut moved.body)?;
    moved.params[param_idx].ty = origin.name.clone();
    moved.rehome(target.file(), target.class_name());

    let entry = GroundTruthEntry {
        moved_method_id: moved.id.clone(),
        original_class_id: origin.id.clone(),
        injected_class_id: target.clone(),
    };
    let origin_id = origin.id.clone();
    let mut out = corpus.clone();
    out.class_mut(&origin_id)
        .expect("origin exists")
        .methods
        .retain(|m| &m.id != method_id);
    out.class_mut(target)
        .expect("target exists")
        .methods
        .push(moved);
    Ok((out, entry))
}

/// Injects up to `per_project` moves into every project of `corpus`.
///
/// Candidates come from the strict filter and are tried in seeded random
/// order with a random target each; failed moves are skipped.
pub fn inject(corpus: &Corpus, per_project: usize, seed: u64) -> (Corpus, Vec<GroundTruthEntry>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = corpus.clone();
    let mut truth = Vec::new();
    let candidates = find_movable(corpus);
    let mut by_project: BTreeMap<&str, Vec<&CandidateMove>> = BTreeMap::new();
    for c in &candidates {
        by_project.entry(c.method_id.project()).or_default().push(c);
    }
    for (_, mut cands) in by_project {
        cands.shuffle(&mut rng);
        let mut done = 0;
        for c in cands {
            if done == per_project {
                break;
            }
            let target = c
                .target_class_ids
                .choose(&mut rng)
                .expect("non-empty targets");
            if let Ok((next, entry)) = perform_move(&current, &c.method_id, target) {
                current = next;
                truth.push(entry);
                done += 1;
            }
        }
    }
    truth.sort();
    (current, truth)
}

// ---- datasets --------------------------------------------------------------

/// One negative per target class and an identical positive for each.
///
/// The origin class vector excludes the method itself. When any vector of a
/// (positive, negative) pair is unavailable both rows are dropped, so the
/// result is always balanced.
pub fn build_dataset(
    corpus: &Corpus,
    method_vectors: &HashMap<MethodId, CodeVector>,
    candidates: &[CandidateMove],
) -> Vec<LabeledExample> {
    candidates
        .par_iter()
        .flat_map_iter(|cand| {
            let mut rows = Vec::new();
            let Some(mvec) = method_vectors.get(&cand.method_id) else {
                return rows;
            };
            let origin_vec = corpus
                .class(&cand.origin_class_id)
                .and_then(|c| class_embedding(c, method_vectors, Some(&cand.method_id)).ok());
            let Some(origin_vec) = origin_vec else {
                return rows;
            };
            let Ok(pos) = make_pair_vector(
                mvec,
                &origin_vec,
                cand.method_id.clone(),
                cand.origin_class_id.clone(),
            ) else {
                return rows;
            };
            for t in &cand.target_class_ids {
                let neg = corpus
                    .class(t)
                    .and_then(|c| class_embedding(c, method_vectors, None).ok())
                    .and_then(|v| {
                        make_pair_vector(mvec, &v, cand.method_id.clone(), t.clone()).ok()
                    });
                if let Some(neg) = neg {
                    rows.push(LabeledExample {
                        method_id: cand.method_id.clone(),
                        class_id: cand.origin_class_id.clone(),
                        label: 1,
                        feature: pos.values.clone(),
                    });
                    rows.push(LabeledExample {
                        method_id: cand.method_id.clone(),
                        class_id: t.clone(),
                        label: 0,
                        feature: neg.values,
                    });
                }
            }
            rows
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
    pub validate: Vec<LabeledExample>,
}

fn canonical_order(a: &LabeledExample, b: &LabeledExample) -> std::cmp::Ordering {
    (&a.method_id, &a.class_id, a.label)
        .cmp(&(&b.method_id, &b.class_id, b.label))
        .then_with(|| {
            let ka = a.feature.iter().map(|v| v.to_bits());
            let kb = b.feature.iter().map(|v| v.to_bits());
            ka.cmp(kb)
        })
}

/// Picks groups (in order) whose sizes sum as close as possible to `want`,
/// preferring sums inside `[lo, hi]`. Returns the chosen group indices.
fn pick_groups(sizes: &[usize], want: usize, windows: &[(usize, usize)]) -> BTreeSet<usize> {
    let cap = windows.iter().map(|w| w.1).max().unwrap_or(0).max(want);
    // reach[i][s]: some subset of the first i groups sums to s.
    let mut reach = vec![vec![false; cap + 1]; sizes.len() + 1];
    reach[0][0] = true;
    for (i, &w) in sizes.iter().enumerate() {
        for s in 0..=cap {
            reach[i + 1][s] = reach[i][s] || (s >= w && reach[i][s - w]);
        }
    }
    let all = &reach[sizes.len()];
    let closest = |lo: usize, hi: usize| {
        (lo..=hi.min(cap))
            .filter(|&s| all[s])
            .min_by_key(|&s| (s.abs_diff(want), s))
    };
    let best = windows
        .iter()
        .find_map(|&(lo, hi)| closest(lo, hi))
        .or_else(|| closest(0, cap))
        .unwrap_or(0);
    let mut chosen = BTreeSet::new();
    let mut s = best;
    for i in (0..sizes.len()).rev() {
        if !reach[i][s] {
            chosen.insert(i);
            s -= sizes[i];
        }
    }
    chosen
}

/// Relative partition sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitRatio {
    pub train: usize,
    pub test: usize,
    pub validate: usize,
}

impl Default for SplitRatio {
    fn default() -> Self {
        Self {
            train: 3,
            test: 1,
            validate: 1,
        }
    }
}

impl SplitRatio {
    pub fn validate(&self) -> Result<(), String> {
        if self.train == 0 || self.test == 0 || self.validate == 0 {
            return Err("split ratio parts must be positive".into());
        }
        Ok(())
    }

    fn total(&self) -> usize {
        self.train + self.test + self.validate
    }
}

/// Seeded group-wise 3:1:1 split; see [`split_dataset_with`].
pub fn split_dataset(
    examples: Vec<LabeledExample>,
    seed: u64,
) -> Result<DatasetSplit, InjectError> {
    split_dataset_with(examples, SplitRatio::default(), seed)
}

/// Seeded group-wise split.
///
/// Test and validate receive ⌊n·part/total⌋ examples each (within one, since
/// every method's rows stay together); train gets the rest. The result
/// depends only on the multiset of examples and the seed, not on input order.
/// Integer sizes within one of the exact quota `scaled / total`.
fn quota_window(scaled: usize, total: usize) -> (usize, usize) {
    (
        scaled.saturating_sub(total).div_ceil(total),
        (scaled + total) / total,
    )
}

pub fn split_dataset_with(
    mut examples: Vec<LabeledExample>,
    ratio: SplitRatio,
    seed: u64,
) -> Result<DatasetSplit, InjectError> {
    let n = examples.len();
    if n < ratio.total().max(5) {
        return Err(InjectError::TooFew(n));
    }
    examples.sort_by(canonical_order);
    let mut groups: Vec<Vec<LabeledExample>> = Vec::new();
    for e in examples {
        match groups.last_mut() {
            Some(g) if g[0].method_id == e.method_id => g.push(e),
            _ => groups.push(vec![e]),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    groups.shuffle(&mut rng);

    let total = ratio.total();
    let want_test = n * ratio.test / total;
    let want_val = n * ratio.validate / total;
    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let t_win = quota_window(n * ratio.test, total);
    let test_idx = pick_groups(&sizes, want_test, &[t_win]);
    let test_n: usize = test_idx.iter().map(|&i| sizes[i]).sum();

    let rest: Vec<usize> = (0..groups.len())
        .filter(|i| !test_idx.contains(i))
        .collect();
    let rest_sizes: Vec<usize> = rest.iter().map(|&i| sizes[i]).collect();
    // Train is what is left, so bounding test+validate bounds train too.
    let (v_lo, v_hi) = quota_window(n * ratio.validate, total);
    let (p_lo, p_hi) = quota_window(n * (ratio.test + ratio.validate), total);
    let both = (
        v_lo.max(p_lo.saturating_sub(test_n)),
        v_hi.min(p_hi.saturating_sub(test_n)),
    );
    let val_idx: BTreeSet<usize> = pick_groups(&rest_sizes, want_val, &[both, (v_lo, v_hi)])
        .into_iter()
        .map(|j| rest[j])
        .collect();

    let mut split = DatasetSplit {
        train: Vec::new(),
        test: Vec::new(),
        validate: Vec::new(),
    };
    for (i, g) in groups.into_iter().enumerate() {
        if test_idx.contains(&i) {
            split.test.extend(g);
        } else if val_idx.contains(&i) {
            split.validate.extend(g);
        } else {
            split.train.extend(g);
        }
    }
    Ok(split)
}

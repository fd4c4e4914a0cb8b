//! Syntax tree for the supported Java subset.

use std::fmt;

/// Line/column of a construct in its source file (1-based).
///
/// Positions are diagnostic metadata only: two positions always compare
/// equal so that derived equality on declarations is purely structural.
#[derive(Debug, Clone, Copy, Default)]
pub struct SourcePos {
    pub line: u32,
    pub col: u32,
}

impl SourcePos {
    pub fn new(line: u32, col: u32) -> Self {
        Self { line, col }
    }
}

impl PartialEq for SourcePos {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

impl Eq for SourcePos {}

impl fmt::Display for SourcePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Closed set of node labels. The names double as the path vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    ClassDeclaration,
    MethodDeclaration,
    Parameter,
    Block,
    VariableDeclaration,
    ReturnStatement,
    IfStatement,
    WhileStatement,
    ExpressionStatement,
    Assignment,
    BinaryExpression,
    ConditionalExpression,
    EnclosedExpression,
    MethodCall,
    FieldAccess,
    Name,
    Literal,
}

impl NodeKind {
    pub const ALL: [NodeKind; 17] = [
        NodeKind::ClassDeclaration,
        NodeKind::MethodDeclaration,
        NodeKind::Parameter,
        NodeKind::Block,
        NodeKind::VariableDeclaration,
        NodeKind::ReturnStatement,
        NodeKind::IfStatement,
        NodeKind::WhileStatement,
        NodeKind::ExpressionStatement,
        NodeKind::Assignment,
        NodeKind::BinaryExpression,
        NodeKind::ConditionalExpression,
        NodeKind::EnclosedExpression,
        NodeKind::MethodCall,
        NodeKind::FieldAccess,
        NodeKind::Name,
        NodeKind::Literal,
    ];

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::ClassDeclaration => "ClassDeclaration",
            NodeKind::MethodDeclaration => "MethodDeclaration",
            NodeKind::Parameter => "Parameter",
            NodeKind::Block => "Block",
            NodeKind::VariableDeclaration => "VariableDeclaration",
            NodeKind::ReturnStatement => "ReturnStatement",
            NodeKind::IfStatement => "IfStatement",
            NodeKind::WhileStatement => "WhileStatement",
            NodeKind::ExpressionStatement => "ExpressionStatement",
            NodeKind::Assignment => "Assignment",
            NodeKind::BinaryExpression => "BinaryExpression",
            NodeKind::ConditionalExpression => "ConditionalExpression",
            NodeKind::EnclosedExpression => "EnclosedExpression",
            NodeKind::MethodCall => "MethodCall",
            NodeKind::FieldAccess => "FieldAccess",
            NodeKind::Name => "Name",
            NodeKind::Literal => "Literal",
        }
    }

    /// Terminal kinds carry a token and never have children.
    pub fn is_terminal(self) -> bool {
        matches!(self, NodeKind::Name | NodeKind::Literal)
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Or => "||",
            BinaryOp::And => "&&",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::Lt => "<",
            BinaryOp::Gt => ">",
            BinaryOp::Le => "<=",
            BinaryOp::Ge => ">=",
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Rem => "%",
        }
    }

    /// Binding strength; higher binds tighter. All levels are left-associative.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            BinaryOp::Eq | BinaryOp::Ne => 3,
            BinaryOp::Lt | BinaryOp::Gt | BinaryOp::Le | BinaryOp::Ge => 4,
            BinaryOp::Add | BinaryOp::Sub => 5,
            BinaryOp::Mul | BinaryOp::Div | BinaryOp::Rem => 6,
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "||" => BinaryOp::Or,
            "&&" => BinaryOp::And,
            "==" => BinaryOp::Eq,
            "!=" => BinaryOp::Ne,
            "<" => BinaryOp::Lt,
            ">" => BinaryOp::Gt,
            "<=" => BinaryOp::Le,
            ">=" => BinaryOp::Ge,
            "+" => BinaryOp::Add,
            "-" => BinaryOp::Sub,
            "*" => BinaryOp::Mul,
            "/" => BinaryOp::Div,
            "%" => BinaryOp::Rem,
            _ => return None,
        })
    }
}

/// A labeled syntax tree node.
///
/// Child layouts by kind:
/// - `MethodCall`: `[receiver, Name, args..]` when `qualified`, else `[Name, args..]`
/// - `FieldAccess`: `[receiver, Name]`
/// - `Assignment`: `[target, value]`
/// - `VariableDeclaration`: `[Name(type), Name(var), init?]`
/// - `IfStatement`: `[cond, then, else?]`
/// - `WhileStatement`: `[cond, body]`
/// - `ReturnStatement`: `[value?]`
/// - `Parameter`: `[Name(type), Name(var)]`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AstNode {
    pub kind: NodeKind,
    pub token: Option<String>,
    /// Set on `BinaryExpression` only.
    pub operator: Option<BinaryOp>,
    /// Set on `MethodCall` with an explicit receiver.
    pub qualified: bool,
    pub children: Vec<AstNode>,
    pub pos: SourcePos,
}

impl AstNode {
    pub fn leaf(kind: NodeKind, token: impl Into<String>, pos: SourcePos) -> Self {
        debug_assert!(kind.is_terminal());
        Self {
            kind,
            token: Some(token.into()),
            operator: None,
            qualified: false,
            children: Vec::new(),
            pos,
        }
    }

    pub fn name(token: impl Into<String>) -> Self {
        Self::leaf(NodeKind::Name, token, SourcePos::default())
    }

    pub fn literal(token: impl Into<String>) -> Self {
        Self::leaf(NodeKind::Literal, token, SourcePos::default())
    }

    pub fn node(kind: NodeKind, children: Vec<AstNode>, pos: SourcePos) -> Self {
        debug_assert!(!kind.is_terminal());
        Self {
            kind,
            token: None,
            operator: None,
            qualified: false,
            children,
            pos,
        }
    }

    pub fn binary(op: BinaryOp, lhs: AstNode, rhs: AstNode, pos: SourcePos) -> Self {
        let mut n = Self::node(NodeKind::BinaryExpression, vec![lhs, rhs], pos);
        n.operator = Some(op);
        n
    }

    pub fn call(
        receiver: Option<AstNode>,
        method: &str,
        args: Vec<AstNode>,
        pos: SourcePos,
    ) -> Self {
        let qualified = receiver.is_some();
        let mut children = Vec::with_capacity(args.len() + 2);
        children.extend(receiver);
        children.push(AstNode::leaf(NodeKind::Name, method, pos));
        children.extend(args);
        let mut n = Self::node(NodeKind::MethodCall, children, pos);
        n.qualified = qualified;
        n
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty() && self.token.is_some()
    }

    pub fn token_str(&self) -> &str {
        self.token.as_deref().unwrap_or("")
    }

    /// Leaves in source (pre-order) order.
    pub fn leaves(&self) -> Vec<&AstNode> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a AstNode>) {
        if self.token.is_some() {
            out.push(self);
        }
        for c in &self.children {
            c.collect_leaves(out);
        }
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a AstNode)) {
        f(self);
        for c in &self.children {
            c.walk(f);
        }
    }

    pub fn walk_mut(&mut self, f: &mut impl FnMut(&mut AstNode)) {
        f(self);
        for c in &mut self.children {
            c.walk_mut(f);
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(AstNode::node_count).sum::<usize>()
    }

    /// Leaf discipline: terminals carry a token and no children, all other nodes no token.
    pub fn check_leaf_discipline(&self) -> bool {
        let ok = if self.kind.is_terminal() {
            self.token.is_some() && self.children.is_empty()
        } else {
            self.token.is_none()
        };
        ok && self.children.iter().all(AstNode::check_leaf_discipline)
    }

    /// For a `MethodCall`: (receiver, method name, arguments).
    pub fn call_parts(&self) -> Option<(Option<&AstNode>, &str, &[AstNode])> {
        if self.kind != NodeKind::MethodCall {
            return None;
        }
        if self.qualified {
            Some((
                Some(&self.children[0]),
                self.children[1].token_str(),
                &self.children[2..],
            ))
        } else {
            Some((None, self.children[0].token_str(), &self.children[1..]))
        }
    }
}

/// Stable key of a class: `file#Class`.
#[derive(
    Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
#[serde(transparent)]
pub struct ClassId(pub String);

impl ClassId {
    pub fn new(file: &str, class: &str) -> Self {
        ClassId(format!("{file}#{class}"))
    }

    pub fn file(&self) -> &str {
        self.0.rsplit_once('#').map(|(f, _)| f).unwrap_or("")
    }

    pub fn class_name(&self) -> &str {
        self.0.rsplit_once('#').map(|(_, c)| c).unwrap_or(&self.0)
    }

    /// First path component of the file, used as the project key.
    pub fn project(&self) -> &str {
        project_of(self.file())
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Stable key of a method: `file#Class.name/arity`.
#[derive(
    Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
#[serde(transparent)]
pub struct MethodId(pub String);

impl MethodId {
    pub fn new(file: &str, class: &str, name: &str, arity: usize) -> Self {
        MethodId(format!("{file}#{class}.{name}/{arity}"))
    }

    pub fn class_id(&self) -> ClassId {
        let (head, _) = self.0.rsplit_once('/').unwrap_or((&self.0, ""));
        let (cls, _) = head.rsplit_once('.').unwrap_or((head, ""));
        ClassId(cls.to_string())
    }

    /// `(name, arity)` parsed back out of the key.
    pub fn signature(&self) -> Option<(&str, usize)> {
        let (head, arity) = self.0.rsplit_once('/')?;
        let (_, name) = head.rsplit_once('.')?;
        Some((name, arity.parse().ok()?))
    }

    pub fn project(&self) -> &str {
        let file = self.0.rsplit_once('#').map(|(f, _)| f).unwrap_or("");
        project_of(file)
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn project_of(file: &str) -> &str {
    match file.split_once('/') {
        Some((p, _)) => p,
        None => "",
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldDecl {
    pub name: String,
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodDecl {
    pub id: MethodId,
    pub name: String,
    pub params: Vec<Param>,
    /// `None` for constructors.
    pub return_type: Option<String>,
    pub is_static: bool,
    /// Root is always a `Block`.
    pub body: AstNode,
    pub pos: SourcePos,
}

impl MethodDecl {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    pub fn is_constructor(&self) -> bool {
        self.return_type.is_none()
    }

    /// Rebuilds `id` for a new owner.
    pub fn rehome(&mut self, file: &str, class: &str) {
        self.id = MethodId::new(file, class, &self.name, self.params.len());
    }

    /// Full declaration subtree: return type, name, parameters, then the body.
    pub fn declaration_tree(&self) -> AstNode {
        let mut children = Vec::with_capacity(self.params.len() + 3);
        if let Some(rt) = &self.return_type {
            children.push(AstNode::leaf(NodeKind::Name, rt.clone(), self.pos));
        }
        children.push(AstNode::leaf(NodeKind::Name, self.name.clone(), self.pos));
        for p in &self.params {
            children.push(AstNode::node(
                NodeKind::Parameter,
                vec![
                    AstNode::leaf(NodeKind::Name, p.ty.clone(), self.pos),
                    AstNode::leaf(NodeKind::Name, p.name.clone(), self.pos),
                ],
                self.pos,
            ));
        }
        children.push(self.body.clone());
        AstNode::node(NodeKind::MethodDeclaration, children, self.pos)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDecl {
    pub id: ClassId,
    pub name: String,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<MethodDecl>,
    pub pos: SourcePos,
}

impl ClassDecl {
    pub fn field(&self, name: &str) -> Option<&FieldDecl> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn has_method(&self, name: &str, arity: usize) -> bool {
        self.methods
            .iter()
            .any(|m| m.name == name && m.arity() == arity)
    }

    pub fn method(&self, id: &MethodId) -> Option<&MethodDecl> {
        self.methods.iter().find(|m| &m.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceUnit {
    pub file_path: String,
    pub classes: Vec<ClassDecl>,
}

impl SourceUnit {
    pub fn method_count(&self) -> usize {
        self.classes.iter().map(|c| c.methods.len()).sum()
    }

    pub fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| c.name == name)
    }
}

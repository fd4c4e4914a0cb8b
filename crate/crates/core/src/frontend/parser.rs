//! Recursive descent parser for the Java subset.

use std::collections::HashSet;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::FrontendError;

const KEYWORDS: [&str; 9] = [
    "class", "static", "if", "else", "while", "return", "true", "false", "null",
];

/// Reserved words outside the subset, with the diagnostic to report.
fn rejected_keyword(word: &str) -> Option<&'static str> {
    Some(match word {
        "public" | "private" | "protected" => "visibility modifiers are not supported",
        "final" | "abstract" | "synchronized" | "native" | "transient" | "volatile"
        | "strictfp" | "default" => "modifiers other than 'static' are not supported",
        "extends" | "implements" | "super" => "inheritance is not supported",
        "interface" | "enum" | "record" => "only class declarations are supported",
        "import" | "package" => "imports and packages are not supported",
        "new" => "object creation is not supported",
        "this" => "explicit 'this' is not supported",
        "for" | "do" | "switch" | "case" | "break" | "continue" | "try" | "catch" | "finally"
        | "throw" | "throws" | "instanceof" | "assert" | "goto" | "const" => {
            "statement form is not supported"
        }
        _ => return None,
    })
}

pub fn parse_unit(source_text: &str, file_path: &str) -> Result<SourceUnit, FrontendError> {
    let tokens = tokenize(source_text, file_path)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        file: file_path,
    };
    let mut classes: Vec<ClassDecl> = Vec::new();
    while !p.at_eof() {
        let class = p.class_decl()?;
        if classes.iter().any(|c| c.name == class.name) {
            return Err(FrontendError::DuplicateClass {
                file: file_path.to_string(),
                class: class.name,
                line: class.pos.line,
                col: class.pos.col,
            });
        }
        classes.push(class);
    }
    Ok(SourceUnit {
        file_path: file_path.to_string(),
        classes,
    })
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    file: &'a str,
}

type PResult<T> = Result<T, FrontendError>;

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn here(&self) -> SourcePos {
        self.tokens[self.pos].pos
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, pos: SourcePos, message: impl Into<String>) -> FrontendError {
        FrontendError::Syntax {
            file: self.file.to_string(),
            line: pos.line,
            col: pos.col,
            message: message.into(),
        }
    }

    fn unexpected(&self, expected: &str) -> FrontendError {
        let found = match self.peek() {
            Tok::Ident(s) => {
                if let Some(why) = rejected_keyword(s) {
                    return self.error_at(self.here(), format!("'{s}': {why}"));
                }
                format!("'{s}'")
            }
            Tok::Int(s) | Tok::Float(s) | Tok::Str(s) => format!("literal {s}"),
            Tok::Punct(p) => format!("'{p}'"),
            Tok::Eof => "end of file".to_string(),
        };
        self.error_at(self.here(), format!("expected {expected}, found {found}"))
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == w)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<SourcePos> {
        if self.is_punct(p) {
            Ok(self.bump().pos)
        } else {
            Err(self.unexpected(&format!("'{p}'")))
        }
    }

    fn expect_word(&mut self, w: &str) -> PResult<SourcePos> {
        if self.is_word(w) {
            Ok(self.bump().pos)
        } else {
            Err(self.unexpected(&format!("'{w}'")))
        }
    }

    /// A non-keyword identifier.
    fn ident(&mut self) -> PResult<(String, SourcePos)> {
        match self.peek().clone() {
            Tok::Ident(s) if rejected_keyword(&s).is_none() && !KEYWORDS.contains(&s.as_str()) => {
                let pos = self.bump().pos;
                Ok((s, pos))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn peek_is_ident(&self, n: usize) -> bool {
        matches!(self.peek_at(n), Tok::Ident(s) if rejected_keyword(s).is_none() && !KEYWORDS.contains(&s.as_str()))
    }

    fn type_name(&mut self) -> PResult<(String, SourcePos)> {
        let (name, pos) = self.ident()?;
        if self.is_punct("<") {
            return Err(self.error_at(self.here(), "generic types are not supported"));
        }
        Ok((name, pos))
    }

    fn class_decl(&mut self) -> PResult<ClassDecl> {
        let pos = self.expect_word("class")?;
        let (name, _) = self.ident()?;
        if self.is_punct("<") {
            return Err(self.error_at(self.here(), "generic types are not supported"));
        }
        self.expect_punct("{")?;
        let id = ClassId::new(self.file, &name);
        let mut fields = Vec::new();
        let mut methods: Vec<MethodDecl> = Vec::new();
        let mut signatures = HashSet::new();
        while !self.eat_punct("}") {
            if self.at_eof() {
                return Err(self.unexpected("'}'"));
            }
            let member_pos = self.here();
            let is_static = if self.is_word("static") {
                self.bump();
                true
            } else {
                false
            };
            // Constructor: `Name (`
            let is_ctor = matches!(self.peek(), Tok::Ident(s) if *s == name)
                && matches!(self.peek_at(1), Tok::Punct("("));
            let return_type = if is_ctor {
                None
            } else {
                Some(self.type_name()?.0)
            };
            let (member_name, _) = self.ident()?;
            if self.is_punct("(") {
                let params = self.params()?;
                if !self.is_punct("{") {
                    return Err(self.unexpected("method body"));
                }
                let body = self.block()?;
                let arity = params.len();
                if !signatures.insert((member_name.clone(), arity)) {
                    return Err(FrontendError::DuplicateSignature {
                        file: self.file.to_string(),
                        class: name.clone(),
                        name: member_name,
                        arity,
                        line: member_pos.line,
                        col: member_pos.col,
                    });
                }
                methods.push(MethodDecl {
                    id: MethodId::new(self.file, &name, &member_name, arity),
                    name: member_name,
                    params,
                    return_type,
                    is_static,
                    body,
                    pos: member_pos,
                });
            } else {
                if is_static {
                    return Err(self.error_at(member_pos, "static fields are not supported"));
                }
                if self.is_punct("=") {
                    return Err(self.error_at(self.here(), "field initializers are not supported"));
                }
                self.expect_punct(";")?;
                fields.push(FieldDecl {
                    name: member_name,
                    ty: return_type.unwrap_or_default(),
                });
            }
        }
        Ok(ClassDecl {
            id,
            name,
            fields,
            methods,
            pos,
        })
    }

    fn params(&mut self) -> PResult<Vec<Param>> {
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if self.eat_punct(")") {
            return Ok(params);
        }
        loop {
            let (ty, _) = self.type_name()?;
            let (name, pos) = self.ident()?;
            if params.iter().any(|p: &Param| p.name == name) {
                return Err(self.error_at(pos, format!("duplicate parameter '{name}'")));
            }
            params.push(Param { name, ty });
            if self.eat_punct(")") {
                return Ok(params);
            }
            self.expect_punct(",")?;
        }
    }

    fn block(&mut self) -> PResult<AstNode> {
        let pos = self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.eat_punct("}") {
            if self.at_eof() {
                return Err(self.unexpected("'}'"));
            }
            stmts.push(self.statement()?);
        }
        Ok(AstNode::node(NodeKind::Block, stmts, pos))
    }

    fn statement(&mut self) -> PResult<AstNode> {
        let pos = self.here();
        if self.is_punct("{") {
            return self.block();
        }
        if self.is_word("if") {
            self.bump();
            self.expect_punct("(")?;
            let cond = self.expression()?;
            self.expect_punct(")")?;
            let then = self.statement()?;
            let mut children = vec![cond, then];
            if self.is_word("else") {
                self.bump();
                children.push(self.statement()?);
            }
            return Ok(AstNode::node(NodeKind::IfStatement, children, pos));
        }
        if self.is_word("while") {
            self.bump();
            self.expect_punct("(")?;
            let cond = self.expression()?;
            self.expect_punct(")")?;
            let body = self.statement()?;
            return Ok(AstNode::node(
                NodeKind::WhileStatement,
                vec![cond, body],
                pos,
            ));
        }
        if self.is_word("return") {
            self.bump();
            let mut children = Vec::new();
            if !self.is_punct(";") {
                children.push(self.expression()?);
            }
            self.expect_punct(";")?;
            return Ok(AstNode::node(NodeKind::ReturnStatement, children, pos));
        }
        // Local declaration: `Type name [= init];`
        if self.peek_is_ident(0) && self.peek_is_ident(1) {
            let (ty, tpos) = self.type_name()?;
            let (name, npos) = self.ident()?;
            let mut children = vec![
                AstNode::leaf(NodeKind::Name, ty, tpos),
                AstNode::leaf(NodeKind::Name, name, npos),
            ];
            if self.eat_punct("=") {
                children.push(self.expression()?);
            }
            self.expect_punct(";")?;
            return Ok(AstNode::node(NodeKind::VariableDeclaration, children, pos));
        }
        if self.peek_is_ident(0)
            && matches!(self.peek_at(1), Tok::Punct("<"))
            && self.peek_is_ident(2)
        {
            // `List<X> xs` vs `a < b`: only the former is followed by an identifier then `>`.
            if matches!(self.peek_at(3), Tok::Punct(">") | Tok::Punct(",")) {
                return Err(self.error_at(
                    self.tokens[self.pos + 1].pos,
                    "generic types are not supported",
                ));
            }
        }
        let expr = self.expression()?;
        if self.is_punct("=") {
            if !matches!(expr.kind, NodeKind::Name | NodeKind::FieldAccess) {
                return Err(self.error_at(expr.pos, "invalid assignment target"));
            }
            let apos = self.bump().pos;
            let value = self.expression()?;
            self.expect_punct(";")?;
            let assign = AstNode::node(NodeKind::Assignment, vec![expr, value], apos);
            return Ok(AstNode::node(
                NodeKind::ExpressionStatement,
                vec![assign],
                pos,
            ));
        }
        if expr.kind != NodeKind::MethodCall {
            return Err(self.error_at(pos, "not a statement"));
        }
        self.expect_punct(";")?;
        Ok(AstNode::node(
            NodeKind::ExpressionStatement,
            vec![expr],
            pos,
        ))
    }

    fn expression(&mut self) -> PResult<AstNode> {
        let cond = self.binary(1)?;
        if self.is_punct("?") {
            let pos = self.bump().pos;
            let then = self.expression()?;
            self.expect_punct(":")?;
            let otherwise = self.expression()?;
            return Ok(AstNode::node(
                NodeKind::ConditionalExpression,
                vec![cond, then, otherwise],
                pos,
            ));
        }
        Ok(cond)
    }

    fn peek_binop(&self) -> Option<BinaryOp> {
        match self.peek() {
            Tok::Punct(p) => BinaryOp::from_symbol(p),
            _ => None,
        }
    }

    /// Precedence climbing; every level is left-associative.
    fn binary(&mut self, min_prec: u8) -> PResult<AstNode> {
        let mut lhs = self.postfix()?;
        while let Some(op) = self.peek_binop() {
            if op.precedence() < min_prec {
                break;
            }
            let pos = self.bump().pos;
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = AstNode::binary(op, lhs, rhs, pos);
        }
        Ok(lhs)
    }

    fn postfix(&mut self) -> PResult<AstNode> {
        let mut e = self.primary()?;
        while self.is_punct(".") {
            self.bump();
            let (name, pos) = self.ident()?;
            if self.is_punct("(") {
                let args = self.args()?;
                e = AstNode::call(Some(e), &name, args, pos);
            } else {
                e = AstNode::node(
                    NodeKind::FieldAccess,
                    vec![e, AstNode::leaf(NodeKind::Name, name, pos)],
                    pos,
                );
            }
        }
        Ok(e)
    }

    fn args(&mut self) -> PResult<Vec<AstNode>> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if self.eat_punct(")") {
            return Ok(args);
        }
        loop {
            args.push(self.expression()?);
            if self.eat_punct(")") {
                return Ok(args);
            }
            self.expect_punct(",")?;
        }
    }

    fn primary(&mut self) -> PResult<AstNode> {
        let pos = self.here();
        match self.peek().clone() {
            Tok::Int(s) | Tok::Float(s) | Tok::Str(s) => {
                self.bump();
                Ok(AstNode::leaf(NodeKind::Literal, s, pos))
            }
            Tok::Ident(s) if s == "true" || s == "false" || s == "null" => {
                self.bump();
                Ok(AstNode::leaf(NodeKind::Literal, s, pos))
            }
            Tok::Punct("(") => {
                self.bump();
                let inner = self.expression()?;
                self.expect_punct(")")?;
                Ok(AstNode::node(
                    NodeKind::EnclosedExpression,
                    vec![inner],
                    pos,
                ))
            }
            Tok::Ident(_) => {
                let (name, pos) = self.ident()?;
                if self.is_punct("(") {
                    let args = self.args()?;
                    Ok(AstNode::call(None, &name, args, pos))
                } else {
                    Ok(AstNode::leaf(NodeKind::Name, name, pos))
                }
            }
            _ => Err(self.unexpected("expression")),
        }
    }
}

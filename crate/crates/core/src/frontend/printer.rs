//! Pretty printer. Output re-parses to a structurally equal tree.

use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

pub fn print_unit(unit: &SourceUnit) -> String {
    let mut out = String::new();
    for (i, class) in unit.classes.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_class(class, &mut out);
    }
    out
}

pub fn print_class(class: &ClassDecl, out: &mut String) {
    let _ = writeln!(out, "class {} {{", class.name);
    for f in &class.fields {
        let _ = writeln!(out, "{INDENT}{} {};", f.ty, f.name);
    }
    for (i, m) in class.methods.iter().enumerate() {
        if i > 0 || !class.fields.is_empty() {
            out.push('\n');
        }
        print_method(m, 1, out);
    }
    out.push_str("}\n");
}

pub fn print_method(m: &MethodDecl, depth: usize, out: &mut String) {
    indent(depth, out);
    if m.is_static {
        out.push_str("static ");
    }
    if let Some(rt) = &m.return_type {
        out.push_str(rt);
        out.push(' ');
    }
    out.push_str(&m.name);
    out.push('(');
    for (i, p) in m.params.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{} {}", p.ty, p.name);
    }
    out.push_str(") ");
    print_block(&m.body, depth, out);
    out.push('\n');
}

fn indent(depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str(INDENT);
    }
}

/// Prints `{ ... }` starting at the current column; the closing brace is indented to `depth`.
fn print_block(block: &AstNode, depth: usize, out: &mut String) {
    if block.children.is_empty() {
        out.push_str("{}");
        return;
    }
    out.push_str("{\n");
    for s in &block.children {
        indent(depth + 1, out);
        print_statement(s, depth + 1, out);
        out.push('\n');
    }
    indent(depth, out);
    out.push('}');
}

/// Branch bodies: blocks stay on the same line, anything else goes on its own indented line.
fn print_branch(stmt: &AstNode, depth: usize, out: &mut String) {
    if stmt.kind == NodeKind::Block {
        out.push(' ');
        print_block(stmt, depth, out);
    } else {
        out.push('\n');
        indent(depth + 1, out);
        print_statement(stmt, depth + 1, out);
    }
}

pub fn print_statement(s: &AstNode, depth: usize, out: &mut String) {
    match s.kind {
        NodeKind::Block => print_block(s, depth, out),
        NodeKind::VariableDeclaration => {
            let _ = write!(
                out,
                "{} {}",
                s.children[0].token_str(),
                s.children[1].token_str()
            );
            if let Some(init) = s.children.get(2) {
                out.push_str(" = ");
                print_expr(init, out);
            }
            out.push(';');
        }
        NodeKind::ReturnStatement => {
            out.push_str("return");
            if let Some(v) = s.children.first() {
                out.push(' ');
                print_expr(v, out);
            }
            out.push(';');
        }
        NodeKind::IfStatement => {
            out.push_str("if (");
            print_expr(&s.children[0], out);
            out.push(')');
            print_branch(&s.children[1], depth, out);
            if let Some(otherwise) = s.children.get(2) {
                if s.children[1].kind == NodeKind::Block {
                    out.push_str(" else");
                } else {
                    out.push('\n');
                    indent(depth, out);
                    out.push_str("else");
                }
                print_branch(otherwise, depth, out);
            }
        }
        NodeKind::WhileStatement => {
            out.push_str("while (");
            print_expr(&s.children[0], out);
            out.push(')');
            print_branch(&s.children[1], depth, out);
        }
        NodeKind::ExpressionStatement => {
            let e = &s.children[0];
            if e.kind == NodeKind::Assignment {
                print_expr(&e.children[0], out);
                out.push_str(" = ");
                print_expr(&e.children[1], out);
            } else {
                print_expr(e, out);
            }
            out.push(';');
        }
        _ => print_expr(s, out),
    }
}

pub fn print_expr(e: &AstNode, out: &mut String) {
    match e.kind {
        NodeKind::Name | NodeKind::Literal => out.push_str(e.token_str()),
        NodeKind::BinaryExpression => {
            print_expr(&e.children[0], out);
            let op = e.operator.map(BinaryOp::symbol).unwrap_or("?");
            let _ = write!(out, " {op} ");
            print_expr(&e.children[1], out);
        }
        NodeKind::ConditionalExpression => {
            print_expr(&e.children[0], out);
            out.push_str(" ? ");
            print_expr(&e.children[1], out);
            out.push_str(" : ");
            print_expr(&e.children[2], out);
        }
        NodeKind::EnclosedExpression => {
            out.push('(');
            print_expr(&e.children[0], out);
            out.push(')');
        }
        NodeKind::FieldAccess => {
            print_expr(&e.children[0], out);
            out.push('.');
            out.push_str(e.children[1].token_str());
        }
        NodeKind::MethodCall => {
            let (recv, name, args) = e.call_parts().expect("method call layout");
            if let Some(r) = recv {
                print_expr(r, out);
                out.push('.');
            }
            out.push_str(name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                print_expr(a, out);
            }
            out.push(')');
        }
        NodeKind::Assignment => {
            print_expr(&e.children[0], out);
            out.push_str(" = ");
            print_expr(&e.children[1], out);
        }
        _ => {
            let mut tmp = String::new();
            print_statement(e, 0, &mut tmp);
            out.push_str(&tmp);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_unit;
    use super::*;

    #[test]
    fn fig2_round_trip() {
        let src = "class A { boolean f(Object target) { return (a > b) ? a : b; } }";
        let u = parse_unit(src, "x.java").unwrap();
        let printed = print_unit(&u);
        assert_eq!(parse_unit(&printed, "x.java").unwrap(), u);
        assert!(printed.contains("return (a > b) ? a : b;"));
    }

    #[test]
    fn field_order_preserved() {
        let u = parse_unit("class P { int y; B x; }", "x.java").unwrap();
        let printed = print_unit(&u);
        assert!(printed.find("int y;").unwrap() < printed.find("B x;").unwrap());
        assert_eq!(parse_unit(&printed, "x.java").unwrap(), u);
    }

    #[test]
    fn nested_if_else_layout() {
        let src = "class A { int f(int a) { if (a > 0) if (a > 1) return 2; else return 1; \
                   while (a < 3) a = a + 1; return 0; } }";
        let u = parse_unit(src, "x.java").unwrap();
        let printed = print_unit(&u);
        assert_eq!(parse_unit(&printed, "x.java").unwrap(), u);
    }
}

use mmrec::frontend::{
    find_enclosing, parse_unit, print_unit, FrontendError, MethodId, NodeKind, SourceUnit,
};
use mmrec::injector::perform_move;
use mmrec::synth::{generate_corpus, random_method_source};
use proptest::prelude::*;

const THREE_CLASSES: &str = "
class Account {
    int balance;
    Bank bank;
    int deposit(int amount) { balance = balance + amount; return balance; }
    boolean covers(int amount) { return balance > amount; }
    int fee(Bank b) { return b.rate * 2; }
}

class Bank {
    int rate;
    int quote(Account a, int years) {
        int t = a.balance * rate;
        while (years > 0) { t = t + rate; years = years - 1; }
        return t;
    }
    void reset() { rate = 0; }
}

class Ledger {
    Account last;
    int total(Account a, Account b) { return a.deposit(1) + b.deposit(2); }
    boolean empty() { if (last == null) { return true; } else { return false; } }
}
";

/// Counts `identifier (` at brace depth 1, i.e. method headers in class
/// bodies, by scanning the raw text.
fn count_method_headers(src: &str) -> usize {
    let chars: Vec<char> = src.chars().collect();
    let mut depth = 0;
    let mut count = 0;
    for (i, &c) in chars.iter().enumerate() {
        match c {
            '{' => depth += 1,
            '}' => depth -= 1,
            '(' if depth == 1 => {
                let mut j = i;
                while j > 0 && chars[j - 1] == ' ' {
                    j -= 1;
                }
                if j > 0 && (chars[j - 1].is_alphanumeric() || chars[j - 1] == '_') {
                    count += 1;
                }
            }
            _ => {}
        }
    }
    count
}

#[test]
fn three_class_fixture_matches_hand_count() {
    let unit = parse_unit(THREE_CLASSES, "bank/Account.java").unwrap();
    assert_eq!(unit.classes.len(), 3);
    assert_eq!(count_method_headers(THREE_CLASSES), 7);
    assert_eq!(unit.method_count(), 7);
    let names: Vec<&str> = unit.classes.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, ["Account", "Bank", "Ledger"]);
    assert_eq!(
        unit.class("Account").unwrap().methods[2].id,
        MethodId::new("bank/Account.java", "Account", "fee", 1)
    );
    for c in &unit.classes {
        for m in &c.methods {
            assert_eq!(m.body.kind, NodeKind::Block);
            assert!(m.body.check_leaf_discipline());
        }
    }
}

#[test]
fn conditional_snippet_structure() {
    let unit = parse_unit(
        "class A { boolean f(Object target) { return (a > b) ? a : b; } }",
        "p/A.java",
    )
    .unwrap();
    let body = &unit.classes[0].methods[0].body;
    let ret = &body.children[0];
    assert_eq!(ret.kind, NodeKind::ReturnStatement);
    let cond = &ret.children[0];
    assert_eq!(cond.kind, NodeKind::ConditionalExpression);
    let enclosed = &cond.children[0];
    assert_eq!(enclosed.kind, NodeKind::EnclosedExpression);
    let bin = &enclosed.children[0];
    assert_eq!(bin.kind, NodeKind::BinaryExpression);
    let toks: Vec<(NodeKind, &str)> = bin
        .children
        .iter()
        .map(|c| (c.kind, c.token_str()))
        .collect();
    assert_eq!(toks, [(NodeKind::Name, "a"), (NodeKind::Name, "b")]);
}

#[test]
fn empty_class_and_field_order() {
    let unit = parse_unit("class A {}", "p/A.java").unwrap();
    assert_eq!(unit.classes.len(), 1);
    assert!(unit.classes[0].methods.is_empty() && unit.classes[0].fields.is_empty());

    let unit = parse_unit("class B { int z; Node a; }", "p/B.java").unwrap();
    let printed = print_unit(&unit);
    assert!(printed.find("int z").unwrap() < printed.find("Node a").unwrap());
    let back = parse_unit(&printed, "p/B.java").unwrap();
    let order: Vec<&str> = back.classes[0]
        .fields
        .iter()
        .map(|f| f.name.as_str())
        .collect();
    assert_eq!(order, ["z", "a"]);
}

fn round_trip(unit: &SourceUnit) {
    let printed = print_unit(unit);
    let again = parse_unit(&printed, &unit.file_path).unwrap_or_else(|e| panic!("{e}\n{printed}"));
    assert_eq!(&again, unit, "{printed}");
    assert_eq!(print_unit(&again), printed);
}

#[test]
fn hundred_random_programs_round_trip() {
    for seed in 0..100 {
        let src = random_method_source(seed);
        let unit = parse_unit(&src, "r/R.java").unwrap();
        round_trip(&unit);
    }
}

#[test]
fn generated_projects_round_trip() {
    for unit in &generate_corpus(3, 5).units {
        round_trip(unit);
    }
    round_trip(&parse_unit(THREE_CLASSES, "bank/Account.java").unwrap());
}

#[test]
fn parsing_is_deterministic() {
    let a = parse_unit(THREE_CLASSES, "bank/Account.java").unwrap();
    let b = parse_unit(THREE_CLASSES, "bank/Account.java").unwrap();
    assert_eq!(a, b);
    let ids = |u: &SourceUnit| -> Vec<MethodId> {
        u.classes
            .iter()
            .flat_map(|c| c.methods.iter().map(|m| m.id.clone()))
            .collect()
    };
    assert_eq!(ids(&a), ids(&b));
}

#[test]
fn unsupported_syntax_is_rejected_with_position() {
    for (src, line) in [
        ("class A {\n  List<Node> xs;\n}", 2),
        ("class A extends B {}", 1),
        ("import java.util.List;\nclass A {}", 1),
        ("class A {\n\n  public int f() { return 1; }\n}", 3),
        ("class A { int f() { for (;;) {} } }", 1),
    ] {
        match parse_unit(src, "p/A.java") {
            Err(FrontendError::Syntax { line: l, file, .. }) => {
                assert_eq!(l, line, "{src}");
                assert_eq!(file, "p/A.java");
            }
            other => panic!("{src}: {other:?}"),
        }
    }
}

#[test]
fn duplicate_signatures_and_classes() {
    let dup = "class A { int f(int x) { return x; } int f(int y) { return y; } }";
    assert!(matches!(
        parse_unit(dup, "p/A.java"),
        Err(FrontendError::DuplicateSignature { arity: 1, .. })
    ));
    let overload = "class A { int f(int x) { return x; } int f() { return 1; } }";
    assert_eq!(parse_unit(overload, "p/A.java").unwrap().method_count(), 2);
    assert!(matches!(
        parse_unit("class A {} class A {}", "p/A.java"),
        Err(FrontendError::DuplicateClass { .. })
    ));
}

#[test]
fn enclosing_lookup_follows_a_move() {
    let corpus = generate_corpus(1, 3);
    let cand = mmrec::injector::find_movable(&corpus).remove(0);
    let (c, m) = find_enclosing(&corpus.units, &cand.method_id).unwrap();
    assert_eq!(c.id, cand.origin_class_id);
    assert_eq!(m.id, cand.method_id);

    let target = &cand.target_class_ids[0];
    let (moved, entry) = perform_move(&corpus, &cand.method_id, target).unwrap();
    assert_eq!(
        find_enclosing(&moved.units, &cand.method_id),
        Err(FrontendError::NotFound(cand.method_id.clone()))
    );
    let (c, m) = find_enclosing(&moved.units, &entry.moved_method_id).unwrap();
    assert_eq!(&c.id, target);
    assert_eq!(
        m.name,
        find_enclosing(&corpus.units, &cand.method_id)
            .unwrap()
            .1
            .name
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn random_programs_round_trip_and_keep_leaf_discipline(seed in any::<u64>()) {
        let unit = parse_unit(&random_method_source(seed), "r/R.java").unwrap();
        let again = parse_unit(&print_unit(&unit), "r/R.java").unwrap();
        prop_assert_eq!(&again, &unit);
        for m in &unit.classes[0].methods {
            prop_assert!(m.declaration_tree().check_leaf_discipline());
            let mut ok = true;
            m.body.walk(&mut |n| ok &= n.token.is_some() == n.kind.is_terminal());
            prop_assert!(ok);
        }
    }
}

//! Seeded generators for subset-grammar programs and small multi-class
//! projects, used by tests and the end-to-end experiment.
//!
//! Projects follow a fixed shape. Entity classes hold data: fields, getters,
//! setters and a few methods computing on their own fields. Service classes
//! hold configuration fields, methods on that configuration, and methods
//! that take entities as parameters and work only through them. The latter
//! are the move candidates.

use std::fmt::Write as _;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Corpus;
use crate::frontend::{parse_unit, SourceUnit};

const NOUNS: &[&str] = &[
    "Account", "Order", "Invoice", "Customer", "Product", "Shipment", "Ledger", "Payment",
    "Ticket", "Report", "Sensor", "Route", "Budget", "Parcel", "Vendor", "Course", "Student",
    "Policy", "Claim", "Booking", "Reading", "Trip", "Asset", "Loan",
];
const SERVICE_SUFFIXES: &[&str] = &["Service", "Manager", "Processor", "Planner", "Registry"];
const ENTITY_FIELDS: &[&str] = &[
    "amount", "count", "rate", "weight", "price", "level", "size", "score", "total", "balance",
    "quantity", "discount", "tax", "stock", "duration",
];
const SERVICE_FIELDS: &[&str] = &[
    "threshold",
    "factor",
    "offset",
    "capacity",
    "margin",
    "quota",
];
const ENTITY_VERBS: &[&str] = &["scaled", "adjusted", "weighted", "net", "gross", "capped"];
const SERVICE_VERBS: &[&str] = &[
    "audit",
    "price",
    "rank",
    "check",
    "estimate",
    "summarize",
    "review",
    "evaluate",
    "measure",
];
const OWN_VERBS: &[&str] = &["adjust", "clamp", "combine", "normalize", "bound"];

fn cap(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_ascii_uppercase().to_string() + c.as_str(),
        None => String::new(),
    }
}

struct Entity {
    name: String,
    fields: Vec<&'static str>,
}

fn entity_source(rng: &mut ChaCha8Rng, e: &Entity) -> String {
    let mut s = format!("class {} {{\n", e.name);
    for f in &e.fields {
        let _ = writeln!(s, "    int {f};");
    }
    for f in &e.fields {
        let _ = writeln!(s, "    int get{}() {{ return {f}; }}", cap(f));
        let _ = writeln!(s, "    void set{}(int value) {{ {f} = value; }}", cap(f));
    }
    let mut verbs = ENTITY_VERBS.to_vec();
    verbs.shuffle(rng);
    for verb in verbs.iter().take(rng.random_range(2..=3)) {
        let a = e.fields.choose(rng).expect("fields");
        let b = e.fields.choose(rng).expect("fields");
        let name = format!("{verb}{}", cap(a));
        let body = match rng.random_range(0..3) {
            0 => format!("int t = {a} * q; if (t > {b}) {{ t = t - {b}; }} return t + {a};"),
            1 => format!("int t = {a} + {b}; while (t > q) {{ t = t - q; }} return t;"),
            _ => format!("return q > {a} ? {b} * q : {a} - {b};"),
        };
        let _ = writeln!(s, "    int {name}(int q) {{ {body} }}");
    }
    s.push_str("}\n");
    s
}

fn getter(rng: &mut ChaCha8Rng, var: &str, e: &Entity) -> String {
    let f = e.fields.choose(rng).expect("fields");
    if rng.random_bool(0.3) {
        format!("{var}.{f}")
    } else {
        format!("{var}.get{}()", cap(f))
    }
}

fn service_source(rng: &mut ChaCha8Rng, name: &str, entities: &[Entity]) -> String {
    let mut fields = SERVICE_FIELDS.to_vec();
    fields.shuffle(rng);
    let fields: Vec<&str> = fields.into_iter().take(2).collect();
    let (f0, f1) = (fields[0], fields[1]);
    let mut s = format!("class {name} {{\n");
    for f in &fields {
        let _ = writeln!(s, "    int {f};");
    }
    let _ = writeln!(s, "    {name}(int a) {{ {f0} = a; {f1} = a * 2; }}");

    let mut own = OWN_VERBS.to_vec();
    own.shuffle(rng);
    let _ = writeln!(
        s,
        "    int {}(int q) {{ int t = q * {f0}; if (t > {f1}) {{ t = {f1}; }} return t + {f0}; }}",
        own[0]
    );
    let _ = writeln!(
        s,
        "    int {}(int a, int b) {{ return {}(a) + {}(b) * {f1}; }}",
        own[1], own[0], own[0]
    );

    let mut verbs = SERVICE_VERBS.to_vec();
    verbs.shuffle(rng);
    for verb in verbs.iter().take(3) {
        let e = entities.choose(rng).expect("entities");
        let other = entities.choose(rng).expect("entities");
        let name = format!("{verb}{}", e.name);
        let (g1, g2, g3) = (
            getter(rng, "x", e),
            getter(rng, "x", e),
            getter(rng, "x", e),
        );
        let line = match rng.random_range(0..4) {
            0 => format!("int {name}({} x, int q) {{ int t = {g1} * q; if (t > {g2}) {{ t = t - {g3}; }} return t; }}", e.name),
            1 => format!("boolean {name}({} x, int q) {{ int t = {g1} + {g2}; return t > q && {g3} > 0; }}", e.name),
            2 if other.name != e.name => {
                let h = getter(rng, "y", other);
                format!("int {name}({} x, {} y) {{ int t = {g1} - {h}; while (t > {g2}) {{ t = t - {g3}; }} return t; }}", e.name, other.name)
            }
            _ => format!("int {name}({} x) {{ int t = {g1}; x.set{}(t + {g2}); return t * {g3}; }}", e.name, cap(e.fields[0])),
        };
        let _ = writeln!(s, "    {line}");
    }
    s.push_str("}\n");
    s
}

/// Source files of one generated project, as `(relative path, text)`.
pub fn project_sources(project: &str, seed: u64) -> Vec<(String, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nouns = NOUNS.to_vec();
    nouns.shuffle(&mut rng);
    let entities: Vec<Entity> = nouns[..4]
        .iter()
        .map(|n| {
            let mut f = ENTITY_FIELDS.to_vec();
            f.shuffle(&mut rng);
            let k = rng.random_range(2..=4);
            Entity {
                name: n.to_string(),
                fields: f.into_iter().take(k).collect(),
            }
        })
        .collect();
    let mut files = Vec::new();
    for e in &entities {
        files.push((
            format!("{project}/model/{}.java", e.name),
            entity_source(&mut rng, e),
        ));
    }
    for (i, n) in nouns[4..7].iter().enumerate() {
        let name = format!(
            "{n}{}",
            SERVICE_SUFFIXES
                [(i + rng.random_range(0..SERVICE_SUFFIXES.len())) % SERVICE_SUFFIXES.len()]
        );
        files.push((
            format!("{project}/service/{name}.java"),
            service_source(&mut rng, &name, &entities),
        ));
    }
    files
}

/// `count` projects named `proj00`, `proj01`, ...
pub fn generate_corpus(count: usize, seed: u64) -> Corpus {
    let units: Vec<SourceUnit> = (0..count)
        .flat_map(|i| {
            project_sources(
                &format!("proj{i:02}"),
                seed.wrapping_mul(1_000_003).wrapping_add(i as u64),
            )
        })
        .map(|(path, text)| parse_unit(&text, &path).expect("generated source parses"))
        .collect();
    Corpus::new(units)
}

/// `count` projects of which the last `holdout` form the second corpus.
pub fn generate_split(count: usize, holdout: usize, seed: u64) -> (Corpus, Corpus) {
    let all = generate_corpus(count, seed);
    let cut = count.saturating_sub(holdout);
    let held: Vec<String> = all.projects().into_iter().skip(cut).collect();
    let (eval, train): (Vec<SourceUnit>, Vec<SourceUnit>) = all.units.into_iter().partition(|u| {
        held.iter()
            .any(|p| u.file_path.starts_with(&format!("{p}/")))
    });
    (Corpus::new(train), Corpus::new(eval))
}

// ---- random methods ----------------------------------------------------------

struct MethodGen<'r> {
    rng: &'r mut ChaCha8Rng,
    vars: Vec<String>,
    next_var: usize,
}

impl MethodGen<'_> {
    fn atom(&mut self) -> String {
        match self.rng.random_range(0..6) {
            0 => self.rng.random_range(0..100).to_string(),
            1 => ["\"s\"", "true", "null", "2.5"]
                .choose(self.rng)
                .expect("non-empty")
                .to_string(),
            _ => self.vars.choose(self.rng).expect("vars").clone(),
        }
    }

    fn expr(&mut self, depth: u32) -> String {
        if depth == 0 {
            return self.atom();
        }
        match self.rng.random_range(0..8) {
            0 | 1 => {
                let op = ["+", "-", "*", "<", "==", "&&", "%"]
                    .choose(self.rng)
                    .expect("ops");
                format!(
                    "{} {op} {}",
                    self.operand(depth - 1),
                    self.operand(depth - 1)
                )
            }
            2 => format!("({})", self.expr(depth - 1)),
            3 => format!(
                "{} ? {} : {}",
                self.operand(depth - 1),
                self.operand(depth - 1),
                self.operand(depth - 1)
            ),
            4 => {
                let n = self.rng.random_range(0..3);
                let args: Vec<String> = (0..n).map(|_| self.expr(depth - 1)).collect();
                let name = ["g", "h", "size"].choose(self.rng).expect("names");
                if self.rng.random_bool(0.5) {
                    let recv = self.vars.choose(self.rng).expect("vars").clone();
                    format!("{recv}.{name}({})", args.join(", "))
                } else {
                    format!("{name}({})", args.join(", "))
                }
            }
            5 => format!(
                "{}.{}",
                self.vars.choose(self.rng).expect("vars"),
                ["v", "next", "len"].choose(self.rng).expect("f")
            ),
            _ => self.atom(),
        }
    }

    /// An operand that needs no parentheses inside a binary or conditional.
    fn operand(&mut self, depth: u32) -> String {
        let e = self.expr(depth);
        if e.contains(' ') {
            format!("({e})")
        } else {
            e
        }
    }

    fn block(&mut self, depth: u32, out: &mut String) {
        let n = self.rng.random_range(1..4);
        for _ in 0..n {
            self.statement(depth, out);
        }
    }

    fn statement(&mut self, depth: u32, out: &mut String) {
        let choice = if depth == 0 {
            self.rng.random_range(0..3)
        } else {
            self.rng.random_range(0..6)
        };
        match choice {
            0 => {
                let v = format!("v{}", self.next_var);
                self.next_var += 1;
                let e = self.expr(2);
                let _ = write!(out, "int {v} = {e}; ");
                self.vars.push(v);
            }
            1 => {
                let t = self.vars.choose(self.rng).expect("vars").clone();
                let e = self.expr(2);
                let _ = write!(out, "{t} = {e}; ");
            }
            2 => {
                let e = self.expr(1);
                let _ = write!(out, "g({e}); ");
            }
            3 | 4 => {
                let c = self.expr(2);
                let _ = write!(out, "if ({c}) {{ ");
                let scope = self.vars.len();
                self.block(depth - 1, out);
                self.vars.truncate(scope);
                out.push_str("} ");
                if choice == 4 {
                    out.push_str("else { ");
                    self.block(depth - 1, out);
                    self.vars.truncate(scope);
                    out.push_str("} ");
                }
            }
            _ => {
                let c = self.expr(1);
                let _ = write!(out, "while ({c}) {{ ");
                let scope = self.vars.len();
                self.block(depth - 1, out);
                self.vars.truncate(scope);
                out.push_str("} ");
            }
        }
    }
}

/// Source of a one-class, one-method program drawn from the subset grammar.
pub fn random_method_source(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = MethodGen {
        rng: &mut rng,
        vars: vec!["a".into(), "b".into(), "c".into()],
        next_var: 0,
    };
    let mut body = String::new();
    g.block(2, &mut body);
    let ret = g.expr(2);
    format!("class R {{ int v; int f(int a, Node b, int c) {{ {body}return {ret}; }} }}")
}

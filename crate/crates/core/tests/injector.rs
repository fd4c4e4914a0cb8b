use std::collections::{BTreeSet, HashMap};

use mmrec::corpus::Corpus;
use mmrec::embed::CodeVector;
use mmrec::frontend::{parse_unit, print_unit, ClassId, MethodId};
use mmrec::injector::{
    build_dataset, classify, find_candidates, find_movable, inject, is_delegation, is_getter,
    is_setter, perform_move, split_dataset, split_dataset_with, CandidateMove, DatasetSplit,
    Exclusion, InjectError, LabeledExample, MovableFilter, SplitRatio,
};
use mmrec::synth::generate_corpus;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ITEM: &str = "class Item {
    int price;
    int qty;
    int getPrice() { return price; }
    void setPrice(int p) { price = p; }
}";

const CART: &str = "class Cart {
    int count;
    Cart(Item i) { count = 0; }
    static int twice(Item i) { return i.price * 2; }
    int size() { return 3; }
    void nothing(Item i) { }
    int forward(Item i, int k) { return cost(i, k); }
    int cost(Item i, int k) { return i.price * k; }
    int withCount(Item i) { return i.price + count; }
    boolean cheap(Item i) { return i.price < 10; }
}";

const REPORT: &str = "class Report {
    int total(Item a, int n) { int t = a.price * a.qty; return t + n; }
    int audit(Cart c) { int s = c.count; return s + 1; }
}";

fn shop() -> Corpus {
    Corpus::new(vec![
        parse_unit(ITEM, "shop/Item.java").unwrap(),
        parse_unit(CART, "shop/Cart.java").unwrap(),
        parse_unit(REPORT, "shop/Report.java").unwrap(),
    ])
}

fn mid(class: &str, name: &str, arity: usize) -> MethodId {
    MethodId::new(&format!("shop/{class}.java"), class, name, arity)
}

fn cid(class: &str) -> ClassId {
    ClassId::new(&format!("shop/{class}.java"), class)
}

#[test]
fn hand_labeled_fixture() {
    let corpus = shop();
    assert_eq!(corpus.method_count(), 12);
    let expected: HashMap<MethodId, Option<Exclusion>> = [
        (mid("Item", "getPrice", 0), Some(Exclusion::NoParameters)),
        (mid("Item", "setPrice", 1), Some(Exclusion::Setter)),
        (mid("Cart", "Cart", 1), Some(Exclusion::Constructor)),
        (mid("Cart", "twice", 1), Some(Exclusion::Static)),
        (mid("Cart", "size", 0), Some(Exclusion::NoParameters)),
        (mid("Cart", "nothing", 1), Some(Exclusion::Empty)),
        (mid("Cart", "forward", 2), Some(Exclusion::Delegation)),
        (mid("Cart", "cost", 2), None),
        (
            mid("Cart", "withCount", 1),
            Some(Exclusion::UsesOriginState),
        ),
        (mid("Cart", "cheap", 1), None),
        (mid("Report", "total", 2), None),
        (mid("Report", "audit", 1), None),
    ]
    .into_iter()
    .collect();
    for (class, m) in corpus.methods() {
        assert_eq!(
            classify(class, m, MovableFilter::STRICT),
            expected[&m.id],
            "{}",
            m.id
        );
    }

    let got: Vec<CandidateMove> = find_movable(&corpus);
    let ids: BTreeSet<MethodId> = got.iter().map(|c| c.method_id.clone()).collect();
    let want: BTreeSet<MethodId> = [
        mid("Cart", "cost", 2),
        mid("Cart", "cheap", 1),
        mid("Report", "total", 2),
        mid("Report", "audit", 1),
    ]
    .into_iter()
    .collect();
    assert_eq!(ids, want);
    for c in &got {
        let want_target = if c.method_id.0.contains("audit") {
            cid("Cart")
        } else {
            cid("Item")
        };
        assert_eq!(c.target_class_ids, vec![want_target]);
        assert!(!c.target_class_ids.contains(&c.origin_class_id));
    }

    let relaxed: BTreeSet<MethodId> = find_candidates(&corpus, MovableFilter::RELAXED)
        .into_iter()
        .map(|c| c.method_id)
        .collect();
    assert_eq!(relaxed.len(), 5);
    assert!(relaxed.contains(&mid("Cart", "withCount", 1)));
}

#[test]
fn getter_is_structural_not_by_name() {
    let unit = parse_unit(
        "class G { int x; int getY(Node n) { return n.y; } int fetch(Node n) { return x; } }",
        "g/G.java",
    )
    .unwrap();
    let c = &unit.classes[0];
    assert!(!is_getter(c, &c.methods[0]));
    assert!(is_getter(c, &c.methods[1]));
    assert!(!is_setter(c, &c.methods[0]));
}

#[test]
fn delegation_needs_every_parameter() {
    let unit = parse_unit(
        "class D { int a(Node n, int k) { return n.g(k); } int b(Node n, int k) { return g(n, k); } void c(Node n) { n.h(n); } }",
        "d/D.java",
    )
    .unwrap();
    let ms = &unit.classes[0].methods;
    assert!(!is_delegation(&ms[0]));
    assert!(is_delegation(&ms[1]));
    assert!(is_delegation(&ms[2]));
}

#[test]
fn qualifier_rewrite_and_counts() {
    let corpus = shop();
    let (moved, entry) = perform_move(&corpus, &mid("Cart", "cheap", 1), &cid("Item")).unwrap();
    assert_eq!(entry.moved_method_id, mid("Item", "cheap", 1));
    assert_eq!(entry.original_class_id, cid("Cart"));
    assert_eq!(entry.injected_class_id, cid("Item"));
    let text = print_unit(
        moved
            .units
            .iter()
            .find(|u| u.file_path == "shop/Item.java")
            .unwrap(),
    );
    assert!(text.contains("boolean cheap(Cart i)"), "{text}");
    assert!(text.contains("return price < 10;"), "{text}");

    let before = |c: &Corpus, k: &str| c.class(&cid(k)).unwrap().methods.len();
    assert_eq!(before(&moved, "Cart"), before(&corpus, "Cart") - 1);
    assert_eq!(before(&moved, "Item"), before(&corpus, "Item") + 1);

    for u in &moved.units {
        assert_eq!(&parse_unit(&print_unit(u), &u.file_path).unwrap(), u);
    }
}

#[test]
fn invalid_moves_are_refused() {
    let corpus = shop();
    assert!(matches!(
        perform_move(&corpus, &mid("Cart", "cost", 2), &cid("Nowhere")),
        Err(InjectError::UnresolvedTarget(_))
    ));
    assert!(matches!(
        perform_move(&corpus, &mid("Cart", "twice", 1), &cid("Item")),
        Err(InjectError::NotMovable { .. })
    ));
    assert!(matches!(
        perform_move(&corpus, &mid("Report", "total", 2), &cid("Cart")),
        Err(InjectError::NotMovable { .. })
    ));
}

#[test]
fn every_injected_move_reverses() {
    let corpus = generate_corpus(4, 21);
    let (mutated, truth) = inject(&corpus, 5, 21);
    assert_eq!(truth.len(), 20);
    let mut sorted = truth.clone();
    sorted.sort();
    assert_eq!(sorted, truth);

    for e in &truth {
        let (back, back_entry) =
            perform_move(&mutated, &e.moved_method_id, &e.original_class_id).unwrap();
        assert_eq!(back_entry.injected_class_id, e.original_class_id);
        let (_, original) = corpus
            .method(&back_entry.moved_method_id)
            .expect("original id");
        let (_, restored) = back.method(&back_entry.moved_method_id).unwrap();
        assert_eq!(restored, original);
    }

    // Moving everything back in reverse restores the corpus.
    let mut current = mutated.clone();
    let mut replay: Vec<_> = truth.clone();
    replay.sort_by_key(|e| e.moved_method_id.clone());
    for e in replay.iter().rev() {
        current = perform_move(&current, &e.moved_method_id, &e.original_class_id)
            .unwrap()
            .0;
    }
    assert!(current.same_structure(&corpus));
    assert!(!mutated.same_structure(&corpus));

    for u in &mutated.units {
        assert_eq!(&parse_unit(&print_unit(u), &u.file_path).unwrap(), u);
    }
}

#[test]
fn injection_is_seeded() {
    let corpus = generate_corpus(3, 2);
    assert_eq!(inject(&corpus, 3, 9), inject(&corpus, 3, 9));
    assert_ne!(inject(&corpus, 3, 9).1, inject(&corpus, 3, 10).1);
}

/// Deterministic stand-in embeddings: every method gets a distinct vector.
fn fake_vectors(corpus: &Corpus, d: usize) -> HashMap<MethodId, CodeVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    corpus
        .methods()
        .map(|(_, m)| {
            (
                m.id.clone(),
                CodeVector {
                    values: (0..d).map(|_| rng.random_range(-1.0..1.0)).collect(),
                    source: m.id.0.clone(),
                },
            )
        })
        .collect()
}

#[test]
fn dataset_is_balanced_by_full_scan() {
    let corpus = generate_corpus(5, 4);
    let vecs = fake_vectors(&corpus, 4);
    let cands = find_movable(&corpus);
    let ds = build_dataset(&corpus, &vecs, &cands);
    let expected_rows: usize = cands.iter().map(|c| 2 * c.target_class_ids.len()).sum();
    assert_eq!(ds.len(), expected_rows);

    let mut pos = 0;
    let mut neg = 0;
    let origin: HashMap<&MethodId, &ClassId> = cands
        .iter()
        .map(|c| (&c.method_id, &c.origin_class_id))
        .collect();
    for e in &ds {
        assert_eq!(e.feature.len(), 8);
        match e.label {
            1 => {
                pos += 1;
                assert_eq!(&e.class_id, origin[&e.method_id]);
            }
            0 => {
                neg += 1;
                assert_ne!(&e.class_id, origin[&e.method_id]);
            }
            other => panic!("label {other}"),
        }
    }
    assert_eq!(pos, neg);

    // Positives of one method are identical duplicates.
    for c in &cands {
        let rows: Vec<&LabeledExample> = ds
            .iter()
            .filter(|e| e.method_id == c.method_id && e.label == 1)
            .collect();
        assert_eq!(rows.len(), c.target_class_ids.len());
        assert!(rows.windows(2).all(|w| w[0].feature == w[1].feature));
    }
}

#[test]
fn two_targets_give_two_pairs_and_missing_vectors_drop_symmetrically() {
    let corpus = Corpus::new(vec![
        parse_unit(
            "class A { int f(B b, C c) { return b.v + c.w; } int g(B b) { return 1; } }",
            "t/A.java",
        )
        .unwrap(),
        parse_unit("class B { int v; int h(int x) { return x; } }", "t/B.java").unwrap(),
        parse_unit("class C { int w; int k(int x) { return x; } }", "t/C.java").unwrap(),
    ]);
    let cands = find_movable(&corpus);
    let f = cands
        .iter()
        .find(|c| c.method_id.0.contains(".f/"))
        .unwrap()
        .clone();
    assert_eq!(f.target_class_ids.len(), 2);
    let mut vecs = fake_vectors(&corpus, 3);
    let ds = build_dataset(&corpus, &vecs, std::slice::from_ref(&f));
    assert_eq!(ds.iter().filter(|e| e.label == 1).count(), 2);
    assert_eq!(ds.iter().filter(|e| e.label == 0).count(), 2);

    vecs.remove(&MethodId::new("t/C.java", "C", "k", 1));
    let ds = build_dataset(&corpus, &vecs, &[f]);
    assert_eq!(ds.len(), 2);
    assert_eq!(ds.iter().filter(|e| e.label == 1).count(), 1);
}

fn grouped_examples(sizes: &[usize]) -> Vec<LabeledExample> {
    sizes
        .iter()
        .enumerate()
        .flat_map(|(g, &n)| {
            (0..n).map(move |i| LabeledExample {
                method_id: MethodId::new("p/A.java", "A", &format!("m{g}"), 1),
                class_id: ClassId::new(&format!("p/C{i}.java"), &format!("C{i}")),
                label: (i % 2) as u8,
                feature: vec![g as f64, i as f64],
            })
        })
        .collect()
}

fn method_sets(s: &DatasetSplit) -> [BTreeSet<MethodId>; 3] {
    [&s.train, &s.test, &s.validate].map(|part| part.iter().map(|e| e.method_id.clone()).collect())
}

#[test]
fn split_sizes_follow_the_floor_rule() {
    let s = split_dataset(grouped_examples(&[1; 100]), 0).unwrap();
    assert_eq!(
        (s.train.len(), s.test.len(), s.validate.len()),
        (60, 20, 20)
    );
    let s = split_dataset(grouped_examples(&[1; 7]), 0).unwrap();
    assert_eq!((s.train.len(), s.test.len(), s.validate.len()), (5, 1, 1));
    assert_eq!(
        split_dataset(grouped_examples(&[1; 4]), 0),
        Err(InjectError::TooFew(4))
    );
    let r = SplitRatio {
        train: 8,
        test: 1,
        validate: 1,
    };
    let s = split_dataset_with(grouped_examples(&[1; 50]), r, 0).unwrap();
    assert_eq!((s.train.len(), s.test.len(), s.validate.len()), (40, 5, 5));
}

#[test]
fn generated_dataset_split_contracts() {
    let corpus = generate_corpus(15, 1);
    let vecs = fake_vectors(&corpus, 4);
    let ds = build_dataset(&corpus, &vecs, &find_movable(&corpus));
    let n = ds.len();
    let s = split_dataset(ds, 1).unwrap();
    assert!(s.test.len().abs_diff(n / 5) <= 1);
    assert!(s.validate.len().abs_diff(n / 5) <= 1);
    // Within one of the exact 3:1:1 shares.
    assert!(
        (5 * s.train.len()).abs_diff(3 * n) <= 5,
        "{} of {n}",
        s.train.len()
    );
    assert!(
        (5 * s.test.len()).abs_diff(n) <= 5,
        "{} of {n}",
        s.test.len()
    );
    assert!(
        (5 * s.validate.len()).abs_diff(n) <= 5,
        "{} of {n}",
        s.validate.len()
    );
    let [a, b, c] = method_sets(&s);
    assert!(a.is_disjoint(&b) && a.is_disjoint(&c) && b.is_disjoint(&c));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_is_order_independent_and_group_safe(
        sizes in prop::collection::vec(prop::sample::select(vec![2usize, 2, 2, 4]), 10..60),
        seed in any::<u64>(),
        shuffle_seed in any::<u64>(),
    ) {
        let ex = grouped_examples(&sizes);
        let n = ex.len();
        let a = split_dataset(ex.clone(), seed).unwrap();
        let mut shuffled = ex;
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
        let b = split_dataset(shuffled, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.train.len() + a.test.len() + a.validate.len(), n);
        prop_assert!(a.test.len().abs_diff(n / 5) <= 1);
        prop_assert!(a.validate.len().abs_diff(n / 5) <= 1);
        prop_assert!((5 * a.test.len()).abs_diff(n) <= 5);
        prop_assert!((5 * a.validate.len()).abs_diff(n) <= 5);
        let [x, y, z] = method_sets(&a);
        prop_assert!(x.is_disjoint(&y) && x.is_disjoint(&z) && y.is_disjoint(&z));
    }

    #[test]
    fn filter_soundness_on_generated_projects(seed in 0u64..40) {
        let corpus = generate_corpus(2, seed);
        for c in find_movable(&corpus) {
            let (class, m) = corpus.method(&c.method_id).unwrap();
            prop_assert!(!m.is_static && !m.is_constructor() && !m.params.is_empty());
            prop_assert!(!m.body.children.is_empty());
            prop_assert!(!is_getter(class, m) && !is_setter(class, m) && !is_delegation(m));
            prop_assert!(!c.target_class_ids.is_empty());
        }
    }
}

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::pathctx::ContextBag;

pub const UNK: &str = "<UNK>";

/// Dense string→index table. Serialized as the ordered item list only.
#[derive(Debug, Clone, Default)]
pub struct Vocab {
    items: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn from_items(items: Vec<String>) -> Self {
        let index = items
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Self { items, index }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, s: &str) -> Option<usize> {
        self.index.get(s).copied()
    }

    /// Index of `s`, or of the UNK entry (always 0 in token and path tables).
    pub fn get_or_unk(&self, s: &str) -> usize {
        self.get(s).unwrap_or(0)
    }

    pub fn item(&self, i: usize) -> &str {
        &self.items[i]
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }
}

impl PartialEq for Vocab {
    fn eq(&self, other: &Self) -> bool {
        self.items == other.items
    }
}

impl Serialize for Vocab {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.items.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vocab {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Vocab::from_items(Vec::<String>::deserialize(d)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabularies {
    pub tokens: Vocab,
    pub paths: Vocab,
    pub names: Vocab,
}

impl Vocabularies {
    /// Builds vocabularies from training data. Tokens and paths seen fewer
    /// than `min_count` times fall back to UNK; every method name is kept.
    pub fn build<'a>(
        corpus: impl IntoIterator<Item = (&'a ContextBag, &'a str)>,
        min_count: usize,
    ) -> Self {
        let mut tokens: BTreeMap<String, usize> = BTreeMap::new();
        let mut paths: BTreeMap<String, usize> = BTreeMap::new();
        let mut names: BTreeMap<String, ()> = BTreeMap::new();
        for (bag, name) in corpus {
            names.insert(name.to_string(), ());
            for c in &bag.contexts {
                *tokens.entry(c.start_token.clone()).or_default() += 1;
                *tokens.entry(c.end_token.clone()).or_default() += 1;
                *paths.entry(c.path_string()).or_default() += 1;
            }
        }
        let keep = |m: BTreeMap<String, usize>| {
            let mut v = vec![UNK.to_string()];
            v.extend(
                m.into_iter()
                    .filter(|(k, n)| *n >= min_count && k != UNK)
                    .map(|(k, _)| k),
            );
            Vocab::from_items(v)
        };
        Vocabularies {
            tokens: keep(tokens),
            paths: keep(paths),
            names: Vocab::from_items(names.into_keys().collect()),
        }
    }
}

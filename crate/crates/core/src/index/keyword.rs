use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{ColumnRef, Normalizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchTarget {
    Attribute,
    Content,
    Both,
}

pub const DEFAULT_FUZZY_DISTANCE: usize = 2;

#[derive(Debug, Clone, Default)]
pub struct KeywordIndex {
    pub value_index: BTreeMap<String, BTreeSet<ColumnRef>>,
    pub name_index: BTreeMap<String, BTreeSet<ColumnRef>>,
}

/// Normalized header plus its alphanumeric tokens.
pub fn header_tokens(header: &str, normalizer: &Normalizer) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    if let Some(full) = normalizer.normalize(header) {
        for tok in full.split(|c: char| !c.is_alphanumeric()) {
            if !tok.is_empty() {
                out.insert(tok.to_string());
            }
        }
        out.insert(full);
    }
    out
}

impl KeywordIndex {
    pub fn add_value(&mut self, value: &str, column: &ColumnRef) {
        self.value_index
            .entry(value.to_string())
            .or_default()
            .insert(column.clone());
    }

    pub fn add_header(&mut self, header: &str, column: &ColumnRef, normalizer: &Normalizer) {
        for tok in header_tokens(header, normalizer) {
            self.name_index.entry(tok).or_default().insert(column.clone());
        }
    }

    /// `term` must already be normalized.
    pub fn lookup(
        &self,
        term: &str,
        target: SearchTarget,
        fuzzy: Option<usize>,
    ) -> BTreeSet<ColumnRef> {
        let mut out = BTreeSet::new();
        if matches!(target, SearchTarget::Content | SearchTarget::Both) {
            collect(&self.value_index, term, fuzzy, &mut out);
        }
        if matches!(target, SearchTarget::Attribute | SearchTarget::Both) {
            collect(&self.name_index, term, fuzzy, &mut out);
        }
        out
    }
}

fn collect(
    postings: &BTreeMap<String, BTreeSet<ColumnRef>>,
    term: &str,
    fuzzy: Option<usize>,
    out: &mut BTreeSet<ColumnRef>,
) {
    match fuzzy {
        None | Some(0) => {
            if let Some(cols) = postings.get(term) {
                out.extend(cols.iter().cloned());
            }
        }
        Some(max) => {
            let len = term.chars().count();
            for (value, cols) in postings {
                let vlen = value.chars().count();
                if vlen.abs_diff(len) > max {
                    continue;
                }
                if strsim::levenshtein(term, value) <= max {
                    out.extend(cols.iter().cloned());
                }
            }
        }
    }
}

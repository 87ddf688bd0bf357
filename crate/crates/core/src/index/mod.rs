//! Discovery index: keyword postings, column profiles and a containment
//! graph over columns, plus the keyword / neighbor / join-path primitives.

mod graph;
mod keyword;
mod paths;
mod persist;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{profile_table, ColumnProfile, ColumnRef, LoadOptions, Normalizer, PathlessCollection, TableRef};
use crate::error::{NifflerError, Result};

pub use graph::{Edge, EdgeKind, ExactOverlap, Hypergraph, OverlapBackend, MIN_EDGE_VALUE_SET};
pub use keyword::{header_tokens, KeywordIndex, SearchTarget, DEFAULT_FUZZY_DISTANCE};
pub use paths::{path_order, JoinHop, JoinPath, DEFAULT_MAX_HOPS};
pub use persist::{load_index, save_index, INDEX_FORMAT, INDEX_VERSION};

pub const DEFAULT_THRESHOLD: f64 = 0.8;

/// Where an index was built from, kept so tools can reload the tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexOrigin {
    pub root: String,
    pub load: LoadOptions,
}

#[derive(Debug, Clone)]
pub struct DiscoveryIndex {
    build_threshold: f64,
    normalizer: Normalizer,
    keyword: KeywordIndex,
    graph: Hypergraph,
    profiles: BTreeMap<ColumnRef, ColumnProfile>,
    sources: BTreeMap<TableRef, String>,
    pub origin: Option<IndexOrigin>,
    // Derived from `graph` on build and load.
    inclusion_adjacency: BTreeMap<ColumnRef, BTreeMap<ColumnRef, f64>>,
    table_links: BTreeMap<TableRef, Vec<JoinHop>>,
}

pub fn validate_threshold(threshold: f64) -> Result<f64> {
    if threshold.is_finite() && threshold > 0.0 && threshold <= 1.0 {
        Ok(threshold)
    } else {
        Err(NifflerError::InvalidThreshold(threshold))
    }
}

pub fn build_index(collection: &PathlessCollection, threshold: f64) -> Result<DiscoveryIndex> {
    build_index_with(collection, threshold, &ExactOverlap)
}

pub fn build_index_with(
    collection: &PathlessCollection,
    threshold: f64,
    backend: &dyn OverlapBackend,
) -> Result<DiscoveryIndex> {
    let threshold = validate_threshold(threshold)?;
    if collection.is_empty() {
        return Err(NifflerError::EmptyCollection(Default::default()));
    }
    let normalizer = collection.normalizer().clone();
    let mut keyword = KeywordIndex::default();
    let mut graph = Hypergraph::default();
    let mut profiles = BTreeMap::new();
    let mut sources = BTreeMap::new();

    for table in collection.tables() {
        sources.insert(table.table_ref.clone(), table.source.clone());
        let cols = table.column_refs();
        for profile in profile_table(table) {
            let col = &profile.column;
            for v in &profile.value_set {
                keyword.add_value(v, col);
            }
            if let Some(h) = &col.header {
                keyword.add_header(h, col, &normalizer);
            }
            profiles.insert(col.clone(), profile);
        }
        graph.nodes.extend(cols.iter().cloned());
        graph.hyperedges.insert(table.table_ref.clone(), cols);
    }
    graph.nodes.sort();
    let ordered: Vec<&ColumnProfile> = profiles.values().collect();
    graph.edges = graph::build_edges(&ordered, threshold, backend);

    Ok(DiscoveryIndex::assemble(
        threshold, normalizer, keyword, graph, profiles, sources, None,
    ))
}

impl DiscoveryIndex {
    pub(crate) fn assemble(
        build_threshold: f64,
        normalizer: Normalizer,
        keyword: KeywordIndex,
        graph: Hypergraph,
        profiles: BTreeMap<ColumnRef, ColumnProfile>,
        sources: BTreeMap<TableRef, String>,
        origin: Option<IndexOrigin>,
    ) -> Self {
        let mut inclusion_adjacency: BTreeMap<ColumnRef, BTreeMap<ColumnRef, f64>> = BTreeMap::new();
        for e in graph.edges.iter().filter(|e| e.kind == EdgeKind::InclusionDependency) {
            for (a, b) in [(&e.src, &e.dst), (&e.dst, &e.src)] {
                let w = inclusion_adjacency
                    .entry(a.clone())
                    .or_default()
                    .entry(b.clone())
                    .or_insert(0.0);
                *w = w.max(e.weight);
            }
        }
        let mut table_links: BTreeMap<TableRef, Vec<JoinHop>> = BTreeMap::new();
        for (left, nbrs) in &inclusion_adjacency {
            for (right, &weight) in nbrs {
                table_links.entry(left.table.clone()).or_default().push(JoinHop {
                    left: left.clone(),
                    right: right.clone(),
                    weight,
                });
            }
        }
        for links in table_links.values_mut() {
            links.sort_by(|x, y| {
                x.right
                    .table
                    .cmp(&y.right.table)
                    .then_with(|| x.left.cmp(&y.left))
                    .then_with(|| x.right.cmp(&y.right))
            });
        }
        DiscoveryIndex {
            build_threshold,
            normalizer,
            keyword,
            graph,
            profiles,
            sources,
            origin,
            inclusion_adjacency,
            table_links,
        }
    }

    pub fn build_threshold(&self) -> f64 {
        self.build_threshold
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    pub fn keyword(&self) -> &KeywordIndex {
        &self.keyword
    }

    pub fn graph(&self) -> &Hypergraph {
        &self.graph
    }

    pub fn edges(&self) -> &[Edge] {
        &self.graph.edges
    }

    pub fn profiles(&self) -> &BTreeMap<ColumnRef, ColumnProfile> {
        &self.profiles
    }

    pub fn profile(&self, col: &ColumnRef) -> Option<&ColumnProfile> {
        self.profiles.get(col)
    }

    pub fn tables(&self) -> impl Iterator<Item = &TableRef> {
        self.graph.hyperedges.keys()
    }

    pub fn table_columns(&self, table: &TableRef) -> Option<&[ColumnRef]> {
        self.graph.hyperedges.get(table).map(Vec::as_slice)
    }

    pub fn table_source(&self, table: &TableRef) -> Option<&str> {
        self.sources.get(table).map(String::as_str)
    }

    /// Resolve `table_name.header` or `table_name.cN`.
    pub fn resolve_column(&self, spec: &str) -> Option<ColumnRef> {
        let (table_name, column) = spec.rsplit_once('.')?;
        self.graph
            .hyperedges
            .iter()
            .filter(|(t, _)| &*t.name == table_name)
            .flat_map(|(_, cols)| cols.iter())
            .find(|c| c.display_name() == column)
            .cloned()
    }

    pub fn resolve_table(&self, name: &str) -> Option<&TableRef> {
        self.graph.hyperedges.keys().find(|t| &*t.name == name)
    }

    /// Columns containing the normalized `term` in their values and/or header
    /// tokens. With `fuzzy`, values within that edit distance also match.
    pub fn search_keyword(
        &self,
        term: &str,
        target: SearchTarget,
        fuzzy: Option<usize>,
    ) -> BTreeSet<ColumnRef> {
        match self.normalizer.normalize(term) {
            Some(t) => self.keyword.lookup(&t, target, fuzzy),
            None => {
                log::warn!("search term {term:?} normalizes to null; no columns match");
                BTreeSet::new()
            }
        }
    }

    /// Columns linked to `col` by an inclusion dependency in either
    /// direction whose larger directed weight is at least `threshold`.
    pub fn neighbors(&self, col: &ColumnRef, threshold: f64) -> Result<Vec<(ColumnRef, f64)>> {
        if threshold + 1e-12 < self.build_threshold {
            return Err(NifflerError::ThresholdBelowResolution {
                requested: threshold,
                build: self.build_threshold,
            });
        }
        if !self.profiles.contains_key(col) {
            return Err(NifflerError::UnknownColumn(col.to_string()));
        }
        Ok(self
            .inclusion_adjacency
            .get(col)
            .map(|nbrs| {
                nbrs.iter()
                    .filter(|(_, &w)| w + 1e-12 >= threshold)
                    .map(|(c, &w)| (c.clone(), w))
                    .collect()
            })
            .unwrap_or_default())
    }

    /// Number of distinct `examples` present in the column's value set.
    pub fn overlap(&self, col: &ColumnRef, examples: &BTreeSet<String>) -> usize {
        self.profiles
            .get(col)
            .map(|p| examples.iter().filter(|e| p.value_set.contains(*e)).count())
            .unwrap_or(0)
    }

    pub fn inclusion_edges(&self) -> impl Iterator<Item = &Edge> {
        self.graph
            .edges
            .iter()
            .filter(|e| e.kind == EdgeKind::InclusionDependency)
    }
}

//! Pathless table collections: loading, cell normalization and column profiles.
//!
//! A collection is a bag of tables with no key or join metadata. Headers may
//! be missing and rows may be ragged; every stored row is padded to the
//! table's declared arity so that `(table, column_index)` always resolves.

mod load;
mod normalize;
mod profile;

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{NifflerError, Result};

pub use load::{load_collection, load_collection_with_warnings, LoadOptions, LoadWarning};
pub use normalize::{normalize_cell, Normalizer, DEFAULT_NULL_TOKENS};
pub use profile::{profile_column, profile_table, ColumnProfile, TypeTag};

/// Stable table identifier: a 64-bit hash of the table's path relative to the
/// collection root.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TableId(pub u64);

impl TableId {
    pub fn from_relative_path(relative: &str) -> Self {
        TableId(xxhash_rust::xxh3::xxh3_64(relative.as_bytes()))
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableRef {
    pub id: TableId,
    pub name: Arc<str>,
}

impl TableRef {
    pub fn new(id: TableId, name: impl Into<Arc<str>>) -> Self {
        TableRef {
            id,
            name: name.into(),
        }
    }
}

impl PartialEq for TableRef {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for TableRef {}

impl Hash for TableRef {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.id.hash(state);
    }
}

impl Ord for TableRef {
    fn cmp(&self, other: &Self) -> Ordering {
        self.name
            .cmp(&other.name)
            .then_with(|| self.id.cmp(&other.id))
    }
}

impl PartialOrd for TableRef {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for TableRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// A column of the collection. Identity is `(table id, column_index)`; the
/// header travels along for display and keyword search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnRef {
    pub table: TableRef,
    pub column_index: usize,
    pub header: Option<Arc<str>>,
}

impl ColumnRef {
    /// Header if present, otherwise a positional name such as `c3`.
    pub fn display_name(&self) -> String {
        match &self.header {
            Some(h) => h.to_string(),
            None => format!("c{}", self.column_index),
        }
    }
}

impl PartialEq for ColumnRef {
    fn eq(&self, other: &Self) -> bool {
        self.table.id == other.table.id && self.column_index == other.column_index
    }
}

impl Eq for ColumnRef {}

impl Hash for ColumnRef {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.table.id.hash(state);
        self.column_index.hash(state);
    }
}

impl Ord for ColumnRef {
    fn cmp(&self, other: &Self) -> Ordering {
        self.table
            .cmp(&other.table)
            .then_with(|| self.column_index.cmp(&other.column_index))
    }
}

impl PartialOrd for ColumnRef {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.table.name, self.display_name())
    }
}

/// One table of the collection.
///
/// `rows` keeps the raw cells (missing trailing cells are `None`); the
/// normalized copy is what matching, containment and joins operate on.
#[derive(Debug, Clone)]
pub struct Table {
    pub table_ref: TableRef,
    pub schema: Vec<Option<String>>,
    pub rows: Vec<Vec<Option<String>>>,
    pub source: String,
    normalized: Vec<Vec<Option<String>>>,
}

impl Table {
    pub fn new(
        table_ref: TableRef,
        schema: Vec<Option<String>>,
        rows: Vec<Vec<Option<String>>>,
        source: impl Into<String>,
        normalizer: &Normalizer,
    ) -> Result<Self> {
        let arity = schema.len();
        if arity == 0 {
            return Err(NifflerError::EmptyTable(table_ref.name.to_string()));
        }
        let rows: Vec<Vec<Option<String>>> = rows
            .into_iter()
            .map(|mut row| {
                row.resize(arity, None);
                row
            })
            .collect();
        let normalized = rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|cell| cell.as_deref().and_then(|c| normalizer.normalize(c)))
                    .collect()
            })
            .collect();
        Ok(Table {
            table_ref,
            schema,
            rows,
            source: source.into(),
            normalized,
        })
    }

    pub fn arity(&self) -> usize {
        self.schema.len()
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn name(&self) -> &str {
        &self.table_ref.name
    }

    pub fn id(&self) -> TableId {
        self.table_ref.id
    }

    pub fn column_ref(&self, column_index: usize) -> ColumnRef {
        assert!(column_index < self.arity(), "column index out of range");
        ColumnRef {
            table: self.table_ref.clone(),
            column_index,
            header: self.schema[column_index]
                .as_deref()
                .map(str::trim)
                .filter(|h| !h.is_empty())
                .map(Arc::from),
        }
    }

    pub fn column_refs(&self) -> Vec<ColumnRef> {
        (0..self.arity()).map(|i| self.column_ref(i)).collect()
    }

    /// Row-major normalized cells, same shape as `rows`.
    pub fn normalized_rows(&self) -> &[Vec<Option<String>>] {
        &self.normalized
    }

    pub fn normalized_column(&self, column_index: usize) -> impl Iterator<Item = Option<&str>> {
        self.normalized
            .iter()
            .map(move |row| row[column_index].as_deref())
    }
}

/// The corpus: tables keyed by id, in a deterministic order (sorted by
/// relative path when loaded from disk).
#[derive(Debug, Clone)]
pub struct PathlessCollection {
    tables: Vec<Table>,
    sources: BTreeSet<String>,
    normalizer: Normalizer,
    by_id: HashMap<TableId, usize>,
}

impl PathlessCollection {
    pub fn new(tables: Vec<Table>, normalizer: Normalizer) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(tables.len());
        for (pos, table) in tables.iter().enumerate() {
            if by_id.insert(table.id(), pos).is_some() {
                return Err(NifflerError::Config(format!(
                    "duplicate table id {} ({})",
                    table.id(),
                    table.name()
                )));
            }
        }
        let sources = tables.iter().map(|t| t.source.clone()).collect();
        Ok(PathlessCollection {
            tables,
            sources,
            normalizer,
            by_id,
        })
    }

    pub fn tables(&self) -> &[Table] {
        &self.tables
    }

    pub fn sources(&self) -> &BTreeSet<String> {
        &self.sources
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    pub fn table(&self, id: TableId) -> Option<&Table> {
        self.by_id.get(&id).map(|&pos| &self.tables[pos])
    }

    pub fn table_by_name(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name() == name)
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn columns(&self) -> impl Iterator<Item = ColumnRef> + '_ {
        self.tables.iter().flat_map(|t| t.column_refs())
    }

    /// Resolve a column by `table_name.header` or `table_name.cN`.
    pub fn resolve_column(&self, spec: &str) -> Option<ColumnRef> {
        let (table_name, column) = spec.rsplit_once('.')?;
        let table = self.table_by_name(table_name)?;
        table
            .column_refs()
            .into_iter()
            .find(|c| c.display_name() == column)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(name: &str, schema: &[&str], rows: &[&[&str]]) -> Table {
        Table::new(
            TableRef::new(TableId::from_relative_path(name), name),
            schema.iter().map(|s| Some(s.to_string())).collect(),
            rows.iter()
                .map(|r| r.iter().map(|c| Some(c.to_string())).collect())
                .collect(),
            "test",
            &Normalizer::default(),
        )
        .unwrap()
    }

    #[test]
    fn short_rows_are_padded_with_nulls() {
        let t = table("a.csv", &["x", "y", "z"], &[&["1"], &["1", "2", "3"]]);
        assert_eq!(t.rows[0], vec![Some("1".into()), None, None]);
        assert!(t.rows.iter().all(|r| r.len() == 3));
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let a = table("a.csv", &["x"], &[]);
        let b = table("a.csv", &["y"], &[]);
        assert!(PathlessCollection::new(vec![a, b], Normalizer::default()).is_err());
    }

    #[test]
    fn column_identity_ignores_header() {
        let t = table("a.csv", &["x", "y"], &[]);
        let mut c = t.column_ref(1);
        c.header = None;
        assert_eq!(c, t.column_ref(1));
        assert_ne!(t.column_ref(0), t.column_ref(1));
    }

    #[test]
    fn resolve_by_display_name() {
        let t = table("people", &["name", "city"], &[]);
        let coll = PathlessCollection::new(vec![t], Normalizer::default()).unwrap();
        let c = coll.resolve_column("people.city").unwrap();
        assert_eq!(c.column_index, 1);
    }
}

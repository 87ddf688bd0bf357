use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::JoinGraph;
use crate::corpus::{ColumnRef, PathlessCollection, TableRef};
use crate::error::{NifflerError, Result};
use crate::query::ExampleQuery;

pub const DEFAULT_GAMMA: usize = 50;
pub const DEFAULT_BATCH_SIZE: usize = 10;

pub type Row = Vec<Option<String>>;

/// Result rows of one join graph (or of a union of several, after
/// reduction), projected to the query attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterializedView {
    pub id: String,
    pub schema: Vec<String>,
    /// Distinct rows of normalized values.
    pub rows: BTreeSet<Row>,
    pub provenance: Vec<JoinGraph>,
    /// Ids of the views merged into this one; just `[id]` for a plain view.
    pub constituents: Vec<String>,
    pub overlap_score: usize,
    /// Joined row count before deduplication.
    pub cardinality: u64,
    pub score: f64,
}

impl MaterializedView {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn source_tables(&self) -> Vec<String> {
        let tables: BTreeSet<String> = self
            .provenance
            .iter()
            .flat_map(|g| g.nodes.iter().map(|t| t.name.to_string()))
            .collect();
        tables.into_iter().collect()
    }
}

/// Number of distinct example values found in the matching view column,
/// summed over the query attributes.
pub fn overlap_score(view: &MaterializedView, query: &ExampleQuery) -> usize {
    query
        .columns
        .iter()
        .enumerate()
        .filter(|(i, _)| *i < view.schema.len())
        .map(|(i, qc)| {
            let present: BTreeSet<&str> = view
                .rows
                .iter()
                .filter_map(|r| r[i].as_deref())
                .collect();
            qc.examples
                .iter()
                .filter(|e| present.contains(e.as_str()))
                .count()
        })
        .sum()
}

struct Relation {
    columns: Vec<ColumnRef>,
    rows: HashMap<Row, u64>,
}

impl Relation {
    fn position(&self, col: &ColumnRef) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == col)
            .ok_or_else(|| NifflerError::UnknownColumn(col.to_string()))
    }

    /// Keep only `keep` columns (in that order), merging equal rows.
    fn project(self, keep: &[ColumnRef]) -> Result<Relation> {
        let idx: Vec<usize> = keep.iter().map(|c| self.position(c)).collect::<Result<_>>()?;
        let mut rows: HashMap<Row, u64> = HashMap::with_capacity(self.rows.len());
        for (row, m) in self.rows {
            let projected: Row = idx.iter().map(|&i| row[i].clone()).collect();
            let slot = rows.entry(projected).or_insert(0);
            *slot = slot.saturating_add(m);
        }
        Ok(Relation {
            columns: keep.to_vec(),
            rows,
        })
    }
}

fn base_relation(
    collection: &PathlessCollection,
    table: &TableRef,
    needed: &[ColumnRef],
) -> Result<Relation> {
    let t = collection
        .table(table.id)
        .ok_or_else(|| NifflerError::UnknownTable(table.name.to_string()))?;
    if let Some(bad) = needed.iter().find(|c| c.column_index >= t.arity()) {
        return Err(NifflerError::UnknownColumn(bad.to_string()));
    }
    let mut rows: HashMap<Row, u64> = HashMap::new();
    for r in t.normalized_rows() {
        let key: Row = needed.iter().map(|c| r[c.column_index].clone()).collect();
        *rows.entry(key).or_insert(0) += 1;
    }
    Ok(Relation {
        columns: needed.to_vec(),
        rows,
    })
}

/// Inner equi-join `left.lcol = right.rcol`; null keys never match.
fn hash_join(left: Relation, lcol: usize, right: Relation, rcol: usize) -> Relation {
    let mut build: HashMap<&str, Vec<(&Row, u64)>> = HashMap::new();
    for (row, &m) in &right.rows {
        if let Some(k) = row[rcol].as_deref() {
            build.entry(k).or_default().push((row, m));
        }
    }
    let mut rows: HashMap<Row, u64> = HashMap::new();
    for (lrow, &lm) in &left.rows {
        let Some(k) = lrow[lcol].as_deref() else {
            continue;
        };
        if let Some(matches) = build.get(k) {
            for (rrow, rm) in matches {
                let mut joined = lrow.clone();
                joined.extend(rrow.iter().cloned());
                let slot = rows.entry(joined).or_insert(0);
                *slot = slot.saturating_add(lm.saturating_mul(*rm));
            }
        }
    }
    let mut columns = left.columns;
    columns.extend(right.columns);
    Relation { columns, rows }
}

/// Join the tree from its leaves inward and project. Returns the distinct
/// rows and the pre-deduplication row count.
pub fn materialize_graph(
    graph: &JoinGraph,
    collection: &PathlessCollection,
) -> Result<(BTreeSet<Row>, u64)> {
    if !graph.is_tree() {
        return Err(NifflerError::InvalidQuery(format!(
            "join graph is not a tree: {}",
            graph.describe()
        )));
    }
    let mut remaining = graph.edges.clone();
    let still_needed = |remaining: &[super::JoinEdgeSpec], table: Option<&TableRef>| {
        let mut cols: BTreeSet<ColumnRef> = graph.projections.iter().cloned().collect();
        for e in remaining {
            cols.insert(e.left.clone());
            cols.insert(e.right.clone());
        }
        cols.into_iter()
            .filter(|c| table.is_none_or(|t| &c.table == t))
            .collect::<Vec<_>>()
    };

    let mut relations: HashMap<TableRef, Relation> = HashMap::new();
    for t in &graph.nodes {
        let needed = still_needed(&remaining, Some(t));
        relations.insert(t.clone(), base_relation(collection, t, &needed)?);
    }

    while !remaining.is_empty() {
        let mut degree: HashMap<&TableRef, usize> = HashMap::new();
        for e in &remaining {
            *degree.entry(&e.left.table).or_insert(0) += 1;
            *degree.entry(&e.right.table).or_insert(0) += 1;
        }
        let leaf = degree
            .iter()
            .filter(|(_, &d)| d == 1)
            .map(|(t, _)| (*t).clone())
            .min()
            .expect("a tree with edges has a leaf");
        let pos = remaining
            .iter()
            .position(|e| e.left.table == leaf || e.right.table == leaf)
            .expect("leaf has an edge");
        let edge = remaining.remove(pos);
        let (leaf_col, other_col) = if edge.left.table == leaf {
            (edge.left, edge.right)
        } else {
            (edge.right, edge.left)
        };
        let other = other_col.table.clone();
        let leaf_rel = relations.remove(&leaf).expect("leaf relation");
        let other_rel = relations.remove(&other).expect("neighbor relation");
        let (lc, oc) = (leaf_rel.position(&leaf_col)?, other_rel.position(&other_col)?);
        let joined = hash_join(other_rel, oc, leaf_rel, lc);
        let keep: Vec<ColumnRef> = still_needed(&remaining, None)
            .into_iter()
            .filter(|c| joined.columns.contains(c))
            .collect();
        relations.insert(other, joined.project(&keep)?);
    }

    let (_, last) = relations.into_iter().next().expect("one relation left");
    let projected = last.project(&graph.projections)?;
    let cardinality = projected.rows.values().fold(0u64, |a, &m| a.saturating_add(m));
    Ok((projected.rows.into_keys().collect(), cardinality))
}

/// View schema: each projected column's header, or the query attribute name
/// when the column has none.
fn view_schema(graph: &JoinGraph, attribute_names: &[String]) -> Vec<String> {
    graph
        .projections
        .iter()
        .enumerate()
        .map(|(i, c)| match &c.header {
            Some(h) => h.to_string(),
            None => attribute_names
                .get(i)
                .cloned()
                .unwrap_or_else(|| c.display_name()),
        })
        .collect()
}

pub fn view_id(rank: usize) -> String {
    format!("v{:04}", rank + 1)
}

/// Lazily materializes ranked graphs `batch_size` at a time, stopping after
/// the first `gamma` graphs.
pub struct MaterializeBatches<'a> {
    graphs: &'a [JoinGraph],
    collection: &'a PathlessCollection,
    query: &'a ExampleQuery,
    next: usize,
    end: usize,
    batch_size: usize,
}

impl Iterator for MaterializeBatches<'_> {
    type Item = Vec<MaterializedView>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.end {
            return None;
        }
        let stop = (self.next + self.batch_size).min(self.end);
        let names = self.query.attribute_names();
        let mut batch = Vec::with_capacity(stop - self.next);
        for rank in self.next..stop {
            let graph = &self.graphs[rank];
            match materialize_graph(graph, self.collection) {
                Ok((rows, cardinality)) => {
                    let id = view_id(rank);
                    let mut view = MaterializedView {
                        id: id.clone(),
                        schema: view_schema(graph, &names),
                        rows,
                        provenance: vec![graph.clone()],
                        constituents: vec![id],
                        overlap_score: 0,
                        cardinality,
                        score: graph.score,
                    };
                    view.overlap_score = overlap_score(&view, self.query);
                    if view.is_empty() {
                        log::debug!("view {} is empty: {}", view.id, graph.describe());
                    }
                    batch.push(view);
                }
                Err(e) => log::error!("skipping join graph {}: {e}", graph.describe()),
            }
        }
        self.next = stop;
        Some(batch)
    }
}

pub fn materialize_batches<'a>(
    graphs: &'a [JoinGraph],
    collection: &'a PathlessCollection,
    query: &'a ExampleQuery,
    gamma: usize,
    batch_size: usize,
) -> MaterializeBatches<'a> {
    MaterializeBatches {
        graphs,
        collection,
        query,
        next: 0,
        end: gamma.min(graphs.len()),
        batch_size: batch_size.max(1),
    }
}

/// Materialize the top `gamma` of the (already ranked) graphs.
pub fn materialize(
    graphs: &[JoinGraph],
    collection: &PathlessCollection,
    query: &ExampleQuery,
    gamma: usize,
) -> Vec<MaterializedView> {
    materialize_batches(graphs, collection, query, gamma, DEFAULT_BATCH_SIZE)
        .flatten()
        .collect()
}

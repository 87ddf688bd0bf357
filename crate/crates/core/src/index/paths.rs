use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::DiscoveryIndex;
use crate::corpus::{ColumnRef, TableRef};
use crate::error::{NifflerError, Result};

pub const DEFAULT_MAX_HOPS: usize = 2;

/// One equi-join step. `weight` is the larger of the two directed containment
/// scores between the columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JoinHop {
    pub left: ColumnRef,
    pub right: ColumnRef,
    pub weight: f64,
}

impl PartialEq for JoinHop {
    fn eq(&self, other: &Self) -> bool {
        self.left == other.left && self.right == other.right
    }
}

impl Eq for JoinHop {}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinPath {
    pub hops: Vec<JoinHop>,
    pub tables_touched: Vec<TableRef>,
}

impl JoinPath {
    pub fn min_weight(&self) -> f64 {
        self.hops
            .iter()
            .map(|h| h.weight)
            .fold(f64::INFINITY, f64::min)
    }

    /// Consecutive hops chain through shared tables and the touched-table
    /// list matches the hop endpoints.
    pub fn is_well_formed(&self) -> bool {
        if self.hops.is_empty() || self.tables_touched.len() != self.hops.len() + 1 {
            return false;
        }
        let chained = self
            .hops
            .windows(2)
            .all(|w| w[0].right.table == w[1].left.table);
        let tables_match = self
            .hops
            .iter()
            .enumerate()
            .all(|(i, h)| h.left.table == self.tables_touched[i] && h.right.table == self.tables_touched[i + 1]);
        let distinct: BTreeSet<&TableRef> = self.tables_touched.iter().collect();
        chained && tables_match && distinct.len() == self.tables_touched.len()
    }

    fn cmp_refs(&self, other: &Self) -> Ordering {
        let a = self.hops.iter().map(|h| (&h.left, &h.right));
        let b = other.hops.iter().map(|h| (&h.left, &h.right));
        a.cmp(b)
    }
}

/// Ranking used for path lists: stronger weakest link first, then shorter,
/// then by column refs.
pub fn path_order(a: &JoinPath, b: &JoinPath) -> Ordering {
    b.min_weight()
        .total_cmp(&a.min_weight())
        .then_with(|| a.hops.len().cmp(&b.hops.len()))
        .then_with(|| a.cmp_refs(b))
}

impl DiscoveryIndex {
    /// All simple inclusion-dependency paths of at most `max_hops` edges from
    /// any column of `t1` to any column of `t2`.
    pub fn generate_join_paths(
        &self,
        t1: &TableRef,
        t2: &TableRef,
        max_hops: usize,
    ) -> Result<Vec<JoinPath>> {
        if t1 == t2 {
            return Err(NifflerError::SelfJoinPath);
        }
        for t in [t1, t2] {
            if !self.graph.hyperedges.contains_key(t) {
                return Err(NifflerError::UnknownTable(t.name.to_string()));
            }
        }
        let mut out = Vec::new();
        let mut hops = Vec::new();
        let mut tables = vec![t1.clone()];
        self.extend_paths(t2, max_hops, &mut hops, &mut tables, &mut out);
        out.sort_by(path_order);
        out.dedup();
        Ok(out)
    }

    fn extend_paths(
        &self,
        target: &TableRef,
        max_hops: usize,
        hops: &mut Vec<JoinHop>,
        tables: &mut Vec<TableRef>,
        out: &mut Vec<JoinPath>,
    ) {
        if hops.len() >= max_hops {
            return;
        }
        let current = tables.last().expect("path starts at a table").clone();
        let Some(links) = self.table_links.get(&current) else {
            return;
        };
        for link in links {
            let next = &link.right.table;
            if tables.contains(next) {
                continue;
            }
            let is_target = next == target;
            if !is_target && hops.len() + 1 >= max_hops {
                continue;
            }
            hops.push(link.clone());
            tables.push(next.clone());
            if is_target {
                out.push(JoinPath {
                    hops: hops.clone(),
                    tables_touched: tables.clone(),
                });
            } else {
                self.extend_paths(target, max_hops, hops, tables, out);
            }
            hops.pop();
            tables.pop();
        }
    }
}

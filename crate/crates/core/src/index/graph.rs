use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{ColumnProfile, ColumnRef, TableRef};

/// Columns with fewer distinct values than this never get edges.
pub const MIN_EDGE_VALUE_SET: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeKind {
    InclusionDependency,
    ContentSimilarity,
}

/// Directed, weighted column edge. For inclusion dependencies the weight is
/// `|Vsrc ∩ Vdst| / |Vsrc|`; for content similarity it is the Jaccard index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: ColumnRef,
    pub dst: ColumnRef,
    pub kind: EdgeKind,
    pub weight: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Hypergraph {
    pub nodes: Vec<ColumnRef>,
    pub hyperedges: BTreeMap<TableRef, Vec<ColumnRef>>,
    pub edges: Vec<Edge>,
}

/// `num / den >= threshold`, tolerant of rounding at the boundary.
pub(crate) fn ratio_meets(num: usize, den: usize, threshold: f64) -> bool {
    den > 0 && num as f64 / den as f64 + 1e-12 >= threshold
}

/// Computes value-set intersection sizes between columns.
///
/// The exact backend is the only one shipped; a sketch-based backend would
/// return estimates through the same interface.
pub trait OverlapBackend {
    /// Intersection sizes for every pair `(i, j)`, `i < j`, of the given value
    /// sets that share at least one value. Pairs for which `skip(i, j)` is true
    /// may be omitted.
    fn pairwise_overlaps(
        &self,
        sets: &[&ColumnProfile],
        skip: &dyn Fn(usize, usize) -> bool,
    ) -> Vec<(usize, usize, usize)>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ExactOverlap;

impl OverlapBackend for ExactOverlap {
    fn pairwise_overlaps(
        &self,
        sets: &[&ColumnProfile],
        skip: &dyn Fn(usize, usize) -> bool,
    ) -> Vec<(usize, usize, usize)> {
        let mut postings: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, p) in sets.iter().enumerate() {
            for v in &p.value_set {
                postings.entry(v.as_str()).or_default().push(i);
            }
        }
        let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
        for cols in postings.values() {
            for (a, &i) in cols.iter().enumerate() {
                for &j in &cols[a + 1..] {
                    if !skip(i, j) {
                        *counts.entry((i, j)).or_insert(0) += 1;
                    }
                }
            }
        }
        let mut out: Vec<(usize, usize, usize)> =
            counts.into_iter().map(|((i, j), n)| (i, j, n)).collect();
        out.sort_unstable();
        out
    }
}

/// Build all edges among `profiles` at `threshold`.
pub(crate) fn build_edges(
    profiles: &[&ColumnProfile],
    threshold: f64,
    backend: &dyn OverlapBackend,
) -> Vec<Edge> {
    let eligible: Vec<&ColumnProfile> = profiles
        .iter()
        .copied()
        .filter(|p| p.distinct_count >= MIN_EDGE_VALUE_SET)
        .collect();
    let same_table = |i: usize, j: usize| eligible[i].column.table.id == eligible[j].column.table.id;
    let mut edges = Vec::new();
    for (i, j, inter) in backend.pairwise_overlaps(&eligible, &same_table) {
        let (a, b) = (eligible[i], eligible[j]);
        let (na, nb) = (a.distinct_count, b.distinct_count);
        for (src, dst, den) in [(a, b, na), (b, a, nb)] {
            if ratio_meets(inter, den, threshold) {
                edges.push(Edge {
                    src: src.column.clone(),
                    dst: dst.column.clone(),
                    kind: EdgeKind::InclusionDependency,
                    weight: inter as f64 / den as f64,
                });
            }
        }
        let union = na + nb - inter;
        if ratio_meets(inter, union, threshold) {
            let w = inter as f64 / union as f64;
            for (src, dst) in [(a, b), (b, a)] {
                edges.push(Edge {
                    src: src.column.clone(),
                    dst: dst.column.clone(),
                    kind: EdgeKind::ContentSimilarity,
                    weight: w,
                });
            }
        }
    }
    sort_edges(&mut edges);
    edges
}

pub(crate) fn sort_edges(edges: &mut [Edge]) {
    edges.sort_by(|x, y| {
        x.kind
            .cmp(&y.kind)
            .then_with(|| x.src.cmp(&y.src))
            .then_with(|| x.dst.cmp(&y.dst))
    });
}

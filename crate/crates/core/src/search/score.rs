use super::{graph_order, JoinGraph};
use crate::corpus::ColumnRef;
use crate::index::DiscoveryIndex;

/// Average per-edge key likelihood, damped by the number of tables.
///
/// Each edge scores the larger uniqueness of its two columns. A graph with no
/// edges averages 1, so a single-table graph scores exactly 1.
pub fn score_with_uniqueness(g: &JoinGraph, uniqueness: impl Fn(&ColumnRef) -> f64) -> f64 {
    let avg = if g.edges.is_empty() {
        1.0
    } else {
        let total: f64 = g
            .edges
            .iter()
            .map(|e| uniqueness(&e.left).max(uniqueness(&e.right)))
            .sum();
        total / g.edges.len() as f64
    };
    let tables = g.table_count().max(1) as f64;
    avg / (1.0 + (1.0 + tables.ln()).ln())
}

pub fn score_join_graph(g: &JoinGraph, index: &DiscoveryIndex) -> f64 {
    score_with_uniqueness(g, |c| index.profile(c).map(|p| p.uniqueness).unwrap_or(0.0))
}

/// Score every graph and sort best first.
pub fn rank_join_graphs(graphs: &mut [JoinGraph], index: &DiscoveryIndex) {
    for g in graphs.iter_mut() {
        g.score = score_join_graph(g, index);
    }
    graphs.sort_by(graph_order);
}

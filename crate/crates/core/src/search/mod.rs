//! Join-graph search: turn per-attribute candidate columns into ranked join
//! graphs, then materialize the best ones as project-join views.

mod enumerate;
mod materialize;
mod score;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::corpus::{ColumnRef, TableRef};

pub use enumerate::{enumerate_join_graphs, EnumerationOptions, EnumerationStats};
pub use materialize::{
    materialize, materialize_batches, materialize_graph, overlap_score, view_id, MaterializedView, Row,
    DEFAULT_BATCH_SIZE, DEFAULT_GAMMA,
};
pub use score::{rank_join_graphs, score_join_graph, score_with_uniqueness};

/// An equi-join between two columns of different tables. Stored with
/// `left < right` so that edge sets compare without regard to direction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JoinEdgeSpec {
    pub left: ColumnRef,
    pub right: ColumnRef,
    pub weight: f64,
}

impl JoinEdgeSpec {
    pub fn new(a: ColumnRef, b: ColumnRef, weight: f64) -> Self {
        if a <= b {
            JoinEdgeSpec { left: a, right: b, weight }
        } else {
            JoinEdgeSpec { left: b, right: a, weight }
        }
    }
}

impl PartialEq for JoinEdgeSpec {
    fn eq(&self, other: &Self) -> bool {
        self.left == other.left && self.right == other.right
    }
}

impl Eq for JoinEdgeSpec {}

impl Ord for JoinEdgeSpec {
    fn cmp(&self, other: &Self) -> Ordering {
        self.left
            .cmp(&other.left)
            .then_with(|| self.right.cmp(&other.right))
    }
}

impl PartialOrd for JoinEdgeSpec {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A tree of tables joined on column pairs, with the columns to project
/// (one per query attribute, in query order).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JoinGraph {
    pub nodes: Vec<TableRef>,
    pub edges: Vec<JoinEdgeSpec>,
    pub projections: Vec<ColumnRef>,
    pub score: f64,
}

impl JoinGraph {
    /// Builds a graph with sorted nodes and edges; score starts at 0.
    pub fn new(
        nodes: impl IntoIterator<Item = TableRef>,
        edges: impl IntoIterator<Item = JoinEdgeSpec>,
        projections: Vec<ColumnRef>,
    ) -> Self {
        let mut nodes: Vec<TableRef> = nodes.into_iter().collect();
        nodes.sort();
        nodes.dedup();
        let mut edges: Vec<JoinEdgeSpec> = edges.into_iter().collect();
        edges.sort();
        edges.dedup();
        JoinGraph {
            nodes,
            edges,
            projections,
            score: 0.0,
        }
    }

    pub fn table_count(&self) -> usize {
        self.nodes.len()
    }

    /// Connected, acyclic, and every edge and projection lands on a node.
    pub fn is_tree(&self) -> bool {
        if self.nodes.is_empty() || self.edges.len() + 1 != self.nodes.len() {
            return false;
        }
        let pos = |t: &TableRef| self.nodes.binary_search(t).ok();
        let mut parent: Vec<usize> = (0..self.nodes.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                x = p[x];
            }
            x
        }
        for e in &self.edges {
            let (Some(a), Some(b)) = (pos(&e.left.table), pos(&e.right.table)) else {
                return false;
            };
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                return false;
            }
            parent[ra] = rb;
        }
        self.projections.iter().all(|p| pos(&p.table).is_some())
    }

    /// Readable one-line form, e.g. `a.x=b.y, b.z=c.w -> [a.n, c.v]`.
    pub fn describe(&self) -> String {
        let edges: Vec<String> = self
            .edges
            .iter()
            .map(|e| format!("{}={}", e.left, e.right))
            .collect();
        let proj: Vec<String> = self.projections.iter().map(ToString::to_string).collect();
        if edges.is_empty() {
            format!("[{}]", proj.join(", "))
        } else {
            format!("{} -> [{}]", edges.join(", "), proj.join(", "))
        }
    }
}

impl PartialEq for JoinGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges && self.projections == other.projections
    }
}

impl Eq for JoinGraph {}

/// Ranking order: higher score, then fewer tables, then edge list, then
/// projections.
pub fn graph_order(a: &JoinGraph, b: &JoinGraph) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.nodes.len().cmp(&b.nodes.len()))
        .then_with(|| a.edges.cmp(&b.edges))
        .then_with(|| a.projections.cmp(&b.projections))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::build_index;
    use crate::query::ExampleQuery;
    use crate::testutil::collection;

    fn query(names: &[&str]) -> ExampleQuery {
        ExampleQuery::new(
            names.iter().map(|n| (*n, vec!["x"])).collect(),
            &Default::default(),
        )
        .unwrap()
    }

    #[test]
    fn two_row_inner_join() {
        let c = collection(&[
            ("a", &["id", "name"], vec![vec!["1", "2"], vec!["x", "y"]]),
            ("b", &["id", "addr"], vec![vec!["1"], vec!["p"]]),
        ]);
        let a = c.table_by_name("a").unwrap();
        let b = c.table_by_name("b").unwrap();
        let g = JoinGraph::new(
            [a.table_ref.clone(), b.table_ref.clone()],
            [JoinEdgeSpec::new(a.column_ref(0), b.column_ref(0), 1.0)],
            vec![a.column_ref(1), b.column_ref(1)],
        );
        let (rows, card) = materialize_graph(&g, &c).unwrap();
        assert_eq!(rows.into_iter().collect::<Vec<_>>(), vec![vec![Some("x".into()), Some("p".into())]]);
        assert_eq!(card, 1);
    }

    #[test]
    fn duplicate_projected_rows_are_merged() {
        let c = collection(&[
            ("a", &["k", "v"], vec![vec!["1", "1", "2"], vec!["x", "x", "y"]]),
            ("b", &["k"], vec![vec!["1", "2", "2"]]),
        ]);
        let a = c.table_by_name("a").unwrap();
        let b = c.table_by_name("b").unwrap();
        let g = JoinGraph::new(
            [a.table_ref.clone(), b.table_ref.clone()],
            [JoinEdgeSpec::new(a.column_ref(0), b.column_ref(0), 1.0)],
            vec![a.column_ref(1)],
        );
        let (rows, card) = materialize_graph(&g, &c).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(card, 4);
    }

    #[test]
    fn null_keys_never_join() {
        let c = collection(&[
            ("a", &["k", "v"], vec![vec!["", "1"], vec!["x", "y"]]),
            ("b", &["k", "w"], vec![vec!["null", "1"], vec!["p", "q"]]),
        ]);
        let a = c.table_by_name("a").unwrap();
        let b = c.table_by_name("b").unwrap();
        let g = JoinGraph::new(
            [a.table_ref.clone(), b.table_ref.clone()],
            [JoinEdgeSpec::new(a.column_ref(0), b.column_ref(0), 1.0)],
            vec![a.column_ref(1), b.column_ref(1)],
        );
        let (rows, _) = materialize_graph(&g, &c).unwrap();
        assert_eq!(rows.len(), 1);
    }

    #[test]
    fn single_table_combination() {
        let c = collection(&[("a", &["x", "y"], vec![vec!["1", "2"], vec!["3", "4"]])]);
        let idx = build_index(&c, 0.8).unwrap();
        let a = c.table_by_name("a").unwrap();
        let (graphs, stats) = enumerate_join_graphs(
            &[vec![a.column_ref(0)], vec![a.column_ref(1)]],
            &idx,
            EnumerationOptions::default(),
        )
        .unwrap();
        assert_eq!(graphs.len(), 1);
        assert!(graphs[0].edges.is_empty());
        assert_eq!(graphs[0].nodes.len(), 1);
        assert_eq!(stats.single_table, 1);
        assert_eq!(stats.path_queries, 0);
    }

    /// a.k = b.k directly, and a.j = c.j, c.m = b.m through c.
    fn direct_and_detour() -> crate::corpus::PathlessCollection {
        collection(&[
            (
                "a",
                &["k", "j", "out"],
                vec![vec!["1", "2", "3"], vec!["j1", "j2", "j3"], vec!["o1", "o2", "o3"]],
            ),
            (
                "b",
                &["k", "m", "out"],
                vec![vec!["1", "2", "3"], vec!["m1", "m2", "m3"], vec!["p1", "p2", "p3"]],
            ),
            ("c", &["j", "m"], vec![vec!["j1", "j2", "j3"], vec!["m1", "m2", "m3"]]),
        ])
    }

    #[test]
    fn direct_and_two_hop_graphs() {
        let c = direct_and_detour();
        let idx = build_index(&c, 0.8).unwrap();
        let a = c.table_by_name("a").unwrap();
        let b = c.table_by_name("b").unwrap();
        let (mut graphs, _) = enumerate_join_graphs(
            &[vec![a.column_ref(2)], vec![b.column_ref(2)]],
            &idx,
            EnumerationOptions::default(),
        )
        .unwrap();
        rank_join_graphs(&mut graphs, &idx);
        assert_eq!(graphs.len(), 2);
        assert_eq!(graphs[0].nodes.len(), 2);
        assert_eq!(graphs[1].nodes.len(), 3);
        assert!(graphs.iter().all(JoinGraph::is_tree));
        assert!(graphs[0].score > graphs[1].score);

        let views = materialize(&graphs, &c, &query(&["p", "q"]), 50);
        assert_eq!(views.len(), 2);
        assert_eq!(views[0].rows, views[1].rows);
        assert_eq!(views[0].rows.len(), 3);
        assert_eq!(views[0].id, "v0001");
        assert_eq!(views[0].schema, ["out", "out"]);

        let one = enumerate_join_graphs(
            &[vec![a.column_ref(2)], vec![b.column_ref(2)]],
            &idx,
            EnumerationOptions { max_hops: 1, use_cache: true },
        )
        .unwrap()
        .0;
        assert_eq!(one.len(), 1);
    }

    #[test]
    fn unjoinable_pairs_are_queried_once() {
        let c = collection(&[
            ("a", &["x", "y"], vec![vec!["1", "2"], vec!["3", "4"]]),
            ("b", &["x", "y"], vec![vec!["5", "6"], vec!["7", "8"]]),
        ]);
        let idx = build_index(&c, 0.8).unwrap();
        let a = c.table_by_name("a").unwrap();
        let b = c.table_by_name("b").unwrap();
        let cands = vec![a.column_refs(), b.column_refs()];
        let (g, cached) = enumerate_join_graphs(&cands, &idx, EnumerationOptions::default()).unwrap();
        assert!(g.is_empty());
        assert_eq!(cached.combinations, 4);
        assert_eq!(cached.pruned, 4);
        assert_eq!(cached.path_queries, 1);
        let (_, uncached) = enumerate_join_graphs(
            &cands,
            &idx,
            EnumerationOptions { max_hops: 2, use_cache: false },
        )
        .unwrap();
        assert_eq!(uncached.path_queries, 4);
    }

    #[test]
    fn batches_cover_the_gamma_prefix() {
        let c = direct_and_detour();
        let idx = build_index(&c, 0.8).unwrap();
        let a = c.table_by_name("a").unwrap();
        let b = c.table_by_name("b").unwrap();
        let (mut graphs, _) = enumerate_join_graphs(
            &[a.column_refs(), b.column_refs()],
            &idx,
            EnumerationOptions::default(),
        )
        .unwrap();
        rank_join_graphs(&mut graphs, &idx);
        let q = query(&["p", "q"]);
        let all = materialize(&graphs, &c, &q, usize::MAX);
        let batches: Vec<Vec<MaterializedView>> = materialize_batches(&graphs, &c, &q, 5, 2).collect();
        assert_eq!(batches.iter().map(Vec::len).collect::<Vec<_>>(), [2, 2, 1]);
        let flat: Vec<MaterializedView> = batches.into_iter().flatten().collect();
        assert_eq!(flat[..], all[..5]);
    }
}

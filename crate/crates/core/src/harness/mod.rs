//! End-to-end pipeline, synthetic collections and workloads, and the
//! benchmark runner built on them.

pub mod bench;
pub mod generate;
pub mod metrics;
pub mod workload;

pub use bench::{
    columns_sweep, rows_sweep, run_benchmark, threshold_sweep, BenchConfig, BenchReport, QueryRecord,
    SummaryRow, SweepRecord, SweepReport,
};
pub use generate::{generate_collection, GeneratorSpec, GroundTruth, SyntheticCollection, TRUTH_FILE};
pub use metrics::{hit_predicate, rows_match};
pub use workload::{generate_noisy_query, generate_workload, NoiseLevel, WorkloadQuery, WorkloadSpec};

use serde::{Deserialize, Serialize};

use crate::corpus::PathlessCollection;
use crate::error::Result;
use crate::index::{DiscoveryIndex, DEFAULT_MAX_HOPS};
use crate::query::ExampleQuery;
use crate::search::{
    enumerate_join_graphs, materialize, rank_join_graphs, EnumerationOptions, EnumerationStats, JoinGraph,
    MaterializedView, DEFAULT_GAMMA,
};
use crate::selection::{select_candidates, CandidateSet, Strategy, Theta};
use crate::signals::{signal_pipeline, Reduction, SignalBundle, SignalOptions};

pub const DEFAULT_TOP_K: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub strategy: Strategy,
    pub theta: Theta,
    /// Neighbor threshold for column clustering; the index threshold if unset.
    pub cluster_threshold: Option<f64>,
    pub max_hops: usize,
    pub gamma: usize,
    pub k: usize,
    pub signals: SignalOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            strategy: Strategy::Niffler,
            theta: Theta::default(),
            cluster_threshold: None,
            max_hops: DEFAULT_MAX_HOPS,
            gamma: DEFAULT_GAMMA,
            k: DEFAULT_TOP_K,
            signals: SignalOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct QueryOutcome {
    pub candidates: Vec<CandidateSet>,
    /// Every join graph found, best first.
    pub graphs: Vec<JoinGraph>,
    pub stats: EnumerationStats,
    /// The materialized top-gamma graphs, in graph rank order.
    pub views: Vec<MaterializedView>,
    /// The top-k views by example overlap.
    pub top: Vec<MaterializedView>,
    pub bundle: SignalBundle,
    pub reduction: Reduction,
    /// Set when the query could not be answered, e.g. an attribute with no
    /// matching column.
    pub diagnostic: Option<String>,
}

/// Overlap with the examples first, then join score, then id.
pub fn rank_by_overlap(views: &[MaterializedView], k: usize) -> Vec<MaterializedView> {
    let mut out = views.to_vec();
    out.sort_by(|a, b| {
        b.overlap_score
            .cmp(&a.overlap_score)
            .then_with(|| b.score.total_cmp(&a.score))
            .then_with(|| a.id.cmp(&b.id))
    });
    out.truncate(k);
    out
}

/// Column selection, join graph search, materialization, ranking and signal
/// generation for one example query.
pub fn run_query(
    collection: &PathlessCollection,
    index: &DiscoveryIndex,
    query: &ExampleQuery,
    config: &PipelineConfig,
) -> Result<QueryOutcome> {
    let candidates = select_candidates(query, index, config.strategy, config.theta, config.cluster_threshold)?;
    let failing: Vec<&str> = candidates
        .iter()
        .filter(|c| c.is_empty())
        .map(|c| c.attribute.as_str())
        .collect();
    let diagnostic = (!failing.is_empty()).then(|| {
        format!(
            "ill-specified query: no column contains examples for {}",
            failing.join(", ")
        )
    });

    let (mut graphs, stats) = if diagnostic.is_some() {
        (Vec::new(), EnumerationStats::default())
    } else {
        let lists: Vec<_> = candidates.iter().map(CandidateSet::column_list).collect();
        let options = EnumerationOptions {
            max_hops: config.max_hops,
            use_cache: true,
        };
        enumerate_join_graphs(&lists, index, options)?
    };
    rank_join_graphs(&mut graphs, index);
    let views = materialize(&graphs, collection, query, config.gamma);
    let top = rank_by_overlap(&views, config.k);
    let (bundle, reduction) = signal_pipeline(&views, Some(query), &config.signals);
    if let Some(d) = &diagnostic {
        log::warn!("{d}");
    }
    Ok(QueryOutcome {
        candidates,
        graphs,
        stats,
        views,
        top,
        bundle,
        reduction,
        diagnostic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::build_index;

    fn setup() -> (SyntheticCollection, DiscoveryIndex) {
        let spec = GeneratorSpec {
            truths: 1,
            distractors: 0,
            decoys: 0,
            ..GeneratorSpec::default()
        };
        let s = generate_collection(&spec).unwrap();
        let index = build_index(&s.collection, 0.8).unwrap();
        (s, index)
    }

    #[test]
    fn zero_noise_query_ranks_the_truth_first() {
        let (s, index) = setup();
        let w = generate_workload(
            &s,
            &WorkloadSpec {
                noise_levels: vec![NoiseLevel::Zero],
                queries_per_truth: 1,
                ..WorkloadSpec::default()
            },
        )
        .unwrap();
        let out = run_query(&s.collection, &index, &w[0].query, &PipelineConfig::default()).unwrap();
        // Noise columns are inclusion-joinable with their truth column, so
        // they add graphs of their own; only one projects the truth columns.
        let planted: Vec<_> = out
            .graphs
            .iter()
            .filter(|g| g.projections == s.truths[0].truth_columns)
            .collect();
        assert_eq!(planted.len(), 1);
        assert_eq!(planted[0].edges, s.truths[0].graph.edges);
        assert!(rows_match(&out.top[0].rows, &s.truths[0].rows));
        assert_eq!(out.top[0].overlap_score, 6);
        assert!(out.diagnostic.is_none());
    }

    #[test]
    fn unmatched_query_reports_the_attribute() {
        let (s, index) = setup();
        let q = ExampleQuery::new(
            vec![("who", vec!["nobody here"]), ("what", vec!["t0-l1-000"])],
            s.collection.normalizer(),
        )
        .unwrap();
        let out = run_query(&s.collection, &index, &q, &PipelineConfig::default()).unwrap();
        assert!(out.views.is_empty() && out.top.is_empty());
        let d = out.diagnostic.unwrap();
        assert!(d.contains("ill-specified") && d.contains("who") && !d.contains("what"));
    }

    #[test]
    fn top_k_orders_by_overlap_then_score() {
        let mk = |id: &str, overlap, score| MaterializedView {
            id: id.into(),
            schema: vec![],
            rows: Default::default(),
            provenance: vec![],
            constituents: vec![id.into()],
            overlap_score: overlap,
            cardinality: 0,
            score,
        };
        let vs = vec![mk("v1", 2, 0.9), mk("v2", 3, 0.1), mk("v3", 2, 0.95), mk("v4", 2, 0.9)];
        let ids: Vec<String> = rank_by_overlap(&vs, 3).into_iter().map(|v| v.id).collect();
        assert_eq!(ids, ["v2", "v3", "v1"]);
    }
}

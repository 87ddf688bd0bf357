//! Relationships between candidate views, view-space reduction and the
//! contradiction signals that let a user pick among what is left.

pub mod bundle;
pub mod classify;
pub mod contradiction;
pub mod hash;
pub mod reduce;
pub mod stepper;

pub use bundle::{build_signal_bundle, SignalBundle, ViewSummary, BUNDLE_VERSION};
pub use classify::{
    classify_4c, shared_minimal_keys, ComplementaryPair, CompatibleGroup, ContainedPair,
    ContradictoryPair, FourCResult, KeyPositions, SchemaGroup, DEFAULT_MAX_KEY_SIZE,
};
pub use contradiction::{
    apply_signal_selection, consistent_user, discrimination, generate_contradictory_signals,
    pruning_curves, ContradictorySignal, PruningCurves, Side, SignalSample, DEFAULT_SAMPLE_SIZE,
    DEFAULT_SIGNAL_STEPS,
};
pub use reduce::{reduce_view_space, KeyChoice, Reduction, ReductionCounts};
pub use stepper::run_stepper;

use serde::{Deserialize, Serialize};

use crate::query::ExampleQuery;
use crate::search::MaterializedView;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalOptions {
    pub max_key_size: usize,
    pub sample_size: usize,
    pub key_choice: KeyChoice,
}

impl Default for SignalOptions {
    fn default() -> Self {
        SignalOptions {
            max_key_size: DEFAULT_MAX_KEY_SIZE,
            sample_size: DEFAULT_SAMPLE_SIZE,
            key_choice: KeyChoice::Best,
        }
    }
}

/// Classify, reduce, then derive signals over the reduced views.
pub fn signal_pipeline(
    views: &[MaterializedView],
    query: Option<&ExampleQuery>,
    options: &SignalOptions,
) -> (SignalBundle, Reduction) {
    let fourc = classify_4c(views, options.max_key_size);
    let reduction = reduce_view_space(views, &fourc, options.key_choice, query);
    let reduced_fourc = classify_4c(&reduction.views, options.max_key_size);
    let signals = generate_contradictory_signals(&reduction.views, &reduced_fourc, options.sample_size);
    (build_signal_bundle(views, fourc, signals, &reduction), reduction)
}

#[cfg(test)]
pub(crate) mod tests {
    use std::collections::BTreeSet;

    use super::*;

    pub(crate) fn view(id: &str, rows: &[&[&str]]) -> MaterializedView {
        let width = rows.first().map_or(2, |r| r.len());
        let rows: BTreeSet<Vec<Option<String>>> = rows
            .iter()
            .map(|r| r.iter().map(|c| Some(c.to_string())).collect())
            .collect();
        MaterializedView {
            id: id.to_string(),
            schema: (0..width).map(|i| format!("a{i}")).collect(),
            cardinality: rows.len() as u64,
            rows,
            provenance: Vec::new(),
            constituents: vec![id.to_string()],
            overlap_score: 0,
            score: 0.0,
        }
    }

    #[test]
    fn bundle_round_trips_through_json() {
        let vs = vec![
            view("v1", &[&["alice", "work"], &["bob", "x"]]),
            view("v2", &[&["alice", "home"], &["bob", "x"]]),
            view("v3", &[&["carol", "y"]]),
        ];
        let (bundle, reduction) = signal_pipeline(&vs, None, &SignalOptions::default());
        assert_eq!(bundle.reduction, reduction.counts);
        assert!(!bundle.signals.is_empty());
        let text = bundle.to_json().unwrap();
        assert_eq!(SignalBundle::from_json(&text).unwrap(), bundle);
    }

    #[test]
    fn stepper_applies_answers() {
        let vs = vec![
            view("v1", &[&["alice", "work"], &["bob", "x"]]),
            view("v2", &[&["alice", "home"], &["bob", "x"]]),
        ];
        let (bundle, _) = signal_pipeline(&vs, None, &SignalOptions::default());
        let first = &bundle.signals[0];
        let mut out = Vec::new();
        let left = run_stepper(&bundle, "zzz\na\n".as_bytes(), &mut out).unwrap();
        let expected: BTreeSet<String> = first.set_a.iter().cloned().collect();
        assert_eq!(left, expected);
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("unrecognized answer"));

        let quit = run_stepper(&bundle, "q\n".as_bytes(), Vec::new()).unwrap();
        assert_eq!(quit.len(), 2);
    }
}

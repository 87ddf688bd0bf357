use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::classify::FourCResult;
use super::contradiction::ContradictorySignal;
use super::reduce::{Reduction, ReductionCounts};
use crate::error::{NifflerError, Result};
use crate::search::MaterializedView;

pub const BUNDLE_VERSION: u32 = 1;

/// What a presentation layer needs to know about one view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewSummary {
    pub id: String,
    pub schema: Vec<String>,
    pub source_tables: Vec<String>,
    /// One list of `left=right` join conditions per contributing join graph.
    pub join_edges: Vec<Vec<String>>,
    pub overlap_score: usize,
    pub cardinality: u64,
    pub row_count: usize,
    pub score: f64,
    pub constituents: Vec<String>,
}

impl ViewSummary {
    pub fn of(view: &MaterializedView) -> Self {
        ViewSummary {
            id: view.id.clone(),
            schema: view.schema.clone(),
            source_tables: view.source_tables(),
            join_edges: view
                .provenance
                .iter()
                .map(|g| g.edges.iter().map(|e| format!("{}={}", e.left, e.right)).collect())
                .collect(),
            overlap_score: view.overlap_score,
            cardinality: view.cardinality,
            row_count: view.rows.len(),
            score: view.score,
            constituents: view.constituents.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalBundle {
    pub version: u32,
    /// Input views followed by any views created by merging.
    pub views: Vec<ViewSummary>,
    pub fourc: FourCResult,
    pub signals: Vec<ContradictorySignal>,
    pub reduced_view_ids: Vec<String>,
    pub reduction: ReductionCounts,
}

pub fn build_signal_bundle(
    views: &[MaterializedView],
    fourc: FourCResult,
    signals: Vec<ContradictorySignal>,
    reduction: &Reduction,
) -> SignalBundle {
    let mut summaries: Vec<ViewSummary> = views.iter().map(ViewSummary::of).collect();
    let known: BTreeSet<&str> = views.iter().map(|v| v.id.as_str()).collect();
    summaries.extend(
        reduction
            .views
            .iter()
            .filter(|v| !known.contains(v.id.as_str()))
            .map(ViewSummary::of),
    );
    SignalBundle {
        version: BUNDLE_VERSION,
        views: summaries,
        fourc,
        signals,
        reduced_view_ids: reduction.views.iter().map(|v| v.id.clone()).collect(),
        reduction: reduction.counts.clone(),
    }
}

impl SignalBundle {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let bundle: SignalBundle = serde_json::from_str(text)?;
        if bundle.version != BUNDLE_VERSION {
            return Err(NifflerError::Config(format!(
                "unsupported bundle version {}",
                bundle.version
            )));
        }
        Ok(bundle)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| NifflerError::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| NifflerError::io(path, e))?;
        SignalBundle::from_json(&text)
    }
}

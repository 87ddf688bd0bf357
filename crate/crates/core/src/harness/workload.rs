use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::generate::{GroundTruth, SyntheticCollection};
use crate::corpus::{ColumnRef, PathlessCollection};
use crate::error::{NifflerError, Result};
use crate::query::ExampleQuery;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseLevel {
    Zero,
    Medium,
    High,
}

impl NoiseLevel {
    pub const ALL: [NoiseLevel; 3] = [NoiseLevel::Zero, NoiseLevel::Medium, NoiseLevel::High];

    pub fn as_str(self) -> &'static str {
        match self {
            NoiseLevel::Zero => "zero",
            NoiseLevel::Medium => "medium",
            NoiseLevel::High => "high",
        }
    }

    /// (truth values, noise values) per column for `rows` examples.
    pub fn split(self, rows: usize) -> (usize, usize) {
        let third = rows / 3;
        match self {
            NoiseLevel::Zero => (rows, 0),
            NoiseLevel::Medium => (rows - third, third),
            NoiseLevel::High => (third, rows - third),
        }
    }
}

impl fmt::Display for NoiseLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NoiseLevel {
    type Err = NifflerError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zero" | "none" => Ok(NoiseLevel::Zero),
            "medium" => Ok(NoiseLevel::Medium),
            "high" => Ok(NoiseLevel::High),
            _ => Err(NifflerError::Config(format!("unknown noise level {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkloadSpec {
    /// How many of the collection's truths to query; `None` uses all.
    pub truths: Option<usize>,
    pub queries_per_truth: usize,
    pub noise_levels: Vec<NoiseLevel>,
    /// Example values per query column.
    pub rows: usize,
    /// Query columns; `None` uses every truth column.
    pub columns: Option<usize>,
    pub seed: u64,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            truths: None,
            queries_per_truth: 5,
            noise_levels: NoiseLevel::ALL.to_vec(),
            rows: 3,
            columns: None,
            seed: 11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadQuery {
    pub id: String,
    pub truth: usize,
    pub level: NoiseLevel,
    pub query: ExampleQuery,
}

fn column_values(collection: &PathlessCollection, col: &ColumnRef) -> Result<BTreeSet<String>> {
    let table = collection
        .table(col.table.id)
        .ok_or_else(|| NifflerError::UnknownTable(col.table.name.to_string()))?;
    Ok(table
        .normalized_column(col.column_index)
        .flatten()
        .map(String::from)
        .collect())
}

/// Sample example values for each truth column: truth values from the truth
/// view, noise values from the noise column but outside the truth column.
pub fn generate_noisy_query(
    truth: &GroundTruth,
    collection: &PathlessCollection,
    level: NoiseLevel,
    rows: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ExampleQuery> {
    let (from_truth, from_noise) = level.split(rows);
    let mut columns = Vec::with_capacity(truth.width());
    for (c, name) in truth.attribute_names.iter().enumerate() {
        let in_view: Vec<String> = truth
            .rows
            .iter()
            .filter_map(|r| r[c].clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let truth_all = column_values(collection, &truth.truth_columns[c])?;
        let pool: Vec<String> = column_values(collection, &truth.noise_columns[c])?
            .difference(&truth_all)
            .cloned()
            .collect();
        if pool.len() < from_noise {
            return Err(NifflerError::InsufficientNoisePool {
                needed: from_noise,
                available: pool.len(),
            });
        }
        let mut examples: Vec<String> = in_view
            .choose_multiple(rng, from_truth.min(in_view.len()))
            .cloned()
            .collect();
        examples.extend(pool.choose_multiple(rng, from_noise).cloned());
        columns.push((name.clone(), examples));
    }
    ExampleQuery::new(columns, collection.normalizer())
}

fn query_seed(seed: u64, truth: usize, level: NoiseLevel, n: usize) -> u64 {
    let tag = (truth as u64) << 32 | (level as u64) << 16 | n as u64;
    seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Truths x noise levels x queries, each query seeded independently so that
/// changing one axis leaves the other queries untouched.
pub fn generate_workload(synth: &SyntheticCollection, spec: &WorkloadSpec) -> Result<Vec<WorkloadQuery>> {
    if spec.rows == 0 {
        return Err(NifflerError::Config("workload needs at least one example row".into()));
    }
    let count = spec.truths.unwrap_or(synth.truths.len()).min(synth.truths.len());
    let mut out = Vec::new();
    for truth in &synth.truths[..count] {
        let width = spec.columns.unwrap_or(truth.width());
        let truth = truth.restrict(width, &synth.collection)?;
        for &level in &spec.noise_levels {
            for n in 0..spec.queries_per_truth {
                let mut rng = ChaCha8Rng::seed_from_u64(query_seed(spec.seed, truth.id, level, n));
                let query = generate_noisy_query(&truth, &synth.collection, level, spec.rows, &mut rng)?;
                out.push(WorkloadQuery {
                    id: format!("t{}-{}-{}", truth.id, level, n),
                    truth: truth.id,
                    level,
                    query,
                });
            }
        }
    }
    Ok(out)
}

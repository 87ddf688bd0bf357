use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::generate::{GroundTruth, SyntheticCollection};
use super::metrics::{hit_predicate, rows_match};
use super::workload::{generate_workload, NoiseLevel, WorkloadQuery, WorkloadSpec};
use super::{run_query, PipelineConfig, QueryOutcome};
use crate::error::{NifflerError, Result};
use crate::index::{build_index, DiscoveryIndex};
use crate::query::ExampleQuery;
use crate::selection::Strategy;
use crate::signals::{consistent_user, pruning_curves, DEFAULT_SIGNAL_STEPS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub pipeline: PipelineConfig,
    pub strategies: Vec<Strategy>,
    pub signal_steps: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            pipeline: PipelineConfig::default(),
            strategies: Strategy::ALL.to_vec(),
            signal_steps: DEFAULT_SIGNAL_STEPS,
        }
    }
}

/// One query run under one strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub query_id: String,
    pub truth: usize,
    pub noise: NoiseLevel,
    pub strategy: Strategy,
    pub hit: bool,
    pub candidate_columns: usize,
    pub candidate_groups: usize,
    pub join_graphs: usize,
    pub views: usize,
    pub reduced_views: usize,
    pub signals: usize,
    pub top_overlap: usize,
    /// Whether a user always siding with the truth keeps it to the end;
    /// empty when the truth is not among the reduced views.
    pub target_survives: Option<bool>,
    pub error: Option<String>,
    #[serde(skip)]
    pub best_curve: Vec<usize>,
    #[serde(skip)]
    pub worst_curve: Vec<usize>,
    #[serde(skip)]
    pub user_curve: Vec<usize>,
    #[serde(skip)]
    pub wall_time: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub noise: NoiseLevel,
    pub strategy: Strategy,
    pub queries: usize,
    pub hits: usize,
    pub hit_ratio: f64,
    pub failures: usize,
    pub mean_candidate_groups: f64,
    pub mean_join_graphs: f64,
    pub mean_views: f64,
    pub mean_reduced_views: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub records: Vec<QueryRecord>,
    pub summary: Vec<SummaryRow>,
}

/// The reduced view standing in for the truth: an exact match if there is
/// one, otherwise a view that contains every truth row.
fn truth_target(outcome: &QueryOutcome, truth: &GroundTruth) -> Option<String> {
    let reduced = &outcome.reduction.views;
    reduced
        .iter()
        .find(|v| rows_match(&v.rows, &truth.rows))
        .or_else(|| reduced.iter().find(|v| !truth.rows.is_empty() && truth.rows.is_subset(&v.rows)))
        .map(|v| v.id.clone())
}

fn record_outcome(
    q: &WorkloadQuery,
    strategy: Strategy,
    truth: &GroundTruth,
    outcome: Result<QueryOutcome>,
    steps: usize,
    wall_time: Duration,
) -> QueryRecord {
    let mut rec = QueryRecord {
        query_id: q.id.clone(),
        truth: q.truth,
        noise: q.level,
        strategy,
        hit: false,
        candidate_columns: 0,
        candidate_groups: 0,
        join_graphs: 0,
        views: 0,
        reduced_views: 0,
        signals: 0,
        top_overlap: 0,
        target_survives: None,
        error: None,
        best_curve: Vec::new(),
        worst_curve: Vec::new(),
        user_curve: Vec::new(),
        wall_time,
    };
    let out = match outcome {
        Ok(o) => o,
        Err(e) => {
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    rec.hit = hit_predicate(&out.views, truth);
    rec.candidate_columns = out.candidates.iter().map(|c| c.len()).sum();
    rec.candidate_groups = out.stats.combinations;
    rec.join_graphs = out.graphs.len();
    rec.views = out.views.len();
    rec.reduced_views = out.reduction.views.len();
    rec.signals = out.bundle.signals.len();
    rec.top_overlap = out.top.first().map_or(0, |v| v.overlap_score);
    rec.error = out.diagnostic.clone();

    let initial: BTreeSet<String> = out.reduction.views.iter().map(|v| v.id.clone()).collect();
    let curves = pruning_curves(&out.bundle.signals, &initial, steps);
    rec.best_curve = curves.best;
    rec.worst_curve = curves.worst;
    if let Some(target) = truth_target(&out, truth) {
        let (curve, left) = consistent_user(&out.bundle.signals, &initial, &target, steps);
        rec.user_curve = curve;
        rec.target_survives = Some(left.contains(&target));
    }
    rec
}

fn mean(values: impl Iterator<Item = usize>) -> f64 {
    let (sum, n) = values.fold((0usize, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum as f64 / n as f64
    }
}

fn summarize(records: &[QueryRecord], strategies: &[Strategy]) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for level in NoiseLevel::ALL {
        for &strategy in strategies {
            let rs: Vec<&QueryRecord> = records
                .iter()
                .filter(|r| r.noise == level && r.strategy == strategy)
                .collect();
            if rs.is_empty() {
                continue;
            }
            let hits = rs.iter().filter(|r| r.hit).count();
            out.push(SummaryRow {
                noise: level,
                strategy,
                queries: rs.len(),
                hits,
                hit_ratio: hits as f64 / rs.len() as f64,
                failures: rs.iter().filter(|r| r.error.is_some()).count(),
                mean_candidate_groups: mean(rs.iter().map(|r| r.candidate_groups)),
                mean_join_graphs: mean(rs.iter().map(|r| r.join_graphs)),
                mean_views: mean(rs.iter().map(|r| r.views)),
                mean_reduced_views: mean(rs.iter().map(|r| r.reduced_views)),
            });
        }
    }
    out
}

/// Truths restricted to each query width, computed once.
struct TruthCache<'a> {
    synth: &'a SyntheticCollection,
    cache: BTreeMap<(usize, usize), GroundTruth>,
}

impl<'a> TruthCache<'a> {
    fn new(synth: &'a SyntheticCollection) -> Self {
        TruthCache {
            synth,
            cache: BTreeMap::new(),
        }
    }

    fn get(&mut self, id: usize, width: usize) -> Result<&GroundTruth> {
        if !self.cache.contains_key(&(id, width)) {
            let truth = self
                .synth
                .truth(id)
                .ok_or_else(|| NifflerError::InvalidQuery(format!("no ground truth {id}")))?
                .restrict(width, &self.synth.collection)?;
            self.cache.insert((id, width), truth);
        }
        Ok(&self.cache[&(id, width)])
    }
}

/// Run every workload query under every strategy. Individual query failures
/// are recorded, not returned.
pub fn run_benchmark(
    synth: &SyntheticCollection,
    index: &DiscoveryIndex,
    workload: &[WorkloadQuery],
    config: &BenchConfig,
) -> Result<BenchReport> {
    let mut truths = TruthCache::new(synth);
    let mut records = Vec::with_capacity(workload.len() * config.strategies.len());
    for q in workload {
        let truth = truths.get(q.truth, q.query.width())?;
        for &strategy in &config.strategies {
            let pipeline = PipelineConfig {
                strategy,
                ..config.pipeline.clone()
            };
            let start = Instant::now();
            let outcome = run_query(&synth.collection, index, &q.query, &pipeline);
            let rec = record_outcome(q, strategy, truth, outcome, config.signal_steps, start.elapsed());
            log::debug!("{} {}: hit={} views={}", rec.query_id, strategy, rec.hit, rec.views);
            records.push(rec);
        }
    }
    let summary = summarize(&records, &config.strategies);
    Ok(BenchReport { records, summary })
}

fn csv_string<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| NifflerError::io("<csv buffer>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

#[derive(Serialize)]
struct CurveRow<'a> {
    query_id: &'a str,
    strategy: Strategy,
    step: usize,
    best: usize,
    worst: usize,
    user: Option<usize>,
}

#[derive(Serialize)]
struct TimingRow<'a> {
    query_id: &'a str,
    strategy: Strategy,
    wall_ms: f64,
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    queries: usize,
    summary: &'a [SummaryRow],
}

impl BenchReport {
    pub fn report_csv(&self) -> Result<String> {
        csv_string(&self.records)
    }

    pub fn summary_json(&self) -> Result<String> {
        let queries = self.records.iter().map(|r| &r.query_id).collect::<BTreeSet<_>>().len();
        Ok(serde_json::to_string_pretty(&SummaryFile {
            queries,
            summary: &self.summary,
        })?)
    }

    pub fn curves_csv(&self) -> Result<String> {
        csv_string(self.records.iter().flat_map(|r| {
            r.best_curve.iter().enumerate().map(move |(step, &best)| CurveRow {
                query_id: &r.query_id,
                strategy: r.strategy,
                step,
                best,
                worst: r.worst_curve[step],
                user: r.user_curve.get(step).copied(),
            })
        }))
    }

    /// Wall times vary between runs, so they live apart from the other
    /// reports.
    pub fn timings_csv(&self) -> Result<String> {
        csv_string(self.records.iter().map(|r| TimingRow {
            query_id: &r.query_id,
            strategy: r.strategy,
            wall_ms: r.wall_time.as_secs_f64() * 1e3,
        }))
    }

    /// Writes report.csv, summary.json, curves.csv and timings.csv.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| NifflerError::io(dir, e))?;
        for (name, body) in [
            ("report.csv", self.report_csv()?),
            ("summary.json", self.summary_json()?),
            ("curves.csv", self.curves_csv()?),
            ("timings.csv", self.timings_csv()?),
        ] {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| NifflerError::io(&path, e))?;
        }
        Ok(())
    }

    pub fn summary_for(&self, noise: NoiseLevel, strategy: Strategy) -> Option<&SummaryRow> {
        self.summary.iter().find(|s| s.noise == noise && s.strategy == strategy)
    }
}

/// One query at one sweep setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sweep: String,
    pub value: String,
    pub query_id: String,
    pub strategy: Strategy,
    pub join_graphs: usize,
    pub views: usize,
    pub hit: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepReport {
    pub records: Vec<SweepRecord>,
}

impl SweepReport {
    pub fn to_csv(&self) -> Result<String> {
        csv_string(&self.records)
    }

    /// Per-query series in sweep order: (query, strategy) -> [(value, graphs, views)].
    pub fn series(&self) -> BTreeMap<(String, Strategy), Vec<(String, usize, usize)>> {
        let mut out: BTreeMap<(String, Strategy), Vec<(String, usize, usize)>> = BTreeMap::new();
        for r in &self.records {
            out.entry((r.query_id.clone(), r.strategy))
                .or_default()
                .push((r.value.clone(), r.join_graphs, r.views));
        }
        out
    }
}

fn sweep_point(
    sweep: &str,
    value: String,
    synth: &SyntheticCollection,
    index: &DiscoveryIndex,
    queries: &[(String, ExampleQuery, &GroundTruth)],
    config: &BenchConfig,
    out: &mut SweepReport,
) {
    for (id, query, truth) in queries {
        for &strategy in &config.strategies {
            let pipeline = PipelineConfig {
                strategy,
                ..config.pipeline.clone()
            };
            let (join_graphs, views, hit) = match run_query(&synth.collection, index, query, &pipeline) {
                Ok(o) => (o.graphs.len(), o.views.len(), hit_predicate(&o.views, truth)),
                Err(e) => {
                    log::warn!("{sweep}={value} {id}: {e}");
                    (0, 0, false)
                }
            };
            out.records.push(SweepRecord {
                sweep: sweep.to_string(),
                value: value.clone(),
                query_id: id.clone(),
                strategy,
                join_graphs,
                views,
                hit,
            });
        }
    }
}

fn restricted(
    truths: &mut TruthCache,
    workload: &[WorkloadQuery],
) -> Result<Vec<(String, ExampleQuery, GroundTruth)>> {
    workload
        .iter()
        .map(|q| Ok((q.id.clone(), q.query.clone(), truths.get(q.truth, q.query.width())?.clone())))
        .collect()
}

/// Rebuild the index at each threshold and rerun the same workload. The
/// clustering threshold follows the index threshold.
pub fn threshold_sweep(
    synth: &SyntheticCollection,
    workload: &[WorkloadQuery],
    thresholds: &[f64],
    config: &BenchConfig,
) -> Result<SweepReport> {
    let mut truths = TruthCache::new(synth);
    let qs = restricted(&mut truths, workload)?;
    let qs: Vec<_> = qs.iter().map(|(i, q, t)| (i.clone(), q.clone(), t)).collect();
    let mut out = SweepReport::default();
    for &t in thresholds {
        let index = build_index(&synth.collection, t)?;
        let config = BenchConfig {
            pipeline: PipelineConfig {
                cluster_threshold: None,
                ..config.pipeline.clone()
            },
            ..config.clone()
        };
        sweep_point("threshold", format!("{t}"), synth, &index, &qs, &config, &mut out);
    }
    Ok(out)
}

/// Run each query on its first `w` columns for every `w` in `widths`.
pub fn columns_sweep(
    synth: &SyntheticCollection,
    index: &DiscoveryIndex,
    workload: &[WorkloadQuery],
    widths: &[usize],
    config: &BenchConfig,
) -> Result<SweepReport> {
    let mut truths = TruthCache::new(synth);
    let mut out = SweepReport::default();
    for &w in widths {
        let mut qs = Vec::new();
        for q in workload {
            if w == 0 || w > q.query.width() {
                return Err(NifflerError::Config(format!(
                    "query {} has {} columns, cannot sweep to {w}",
                    q.id,
                    q.query.width()
                )));
            }
            let query = ExampleQuery {
                columns: q.query.columns[..w].to_vec(),
            };
            qs.push((q.id.clone(), query, truths.get(q.truth, w)?.clone()));
        }
        let qs: Vec<_> = qs.iter().map(|(i, q, t)| (i.clone(), q.clone(), t)).collect();
        sweep_point("columns", w.to_string(), synth, index, &qs, config, &mut out);
    }
    Ok(out)
}

/// Regenerate the workload with each number of example rows.
pub fn rows_sweep(
    synth: &SyntheticCollection,
    index: &DiscoveryIndex,
    spec: &WorkloadSpec,
    rows: &[usize],
    config: &BenchConfig,
) -> Result<SweepReport> {
    let mut truths = TruthCache::new(synth);
    let mut out = SweepReport::default();
    for &l in rows {
        let workload = generate_workload(synth, &WorkloadSpec { rows: l, ..spec.clone() })?;
        let qs = restricted(&mut truths, &workload)?;
        let qs: Vec<_> = qs.iter().map(|(i, q, t)| (i.clone(), q.clone(), t)).collect();
        sweep_point("rows", l.to_string(), synth, index, &qs, config, &mut out);
    }
    Ok(out)
}

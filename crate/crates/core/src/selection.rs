//! Candidate columns for each query attribute.
//!
//! The default strategy clusters the columns that contain examples by their
//! containment links and keeps the best-scoring clusters. Two baselines are
//! provided for comparison: keep every matching column, or keep only the
//! columns with the most matches.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::ColumnRef;
use crate::error::{NifflerError, Result};
use crate::index::{DiscoveryIndex, SearchTarget};
use crate::query::{ExampleQuery, QueryColumn};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Niffler,
    All,
    Best,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Niffler, Strategy::All, Strategy::Best];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Niffler => "niffler",
            Strategy::All => "all",
            Strategy::Best => "best",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = NifflerError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "niffler" | "cluster" => Ok(Strategy::Niffler),
            "all" | "select-all" => Ok(Strategy::All),
            "best" | "select-best" => Ok(Strategy::Best),
            _ => Err(NifflerError::Config(format!("unknown strategy {s:?}"))),
        }
    }
}

/// How many top-scoring clusters to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Theta {
    Top(usize),
    Unbounded,
}

impl Default for Theta {
    fn default() -> Self {
        Theta::Top(1)
    }
}

impl fmt::Display for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Theta::Top(n) => write!(f, "{n}"),
            Theta::Unbounded => f.write_str("inf"),
        }
    }
}

impl FromStr for Theta {
    type Err = NifflerError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "all" | "∞" => Ok(Theta::Unbounded),
            n => match n.parse::<usize>() {
                Ok(0) | Err(_) => Err(NifflerError::Config(format!(
                    "theta must be a positive integer or 'inf', got {s:?}"
                ))),
                Ok(v) => Ok(Theta::Top(v)),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnCluster {
    pub id: usize,
    /// Columns that contain at least one example, with their overlap counts.
    pub members: BTreeMap<ColumnRef, usize>,
    /// Non-matching neighbor columns that connected the members.
    pub linked: BTreeSet<ColumnRef>,
    pub score: usize,
    pub representative: ColumnRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub attribute: String,
    pub strategy: Strategy,
    /// Selected columns with their example overlap counts.
    pub columns: BTreeMap<ColumnRef, usize>,
    /// All clusters found, best first. Empty for the baselines.
    pub clusters: Vec<ColumnCluster>,
    pub selected_clusters: Vec<usize>,
}

impl CandidateSet {
    fn empty(attribute: &str, strategy: Strategy) -> Self {
        CandidateSet {
            attribute: attribute.to_string(),
            strategy,
            columns: BTreeMap::new(),
            clusters: Vec::new(),
            selected_clusters: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn column_list(&self) -> Vec<ColumnRef> {
        self.columns.keys().cloned().collect()
    }

    /// Keep only the members of the given clusters, e.g. after a user picked
    /// them from a presented list.
    pub fn restrict_to_clusters(&self, ids: &[usize]) -> Result<CandidateSet> {
        let mut out = CandidateSet::empty(&self.attribute, self.strategy);
        out.clusters = self.clusters.clone();
        for &id in ids {
            let cluster = self
                .clusters
                .iter()
                .find(|c| c.id == id)
                .ok_or_else(|| NifflerError::InvalidQuery(format!("no cluster {id}")))?;
            out.columns
                .extend(cluster.members.iter().map(|(m, &n)| (m.clone(), n)));
            out.selected_clusters.push(id);
        }
        out.selected_clusters.sort_unstable();
        out.selected_clusters.dedup();
        Ok(out)
    }
}

/// Every column containing at least one example, with its overlap count.
pub fn matching_columns(qc: &QueryColumn, index: &DiscoveryIndex) -> BTreeMap<ColumnRef, usize> {
    let examples = qc.example_set();
    let mut seeds = BTreeSet::new();
    for e in &examples {
        seeds.extend(index.search_keyword(e, SearchTarget::Content, None));
    }
    seeds
        .into_iter()
        .map(|c| {
            let n = index.overlap(&c, &examples);
            (c, n)
        })
        .collect()
}

fn warn_ill_specified(qc: &QueryColumn) {
    log::warn!(
        "ill-specified query column {:?}: no column contains any of its examples",
        qc.name
    );
}

pub fn select_all(qc: &QueryColumn, index: &DiscoveryIndex) -> CandidateSet {
    let mut out = CandidateSet::empty(&qc.name, Strategy::All);
    out.columns = matching_columns(qc, index);
    if out.is_empty() {
        warn_ill_specified(qc);
    }
    out
}

pub fn select_best(qc: &QueryColumn, index: &DiscoveryIndex) -> CandidateSet {
    let mut out = CandidateSet::empty(&qc.name, Strategy::Best);
    let all = matching_columns(qc, index);
    if let Some(&max) = all.values().max() {
        out.columns = all.into_iter().filter(|&(_, n)| n == max).collect();
    } else {
        warn_ill_specified(qc);
    }
    out
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller root wins so component ids are order-independent.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Cluster the matching columns by containment links and keep the top
/// `theta` clusters by score (ties at the cut are kept).
///
/// `cluster_threshold` defaults to the index build threshold.
pub fn column_selection(
    qc: &QueryColumn,
    index: &DiscoveryIndex,
    theta: Theta,
    cluster_threshold: Option<f64>,
) -> Result<CandidateSet> {
    let threshold = cluster_threshold.unwrap_or(index.build_threshold());
    let mut out = CandidateSet::empty(&qc.name, Strategy::Niffler);
    let seeds = matching_columns(qc, index);
    if seeds.is_empty() {
        warn_ill_specified(qc);
        return Ok(out);
    }

    let mut nodes: BTreeMap<ColumnRef, usize> = BTreeMap::new();
    let mut links: Vec<(ColumnRef, ColumnRef)> = Vec::new();
    for seed in seeds.keys() {
        nodes.insert(seed.clone(), 0);
        for (n, _) in index.neighbors(seed, threshold)? {
            links.push((seed.clone(), n.clone()));
            nodes.insert(n, 0);
        }
    }
    for (pos, slot) in nodes.values_mut().enumerate() {
        *slot = pos;
    }
    let mut sets = DisjointSets::new(nodes.len());
    for (a, b) in &links {
        sets.union(nodes[a], nodes[b]);
    }

    let mut components: BTreeMap<usize, (BTreeMap<ColumnRef, usize>, BTreeSet<ColumnRef>)> =
        BTreeMap::new();
    for (col, &pos) in &nodes {
        let root = sets.find(pos);
        let entry = components.entry(root).or_default();
        if let Some(&n) = seeds.get(col) {
            entry.0.insert(col.clone(), n);
        } else {
            entry.1.insert(col.clone());
        }
    }

    let mut clusters: Vec<ColumnCluster> = components
        .into_values()
        .filter(|(members, _)| !members.is_empty())
        .map(|(members, linked)| {
            let score = members.values().copied().max().unwrap_or(0);
            let representative = members
                .iter()
                .find(|(_, &n)| n == score)
                .map(|(m, _)| m.clone())
                .expect("non-empty cluster");
            ColumnCluster {
                id: 0,
                members,
                linked,
                score,
                representative,
            }
        })
        .collect();
    clusters.sort_by(|a, b| {
        b.score
            .cmp(&a.score)
            .then_with(|| a.representative.cmp(&b.representative))
    });
    for (i, c) in clusters.iter_mut().enumerate() {
        c.id = i;
    }

    let cutoff = match theta {
        Theta::Unbounded => 0,
        Theta::Top(n) => clusters
            .get(n.max(1) - 1)
            .or(clusters.last())
            .map(|c| c.score)
            .unwrap_or(0),
    };
    for c in clusters.iter().filter(|c| c.score >= cutoff) {
        out.selected_clusters.push(c.id);
        out.columns
            .extend(c.members.iter().map(|(m, &n)| (m.clone(), n)));
    }
    out.clusters = clusters;
    Ok(out)
}

/// Candidate sets for every query attribute under one strategy.
pub fn select_candidates(
    query: &ExampleQuery,
    index: &DiscoveryIndex,
    strategy: Strategy,
    theta: Theta,
    cluster_threshold: Option<f64>,
) -> Result<Vec<CandidateSet>> {
    query
        .columns
        .iter()
        .map(|qc| match strategy {
            Strategy::Niffler => column_selection(qc, index, theta, cluster_threshold),
            Strategy::All => Ok(select_all(qc, index)),
            Strategy::Best => Ok(select_best(qc, index)),
        })
        .collect()
}

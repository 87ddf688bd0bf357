use std::collections::{BTreeSet, HashMap, HashSet};
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::{JoinEdgeSpec, JoinGraph};
use crate::corpus::{ColumnRef, TableRef};
use crate::error::Result;
use crate::index::{DiscoveryIndex, JoinPath, DEFAULT_MAX_HOPS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationOptions {
    pub max_hops: usize,
    /// Remember path lookups per table pair and skip combinations that
    /// contain a pair already known to be unjoinable.
    pub use_cache: bool,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions {
            max_hops: DEFAULT_MAX_HOPS,
            use_cache: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationStats {
    /// Column combinations considered (one column per attribute).
    pub combinations: usize,
    /// Combinations answered from a single table.
    pub single_table: usize,
    /// Combinations dropped because some table pair has no path.
    pub pruned: usize,
    /// Calls to the path primitive.
    pub path_queries: usize,
    /// Distinct join graphs produced.
    pub graphs: usize,
}

type TablePair = (TableRef, TableRef);

fn ordered_pair(a: &TableRef, b: &TableRef) -> TablePair {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

struct Enumerator<'a> {
    index: &'a DiscoveryIndex,
    options: EnumerationOptions,
    paths: HashMap<TablePair, Rc<Vec<JoinPath>>>,
    unjoinable: HashSet<TablePair>,
    trees: HashMap<usize, Rc<Vec<Vec<(usize, usize)>>>>,
    stats: EnumerationStats,
}

impl<'a> Enumerator<'a> {
    fn paths_for(&mut self, pair: &TablePair) -> Result<Rc<Vec<JoinPath>>> {
        if self.options.use_cache {
            if let Some(p) = self.paths.get(pair) {
                return Ok(p.clone());
            }
        }
        self.stats.path_queries += 1;
        let found = Rc::new(
            self.index
                .generate_join_paths(&pair.0, &pair.1, self.options.max_hops)?,
        );
        if self.options.use_cache {
            self.paths.insert(pair.clone(), found.clone());
            if found.is_empty() {
                self.unjoinable.insert(pair.clone());
            }
        }
        Ok(found)
    }

    /// Spanning trees of the complete graph on `k` vertices, as edge lists.
    fn spanning_trees(&mut self, k: usize) -> Rc<Vec<Vec<(usize, usize)>>> {
        self.trees
            .entry(k)
            .or_insert_with(|| Rc::new(spanning_trees(k)))
            .clone()
    }

    fn combination(
        &mut self,
        projections: &[ColumnRef],
        out: &mut BTreeSet<(Vec<ColumnRef>, Vec<TableRef>, Vec<JoinEdgeSpec>)>,
    ) -> Result<()> {
        self.stats.combinations += 1;
        let terminals: Vec<TableRef> = projections
            .iter()
            .map(|c| c.table.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if terminals.len() == 1 {
            self.stats.single_table += 1;
            out.insert((projections.to_vec(), terminals, Vec::new()));
            return Ok(());
        }

        let mut pairs = Vec::new();
        for i in 0..terminals.len() {
            for j in i + 1..terminals.len() {
                pairs.push((i, j, ordered_pair(&terminals[i], &terminals[j])));
            }
        }
        if self.options.use_cache && pairs.iter().any(|(_, _, p)| self.unjoinable.contains(p)) {
            self.stats.pruned += 1;
            return Ok(());
        }
        let mut pair_paths: HashMap<(usize, usize), Rc<Vec<JoinPath>>> = HashMap::new();
        for (i, j, pair) in &pairs {
            let found = self.paths_for(pair)?;
            if found.is_empty() {
                self.stats.pruned += 1;
                return Ok(());
            }
            pair_paths.insert((*i, *j), found);
        }

        for tree in self.spanning_trees(terminals.len()).iter() {
            let choices: Vec<&[JoinPath]> = tree.iter().map(|e| pair_paths[e].as_slice()).collect();
            let mut pick = vec![0usize; choices.len()];
            loop {
                let mut edges = BTreeSet::new();
                let mut nodes: BTreeSet<TableRef> = terminals.iter().cloned().collect();
                for (slot, &p) in pick.iter().enumerate() {
                    let path = &choices[slot][p];
                    nodes.extend(path.tables_touched.iter().cloned());
                    for h in &path.hops {
                        edges.insert(JoinEdgeSpec::new(h.left.clone(), h.right.clone(), h.weight));
                    }
                }
                if edges.len() + 1 == nodes.len() {
                    out.insert((
                        projections.to_vec(),
                        nodes.into_iter().collect(),
                        edges.into_iter().collect(),
                    ));
                }
                if !advance(&mut pick, |slot| choices[slot].len()) {
                    break;
                }
            }
        }
        Ok(())
    }
}

/// Odometer step over mixed radices; false once every position wrapped.
fn advance(pick: &mut [usize], radix: impl Fn(usize) -> usize) -> bool {
    for slot in (0..pick.len()).rev() {
        pick[slot] += 1;
        if pick[slot] < radix(slot) {
            return true;
        }
        pick[slot] = 0;
    }
    false
}

fn spanning_trees(k: usize) -> Vec<Vec<(usize, usize)>> {
    let mut all_pairs = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            all_pairs.push((i, j));
        }
    }
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    fn rec(
        k: usize,
        all: &[(usize, usize)],
        start: usize,
        chosen: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        if chosen.len() + 1 == k {
            let mut comp: Vec<usize> = (0..k).collect();
            fn find(c: &mut [usize], mut x: usize) -> usize {
                while c[x] != x {
                    x = c[x];
                }
                x
            }
            for &(a, b) in chosen.iter() {
                let (ra, rb) = (find(&mut comp, a), find(&mut comp, b));
                if ra == rb {
                    return;
                }
                comp[ra] = rb;
            }
            out.push(chosen.clone());
            return;
        }
        for i in start..all.len() {
            chosen.push(all[i]);
            rec(k, all, i + 1, chosen, out);
            chosen.pop();
        }
    }
    rec(k, &all_pairs, 0, &mut chosen, &mut out);
    out
}

/// Join graphs for every combination of one candidate column per attribute.
///
/// Graphs come back deduplicated and in a canonical (unscored) order.
pub fn enumerate_join_graphs(
    candidates: &[Vec<ColumnRef>],
    index: &DiscoveryIndex,
    options: EnumerationOptions,
) -> Result<(Vec<JoinGraph>, EnumerationStats)> {
    let mut e = Enumerator {
        index,
        options,
        paths: HashMap::new(),
        unjoinable: HashSet::new(),
        trees: HashMap::new(),
        stats: EnumerationStats::default(),
    };
    let mut found = BTreeSet::new();
    if !candidates.is_empty() && candidates.iter().all(|c| !c.is_empty()) {
        let lists: Vec<Vec<ColumnRef>> = candidates
            .iter()
            .map(|c| {
                let mut v = c.clone();
                v.sort();
                v.dedup();
                v
            })
            .collect();
        let mut pick = vec![0usize; lists.len()];
        loop {
            let combo: Vec<ColumnRef> = pick.iter().enumerate().map(|(i, &p)| lists[i][p].clone()).collect();
            e.combination(&combo, &mut found)?;
            if !advance(&mut pick, |slot| lists[slot].len()) {
                break;
            }
        }
    }
    let graphs: Vec<JoinGraph> = found
        .into_iter()
        .map(|(projections, nodes, edges)| JoinGraph::new(nodes, edges, projections))
        .collect();
    e.stats.graphs = graphs.len();
    Ok((graphs, e.stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spanning_tree_counts_follow_cayley() {
        // k^(k-2) labelled trees.
        assert_eq!(spanning_trees(2).len(), 1);
        assert_eq!(spanning_trees(3).len(), 3);
        assert_eq!(spanning_trees(4).len(), 16);
        assert_eq!(spanning_trees(5).len(), 125);
    }

    #[test]
    fn odometer_visits_every_tuple() {
        let mut pick = vec![0, 0];
        let mut seen = vec![pick.clone()];
        while advance(&mut pick, |s| [2, 3][s]) {
            seen.push(pick.clone());
        }
        assert_eq!(seen.len(), 6);
    }
}

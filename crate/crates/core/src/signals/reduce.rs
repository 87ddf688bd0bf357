use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::classify::{FourCResult, KeyPositions};
use crate::query::ExampleQuery;
use crate::search::{overlap_score, MaterializedView};

/// Which candidate key to union complementary views on when several apply.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyChoice {
    /// The key that merges the most views.
    #[default]
    Best,
    /// The key that merges the fewest (but at least one pair).
    Worst,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionCounts {
    pub input: usize,
    pub after_compatible: usize,
    pub after_contained: usize,
    pub after_complementary: usize,
}

#[derive(Debug, Clone)]
pub struct Reduction {
    pub views: Vec<MaterializedView>,
    pub counts: ReductionCounts,
}

/// Keep one view per compatible group.
pub fn collapse_compatible(views: &[MaterializedView], fourc: &FourCResult) -> Vec<MaterializedView> {
    let reps = fourc.representatives();
    let known: BTreeSet<&str> = fourc
        .compatible_groups
        .iter()
        .flat_map(|g| g.members.iter().map(String::as_str))
        .collect();
    views
        .iter()
        .filter(|v| reps.contains(v.id.as_str()) || !known.contains(v.id.as_str()))
        .cloned()
        .collect()
}

/// Drop every view contained in another view that is still present.
pub fn drop_contained(views: &[MaterializedView], fourc: &FourCResult) -> Vec<MaterializedView> {
    let present: BTreeSet<&str> = views.iter().map(|v| v.id.as_str()).collect();
    let dropped: BTreeSet<&str> = fourc
        .contained_pairs
        .iter()
        .filter(|p| present.contains(p.container.as_str()))
        .map(|p| p.containee.as_str())
        .collect();
    views
        .iter()
        .filter(|v| !dropped.contains(v.id.as_str()))
        .cloned()
        .collect()
}

/// Greedy cliques in id order: each view joins the first open clique whose
/// members are all complementary with it.
fn cliques(ids: &[&str], linked: &BTreeSet<(&str, &str)>) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<&str>> = Vec::new();
    let is_linked = |a: &str, b: &str| linked.contains(&(a.min(b), a.max(b)));
    for &id in ids {
        match out
            .iter_mut()
            .find(|c| c.iter().all(|m| is_linked(m, id)))
        {
            Some(c) => c.push(id),
            None => out.push(vec![id]),
        }
    }
    out.into_iter()
        .map(|c| c.into_iter().map(String::from).collect())
        .collect()
}

fn merge(members: &[&MaterializedView], query: Option<&ExampleQuery>) -> MaterializedView {
    let mut rows = BTreeSet::new();
    let mut provenance = Vec::new();
    let mut constituents = Vec::new();
    for m in members {
        rows.extend(m.rows.iter().cloned());
        provenance.extend(m.provenance.iter().cloned());
        constituents.extend(m.constituents.iter().cloned());
    }
    let mut view = MaterializedView {
        id: members.iter().map(|m| m.id.as_str()).collect::<Vec<_>>().join("+"),
        schema: members[0].schema.clone(),
        cardinality: rows.len() as u64,
        rows,
        provenance,
        constituents,
        overlap_score: members.iter().map(|m| m.overlap_score).max().unwrap_or(0),
        score: members.iter().map(|m| m.score).fold(f64::MIN, f64::max),
    };
    if let Some(q) = query {
        view.overlap_score = overlap_score(&view, q);
    }
    view
}

/// Union groups of views that are pairwise complementary on one key.
///
/// Pairs that contradict each other on any key are never merged. Each schema
/// group chooses its own key according to `choice`.
pub fn union_complementary(
    views: &[MaterializedView],
    fourc: &FourCResult,
    choice: KeyChoice,
    query: Option<&ExampleQuery>,
) -> Vec<MaterializedView> {
    let by_id: BTreeMap<&str, &MaterializedView> = views.iter().map(|v| (v.id.as_str(), v)).collect();
    let mut per_key: BTreeMap<&KeyPositions, BTreeSet<(&str, &str)>> = BTreeMap::new();
    for p in &fourc.complementary {
        if by_id.contains_key(p.a.as_str())
            && by_id.contains_key(p.b.as_str())
            && !fourc.is_contradictory(&p.a, &p.b)
        {
            let (a, b) = (p.a.as_str().min(p.b.as_str()), p.a.as_str().max(p.b.as_str()));
            per_key.entry(&p.key).or_default().insert((a, b));
        }
    }

    let mut schema_groups: BTreeMap<&[String], Vec<&str>> = BTreeMap::new();
    for v in views {
        schema_groups.entry(v.schema.as_slice()).or_default().push(v.id.as_str());
    }

    let mut out = Vec::new();
    for ids in schema_groups.values_mut() {
        ids.sort();
        let members: BTreeSet<&str> = ids.iter().copied().collect();
        let mut options: Vec<(usize, Vec<Vec<String>>)> = Vec::new();
        for links in per_key.values() {
            let local: BTreeSet<(&str, &str)> = links
                .iter()
                .filter(|(a, b)| members.contains(a) && members.contains(b))
                .copied()
                .collect();
            if local.is_empty() {
                continue;
            }
            let groups = cliques(ids, &local);
            let merged = groups.iter().map(|g| g.len() - 1).sum();
            options.push((merged, groups));
        }
        // Keys are visited in order, so on ties the first key wins.
        let picked = match choice {
            KeyChoice::Best => options.into_iter().reduce(|a, b| if b.0 > a.0 { b } else { a }),
            KeyChoice::Worst => options.into_iter().reduce(|a, b| if b.0 < a.0 { b } else { a }),
        };
        match picked {
            Some((_, groups)) => {
                for g in groups {
                    let vs: Vec<&MaterializedView> = g.iter().map(|id| by_id[id.as_str()]).collect();
                    if vs.len() == 1 {
                        out.push(vs[0].clone());
                    } else {
                        out.push(merge(&vs, query));
                    }
                }
            }
            None => out.extend(ids.iter().map(|id| by_id[id].clone())),
        }
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

/// Compatible, then contained, then complementary reduction.
pub fn reduce_view_space(
    views: &[MaterializedView],
    fourc: &FourCResult,
    choice: KeyChoice,
    query: Option<&ExampleQuery>,
) -> Reduction {
    let c1 = collapse_compatible(views, fourc);
    let c2 = drop_contained(&c1, fourc);
    let c3 = union_complementary(&c2, fourc, choice, query);
    Reduction {
        counts: ReductionCounts {
            input: views.len(),
            after_compatible: c1.len(),
            after_contained: c2.len(),
            after_complementary: c3.len(),
        },
        views: c3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::classify::classify_4c;
    use crate::signals::tests::view;

    fn reduce(views: &[MaterializedView], choice: KeyChoice) -> Reduction {
        reduce_view_space(views, &classify_4c(views, 2), choice, None)
    }

    #[test]
    fn three_identical_views_become_one() {
        let vs: Vec<_> = ["v1", "v2", "v3"]
            .iter()
            .map(|id| view(id, &[&["a", "1"], &["b", "2"]]))
            .collect();
        let r = reduce(&vs, KeyChoice::Best);
        assert_eq!(r.views.len(), 1);
        assert_eq!(r.counts.after_compatible, 1);
    }

    #[test]
    fn containment_chain_keeps_the_largest() {
        let vs = vec![
            view("v1", &[&["a", "1"], &["b", "2"], &["c", "3"]]),
            view("v2", &[&["a", "1"], &["b", "2"]]),
            view("v3", &[&["a", "1"]]),
        ];
        let r = reduce(&vs, KeyChoice::Best);
        assert_eq!(r.views.iter().map(|v| v.id.as_str()).collect::<Vec<_>>(), ["v1"]);
        assert_eq!(r.counts.after_contained, 1);
    }

    #[test]
    fn complementary_views_are_unioned() {
        let vs = vec![
            view("v1", &[&["a", "1"], &["b", "2"]]),
            view("v2", &[&["c", "3"]]),
        ];
        let r = reduce(&vs, KeyChoice::Best);
        assert_eq!(r.views.len(), 1);
        let u = &r.views[0];
        assert_eq!(u.rows.len(), 3);
        assert_eq!(u.cardinality, 3);
        assert_eq!(u.constituents, ["v1", "v2"]);
        assert_eq!(u.id, "v1+v2");
    }

    #[test]
    fn contradicting_views_pass_through() {
        let vs = vec![
            view("v1", &[&["alice", "work"], &["bob", "x"]]),
            view("v2", &[&["alice", "home"], &["bob", "x"]]),
        ];
        let r = reduce(&vs, KeyChoice::Best);
        assert_eq!(r.views.len(), 2);
    }

    #[test]
    fn key_choice_changes_how_much_is_merged() {
        // Column 0 is a key everywhere; column 1 is not a key of v1, so only
        // v2 and v3 are complementary on it.
        let vs = vec![
            view("v1", &[&["a", "1"], &["b", "1"]]),
            view("v2", &[&["c", "2"], &["d", "3"]]),
            view("v3", &[&["e", "4"]]),
        ];
        let best = reduce(&vs, KeyChoice::Best);
        assert_eq!(best.views.len(), 1);
        let worst = reduce(&vs, KeyChoice::Worst);
        assert_eq!(
            worst.views.iter().map(|v| v.id.as_str()).collect::<Vec<_>>(),
            ["v1", "v2+v3"]
        );
    }
}

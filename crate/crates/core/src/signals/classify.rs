use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::hash::{row_hash, view_hash};
use crate::search::{MaterializedView, Row};

pub const DEFAULT_MAX_KEY_SIZE: usize = 2;

/// Attribute positions whose projection is unique within a view.
pub type KeyPositions = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaGroup {
    pub schema: Vec<String>,
    pub view_ids: Vec<String>,
}

/// Views with identical row sets. The representative has the largest
/// cardinality (ties: smallest id).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompatibleGroup {
    pub representative: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ContainedPair {
    pub container: String,
    pub containee: String,
}

/// Two views that agree on every shared key value of `key` and each hold key
/// values the other lacks.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ComplementaryPair {
    pub a: String,
    pub b: String,
    pub key: KeyPositions,
    pub only_a: Vec<Row>,
    pub only_b: Vec<Row>,
}

/// Two views that map the same key values to different rows.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ContradictoryPair {
    pub a: String,
    pub b: String,
    pub key: KeyPositions,
    pub key_values: Vec<Row>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FourCResult {
    pub schema_groups: Vec<SchemaGroup>,
    pub compatible_groups: Vec<CompatibleGroup>,
    pub contained_pairs: Vec<ContainedPair>,
    pub complementary: Vec<ComplementaryPair>,
    pub contradictory: Vec<ContradictoryPair>,
}

impl FourCResult {
    pub fn representatives(&self) -> BTreeSet<&str> {
        self.compatible_groups
            .iter()
            .map(|g| g.representative.as_str())
            .collect()
    }

    pub fn is_contradictory(&self, a: &str, b: &str) -> bool {
        self.contradictory
            .iter()
            .any(|p| (p.a == a && p.b == b) || (p.a == b && p.b == a))
    }
}

pub fn project(row: &Row, key: &[usize]) -> Row {
    key.iter().map(|&i| row[i].clone()).collect()
}

pub fn is_key<'a>(rows: impl ExactSizeIterator<Item = &'a Row>, key: &[usize]) -> bool {
    let n = rows.len();
    let mut seen = HashSet::with_capacity(n);
    for r in rows {
        if !seen.insert(project(r, key)) {
            return false;
        }
    }
    true
}

/// Position subsets of size 1..=max_size, smallest first, lexicographic
/// within a size.
pub fn key_candidates(arity: usize, max_size: usize) -> Vec<KeyPositions> {
    let mut out = Vec::new();
    fn rec(arity: usize, size: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<KeyPositions>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..arity {
            cur.push(i);
            rec(arity, size, i + 1, cur, out);
            cur.pop();
        }
    }
    for size in 1..=max_size.min(arity) {
        rec(arity, size, 0, &mut Vec::new(), &mut out);
    }
    out
}

/// Keys unique in both views with no unique-in-both proper subset.
///
/// The whole schema of a multi-column view is always unique (rows are a
/// set) and can never expose a contradiction, so it is not offered as a
/// key: under it any two differing views would look complementary.
pub fn shared_minimal_keys(a: &MaterializedView, b: &MaterializedView, max_size: usize) -> Vec<KeyPositions> {
    let arity = a.schema.len();
    let mut found: Vec<KeyPositions> = Vec::new();
    for key in key_candidates(arity, max_size) {
        if arity > 1 && key.len() == arity {
            continue;
        }
        if found.iter().any(|k| k.iter().all(|p| key.contains(p))) {
            continue;
        }
        if is_key(a.rows.iter(), &key) && is_key(b.rows.iter(), &key) {
            found.push(key);
        }
    }
    found
}

fn ordered_ids(a: &str, b: &str) -> bool {
    a <= b
}

/// Sort views into compatible, contained, complementary and contradictory
/// relationships, within groups of views that share a schema.
pub fn classify_4c(views: &[MaterializedView], max_key_size: usize) -> FourCResult {
    let mut result = FourCResult::default();
    let mut groups: BTreeMap<&[String], Vec<&MaterializedView>> = BTreeMap::new();
    for v in views {
        groups.entry(v.schema.as_slice()).or_default().push(v);
    }

    for (schema, mut members) in groups {
        members.sort_by(|x, y| x.id.cmp(&y.id));
        result.schema_groups.push(SchemaGroup {
            schema: schema.to_vec(),
            view_ids: members.iter().map(|v| v.id.clone()).collect(),
        });

        // Compatible: bucket by view hash, split buckets on exact equality.
        let mut buckets: BTreeMap<u64, Vec<&MaterializedView>> = BTreeMap::new();
        for v in &members {
            buckets.entry(view_hash(&v.rows)).or_default().push(v);
        }
        let mut reps: Vec<&MaterializedView> = Vec::new();
        let mut compat: Vec<CompatibleGroup> = Vec::new();
        for bucket in buckets.into_values() {
            let mut classes: Vec<Vec<&MaterializedView>> = Vec::new();
            for v in bucket {
                match classes.iter_mut().find(|c| c[0].rows == v.rows) {
                    Some(c) => c.push(v),
                    None => classes.push(vec![v]),
                }
            }
            for class in classes {
                let rep = *class
                    .iter()
                    .max_by(|x, y| x.cardinality.cmp(&y.cardinality).then_with(|| y.id.cmp(&x.id)))
                    .expect("non-empty class");
                let mut ids: Vec<String> = class.iter().map(|v| v.id.clone()).collect();
                ids.sort();
                compat.push(CompatibleGroup {
                    representative: rep.id.clone(),
                    members: ids,
                });
                reps.push(rep);
            }
        }
        compat.sort_by(|x, y| x.members[0].cmp(&y.members[0]));
        result.compatible_groups.extend(compat);
        reps.sort_by(|x, y| x.id.cmp(&y.id));

        let hashes: Vec<HashMap<u64, Vec<&Row>>> = reps
            .iter()
            .map(|v| {
                let mut m: HashMap<u64, Vec<&Row>> = HashMap::with_capacity(v.rows.len());
                for r in &v.rows {
                    m.entry(row_hash(r)).or_default().push(r);
                }
                m
            })
            .collect();
        // Rows of `i` that are not in `j`, found through the hash tables and
        // confirmed on the cells.
        let missing_from = |i: usize, j: usize| -> Vec<&Row> {
            reps[i]
                .rows
                .iter()
                .filter(|r| match hashes[j].get(&row_hash(r)) {
                    Some(cands) => !cands.contains(r),
                    None => true,
                })
                .collect()
        };

        for i in 0..reps.len() {
            for j in i + 1..reps.len() {
                let (vi, vj) = (reps[i], reps[j]);
                debug_assert!(ordered_ids(&vi.id, &vj.id));
                let di = missing_from(i, j);
                let dj = missing_from(j, i);
                if di.is_empty() {
                    result.contained_pairs.push(ContainedPair {
                        container: vj.id.clone(),
                        containee: vi.id.clone(),
                    });
                    continue;
                }
                if dj.is_empty() {
                    result.contained_pairs.push(ContainedPair {
                        container: vi.id.clone(),
                        containee: vj.id.clone(),
                    });
                    continue;
                }
                for key in shared_minimal_keys(vi, vj, max_key_size) {
                    let ki: BTreeSet<Row> = di.iter().map(|r| project(r, &key)).collect();
                    let kj: BTreeSet<Row> = dj.iter().map(|r| project(r, &key)).collect();
                    let clash: Vec<Row> = ki.intersection(&kj).cloned().collect();
                    if clash.is_empty() {
                        result.complementary.push(ComplementaryPair {
                            a: vi.id.clone(),
                            b: vj.id.clone(),
                            key,
                            only_a: ki.into_iter().collect(),
                            only_b: kj.into_iter().collect(),
                        });
                    } else {
                        result.contradictory.push(ContradictoryPair {
                            a: vi.id.clone(),
                            b: vj.id.clone(),
                            key,
                            key_values: clash,
                        });
                    }
                }
            }
        }
    }
    result.contained_pairs.sort();
    result.complementary.sort();
    result.contradictory.sort();
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::tests::view;

    #[test]
    fn identical_views_are_compatible() {
        let v1 = view("v1", &[&["a", "1"], &["b", "2"]]);
        let mut v2 = view("v2", &[&["b", "2"], &["a", "1"]]);
        v2.cardinality = 5;
        let r = classify_4c(&[v1, v2], 2);
        assert_eq!(r.compatible_groups.len(), 1);
        assert_eq!(r.compatible_groups[0].representative, "v2");
        assert_eq!(r.compatible_groups[0].members, ["v1", "v2"]);
    }

    #[test]
    fn strict_subset_is_contained() {
        let v1 = view("v1", &[&["a", "1"], &["b", "2"]]);
        let v2 = view("v2", &[&["a", "1"]]);
        let r = classify_4c(&[v1, v2], 2);
        assert_eq!(
            r.contained_pairs,
            [ContainedPair {
                container: "v1".into(),
                containee: "v2".into()
            }]
        );
        assert!(r.complementary.is_empty() && r.contradictory.is_empty());
    }

    #[test]
    fn work_and_home_address_contradict() {
        let v1 = view("v1", &[&["alice", "work"], &["bob", "x"]]);
        let v2 = view("v2", &[&["alice", "home"], &["bob", "x"]]);
        let r = classify_4c(&[v1, v2], 2);
        let names: Vec<_> = r.contradictory.iter().filter(|p| p.key == [0]).collect();
        assert_eq!(names.len(), 1);
        assert_eq!(names[0].key_values, [vec![Some("alice".to_string())]]);
        // On the address column the differing rows do not clash.
        assert!(r.complementary.iter().any(|p| p.key == [1]));
    }

    #[test]
    fn disjoint_keys_are_complementary() {
        let v1 = view("v1", &[&["a", "1"], &["b", "2"]]);
        let v2 = view("v2", &[&["c", "3"]]);
        let r = classify_4c(&[v1, v2], 1);
        assert_eq!(r.complementary.len(), 2);
        assert!(r.contradictory.is_empty());
    }

    #[test]
    fn different_schemas_are_never_compared() {
        let v1 = view("v1", &[&["a", "1"]]);
        let mut v2 = view("v2", &[&["a", "1"]]);
        v2.schema = vec!["p".into(), "q".into()];
        let r = classify_4c(&[v1, v2], 2);
        assert_eq!(r.schema_groups.len(), 2);
        assert_eq!(r.compatible_groups.len(), 2);
    }

    #[test]
    fn empty_view_is_contained_in_anything() {
        let v1 = view("v1", &[&["a", "1"]]);
        let v2 = view("v2", &[]);
        let r = classify_4c(&[v1, v2], 2);
        assert_eq!(r.contained_pairs.len(), 1);
        assert_eq!(r.contained_pairs[0].containee, "v2");
    }

    #[test]
    fn minimal_keys_skip_supersets() {
        let v1 = view("v1", &[&["a", "1"], &["b", "1"]]);
        let v2 = view("v2", &[&["c", "2"], &["d", "2"]]);
        assert_eq!(shared_minimal_keys(&v1, &v2, 2), vec![vec![0]]);
        let v3 = view("v3", &[&["a", "1"], &["a", "2"], &["b", "1"]]);
        let v4 = view("v4", &[&["a", "1"], &["a", "3"]]);
        assert!(shared_minimal_keys(&v3, &v4, 2).is_empty());
        let v5 = view("v5", &[&["a", "1", "x"], &["a", "2", "x"]]);
        let v6 = view("v6", &[&["b", "1", "y"], &["b", "3", "y"]]);
        assert_eq!(shared_minimal_keys(&v5, &v6, 2), vec![vec![1]]);
        let single = |id, vals: &[&str]| {
            let rows: Vec<Vec<&str>> = vals.iter().map(|v| vec![*v]).collect();
            let refs: Vec<&[&str]> = rows.iter().map(|r| r.as_slice()).collect();
            view(id, &refs)
        };
        assert_eq!(shared_minimal_keys(&single("s1", &["a"]), &single("s2", &["b"]), 2), vec![vec![0]]);
    }
}

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::classify::{is_key, project, FourCResult, KeyPositions};
use crate::search::{MaterializedView, Row};

pub const DEFAULT_SAMPLE_SIZE: usize = 3;
pub const DEFAULT_SIGNAL_STEPS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalSample {
    pub key_value: Row,
    pub row_a: Row,
    pub row_b: Row,
}

/// A choice between two row variants for the same key values. Picking a side
/// discards every view holding the other variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContradictorySignal {
    pub schema: Vec<String>,
    pub key: KeyPositions,
    pub key_names: Vec<String>,
    pub samples: Vec<SignalSample>,
    pub set_a: Vec<String>,
    pub set_b: Vec<String>,
    pub discrimination: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    A,
    B,
    Neither,
}

/// Expected number of views discarded when a side is picked with
/// probability proportional to its size.
pub fn discrimination(a: usize, b: usize) -> f64 {
    if a + b == 0 {
        0.0
    } else {
        2.0 * a as f64 * b as f64 / (a + b) as f64
    }
}

impl ContradictorySignal {
    pub fn applies_to(&self, survivors: &BTreeSet<String>) -> bool {
        self.set_a.iter().any(|v| survivors.contains(v)) && self.set_b.iter().any(|v| survivors.contains(v))
    }
}

/// Views left after choosing `side`.
pub fn apply_signal_selection(
    signal: &ContradictorySignal,
    side: Side,
    survivors: &BTreeSet<String>,
) -> BTreeSet<String> {
    let removed: &[String] = match side {
        Side::A => &signal.set_b,
        Side::B => &signal.set_a,
        Side::Neither => &[],
    };
    survivors
        .iter()
        .filter(|v| !removed.contains(v))
        .cloned()
        .collect()
}

type SignalKey = (Vec<String>, KeyPositions, Vec<String>, Vec<String>);

/// Turn contradictory pairs into signals. The sides of each signal list every
/// view of the schema group that has the key and holds that row variant, so a
/// single signal can cover many views.
pub fn generate_contradictory_signals(
    views: &[MaterializedView],
    fourc: &FourCResult,
    sample_size: usize,
) -> Vec<ContradictorySignal> {
    let by_id: HashMap<&str, &MaterializedView> = views.iter().map(|v| (v.id.as_str(), v)).collect();
    // (schema, key) -> views where the key is unique, with their key maps.
    let mut keyed: HashMap<(&[String], &KeyPositions), Vec<(&str, HashMap<Row, &Row>)>> = HashMap::new();
    let mut atoms: BTreeMap<SignalKey, BTreeMap<Row, (Row, Row)>> = BTreeMap::new();

    for pair in &fourc.contradictory {
        let (Some(va), Some(vb)) = (by_id.get(pair.a.as_str()), by_id.get(pair.b.as_str())) else {
            continue;
        };
        let schema = va.schema.as_slice();
        let holders = keyed.entry((schema, &pair.key)).or_insert_with(|| {
            let mut hs: Vec<(&str, HashMap<Row, &Row>)> = views
                .iter()
                .filter(|v| v.schema.as_slice() == schema && is_key(v.rows.iter(), &pair.key))
                .map(|v| {
                    let m = v.rows.iter().map(|r| (project(r, &pair.key), r)).collect();
                    (v.id.as_str(), m)
                })
                .collect();
            hs.sort_by(|x, y| x.0.cmp(y.0));
            hs
        });
        let row_in = |id: &str, kv: &Row| -> Option<Row> {
            holders
                .iter()
                .find(|(h, _)| *h == id)
                .and_then(|(_, m)| m.get(kv).map(|r| (*r).clone()))
        };
        for kv in &pair.key_values {
            let (Some(mut ra), Some(mut rb)) = (row_in(&va.id, kv), row_in(&vb.id, kv)) else {
                continue;
            };
            if ra == rb {
                continue;
            }
            let holding = |r: &Row| -> Vec<String> {
                holders
                    .iter()
                    .filter(|(_, m)| m.get(kv).is_some_and(|x| *x == r))
                    .map(|(h, _)| h.to_string())
                    .collect()
            };
            let (mut set_a, mut set_b) = (holding(&ra), holding(&rb));
            if set_b < set_a {
                std::mem::swap(&mut set_a, &mut set_b);
                std::mem::swap(&mut ra, &mut rb);
            }
            atoms
                .entry((schema.to_vec(), pair.key.clone(), set_a, set_b))
                .or_default()
                .insert(kv.clone(), (ra, rb));
        }
    }

    let mut signals: Vec<ContradictorySignal> = atoms
        .into_iter()
        .map(|((schema, key, set_a, set_b), rows)| {
            let samples = rows
                .into_iter()
                .take(sample_size)
                .map(|(key_value, (row_a, row_b))| SignalSample {
                    key_value,
                    row_a,
                    row_b,
                })
                .collect();
            ContradictorySignal {
                key_names: key.iter().map(|&i| schema[i].clone()).collect(),
                discrimination: discrimination(set_a.len(), set_b.len()),
                schema,
                key,
                samples,
                set_a,
                set_b,
            }
        })
        .collect();
    signals.sort_by(|x, y| {
        y.discrimination
            .total_cmp(&x.discrimination)
            .then_with(|| (x.set_a.len() + x.set_b.len()).cmp(&(y.set_a.len() + y.set_b.len())))
            .then_with(|| x.key_names.cmp(&y.key_names))
            .then_with(|| x.key.cmp(&y.key))
            .then_with(|| x.set_a.cmp(&y.set_a))
            .then_with(|| x.set_b.cmp(&y.set_b))
    });
    signals
}

/// Survivor counts after 0..=steps signal choices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PruningCurves {
    /// Fewest survivors reachable after each step.
    pub best: Vec<usize>,
    /// Most survivors reachable after each step.
    pub worst: Vec<usize>,
}

/// Explore every A/B choice sequence over the ranked signals, skipping
/// signals that no longer split the survivors, and record the best and worst
/// survivor count at each step. Once no signal applies the count stays flat.
pub fn pruning_curves(
    signals: &[ContradictorySignal],
    initial: &BTreeSet<String>,
    steps: usize,
) -> PruningCurves {
    let mut best = vec![usize::MAX; steps + 1];
    let mut worst = vec![0usize; steps + 1];
    let mut path = vec![initial.len()];
    explore(signals, initial, 0, steps, &mut path, &mut best, &mut worst);
    PruningCurves { best, worst }
}

fn explore(
    signals: &[ContradictorySignal],
    survivors: &BTreeSet<String>,
    from: usize,
    steps: usize,
    path: &mut Vec<usize>,
    best: &mut [usize],
    worst: &mut [usize],
) {
    let next = if path.len() > steps {
        None
    } else {
        (from..signals.len()).find(|&i| signals[i].applies_to(survivors))
    };
    match next {
        None => {
            let last = *path.last().expect("path has the initial count");
            for s in 0..=steps {
                let v = path.get(s).copied().unwrap_or(last);
                best[s] = best[s].min(v);
                worst[s] = worst[s].max(v);
            }
        }
        Some(i) => {
            for side in [Side::A, Side::B] {
                let after = apply_signal_selection(&signals[i], side, survivors);
                path.push(after.len());
                explore(signals, &after, i + 1, steps, path, best, worst);
                path.pop();
            }
        }
    }
}

/// A user who always sides with `target`: picks the side holding it, or
/// neither when it is on no side. Returns the survivor count after each step
/// and the final survivors.
pub fn consistent_user(
    signals: &[ContradictorySignal],
    initial: &BTreeSet<String>,
    target: &str,
    steps: usize,
) -> (Vec<usize>, BTreeSet<String>) {
    let mut survivors = initial.clone();
    let mut curve = vec![survivors.len()];
    for s in signals {
        if curve.len() > steps {
            break;
        }
        if !s.applies_to(&survivors) {
            continue;
        }
        let side = if s.set_a.iter().any(|v| v == target) {
            Side::A
        } else if s.set_b.iter().any(|v| v == target) {
            Side::B
        } else {
            Side::Neither
        };
        survivors = apply_signal_selection(s, side, &survivors);
        curve.push(survivors.len());
    }
    let last = *curve.last().expect("initial count");
    curve.resize(steps + 1, last);
    (curve, survivors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::classify::classify_4c;
    use crate::signals::tests::view;

    fn ids(v: &[&str]) -> BTreeSet<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn one_versus_one() {
        let vs = vec![
            view("v1", &[&["alice", "work"], &["bob", "x"]]),
            view("v2", &[&["alice", "home"], &["bob", "x"]]),
        ];
        let f = classify_4c(&vs, 1);
        let s = generate_contradictory_signals(&vs, &f, 3);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].set_a.len(), 1);
        assert_eq!(s[0].set_b.len(), 1);
        assert_eq!(s[0].discrimination, 1.0);
        assert_eq!(s[0].key_names, ["a0"]);
        let left = apply_signal_selection(&s[0], Side::A, &ids(&["v1", "v2"]));
        assert_eq!(left.len(), 1);
    }

    #[test]
    fn three_versus_two_is_one_signal() {
        let mut vs = Vec::new();
        for (i, addr) in ["work", "work", "work", "home", "home"].iter().enumerate() {
            let extra = format!("p{i}");
            vs.push(view(&format!("v{i}"), &[&["alice", addr], &[extra.as_str(), extra.as_str()]]));
        }
        let f = classify_4c(&vs, 1);
        let s = generate_contradictory_signals(&vs, &f, 3);
        let on_name: Vec<_> = s.iter().filter(|x| x.key == [0]).collect();
        assert_eq!(on_name.len(), 1);
        assert_eq!(on_name[0].set_a.len() + on_name[0].set_b.len(), 5);
        assert!((on_name[0].discrimination - 2.4).abs() < 1e-12);
        // Weighted expectation computed directly: pick the 3-side with
        // probability 3/5 and drop 2, or the 2-side with 2/5 and drop 3.
        assert!((on_name[0].discrimination - (3.0 / 5.0 * 2.0 + 2.0 / 5.0 * 3.0)).abs() < 1e-12);
        let three_side = if on_name[0].set_a.len() == 3 { Side::B } else { Side::A };
        let all: BTreeSet<String> = vs.iter().map(|v| v.id.clone()).collect();
        assert_eq!(apply_signal_selection(on_name[0], three_side, &all).len(), 2);
    }

    #[test]
    fn selection_is_idempotent() {
        let s = ContradictorySignal {
            schema: vec![],
            key: vec![0],
            key_names: vec![],
            samples: vec![],
            set_a: vec!["v1".into()],
            set_b: vec!["v2".into(), "v3".into()],
            discrimination: discrimination(1, 2),
        };
        let once = apply_signal_selection(&s, Side::A, &ids(&["v1", "v2", "v3", "v4"]));
        assert_eq!(once, ids(&["v1", "v4"]));
        assert_eq!(apply_signal_selection(&s, Side::A, &once), once);
        assert_eq!(apply_signal_selection(&s, Side::Neither, &once), once);
    }

    #[test]
    fn curves_are_monotone_and_ordered() {
        let sig = |a: &[&str], b: &[&str]| ContradictorySignal {
            schema: vec![],
            key: vec![0],
            key_names: vec![],
            samples: vec![],
            set_a: a.iter().map(|s| s.to_string()).collect(),
            set_b: b.iter().map(|s| s.to_string()).collect(),
            discrimination: discrimination(a.len(), b.len()),
        };
        let signals = vec![
            sig(&["v1", "v2"], &["v3"]),
            sig(&["v1"], &["v2"]),
            sig(&["v3"], &["v4", "v5"]),
        ];
        let all = ids(&["v1", "v2", "v3", "v4", "v5"]);
        let c = pruning_curves(&signals, &all, 4);
        assert_eq!(c.best[0], 5);
        assert_eq!(c.worst[0], 5);
        assert!(c.best.windows(2).all(|w| w[1] <= w[0]));
        assert!(c.worst.windows(2).all(|w| w[1] <= w[0]));
        assert!(c.best.iter().zip(&c.worst).all(|(b, w)| w >= b));
        // Side B of the first signal leaves {v3,v4,v5}; the third signal
        // then gets down to {v3}. Side A leaves four views, the second signal
        // removes one more and the third no longer splits anything.
        assert_eq!(c.best, [5, 3, 1, 1, 1]);
        assert_eq!(c.worst, [5, 4, 3, 3, 3]);

        let (curve, left) = consistent_user(&signals, &all, "v4", 4);
        assert!(left.contains("v4"));
        assert!(curve.windows(2).all(|w| w[1] <= w[0]));
    }
}

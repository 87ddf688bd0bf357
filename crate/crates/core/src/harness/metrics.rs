use std::collections::BTreeSet;

use super::generate::GroundTruth;
use crate::search::{MaterializedView, Row};

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for slot in 0..=p.len() {
            let mut q = p.clone();
            q.insert(slot, n - 1);
            out.push(q);
        }
    }
    out
}

/// Row-set equality allowing the candidate's columns to appear in any order.
pub fn rows_match(candidate: &BTreeSet<Row>, truth: &BTreeSet<Row>) -> bool {
    if candidate.len() != truth.len() {
        return false;
    }
    if candidate == truth {
        return true;
    }
    let width = match (candidate.iter().next(), truth.iter().next()) {
        (Some(a), Some(b)) if a.len() == b.len() => a.len(),
        _ => return false,
    };
    permutations(width).into_iter().any(|perm| {
        candidate
            .iter()
            .all(|r| truth.contains(&perm.iter().map(|&i| r[i].clone()).collect::<Row>()))
    })
}

/// Whether any candidate view reproduces the ground-truth view.
pub fn hit_predicate(views: &[MaterializedView], truth: &GroundTruth) -> bool {
    views.iter().any(|v| rows_match(&v.rows, &truth.rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(data: &[&[&str]]) -> BTreeSet<Row> {
        data.iter()
            .map(|r| r.iter().map(|c| Some(c.to_string())).collect())
            .collect()
    }

    #[test]
    fn identical_rows_match() {
        let t = rows(&[&["a", "1"], &["b", "2"]]);
        assert!(rows_match(&t.clone(), &t));
    }

    #[test]
    fn swapped_columns_match() {
        let t = rows(&[&["a", "1"], &["b", "2"]]);
        let c = rows(&[&["1", "a"], &["2", "b"]]);
        assert!(rows_match(&c, &t));
    }

    #[test]
    fn missing_row_does_not_match() {
        let t = rows(&[&["a", "1"], &["b", "2"]]);
        let c = rows(&[&["a", "1"]]);
        assert!(!rows_match(&c, &t));
    }

    #[test]
    fn permutations_cover_all_orders() {
        let ps = permutations(3);
        assert_eq!(ps.len(), 6);
        assert_eq!(ps.iter().collect::<BTreeSet<_>>().len(), 6);
    }
}

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{ColumnRef, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TypeTag {
    Textual,
    Categorical,
    NumericAsText,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnProfile {
    pub column: ColumnRef,
    pub value_set: BTreeSet<String>,
    pub total_count: usize,
    pub distinct_count: usize,
    pub uniqueness: f64,
    pub type_tag: TypeTag,
}

/// Profile one column. Panics if `column_index` is out of range.
pub fn profile_column(table: &Table, column_index: usize) -> ColumnProfile {
    let column = table.column_ref(column_index);
    let total_count = table.row_count();
    let mut value_set = BTreeSet::new();
    let mut non_null = 0usize;
    let mut numeric = 0usize;
    for value in table.normalized_column(column_index).flatten() {
        non_null += 1;
        if value.parse::<f64>().is_ok() {
            numeric += 1;
        }
        if !value_set.contains(value) {
            value_set.insert(value.to_string());
        }
    }
    let distinct_count = value_set.len();
    let uniqueness = distinct_count as f64 / total_count.max(1) as f64;
    // 90% threshold compared in integers to avoid float edge cases.
    let type_tag = if non_null > 0 && numeric * 10 >= non_null * 9 {
        TypeTag::NumericAsText
    } else if distinct_count <= 10.max(total_count / 100) {
        TypeTag::Categorical
    } else {
        TypeTag::Textual
    };
    ColumnProfile {
        column,
        value_set,
        total_count,
        distinct_count,
        uniqueness,
        type_tag,
    }
}

pub fn profile_table(table: &Table) -> Vec<ColumnProfile> {
    (0..table.arity()).map(|i| profile_column(table, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Normalizer, TableId, TableRef};
    use proptest::prelude::*;

    fn one_column(cells: &[Option<&str>]) -> Table {
        Table::new(
            TableRef::new(TableId(1), "t"),
            vec![Some("c".into())],
            cells.iter().map(|c| vec![c.map(String::from)]).collect(),
            "test",
            &Normalizer::default(),
        )
        .unwrap()
    }

    #[test]
    fn uniqueness_counts_duplicates() {
        let t = one_column(&[Some("1"), Some("2"), Some("2"), Some("3")]);
        let p = profile_column(&t, 0);
        assert_eq!(p.distinct_count, 3);
        assert!((p.uniqueness - 0.75).abs() < 1e-12);
        assert_eq!(p.type_tag, TypeTag::NumericAsText);
    }

    #[test]
    fn all_null_column() {
        let t = one_column(&[None, Some("N/A"), Some("  ")]);
        let p = profile_column(&t, 0);
        assert_eq!(p.distinct_count, 0);
        assert_eq!(p.total_count, 3);
        assert_eq!(p.uniqueness, 0.0);
        assert!(p.value_set.is_empty());
    }

    #[test]
    fn empty_table_column() {
        let p = profile_column(&one_column(&[]), 0);
        assert_eq!(p.uniqueness, 0.0);
    }

    #[test]
    fn key_like_column() {
        let cells: Vec<String> = (0..1000).map(|i| format!("k{i}")).collect();
        let refs: Vec<Option<&str>> = cells.iter().map(|c| Some(c.as_str())).collect();
        let p = profile_column(&one_column(&refs), 0);
        assert_eq!(p.uniqueness, 1.0);
        assert_eq!(p.type_tag, TypeTag::Textual);
    }

    #[test]
    fn low_cardinality_is_categorical() {
        let cells: Vec<Option<&str>> = (0..50)
            .map(|i| Some(if i % 2 == 0 { "red" } else { "blue" }))
            .collect();
        assert_eq!(profile_column(&one_column(&cells), 0).type_tag, TypeTag::Categorical);
    }

    #[test]
    fn case_variants_collapse() {
        let t = one_column(&[Some("Chicago"), Some("CHICAGO "), Some("chicago")]);
        let p = profile_column(&t, 0);
        assert_eq!(p.distinct_count, 1);
    }

    proptest! {
        #[test]
        fn uniqueness_matches_brute_force(cells in proptest::collection::vec(
            proptest::option::of("[a-c ]{0,3}"), 0..40)) {
            let refs: Vec<Option<&str>> = cells.iter().map(|c| c.as_deref()).collect();
            let p = profile_column(&one_column(&refs), 0);
            let mut distinct: Vec<String> = cells.iter().flatten()
                .map(|c| c.split_whitespace().collect::<Vec<_>>().join(" "))
                .filter(|c| !c.is_empty() && c != "na")
                .collect();
            distinct.sort();
            distinct.dedup();
            let expected = distinct.len() as f64 / cells.len().max(1) as f64;
            prop_assert!((p.uniqueness - expected).abs() < 1e-12);
            prop_assert!(p.distinct_count <= p.total_count);
            prop_assert!((0.0..=1.0).contains(&p.uniqueness));
        }
    }
}

use crate::corpus::{Normalizer, PathlessCollection, Table, TableId, TableRef};

/// Tables given column-wise: `(name, headers, columns)`. Shorter columns are
/// padded with nulls.
pub(crate) fn collection(tables: &[(&str, &[&str], Vec<Vec<&str>>)]) -> PathlessCollection {
    let n = Normalizer::default();
    let ts = tables
        .iter()
        .map(|(name, schema, cols)| {
            let rows_n = cols.iter().map(Vec::len).max().unwrap_or(0);
            let rows = (0..rows_n)
                .map(|r| cols.iter().map(|c| c.get(r).map(|v| v.to_string())).collect())
                .collect();
            Table::new(
                TableRef::new(TableId::from_relative_path(name), *name),
                schema.iter().map(|s| Some(s.to_string())).collect(),
                rows,
                "test",
                &n,
            )
            .unwrap()
        })
        .collect();
    PathlessCollection::new(ts, n).unwrap()
}

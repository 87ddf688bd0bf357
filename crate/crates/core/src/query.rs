//! Example queries: a few named columns, each with a handful of example values.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Normalizer;
use crate::error::{NifflerError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryColumn {
    pub name: String,
    /// Normalized, distinct, in first-seen order.
    pub examples: Vec<String>,
}

impl QueryColumn {
    pub fn example_set(&self) -> BTreeSet<String> {
        self.examples.iter().cloned().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleQuery {
    pub columns: Vec<QueryColumn>,
}

#[derive(Deserialize)]
struct RawQuery {
    columns: Vec<RawColumn>,
}

#[derive(Deserialize)]
struct RawColumn {
    name: String,
    examples: Vec<Option<String>>,
}

impl ExampleQuery {
    /// Build from raw example strings. Values are normalized; nulls and
    /// duplicates are dropped. Every column must keep at least one value.
    pub fn new<N, V>(columns: Vec<(N, Vec<V>)>, normalizer: &Normalizer) -> Result<Self>
    where
        N: Into<String>,
        V: AsRef<str>,
    {
        if columns.is_empty() {
            return Err(NifflerError::InvalidQuery("query has no columns".into()));
        }
        let mut out = Vec::with_capacity(columns.len());
        for (name, raw) in columns {
            let name = name.into();
            let mut seen = BTreeSet::new();
            let examples: Vec<String> = raw
                .iter()
                .filter_map(|v| normalizer.normalize(v.as_ref()))
                .filter(|v| seen.insert(v.clone()))
                .collect();
            if examples.is_empty() {
                return Err(NifflerError::InvalidQuery(format!(
                    "query column {name:?} has no non-null examples"
                )));
            }
            out.push(QueryColumn { name, examples });
        }
        Ok(ExampleQuery { columns: out })
    }

    /// Number of query attributes.
    pub fn width(&self) -> usize {
        self.columns.len()
    }

    /// Largest number of examples in any column.
    pub fn depth(&self) -> usize {
        self.columns.iter().map(|c| c.examples.len()).max().unwrap_or(0)
    }

    pub fn attribute_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    /// CSV with a header row of attribute names and one example tuple per row.
    pub fn from_csv_reader(reader: impl Read, normalizer: &Normalizer) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let mut cols: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
        for rec in rdr.records() {
            let rec = rec?;
            for (i, cell) in rec.iter().enumerate().take(headers.len()) {
                cols[i].push(cell.to_string());
            }
        }
        ExampleQuery::new(headers.into_iter().zip(cols).collect(), normalizer)
    }

    /// `{"columns": [{"name": "...", "examples": ["...", ...]}, ...]}`
    pub fn from_json_str(text: &str, normalizer: &Normalizer) -> Result<Self> {
        let raw: RawQuery = serde_json::from_str(text)?;
        ExampleQuery::new(
            raw.columns
                .into_iter()
                .map(|c| (c.name, c.examples.into_iter().flatten().collect::<Vec<_>>()))
                .collect(),
            normalizer,
        )
    }

    /// Dispatch on extension: `.json` is JSON, anything else is CSV.
    pub fn from_path(path: impl AsRef<Path>, normalizer: &Normalizer) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| NifflerError::io(path, e))?;
        let is_json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            ExampleQuery::from_json_str(&text, normalizer)
        } else {
            ExampleQuery::from_csv_reader(text.as_bytes(), normalizer)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_query_is_normalized_and_deduplicated() {
        let text = "Name,City\n Walmart ,Chicago\nwalmart,n/a\nUChicago  Hospital,Evanston\n";
        let q = ExampleQuery::from_csv_reader(text.as_bytes(), &Normalizer::default()).unwrap();
        assert_eq!(q.width(), 2);
        assert_eq!(q.columns[0].examples, ["walmart", "uchicago hospital"]);
        assert_eq!(q.columns[1].examples, ["chicago", "evanston"]);
        assert_eq!(q.depth(), 2);
    }

    #[test]
    fn json_query() {
        let text = r#"{"columns":[{"name":"a","examples":["X",null,"y"]}]}"#;
        let q = ExampleQuery::from_json_str(text, &Normalizer::default()).unwrap();
        assert_eq!(q.columns[0].examples, ["x", "y"]);
    }

    #[test]
    fn all_null_column_is_rejected() {
        let err = ExampleQuery::new(vec![("a", vec!["", "NULL"])], &Normalizer::default());
        assert!(matches!(err, Err(NifflerError::InvalidQuery(_))));
        let none: Vec<(&str, Vec<&str>)> = Vec::new();
        assert!(ExampleQuery::new(none, &Normalizer::default()).is_err());
    }
}

//! JSON-lines index file: one header line, then table, profile, posting and
//! edge records.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DiscoveryIndex, Edge, EdgeKind, Hypergraph, IndexOrigin, KeywordIndex};
use crate::corpus::{ColumnProfile, ColumnRef, Normalizer, TableId, TableRef, TypeTag};
use crate::error::{NifflerError, Result};

pub const INDEX_FORMAT: &str = "niffler-index";
pub const INDEX_VERSION: u32 = 1;

type ColKey = (TableId, usize);

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Record {
    Header {
        format: String,
        version: u32,
        threshold: f64,
        normalizer: Normalizer,
        origin: Option<IndexOrigin>,
    },
    Table {
        id: TableId,
        name: String,
        source: String,
        headers: Vec<Option<String>>,
    },
    Profile {
        column: ColKey,
        total_count: usize,
        type_tag: TypeTag,
        values: Vec<String>,
    },
    Posting {
        section: Section,
        key: String,
        columns: Vec<ColKey>,
    },
    Edge {
        src: ColKey,
        dst: ColKey,
        edge_kind: EdgeKind,
        weight: f64,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Section {
    Content,
    Attribute,
}

fn key(c: &ColumnRef) -> ColKey {
    (c.table.id, c.column_index)
}

pub fn save_index(index: &DiscoveryIndex, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| NifflerError::io(path, e))?;
    let mut out = BufWriter::new(file);
    let mut emit = |r: &Record| -> Result<()> {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n").map_err(|e| NifflerError::io(path, e))
    };
    emit(&Record::Header {
        format: INDEX_FORMAT.to_string(),
        version: INDEX_VERSION,
        threshold: index.build_threshold,
        normalizer: index.normalizer.clone(),
        origin: index.origin.clone(),
    })?;
    for (table, cols) in &index.graph.hyperedges {
        emit(&Record::Table {
            id: table.id,
            name: table.name.to_string(),
            source: index.sources.get(table).cloned().unwrap_or_default(),
            headers: cols.iter().map(|c| c.header.as_deref().map(String::from)).collect(),
        })?;
    }
    for p in index.profiles.values() {
        emit(&Record::Profile {
            column: key(&p.column),
            total_count: p.total_count,
            type_tag: p.type_tag,
            values: p.value_set.iter().cloned().collect(),
        })?;
    }
    for (section, map) in [
        (Section::Content, &index.keyword.value_index),
        (Section::Attribute, &index.keyword.name_index),
    ] {
        for (k, cols) in map {
            emit(&Record::Posting {
                section,
                key: k.clone(),
                columns: cols.iter().map(key).collect(),
            })?;
        }
    }
    for e in &index.graph.edges {
        emit(&Record::Edge {
            src: key(&e.src),
            dst: key(&e.dst),
            edge_kind: e.kind,
            weight: e.weight,
        })?;
    }
    out.flush().map_err(|e| NifflerError::io(path, e))
}

pub fn load_index(path: impl AsRef<Path>) -> Result<DiscoveryIndex> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| NifflerError::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let bad = |msg: String| NifflerError::IndexFormat(msg);

    let first = lines
        .next()
        .ok_or_else(|| bad("missing header".into()))?
        .map_err(|e| NifflerError::io(path, e))?;
    let Record::Header {
        format,
        version,
        threshold,
        normalizer,
        origin,
    } = serde_json::from_str(&first)?
    else {
        return Err(bad("first line is not a header".into()));
    };
    if format != INDEX_FORMAT || version != INDEX_VERSION {
        return Err(bad(format!("unsupported format {format} version {version}")));
    }

    let mut columns: HashMap<ColKey, ColumnRef> = HashMap::new();
    let mut graph = Hypergraph::default();
    let mut sources = BTreeMap::new();
    let mut profiles = BTreeMap::new();
    let mut keyword = KeywordIndex::default();
    let resolve = |columns: &HashMap<ColKey, ColumnRef>, k: ColKey| {
        columns
            .get(&k)
            .cloned()
            .ok_or_else(|| bad(format!("reference to unknown column {}:{}", k.0, k.1)))
    };

    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| NifflerError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line)
            .map_err(|e| bad(format!("line {}: {e}", lineno + 2)))?;
        match record {
            Record::Header { .. } => return Err(bad("duplicate header".into())),
            Record::Table {
                id,
                name,
                source,
                headers,
            } => {
                let table = TableRef::new(id, name);
                let cols: Vec<ColumnRef> = headers
                    .into_iter()
                    .enumerate()
                    .map(|(i, h)| ColumnRef {
                        table: table.clone(),
                        column_index: i,
                        header: h.map(Into::into),
                    })
                    .collect();
                for c in &cols {
                    columns.insert(key(c), c.clone());
                }
                graph.nodes.extend(cols.iter().cloned());
                graph.hyperedges.insert(table.clone(), cols);
                sources.insert(table, source);
            }
            Record::Profile {
                column,
                total_count,
                type_tag,
                values,
            } => {
                let column = resolve(&columns, column)?;
                let value_set: BTreeSet<String> = values.into_iter().collect();
                let distinct_count = value_set.len();
                profiles.insert(
                    column.clone(),
                    ColumnProfile {
                        column,
                        value_set,
                        total_count,
                        distinct_count,
                        uniqueness: distinct_count as f64 / total_count.max(1) as f64,
                        type_tag,
                    },
                );
            }
            Record::Posting {
                section,
                key: k,
                columns: cols,
            } => {
                let set = cols
                    .into_iter()
                    .map(|c| resolve(&columns, c))
                    .collect::<Result<BTreeSet<_>>>()?;
                let map = match section {
                    Section::Content => &mut keyword.value_index,
                    Section::Attribute => &mut keyword.name_index,
                };
                map.insert(k, set);
            }
            Record::Edge {
                src,
                dst,
                edge_kind,
                weight,
            } => graph.edges.push(Edge {
                src: resolve(&columns, src)?,
                dst: resolve(&columns, dst)?,
                kind: edge_kind,
                weight,
            }),
        }
    }
    graph.nodes.sort();
    super::graph::sort_edges(&mut graph.edges);
    Ok(DiscoveryIndex::assemble(
        threshold, normalizer, keyword, graph, profiles, sources, origin,
    ))
}

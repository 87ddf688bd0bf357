use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{ColumnRef, Normalizer, PathlessCollection, Table, TableId, TableRef};
use crate::error::{NifflerError, Result};
use crate::search::{materialize_graph, JoinEdgeSpec, JoinGraph, Row};

/// Share of a truth column's values copied into its noise column when the
/// generator is not adversarial.
const NOISE_COPY_SHARE: f64 = 0.9;
/// Noise columns must exceed this containment toward their truth column.
const NOISE_CONTAINMENT: f64 = 0.8;

/// Shape of a synthetic collection. Each ground truth is a star: a hub table
/// holding the first projected column and references to `columns - 1`
/// dimension tables that hold the others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorSpec {
    pub truths: usize,
    pub columns: usize,
    pub hub_rows: usize,
    pub dim_rows: usize,
    /// Values in each noise column that are absent from its truth column.
    pub noise_extra: usize,
    /// Tables per truth column holding a slice of its values, joinable to the
    /// rest of the star but never part of the truth.
    pub distractors: usize,
    /// Bridge tables per truth whose columns both contain a dimension's keys,
    /// opening wrong two-hop join paths.
    pub decoys: usize,
    /// Noise columns hold every truth value, so the column with the largest
    /// example overlap is always the noise column under heavy noise.
    pub adversarial: bool,
    pub seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            truths: 5,
            columns: 2,
            hub_rows: 60,
            dim_rows: 30,
            noise_extra: 5,
            distractors: 2,
            decoys: 1,
            adversarial: false,
            seed: 7,
        }
    }
}

/// A planted project-join query and its result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub id: usize,
    pub graph: JoinGraph,
    pub attribute_names: Vec<String>,
    pub truth_columns: Vec<ColumnRef>,
    /// One per truth column, in the same order.
    pub noise_columns: Vec<ColumnRef>,
    pub rows: BTreeSet<Row>,
}

impl GroundTruth {
    pub fn width(&self) -> usize {
        self.truth_columns.len()
    }

    /// The same truth over its first `width` columns: the hub plus the first
    /// `width - 1` dimensions.
    pub fn restrict(&self, width: usize, collection: &PathlessCollection) -> Result<GroundTruth> {
        if width == 0 || width > self.width() {
            return Err(NifflerError::InvalidQuery(format!(
                "truth {} has {} columns, cannot restrict to {width}",
                self.id,
                self.width()
            )));
        }
        if width == self.width() {
            return Ok(self.clone());
        }
        let projections = self.truth_columns[..width].to_vec();
        let tables: BTreeSet<&TableRef> = projections.iter().map(|c| &c.table).collect();
        let edges: Vec<JoinEdgeSpec> = self
            .graph
            .edges
            .iter()
            .filter(|e| tables.contains(&e.left.table) && tables.contains(&e.right.table))
            .cloned()
            .collect();
        let graph = JoinGraph::new(tables.into_iter().cloned(), edges, projections.clone());
        let (rows, _) = materialize_graph(&graph, collection)?;
        Ok(GroundTruth {
            id: self.id,
            graph,
            attribute_names: self.attribute_names[..width].to_vec(),
            truth_columns: projections,
            noise_columns: self.noise_columns[..width].to_vec(),
            rows,
        })
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCollection {
    pub spec: GeneratorSpec,
    pub collection: PathlessCollection,
    pub truths: Vec<GroundTruth>,
}

struct Builder {
    normalizer: Normalizer,
    tables: Vec<Table>,
}

impl Builder {
    fn add(&mut self, source: &str, name: &str, headers: &[&str], rows: Vec<Vec<String>>) -> Result<TableRef> {
        let relative = format!("{source}/{name}.csv");
        let table_ref = TableRef::new(TableId::from_relative_path(&relative), name);
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().map(Some).collect())
            .collect();
        let schema = headers.iter().map(|h| Some(h.to_string())).collect();
        let table = Table::new(table_ref.clone(), schema, rows, source, &self.normalizer)?;
        self.tables.push(table);
        Ok(table_ref)
    }
}

fn column(table: &TableRef, index: usize, header: &str) -> ColumnRef {
    ColumnRef {
        table: table.clone(),
        column_index: index,
        header: Some(header.into()),
    }
}

fn check_spec(spec: &GeneratorSpec) -> Result<()> {
    let fail = |msg: String| Err(NifflerError::Generation(msg));
    if spec.truths == 0 {
        return fail("at least one ground truth is required".into());
    }
    if spec.columns < 2 {
        return fail(format!("need at least 2 columns per truth, got {}", spec.columns));
    }
    if spec.hub_rows < 2 || spec.dim_rows < 2 {
        return fail("hub and dimension tables need at least 2 rows".into());
    }
    for size in [spec.hub_rows, spec.dim_rows] {
        let copied = if spec.adversarial {
            size
        } else {
            (size as f64 * NOISE_COPY_SHARE).ceil() as usize
        };
        let containment = copied as f64 / (copied + spec.noise_extra) as f64;
        if containment <= NOISE_CONTAINMENT {
            return fail(format!(
                "a truth column of {size} values cannot hold {} extra noise values \
                 while keeping containment above {NOISE_CONTAINMENT}",
                spec.noise_extra
            ));
        }
    }
    Ok(())
}

/// Build a collection with planted ground truths, noise columns, distractor
/// tables and decoy join paths. Deterministic for a given spec.
pub fn generate_collection(spec: &GeneratorSpec) -> Result<SyntheticCollection> {
    check_spec(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut b = Builder {
        normalizer: Normalizer::default(),
        tables: Vec::new(),
    };
    let mut planted = Vec::new();

    for g in 0..spec.truths {
        let src = format!("t{g}");
        let dims = spec.columns - 1;

        let mut dim_refs = Vec::new();
        let mut dim_keys: Vec<Vec<String>> = Vec::new();
        let mut truth_values: Vec<Vec<String>> = vec![Vec::new(); spec.columns];
        for j in 1..=dims {
            let keys: Vec<String> = (0..spec.dim_rows).map(|i| format!("t{g}d{j}k{i:03}")).collect();
            let labels: Vec<String> = (0..spec.dim_rows).map(|i| format!("t{g}-l{j}-{i:03}")).collect();
            let rows = keys.iter().zip(&labels).map(|(k, l)| vec![k.clone(), l.clone()]).collect();
            let label_header = format!("label{j}");
            dim_refs.push(b.add(&src, &format!("t{g}_dim{j}"), &["id", &label_header], rows)?);
            dim_keys.push(keys);
            truth_values[j] = labels;
        }

        let hub_keys: Vec<String> = (0..spec.hub_rows).map(|i| format!("t{g}h{i:03}")).collect();
        let names: Vec<String> = (0..spec.hub_rows).map(|i| format!("t{g}-n-{i:03}")).collect();
        let mut hub_headers = vec!["id".to_string(), "name".to_string()];
        hub_headers.extend((1..=dims).map(|j| format!("ref{j}")));
        let hub_rows: Vec<Vec<String>> = (0..spec.hub_rows)
            .map(|i| {
                let mut row = vec![hub_keys[i].clone(), names[i].clone()];
                row.extend(dim_keys.iter().map(|keys| keys.choose(&mut rng).expect("dim rows").clone()));
                row
            })
            .collect();
        let hh: Vec<&str> = hub_headers.iter().map(String::as_str).collect();
        let hub = b.add(&src, &format!("t{g}_hub"), &hh, hub_rows)?;
        truth_values[0] = names;

        let mut headers = vec!["name".to_string()];
        headers.extend((1..=dims).map(|j| format!("label{j}")));
        let mut truth_columns = vec![column(&hub, 1, "name")];
        truth_columns.extend(dim_refs.iter().zip(&headers[1..]).map(|(d, h)| column(d, 1, h)));
        let edges: Vec<JoinEdgeSpec> = dim_refs
            .iter()
            .enumerate()
            .map(|(j, d)| JoinEdgeSpec::new(column(&hub, 2 + j, &hub_headers[2 + j]), column(d, 0, "id"), 1.0))
            .collect();

        let mut noise_columns = Vec::new();
        for (c, values) in truth_values.iter().enumerate() {
            let copied = if spec.adversarial {
                values.len()
            } else {
                (values.len() as f64 * NOISE_COPY_SHARE).ceil() as usize
            };
            let mut pool: Vec<String> = values.choose_multiple(&mut rng, copied).cloned().collect();
            pool.extend((0..spec.noise_extra).map(|i| format!("t{g}-c{c}-x{i:03}")));
            pool.shuffle(&mut rng);
            let rows = pool
                .into_iter()
                .enumerate()
                .map(|(i, v)| vec![format!("t{g}a{c}k{i:03}"), v])
                .collect();
            let t = b.add(&src, &format!("t{g}_alt{c}"), &["code", &headers[c]], rows)?;
            noise_columns.push(column(&t, 1, &headers[c]));

            // Distractors split the truth values between them and pad with
            // filler, so each holds a slice of the truth without being close
            // enough to cluster with it.
            for k in 0..spec.distractors {
                let mut slice: Vec<String> = values
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| i % spec.distractors == k)
                    .map(|(_, v)| v.clone())
                    .collect();
                let filler = slice.len().div_ceil(2);
                slice.extend((0..filler).map(|i| format!("t{g}-c{c}-f{k}-{i:03}")));
                let targets = if c == 0 { &dim_keys[0] } else { &hub_keys };
                let rows = slice
                    .into_iter()
                    .map(|v| vec![targets.choose(&mut rng).expect("keys").clone(), v])
                    .collect();
                b.add(&src, &format!("t{g}_x{c}_{k}"), &["ref", &headers[c]], rows)?;
            }
        }

        for k in 0..spec.decoys {
            let keys = &dim_keys[k % dims];
            let rows = keys
                .iter()
                .map(|key| vec![key.clone(), keys.choose(&mut rng).expect("keys").clone()])
                .collect();
            b.add(&src, &format!("t{g}_bridge{k}"), &["src", "dst"], rows)?;
        }

        let mut nodes = vec![hub.clone()];
        nodes.extend(dim_refs.iter().cloned());
        planted.push((
            g,
            JoinGraph::new(nodes, edges, truth_columns.clone()),
            headers,
            truth_columns,
            noise_columns,
        ));
    }

    let collection = PathlessCollection::new(b.tables, b.normalizer)?;
    let mut truths = Vec::new();
    for (id, graph, attribute_names, truth_columns, noise_columns) in planted {
        let (rows, _) = materialize_graph(&graph, &collection)?;
        truths.push(GroundTruth {
            id,
            graph,
            attribute_names,
            truth_columns,
            noise_columns,
            rows,
        });
    }
    Ok(SyntheticCollection {
        spec: spec.clone(),
        collection,
        truths,
    })
}

fn write_csv(path: &Path, table: &Table) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(table.schema.iter().map(|h| h.as_deref().unwrap_or("")))?;
    for row in &table.rows {
        w.write_record(row.iter().map(|c| c.as_deref().unwrap_or("")))?;
    }
    w.flush().map_err(|e| NifflerError::io(path, e))
}

#[derive(Serialize, Deserialize)]
struct TruthFile {
    spec: GeneratorSpec,
    truths: Vec<GroundTruth>,
}

pub const TRUTH_FILE: &str = "ground_truth.json";

impl SyntheticCollection {
    /// Write every table as `<source>/<name>.csv` under `dir`, plus the
    /// ground truths as JSON. Loading the directory back gives the same
    /// table ids.
    pub fn write_to(&self, dir: impl AsRef<Path>, truth_path: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let mut by_source: BTreeMap<&str, Vec<&Table>> = BTreeMap::new();
        for t in self.collection.tables() {
            by_source.entry(t.source.as_str()).or_default().push(t);
        }
        for (source, tables) in by_source {
            let sub = dir.join(source);
            std::fs::create_dir_all(&sub).map_err(|e| NifflerError::io(&sub, e))?;
            for t in tables {
                write_csv(&sub.join(format!("{}.csv", t.name())), t)?;
            }
        }
        let truth_path = truth_path.as_ref();
        let file = TruthFile {
            spec: self.spec.clone(),
            truths: self.truths.clone(),
        };
        std::fs::write(truth_path, serde_json::to_string_pretty(&file)?)
            .map_err(|e| NifflerError::io(truth_path, e))
    }

    /// Pair a collection loaded from disk with its ground-truth file.
    pub fn from_parts(collection: PathlessCollection, truth_path: impl AsRef<Path>) -> Result<Self> {
        let truth_path = truth_path.as_ref();
        let text = std::fs::read_to_string(truth_path).map_err(|e| NifflerError::io(truth_path, e))?;
        let file: TruthFile = serde_json::from_str(&text)?;
        Ok(SyntheticCollection {
            spec: file.spec,
            collection,
            truths: file.truths,
        })
    }

    pub fn truth(&self, id: usize) -> Option<&GroundTruth> {
        self.truths.iter().find(|t| t.id == id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::build_index;

    fn containment(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
        a.intersection(b).count() as f64 / a.len() as f64
    }

    fn values(c: &PathlessCollection, col: &ColumnRef) -> BTreeSet<String> {
        c.table(col.table.id)
            .unwrap()
            .normalized_column(col.column_index)
            .flatten()
            .map(String::from)
            .collect()
    }

    #[test]
    fn noise_columns_are_close_to_but_not_the_truth() {
        for adversarial in [false, true] {
            let spec = GeneratorSpec {
                adversarial,
                ..GeneratorSpec::default()
            };
            let s = generate_collection(&spec).unwrap();
            for t in &s.truths {
                for (tc, nc) in t.truth_columns.iter().zip(&t.noise_columns) {
                    assert_ne!(tc, nc);
                    let tv = values(&s.collection, tc);
                    let nv = values(&s.collection, nc);
                    assert!(containment(&nv, &tv) > 0.8);
                    assert_eq!(nv.difference(&tv).count(), spec.noise_extra);
                    if adversarial {
                        assert!(tv.is_subset(&nv));
                    }
                }
            }
        }
    }

    #[test]
    fn truth_view_has_one_row_per_hub_row() {
        let s = generate_collection(&GeneratorSpec::default()).unwrap();
        for t in &s.truths {
            assert_eq!(t.rows.len(), s.spec.hub_rows);
            assert!(t.graph.is_tree());
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_collection(&GeneratorSpec::default()).unwrap();
        let b = generate_collection(&GeneratorSpec::default()).unwrap();
        assert_eq!(a.truths, b.truths);
        let rows = |s: &SyntheticCollection| s.collection.tables().iter().map(|t| t.rows.clone()).collect::<Vec<_>>();
        assert_eq!(rows(&a), rows(&b));
    }

    #[test]
    fn infeasible_noise_is_rejected() {
        let spec = GeneratorSpec {
            dim_rows: 5,
            noise_extra: 4,
            ..GeneratorSpec::default()
        };
        assert!(matches!(generate_collection(&spec), Err(NifflerError::Generation(_))));
        let spec = GeneratorSpec {
            columns: 1,
            ..GeneratorSpec::default()
        };
        assert!(generate_collection(&spec).is_err());
    }

    #[test]
    fn restrict_drops_trailing_dimensions() {
        let spec = GeneratorSpec {
            truths: 1,
            columns: 4,
            ..GeneratorSpec::default()
        };
        let s = generate_collection(&spec).unwrap();
        let t = &s.truths[0];
        let r = t.restrict(2, &s.collection).unwrap();
        assert_eq!(r.graph.table_count(), 2);
        assert_eq!(r.graph.edges.len(), 1);
        let projected: BTreeSet<Row> = t.rows.iter().map(|row| row[..2].to_vec()).collect();
        assert_eq!(r.rows, projected);
    }

    #[test]
    fn planted_join_edges_exist_in_the_index() {
        let s = generate_collection(&GeneratorSpec::default()).unwrap();
        let index = build_index(&s.collection, 0.8).unwrap();
        for t in &s.truths {
            for e in &t.graph.edges {
                assert!(index.generate_join_paths(&e.left.table, &e.right.table, 1).unwrap().iter().any(|p| {
                    p.hops.len() == 1
                }));
            }
        }
    }

    #[test]
    fn written_collection_loads_with_the_same_ids() {
        let s = generate_collection(&GeneratorSpec {
            truths: 1,
            ..GeneratorSpec::default()
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let lake = dir.path().join("lake");
        let truth = dir.path().join(TRUTH_FILE);
        s.write_to(&lake, &truth).unwrap();
        let loaded = crate::corpus::load_collection(&lake, &Default::default()).unwrap();
        let again = SyntheticCollection::from_parts(loaded, &truth).unwrap();
        let ids = |c: &PathlessCollection| c.tables().iter().map(|t| (t.id(), t.normalized_rows().to_vec())).collect::<BTreeMap<_, _>>();
        assert_eq!(ids(&s.collection), ids(&again.collection));
        assert_eq!(again.truths, s.truths);
    }
}

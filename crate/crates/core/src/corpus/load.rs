use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::{Normalizer, PathlessCollection, Table, TableId, TableRef, DEFAULT_NULL_TOKENS};
use crate::error::{NifflerError, Result};

const TABLE_EXTENSIONS: &[&str] = &["csv", "tsv", "txt"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoadOptions {
    pub delimiter: u8,
    pub has_header: bool,
    pub null_tokens: Vec<String>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            delimiter: b',',
            has_header: true,
            null_tokens: DEFAULT_NULL_TOKENS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl LoadOptions {
    pub fn normalizer(&self) -> Normalizer {
        Normalizer::new(&self.null_tokens)
    }
}

/// A file that was skipped during loading.
#[derive(Debug, Clone)]
pub struct LoadWarning {
    pub path: PathBuf,
    pub reason: String,
}

impl fmt::Display for LoadWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "skipped {}: {}", self.path.display(), self.reason)
    }
}

pub fn load_collection(root: impl AsRef<Path>, options: &LoadOptions) -> Result<PathlessCollection> {
    let (collection, warnings) = load_collection_with_warnings(root, options)?;
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(collection)
}

/// Load every delimited text file under `root` (recursively). Bad files are
/// reported in the returned warnings and skipped.
pub fn load_collection_with_warnings(
    root: impl AsRef<Path>,
    options: &LoadOptions,
) -> Result<(PathlessCollection, Vec<LoadWarning>)> {
    let root = root.as_ref();
    let meta = std::fs::metadata(root).map_err(|e| NifflerError::io(root, e))?;
    if !meta.is_dir() {
        return Err(NifflerError::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotADirectory, "not a directory"),
        ));
    }
    let root_label = root
        .canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "root".to_string());
    let normalizer = options.normalizer();

    let mut files: Vec<(String, PathBuf)> = Vec::new();
    let mut warnings = Vec::new();
    for entry in WalkDir::new(root)
        .follow_links(true)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| e.depth() == 0 || !is_hidden(e.file_name()))
    {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                warnings.push(LoadWarning {
                    path: e.path().map(Path::to_path_buf).unwrap_or_else(|| root.to_path_buf()),
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if !entry.file_type().is_file() || !has_table_extension(entry.path()) {
            continue;
        }
        let relative = entry
            .path()
            .strip_prefix(root)
            .unwrap_or(entry.path())
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into_owned())
            .collect::<Vec<_>>()
            .join("/");
        files.push((relative, entry.path().to_path_buf()));
    }
    files.sort();

    let mut tables = Vec::with_capacity(files.len());
    for (relative, path) in files {
        match read_table(&path, &relative, &root_label, options, &normalizer) {
            Ok(t) => tables.push(t),
            Err(reason) => warnings.push(LoadWarning { path, reason }),
        }
    }
    if tables.is_empty() {
        return Err(NifflerError::EmptyCollection(root.to_path_buf()));
    }
    let collection = PathlessCollection::new(tables, normalizer)?;
    Ok((collection, warnings))
}

fn is_hidden(name: &std::ffi::OsStr) -> bool {
    name.to_string_lossy().starts_with('.')
}

fn has_table_extension(path: &Path) -> bool {
    path.extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
        .is_some_and(|e| TABLE_EXTENSIONS.contains(&e.as_str()))
}

fn read_table(
    path: &Path,
    relative: &str,
    root_label: &str,
    options: &LoadOptions,
    normalizer: &Normalizer,
) -> std::result::Result<Table, String> {
    let bytes = std::fs::read(path).map_err(|e| e.to_string())?;
    let text = std::str::from_utf8(&bytes).map_err(|e| format!("not UTF-8: {e}"))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());

    let mut records: Vec<Vec<String>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| e.to_string())?;
        records.push(record.iter().map(str::to_string).collect());
    }

    let (schema, body): (Vec<Option<String>>, Vec<Vec<String>>) = if options.has_header {
        let mut it = records.into_iter();
        let header = it.next().ok_or("no header row")?;
        let schema = header
            .into_iter()
            .map(|h| {
                let h = h.trim().trim_start_matches('\u{feff}').trim().to_string();
                (!h.is_empty()).then_some(h)
            })
            .collect();
        (schema, it.collect())
    } else {
        let arity = records.iter().map(Vec::len).max().unwrap_or(0);
        (vec![None; arity], records)
    };
    if schema.is_empty() {
        return Err("no columns".to_string());
    }
    let arity = schema.len();
    let rows = body
        .into_iter()
        .map(|mut r| {
            r.truncate(arity);
            r.into_iter().map(Some).collect()
        })
        .collect();

    let name = Path::new(relative)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| relative.to_string());
    let source = match relative.split_once('/') {
        Some((first, _)) => first.to_string(),
        None => root_label.to_string(),
    };
    let table_ref = TableRef::new(TableId::from_relative_path(relative), name);
    Table::new(table_ref, schema, rows, source, normalizer).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &Path, rel: &str, body: &str) {
        let p = dir.join(rel);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, body).unwrap();
    }

    #[test]
    fn loads_two_tables_with_row_counts() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.csv", "x,y\n1,2\n3,4\n5,6\n");
        write(dir.path(), "b.csv", "z\n1\n2\n3\n4\n5\n");
        let c = load_collection(dir.path(), &LoadOptions::default()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.tables()[0].row_count(), 3);
        assert_eq!(c.tables()[1].row_count(), 5);
    }

    #[test]
    fn ragged_rows_padded_and_truncated() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.csv", "x,y,z\n1\n1,2,3,4\n");
        let c = load_collection(dir.path(), &LoadOptions::default()).unwrap();
        let t = &c.tables()[0];
        assert_eq!(t.rows[0], vec![Some("1".to_string()), None, None]);
        assert_eq!(t.rows[1].len(), 3);
    }

    #[test]
    fn headerless_files_use_max_width() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.csv", "1,2\n3,4,5\n");
        let opts = LoadOptions {
            has_header: false,
            ..LoadOptions::default()
        };
        let c = load_collection(dir.path(), &opts).unwrap();
        let t = &c.tables()[0];
        assert_eq!(t.arity(), 3);
        assert!(t.schema.iter().all(Option::is_none));
        assert_eq!(t.row_count(), 2);
    }

    #[test]
    fn blank_header_cells_are_missing_headers() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.csv", "name,,city\nx,y,z\n");
        let c = load_collection(dir.path(), &LoadOptions::default()).unwrap();
        assert_eq!(c.tables()[0].schema[1], None);
        assert_eq!(c.tables()[0].column_ref(1).display_name(), "c1");
    }

    #[test]
    fn bad_files_are_skipped_with_warning() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "good.csv", "x\n1\n");
        fs::write(dir.path().join("bad.csv"), [0xff, 0xfe, 0x00, 0x41]).unwrap();
        write(dir.path(), "empty.csv", "");
        write(dir.path(), "notes.md", "ignored");
        let (c, warnings) =
            load_collection_with_warnings(dir.path(), &LoadOptions::default()).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(warnings.len(), 2);
    }

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_collection(dir.path(), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, NifflerError::EmptyCollection(_)));
        assert!(err.to_string().contains("empty collection"));
    }

    #[test]
    fn ids_are_stable_and_source_is_top_directory() {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..70 {
            write(dir.path(), &format!("src{}/t{i:02}.csv", i % 3), "a,b\n1,2\n");
        }
        let a = load_collection(dir.path(), &LoadOptions::default()).unwrap();
        let b = load_collection(dir.path(), &LoadOptions::default()).unwrap();
        assert_eq!(a.len(), 70);
        let ids_a: Vec<_> = a.tables().iter().map(|t| t.id()).collect();
        let ids_b: Vec<_> = b.tables().iter().map(|t| t.id()).collect();
        assert_eq!(ids_a, ids_b);
        assert_eq!(a.sources().len(), 3);
        assert_eq!(ids_a[0], TableId::from_relative_path("src0/t00.csv"));
    }

    #[test]
    fn tab_delimiter_and_quoting() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.tsv", "name\tnote\n\"Doe, J\"\t\"a \"\"b\"\"\"\n");
        let opts = LoadOptions {
            delimiter: b'\t',
            ..LoadOptions::default()
        };
        let c = load_collection(dir.path(), &opts).unwrap();
        assert_eq!(c.tables()[0].rows[0][0].as_deref(), Some("Doe, J"));
        assert_eq!(c.tables()[0].rows[0][1].as_deref(), Some("a \"b\""));
    }
}

//! Order-insensitive row and view fingerprints.

use xxhash_rust::xxh3::Xxh3;

use crate::search::Row;

pub fn cell_hash(position: usize, value: Option<&str>) -> u64 {
    let mut h = Xxh3::new();
    h.update(&(position as u64).to_le_bytes());
    match value {
        Some(v) => {
            h.update(&[1]);
            h.update(v.as_bytes());
        }
        None => h.update(&[0]),
    }
    h.digest()
}

/// Wrapping sum of the cell hashes; the position is part of each cell hash so
/// swapping two values changes the result.
pub fn row_hash(row: &Row) -> u64 {
    row.iter()
        .enumerate()
        .fold(0u64, |acc, (i, v)| acc.wrapping_add(cell_hash(i, v.as_deref())))
}

/// Wrapping sum of row hashes over a row set.
pub fn view_hash<'a>(rows: impl IntoIterator<Item = &'a Row>) -> u64 {
    rows.into_iter()
        .fold(0u64, |acc, r| acc.wrapping_add(row_hash(r)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(cells: &[&str]) -> Row {
        cells.iter().map(|c| Some(c.to_string())).collect()
    }

    #[test]
    fn position_matters() {
        assert_ne!(row_hash(&row(&["a", "b"])), row_hash(&row(&["b", "a"])));
    }

    #[test]
    fn view_hash_ignores_row_order() {
        let (a, b) = (row(&["1", "x"]), row(&["2", "y"]));
        assert_eq!(view_hash([&a, &b]), view_hash([&b, &a]));
    }

    #[test]
    fn null_differs_from_text() {
        assert_ne!(cell_hash(0, None), cell_hash(0, Some("")));
    }
}

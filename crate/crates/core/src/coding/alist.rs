//! MacKay's alist text format for sparse parity-check matrices.

use crate::error::{Error, Result};

/// Sparse binary matrix as per-column and per-row index lists (0-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub col_entries: Vec<Vec<usize>>,
    pub row_entries: Vec<Vec<usize>>,
}

impl SparseMatrix {
    /// Builds from per-column row lists; row lists are derived.
    pub fn from_columns(rows: usize, col_entries: Vec<Vec<usize>>) -> Self {
        let mut row_entries = vec![Vec::new(); rows];
        for (c, col) in col_entries.iter().enumerate() {
            for &r in col {
                row_entries[r].push(c);
            }
        }
        let mut col_entries = col_entries;
        col_entries.iter_mut().for_each(|c| c.sort_unstable());
        SparseMatrix {
            rows,
            cols: col_entries.len(),
            col_entries,
            row_entries,
        }
    }

    pub fn to_alist(&self) -> String {
        let max_col = self.col_entries.iter().map(Vec::len).max().unwrap_or(0);
        let max_row = self.row_entries.iter().map(Vec::len).max().unwrap_or(0);
        let line = |v: Vec<usize>| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let padded = |entries: &[usize], width: usize| {
            let mut v: Vec<usize> = entries.iter().map(|&x| x + 1).collect();
            v.resize(width, 0);
            line(v)
        };
        let mut out = Vec::new();
        out.push(format!("{} {}", self.cols, self.rows));
        out.push(format!("{max_col} {max_row}"));
        out.push(line(self.col_entries.iter().map(Vec::len).collect()));
        out.push(line(self.row_entries.iter().map(Vec::len).collect()));
        out.extend(self.col_entries.iter().map(|c| padded(c, max_col)));
        out.extend(self.row_entries.iter().map(|r| padded(r, max_row)));
        out.join("\n") + "\n"
    }

    /// Parses alist text, cross-checking the column and row lists.
    pub fn from_alist(text: &str) -> Result<Self> {
        let mut nums = text.split_whitespace().map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::Parse(format!("alist: bad integer {t:?}")))
        });
        let mut next = || nums.next().unwrap_or_else(|| Err(Error::Parse("alist: unexpected end".into())));
        let cols = next()?;
        let rows = next()?;
        let max_col = next()?;
        let max_row = next()?;
        let col_w: Vec<usize> = (0..cols).map(|_| next()).collect::<Result<_>>()?;
        let row_w: Vec<usize> = (0..rows).map(|_| next()).collect::<Result<_>>()?;
        if col_w.iter().any(|&w| w > max_col) || row_w.iter().any(|&w| w > max_row) {
            return Err(Error::Parse("alist: weight above declared maximum".into()));
        }
        let mut read_lists = |count: usize, width: usize, weights: &[usize], bound: usize| -> Result<Vec<Vec<usize>>> {
            (0..count)
                .map(|i| {
                    let raw: Vec<usize> = (0..width).map(|_| next()).collect::<Result<_>>()?;
                    let entries: Vec<usize> = raw.iter().filter(|&&x| x != 0).map(|&x| x - 1).collect();
                    if entries.len() != weights[i] || entries.iter().any(|&x| x >= bound) {
                        return Err(Error::Parse(format!("alist: list {i} inconsistent with its weight")));
                    }
                    Ok(entries)
                })
                .collect()
        };
        let col_entries = read_lists(cols, max_col, &col_w, rows)?;
        let row_entries = read_lists(rows, max_row, &row_w, cols)?;
        let m = SparseMatrix::from_columns(rows, col_entries);
        let mut sorted_rows = row_entries;
        sorted_rows.iter_mut().for_each(|r| r.sort_unstable());
        let mut derived = m.row_entries.clone();
        derived.iter_mut().for_each(|r| r.sort_unstable());
        if derived != sorted_rows {
            return Err(Error::Parse("alist: row lists disagree with column lists".into()));
        }
        Ok(m)
    }
}

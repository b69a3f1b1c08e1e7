//! `SPMASK1` text format.
//!
//! ```text
//! SPMASK1 <d> <n> <repeat>
//! <sorted row indices of column 0, space separated>
//! ...
//! <sorted row indices of column n-1>
//! ```
//!
//! An empty column is an empty line.

use crate::fsutil::write_atomic;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::Mask;
use crate::error::{Error, Result};

const MAGIC: &str = "SPMASK1";

pub fn write_mask_string(mask: &Mask) -> String {
    let mut s = format!(
        "{MAGIC} {} {} {}\n",
        mask.rows(),
        mask.cols(),
        mask.repeat()
    );
    for col in mask.columns() {
        let mut first = true;
        for i in col {
            if !first {
                s.push(' ');
            }
            first = false;
            let _ = write!(s, "{i}");
        }
        s.push('\n');
    }
    s
}

pub fn parse_mask(text: &str, origin: &str) -> Result<Mask> {
    let err = |line: usize, msg: String| Error::parse(origin, line, msg);
    let (header, body) = text
        .split_once('\n')
        .ok_or_else(|| err(1, "missing header line".into()))?;
    let fields: Vec<&str> = header.split(' ').collect();
    if fields.len() != 4 || fields[0] != MAGIC {
        return Err(err(1, format!("malformed header '{header}'")));
    }
    let num = |s: &str, name: &str| -> Result<usize> {
        match s.parse::<usize>() {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(err(1, format!("bad {name} '{s}'"))),
        }
    };
    let rows = num(fields[1], "row count")?;
    let cols = num(fields[2], "column count")?;
    let repeat = num(fields[3], "repeat")?;

    let body = body
        .strip_suffix('\n')
        .ok_or_else(|| err(cols + 1, "file must end with a newline".into()))?;
    let lines: Vec<&str> = body.split('\n').collect();
    if lines.len() != cols {
        return Err(err(
            lines.len().min(cols) + 2,
            format!("expected {cols} column lines, found {}", lines.len()),
        ));
    }

    let mut mask = Mask::zeros(rows, cols, repeat);
    for (j, line) in lines.iter().enumerate() {
        let lineno = j + 2;
        let mut prev: Option<usize> = None;
        if line.is_empty() {
            continue;
        }
        for tok in line.split(' ') {
            let i: usize = tok
                .parse()
                .map_err(|_| err(lineno, format!("bad index '{tok}'")))?;
            if i >= rows {
                return Err(err(lineno, format!("index {i} out of range 0..{rows}")));
            }
            if prev.is_some_and(|p| p >= i) {
                return Err(err(lineno, "indices must be strictly increasing".into()));
            }
            prev = Some(i);
            mask.set(i, j, true);
        }
    }
    Ok(mask)
}

/// Writes atomically (temp file in the same directory, then rename).
pub fn save_mask(mask: &Mask, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path, write_mask_string(mask).as_bytes())
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = fs::read_to_string(path)?;
    parse_mask(&text, &path.display().to_string())
}

//! Matrix Market coordinate text format (`real`, `general` or `symmetric`).
//!
//! Indices are 1-based in the file and 0-based in memory.

use std::io::{BufRead, Write};

use crate::MatrixError;

pub const HEADER_GENERAL: &str = "%%MatrixMarket matrix coordinate real general";
pub const HEADER_SYMMETRIC: &str = "%%MatrixMarket matrix coordinate real symmetric";

/// Square matrix read from a coordinate file. For `symmetric` files only the
/// stored triangle is returned and `symmetric` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct Coordinate {
    pub n: usize,
    pub symmetric: bool,
    pub entries: Vec<(usize, usize, f64)>,
}

impl Coordinate {
    /// Entries of the full matrix, mirroring the stored triangle if symmetric.
    pub fn expanded(&self) -> Vec<(usize, usize, f64)> {
        let mut out = self.entries.clone();
        if self.symmetric {
            out.extend(self.entries.iter().filter(|e| e.0 != e.1).map(|&(r, c, v)| (c, r, v)));
        }
        out
    }

    /// Stored triangle flipped to the upper side.
    pub fn upper(&self) -> Vec<(usize, usize, f64)> {
        self.entries.iter().map(|&(r, c, v)| (r.min(c), r.max(c), v)).collect()
    }
}

pub fn write<W: Write>(
    mut w: W,
    n: usize,
    symmetric: bool,
    entries: &[(usize, usize, f64)],
) -> Result<(), MatrixError> {
    writeln!(w, "{}", if symmetric { HEADER_SYMMETRIC } else { HEADER_GENERAL })?;
    writeln!(w, "{n} {n} {}", entries.len())?;
    for &(r, c, v) in entries {
        if r >= n || c >= n {
            return Err(MatrixError::IndexOutOfRange { row: r, col: c, n });
        }
        // Symmetric files store the lower triangle.
        let (r, c) = if symmetric { (r.max(c), r.min(c)) } else { (r, c) };
        writeln!(w, "{} {} {v:e}", r + 1, c + 1)?;
    }
    Ok(())
}

pub fn read<R: BufRead>(r: R) -> Result<Coordinate, MatrixError> {
    let perr = |line: usize, msg: String| MatrixError::Parse { line, msg };
    let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| perr(1, "empty input".into()))?;
    let header = header?;
    let words: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" || words[2] != "coordinate" {
        return Err(perr(1, format!("not a coordinate matrix header: `{header}`")));
    }
    if words[3] != "real" && words[3] != "integer" {
        return Err(perr(1, format!("unsupported field `{}`", words[3])));
    }
    let symmetric = match words[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(perr(1, format!("unsupported symmetry `{other}`"))),
    };
    let mut size: Option<(usize, usize)> = None;
    let mut entries = Vec::new();
    for (no, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let f: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                let nums: Result<Vec<usize>, _> = f.iter().map(|x| x.parse::<usize>()).collect();
                let nums = nums.map_err(|e| perr(no, format!("bad size line: {e}")))?;
                if nums.len() != 3 || nums[0] != nums[1] {
                    return Err(perr(no, format!("expected `n n nnz` for a square matrix, got `{t}`")));
                }
                size = Some((nums[0], nums[2]));
                entries.reserve(nums[2]);
            }
            Some((n, _)) => {
                if f.len() != 3 {
                    return Err(perr(no, format!("expected `row col value`, got `{t}`")));
                }
                let idx = |s: &str| -> Result<usize, MatrixError> {
                    let i: usize = s.parse().map_err(|e| perr(no, format!("bad index `{s}`: {e}")))?;
                    if i == 0 || i > n {
                        return Err(perr(no, format!("index {i} outside 1..={n}")));
                    }
                    Ok(i - 1)
                };
                let v: f64 = f[2]
                    .parse()
                    .map_err(|e| perr(no, format!("bad value `{}`: {e}", f[2])))?;
                entries.push((idx(f[0])?, idx(f[1])?, v));
            }
        }
    }
    let (n, nnz) = size.ok_or_else(|| perr(1, "missing size line".into()))?;
    if entries.len() != nnz {
        return Err(perr(
            0,
            format!("header announces {nnz} entries, found {}", entries.len()),
        ));
    }
    Ok(Coordinate { n, symmetric, entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_exact() {
        let entries = vec![(0, 0, 1.5), (2, 1, -3.25e-300), (1, 2, 0.1)];
        let mut buf = Vec::new();
        write(&mut buf, 3, false, &entries).unwrap();
        let back = read(&buf[..]).unwrap();
        assert_eq!(
            back,
            Coordinate {
                n: 3,
                symmetric: false,
                entries
            }
        );
    }

    #[test]
    fn symmetric_files_expand() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% c\n2 2 2\n1 1 4\n2 1 1\n";
        let m = read(text.as_bytes()).unwrap();
        assert_eq!(m.upper(), vec![(0, 0, 4.0), (0, 1, 1.0)]);
        assert_eq!(m.expanded().len(), 3);
    }

    #[test]
    fn errors_name_the_line() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        match read(text.as_bytes()) {
            Err(MatrixError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}

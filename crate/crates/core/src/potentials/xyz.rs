//! Minimal XYZ reader/writer: atom count, comment line, then `El x y z` rows.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Parsed XYZ frame; the element column is discarded.
#[derive(Debug, Clone, PartialEq)]
pub struct XyzFrame {
    pub comment: String,
    /// Flattened coordinates, three per atom.
    pub coords: Vec<f64>,
}

impl XyzFrame {
    pub fn n_atoms(&self) -> usize {
        self.coords.len() / 3
    }
}

pub fn parse_xyz(text: &str, origin: &Path) -> Result<XyzFrame> {
    let err = |reason: String| Error::Parse {
        path: origin.to_path_buf(),
        reason,
    };
    let mut lines = text.lines();
    let count_line = lines.next().ok_or_else(|| err("empty file".into()))?;
    let n: usize = count_line
        .trim()
        .parse()
        .map_err(|_| err(format!("bad atom count {count_line:?}")))?;
    let comment = lines.next().unwrap_or("").trim().to_string();
    let mut coords = Vec::with_capacity(3 * n);
    for k in 0..n {
        let line = lines
            .next()
            .ok_or_else(|| err(format!("expected {n} atoms, found {k}")))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 4 {
            return Err(err(format!("atom line {} has fewer than 4 fields", k + 1)));
        }
        for f in &fields[1..4] {
            let v: f64 = f
                .parse()
                .map_err(|_| err(format!("bad coordinate {f:?} on atom line {}", k + 1)))?;
            coords.push(v);
        }
    }
    Ok(XyzFrame { comment, coords })
}

pub fn read_xyz(path: &Path) -> Result<XyzFrame> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_xyz(&text, path)
}

pub fn format_xyz(coords: &[f64], comment: &str, element: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", coords.len() / 3);
    let _ = writeln!(out, "{}", comment.replace('\n', " "));
    for atom in coords.chunks_exact(3) {
        let _ = writeln!(
            out,
            "{element} {:.12} {:.12} {:.12}",
            atom[0], atom[1], atom[2]
        );
    }
    out
}

pub fn write_xyz(path: &Path, coords: &[f64], comment: &str) -> Result<()> {
    std::fs::write(path, format_xyz(coords, comment, "X")).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_ignores_element() {
        let text = "2\nsome comment\nAr 0 0 0\nXe 1.5 -2 3e-1\n";
        let frame = parse_xyz(text, Path::new("mem")).unwrap();
        assert_eq!(frame.n_atoms(), 2);
        assert_eq!(frame.comment, "some comment");
        assert_eq!(frame.coords, vec![0.0, 0.0, 0.0, 1.5, -2.0, 0.3]);
    }

    #[test]
    fn truncated_file_is_an_error() {
        assert!(parse_xyz("3\nc\nX 0 0 0\n", Path::new("mem")).is_err());
        assert!(parse_xyz("", Path::new("mem")).is_err());
        assert!(parse_xyz("x\n", Path::new("mem")).is_err());
    }

    #[test]
    fn format_parse_roundtrip() {
        let coords = vec![0.125, -1.0, 2.5, 3.0, 4.0, -5.75];
        let text = format_xyz(&coords, "c", "X");
        assert_eq!(parse_xyz(&text, Path::new("mem")).unwrap().coords, coords);
    }

    #[test]
    fn missing_file_names_path() {
        let e = read_xyz(Path::new("/nonexistent/lj38.xyz")).unwrap_err();
        assert!(e.to_string().contains("/nonexistent/lj38.xyz"));
    }
}

//! Minimal comma-separated tables with a leading `#` metadata comment.
//!
//! Fields never contain commas or quotes (clip ids, labels and numbers), so
//! no quoting is supported; a field with a comma is rejected on write.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::meta::Meta;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvTable {
    pub meta: Meta,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(meta: Meta, header: Vec<String>) -> Self {
        Self { meta, header, rows: Vec::new() }
    }

    /// Comment lines before the header are merged into `meta`; blank lines
    /// are skipped.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut meta = Meta::default();
        let mut header: Option<Vec<String>> = None;
        let mut rows = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            if line.starts_with('#') {
                if header.is_none() {
                    if let Some(m) = Meta::parse_comment(line) {
                        meta.0.extend(m.0);
                    }
                }
                continue;
            }
            let fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
            match &header {
                None => header = Some(fields),
                Some(h) if h.len() != fields.len() => {
                    return Err(Error::format(
                        path,
                        "csv",
                        format!("line {}: {} fields, header has {}", lineno + 1, fields.len(), h.len()),
                    ))
                }
                Some(_) => rows.push(fields),
            }
        }
        let header = header.ok_or_else(|| Error::format(path, "csv", "missing header"))?;
        Ok(Self { meta, header, rows })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        if !self.meta.0.is_empty() {
            out.push_str(&self.meta.to_comment());
            out.push('\n');
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if let Some(bad) = self.header.iter().chain(self.rows.iter().flatten()).find(|f| f.contains(',')) {
            return Err(Error::format(path, "csv", format!("field contains a comma: {bad:?}")));
        }
        write_file(path, self.render())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn require_column(&self, name: &str, path: &Path) -> Result<usize> {
        self.column(name).ok_or_else(|| Error::format(path, "csv header", format!("missing column {name:?}")))
    }
}

/// Writes `contents`, creating parent directories.
pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// One `clip_path,label` annotation row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Annotation {
    pub clip_path: String,
    pub label: String,
}

pub fn read_annotations(path: impl AsRef<Path>) -> Result<(Meta, Vec<Annotation>)> {
    let path = path.as_ref();
    let table = CsvTable::read(path)?;
    let ci = table.require_column("clip_path", path)?;
    let li = table.require_column("label", path)?;
    let rows = table.rows.iter().map(|r| Annotation { clip_path: r[ci].clone(), label: r[li].clone() }).collect();
    Ok((table.meta, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_render_round_trip() {
        let text = "# seed=7 tool=dgme/0.1.0\nclip_id,label\na,pan\nb,zoom\n";
        let t = CsvTable::parse(text, Path::new("x.csv")).unwrap();
        assert_eq!(t.meta.get("seed"), Some("7"));
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.render(), text);
    }

    #[test]
    fn ragged_rows_and_missing_header_are_errors() {
        assert!(CsvTable::parse("a,b\n1\n", Path::new("x")).is_err());
        assert!(CsvTable::parse("# only=comment\n", Path::new("x")).is_err());
    }

    #[test]
    fn crlf_and_blank_lines_tolerated() {
        let t = CsvTable::parse("clip_path,label\r\n\r\nc/1.y8seq,pan\r\n", Path::new("x")).unwrap();
        assert_eq!(t.rows, vec![vec!["c/1.y8seq".to_string(), "pan".to_string()]]);
    }

    #[test]
    fn annotations_require_columns() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        fs::write(&p, "path,label\nx,pan\n").unwrap();
        assert!(read_annotations(&p).is_err());
        fs::write(&p, "label,clip_path\npan,x\n").unwrap();
        let (_, rows) = read_annotations(&p).unwrap();
        assert_eq!(rows[0], Annotation { clip_path: "x".into(), label: "pan".into() });
    }
}

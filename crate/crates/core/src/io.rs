//! Shared reader/writer for the delimited file formats.
//!
//! Every file opens with `# key: value` metadata lines (at least
//! `schema_version`), followed by a header row and comma- or tab-separated
//! records.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const FILE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub(crate) struct Delimited {
    pub context: String,
    pub meta: BTreeMap<String, String>,
    pub header: Vec<String>,
    /// (1-based file line, fields)
    pub rows: Vec<(u64, Vec<String>)>,
}

impl Delimited {
    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::MissingField {
                context: self.context.clone(),
                field: name.to_string(),
            })
    }

    pub fn optional_column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h.eq_ignore_ascii_case(name))
    }

    pub fn parse_error(&self, line: u64, message: impl Into<String>) -> Error {
        Error::Parse {
            context: self.context.clone(),
            line,
            message: message.into(),
        }
    }

    pub fn field<T: std::str::FromStr>(&self, line: u64, row: &[String], col: usize, name: &str) -> Result<T> {
        let raw = row.get(col).map(String::as_str).unwrap_or("");
        raw.parse()
            .map_err(|_| self.parse_error(line, format!("invalid {name} `{raw}`")))
    }
}

pub(crate) fn read_delimited(path: &Path) -> Result<Delimited> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_delimited(&text, &path.display().to_string())
}

pub(crate) fn parse_delimited(text: &str, context: &str) -> Result<Delimited> {
    let mut meta = BTreeMap::new();
    let mut meta_lines = 0u64;
    let mut body_start = 0usize;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once(':') {
                meta.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
            }
            meta_lines += 1;
            body_start += line.len();
        } else {
            break;
        }
    }
    let body = &text[body_start..];

    let version = meta.get("schema_version").ok_or_else(|| Error::MissingField {
        context: context.to_string(),
        field: "schema_version".into(),
    })?;
    let found: u32 = version.parse().map_err(|_| Error::Parse {
        context: context.to_string(),
        line: 1,
        message: format!("invalid schema_version `{version}`"),
    })?;
    if found != FILE_SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            context: context.to_string(),
            found,
            expected: FILE_SCHEMA_VERSION,
        });
    }

    let mut lines = body
        .lines()
        .enumerate()
        .map(|(i, l)| (meta_lines + i as u64 + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (_, header_text) = lines.next().ok_or_else(|| Error::Parse {
        context: context.to_string(),
        line: meta_lines + 1,
        message: "missing header row".into(),
    })?;
    let delimiter = if header_text.contains('\t') && !header_text.contains(',') {
        '\t'
    } else {
        ','
    };
    let split = |line: &str| -> Vec<String> {
        line.split(delimiter)
            .map(|f| f.trim().trim_matches('"').to_string())
            .collect()
    };
    let header = split(header_text);

    let mut rows = Vec::new();
    for (line, text) in lines {
        let fields = split(text);
        if fields.len() != header.len() {
            return Err(Error::Parse {
                context: context.to_string(),
                line,
                message: format!("expected {} fields, found {}", header.len(), fields.len()),
            });
        }
        rows.push((line, fields));
    }

    Ok(Delimited {
        context: context.to_string(),
        meta,
        header,
        rows,
    })
}

/// Renders metadata lines, a header and rows.
pub(crate) fn render_delimited(meta: &[(&str, String)], header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# schema_version: {FILE_SCHEMA_VERSION}");
    for (k, v) in meta {
        let _ = writeln!(out, "# {k}: {v}");
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_metadata_and_rows() {
        let text = "# schema_version: 1\n# relation_kind: CLOR\ni,j,weight\n1,2,0.5\n\n3, 4 ,1\n";
        let d = parse_delimited(text, "t").unwrap();
        assert_eq!(d.meta["relation_kind"], "CLOR");
        assert_eq!(d.header, ["i", "j", "weight"]);
        assert_eq!(d.rows.len(), 2);
        assert_eq!(d.rows[0].0, 4);
        assert_eq!(d.rows[1].0, 6);
        assert_eq!(d.rows[1].1, ["3", "4", "1"]);
    }

    #[test]
    fn tab_separated() {
        let d = parse_delimited("# schema_version: 1\na\tb\n1\t2\n", "t").unwrap();
        assert_eq!(d.rows[0].1, ["1", "2"]);
    }

    #[test]
    fn requires_schema_version() {
        assert!(matches!(parse_delimited("a,b\n1,2\n", "t"), Err(Error::MissingField { .. })));
        assert!(matches!(
            parse_delimited("# schema_version: 2\na,b\n", "t"),
            Err(Error::SchemaVersion { found: 2, .. })
        ));
    }

    #[test]
    fn ragged_row_reports_line() {
        match parse_delimited("# schema_version: 1\na,b\n1,2\n3\n", "t") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn column_lookup() {
        let d = parse_delimited("# schema_version: 1\nDevice_ID,x\n", "cat").unwrap();
        assert_eq!(d.column("device_id").unwrap(), 0);
        match d.column("y") {
            Err(Error::MissingField { field, .. }) => assert_eq!(field, "y"),
            other => panic!("{other:?}"),
        }
    }
}

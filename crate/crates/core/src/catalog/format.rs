//! The line-oriented catalog text format.
//!
//! A file is a sequence of records. Each record opens with `<kind> <name>`,
//! continues with indented `<key> <value>` lines and closes with `end`.
//! Lines starting with `#` are comments and are kept by the formatter.

use crate::error::CatalogError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawEntry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawRecord {
    pub kind: String,
    pub name: String,
    pub line: usize,
    pub leading_comments: Vec<String>,
    pub entries: Vec<RawEntry>,
}

impl RawRecord {
    pub fn get(&self, key: &str) -> Option<&RawEntry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a RawEntry> + 'a {
        self.entries.iter().filter(move |e| e.key == key)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawFile {
    pub name: String,
    pub records: Vec<RawRecord>,
    pub trailing_comments: Vec<String>,
}

fn split_key(text: &str) -> (&str, &str) {
    match text.find(char::is_whitespace) {
        Some(i) => (&text[..i], text[i..].trim()),
        None => (text, ""),
    }
}

pub fn parse_file(file: &str, text: &str) -> Result<RawFile, CatalogError> {
    let err = |line: usize, message: String| CatalogError { file: file.to_string(), line, message };
    let mut records = Vec::new();
    let mut comments = Vec::new();
    let mut current: Option<RawRecord> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('#') {
            match current.as_mut() {
                Some(r) => r.entries.push(RawEntry { key: "#".into(), value: trimmed.to_string(), line }),
                None => comments.push(trimmed.to_string()),
            }
            continue;
        }
        match current.take() {
            None => {
                let (kind, name) = split_key(trimmed);
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err(err(line, format!("expected `<kind> <name>`, got `{trimmed}`")));
                }
                current = Some(RawRecord {
                    kind: kind.to_string(),
                    name: name.to_string(),
                    line,
                    leading_comments: std::mem::take(&mut comments),
                    entries: vec![],
                });
            }
            Some(mut r) => {
                if trimmed == "end" {
                    records.push(r);
                } else {
                    if !raw.starts_with(char::is_whitespace) {
                        return Err(err(line, format!("record `{}` is missing `end` before `{trimmed}`", r.name)));
                    }
                    let (key, value) = split_key(trimmed);
                    r.entries.push(RawEntry { key: key.to_string(), value: value.to_string(), line });
                    current = Some(r);
                }
            }
        }
    }
    if let Some(r) = current {
        return Err(err(r.line, format!("record `{}` is not closed by `end`", r.name)));
    }
    Ok(RawFile { name: file.to_string(), records, trailing_comments: comments })
}

/// Canonical layout: one blank line between records, two-space indentation,
/// single spaces between key and value.
pub fn format_file(f: &RawFile) -> String {
    let mut out = String::new();
    for (k, r) in f.records.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        for c in &r.leading_comments {
            out.push_str(c);
            out.push('\n');
        }
        out.push_str(&format!("{} {}\n", r.kind, r.name));
        for e in &r.entries {
            if e.key == "#" || e.value.is_empty() {
                out.push_str(&format!("  {}\n", if e.key == "#" { &e.value } else { &e.key }));
            } else {
                let value: Vec<&str> = e.value.split_whitespace().collect();
                out.push_str(&format!("  {} {}\n", e.key, value.join(" ")));
            }
        }
        out.push_str("end\n");
    }
    if !f.trailing_comments.is_empty() {
        out.push('\n');
        for c in &f.trailing_comments {
            out.push_str(c);
            out.push('\n');
        }
    }
    out
}

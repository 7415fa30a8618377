//! The frozen column manifest shipped with the binary.

pub const MANIFEST: &str = include_str!("../manifest.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub group: String,
    pub file: String,
    pub columns: Vec<String>,
}

pub fn entries() -> Vec<Entry> {
    MANIFEST
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let mut parts = l.split_whitespace();
            let group = parts.next().unwrap_or_default().to_string();
            let file = parts.next().unwrap_or_default().to_string();
            let columns = parts
                .next()
                .unwrap_or_default()
                .split(',')
                .map(String::from)
                .collect();
            Entry { group, file, columns }
        })
        .collect()
}

pub fn columns(group: &str, file: &str) -> Option<Vec<String>> {
    entries()
        .into_iter()
        .find(|e| e.group == group && e.file == file)
        .map(|e| e.columns)
}

/// Manifest lines of one group, as copied into a reproduce bundle.
pub fn group_text(group: &str) -> String {
    let mut out = String::from("# file columns\n");
    for e in entries().into_iter().filter(|e| e.group == group) {
        out.push_str(&format!("{} {}\n", e.file, e.columns.join(",")));
    }
    out
}

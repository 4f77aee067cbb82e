//! Flat `key=value` text files: one pair per line, `#` comments, stable order.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

pub fn render(pairs: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in pairs {
        out.push_str(k);
        out.push('=');
        out.push_str(v);
        out.push('\n');
    }
    out
}

pub fn parse(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key=value", n + 1))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

pub fn write_file(path: impl AsRef<Path>, pairs: &[(String, String)]) -> io::Result<()> {
    fs::write(path, render(pairs))
}

pub fn read_file(path: impl AsRef<Path>) -> io::Result<BTreeMap<String, String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_skips_comments_and_trims() {
        let m = parse("# hi\n a = 1\n\nb=x=y\n").unwrap();
        assert_eq!(m["a"], "1");
        assert_eq!(m["b"], "x=y");
        assert!(parse("novalue\n").is_err());
    }
}

//! TAB-separated edge lists: one `u<TAB>v` pair of decimal IDs per line.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use super::{GraphBuilder, GraphError, SocialGraph};

#[derive(Debug, Error)]
pub enum EdgeListError {
    #[error("edge list I/O: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone)]
pub struct EdgeListRead {
    pub graph: SocialGraph,
    /// Lines that repeated an undirected edge already seen.
    pub duplicates: usize,
}

pub fn read_edge_list(path: impl AsRef<Path>) -> Result<EdgeListRead, EdgeListError> {
    read_edge_list_from(BufReader::new(File::open(path)?))
}

/// Parses an edge list. Blank lines and lines starting with `#` are skipped;
/// endpoints may come in either order.
pub fn read_edge_list_from(reader: impl BufRead) -> Result<EdgeListRead, EdgeListError> {
    let mut b = GraphBuilder::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        let trimmed = line.trim_end_matches('\r');
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split('\t');
        let mut next_id = |what: &str| -> Result<u64, EdgeListError> {
            let tok = fields.next().ok_or_else(|| EdgeListError::Parse {
                line: lineno,
                message: format!("missing {what} field"),
            })?;
            tok.trim().parse::<u64>().map_err(|_| EdgeListError::Parse {
                line: lineno,
                message: format!("non-numeric {what} token {tok:?}"),
            })
        };
        let u = next_id("source")?;
        let v = next_id("target")?;
        if fields.next().is_some() {
            return Err(EdgeListError::Parse { line: lineno, message: "more than two fields".into() });
        }
        b.add_edge(u, v).map_err(|e| match e {
            GraphError::SelfLoop(id) => EdgeListError::Parse { line: lineno, message: format!("self-loop on {id}") },
            other => EdgeListError::Parse { line: lineno, message: other.to_string() },
        })?;
    }
    let (graph, duplicates) = b.build_counting_duplicates();
    Ok(EdgeListRead { graph, duplicates })
}

pub fn write_edge_list(g: &SocialGraph, path: impl AsRef<Path>) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_edge_list_to(g, &mut w)?;
    w.flush()
}

/// Writes canonical edges in ascending order. Isolated nodes are not
/// representable and are omitted.
pub fn write_edge_list_to(g: &SocialGraph, mut w: impl Write) -> io::Result<()> {
    for e in g.edges() {
        writeln!(w, "{}\t{}", e.u, e.v)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn read(s: &str) -> Result<EdgeListRead, EdgeListError> {
        read_edge_list_from(s.as_bytes())
    }

    #[test]
    fn reversed_duplicate_collapses() {
        let r = read("1\t2\n2\t1\n").unwrap();
        assert_eq!(r.graph.edge_count(), 1);
        assert_eq!(r.duplicates, 1);
    }

    #[test]
    fn non_numeric_token_reports_line() {
        match read("a\t2\n") {
            Err(EdgeListError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        match read("1\t2\n3\n") {
            Err(EdgeListError::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("missing"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn self_loop_is_a_parse_error() {
        assert!(matches!(read("4\t4\n"), Err(EdgeListError::Parse { line: 1, .. })));
    }

    #[test]
    fn line_count_matches_edge_count() {
        let r = read("5\t1\n1\t3\n3\t5\n").unwrap();
        let mut out = Vec::new();
        write_edge_list_to(&r.graph, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "1\t3\n1\t5\n3\t5\n");
        assert_eq!(text.lines().count(), r.graph.edge_count());
    }

    proptest! {
        #[test]
        fn write_read_is_stable(edges in proptest::collection::vec((0u64..1000, 0u64..1000), 0..120)) {
            let mut text = String::new();
            for (u, v) in edges.iter().filter(|(u, v)| u != v) {
                text.push_str(&format!("{u}\t{v}\n"));
            }
            let first = read(&text).unwrap().graph;
            let mut once = Vec::new();
            write_edge_list_to(&first, &mut once).unwrap();
            let second = read_edge_list_from(&once[..]).unwrap();
            prop_assert_eq!(second.duplicates, 0);
            let mut twice = Vec::new();
            write_edge_list_to(&second.graph, &mut twice).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}

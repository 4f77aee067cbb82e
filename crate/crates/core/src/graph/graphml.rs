//! Minimal GraphML: node and edge elements carrying IDs only.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use thiserror::Error;

use super::{GraphBuilder, NodeId, SocialGraph};

#[derive(Debug, Error)]
pub enum GraphmlError {
    #[error("GraphML I/O: {0}")]
    Io(#[from] io::Error),
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("graph is not undirected (edgedefault={0:?})")]
    Directed(String),
    #[error("duplicate node id {0:?}")]
    DuplicateNode(String),
    #[error("edge references unknown node {0:?}")]
    UnknownNode(String),
    #[error("invalid node id {0:?}: expected a decimal integer")]
    InvalidId(String),
    #[error("<{element}> is missing attribute {attribute:?}")]
    MissingAttribute { element: &'static str, attribute: &'static str },
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("unsupported GraphML: {0}")]
    Unsupported(String),
}

impl From<quick_xml::events::attributes::AttrError> for GraphmlError {
    fn from(e: quick_xml::events::attributes::AttrError) -> Self {
        GraphmlError::Xml(e.to_string())
    }
}

impl From<quick_xml::Error> for GraphmlError {
    fn from(e: quick_xml::Error) -> Self {
        GraphmlError::Xml(e.to_string())
    }
}

const HEADER: &str = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\" \
xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" \
xsi:schemaLocation=\"http://graphml.graphdrawing.org/xmlns http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd\">\n";

/// Serializes `g` with nodes in ascending ID order and edges in ascending
/// `(u, v)` order, so equal graphs give byte-identical documents.
pub fn export_graphml(g: &SocialGraph) -> String {
    let mut out = String::with_capacity(64 + g.node_count() * 20 + g.edge_count() * 40);
    out.push_str(HEADER);
    out.push_str("  <graph id=\"G\" edgedefault=\"undirected\">\n");
    for id in g.ids() {
        let _ = writeln!(out, "    <node id=\"{id}\"/>");
    }
    for e in g.edges() {
        let _ = writeln!(out, "    <edge source=\"{}\" target=\"{}\"/>", e.u, e.v);
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

pub fn write_graphml(g: &SocialGraph, path: impl AsRef<Path>) -> io::Result<()> {
    fs::write(path, export_graphml(g))
}

pub fn read_graphml(path: impl AsRef<Path>) -> Result<SocialGraph, GraphmlError> {
    import_graphml(&fs::read_to_string(path)?)
}

fn attr(e: &BytesStart<'_>, name: &'static str) -> Result<Option<String>, GraphmlError> {
    match e.try_get_attribute(name)? {
        Some(a) => Ok(Some(a.unescape_value()?.into_owned())),
        None => Ok(None),
    }
}

fn required(e: &BytesStart<'_>, element: &'static str, attribute: &'static str) -> Result<String, GraphmlError> {
    attr(e, attribute)?.ok_or(GraphmlError::MissingAttribute { element, attribute })
}

fn parse_id(s: &str) -> Result<NodeId, GraphmlError> {
    s.trim().parse().map_err(|_| GraphmlError::InvalidId(s.to_string()))
}

pub fn import_graphml(doc: &str) -> Result<SocialGraph, GraphmlError> {
    let mut reader = Reader::from_str(doc);
    reader.config_mut().trim_text(true);

    let mut seen_root = false;
    let mut graphs = 0usize;
    let mut nodes: HashSet<String> = HashSet::new();
    let mut node_ids = Vec::new();
    let mut edges: Vec<(String, String)> = Vec::new();

    loop {
        let ev = reader.read_event().map_err(GraphmlError::from)?;
        let (start, _is_empty) = match &ev {
            Event::Start(e) => (e, false),
            Event::Empty(e) => (e, true),
            Event::Eof => break,
            _ => continue,
        };
        match start.local_name().as_ref() {
            b"graphml" => seen_root = true,
            b"graph" => {
                graphs += 1;
                if graphs > 1 {
                    return Err(GraphmlError::Unsupported("more than one <graph> element".into()));
                }
                let dflt = attr(start, "edgedefault")?.unwrap_or_default();
                if dflt != "undirected" {
                    return Err(GraphmlError::Directed(dflt));
                }
            }
            b"node" => {
                let id = required(start, "node", "id")?;
                if !nodes.insert(id.clone()) {
                    return Err(GraphmlError::DuplicateNode(id));
                }
                node_ids.push(parse_id(&id)?);
            }
            b"edge" => {
                if let Some(d) = attr(start, "directed")? {
                    if d == "true" {
                        return Err(GraphmlError::Directed("edge directed=true".into()));
                    }
                }
                let s = required(start, "edge", "source")?;
                let t = required(start, "edge", "target")?;
                edges.push((s, t));
            }
            _ => {}
        }
    }
    if !seen_root {
        return Err(GraphmlError::Xml("missing <graphml> root element".into()));
    }

    let mut b = GraphBuilder::with_capacity(node_ids.len(), edges.len());
    for id in node_ids {
        b.add_node(id);
    }
    for (s, t) in edges {
        for end in [&s, &t] {
            if !nodes.contains(end.as_str()) {
                return Err(GraphmlError::UnknownNode(end.clone()));
            }
        }
        let (u, v) = (parse_id(&s)?, parse_id(&t)?);
        b.add_edge(u, v).map_err(|_| GraphmlError::SelfLoop(u))?;
    }
    Ok(b.build())
}

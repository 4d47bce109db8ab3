//! JSON graph documents: `{text, nodes[], edges[]}` with edges written as
//! `[source, target, "TYPE"]`, one node or edge per line.

use std::fmt::Write;

use serde::Deserialize;

use super::{tokenize, CharGraph, CharNode, Edge, EdgeTable, EdgeType};
use crate::error::GraphError;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNode {
    index: usize,
    symbol: String,
    symbol_id: usize,
    word_index: usize,
    position_in_word: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDoc {
    text: String,
    nodes: Vec<RawNode>,
    edges: Vec<(usize, usize, String)>,
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

pub fn serialize_graph(graph: &CharGraph) -> String {
    let mut out = String::from("{\n");
    writeln!(out, "  \"text\": {},", json_str(&graph.text)).unwrap();
    out.push_str("  \"nodes\": [\n");
    for (i, n) in graph.nodes.iter().enumerate() {
        let sep = if i + 1 < graph.nodes.len() { "," } else { "" };
        writeln!(
            out,
            "    {{\"index\": {}, \"symbol\": {}, \"symbol_id\": {}, \"word_index\": {}, \"position_in_word\": {}}}{sep}",
            n.index,
            json_str(&n.symbol.to_string()),
            n.symbol_id,
            n.word_index,
            n.position_in_word
        )
        .unwrap();
    }
    out.push_str("  ],\n  \"edges\": [\n");
    let rows = graph.edges.rows();
    for (i, e) in rows.iter().enumerate() {
        let sep = if i + 1 < rows.len() { "," } else { "" };
        writeln!(out, "    [{}, {}, \"{}\"]{sep}", e.source, e.target, e.kind.name()).unwrap();
    }
    out.push_str("  ]\n}\n");
    out
}

/// Line (1-based) of the first occurrence of `"key"`, or 1.
fn key_line(doc: &str, key: &str) -> usize {
    let needle = format!("\"{key}\"");
    doc.lines().position(|l| l.contains(&needle)).map_or(1, |i| i + 1)
}

fn malformed(doc: &str, key: &str, field: String, message: impl Into<String>) -> GraphError {
    GraphError::MalformedDocument {
        line: key_line(doc, key),
        field,
        message: message.into(),
    }
}

fn field_from_serde(msg: &str) -> String {
    msg.split('`')
        .nth(1)
        .map_or_else(|| "document".to_string(), str::to_string)
}

pub fn parse_graph(doc: &str) -> Result<CharGraph, GraphError> {
    let raw: RawDoc = serde_json::from_str(doc).map_err(|e| {
        let message = e.to_string();
        GraphError::MalformedDocument {
            line: e.line(),
            field: field_from_serde(&message),
            message,
        }
    })?;

    let chars: Vec<char> = raw.text.chars().collect();
    let mut expected = Vec::new();
    for (w, &(s, e)) in tokenize(&raw.text).iter().enumerate() {
        for (p, &c) in chars[s..e].iter().enumerate() {
            expected.push((c, w, p));
        }
    }
    if raw.nodes.len() != expected.len() {
        return Err(malformed(
            doc,
            "nodes",
            "nodes".into(),
            format!(
                "{} nodes for a text with {} non-whitespace characters",
                raw.nodes.len(),
                expected.len()
            ),
        ));
    }

    let mut nodes = Vec::with_capacity(raw.nodes.len());
    for (i, (n, &(c, w, p))) in raw.nodes.into_iter().zip(&expected).enumerate() {
        let mut it = n.symbol.chars();
        let symbol = match (it.next(), it.next()) {
            (Some(s), None) => s,
            _ => {
                return Err(malformed(
                    doc,
                    "nodes",
                    format!("nodes[{i}].symbol"),
                    "symbol must be exactly one character",
                ))
            }
        };
        let checks = [
            ("index", n.index == i),
            ("symbol", symbol == c),
            ("word_index", n.word_index == w),
            ("position_in_word", n.position_in_word == p),
        ];
        if let Some((field, _)) = checks.iter().find(|(_, ok)| !ok) {
            return Err(malformed(
                doc,
                "nodes",
                format!("nodes[{i}].{field}"),
                "does not match the text",
            ));
        }
        nodes.push(CharNode {
            index: n.index,
            symbol,
            symbol_id: n.symbol_id,
            word_index: n.word_index,
            position_in_word: n.position_in_word,
        });
    }

    let mut rows = Vec::with_capacity(raw.edges.len());
    for (i, (source, target, kind)) in raw.edges.into_iter().enumerate() {
        let kind = EdgeType::from_name(&kind).ok_or_else(|| {
            malformed(
                doc,
                "edges",
                format!("edges[{i}][2]"),
                format!("unknown edge type {kind:?}"),
            )
        })?;
        rows.push(Edge { source, target, kind });
    }
    let edges = EdgeTable::new(rows, nodes.len()).map_err(|m| malformed(doc, "edges", "edges".into(), m))?;

    Ok(CharGraph {
        text: raw.text,
        nodes,
        edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text2graph::{build_graph, Vocab};

    fn vocab() -> Vocab {
        Vocab::from_texts(["abcd"], true)
    }

    #[test]
    fn roundtrips() {
        for text in ["ab cd", "a", " a\"b\\ c "] {
            let g = build_graph(text, &vocab()).unwrap();
            assert_eq!(parse_graph(&serialize_graph(&g)).unwrap(), g);
        }
    }

    #[test]
    fn truncated_document_is_malformed() {
        let doc = serialize_graph(&build_graph("ab cd", &vocab()).unwrap());
        let cut = &doc[..doc.len() / 2];
        match parse_graph(cut) {
            Err(GraphError::MalformedDocument { line, .. }) => assert!(line >= 1),
            other => panic!("expected MalformedDocument, got {other:?}"),
        }
    }

    #[test]
    fn diagnostics_name_the_field() {
        let doc = serialize_graph(&build_graph("ab", &vocab()).unwrap());
        let bad = doc.replace("\"DIRECTED\"", "\"SIDEWAYS\"");
        match parse_graph(&bad) {
            Err(GraphError::MalformedDocument { field, line, .. }) => {
                assert_eq!(field, "edges[0][2]");
                assert_eq!(line, 7);
            }
            other => panic!("{other:?}"),
        }
        let missing = r#"{"text": "a", "nodes": []}"#;
        match parse_graph(missing) {
            Err(GraphError::MalformedDocument { field, .. }) => assert_eq!(field, "edges"),
            other => panic!("{other:?}"),
        }
        let no_mirror = doc.replace("[1, 0, \"REVERSE\"]", "[1, 0, \"DIRECTED\"]");
        assert!(parse_graph(&no_mirror).is_err());
    }
}

use std::fmt::Write;

use super::CharGraph;

fn escape(c: char) -> String {
    match c {
        '"' => "\\\"".to_string(),
        '\\' => "\\\\".to_string(),
        c => c.to_string(),
    }
}

/// Graphviz rendering. Nodes appear by index and edges in table order,
/// so the output is byte-stable for a given graph.
pub fn export_dot(graph: &CharGraph) -> String {
    let mut out = String::from("digraph chargraph {\n");
    for node in &graph.nodes {
        writeln!(
            out,
            "  n{} [label=\"{}\", word={}];",
            node.index,
            escape(node.symbol),
            node.word_index
        )
        .unwrap();
    }
    for e in graph.edges.rows() {
        writeln!(out, "  n{} -> n{} [type={}];", e.source, e.target, e.kind.lowercase()).unwrap();
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text2graph::{build_graph, Vocab};

    #[test]
    fn single_and_pair() {
        let v = Vocab::from_texts(["ahi\""], true);
        let a = export_dot(&build_graph("a", &v).unwrap());
        assert_eq!(a, "digraph chargraph {\n  n0 [label=\"a\", word=0];\n}\n");

        let hi = export_dot(&build_graph("hi", &v).unwrap());
        assert_eq!(hi.matches("->").count(), 2);
        assert!(hi.contains("n0 -> n1 [type=directed];"));
        assert!(hi.contains("n1 -> n0 [type=reverse];"));
        assert_eq!(hi, export_dot(&build_graph("hi", &v).unwrap()));

        let q = export_dot(&build_graph("\"", &v).unwrap());
        assert!(q.contains(r#"label="\"""#));
    }
}

//! Character-level text-to-graph construction.
//!
//! Every non-whitespace character becomes a node. Consecutive characters
//! of one word are joined by a `Directed` edge, the last character of a
//! word is joined to the first character of the next word by a
//! `Sequential` edge, and each of those gets a `Reverse` mirror. For a
//! text of `N` characters this yields exactly `2 (N - 1)` edges.
//!
//! Whitespace only delimits words. Punctuation is an ordinary character.
//! Text without whitespace is a single word.

mod document;
mod dot;
mod vocab;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use document::{parse_graph, serialize_graph};
pub use dot::export_dot;
pub use vocab::{Vocab, UNK_SYMBOL};

use crate::error::GraphError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EdgeType {
    Directed,
    Reverse,
    Sequential,
}

impl EdgeType {
    pub const ALL: [EdgeType; 3] = [EdgeType::Directed, EdgeType::Reverse, EdgeType::Sequential];

    pub fn name(self) -> &'static str {
        match self {
            EdgeType::Directed => "DIRECTED",
            EdgeType::Reverse => "REVERSE",
            EdgeType::Sequential => "SEQUENTIAL",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }

    /// Position of this type on the one-hot axis of the edge embedding.
    pub fn one_hot_index(self) -> usize {
        self as usize
    }

    pub fn lowercase(self) -> &'static str {
        match self {
            EdgeType::Directed => "directed",
            EdgeType::Reverse => "reverse",
            EdgeType::Sequential => "sequential",
        }
    }
}

impl fmt::Display for EdgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub kind: EdgeType,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharNode {
    pub index: usize,
    pub symbol: char,
    pub symbol_id: usize,
    pub word_index: usize,
    pub position_in_word: usize,
}

/// Typed edge rows, kept sorted by `(source, target, type)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EdgeTable {
    rows: Vec<Edge>,
}

impl EdgeTable {
    /// Sorts and validates `rows` against a graph of `n` nodes.
    pub fn new(mut rows: Vec<Edge>, n: usize) -> Result<Self, String> {
        rows.sort_unstable();
        for w in rows.windows(2) {
            if w[0] == w[1] {
                return Err(format!("duplicate edge {:?}", w[0]));
            }
        }
        let set: BTreeSet<(usize, usize, EdgeType)> = rows.iter().map(|e| (e.source, e.target, e.kind)).collect();
        for e in &rows {
            if e.source >= n || e.target >= n {
                return Err(format!("edge {}->{} out of range for {n} nodes", e.source, e.target));
            }
            if e.source == e.target {
                return Err(format!("self-edge on node {}", e.source));
            }
            if e.kind != EdgeType::Reverse && !set.contains(&(e.target, e.source, EdgeType::Reverse)) {
                return Err(format!(
                    "{} edge {}->{} has no REVERSE mirror",
                    e.kind, e.source, e.target
                ));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[Edge] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn count(&self, kind: EdgeType) -> usize {
        self.rows.iter().filter(|e| e.kind == kind).count()
    }

    /// `(source, target)` pairs of one type, in table order.
    pub fn pairs(&self, kind: EdgeType) -> Vec<(usize, usize)> {
        self.rows
            .iter()
            .filter(|e| e.kind == kind)
            .map(|e| (e.source, e.target))
            .collect()
    }

    /// The `(E, 2, 3)` edge embedding: per row, the source and target
    /// indices with a one-hot over the three edge types.
    pub fn to_index_rows(&self) -> Vec<(usize, usize, [u8; 3])> {
        self.rows
            .iter()
            .map(|e| {
                let mut hot = [0u8; 3];
                hot[e.kind.one_hot_index()] = 1;
                (e.source, e.target, hot)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharGraph {
    pub text: String,
    pub nodes: Vec<CharNode>,
    pub edges: EdgeTable,
}

/// Sparse boolean `N × N` matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Adjacency {
    pub n: usize,
    pub entries: BTreeSet<(usize, usize)>,
}

impl Adjacency {
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.entries.contains(&(row, col))
    }

    pub fn to_dense(&self) -> Vec<Vec<bool>> {
        let mut m = vec![vec![false; self.n]; self.n];
        for &(r, c) in &self.entries {
            m[r][c] = true;
        }
        m
    }
}

/// Maximal runs of non-whitespace characters as `[start, end)` spans,
/// counted in Unicode scalar values.
pub fn tokenize(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    let mut count = 0;
    for (i, c) in text.chars().enumerate() {
        count = i + 1;
        match (c.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, count));
    }
    spans
}

pub fn build_graph(text: &str, vocab: &Vocab) -> Result<CharGraph, GraphError> {
    let chars: Vec<char> = text.chars().collect();
    let spans = tokenize(text);
    if spans.is_empty() {
        return Err(GraphError::EmptyGraph);
    }
    let mut nodes = Vec::new();
    let mut rows = Vec::new();
    for (word_index, &(start, end)) in spans.iter().enumerate() {
        let first = nodes.len();
        if first > 0 {
            rows.push(Edge {
                source: first - 1,
                target: first,
                kind: EdgeType::Sequential,
            });
            rows.push(Edge {
                source: first,
                target: first - 1,
                kind: EdgeType::Reverse,
            });
        }
        for (pos, &symbol) in chars[start..end].iter().enumerate() {
            let index = nodes.len();
            nodes.push(CharNode {
                index,
                symbol,
                symbol_id: vocab.lookup(symbol)?,
                word_index,
                position_in_word: pos,
            });
            if pos > 0 {
                rows.push(Edge {
                    source: index - 1,
                    target: index,
                    kind: EdgeType::Directed,
                });
                rows.push(Edge {
                    source: index,
                    target: index - 1,
                    kind: EdgeType::Reverse,
                });
            }
        }
    }
    let n = nodes.len();
    let edges = EdgeTable::new(rows, n).expect("construction satisfies edge invariants");
    Ok(CharGraph {
        text: text.to_string(),
        nodes,
        edges,
    })
}

impl CharGraph {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn symbol_ids(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.symbol_id).collect()
    }

    pub fn num_words(&self) -> usize {
        self.nodes.last().map_or(0, |n| n.word_index + 1)
    }

    pub fn adjacency(&self, kind: EdgeType) -> Adjacency {
        Adjacency {
            n: self.num_nodes(),
            entries: self.edges.pairs(kind).into_iter().collect(),
        }
    }

    /// Undirected hop distances from `from` (`None` when unreachable).
    pub fn distances_from(&self, from: usize) -> Vec<Option<usize>> {
        let n = self.num_nodes();
        let mut nbrs = vec![Vec::new(); n];
        for e in self.edges.rows() {
            nbrs[e.source].push(e.target);
            nbrs[e.target].push(e.source);
        }
        let mut dist = vec![None; n];
        let mut queue = std::collections::VecDeque::from([from]);
        dist[from] = Some(0);
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap();
            for &v in &nbrs[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn is_weakly_connected(&self) -> bool {
        self.num_nodes() > 0 && self.distances_from(0).iter().all(Option::is_some)
    }

    /// Relabels nodes so that old node `i` becomes node `perm[i]`.
    ///
    /// The result is a valid graph structurally but no longer in text
    /// order; it exists to test that encoders are equivariant.
    pub fn permuted(&self, perm: &[usize]) -> CharGraph {
        let mut nodes = vec![None; self.nodes.len()];
        for node in &self.nodes {
            let mut moved = node.clone();
            moved.index = perm[node.index];
            nodes[perm[node.index]] = Some(moved);
        }
        let rows = self
            .edges
            .rows()
            .iter()
            .map(|e| Edge {
                source: perm[e.source],
                target: perm[e.target],
                kind: e.kind,
            })
            .collect();
        CharGraph {
            text: self.text.clone(),
            nodes: nodes.into_iter().map(Option::unwrap).collect(),
            edges: EdgeTable::new(rows, self.nodes.len()).expect("permutation keeps invariants"),
        }
    }
}

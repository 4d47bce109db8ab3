//! Oracles and generators shared by the integration tests and the
//! acceptance runner.
#![allow(dead_code)]

use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use graphtts::gnn::{EncoderKind, GraphEncoder};
use graphtts::text2graph::{build_graph, CharGraph, EdgeType, Vocab};
use graphtts::{ParamStore, Tape, Tensor};

pub const ALPHABET: &[char] = &[
    'a', 'b', 'c', 'd', 'e', 'f', 'g', 'h', 'i', 'j', 'k', 'l', 'm', 'n', 'o', 'p', 'q', 'r', 's', 't', 'é', 'ß', '中',
    '文', '!', '?', ',', '.', '\'', '-',
];

/// Every (source, target, type) triple found by testing all ordered node
/// pairs against the edge rules directly.
pub fn brute_force_edges(text: &str) -> BTreeSet<(usize, usize, EdgeType)> {
    let mut word_of = Vec::new();
    let mut word = 0usize;
    let mut in_word = false;
    for c in text.chars() {
        if c.is_whitespace() {
            if in_word {
                word += 1;
            }
            in_word = false;
        } else {
            word_of.push(word);
            in_word = true;
        }
    }
    let n = word_of.len();
    let first_of = |w: usize| word_of.iter().position(|&x| x == w);
    let last_of = |w: usize| word_of.iter().rposition(|&x| x == w);

    let forward = |i: usize, j: usize| -> Option<EdgeType> {
        if word_of[i] == word_of[j] && j == i + 1 {
            Some(EdgeType::Directed)
        } else if word_of[j] == word_of[i] + 1 && last_of(word_of[i]) == Some(i) && first_of(word_of[j]) == Some(j) {
            Some(EdgeType::Sequential)
        } else {
            None
        }
    };

    let mut out = BTreeSet::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            if let Some(kind) = forward(i, j) {
                out.insert((i, j, kind));
            }
            if forward(j, i).is_some() {
                out.insert((i, j, EdgeType::Reverse));
            }
        }
    }
    out
}

pub fn edge_set(graph: &CharGraph) -> BTreeSet<(usize, usize, EdgeType)> {
    graph
        .edges
        .rows()
        .iter()
        .map(|e| (e.source, e.target, e.kind))
        .collect()
}

/// Undirected hop counts by breadth-first search over the edge list.
pub fn hops_from(graph: &CharGraph, from: usize) -> Vec<Option<usize>> {
    let n = graph.num_nodes();
    let mut dist = vec![None; n];
    dist[from] = Some(0);
    let mut frontier = vec![from];
    let mut d = 0;
    while !frontier.is_empty() {
        d += 1;
        let mut next = Vec::new();
        for e in graph.edges.rows() {
            for (a, b) in [(e.source, e.target), (e.target, e.source)] {
                if frontier.contains(&a) && dist[b].is_none() {
                    dist[b] = Some(d);
                    next.push(b);
                }
            }
        }
        frontier = next;
    }
    dist
}

fn separator() -> impl Strategy<Value = String> {
    prop::sample::select(vec![" ", "  ", "\t", " \n ", "\u{3000}"]).prop_map(str::to_string)
}

fn word(max_len: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(ALPHABET), 1..=max_len).prop_map(|cs| cs.into_iter().collect())
}

/// Texts of `1..=max_words` words of `1..=max_len` symbols with assorted
/// whitespace, paired with the word lengths.
pub fn text_with(max_words: usize, max_len: usize) -> impl Strategy<Value = (String, Vec<usize>)> {
    (
        prop::collection::vec((word(max_len), separator()), 1..=max_words),
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(|(parts, lead, trail)| {
            let lengths = parts.iter().map(|(w, _)| w.chars().count()).collect();
            let mut s = String::new();
            if lead {
                s.push(' ');
            }
            for (i, (w, sep)) in parts.iter().enumerate() {
                if i > 0 {
                    s.push_str(sep);
                }
                s.push_str(w);
            }
            if trail {
                s.push('\t');
            }
            (s, lengths)
        })
}

/// Up to 8 words of up to 6 symbols.
pub fn text() -> impl Strategy<Value = (String, Vec<usize>)> {
    text_with(8, 6)
}

/// `count` texts drawn from a strategy under a fixed seed.
pub fn sample_texts(strategy: impl Strategy<Value = (String, Vec<usize>)>, count: usize, seed: u8) -> Vec<String> {
    let mut runner = TestRunner::new_with_rng(Config::default(), TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]));
    (0..count)
        .map(|_| strategy.new_tree(&mut runner).unwrap().current().0)
        .collect()
}

/// The test alphabet plus UNK.
pub fn vocab() -> Vocab {
    Vocab::new(ALPHABET.iter().copied(), true)
}

pub fn graph_of(text: &str) -> CharGraph {
    build_graph(text, &vocab()).unwrap()
}

/// Encoder of width `d` over the full test alphabet with seeded weights.
pub fn encoder(kind: EncoderKind, d: usize, iter: usize, seed: u64) -> (GraphEncoder, ParamStore) {
    let enc = GraphEncoder::new("enc", kind, vocab().len(), d, d, iter);
    let mut store = ParamStore::new();
    enc.init(&mut store, &mut ChaCha8Rng::seed_from_u64(seed));
    (enc, store)
}

fn run_propagate(enc: &GraphEncoder, store: &ParamStore, graph: &CharGraph, initial: &Tensor, iter: usize) -> Tensor {
    let mut tape = Tape::new();
    let h0 = tape.constant(initial.clone());
    let h = enc.propagate(&mut tape, store, graph, h0, iter).unwrap();
    tape.value(h).clone()
}

/// Per node, whether its propagated state changes at all when node
/// `source`'s initial state is perturbed.
pub fn changed_rows(kind: EncoderKind, graph: &CharGraph, source: usize, iter: usize, seed: u64) -> Vec<bool> {
    let (enc, store) = encoder(kind, 8, iter, seed);
    let mut tape = Tape::new();
    let initial = enc.embed_nodes(&mut tape, &store, graph).unwrap();
    let initial = tape.value(initial).clone();
    let mut bumped = initial.clone();
    for c in 0..bumped.cols() {
        let x = bumped.get(source, c);
        bumped.set(source, c, x + if c % 2 == 0 { 0.75 } else { -0.5 });
    }
    let a = run_propagate(&enc, &store, graph, &initial, iter);
    let b = run_propagate(&enc, &store, graph, &bumped, iter);
    (0..a.rows())
        .map(|v| a.row(v).iter().zip(b.row(v)).any(|(x, y)| x.to_bits() != y.to_bits()))
        .collect()
}

/// Rows of node `v` mismatching the expectation "changed iff hop
/// distance from `source` is at most `iter`".
pub fn locality_violations(kind: EncoderKind, graph: &CharGraph, source: usize, iter: usize, seed: u64) -> Vec<usize> {
    let dist = hops_from(graph, source);
    changed_rows(kind, graph, source, iter, seed)
        .into_iter()
        .enumerate()
        .filter(|&(v, changed)| changed != dist[v].is_some_and(|d| d <= iter))
        .map(|(v, _)| v)
        .collect()
}

/// Largest deviation between encoding a relabeled graph and relabeling
/// the encoding of the original.
pub fn equivariance_error(kind: EncoderKind, graph: &CharGraph, perm: &[usize], iter: usize, seed: u64) -> f64 {
    let (enc, store) = encoder(kind, 8, iter, seed);
    let encode = |g: &CharGraph| {
        let mut tape = Tape::new();
        let y = enc.encode(&mut tape, &store, g).unwrap();
        tape.value(y).clone()
    };
    let original = encode(graph);
    let moved = encode(&graph.permuted(perm));
    let mut worst = 0.0f64;
    for (v, &pv) in perm.iter().enumerate() {
        for (x, y) in original.row(v).iter().zip(moved.row(pv)) {
            worst = worst.max((x - y).abs());
        }
    }
    worst
}

pub fn random_permutation(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    perm
}

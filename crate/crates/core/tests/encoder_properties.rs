mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{
    changed_rows, encoder, equivariance_error, graph_of, hops_from, locality_violations, random_permutation,
    sample_texts, text, text_with,
};
use graphtts::gnn::EncoderKind;
use graphtts::harness::corpus::render_target;
use graphtts::model::{build_memory, spectrogram_loss, DecodeMode, Mode, ModelConfig, TtsModel};
use graphtts::text2graph::{build_graph, CharGraph, Vocab};
use graphtts::{ParamStore, Tape, Tensor};

const CHAINS: [&str; 3] = ["abcdefgh", "ab cd ef gh", "a b c d e f g h"];

fn encode(kind: EncoderKind, store: &ParamStore, graph: &CharGraph, iter: usize) -> Tensor {
    let (enc, _) = encoder(kind, 8, iter, 0);
    let mut tape = Tape::new();
    let y = enc.encode(&mut tape, store, graph).unwrap();
    tape.value(y).clone()
}

fn bits(t: &Tensor) -> Vec<u64> {
    t.data().iter().map(|x| x.to_bits()).collect()
}

#[test]
fn chain_perturbation_reaches_exactly_iter_hops() {
    for text in CHAINS {
        let graph = graph_of(text);
        assert_eq!(graph.num_nodes(), 8);
        for kind in EncoderKind::ALL {
            for iter in 1..=5 {
                let changed = changed_rows(kind, &graph, 0, iter, 3);
                let expected: Vec<bool> = (0..8).map(|v| v <= iter).collect();
                assert_eq!(changed, expected, "{kind} iter {iter} on {text:?}");
            }
        }
    }
}

#[test]
fn one_round_and_five_rounds_see_different_neighbourhoods() {
    let graph = graph_of(CHAINS[0]);
    let one = changed_rows(EncoderKind::GgnnGru, &graph, 0, 1, 0);
    let five = changed_rows(EncoderKind::GgnnGru, &graph, 0, 5, 0);
    assert_eq!(one.iter().filter(|&&c| c).count(), 2);
    assert_eq!(five.iter().filter(|&&c| c).count(), 6);
}

#[test]
fn hundred_relabelings_permute_outputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (i, text) in sample_texts(text(), 100, 9).iter().enumerate() {
        let graph = graph_of(text);
        let perm = random_permutation(graph.num_nodes(), &mut rng);
        for kind in EncoderKind::ALL {
            let err = equivariance_error(kind, &graph, &perm, 1 + i % 3, i as u64);
            assert!(err <= 1e-10, "{kind} on {text:?}: {err:e}");
        }
    }
}

#[test]
fn zero_rounds_are_the_identity() {
    let graph = graph_of("ab cd");
    for kind in EncoderKind::ALL {
        let (enc, store) = encoder(kind, 8, 1, 0);
        let mut tape = Tape::new();
        let h0 = enc.embed_nodes(&mut tape, &store, &graph).unwrap();
        let h = enc.propagate(&mut tape, &store, &graph, h0, 0).unwrap();
        assert_eq!(bits(tape.value(h)), bits(tape.value(h0)), "{kind}");
    }
}

fn sequential_weight_names(kind: EncoderKind, iter: usize) -> Vec<String> {
    match kind {
        EncoderKind::Gcn => (0..iter).map(|l| format!("enc.gcn.{l}.w_sequential")).collect(),
        _ => vec!["enc.msg.sequential.w".into(), "enc.msg.sequential.b".into()],
    }
}

#[test]
fn sequential_weights_only_touch_sequential_edges() {
    for kind in EncoderKind::ALL {
        let iter = 2;
        let (_, store) = encoder(kind, 8, iter, 1);
        let mut zeroed = store.clone();
        for name in sequential_weight_names(kind, iter) {
            zeroed.get_mut(&name).unwrap().data_mut().fill(0.0);
        }
        let word = graph_of("abcdé");
        assert_eq!(
            bits(&encode(kind, &store, &word, iter)),
            bits(&encode(kind, &zeroed, &word, iter)),
            "{kind}"
        );

        let words = graph_of("ab cdé");
        assert_ne!(
            bits(&encode(kind, &store, &words, iter)),
            bits(&encode(kind, &zeroed, &words, iter)),
            "{kind}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 96,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn perturbations_stay_within_iter_hops(
        (s, _) in text_with(4, 4),
        pick in any::<prop::sample::Index>(),
        iter in 1usize..=3,
        kind in prop::sample::select(EncoderKind::ALL.to_vec()),
        seed in 0u64..1000,
    ) {
        let graph = graph_of(&s);
        let source = pick.index(graph.num_nodes());
        let dist = hops_from(&graph, source);
        let changed = changed_rows(kind, &graph, source, iter, seed);
        for v in 0..graph.num_nodes() {
            if dist[v].is_none_or(|d| d > iter) {
                prop_assert!(!changed[v], "node {} beyond {} hops changed", v, iter);
            }
        }
        prop_assert!(changed[source]);
        prop_assert_eq!(locality_violations(kind, &graph, source, iter, seed), Vec::<usize>::new());
    }

    #[test]
    fn relabeling_commutes_with_encoding(
        (s, _) in text_with(5, 5),
        kind in prop::sample::select(EncoderKind::ALL.to_vec()),
        iter in 1usize..=3,
        seed in 0u64..1000,
    ) {
        let graph = graph_of(&s);
        let perm = random_permutation(graph.num_nodes(), &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(equivariance_error(kind, &graph, &perm, iter, seed) <= 1e-10);
    }

    #[test]
    fn outputs_are_finite_and_bounded(
        (s, _) in text_with(4, 6),
        kind in prop::sample::select(EncoderKind::ALL.to_vec()),
        iter in 0usize..=3,
        seed in 0u64..1000,
    ) {
        let graph = graph_of(&s);
        let (_, store) = encoder(kind, 8, iter, seed);
        let y = encode(kind, &store, &graph, iter);
        prop_assert_eq!(y.shape(), &[graph.num_nodes(), 8][..]);
        prop_assert!(y.data().iter().all(|x| x.is_finite() && x.abs() < 1.0));
    }
}

#[test]
fn silenced_graph_branch_routes_gradient_through_its_columns() {
    let text = "ab ca";
    let config = ModelConfig::toy().with_mode(Mode::Gae).with_iter(2);
    let vocab = Vocab::from_texts([text], true);
    let graph = build_graph(text, &vocab).unwrap();
    let target = render_target(text, config.n_mels).unwrap();
    let model = TtsModel::new(&config, vocab.len()).unwrap();
    let mut params = model.init_params();
    for name in ["gae.out.w", "gae.out.b"] {
        params.get_mut(name).unwrap().data_mut().fill(0.0);
    }

    let full = |params: &ParamStore| {
        let mut tape = Tape::new();
        let out = model.forward(&mut tape, params, &graph, &target).unwrap();
        let loss = tape.value(out.loss.total).item().unwrap();
        (loss, tape.backward(out.loss.total).unwrap())
    };
    let (loss, grads) = full(&params);

    let mut shuffled = params.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for x in shuffled.get_mut("gae.embed").unwrap().data_mut() {
        *x = rng.gen_range(-1.0..1.0);
    }
    assert_eq!(full(&shuffled).0.to_bits(), loss.to_bits());
    assert!(grads["gae.embed"].data().iter().all(|&g| g == 0.0));

    // Same loss with a free stand-in for the graph columns of the memory.
    let n = graph.num_nodes();
    let d = config.d_gae;
    let mut probed = params.clone();
    probed.insert("probe", Tensor::zeros(&[n, d]));
    let mut tape = Tape::new();
    let seq = model
        .seq_encoder
        .as_ref()
        .unwrap()
        .encode(&mut tape, &probed, &graph.symbol_ids())
        .unwrap();
    let probe = tape.param(&probed, "probe").unwrap();
    let memory = build_memory(&mut tape, Mode::Gae, Some(seq), probe).unwrap();
    let decoded = model
        .decoder
        .decode(&mut tape, &probed, memory, DecodeMode::TeacherForcing(&target))
        .unwrap();
    let parts = spectrogram_loss(&mut tape, decoded.mel, decoded.stop_logits, &target, config.reduction).unwrap();
    assert_eq!(tape.value(parts.total).item().unwrap().to_bits(), loss.to_bits());
    let probe_grads = tape.backward(parts.total).unwrap();
    let g = &probe_grads["probe"];
    assert!(g.data().iter().any(|&x| x != 0.0));

    for (name, grad) in &grads {
        if !name.starts_with("gae.") {
            assert_eq!(bits(grad), bits(&probe_grads[name]), "{name}");
        }
    }

    let mut tape = Tape::new();
    let h0 = model.graph_encoder.embed_nodes(&mut tape, &params, &graph).unwrap();
    let h = model
        .graph_encoder
        .propagate(&mut tape, &params, &graph, h0, config.iter)
        .unwrap();
    let h = tape.value(h);

    // tanh'(0) = 1, so the output layer passes the column gradient through.
    let gw = &grads["gae.out.w"];
    let gb = &grads["gae.out.b"];
    for o in 0..d {
        let col_sum: f64 = (0..n).map(|v| g.get(v, o)).sum();
        assert!((gb.data()[o] - col_sum).abs() <= 1e-12 * (1.0 + col_sum.abs()));
        for k in 0..d {
            let expected: f64 = (0..n).map(|v| g.get(v, o) * h.get(v, k)).sum();
            assert!(
                (gw.get(o, k) - expected).abs() <= 1e-12 * (1.0 + expected.abs()),
                "w[{o},{k}]"
            );
        }
    }
    assert!(gb.data().iter().any(|&x| x != 0.0));
}

//! Finite-difference sweep over every encoder kind and both model modes
//! at toy dimensions.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::corpus::render_target;
use crate::autodiff::{Tape, Var};
use crate::error::{ModelError, TensorError};
use crate::gnn::{EncoderKind, GraphEncoder};
use crate::gradcheck::{fd_check, FdReport, DEFAULT_EPS};
use crate::model::{Mode, ModelConfig, TtsModel};
use crate::params::ParamStore;
use crate::tensor::Tensor;
use crate::text2graph::{build_graph, Vocab};

/// Six characters in two words, so every edge type is present.
pub const PROBE_TEXT: &str = "abc cab";
pub const ENCODER_DIM: usize = 6;
pub const ENCODER_ITER: usize = 2;

#[derive(Clone, Debug)]
pub struct CheckCase {
    pub label: String,
    pub report: FdReport,
}

#[derive(Clone, Debug)]
pub struct GradcheckSummary {
    pub cases: Vec<CheckCase>,
    /// Error reported for a loss that ignores every parameter.
    pub constant_probe_error: f64,
}

impl GradcheckSummary {
    pub fn max_rel_error(&self) -> f64 {
        self.cases
            .iter()
            .map(|c| c.report.max_rel_error)
            .fold(self.constant_probe_error, f64::max)
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.max_rel_error() <= tol
    }

    pub fn entries_checked(&self) -> usize {
        self.cases.iter().map(|c| c.report.entries_checked).sum()
    }

    /// One line per (case, parameter) with its worst relative error.
    pub fn table(&self) -> String {
        let mut out = String::new();
        for case in &self.cases {
            for (name, err) in &case.report.per_param {
                let _ = writeln!(out, "{:<22} {:<28} {:.3e}", case.label, name, err);
            }
        }
        let _ = writeln!(
            out,
            "{:<22} {:<28} {:.3e}",
            "constant-loss", "-", self.constant_probe_error
        );
        out
    }
}

/// Half-width of the uniform draw for every parameter entry. Small-scale
/// training inits leave some gradients near 1e-9, below what a central
/// difference resolves to four digits.
pub const PARAM_SCALE: f64 = 1.0;

/// Replaces every entry with an independent Uniform(-scale, scale) draw.
pub fn randomize(store: &mut ParamStore, scale: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    store.for_each_mut(|_, value, _| {
        for x in value.data_mut() {
            *x = rng.gen_range(-scale..scale);
        }
    });
}

fn model_error(e: ModelError) -> TensorError {
    match e {
        ModelError::Tensor(t) => t,
        other => panic!("graph and targets are validated before the sweep: {other}"),
    }
}

/// Encoder-only check with loss `mean(y²)`.
pub fn check_encoder(kind: EncoderKind, seed: u64, scale: f64, eps: f64) -> Result<FdReport, ModelError> {
    let vocab = Vocab::from_texts([PROBE_TEXT], true);
    let graph = build_graph(PROBE_TEXT, &vocab)?;
    let enc = GraphEncoder::new("enc", kind, vocab.len(), ENCODER_DIM, ENCODER_DIM, ENCODER_ITER);
    let mut store = ParamStore::new();
    enc.init(&mut store, &mut ChaCha8Rng::seed_from_u64(seed));
    randomize(&mut store, scale, seed);
    let report = fd_check(
        |tape, ps| {
            let y = enc.encode(tape, ps, &graph).map_err(model_error)?;
            let sq = tape.mul(y, y)?;
            Ok(tape.mean(sq))
        },
        &store,
        eps,
    )?;
    Ok(report)
}

/// End-to-end teacher-forced loss check.
pub fn check_model(kind: EncoderKind, mode: Mode, seed: u64, scale: f64, eps: f64) -> Result<FdReport, ModelError> {
    let config = ModelConfig::toy().with_kind(kind).with_mode(mode).with_seed(seed);
    let vocab = Vocab::from_texts([PROBE_TEXT], true);
    let graph = build_graph(PROBE_TEXT, &vocab)?;
    let target = render_target(PROBE_TEXT, config.n_mels)?;
    let model = TtsModel::new(&config, vocab.len())?;
    let mut store = model.init_params();
    randomize(&mut store, scale, seed);
    let report = fd_check(
        |tape, ps| {
            let out = model.forward(tape, ps, &graph, &target).map_err(model_error)?;
            Ok(out.loss.total)
        },
        &store,
        eps,
    )?;
    Ok(report)
}

fn constant_probe(seed: u64) -> Result<f64, TensorError> {
    let mut store = ParamStore::new();
    store.init_uniform("w", &[3, 2], &mut ChaCha8Rng::seed_from_u64(seed));
    let report = fd_check(
        |tape: &mut Tape, _ps: &ParamStore| -> Result<Var, TensorError> {
            let c = tape.constant(Tensor::vector(vec![1.0, 2.0]));
            Ok(tape.sum(c))
        },
        &store,
        DEFAULT_EPS,
    )?;
    Ok(report.max_rel_error)
}

/// Runs the whole sweep at [`PARAM_SCALE`].
pub fn run_gradcheck(seed: u64) -> Result<GradcheckSummary, ModelError> {
    run_gradcheck_with(seed, PARAM_SCALE, DEFAULT_EPS)
}

pub fn run_gradcheck_with(seed: u64, scale: f64, eps: f64) -> Result<GradcheckSummary, ModelError> {
    let mut cases = Vec::new();
    for kind in EncoderKind::ALL {
        cases.push(CheckCase {
            label: format!("encoder/{kind}"),
            report: check_encoder(kind, seed, scale, eps)?,
        });
    }
    for mode in [Mode::GraphTts, Mode::Gae] {
        for kind in EncoderKind::ALL {
            cases.push(CheckCase {
                label: format!("{mode}/{kind}"),
                report: check_model(kind, mode, seed, scale, eps)?,
            });
        }
    }
    Ok(GradcheckSummary {
        cases,
        constant_probe_error: constant_probe(seed)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_loss_reports_zero() {
        assert_eq!(constant_probe(0).unwrap(), 0.0);
    }

    #[test]
    fn table_lists_every_parameter() {
        let report = check_encoder(EncoderKind::Gcn, 3, PARAM_SCALE, DEFAULT_EPS).unwrap();
        let summary = GradcheckSummary {
            cases: vec![CheckCase {
                label: "encoder/GCN".into(),
                report: report.clone(),
            }],
            constant_probe_error: 0.0,
        };
        assert_eq!(summary.table().lines().count(), report.per_param.len() + 1);
        assert!(summary.passed(1e-4), "{}", summary.table());
    }
}

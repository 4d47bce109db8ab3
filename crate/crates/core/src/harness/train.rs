//! Full-batch training with Adam.
//!
//! Every step evaluates all utterances against the same frozen
//! parameters (in parallel when enabled), sums their gradients in corpus
//! order and applies one Adam update. The ordered sum keeps loss
//! trajectories bit-identical across runs and thread counts.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use super::checkpoint::ModelCheckpoint;
use super::corpus::SyntheticCorpus;
use crate::autodiff::Tape;
use crate::error::{ModelError, TrainError};
use crate::model::{MelSpectrogram, ModelConfig, TtsModel};
use crate::parallel;
use crate::params::{Gradients, ParamStore};
use crate::tensor::Tensor;
use crate::text2graph::{build_graph, CharGraph, Vocab};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;
/// Training halts once the total loss drops below this.
pub const EARLY_STOP_LOSS: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    t: i32,
    m: BTreeMap<String, Tensor>,
    v: BTreeMap<String, Tensor>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            t: 0,
            m: BTreeMap::new(),
            v: BTreeMap::new(),
        }
    }

    /// Applies one bias-corrected update using the gradients stored in `params`.
    pub fn step(&mut self, params: &mut ParamStore) {
        self.t += 1;
        let c1 = 1.0 - BETA1.powi(self.t);
        let c2 = 1.0 - BETA2.powi(self.t);
        let (m_all, v_all, lr) = (&mut self.m, &mut self.v, self.lr);
        params.for_each_mut(|name, value, grad| {
            let m = m_all
                .entry(name.to_string())
                .or_insert_with(|| Tensor::zeros(value.shape()));
            let v = v_all
                .entry(name.to_string())
                .or_insert_with(|| Tensor::zeros(value.shape()));
            for (((x, &g), m), v) in value
                .data_mut()
                .iter_mut()
                .zip(grad.data())
                .zip(m.data_mut())
                .zip(v.data_mut())
            {
                *m = BETA1 * *m + (1.0 - BETA1) * g;
                *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                *x -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
            }
        });
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct BatchLoss {
    pub loss: f64,
    pub mel_l1: f64,
    pub stop_bce: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub loss: f64,
    pub mel_l1: f64,
    pub stop_bce: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    pub seed: u64,
    pub records: Vec<StepRecord>,
    pub checkpoint: Option<PathBuf>,
    pub stopped_early: bool,
}

impl TrainReport {
    pub fn losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.loss).collect()
    }

    pub fn final_l1(&self) -> Option<f64> {
        self.records.last().map(|r| r.mel_l1)
    }

    /// First step (1-based count of updates applied) whose pre-update mel
    /// L1 was below `threshold`.
    pub fn steps_to_l1(&self, threshold: f64) -> Option<usize> {
        self.records.iter().find(|r| r.mel_l1 < threshold).map(|r| r.step)
    }

    pub fn mean_seconds_per_step(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().map(|r| r.seconds).sum::<f64>() / self.records.len() as f64
    }

    /// One JSON object per step, then a closing summary object.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        let summary = serde_json::json!({
            "summary": true,
            "seed": self.seed,
            "steps": self.records.len(),
            "stopped_early": self.stopped_early,
            "checkpoint": self.checkpoint,
        });
        out.push_str(&summary.to_string());
        out.push('\n');
        out
    }
}

#[derive(Clone, Debug)]
pub struct TrainOptions {
    pub steps: usize,
    pub early_stop_loss: Option<f64>,
    /// Also stop once the mel L1 falls below this.
    pub target_l1: Option<f64>,
    pub checkpoint: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

impl TrainOptions {
    pub fn steps(steps: usize) -> Self {
        Self {
            steps,
            early_stop_loss: Some(EARLY_STOP_LOSS),
            target_l1: None,
            checkpoint: None,
            report: None,
        }
    }
}

/// Loss terms and parameter gradients of one utterance.
pub fn utterance_gradients(
    model: &TtsModel,
    params: &ParamStore,
    graph: &CharGraph,
    target: &MelSpectrogram,
) -> Result<(BatchLoss, Gradients), ModelError> {
    let mut tape = Tape::new();
    let out = model.forward(&mut tape, params, graph, target)?;
    let v = |x| tape.value(x).data()[0];
    let loss = BatchLoss {
        loss: v(out.loss.total),
        mel_l1: v(out.loss.mel_l1),
        stop_bce: v(out.loss.stop_bce),
    };
    let grads = tape.backward(out.loss.total)?;
    Ok((loss, grads))
}

pub struct Trainer {
    pub model: TtsModel,
    pub vocab: Vocab,
    pub params: ParamStore,
    graphs: Vec<CharGraph>,
    targets: Vec<MelSpectrogram>,
    adam: Adam,
    steps_done: usize,
}

impl Trainer {
    pub fn new(corpus: &SyntheticCorpus, config: &ModelConfig) -> Result<Self, TrainError> {
        if corpus.is_empty() {
            return Err(TrainError::EmptyCorpus);
        }
        if corpus.config.n_mels != config.n_mels {
            return Err(ModelError::InvalidConfig(format!(
                "corpus has {} mel bins but the model expects {}",
                corpus.config.n_mels, config.n_mels
            ))
            .into());
        }
        let vocab = Vocab::from_texts(corpus.texts(), config.unk_enabled);
        let model = TtsModel::new(config, vocab.len())?;
        let params = model.init_params();
        let graphs = corpus
            .utterances
            .iter()
            .map(|u| build_graph(&u.text, &vocab))
            .collect::<Result<Vec<_>, _>>()
            .map_err(ModelError::from)?;
        let targets = corpus.utterances.iter().map(|u| u.mel.clone()).collect();
        Ok(Self {
            adam: Adam::new(config.learning_rate),
            model,
            vocab,
            params,
            graphs,
            targets,
            steps_done: 0,
        })
    }

    /// Loss and averaged gradients over the whole corpus, reduced in
    /// corpus order.
    pub fn batch_gradients(&self) -> Result<(BatchLoss, Gradients), ModelError> {
        let jobs: Vec<usize> = (0..self.graphs.len()).collect();
        let results = parallel::map(&jobs, |&i| {
            utterance_gradients(&self.model, &self.params, &self.graphs[i], &self.targets[i])
        });
        let scale = 1.0 / jobs.len() as f64;
        let mut total = BatchLoss::default();
        let mut grads = Gradients::new();
        for r in results {
            let (loss, g) = r?;
            total.loss += loss.loss * scale;
            total.mel_l1 += loss.mel_l1 * scale;
            total.stop_bce += loss.stop_bce * scale;
            for (name, t) in g {
                match grads.get_mut(&name) {
                    Some(acc) => {
                        for (a, b) in acc.data_mut().iter_mut().zip(t.data()) {
                            *a += scale * b;
                        }
                    }
                    None => {
                        grads.insert(name, t.map(|x| x * scale));
                    }
                }
            }
        }
        Ok((total, grads))
    }

    /// Forward-only corpus loss under the current parameters.
    pub fn evaluate(&self) -> Result<BatchLoss, ModelError> {
        let jobs: Vec<usize> = (0..self.graphs.len()).collect();
        let results = parallel::map(&jobs, |&i| -> Result<BatchLoss, ModelError> {
            let mut tape = Tape::new();
            let out = self
                .model
                .forward(&mut tape, &self.params, &self.graphs[i], &self.targets[i])?;
            let v = |x| tape.value(x).data()[0];
            Ok(BatchLoss {
                loss: v(out.loss.total),
                mel_l1: v(out.loss.mel_l1),
                stop_bce: v(out.loss.stop_bce),
            })
        });
        let scale = 1.0 / jobs.len() as f64;
        let mut total = BatchLoss::default();
        for r in results {
            let l = r?;
            total.loss += l.loss * scale;
            total.mel_l1 += l.mel_l1 * scale;
            total.stop_bce += l.stop_bce * scale;
        }
        Ok(total)
    }

    /// One full-batch update. The record holds the loss before the update.
    pub fn step(&mut self) -> Result<StepRecord, TrainError> {
        let start = Instant::now();
        let (loss, grads) = self.batch_gradients()?;
        if !(loss.loss.is_finite() && loss.mel_l1.is_finite()) {
            return Err(TrainError::DivergenceDetected {
                step: self.steps_done + 1,
            });
        }
        self.params.zero_grads();
        self.params.accumulate(&grads, 1.0).map_err(ModelError::from)?;
        self.adam.step(&mut self.params);
        self.steps_done += 1;
        Ok(StepRecord {
            step: self.steps_done,
            loss: loss.loss,
            mel_l1: loss.mel_l1,
            stop_bce: loss.stop_bce,
            seconds: start.elapsed().as_secs_f64(),
        })
    }

    pub fn run(&mut self, opts: &TrainOptions) -> Result<TrainReport, TrainError> {
        let mut records = Vec::with_capacity(opts.steps);
        let mut stopped_early = false;
        for _ in 0..opts.steps {
            let rec = self.step()?;
            let done =
                opts.early_stop_loss.is_some_and(|t| rec.loss < t) || opts.target_l1.is_some_and(|t| rec.mel_l1 < t);
            records.push(rec);
            if done {
                stopped_early = true;
                break;
            }
        }
        if let Some(stem) = &opts.checkpoint {
            self.checkpoint().save(stem)?;
        }
        let report = TrainReport {
            seed: self.model.config.seed,
            records,
            checkpoint: opts.checkpoint.clone(),
            stopped_early,
        };
        if let Some(path) = &opts.report {
            fs::write(path, report.to_jsonl())?;
        }
        Ok(report)
    }

    pub fn checkpoint(&self) -> ModelCheckpoint {
        let mut params = self.params.clone();
        params.zero_grads();
        ModelCheckpoint {
            config: self.model.config.clone(),
            vocab: self.vocab.clone(),
            params,
        }
    }

    pub fn graphs(&self) -> &[CharGraph] {
        &self.graphs
    }
}

/// Trains a fresh model on `corpus` for up to `steps` updates.
pub fn train(
    corpus: &SyntheticCorpus,
    config: &ModelConfig,
    opts: &TrainOptions,
) -> Result<(TrainReport, ModelCheckpoint), TrainError> {
    let mut trainer = Trainer::new(corpus, config)?;
    let report = trainer.run(opts)?;
    Ok((report, trainer.checkpoint()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::corpus::{gen_corpus, CorpusConfig};

    fn small() -> (SyntheticCorpus, ModelConfig) {
        let cc = CorpusConfig {
            num_utterances: 3,
            n_mels: 4,
            ..CorpusConfig::default()
        };
        (gen_corpus(&cc, 1), ModelConfig::toy())
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut p = ParamStore::new();
        p.insert("w", Tensor::vector(vec![1.0, -1.0]));
        let mut g = Gradients::new();
        g.insert("w".into(), Tensor::vector(vec![0.5, -3.0]));
        p.accumulate(&g, 1.0).unwrap();
        let mut adam = Adam::new(0.1);
        adam.step(&mut p);
        let w = p.get("w").unwrap().data();
        assert!((w[0] - 0.9).abs() < 1e-6 && (w[1] + 0.9).abs() < 1e-6);
    }

    #[test]
    fn zero_steps_keeps_init() {
        let (corpus, cfg) = small();
        let (report, ckpt) = train(&corpus, &cfg, &TrainOptions::steps(0)).unwrap();
        assert!(report.records.is_empty());
        let fresh = Trainer::new(&corpus, &cfg).unwrap();
        assert_eq!(ckpt.params, fresh.params);
    }

    #[test]
    fn loss_decreases_and_is_reproducible() {
        let (corpus, cfg) = small();
        let opts = TrainOptions::steps(15);
        let (a, _) = train(&corpus, &cfg, &opts).unwrap();
        let (b, _) = train(&corpus, &cfg, &opts).unwrap();
        assert_eq!(a.losses(), b.losses());
        assert!(a.records.last().unwrap().loss < a.records[0].loss);
        assert_eq!(a.to_jsonl().lines().count(), 16);
    }

    #[test]
    fn rejects_mismatched_corpus() {
        let (corpus, mut cfg) = small();
        cfg.n_mels = 5;
        assert!(Trainer::new(&corpus, &cfg).is_err());
    }
}

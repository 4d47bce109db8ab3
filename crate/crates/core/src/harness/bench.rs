//! Per-`iter` training cost: seconds per step and steps to an L1 threshold.

use serde::Serialize;

use super::corpus::SyntheticCorpus;
use super::train::Trainer;
use crate::error::TrainError;
use crate::model::ModelConfig;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterBenchRow {
    pub iter: usize,
    /// Median wall time of one full-batch step.
    pub seconds_per_step: f64,
    pub steps_run: usize,
    pub steps_to_threshold: Option<usize>,
    pub final_l1: f64,
}

#[derive(Clone, Debug)]
pub struct IterBenchOptions {
    pub iters: Vec<usize>,
    pub l1_threshold: f64,
    pub max_steps: usize,
    /// Steps timed after the threshold is reached, so every row has
    /// at least this many samples.
    pub min_timed_steps: usize,
}

impl Default for IterBenchOptions {
    fn default() -> Self {
        Self {
            iters: (1..=5).collect(),
            l1_threshold: 0.05,
            max_steps: 2000,
            min_timed_steps: 40,
        }
    }
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Trains one fresh model per `iter` value on the same corpus and seed.
///
/// The trainers advance round-robin, one step each per round, so slow
/// drifts in machine speed affect every `iter` value alike.
pub fn bench_iter(
    corpus: &SyntheticCorpus,
    config: &ModelConfig,
    opts: &IterBenchOptions,
) -> Result<Vec<IterBenchRow>, TrainError> {
    struct Run {
        trainer: Trainer,
        times: Vec<f64>,
        reached: Option<usize>,
        last_l1: f64,
    }
    let mut runs = opts
        .iters
        .iter()
        .map(|&iter| {
            Ok(Run {
                trainer: Trainer::new(corpus, &config.clone().with_iter(iter))?,
                times: Vec::new(),
                reached: None,
                last_l1: f64::NAN,
            })
        })
        .collect::<Result<Vec<_>, TrainError>>()?;
    let done =
        |r: &Run| r.times.len() >= opts.max_steps || (r.reached.is_some() && r.times.len() >= opts.min_timed_steps);
    while !runs.iter().all(done) {
        for run in runs.iter_mut().filter(|r| !done(r)) {
            let rec = run.trainer.step()?;
            run.times.push(rec.seconds);
            run.last_l1 = rec.mel_l1;
            if run.reached.is_none() && rec.mel_l1 < opts.l1_threshold {
                run.reached = Some(rec.step);
            }
        }
    }
    Ok(runs
        .into_iter()
        .map(|r| IterBenchRow {
            iter: r.trainer.model.config.iter,
            steps_run: r.times.len(),
            seconds_per_step: median(r.times),
            steps_to_threshold: r.reached,
            final_l1: r.last_l1,
        })
        .collect())
}

pub fn format_rows(rows: &[IterBenchRow]) -> String {
    let mut out = String::from("iter  sec/step    steps-to-threshold  steps-run  final-L1\n");
    for r in rows {
        let reached = r.steps_to_threshold.map_or("-".to_string(), |s| s.to_string());
        out.push_str(&format!(
            "{:<5} {:<11.6} {:<19} {:<10} {:.5}\n",
            r.iter, r.seconds_per_step, reached, r.steps_run, r.final_l1
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::corpus::{gen_corpus, CorpusConfig};

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn one_row_per_iter() {
        let corpus = gen_corpus(
            &CorpusConfig {
                num_utterances: 2,
                n_mels: 4,
                ..CorpusConfig::default()
            },
            0,
        );
        let opts = IterBenchOptions {
            iters: vec![1, 2],
            l1_threshold: 0.0,
            max_steps: 3,
            min_timed_steps: 1,
        };
        let rows = bench_iter(&corpus, &ModelConfig::toy(), &opts).unwrap();
        assert_eq!(rows.iter().map(|r| r.iter).collect::<Vec<_>>(), vec![1, 2]);
        assert!(rows.iter().all(|r| r.steps_run == 3 && r.steps_to_threshold.is_none()));
        assert_eq!(format_rows(&rows).lines().count(), 3);
    }
}

//! Free-running synthesis from a saved checkpoint.

use std::path::{Path, PathBuf};

use super::checkpoint::ModelCheckpoint;
use crate::error::{ModelError, SynthError};
use crate::model::{ModelConfig, Synthesis};
use crate::text2graph::build_graph;

#[derive(Clone, Debug)]
pub struct SynthOutput {
    pub synthesis: Synthesis,
    pub csv: PathBuf,
    pub bin: PathBuf,
}

/// Synthesizes `text` with an already loaded checkpoint.
pub fn synthesize_text(ckpt: &ModelCheckpoint, text: &str) -> Result<Synthesis, ModelError> {
    let graph = build_graph(text, &ckpt.vocab)?;
    ckpt.model().synthesize(&ckpt.params, &graph)
}

/// Loads `checkpoint`, optionally checks it against `runtime`, synthesizes
/// `text` and writes `<out>.csv` and `<out>.bin`.
pub fn synth(
    checkpoint: &Path,
    text: &str,
    out: &Path,
    runtime: Option<&ModelConfig>,
) -> Result<SynthOutput, SynthError> {
    let ckpt = ModelCheckpoint::load(checkpoint)?;
    if let Some(cfg) = runtime {
        ckpt.check_config(cfg)?;
    }
    let synthesis = synthesize_text(&ckpt, text)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    synthesis.mel.save(out)?;
    Ok(SynthOutput {
        synthesis,
        csv: out.with_extension("csv"),
        bin: out.with_extension("bin"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::{CheckpointError, GraphError};
    use crate::harness::corpus::{gen_corpus, CorpusConfig};
    use crate::harness::train::Trainer;
    use crate::model::MelSpectrogram;

    fn saved(dir: &Path, unk: bool) -> (PathBuf, ModelConfig) {
        let corpus = gen_corpus(
            &CorpusConfig {
                num_utterances: 2,
                n_mels: 4,
                ..CorpusConfig::default()
            },
            0,
        );
        let mut cfg = ModelConfig::toy();
        cfg.unk_enabled = unk;
        let trainer = Trainer::new(&corpus, &cfg).unwrap();
        let stem = dir.join("ckpt");
        trainer.checkpoint().save(&stem).unwrap();
        (stem, cfg)
    }

    #[test]
    fn writes_outputs_and_handles_unknown_symbols() {
        let dir = tempfile::tempdir().unwrap();
        let (stem, cfg) = saved(dir.path(), true);
        let out = synth(&stem, "zz a", &dir.path().join("out"), Some(&cfg)).unwrap();
        let csv = MelSpectrogram::from_csv(&std::fs::read_to_string(&out.csv).unwrap()).unwrap();
        let bin = MelSpectrogram::read_binary(std::fs::File::open(&out.bin).unwrap()).unwrap();
        assert_eq!(bin, out.synthesis.mel);
        assert_eq!(csv.num_frames(), out.synthesis.mel.num_frames());
        assert!(out.synthesis.mel.num_frames() > 0);
    }

    #[test]
    fn unknown_symbol_without_unk_fails() {
        let dir = tempfile::tempdir().unwrap();
        let (stem, cfg) = saved(dir.path(), false);
        let err = synth(&stem, "\u{263A}", &dir.path().join("out"), Some(&cfg)).unwrap_err();
        assert!(matches!(
            err,
            SynthError::Model(ModelError::Graph(GraphError::UnknownSymbol('\u{263A}')))
        ));
    }

    #[test]
    fn config_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let (stem, cfg) = saved(dir.path(), true);
        let other = cfg.with_iter(3);
        let err = synth(&stem, "a", &dir.path().join("out"), Some(&other)).unwrap_err();
        match err {
            SynthError::Checkpoint(CheckpointError::ConfigMismatch(msg)) => assert!(msg.contains("iter"), "{msg}"),
            other => panic!("{other}"),
        }
    }
}

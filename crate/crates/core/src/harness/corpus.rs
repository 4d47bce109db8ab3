//! Deterministic synthetic text/spectrogram corpus.
//!
//! Each character owns a two-frame template with a single unit bump at
//! mel bin `stable_hash(c) mod n_mels`; every word boundary adds one
//! all-zero frame. A text with `N` characters in `W` words therefore has
//! `2N + W - 1` target frames.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::GraphError;
use crate::model::MelSpectrogram;
use crate::tensor::Tensor;
use crate::text2graph::tokenize;

pub const FRAMES_PER_CHAR: usize = 2;

/// 32-bit FNV-1a over the character's UTF-8 bytes.
pub fn stable_hash(c: char) -> u32 {
    let mut buf = [0u8; 4];
    c.encode_utf8(&mut buf)
        .bytes()
        .fold(0x811c_9dc5u32, |h, b| (h ^ u32::from(b)).wrapping_mul(0x0100_0193))
}

pub fn mel_bin(c: char, n_mels: usize) -> usize {
    stable_hash(c) as usize % n_mels
}

/// Target spectrogram for `text` under the template rule.
pub fn render_target(text: &str, n_mels: usize) -> Result<MelSpectrogram, GraphError> {
    let chars: Vec<char> = text.chars().collect();
    let spans = tokenize(text);
    if spans.is_empty() {
        return Err(GraphError::EmptyGraph);
    }
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (w, &(s, e)) in spans.iter().enumerate() {
        if w > 0 {
            rows.push(vec![0.0; n_mels]);
        }
        for &c in &chars[s..e] {
            let mut frame = vec![0.0; n_mels];
            frame[mel_bin(c, n_mels)] = 1.0;
            for _ in 0..FRAMES_PER_CHAR {
                rows.push(frame.clone());
            }
        }
    }
    Ok(MelSpectrogram::target(
        Tensor::from_rows(&rows).expect("rows share n_mels columns"),
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    pub num_utterances: usize,
    pub alphabet: String,
    pub min_words: usize,
    pub max_words: usize,
    pub min_word_len: usize,
    pub max_word_len: usize,
    pub n_mels: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            num_utterances: 20,
            alphabet: "abcdefgh".into(),
            min_words: 1,
            max_words: 3,
            min_word_len: 1,
            max_word_len: 3,
            n_mels: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Utterance {
    pub text: String,
    pub mel: MelSpectrogram,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCorpus {
    pub seed: u64,
    pub config: CorpusConfig,
    pub utterances: Vec<Utterance>,
    /// Mel bin of each alphabet character's template.
    pub templates: BTreeMap<char, usize>,
}

#[derive(Serialize, Deserialize)]
struct CorpusDoc {
    seed: u64,
    config: CorpusConfig,
    templates: BTreeMap<char, usize>,
    utterances: Vec<UtteranceDoc>,
}

#[derive(Serialize, Deserialize)]
struct UtteranceDoc {
    text: String,
    frames: Vec<Vec<f64>>,
}

/// Distinct random texts over `config.alphabet`, rendered to targets.
///
/// Panics if the alphabet is empty or the length bounds are inverted.
pub fn gen_corpus(config: &CorpusConfig, seed: u64) -> SyntheticCorpus {
    let alphabet: Vec<char> = config.alphabet.chars().filter(|c| !c.is_whitespace()).collect();
    assert!(!alphabet.is_empty(), "alphabet must be nonempty");
    assert!(config.min_words >= 1 && config.min_words <= config.max_words);
    assert!(config.min_word_len >= 1 && config.min_word_len <= config.max_word_len);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut utterances = Vec::with_capacity(config.num_utterances);
    let mut attempts = 0;
    while utterances.len() < config.num_utterances {
        let words = rng.gen_range(config.min_words..=config.max_words);
        let text = (0..words)
            .map(|_| {
                let len = rng.gen_range(config.min_word_len..=config.max_word_len);
                (0..len)
                    .map(|_| *alphabet.choose(&mut rng).unwrap())
                    .collect::<String>()
            })
            .collect::<Vec<_>>()
            .join(" ");
        attempts += 1;
        // Small alphabets can run out of distinct texts; accept repeats then.
        if !seen.insert(text.clone()) && attempts < 100 * config.num_utterances {
            continue;
        }
        let mel = render_target(&text, config.n_mels).expect("generated text is nonempty");
        utterances.push(Utterance { text, mel });
    }
    SyntheticCorpus {
        seed,
        config: config.clone(),
        utterances,
        templates: alphabet.iter().map(|&c| (c, mel_bin(c, config.n_mels))).collect(),
    }
}

impl SyntheticCorpus {
    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.utterances.iter().map(|u| u.text.as_str())
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn to_json(&self) -> String {
        let doc = CorpusDoc {
            seed: self.seed,
            config: self.config.clone(),
            templates: self.templates.clone(),
            utterances: self
                .utterances
                .iter()
                .map(|u| UtteranceDoc {
                    text: u.text.clone(),
                    frames: (0..u.mel.num_frames()).map(|i| u.mel.frames.row(i).to_vec()).collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("corpus serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        use serde::de::Error;
        let doc: CorpusDoc = serde_json::from_str(s)?;
        let utterances = doc
            .utterances
            .into_iter()
            .map(|u| {
                let frames = Tensor::from_rows(&u.frames).map_err(serde_json::Error::custom)?;
                Ok(Utterance {
                    text: u.text,
                    mel: MelSpectrogram::target(frames),
                })
            })
            .collect::<Result<_, serde_json::Error>>()?;
        Ok(Self {
            seed: doc.seed,
            config: doc.config,
            utterances,
            templates: doc.templates,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_values_frozen() {
        // FNV-1a of single bytes, computed independently.
        assert_eq!(stable_hash('a'), 0xe40c_292c);
        assert_eq!(stable_hash('b'), 0xe70c_2de5);
        assert_eq!(mel_bin('a', 8), 4);
        assert_eq!(mel_bin('b', 8), 5);
    }

    #[test]
    fn ab_renders_four_frames() {
        let m = render_target("ab", 8).unwrap();
        assert_eq!(m.num_frames(), 4);
        for (i, bin) in [(0, 4), (1, 4), (2, 5), (3, 5)] {
            let row = m.frames.row(i);
            assert_eq!(row[bin], 1.0);
            assert_eq!(row.iter().sum::<f64>(), 1.0);
        }
        assert_eq!(m.stop, vec![false, false, false, true]);
    }

    #[test]
    fn word_boundary_is_silent() {
        let m = render_target("a b", 8).unwrap();
        assert_eq!(m.num_frames(), 5);
        assert!(m.frames.row(2).iter().all(|&x| x == 0.0));
        assert!(matches!(render_target("   ", 8), Err(GraphError::EmptyGraph)));
    }

    #[test]
    fn corpus_is_seeded_and_serializable() {
        let cfg = CorpusConfig::default();
        let a = gen_corpus(&cfg, 5);
        let b = gen_corpus(&cfg, 5);
        assert_eq!(a.to_json(), b.to_json());
        assert_ne!(a.to_json(), gen_corpus(&cfg, 6).to_json());
        assert_eq!(a.len(), 20);
        let back = SyntheticCorpus::from_json(&a.to_json()).unwrap();
        assert_eq!(back, a);
    }
}

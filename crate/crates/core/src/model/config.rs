use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::gnn::EncoderKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Graph encoder output is the attention memory.
    #[serde(rename = "GRAPH_TTS")]
    GraphTts,
    /// Sequence encoder output concatenated with a narrower graph encoder.
    #[serde(rename = "GAE")]
    Gae,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::GraphTts => "GRAPH_TTS",
            Mode::Gae => "GAE",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "GRAPH_TTS" | "GRAPHTTS" => Ok(Mode::GraphTts),
            "GAE" => Ok(Mode::Gae),
            _ => Err(format!("unknown mode {s:?} (expected GRAPH_TTS or GAE)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub encoder_kind: EncoderKind,
    pub mode: Mode,
    pub d_model: usize,
    pub d_gae: usize,
    pub iter: usize,
    pub n_mels: usize,
    /// Frames emitted per decoder step.
    pub reduction: usize,
    pub prenet_dim: usize,
    pub decoder_dim: usize,
    pub attention_dim: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub unk_enabled: bool,
    /// Inference gives up after `max_steps_factor × N` decoder steps.
    pub max_steps_factor: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            encoder_kind: EncoderKind::GgnnGru,
            mode: Mode::GraphTts,
            d_model: 512,
            d_gae: 128,
            iter: 1,
            n_mels: 80,
            reduction: 2,
            prenet_dim: 256,
            decoder_dim: 1024,
            attention_dim: 128,
            learning_rate: 1e-3,
            seed: 0,
            unk_enabled: true,
            max_steps_factor: 10,
        }
    }
}

impl ModelConfig {
    /// Dimensions small enough to train on one CPU core in minutes.
    pub fn desk() -> Self {
        Self {
            d_model: 32,
            d_gae: 8,
            n_mels: 8,
            prenet_dim: 32,
            decoder_dim: 64,
            attention_dim: 32,
            learning_rate: 1e-2,
            ..Self::default()
        }
    }

    /// Dimensions for finite-difference checks (every width ≤ 8).
    pub fn toy() -> Self {
        Self {
            d_model: 8,
            d_gae: 4,
            n_mels: 4,
            prenet_dim: 6,
            decoder_dim: 8,
            attention_dim: 6,
            ..Self::default()
        }
    }

    pub fn with_kind(mut self, kind: EncoderKind) -> Self {
        self.encoder_kind = kind;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_iter(mut self, iter: usize) -> Self {
        self.iter = iter;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Width of the attention memory.
    pub fn memory_dim(&self) -> usize {
        match self.mode {
            Mode::GraphTts => self.d_model,
            Mode::Gae => self.d_model + self.d_gae,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        let dims = [
            self.d_model,
            self.n_mels,
            self.prenet_dim,
            self.decoder_dim,
            self.attention_dim,
        ];
        if dims.contains(&0) {
            return bad("all dimensions must be >= 1");
        }
        if self.reduction < 1 {
            return bad("reduction factor must be >= 1");
        }
        if self.mode == Mode::Gae {
            if self.d_gae == 0 || self.d_gae >= self.d_model {
                return bad("GAE mode needs 0 < d_gae < d_model");
            }
            if !self.d_model.is_multiple_of(2) {
                return bad("GAE mode needs an even d_model for the bidirectional encoder");
            }
        }
        if self.encoder_kind == EncoderKind::Gcn && self.iter == 0 {
            return bad("a GCN encoder needs at least one layer (iter >= 1)");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.max_steps_factor == 0 {
            return bad("max_steps_factor must be >= 1");
        }
        Ok(())
    }
}

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use graphtts::gradcheck::DEFAULT_EPS;
use graphtts::harness::bench::{bench_iter, format_rows, IterBenchOptions};
use graphtts::harness::corpus::{gen_corpus, CorpusConfig, SyntheticCorpus};
use graphtts::harness::gradcheck::{run_gradcheck_with, PARAM_SCALE};
use graphtts::harness::synth::synth;
use graphtts::harness::train::{train, TrainOptions, EARLY_STOP_LOSS};
use graphtts::model::ModelConfig;
use graphtts::text2graph::{build_graph, export_dot, serialize_graph, EdgeType, Vocab};

#[derive(Parser)]
#[command(name = "graphtts", version, about = "Character-graph text-to-spectrogram laboratory")]
struct Cli {
    /// JSON file holding every model config field.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed and seeds corpus generation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the character graph of a text.
    BuildGraph {
        text: String,
        #[arg(long)]
        dot: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Generate a synthetic corpus.
    GenCorpus {
        #[arg(long, default_value = "corpus.json")]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        utterances: usize,
    },
    /// Train on a corpus file, or on a freshly generated corpus.
    Train {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 5000)]
        steps: usize,
        /// Checkpoint stem; writes `<stem>.bin` and `<stem>.json`.
        #[arg(long, default_value = "checkpoint")]
        checkpoint: PathBuf,
        #[arg(long, default_value = "train_report.jsonl")]
        report: PathBuf,
        /// Also stop once the mel L1 drops below this.
        #[arg(long)]
        target_l1: Option<f64>,
        /// Run every step instead of stopping at a near-zero loss.
        #[arg(long)]
        no_early_stop: bool,
    },
    /// Synthesize a spectrogram from a checkpoint.
    Synth {
        #[arg(long, default_value = "checkpoint")]
        checkpoint: PathBuf,
        text: String,
        /// Output stem; writes `<stem>.csv` and `<stem>.bin`.
        #[arg(long, default_value = "synth")]
        out: PathBuf,
    },
    /// Finite-difference check of every encoder kind and both modes.
    Gradcheck {
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        #[arg(long, default_value_t = PARAM_SCALE)]
        scale: f64,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
    /// Seconds per step and steps to an L1 threshold for each iter value.
    BenchIter {
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 3, 4, 5])]
        iters: Vec<usize>,
        #[arg(long, default_value_t = 0.05)]
        threshold: f64,
        #[arg(long, default_value_t = 2000)]
        max_steps: usize,
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<ModelConfig> {
    let mut config = match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
        }
        None => ModelConfig::desk(),
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    config.validate()?;
    Ok(config)
}

fn load_or_generate(path: Option<&Path>, config: &ModelConfig) -> Result<SyntheticCorpus> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(SyntheticCorpus::from_json(&text).with_context(|| format!("parsing corpus {}", p.display()))?)
        }
        None => Ok(gen_corpus(
            &CorpusConfig {
                n_mels: config.n_mels,
                ..CorpusConfig::default()
            },
            config.seed,
        )),
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let config = load_config(cli.config.as_deref(), cli.seed)?;
    match cli.command {
        Command::BuildGraph {
            text,
            dot: dot_out,
            json,
        } => {
            let vocab = Vocab::from_texts([text.as_str()], config.unk_enabled);
            let graph = build_graph(&text, &vocab)?;
            println!("nodes {}", graph.num_nodes());
            for kind in EdgeType::ALL {
                println!("{:<10} {}", kind.name(), graph.edges.count(kind));
            }
            println!("edges {}", graph.edges.len());
            if let Some(p) = dot_out {
                fs::write(&p, export_dot(&graph))?;
            }
            if let Some(p) = json {
                fs::write(&p, serialize_graph(&graph))?;
            }
        }
        Command::GenCorpus { out, utterances } => {
            let cc = CorpusConfig {
                num_utterances: utterances,
                n_mels: config.n_mels,
                ..CorpusConfig::default()
            };
            let corpus = gen_corpus(&cc, cli.seed.unwrap_or(config.seed));
            fs::write(&out, corpus.to_json())?;
            println!("wrote {} utterances to {}", corpus.len(), out.display());
        }
        Command::Train {
            corpus,
            steps,
            checkpoint,
            report,
            target_l1,
            no_early_stop,
        } => {
            let corpus = load_or_generate(corpus.as_deref(), &config)?;
            let opts = TrainOptions {
                steps,
                early_stop_loss: (!no_early_stop).then_some(EARLY_STOP_LOSS),
                target_l1,
                checkpoint: Some(checkpoint.clone()),
                report: Some(report.clone()),
            };
            let (rep, _) = train(&corpus, &config, &opts)?;
            match rep.records.last() {
                Some(last) => println!(
                    "steps {} loss {:.6} mel_l1 {:.6} stop_bce {:.6}",
                    last.step, last.loss, last.mel_l1, last.stop_bce
                ),
                None => println!("steps 0"),
            }
            println!("checkpoint {}  report {}", checkpoint.display(), report.display());
        }
        Command::Synth { checkpoint, text, out } => {
            let runtime = cli.config.is_some().then_some(&config);
            let result = synth(&checkpoint, &text, &out, runtime)?;
            let s = &result.synthesis;
            println!("frames {}", s.mel.num_frames());
            match s.stop_step {
                Some(step) => println!("stop step {step}"),
                None => println!("stop step none (max steps reached)"),
            }
            println!("wrote {} and {}", result.csv.display(), result.bin.display());
        }
        Command::Gradcheck { eps, scale, tol } => {
            let summary = run_gradcheck_with(config.seed, scale, eps)?;
            print!("{}", summary.table());
            println!(
                "max relative error {:.3e} over {} entries",
                summary.max_rel_error(),
                summary.entries_checked()
            );
            if !summary.passed(tol) {
                bail!("gradient check exceeded {tol:e}");
            }
        }
        Command::BenchIter {
            iters,
            threshold,
            max_steps,
            corpus,
        } => {
            let corpus = load_or_generate(corpus.as_deref(), &config)?;
            let opts = IterBenchOptions {
                iters,
                l1_threshold: threshold,
                max_steps,
                ..IterBenchOptions::default()
            };
            print!("{}", format_rows(&bench_iter(&corpus, &config, &opts)?));
        }
    }
    Ok(())
}

mod commands;
mod config;
mod corpus;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::corpus::UsageError;

#[derive(Debug, Parser)]
#[command(name = "hwgnn", version, about = "Graph learning on Verilog designs", after_long_help = config::CONFIG_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Ast,
    Dfg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorpusSet {
    Ht,
    Ip,
}

/// Options shared by the pipeline commands.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// YAML configuration file (see --help for the schema).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Graph type to extract.
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Top module, instead of automatic detection.
    #[arg(long)]
    pub top: Option<String>,
    /// Seed for splits and weight initialization.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Tensor cache directory.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Corpus root holding one directory per design.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract graphs from design directories to JSON.
    Graph {
        /// Design directories, each holding the design's .v files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Write graph embeddings of designs to a TSV file.
    Embed {
        /// Trained checkpoint.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Design directories; defaults to every design in the corpus.
        designs: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Train a Trojan classifier on a labelled corpus.
    TrainHt {
        /// Hold out every design of this circuit as the test set.
        #[arg(long)]
        leave_out: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Classify designs with a trained Trojan model.
    InferHt {
        #[arg(long)]
        model: Option<PathBuf>,
        /// Design directories; defaults to every design in the corpus.
        designs: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Train a Siamese piracy detector on a categorized corpus.
    TrainIp {
        #[command(flatten)]
        common: Common,
    },
    /// Compare two designs with a trained piracy model.
    InferIp {
        #[arg(long)]
        model: Option<PathBuf>,
        /// Decision boundary, overriding the configuration.
        #[arg(long, allow_negative_numbers = true)]
        delta: Option<f64>,
        design_a: PathBuf,
        design_b: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Generate a synthetic corpus.
    GenCorpus {
        #[arg(long, value_enum)]
        set: CorpusSet,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        /// Clean designs (ht).
        #[arg(long, default_value_t = 30)]
        clean: usize,
        /// Trojan designs (ht).
        #[arg(long, default_value_t = 30)]
        trojan: usize,
        /// Base circuits (ip).
        #[arg(long, default_value_t = 8)]
        bases: usize,
        /// Variants per base circuit (ip).
        #[arg(long, default_value_t = 5)]
        variants: usize,
    },
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Graph { inputs, common } => commands::graph(&inputs, &common),
        Command::Embed { model, designs, common } => commands::embed(model, &designs, &common),
        Command::TrainHt { leave_out, common } => commands::train_ht(leave_out, &common),
        Command::InferHt { model, designs, common } => commands::infer_ht(model, &designs, &common),
        Command::TrainIp { common } => commands::train_ip(&common),
        Command::InferIp {
            model,
            delta,
            design_a,
            design_b,
            common,
        } => commands::infer_ip(model, delta, &design_a, &design_b, &common),
        Command::GenCorpus {
            set,
            out,
            seed,
            clean,
            trojan,
            bases,
            variants,
        } => commands::gen_corpus(set, &out, seed, (clean, trojan), (bases, variants)),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

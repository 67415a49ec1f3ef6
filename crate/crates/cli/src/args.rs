use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use copyguard::eval::{ExtractionSpec, QuoteTemplate, SystemPromptChoice};
use copyguard::lm::GenerationConfig;
use copyguard::pipeline::PairMode;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "copyguard",
    version,
    about = "Detect verbatim regurgitation, build paraphrase preference data, train it away and measure the result"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a suffix-array index over a corpus for n-gram overlap queries.
    IndexBuild(IndexBuildArgs),
    /// Fit a tabular model to a corpus so that it memorizes it.
    Pretrain(PretrainArgs),
    /// Find documents whose continuation the model reproduces from a prefix.
    Detect(DetectArgs),
    /// Paraphrase detected segments into a preference-pair dataset.
    BuildDataset(BuildDatasetArgs),
    /// Preference-optimize a tabular model on a pairs file.
    Train(TrainArgs),
    /// Prompt with the first N words of each snippet and score the next M.
    EvalExtraction(EvalExtractionArgs),
    /// Measure n-gram overlap of creative-writing outputs with an indexed corpus.
    EvalCreativity(EvalCreativityArgs),
    /// Ask for the opening of known texts by title and author.
    EvalQuote(EvalQuoteArgs),
    /// Per-snippet negative log-likelihood before and after training, as CSV.
    NllShift(NllShiftArgs),
    /// Run the synthetic end-to-end experiment.
    Toy(ToyArgs),
    /// Consolidate every report in a run directory into a summary.
    Report(ReportArgs),
    /// Rerun the command recorded in a report and compare its outputs.
    Replay(ReplayArgs),
}

/// Where results go. Not part of the recorded configuration, so a replay
/// into another directory reproduces the same bytes.
#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Report file stem, when several runs share a directory.
    #[arg(long)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RemoteArgs {
    /// Base URL of an OpenAI-compatible completions endpoint. The bearer
    /// token is read from COPYGUARD_API_KEY.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Model name sent to the endpoint.
    #[arg(long, default_value = "default")]
    pub remote_model: String,
    #[arg(long, default_value_t = 4)]
    pub max_in_flight: usize,
    /// Retries for rate limits, server errors and transport failures.
    #[arg(long, default_value_t = 3)]
    pub retries: u32,
    #[arg(long, default_value_t = 60)]
    pub timeout_secs: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Tabular model checkpoint.
    #[arg(long, conflicts_with = "endpoint", required_unless_present = "endpoint")]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub remote: RemoteArgs,
}

/// Sampling overrides; each command supplies its own defaults.
#[derive(Debug, Clone, Args, Serialize)]
pub struct GenArgs {
    /// 0 decodes greedily.
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub top_p: Option<f64>,
    #[arg(long)]
    pub max_tokens: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl GenArgs {
    pub fn resolve(&self, default: GenerationConfig) -> GenerationConfig {
        GenerationConfig {
            max_tokens: self.max_tokens.unwrap_or(default.max_tokens),
            temperature: self.temperature.unwrap_or(default.temperature),
            top_p: self.top_p.unwrap_or(default.top_p),
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Plain,
    Sys,
}

impl From<Mode> for PairMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Plain => PairMode::Plain,
            Mode::Sys => PairMode::SystemPrompt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptArg {
    CopyYes,
    CopyNo,
    None,
    Baseline,
}

impl From<PromptArg> for SystemPromptChoice {
    fn from(p: PromptArg) -> Self {
        match p {
            PromptArg::CopyYes => SystemPromptChoice::CopyYes,
            PromptArg::CopyNo => SystemPromptChoice::CopyNo,
            PromptArg::None => SystemPromptChoice::None,
            PromptArg::Baseline => SystemPromptChoice::Baseline,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// 64-word prefix, 32-word continuation.
    Web,
    /// 200-word prefix, 50-word continuation.
    Book,
}

impl From<Preset> for ExtractionSpec {
    fn from(p: Preset) -> Self {
        match p {
            Preset::Web => ExtractionSpec::WEB,
            Preset::Book => ExtractionSpec::BOOK,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Story,
    Poem,
    Speech,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Template {
    FirstWords,
    Poem,
}

impl From<Template> for QuoteTemplate {
    fn from(t: Template) -> Self {
        match t {
            Template::FirstWords => QuoteTemplate::FirstWords,
            Template::Poem => QuoteTemplate::Poem,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IndexBuildArgs {
    /// Corpus files: plain text with one document per line, or JSONL with a
    /// `text` field. Repeatable.
    #[arg(long, required = true)]
    pub corpus: Vec<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PretrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Extra texts whose words join the vocabulary without being trained on,
    /// such as paraphrases. Repeatable.
    #[arg(long)]
    pub vocab_extra: Vec<PathBuf>,
    /// Context length of the tabular model.
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    #[arg(long, default_value_t = 4)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lr: f64,
    /// Standard deviation of the initial logits.
    #[arg(long, default_value_t = 0.5)]
    pub init_scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DetectArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 64)]
    pub prefix_len: usize,
    #[arg(long, default_value_t = 32)]
    pub cont_len: usize,
    #[arg(long, default_value_t = 16000)]
    pub top_k: usize,
    /// Keep only segments whose ROUGE-L f exceeds this value.
    #[arg(long, default_value_t = 0.5, conflicts_with = "no_min_rouge")]
    pub min_rouge: f64,
    /// Rank by ROUGE-L without a floor.
    #[arg(long)]
    pub no_min_rouge: bool,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BuildDatasetArgs {
    /// Segments JSONL written by `detect`.
    #[arg(long)]
    pub segments: PathBuf,
    /// Precomputed paraphrases, one per line in segment order.
    #[arg(long, conflicts_with_all = ["endpoint", "synonyms"])]
    pub paraphrases: Option<PathBuf>,
    /// JSON object mapping words to replacements for the offline paraphraser.
    #[arg(long, conflicts_with = "endpoint")]
    pub synonyms: Option<PathBuf>,
    #[command(flatten)]
    pub remote: RemoteArgs,
    #[arg(long, value_enum, default_value_t = Mode::Plain)]
    pub mode: Mode,
    /// Share of paraphrase pairs in the final dataset; the rest is generic
    /// preference data.
    #[arg(long, default_value_t = 1.0)]
    pub mix_fraction: f64,
    /// Generic preference pairs, JSONL with `chosen` and `rejected`.
    #[arg(long)]
    pub generic: Option<PathBuf>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub top_p: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    /// Pairs JSONL written by `build-dataset`.
    #[arg(long)]
    pub pairs: PathBuf,
    /// Starting checkpoint; it also serves as the frozen reference.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    pub beta: f64,
    #[arg(long, default_value_t = 2)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lr: f64,
    #[arg(long, default_value_t = 1)]
    pub batch_size: usize,
    /// Seeds the per-epoch shuffle.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalExtractionArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Snippets, one per line or JSONL with a `text` field.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = Preset::Web)]
    pub preset: Preset,
    #[arg(long)]
    pub prefix_len: Option<usize>,
    #[arg(long)]
    pub cont_len: Option<usize>,
    #[arg(long, value_enum, default_value_t = PromptArg::None)]
    pub system_prompt: PromptArg,
    #[command(flatten)]
    pub generation: GenArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalCreativityArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Index written by `index-build`; it must carry its word table.
    #[arg(long)]
    pub index: PathBuf,
    /// Bundled prompt set, used unless --prompts is given.
    #[arg(long, value_enum, default_value_t = Task::Story)]
    pub task: Task,
    /// Custom prompts, one per line.
    #[arg(long)]
    pub prompts: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PromptArg::None)]
    pub system_prompt: PromptArg,
    #[command(flatten)]
    pub generation: GenArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalQuoteArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// JSONL with `title`, `author` and `text`.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = Template::FirstWords)]
    pub template: Template,
    #[arg(long, value_enum, default_value_t = PromptArg::None)]
    pub system_prompt: PromptArg,
    #[command(flatten)]
    pub generation: GenArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct NllShiftArgs {
    #[arg(long)]
    pub before: PathBuf,
    #[arg(long)]
    pub after: PathBuf,
    /// Snippets the model was trained away from.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Comparison snippets the model never saw.
    #[arg(long)]
    pub held_out: Option<PathBuf>,
    /// Score only the first N words of each snippet.
    #[arg(long)]
    pub window: Option<usize>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ToyArgs {
    /// Full experiment configuration as JSON; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub mix_fraction: Option<f64>,
    /// Run several paraphrase fractions from one pretrained model and write
    /// a trade-off table.
    #[arg(long, value_delimiter = ',', conflicts_with = "mix_fraction")]
    pub sweep: Vec<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub prefix_len: Option<usize>,
    #[arg(long)]
    pub cont_len: Option<usize>,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Run directory to consolidate; the summary is written there.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// A report JSON written by any command.
    #[arg(long)]
    pub report: PathBuf,
    /// Keep the regenerated outputs here instead of a temporary directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

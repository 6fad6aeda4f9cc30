//! The `chaincrf` command line.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::corpus::{
    agreement, parse_raw, read_file, read_tagged, serialize_tagged, split_corpus, tag_frequencies,
    TagSet, TaggedCorpus, UnknownTagPolicy,
};
use crate::crf::{train, ModelParameters, TrainConfig};
use crate::datagen::{generate, render_with_header, SynthConfig};
use crate::eval::{confusion, report, top_transitions};
use crate::features::{extract_token_features, FeatureConfig};
use crate::optim::OptimConfig;
use crate::phonotactics::{classify, to_skeleton, PhonemeInventory};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
}

type CliResult = Result<(), CliError>;

fn data<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Data(e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "chaincrf", version, about = "Linear-chain CRF part-of-speech tagging toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model on an annotated corpus.
    Train(TrainArgs),
    /// Tag raw text, one sentence per line.
    Tag(TagArgs),
    /// Evaluate a model against an annotated corpus.
    Eval(EvalArgs),
    /// Tag frequency table of an annotated corpus.
    Stats(StatsArgs),
    /// Shuffle and split an annotated corpus by sentence.
    Split(SplitArgs),
    /// Disagreement between two annotations of the same text.
    Agreement(AgreementArgs),
    /// Most and least likely tag transitions of a model.
    Transitions(TransitionsArgs),
    /// Print the feature map of every token.
    Features(FeaturesArgs),
    /// Syllable-structure analysis of dot-separated phoneme strings.
    Syllables(SyllablesArgs),
    /// Generate a synthetic annotated corpus.
    Gen(GenArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Args, Debug)]
struct TagsetArg {
    /// Tagset file, one tag per line. Defaults to the built-in 15 tags.
    #[arg(long)]
    tagset: Option<PathBuf>,
}

impl TagsetArg {
    fn load(&self) -> Result<TagSet, CliError> {
        match &self.tagset {
            Some(path) => TagSet::from_file(path).map_err(data),
            None => Ok(TagSet::default()),
        }
    }

    /// The model's tagset, checked against `--tagset` when one was given.
    fn check_model(&self, model: &ModelParameters) -> Result<TagSet, CliError> {
        if self.tagset.is_some() {
            let given = self.load()?;
            if &given != model.tagset() {
                return Err(CliError::Data(format!(
                    "tagset mismatch: model has [{}], --tagset has [{}]",
                    model.tagset().names().join(" "),
                    given.names().join(" ")
                )));
            }
        }
        Ok(model.tagset().clone())
    }
}

#[derive(Args, Debug)]
struct OutputArg {
    /// Write to this file instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

impl OutputArg {
    fn emit(&self, text: &str) -> CliResult {
        write_or_print(self.output.as_deref(), text)
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(data)
        }
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Annotated training corpus.
    #[arg(long, short)]
    input: PathBuf,
    /// Where to write the model.
    #[arg(long, short)]
    model: PathBuf,
    #[command(flatten)]
    tagset: TagsetArg,
    /// L1 regularization weight.
    #[arg(long, default_value_t = 0.1)]
    c1: f64,
    /// L2 regularization weight.
    #[arg(long, default_value_t = 0.1)]
    c2: f64,
    #[arg(long = "max-iter", default_value_t = 100)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-5)]
    tolerance: f64,
    #[arg(long = "prefix-max", default_value_t = 3)]
    prefix_max: usize,
    #[arg(long = "suffix-max", default_value_t = 4)]
    suffix_max: usize,
    /// Map tags outside the tagset to UNK instead of failing.
    #[arg(long)]
    map_unknown: bool,
    /// Suppress the per-iteration log.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args, Debug)]
struct TagArgs {
    #[arg(long, short)]
    model: PathBuf,
    /// Raw text, one whitespace-tokenized sentence per line.
    #[arg(long, short)]
    input: PathBuf,
    #[command(flatten)]
    tagset: TagsetArg,
    #[command(flatten)]
    output: OutputArg,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long, short)]
    model: PathBuf,
    /// Annotated gold corpus.
    #[arg(long, short)]
    input: PathBuf,
    #[command(flatten)]
    tagset: TagsetArg,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    /// Also write the confusion matrix as CSV.
    #[arg(long)]
    confusion: Option<PathBuf>,
    /// Also write the predicted corpus.
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArg,
}

#[derive(Args, Debug)]
struct StatsArgs {
    #[arg(long, short)]
    input: PathBuf,
    #[command(flatten)]
    tagset: TagsetArg,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    #[command(flatten)]
    output: OutputArg,
}

#[derive(Args, Debug)]
struct SplitArgs {
    #[arg(long, short)]
    input: PathBuf,
    /// Fraction of sentences for the training side, in (0, 1].
    #[arg(long, default_value_t = 0.7)]
    fraction: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long = "train-output")]
    train_output: PathBuf,
    #[arg(long = "test-output")]
    test_output: PathBuf,
    #[command(flatten)]
    tagset: TagsetArg,
}

#[derive(Args, Debug)]
struct AgreementArgs {
    /// Reference annotation.
    reference: PathBuf,
    /// Second annotation of the same text.
    other: PathBuf,
    /// Tag whose disagreements are also reported separately.
    #[arg(long = "exclude-tag", default_value = "FW")]
    exclude_tag: String,
    #[command(flatten)]
    tagset: TagsetArg,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    #[command(flatten)]
    output: OutputArg,
}

#[derive(Args, Debug)]
struct TransitionsArgs {
    #[arg(long, short)]
    model: PathBuf,
    #[arg(long = "top-n", default_value_t = 10)]
    top_n: usize,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    #[command(flatten)]
    output: OutputArg,
}

#[derive(Args, Debug)]
struct FeaturesArgs {
    /// Words of one sentence. Ignored when --input is given.
    words: Vec<String>,
    /// Raw text file, one sentence per line.
    #[arg(long, short)]
    input: Option<PathBuf>,
    #[arg(long = "prefix-max", default_value_t = 3)]
    prefix_max: usize,
    #[arg(long = "suffix-max", default_value_t = 4)]
    suffix_max: usize,
    #[command(flatten)]
    output: OutputArg,
}

#[derive(Args, Debug)]
struct SyllablesArgs {
    /// Phoneme strings such as `g.o.r` (ASCII aliases: ph th ch kh ng sh @).
    #[arg(required = true)]
    words: Vec<String>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    #[command(flatten)]
    output: OutputArg,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    sentences: usize,
    #[arg(long = "min-len", default_value_t = 5)]
    min_len: usize,
    #[arg(long = "max-len", default_value_t = 20)]
    max_len: usize,
    #[command(flatten)]
    output: OutputArg,
}

/// Runs the command line and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Tag(a) => cmd_tag(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Split(a) => cmd_split(a),
        Command::Agreement(a) => cmd_agreement(a),
        Command::Transitions(a) => cmd_transitions(a),
        Command::Features(a) => cmd_features(a),
        Command::Syllables(a) => cmd_syllables(a),
        Command::Gen(a) => cmd_gen(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            EXIT_DATA
        }
    }
}

fn load_gold(path: &Path, tagset: &TagSet, policy: UnknownTagPolicy) -> Result<TaggedCorpus, CliError> {
    read_tagged(path, tagset, policy).map_err(data)
}

fn load_model(path: &Path) -> Result<ModelParameters, CliError> {
    ModelParameters::load(path).map_err(data)
}

fn feature_config(prefix_max: usize, suffix_max: usize) -> Result<FeatureConfig, CliError> {
    FeatureConfig::new(prefix_max, suffix_max).map_err(|e| CliError::Usage(e.to_string()))
}

fn cmd_train(a: TrainArgs) -> CliResult {
    let tagset = a.tagset.load()?;
    let policy = if a.map_unknown {
        UnknownTagPolicy::MapToUnk
    } else {
        UnknownTagPolicy::Reject
    };
    let optim = OptimConfig {
        max_iterations: a.max_iter,
        c1: a.c1,
        c2: a.c2,
        gradient_tolerance: a.tolerance,
        ..OptimConfig::default()
    };
    optim.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let config = TrainConfig {
        features: feature_config(a.prefix_max, a.suffix_max)?,
        optim,
    };
    let corpus = load_gold(&a.input, &tagset, policy)?;
    eprintln!(
        "training on {} sentences, {} tokens (c1={}, c2={}, max-iter={})",
        corpus.len(),
        corpus.token_count(),
        a.c1,
        a.c2,
        a.max_iter
    );
    let quiet = a.quiet;
    let outcome = train(&corpus, &tagset, &config, |rec| {
        if !quiet {
            eprintln!("{rec}");
        }
    })
    .map_err(data)?;
    eprintln!(
        "stopped after {} iterations ({:?}); {} attributes, {} nonzero state weights",
        outcome.model.training.iterations,
        outcome.stop,
        outcome.model.num_attributes(),
        outcome.model.weights.nonzero_state_weights()
    );
    outcome.model.save(&a.model).map_err(data)
}

fn cmd_tag(a: TagArgs) -> CliResult {
    let model = load_model(&a.model)?;
    let tagset = a.tagset.check_model(&model)?;
    let raw = parse_raw(&read_file(&a.input).map_err(data)?);
    let sentences = raw
        .iter()
        .map(|words| model.tag(words).map_err(data))
        .collect::<Result<Vec<_>, _>>()?;
    a.output
        .emit(&serialize_tagged(&TaggedCorpus::new(sentences), &tagset))
}

fn cmd_eval(a: EvalArgs) -> CliResult {
    let model = load_model(&a.model)?;
    let tagset = a.tagset.check_model(&model)?;
    let gold = load_gold(&a.input, &tagset, UnknownTagPolicy::Reject)?;
    let predicted = TaggedCorpus::new(
        gold.sentences()
            .iter()
            .map(|s| model.tag(&s.words()).map_err(data))
            .collect::<Result<_, _>>()?,
    );
    let cm = confusion(&gold, &predicted, tagset.len()).map_err(data)?;
    let rep = report(&cm, &tagset).map_err(data)?;
    for w in &rep.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(path) = &a.confusion {
        write_or_print(Some(path), &cm.to_csv(&tagset))?;
    }
    if let Some(path) = &a.predictions {
        write_or_print(Some(path), &serialize_tagged(&predicted, &tagset))?;
    }
    a.output.emit(&match a.format {
        Format::Text => rep.to_text(),
        Format::Json => rep.to_json() + "\n",
    })
}

#[derive(Serialize)]
struct StatsRow<'a> {
    tag: &'a str,
    frequency: usize,
}

fn cmd_stats(a: StatsArgs) -> CliResult {
    let tagset = a.tagset.load()?;
    let corpus = load_gold(&a.input, &tagset, UnknownTagPolicy::Reject)?;
    let freq = tag_frequencies(&corpus, &tagset);
    let text = match a.format {
        Format::Json => {
            let rows: Vec<StatsRow> = tagset
                .names()
                .iter()
                .zip(&freq)
                .map(|(tag, &frequency)| StatsRow { tag, frequency })
                .collect();
            serde_json::to_string_pretty(&serde_json::json!({
                "sentences": corpus.len(),
                "tokens": corpus.token_count(),
                "frequencies": rows,
            }))
            .map_err(data)?
                + "\n"
        }
        Format::Text => {
            let mut out = format!("{:>7}  {:<6} {:>9}\n", "Sl. no.", "tag", "frequency");
            for (i, (tag, n)) in tagset.names().iter().zip(&freq).enumerate() {
                let _ = writeln!(out, "{:>7}  {:<6} {:>9}", i + 1, tag, n);
            }
            let _ = writeln!(out, "{:>7}  {:<6} {:>9}", "", "total", corpus.token_count());
            let _ = writeln!(out, "sentences: {}", corpus.len());
            out
        }
    };
    a.output.emit(&text)
}

fn cmd_split(a: SplitArgs) -> CliResult {
    if !(a.fraction > 0.0 && a.fraction <= 1.0) {
        return Err(CliError::Usage(format!(
            "--fraction must lie in (0, 1], got {}",
            a.fraction
        )));
    }
    let tagset = a.tagset.load()?;
    let corpus = load_gold(&a.input, &tagset, UnknownTagPolicy::Reject)?;
    let (train, test) = split_corpus(&corpus, a.fraction, a.seed).map_err(data)?;
    write_or_print(Some(&a.train_output), &serialize_tagged(&train, &tagset))?;
    write_or_print(Some(&a.test_output), &serialize_tagged(&test, &tagset))?;
    eprintln!(
        "train: {} sentences ({} tokens), test: {} sentences ({} tokens)",
        train.len(),
        train.token_count(),
        test.len(),
        test.token_count()
    );
    Ok(())
}

fn cmd_agreement(a: AgreementArgs) -> CliResult {
    let tagset = a.tagset.load()?;
    let excluded = tagset
        .require(&a.exclude_tag)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let reference = load_gold(&a.reference, &tagset, UnknownTagPolicy::Reject)?;
    let other = load_gold(&a.other, &tagset, UnknownTagPolicy::Reject)?;
    let rep = agreement(&reference, &other, excluded).map_err(data)?;
    a.output.emit(&match a.format {
        Format::Text => format!("{rep}\n"),
        Format::Json => serde_json::to_string_pretty(&rep).map_err(data)? + "\n",
    })
}

fn cmd_transitions(a: TransitionsArgs) -> CliResult {
    if a.top_n == 0 {
        return Err(CliError::Usage("--top-n must be at least 1".into()));
    }
    let model = load_model(&a.model)?;
    let ranking = top_transitions(&model, a.top_n);
    a.output.emit(&match a.format {
        Format::Text => ranking.to_text(),
        Format::Json => ranking.to_json() + "\n",
    })
}

fn cmd_features(a: FeaturesArgs) -> CliResult {
    let config = feature_config(a.prefix_max, a.suffix_max)?;
    let sentences = match &a.input {
        Some(path) => parse_raw(&read_file(path).map_err(data)?),
        None if !a.words.is_empty() => vec![a.words.clone()],
        None => return Err(CliError::Usage("give words or --input".into())),
    };
    let mut out = String::new();
    for words in &sentences {
        for t in 0..words.len() {
            let fm = extract_token_features(words, t, &config).map_err(data)?;
            out.push_str(&fm.to_dict_string());
            out.push('\n');
        }
        out.push('\n');
    }
    a.output.emit(&out)
}

#[derive(Serialize)]
struct SyllableReport<'a> {
    input: &'a str,
    #[serde(flatten)]
    analysis: crate::phonotactics::SyllableAnalysis,
}

fn cmd_syllables(a: SyllablesArgs) -> CliResult {
    let inv = PhonemeInventory::default();
    let mut reports = Vec::with_capacity(a.words.len());
    for input in &a.words {
        let phonemes = inv.parse_dotted(input).map_err(data)?;
        let skeleton = to_skeleton(&phonemes, &inv).map_err(data)?;
        reports.push(SyllableReport {
            input,
            analysis: classify(&skeleton),
        });
    }
    let text = match a.format {
        Format::Json => serde_json::to_string_pretty(&reports).map_err(data)? + "\n",
        Format::Text => {
            let mut out = String::new();
            for r in &reports {
                let verdict = if r.analysis.accepted { "accepted" } else { "rejected" };
                let matches: Vec<String> = r
                    .analysis
                    .matches
                    .iter()
                    .map(|m| format!("{}({})", m.template, m.syllables))
                    .collect();
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}",
                    r.input,
                    r.analysis.skeleton,
                    verdict,
                    matches.join(" ")
                );
            }
            out
        }
    };
    a.output.emit(&text)
}

fn cmd_gen(a: GenArgs) -> CliResult {
    let mut config = SynthConfig::new(a.seed, a.sentences);
    config.min_len = a.min_len;
    config.max_len = a.max_len;
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let corpus = generate(&config).map_err(data)?;
    a.output.emit(&render_with_header(&config, &corpus))
}

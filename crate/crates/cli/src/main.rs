use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use tagsimp::bench::{bench, BenchOptions, NoObserver};
use tagsimp::corpus::{read_eval_records, ParallelReader};
use tagsimp::metrics::Evaluator;
use tagsimp::preprocess::preprocess_line;
use tagsimp::tagger::{
    serve, EnsembleBackend, ExternalBackend, NoisyOracleBackend, OracleBackend, StatConfig,
    StatModel,
};
use tagsimp::tune::{tune, DevExample, TuneOptions};
use tagsimp::{build_vocab, tokenize, Engine, InferenceConfig, TagVocabulary, TaggerBackend, TokenSeq};

mod exit;

use exit::{exit_code, Usage};

#[derive(Parser)]
#[command(name = "tagsimp", version, about = "Text simplification by iterative edit tagging")]
struct Cli {
    /// Seed for every random choice (training shuffle, tuning, oracle noise).
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize a TSV corpus, optionally dropping -LRB- ... -RRB- spans.
    Preprocess {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        filter_brackets: bool,
    },
    /// Build a tag vocabulary from a parallel corpus.
    BuildVocab {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 5000)]
        capacity: usize,
        #[arg(long)]
        output: PathBuf,
    },
    /// Train the hashed-feature tagger.
    TrainStat {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 0.1)]
        lr: f64,
        #[arg(long, default_value_t = 18)]
        hash_bits: u32,
    },
    /// Simplify one sentence per line.
    Simplify {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Write one JSON trace record per input line.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 128)]
        batch_size: usize,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        #[command(flatten)]
        backend: BackendArgs,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Score a `source<TAB>system<TAB>ref...` file.
    Evaluate {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        fkgl: bool,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Search inference tweaks on a `source<TAB>ref...` dev file.
    Tune {
        #[arg(long)]
        dev: PathBuf,
        #[arg(long, default_value_t = 64)]
        budget: usize,
        /// Where to write the chosen config.
        #[arg(long)]
        output: PathBuf,
        /// Where to write the per-sample log.
        #[arg(long)]
        log: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        #[command(flatten)]
        backend: BackendArgs,
    },
    /// Time batched inference for 1..=N iterations.
    Bench {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 128)]
        batch_size: usize,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        /// Time every iteration count from 1 to this.
        #[arg(long, default_value_t = 5)]
        iterations: usize,
        #[arg(long, default_value_t = 1)]
        parallelism: usize,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[command(flatten)]
        backend: BackendArgs,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Serve a local backend over the external tagger protocol.
    Serve {
        /// Listen on a TCP address instead of stdin/stdout.
        #[arg(long)]
        listen: Option<String>,
        #[command(flatten)]
        backend: BackendArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Tsv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendKind {
    Oracle,
    Stat,
    External,
}

#[derive(Args)]
struct BackendArgs {
    #[arg(long, value_enum, default_value_t = BackendKind::Stat)]
    backend: BackendKind,
    #[arg(long)]
    vocab: PathBuf,
    /// Stat model file; repeat to average several models.
    #[arg(long)]
    model: Vec<PathBuf>,
    /// Parallel corpus the oracle answers from.
    #[arg(long)]
    oracle_corpus: Option<PathBuf>,
    /// Fraction of oracle rows replaced by random distributions.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Command line of an external tagger speaking the protocol on stdio.
    #[arg(long)]
    command: Option<String>,
    /// TCP address of an external tagger.
    #[arg(long)]
    connect: Option<String>,
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    keep_bias: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    delete_bias: Option<f64>,
    #[arg(long)]
    min_edit_prob: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<InferenceConfig> {
        let mut cfg = match &self.config {
            Some(p) => InferenceConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
            None => InferenceConfig::default(),
        };
        if let Some(v) = self.keep_bias {
            cfg.keep_bias = v;
        }
        if let Some(v) = self.delete_bias {
            cfg.delete_bias = v;
        }
        if let Some(v) = self.min_edit_prob {
            cfg.min_edit_prob = v;
        }
        if let Some(v) = self.max_iterations {
            cfg.max_iterations = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn open_input(path: Option<&Path>) -> Result<Box<dyn BufRead>> {
    Ok(match path {
        Some(p) => Box::new(BufReader::new(
            File::open(p).with_context(|| format!("opening {}", p.display()))?,
        )),
        None => Box::new(BufReader::new(io::stdin())),
    })
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn read_pairs(path: &Path) -> Result<Vec<(TokenSeq, TokenSeq)>> {
    let mut reader = ParallelReader::new(open_input(Some(path))?);
    let mut pairs = Vec::new();
    for pair in reader.by_ref() {
        pairs.push(pair?);
    }
    if reader.skipped() > 0 {
        eprintln!("{}: skipped {} malformed line(s)", path.display(), reader.skipped());
    }
    Ok(pairs)
}

fn load_vocab(path: &Path) -> Result<TagVocabulary> {
    TagVocabulary::load(path).with_context(|| format!("reading vocabulary {}", path.display()))
}

fn load_backend(args: &BackendArgs, vocab: &TagVocabulary, seed: u64) -> Result<Box<dyn TaggerBackend>> {
    match args.backend {
        BackendKind::Oracle => {
            let Some(corpus) = &args.oracle_corpus else {
                return Err(Usage("the oracle backend needs --oracle-corpus".into()).into());
            };
            let oracle = OracleBackend::new(read_pairs(corpus)?, vocab.clone());
            if args.noise > 0.0 {
                Ok(Box::new(NoisyOracleBackend::new(oracle, args.noise, seed)))
            } else {
                Ok(Box::new(oracle))
            }
        }
        BackendKind::Stat => {
            if args.model.is_empty() {
                return Err(Usage("the stat backend needs --model".into()).into());
            }
            let mut models: Vec<Box<dyn TaggerBackend>> = Vec::new();
            for p in &args.model {
                let m = StatModel::load(p, vocab.clone())
                    .with_context(|| format!("loading model {}", p.display()))?;
                models.push(Box::new(m));
            }
            if models.len() == 1 {
                Ok(models.pop().expect("one model"))
            } else {
                Ok(Box::new(EnsembleBackend::new(models)?))
            }
        }
        BackendKind::External => match (&args.command, &args.connect) {
            (Some(cmd), None) => {
                let mut parts = cmd.split_whitespace().map(str::to_string);
                let program = parts.next().ok_or_else(|| Usage("--command is empty".into()))?;
                let rest: Vec<String> = parts.collect();
                Ok(Box::new(ExternalBackend::spawn(&program, &rest, vocab)?))
            }
            (None, Some(addr)) => Ok(Box::new(ExternalBackend::connect(addr.as_str(), vocab)?)),
            _ => Err(Usage("the external backend needs exactly one of --command or --connect".into()).into()),
        },
    }
}

fn positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        bail!(Usage(format!("--{name} must be at least 1")));
    }
    Ok(())
}

fn cmd_preprocess(input: Option<&Path>, output: Option<&Path>, filter: bool) -> Result<()> {
    let mut out = open_output(output)?;
    for line in open_input(input)?.lines() {
        writeln!(out, "{}", preprocess_line(&line?, filter))?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_build_vocab(corpus: &Path, capacity: usize, output: &Path) -> Result<()> {
    let mut reader = ParallelReader::new(open_input(Some(corpus))?);
    let vocab = build_vocab(reader.by_ref(), capacity)?;
    if reader.skipped() > 0 {
        eprintln!("{}: skipped {} malformed line(s)", corpus.display(), reader.skipped());
    }
    vocab.save(output)?;
    eprintln!("{} tags, sha256 {}", vocab.len(), vocab.sha256());
    Ok(())
}

fn cmd_train_stat(corpus: &Path, vocab: &Path, output: &Path, cfg: StatConfig) -> Result<()> {
    let vocab = load_vocab(vocab)?;
    let pairs = read_pairs(corpus)?;
    let (model, losses) = StatModel::train(&pairs, vocab, &cfg)?;
    for (epoch, loss) in losses.iter().enumerate() {
        eprintln!("epoch {epoch}\tloss {loss:.6}");
    }
    model.save(output)?;
    Ok(())
}

struct SimplifyArgs<'a> {
    input: Option<&'a Path>,
    output: Option<&'a Path>,
    trace: Option<&'a Path>,
    batch_size: usize,
    parallelism: usize,
}

/// Streams the input in batches. A sentence that fails is reported on
/// stderr and passed through unchanged; the first such error is returned
/// once the whole input has been written.
fn cmd_simplify(a: SimplifyArgs, backend: &dyn TaggerBackend, vocab: &TagVocabulary, cfg: InferenceConfig) -> Result<()> {
    positive("batch-size", a.batch_size)?;
    positive("parallelism", a.parallelism)?;
    let engine = Engine::new(backend, vocab, cfg);
    let mut out = open_output(a.output)?;
    let mut trace = a.trace.map(|p| open_output(Some(p))).transpose()?;
    let mut lines = open_input(a.input)?.lines();
    let mut line_no = 0usize;
    let mut first_error: Option<tagsimp::Error> = None;

    loop {
        let mut batch = Vec::with_capacity(a.batch_size);
        for line in lines.by_ref().take(a.batch_size) {
            batch.push(line?);
        }
        if batch.is_empty() {
            break;
        }
        let seqs: Vec<TokenSeq> = batch.iter().map(|l| tokenize(l)).collect();
        for (seq, result) in seqs.iter().zip(engine.simplify_batch(&seqs, a.parallelism)) {
            line_no += 1;
            match result {
                Ok((output, steps)) => {
                    writeln!(out, "{output}")?;
                    if let Some(t) = trace.as_mut() {
                        let record = serde_json::json!({ "line": line_no, "steps": steps.steps });
                        writeln!(t, "{record}")?;
                    }
                }
                Err(e) => {
                    eprintln!("line {line_no}: {e}");
                    writeln!(out, "{seq}")?;
                    if let Some(t) = trace.as_mut() {
                        let record = serde_json::json!({ "line": line_no, "error": e.to_string() });
                        writeln!(t, "{record}")?;
                    }
                    first_error.get_or_insert(e);
                }
            }
        }
    }
    out.flush()?;
    if let Some(t) = trace.as_mut() {
        t.flush()?;
    }
    match first_error {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn cmd_evaluate(input: Option<&Path>, fkgl: bool, format: Format) -> Result<()> {
    let mut ev = Evaluator::new(fkgl);
    for record in read_eval_records(open_input(input)?) {
        ev.push(&record?)?;
    }
    let report = ev.finish()?;
    match format {
        Format::Table => print!("{}", report.to_table()),
        Format::Tsv => print!("{}", report.to_tsv()),
    }
    Ok(())
}

fn read_dev(path: &Path) -> Result<Vec<DevExample>> {
    let mut dev = Vec::new();
    for (i, line) in open_input(Some(path))?.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let source = tokenize(fields.next().unwrap_or_default());
        let references: Vec<String> = fields.map(str::to_string).collect();
        if references.is_empty() {
            return Err(tagsimp::Error::InvalidArgument(format!(
                "{} line {}: needs a source and at least one reference",
                path.display(),
                i + 1
            ))
            .into());
        }
        dev.push(DevExample { source, references });
    }
    Ok(dev)
}

fn read_sentences(path: &Path) -> Result<Vec<TokenSeq>> {
    let mut out = Vec::new();
    for line in open_input(Some(path))?.lines() {
        out.push(tokenize(&line?));
    }
    Ok(out)
}

fn run(cli: Cli) -> Result<()> {
    let seed = cli.seed;
    match cli.command {
        Command::Preprocess { input, output, filter_brackets } => {
            cmd_preprocess(input.as_deref(), output.as_deref(), filter_brackets)
        }
        Command::BuildVocab { corpus, capacity, output } => cmd_build_vocab(&corpus, capacity, &output),
        Command::TrainStat { corpus, vocab, output, epochs, lr, hash_bits } => {
            let cfg = StatConfig { hash_bits, epochs, learning_rate: lr, seed };
            cmd_train_stat(&corpus, &vocab, &output, cfg)
        }
        Command::Simplify { input, output, trace, batch_size, parallelism, backend, config } => {
            let cfg = config.resolve()?;
            let vocab = load_vocab(&backend.vocab)?;
            let tagger = load_backend(&backend, &vocab, seed)?;
            let args = SimplifyArgs {
                input: input.as_deref(),
                output: output.as_deref(),
                trace: trace.as_deref(),
                batch_size,
                parallelism,
            };
            cmd_simplify(args, tagger.as_ref(), &vocab, cfg)
        }
        Command::Evaluate { input, fkgl, format } => cmd_evaluate(input.as_deref(), fkgl, format),
        Command::Tune { dev, budget, output, log, parallelism, backend } => {
            positive("parallelism", parallelism)?;
            let vocab = load_vocab(&backend.vocab)?;
            let tagger = load_backend(&backend, &vocab, seed)?;
            let dev = read_dev(&dev)?;
            let opts = TuneOptions { budget, seed, parallelism };
            let result = tune(&dev, tagger.as_ref(), &vocab, &opts)?;
            result.config.save(&output)?;
            if let Some(log) = log {
                std::fs::write(&log, result.log_tsv())?;
            }
            print!("{}", result.table_row());
            eprintln!("dev sari {:.4}", result.sari);
            Ok(())
        }
        Command::Bench { input, batch_size, runs, iterations, parallelism, format, backend, config } => {
            positive("parallelism", parallelism)?;
            positive("iterations", iterations)?;
            let base = config.resolve()?;
            let vocab = load_vocab(&backend.vocab)?;
            let tagger = load_backend(&backend, &vocab, seed)?;
            let corpus = read_sentences(&input)?;
            let opts = BenchOptions {
                batch_size,
                runs,
                iterations: (1..=iterations).collect(),
                parallelism,
            };
            let report = bench(&corpus, tagger.as_ref(), &vocab, &base, &opts, &mut NoObserver)?;
            match format {
                Format::Table => print!("{}", report.to_table()),
                Format::Tsv => print!("{}", report.to_tsv()),
            }
            Ok(())
        }
        Command::Serve { listen, backend } => {
            if backend.backend == BackendKind::External {
                bail!(Usage("serve needs a local backend".into()));
            }
            let vocab = load_vocab(&backend.vocab)?;
            let tagger = load_backend(&backend, &vocab, seed)?;
            match listen {
                None => {
                    let stdout = io::stdout();
                    serve(io::stdin().lock(), stdout.lock(), tagger.as_ref(), &vocab)?;
                }
                Some(addr) => {
                    let listener = std::net::TcpListener::bind(&addr)?;
                    eprintln!("listening on {}", listener.local_addr()?);
                    for stream in listener.incoming() {
                        let stream = stream?;
                        let reader = BufReader::new(stream.try_clone()?);
                        if let Err(e) = serve(reader, stream, tagger.as_ref(), &vocab) {
                            eprintln!("connection closed: {e}");
                        }
                    }
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}

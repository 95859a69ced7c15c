mod error;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use drill::embeddings::{generate_embeddings, load_embeddings, EmbeddingTable, DEFAULT_DIMENSION, DEFAULT_NOISE};
use drill::eval::{evaluate, format_summary, run_method, summarize, CsvSink, EvalRow, EvalSettings, Method};
use drill::heuristics::{HeuristicParams, LearningProblem, QualityMetric};
use drill::kb::{load_kb, KnowledgeBase};
use drill::lpgen::{
    build_learning_problems, generate_goal_concepts, load_problems, save_problems, LpGenConfig, SizeConstraint,
};
use drill::qnet::{load_checkpoint, save_checkpoint, train, QNetworkParams, TrainingConfig, DEFAULT_HIDDEN};
use drill::search::SearchConfig;

use error::{io_error, CliError};

#[derive(Parser)]
#[command(name = "drill", version, about = "Learn ALC class expressions from positive and negative examples")]
struct Cli {
    /// More log output on stderr (repeat for debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a concept for one learning problem
    Learn(LearnArgs),
    /// Train the Q-network and write a checkpoint
    Train(TrainArgs),
    /// Generate learning problems from random refinement walks
    GenerateLps(GenerateArgs),
    /// Run several methods over a file of learning problems
    Evaluate(EvaluateArgs),
    /// Write generated individual embeddings as CSV
    Embed(EmbedArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Drill,
    Celoe,
    Ocel,
    Random,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Drill => Method::Drill,
            MethodArg::Celoe => Method::Celoe,
            MethodArg::Ocel => Method::Ocel,
            MethodArg::Random => Method::Random,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum QualityArg {
    F1,
    Accuracy,
    CeloeAccuracy,
}

#[derive(Args)]
struct SearchArgs {
    /// Wall-clock budget per problem, in seconds
    #[arg(long, default_value_t = 3.0)]
    max_runtime: f64,
    #[arg(long, default_value_t = 100_000)]
    max_expressions: usize,
    /// Longest refinement added to the search tree
    #[arg(long, default_value_t = 12)]
    max_length: usize,
    #[arg(long, value_enum, default_value = "f1")]
    quality: QualityArg,
    /// Gain weight (default 0.5 for celoe, 0.01 for ocel)
    #[arg(long)]
    lambda: Option<f64>,
    /// Length / expansion penalty
    #[arg(long, default_value_t = 0.02)]
    beta: f64,
    /// Weight of missed positives in the CELOE accuracy
    #[arg(long, default_value_t = 2.0)]
    t: f64,
}

#[derive(Args)]
struct EmbeddingArgs {
    /// Embedding CSV (`individual,v1,...,vd`); generated when absent
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Dimension of generated embeddings
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value_t = 0)]
    embedding_seed: u64,
    /// Noise scale of generated embeddings
    #[arg(long, default_value_t = DEFAULT_NOISE)]
    noise: f64,
}

#[derive(Args)]
struct LpGenArgs {
    /// States kept per walk
    #[arg(long, default_value_t = 20)]
    n: usize,
    /// Number of walks
    #[arg(long, default_value_t = 5)]
    m: usize,
    /// Balanced resamples per concept
    #[arg(long, default_value_t = 2)]
    kappa: usize,
    #[arg(long, default_value_t = 5)]
    maxlen: usize,
    /// Keep only concepts retrieving between --min-frac and --max-frac of all individuals
    #[arg(long)]
    size_constraint: bool,
    #[arg(long, default_value_t = 0.1)]
    min_frac: f64,
    #[arg(long, default_value_t = 0.3)]
    max_frac: f64,
}

impl LpGenArgs {
    fn config(&self, seed: u64) -> LpGenConfig {
        LpGenConfig {
            n: self.n,
            m: self.m,
            kappa: self.kappa,
            max_length: self.maxlen,
            size_constraint: self
                .size_constraint
                .then_some(SizeConstraint { min_fraction: self.min_frac, max_fraction: self.max_frac }),
            seed,
        }
    }
}

#[derive(Args)]
struct LearnArgs {
    #[arg(long)]
    kb: PathBuf,
    /// Learning problem file; see --index
    #[arg(long, conflicts_with_all = ["pos", "neg"])]
    lps: Option<PathBuf>,
    /// Which problem of --lps to solve
    #[arg(long, default_value_t = 0, requires = "lps")]
    index: usize,
    /// Positive examples, comma separated
    #[arg(long, value_delimiter = ',', requires = "neg")]
    pos: Vec<String>,
    /// Negative examples, comma separated
    #[arg(long, value_delimiter = ',', requires = "pos")]
    neg: Vec<String>,
    #[arg(long, value_enum, default_value = "celoe")]
    method: MethodArg,
    /// Checkpoint for --method drill
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    embedding: EmbeddingArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    kb: PathBuf,
    /// Training problems; use --generate to create them instead
    #[arg(long, required_unless_present = "generate")]
    lps: Option<PathBuf>,
    #[arg(long, conflicts_with = "lps")]
    generate: bool,
    #[command(flatten)]
    lpgen: LpGenArgs,
    /// Checkpoint to write
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    episodes: usize,
    /// Refinement steps per episode
    #[arg(long, default_value_t = 10)]
    steps: usize,
    /// Episodes between parameter updates
    #[arg(long, default_value_t = 5)]
    update_every: usize,
    #[arg(long, default_value_t = 0.99)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    epsilon_start: f64,
    #[arg(long, default_value_t = 0.01)]
    epsilon_decay: f64,
    #[arg(long, default_value_t = 0.01)]
    epsilon_min: f64,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 512)]
    batch: usize,
    #[arg(long, default_value_t = 10.0)]
    maxreward: f64,
    #[arg(long, default_value_t = 8192)]
    replay_capacity: usize,
    #[arg(long, default_value_t = 12)]
    max_length: usize,
    #[arg(long, default_value_t = DEFAULT_HIDDEN)]
    hidden: usize,
    /// Reward gain weight
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long, default_value_t = 0.02)]
    beta: f64,
    #[arg(long, default_value_t = 2.0)]
    t: f64,
    #[command(flatten)]
    embedding: EmbeddingArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    kb: PathBuf,
    #[command(flatten)]
    lpgen: LpGenArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    kb: PathBuf,
    #[arg(long)]
    lps: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "celoe")]
    methods: Vec<MethodArg>,
    /// Checkpoint, required when drill is among the methods
    #[arg(long)]
    model: Option<PathBuf>,
    /// Results CSV
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    embedding: EmbeddingArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    kb: PathBuf,
    #[arg(long, default_value_t = DEFAULT_DIMENSION)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_NOISE)]
    noise: f64,
    /// Output file; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors share the invalid-input code; --help and --version succeed.
            return if e.use_stderr() { ExitCode::from(error::EXIT_INVALID) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Learn(args) => cmd_learn(args),
        Command::Train(args) => cmd_train(args),
        Command::GenerateLps(args) => cmd_generate(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Embed(args) => cmd_embed(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}

fn search_config(args: &SearchArgs, seed: u64) -> SearchConfig {
    SearchConfig {
        max_runtime_seconds: args.max_runtime,
        max_expressions_tested: args.max_expressions,
        quality_metric: match args.quality {
            QualityArg::F1 => QualityMetric::FMeasure,
            QualityArg::Accuracy => QualityMetric::AccuracySimple,
            QualityArg::CeloeAccuracy => QualityMetric::AccuracyCeloe,
        },
        refinement_max_length: args.max_length,
        heuristic_params: HeuristicParams { lambda: args.lambda.unwrap_or(0.5), beta: args.beta, t: args.t },
        seed,
        record_trace: false,
    }
}

fn settings<'a>(
    args: &SearchArgs,
    seed: u64,
    drill: Option<(&'a QNetworkParams, &'a EmbeddingTable)>,
) -> EvalSettings<'a> {
    EvalSettings {
        search: search_config(args, seed),
        celoe: HeuristicParams { lambda: args.lambda.unwrap_or(0.5), beta: args.beta, t: args.t },
        ocel: HeuristicParams { lambda: args.lambda.unwrap_or(0.01), beta: args.beta, t: args.t },
        drill,
    }
}

fn embedding_table(kb: &KnowledgeBase, args: &EmbeddingArgs, dimension: usize) -> Result<EmbeddingTable, CliError> {
    let table = match &args.embeddings {
        Some(path) => load_embeddings(path, kb)?,
        None => generate_embeddings(kb, dimension, args.embedding_seed, args.noise)?,
    };
    if table.dimension() != dimension {
        return Err(CliError::invalid(format!(
            "embeddings have dimension {}, the model expects {dimension}",
            table.dimension()
        )));
    }
    Ok(table)
}

/// The checkpoint and matching embeddings, when `model` is given.
fn drill_parts(
    kb: &KnowledgeBase,
    model: Option<&Path>,
    args: &EmbeddingArgs,
) -> Result<Option<(QNetworkParams, EmbeddingTable)>, CliError> {
    let Some(model) = model else {
        return Ok(None);
    };
    let params = load_checkpoint(model)?;
    let dimension = args.dim.unwrap_or(params.dimension());
    let table = embedding_table(kb, args, dimension)?;
    Ok(Some((params, table)))
}

fn cmd_learn(args: LearnArgs) -> Result<(), CliError> {
    let kb = load_kb(&args.kb)?;
    let (lp_id, lp) = match &args.lps {
        Some(path) => {
            let mut problems = load_problems(path, &kb)?;
            if args.index >= problems.len() {
                return Err(CliError::invalid(format!(
                    "--index {} out of range, {} holds {} problem(s)",
                    args.index,
                    path.display(),
                    problems.len()
                )));
            }
            (format!("lp{}", args.index), problems.swap_remove(args.index))
        }
        None if !args.pos.is_empty() => {
            let lp = LearningProblem::new(kb.individual_set(&args.pos)?, kb.individual_set(&args.neg)?)
                .map_err(CliError::invalid)?;
            ("inline".to_string(), lp)
        }
        None => return Err(CliError::invalid("give either --lps or --pos and --neg")),
    };
    let method = Method::from(args.method);
    if method == Method::Drill && args.model.is_none() {
        return Err(CliError::invalid("--method drill needs --model"));
    }
    let parts = drill_parts(&kb, args.model.as_deref(), &args.embedding)?;
    let settings = settings(&args.search, args.seed, parts.as_ref().map(|(p, t)| (p, t)));
    let result = run_method(&kb, &lp, 0, method, &settings)?;
    let row = EvalRow::from_result(lp_id, method, &result);

    println!("method:     {}", row.method);
    println!("concept:    {}", row.concept);
    println!("length:     {}", row.length);
    println!("f1:         {:.4}", row.f1);
    println!("accuracy:   {:.4}", row.accuracy);
    println!("runtime:    {:.3}s", row.runtime_s);
    println!("tested:     {}", row.expressions_tested);
    println!("goal found: {}", if result.goal_found { "yes" } else { "no" });
    let mut json = serde_json::to_value(&row).expect("row serialises");
    json["goal_found"] = result.goal_found.into();
    println!("{json}");
    Ok(())
}

fn generated_problems(kb: &KnowledgeBase, args: &LpGenArgs, seed: u64) -> Result<Vec<LearningProblem>, CliError> {
    let cfg = args.config(seed);
    let concepts = generate_goal_concepts(kb, &cfg)?;
    let out = build_learning_problems(kb, &concepts, &cfg)?;
    log::info!("{} problem(s) from {} concept(s), {} skipped", out.problems.len(), concepts.len(), out.skipped);
    if out.problems.is_empty() {
        return Err(CliError::new(
            error::EXIT_NOTHING_TO_DO,
            "every generated concept retrieves no or all individuals",
        ));
    }
    Ok(out.problems)
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let kb = load_kb(&args.kb)?;
    let problems = match &args.lps {
        Some(path) => load_problems(path, &kb)?,
        None => generated_problems(&kb, &args.lpgen, args.seed)?,
    };
    let table = embedding_table(&kb, &args.embedding, args.embedding.dim.unwrap_or(DEFAULT_DIMENSION))?;
    let cfg = TrainingConfig {
        episodes: args.episodes,
        steps_per_episode: args.steps,
        update_every: args.update_every,
        gamma: args.gamma,
        epsilon_start: args.epsilon_start,
        epsilon_decay: args.epsilon_decay,
        epsilon_min: args.epsilon_min,
        learning_rate: args.lr,
        batch_size: args.batch,
        max_reward: args.maxreward,
        replay_capacity: args.replay_capacity,
        refinement_max_length: args.max_length,
        hidden: args.hidden,
        seed: args.seed,
    };
    log::info!(
        "training on {} problem(s): episodes={} batch={} gamma={} epsilon-decay={}",
        problems.len(),
        cfg.episodes,
        cfg.batch_size,
        cfg.gamma,
        cfg.epsilon_decay
    );
    let heuristic = HeuristicParams { lambda: args.lambda, beta: args.beta, t: args.t };
    let report = train(&kb, &table, &problems, &cfg, &heuristic)?;
    save_checkpoint(&report.params, &args.out)?;
    let mut lines = vec!["episode,loss".to_string()];
    lines.extend(report.updates.iter().map(|u| format!("{},{}", u.episode, u.loss)));
    print_lines(&lines)
}

/// Writes lines to stdout; a reader that goes away early is not an error.
fn print_lines(lines: &[String]) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    for line in lines {
        match writeln!(out, "{line}") {
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => return Ok(()),
            Err(e) => return Err(CliError::new(error::EXIT_IO, e)),
            Ok(()) => {}
        }
    }
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    let kb = load_kb(&args.kb)?;
    let problems = generated_problems(&kb, &args.lpgen, args.seed)?;
    save_problems(&args.out, &kb, &problems)?;
    eprintln!("wrote {} learning problem(s) to {}", problems.len(), args.out.display());
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let kb = load_kb(&args.kb)?;
    let problems: Vec<(String, LearningProblem)> =
        load_problems(&args.lps, &kb)?.into_iter().enumerate().map(|(i, lp)| (format!("lp{i}"), lp)).collect();
    let methods: Vec<Method> = args.methods.iter().map(|&m| m.into()).collect();
    if methods.contains(&Method::Drill) && args.model.is_none() {
        return Err(CliError::invalid("method drill needs --model"));
    }
    let parts = drill_parts(&kb, args.model.as_deref(), &args.embedding)?;
    let settings = settings(&args.search, args.seed, parts.as_ref().map(|(p, t)| (p, t)));

    let file = File::create(&args.out).map_err(|e| io_error(&args.out, e))?;
    let mut sink = CsvSink::new(BufWriter::new(file));
    let rows = evaluate(&kb, &problems, &methods, &settings, |row| sink.write(row))?;
    sink.into_inner()?.flush().map_err(|e| io_error(&args.out, e))?;
    print!("{}", format_summary(&summarize(&rows)));
    Ok(())
}

fn cmd_embed(args: EmbedArgs) -> Result<(), CliError> {
    let kb = load_kb(&args.kb)?;
    let table = generate_embeddings(&kb, args.dim, args.seed, args.noise)?;
    match &args.out {
        Some(path) => {
            let mut out = BufWriter::new(File::create(path).map_err(|e| io_error(path, e))?);
            table.write_csv(&kb, &mut out).and_then(|_| out.flush()).map_err(|e| io_error(path, e))
        }
        None => match table.write_csv(&kb, &mut std::io::stdout().lock()) {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::new(error::EXIT_IO, e)),
            _ => Ok(()),
        },
    }
}

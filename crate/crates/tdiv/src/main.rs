use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use tdiv::data::{self, DisplayPolicy, SplitSpec};
use tdiv::pipeline::{self, InputPaths, Method, Problem, Setting, SettingError};
use tdiv::synth::{self, SynthConfig};
use tdiv::{io, DataError};

#[derive(Parser)]
#[command(name = "tdiv", version, about = "Diversified recommendation subgraphs")]
struct Cli {
    /// JSON run configuration; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic MovieLens-shaped data set.
    Synth(SynthArgs),
    /// Split ratings into train/test folds.
    Split(SplitArgs),
    /// Derive diversity thresholds from training data.
    DeriveThresholds {
        #[command(flatten)]
        inputs: InputArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Select recommendations with one method.
    Diversify {
        #[command(flatten)]
        inputs: InputArgs,
        #[command(flatten)]
        params: ParamArgs,
        /// Solution TSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON log; defaults to the solution path with `.log.json`.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Compute metrics for a solution file.
    Evaluate {
        #[command(flatten)]
        inputs: InputArgs,
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out_json: Option<PathBuf>,
        #[arg(long)]
        out_csv: Option<PathBuf>,
    },
    /// Evaluate a grid of trade-off parameters.
    Gridsearch {
        #[command(flatten)]
        inputs: InputArgs,
        #[arg(long)]
        method: Option<Method>,
        #[arg(long, value_delimiter = ',')]
        betas: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        mus: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Collect JSON metric reports into one CSV table.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 2000)]
    users: usize,
    #[arg(long, default_value_t = 1500)]
    items: usize,
    #[arg(long, default_value_t = 250)]
    candidates: usize,
    /// Give items several genres instead of one.
    #[arg(long)]
    overlapping: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    ratings: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    min_ratings: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Clone, Default)]
struct InputArgs {
    #[arg(long)]
    candidates: Option<PathBuf>,
    #[arg(long)]
    categories: Option<PathBuf>,
    #[arg(long)]
    types: Option<PathBuf>,
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    thresholds: Option<PathBuf>,
    /// Directory holding `train_<fold>.tsv` and `test_<fold>.tsv`.
    #[arg(long)]
    folds_dir: Option<PathBuf>,
    #[arg(long)]
    fold: Option<usize>,
    /// Uniform display constraint.
    #[arg(long)]
    display_k: Option<u32>,
    /// Per-user display constraints (`user<TAB>c`).
    #[arg(long, conflicts_with = "display_k")]
    display_file: Option<PathBuf>,
    #[arg(long)]
    top_n: Option<usize>,
}

#[derive(Args, Clone, Default)]
struct ParamArgs {
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
}

/// Mirror of the command-line flags for `--config`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    ratings: Option<PathBuf>,
    candidates: Option<PathBuf>,
    categories: Option<PathBuf>,
    types: Option<PathBuf>,
    train: Option<PathBuf>,
    test: Option<PathBuf>,
    thresholds: Option<PathBuf>,
    folds_dir: Option<PathBuf>,
    fold: Option<usize>,
    out_dir: Option<PathBuf>,
    method: Option<Method>,
    beta: Option<f64>,
    mu: Option<f64>,
    lambda: Option<f64>,
    display_k: Option<u32>,
    display_file: Option<PathBuf>,
    top_n: Option<usize>,
    k: Option<usize>,
    seed: Option<u64>,
    folds: Option<usize>,
    min_ratings: Option<usize>,
    betas: Option<Vec<f64>>,
    mus: Option<Vec<f64>>,
    lambdas: Option<Vec<f64>>,
    jobs: Option<usize>,
}

/// Bad invocation, reported with exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct Usage(String);

fn usage<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(Usage(msg.into()).into())
}

impl InputArgs {
    fn merged(self, cfg: &RunConfig) -> Self {
        Self {
            candidates: self.candidates.or_else(|| cfg.candidates.clone()),
            categories: self.categories.or_else(|| cfg.categories.clone()),
            types: self.types.or_else(|| cfg.types.clone()),
            train: self.train.or_else(|| cfg.train.clone()),
            test: self.test.or_else(|| cfg.test.clone()),
            thresholds: self.thresholds.or_else(|| cfg.thresholds.clone()),
            folds_dir: self.folds_dir.or_else(|| cfg.folds_dir.clone()),
            fold: self.fold.or(cfg.fold),
            display_k: self.display_k.or(if self.display_file.is_some() { None } else { cfg.display_k }),
            display_file: self.display_file.or_else(|| cfg.display_file.clone()),
            top_n: self.top_n.or(cfg.top_n),
        }
    }

    fn load(self, cfg: &RunConfig) -> anyhow::Result<Problem> {
        let a = self.merged(cfg);
        let Some(candidates) = a.candidates else { return usage("--candidates is required") };
        let (mut train, mut test) = (a.train, a.test);
        if let (Some(dir), Some(f)) = (&a.folds_dir, a.fold) {
            train = train.or_else(|| Some(dir.join(format!("train_{f}.tsv"))));
            test = test.or_else(|| Some(dir.join(format!("test_{f}.tsv"))));
        }
        let display = match (a.display_k, &a.display_file) {
            (_, Some(p)) => data::load_display(p)?,
            (Some(0), None) => return usage("--display-k must be at least 1"),
            (Some(k), None) => DisplayPolicy::Uniform(k),
            (None, None) => DisplayPolicy::Uniform(10),
        };
        let paths = InputPaths {
            candidates,
            categories: a.categories,
            types: a.types,
            train,
            test,
            thresholds: a.thresholds,
        };
        let problem = Problem::load(&paths, display, a.top_n.unwrap_or(250))?;
        log::info!(
            "loaded {} users, {} items, {} candidate edges",
            problem.graph.user_count(),
            problem.graph.item_count(),
            problem.graph.edge_count()
        );
        Ok(problem)
    }
}

impl ParamArgs {
    fn setting(self, cfg: &RunConfig) -> anyhow::Result<Setting> {
        let Some(method) = self.method.or(cfg.method) else { return usage("--method is required") };
        Ok(Setting {
            method,
            beta: self.beta.or(cfg.beta).unwrap_or(0.0),
            mu: self.mu.or(cfg.mu).unwrap_or(0.0),
            lambda: self.lambda.or(cfg.lambda),
        })
    }
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| DataError::Io { path: dir.into(), source: e })?;
    }
    fs::write(path, contents).map_err(|e| DataError::Io { path: path.into(), source: e })?;
    Ok(())
}

fn emit(path: Option<&Path>, contents: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => write(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn checked(problem: &Problem, setting: &Setting) -> anyhow::Result<()> {
    problem.check(setting).map_err(|e| Usage(e.to_string()).into())
}

#[derive(Serialize)]
struct DiversifyLog {
    method: Method,
    beta: f64,
    mu: f64,
    lambda: Option<f64>,
    users: usize,
    items: usize,
    edges: usize,
    selected: usize,
    skipped_rows: usize,
    relevance: f64,
    tudiv: f64,
    tidiv: f64,
    objective: f64,
    wall_time_secs: f64,
}

fn cmd_synth(a: SynthArgs) -> anyhow::Result<()> {
    let cfg = SynthConfig {
        users: a.users,
        items: a.items,
        candidates_per_user: a.candidates,
        overlapping: a.overlapping,
        seed: a.seed,
        ..SynthConfig::default()
    };
    let d = synth::generate(&cfg);
    write(&a.out_dir.join("ratings.tsv"), &data::format_ratings(&d.ratings))?;
    write(&a.out_dir.join("categories.tsv"), &d.categories_text())?;
    write(&a.out_dir.join("types.tsv"), &d.types_text())?;
    write(&a.out_dir.join("candidates.tsv"), &d.candidates_text())?;
    log::info!("wrote {} ratings and {} candidates to {}", d.ratings.len(), d.candidates.len(), a.out_dir.display());
    Ok(())
}

fn cmd_split(a: SplitArgs, cfg: &RunConfig) -> anyhow::Result<()> {
    let Some(ratings) = a.ratings.or_else(|| cfg.ratings.clone()) else { return usage("--ratings is required") };
    let Some(out) = a.out_dir.or_else(|| cfg.out_dir.clone()) else { return usage("--out-dir is required") };
    let defaults = SplitSpec::default();
    let spec = SplitSpec {
        folds: a.folds.or(cfg.folds).unwrap_or(defaults.folds),
        min_ratings: a.min_ratings.or(cfg.min_ratings).unwrap_or(defaults.min_ratings),
        seed: a.seed.or(cfg.seed).unwrap_or(defaults.seed),
    };
    if let Err(e) = spec.validate() {
        return usage(e.to_string());
    }
    let data = data::load_ratings(&ratings)?;
    for (f, fold) in data::split_folds(&data, &spec)?.iter().enumerate() {
        write(&out.join(format!("train_{f}.tsv")), &data::format_ratings(&fold.train))?;
        write(&out.join(format!("test_{f}.tsv")), &data::format_ratings(&fold.test))?;
        log::info!("fold {f}: {} train, {} test ratings", fold.train.len(), fold.test.len());
    }
    Ok(())
}

fn cmd_derive(inputs: InputArgs, out: Option<PathBuf>, cfg: &RunConfig) -> anyhow::Result<()> {
    let merged = inputs.clone().merged(cfg);
    if merged.train.is_none() && merged.fold.is_none() {
        return usage("--train (or --folds-dir with --fold) is required");
    }
    if merged.categories.is_none() || merged.types.is_none() {
        return usage("--categories and --types are required");
    }
    let problem = InputArgs { thresholds: None, ..inputs }.load(cfg)?;
    let t = problem.thresholds.as_ref().context("no thresholds derived")?;
    let text = data::format_thresholds(t, &problem.graph, &problem.user_types, &problem.item_cats);
    emit(out.as_deref(), &text)
}

fn cmd_diversify(
    inputs: InputArgs,
    params: ParamArgs,
    out: Option<PathBuf>,
    log_path: Option<PathBuf>,
    cfg: &RunConfig,
) -> anyhow::Result<()> {
    let setting = params.setting(cfg)?;
    let problem = inputs.load(cfg)?;
    checked(&problem, &setting)?;
    let start = Instant::now();
    let lists = problem.run(&setting)?;
    let elapsed = start.elapsed().as_secs_f64();
    let d = problem.decompose(&lists, setting.beta, setting.mu)?;
    let g = &problem.graph;
    let entry = DiversifyLog {
        method: setting.method,
        beta: setting.beta,
        mu: setting.mu,
        lambda: setting.lambda,
        users: g.user_count(),
        items: g.item_count(),
        edges: g.edge_count(),
        selected: lists.lists().iter().map(Vec::len).sum(),
        skipped_rows: problem.skipped,
        relevance: d.relevance,
        tudiv: d.tudiv,
        tidiv: d.tidiv,
        objective: d.objective,
        wall_time_secs: elapsed,
    };
    log::info!(
        "{}: objective {} = rel {} + {} * TUDiv {} + {} * TIDiv {} in {:.3}s",
        setting.method,
        d.objective,
        d.relevance,
        d.beta,
        d.tudiv,
        d.mu,
        d.tidiv,
        elapsed
    );
    let solution = io::format_solution(g, &lists, setting.method.name());
    emit(out.as_deref(), &solution)?;
    let log_path = log_path.or_else(|| out.as_ref().map(|o| o.with_extension("log.json")));
    if let Some(p) = log_path {
        write(&p, &(serde_json::to_string_pretty(&entry)? + "\n"))?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_evaluate(
    inputs: InputArgs,
    solution: Option<PathBuf>,
    beta: Option<f64>,
    mu: Option<f64>,
    k: Option<usize>,
    out_json: Option<PathBuf>,
    out_csv: Option<PathBuf>,
    cfg: &RunConfig,
) -> anyhow::Result<()> {
    let Some(solution) = solution else { return usage("--solution is required") };
    let problem = inputs.load(cfg)?;
    let text = fs::read_to_string(&solution).map_err(|e| DataError::Io { path: solution.clone(), source: e })?;
    let lists = io::parse_solution(&text, &solution.display().to_string(), &problem.graph)?;
    let k = k.or(cfg.k).unwrap_or(10);
    let report = problem.evaluate(&lists, beta.or(cfg.beta).unwrap_or(0.0), mu.or(cfg.mu).unwrap_or(0.0), k)?;
    let json = io::report_json(&report) + "\n";
    let csv = format!("{}\n{}\n", io::report_csv_header(), io::report_csv_row(&report));
    match (&out_json, &out_csv) {
        (None, None) => print!("{json}"),
        _ => {
            if let Some(p) = &out_json {
                write(p, &json)?;
            }
            if let Some(p) = &out_csv {
                write(p, &csv)?;
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_gridsearch(
    inputs: InputArgs,
    method: Option<Method>,
    betas: Option<Vec<f64>>,
    mus: Option<Vec<f64>>,
    lambdas: Option<Vec<f64>>,
    k: Option<usize>,
    jobs: Option<usize>,
    out: Option<PathBuf>,
    cfg: &RunConfig,
) -> anyhow::Result<()> {
    let Some(method) = method.or(cfg.method) else { return usage("--method is required") };
    let betas = betas.or_else(|| cfg.betas.clone()).unwrap_or_else(|| vec![0.0]);
    let mus = mus.or_else(|| cfg.mus.clone()).unwrap_or_else(|| vec![0.0]);
    let lambdas = lambdas.or_else(|| cfg.lambdas.clone());
    if method.uses_lambda() && lambdas.is_none() {
        return usage(format!("method {method} requires --lambdas"));
    }
    let settings = pipeline::grid(method, &betas, &mus, &lambdas.unwrap_or_default());
    if settings.is_empty() {
        return usage("empty grid");
    }
    let problem = inputs.load(cfg)?;
    checked(&problem, &settings[0])?;
    let jobs = jobs.or(cfg.jobs).unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let start = Instant::now();
    let rows = pipeline::grid_search(&problem, &settings, k.or(cfg.k).unwrap_or(10), jobs)?;
    log::info!("{} settings in {:.3}s on up to {jobs} threads", rows.len(), start.elapsed().as_secs_f64());
    emit(out.as_deref(), &pipeline::grid_csv(&rows))
}

fn cmd_report(inputs: Vec<PathBuf>, out: Option<PathBuf>) -> anyhow::Result<()> {
    let mut table = format!("label,{}\n", io::report_csv_header());
    for p in &inputs {
        let text = fs::read_to_string(p).map_err(|e| DataError::Io { path: p.clone(), source: e })?;
        let report = io::parse_report_json(&text).with_context(|| format!("{}: not a metrics report", p.display()))?;
        let label = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        table.push_str(&format!("{label},{}\n", io::report_csv_row(&report)));
    }
    emit(out.as_deref(), &table)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg: RunConfig = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| DataError::Io { path: p.clone(), source: e })?;
            match serde_json::from_str(&text) {
                Ok(c) => c,
                Err(e) => return usage(format!("{}: {e}", p.display())),
            }
        }
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Split(a) => cmd_split(a, &cfg),
        Command::DeriveThresholds { inputs, out } => cmd_derive(inputs, out, &cfg),
        Command::Diversify { inputs, params, out, log } => cmd_diversify(inputs, params, out, log, &cfg),
        Command::Evaluate { inputs, solution, beta, mu, k, out_json, out_csv } => {
            cmd_evaluate(inputs, solution, beta, mu, k, out_json, out_csv, &cfg)
        }
        Command::Gridsearch { inputs, method, betas, mus, lambdas, k, jobs, out } => {
            cmd_gridsearch(inputs, method, betas, mus, lambdas, k, jobs, out, &cfg)
        }
        Command::Report { inputs, out } => {
            if inputs.is_empty() {
                bail!(Usage("--inputs is required".into()));
            }
            cmd_report(inputs, out)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() || cause.is::<SettingError>() {
            return 2;
        }
        if let Some(d) = cause.downcast_ref::<DataError>() {
            return if pipeline::is_limit_error(d) { 4 } else { 3 };
        }
    }
    3
}

/// The error chain, dropping causes already spelled out by their parent.
fn message(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", message(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use degwalk::bench::{load_graph, run_plan, task_stem, BenchmarkPlan, DatasetSource};
use degwalk::embedding::{train, EmbeddingMatrix, SigmoidMode, TokenCorpus, TrainConfig};
use degwalk::eval::{
    classify_nodes, labelled_samples, make_link_split, predict_links, write_reports_csv,
    EdgeOperator, EvalReport, Task,
};
use degwalk::scalefree::{ScaleFreeParams, ScaleFreeRow, SCALEFREE_CSV_HEADER};
use degwalk::walk::{generate_corpus_with, total_walk_count, SamplerMode, WalkConfig, WalkStrategy};
use degwalk::{Error, Graph};
use serde_json::json;

/// Default output directory for every command that writes files.
const OUT_ENV: &str = "DEGWALK_OUT";

#[derive(Parser)]
#[command(name = "degwalk", version, about = "Degree-proportional random walks for graph embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a walk corpus, one walk per line.
    Walk(WalkArgs),
    /// Train skip-gram embeddings on a corpus file.
    Embed(EmbedArgs),
    /// Evaluate an embedding.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Run a benchmark plan.
    Bench(BenchArgs),
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Print where to get CORA and CiteSeer and how to lay them out.
    FetchInstructions,
    /// Print node, edge and degree statistics of a graph as JSON.
    Summary(DatasetArgs),
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Node classification with cross-validated logistic regression.
    Nc(EvalNcArgs),
    /// Link prediction on a held-out edge split.
    Lp(EvalLpArgs),
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Power-law degree predictions over a grid of N, gamma and k_min.
    Scalefree(ScaleFreeArgs),
}

#[derive(Args)]
struct DatasetArgs {
    /// `karate` or an edge-list path.
    #[arg(long)]
    dataset: String,
    /// Label file (`node ... class` per line).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Keep every component instead of only the largest.
    #[arg(long)]
    no_lcc: bool,
}

impl DatasetArgs {
    fn load(&self) -> Result<Graph, Error> {
        let source = DatasetSource::parse(&self.dataset, Path::new(""));
        load_graph(&source, self.labels.as_deref(), !self.no_lcc)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyKind {
    Fixed,
    Degree,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sampler {
    Precomputed,
    Rejection,
}

#[derive(Args)]
struct WalkArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[arg(long, value_enum, default_value = "degree")]
    strategy: StrategyKind,
    #[arg(long, default_value_t = 20)]
    walks_per_node: usize,
    #[arg(long, default_value_t = 1)]
    walks_per_degree: usize,
    /// Steps per walk; a walk holds one more node than this.
    #[arg(long, default_value_t = 30)]
    walk_length: usize,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "precomputed")]
    sampler: Sampler,
    /// Worker threads; the corpus does not depend on it.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,
    /// Corpus file (default `$DEGWALK_OUT/walks.txt`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 128, value_parser = clap::value_parser!(u32).range(1..))]
    dim: u32,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    window: u32,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    negatives: u32,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    epochs: u32,
    #[arg(long, default_value_t = 0.025)]
    learning_rate: f64,
    #[arg(long, default_value_t = 0.0001)]
    lr_floor: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Use the full window for every center.
    #[arg(long)]
    no_shrink: bool,
    /// Use the 512-bin sigmoid table instead of the exact function.
    #[arg(long)]
    sigmoid_table: bool,
    /// More than one thread trades determinism for speed.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    threads: u32,
    /// Embedding file (default `$DEGWALK_OUT/embedding.txt`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Tag the report row with the strategy that produced the embedding,
    /// e.g. `degree:3` or `fixed:20`.
    #[arg(long, requires = "walk_length", value_parser = parse_strategy)]
    strategy: Option<WalkStrategy>,
    #[arg(long, requires = "strategy")]
    walk_length: Option<usize>,
    /// Directory for report CSV and JSON (default `$DEGWALK_OUT`).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct EvalNcArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[arg(long)]
    embedding: PathBuf,
    /// Fraction of each class used for training.
    #[arg(long, default_value_t = 0.8)]
    train_ratio: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct EvalLpArgs {
    #[command(flatten)]
    data: DatasetArgs,
    /// Embedding trained on the training graph of the same split.
    #[arg(long, required_unless_present = "write_train_graph")]
    embedding: Option<PathBuf>,
    #[arg(long, default_value = "hadamard", value_parser = parse_operator)]
    op: EdgeOperator,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    /// Seed of the edge split.
    #[arg(long, default_value_t = 1)]
    split_seed: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the training graph of the split as an edge list and stop.
    #[arg(long)]
    write_train_graph: Option<PathBuf>,
    #[command(flatten)]
    report: ReportArgs,
}

#[derive(Args)]
struct BenchArgs {
    plan: PathBuf,
    /// Overrides the plan's worker count.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    workers: Option<u32>,
}

#[derive(Args)]
struct ScaleFreeArgs {
    #[arg(long, num_args = 1.., value_delimiter = ',', default_value = "2.5")]
    gamma: Vec<f64>,
    #[arg(long, num_args = 1.., value_delimiter = ',', default_value = "1")]
    kmin: Vec<f64>,
    #[arg(long, num_args = 1.., value_delimiter = ',', default_value = "1000,100000,10000000")]
    n: Vec<f64>,
}

fn parse_strategy(s: &str) -> Result<WalkStrategy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_operator(s: &str) -> Result<EdgeOperator, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn out_dir() -> PathBuf {
    std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from("."), PathBuf::from)
}

fn create_file(path: &Path) -> Result<BufWriter<File>, Error> {
    let io_err = |e| Error::Io {
        path: path.to_owned(),
        source: e,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err)?;
    }
    File::create(path).map(BufWriter::new).map_err(io_err)
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<(), Error> {
    w.flush().map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })
}

fn print_json(value: &serde_json::Value) {
    // a closed pipe is not an error worth reporting
    let _ = writeln!(io::stdout(), "{value:#}");
}

fn cmd_walk(args: WalkArgs) -> Result<(), Error> {
    let graph = args.data.load()?;
    let strategy = match args.strategy {
        StrategyKind::Fixed => WalkStrategy::Fixed {
            walks_per_node: args.walks_per_node,
        },
        StrategyKind::Degree => WalkStrategy::DegreeBased {
            walks_per_degree: args.walks_per_degree,
        },
    };
    let cfg = WalkConfig::new(strategy, args.walk_length)
        .with_pq(args.p, args.q)
        .with_seed(args.seed);
    let mode = match args.sampler {
        Sampler::Precomputed => SamplerMode::Precomputed,
        Sampler::Rejection => SamplerMode::Rejection,
    };
    let start = Instant::now();
    let corpus = generate_corpus_with(&graph, &cfg, mode, args.threads.map(|t| t as usize))?;
    let elapsed = start.elapsed();

    let path = args.out.unwrap_or_else(|| out_dir().join("walks.txt"));
    let mut w = create_file(&path)?;
    corpus.write(&graph, &mut w).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    finish(w, &path)?;
    print_json(&json!({
        "corpus": path,
        "strategy": strategy.to_string(),
        "walk_length": args.walk_length,
        "total_walks": corpus.len(),
        "tokens": corpus.num_tokens(),
        "elapsed_ms": elapsed.as_secs_f64() * 1e3,
    }));
    Ok(())
}

fn cmd_embed(args: EmbedArgs) -> Result<(), Error> {
    let cfg = TrainConfig {
        dim: args.dim as usize,
        window: args.window as usize,
        negatives: args.negatives as usize,
        epochs: args.epochs as usize,
        learning_rate: args.learning_rate,
        lr_floor: args.lr_floor,
        seed: args.seed,
        shrink_window: !args.no_shrink,
        sigmoid: if args.sigmoid_table {
            SigmoidMode::Table
        } else {
            SigmoidMode::Exact
        },
        threads: args.threads as usize,
    };
    cfg.validate()?;
    let corpus = TokenCorpus::read(&args.corpus)?;
    let start = Instant::now();
    let out = train(&corpus, &cfg)?;
    for (epoch, loss) in out.epoch_loss.iter().enumerate() {
        log::info!("epoch {}: mean loss {loss:.6}", epoch + 1);
    }
    let path = args.out.unwrap_or_else(|| out_dir().join("embedding.txt"));
    let mut w = create_file(&path)?;
    out.embedding.write_word2vec(&mut w).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    finish(w, &path)?;
    print_json(&json!({
        "embedding": path,
        "rows": out.embedding.num_rows(),
        "dim": cfg.dim,
        "epoch_loss": out.epoch_loss,
        "elapsed_ms": start.elapsed().as_secs_f64() * 1e3,
    }));
    Ok(())
}

/// Writes `report_<stem>.csv` and `.json` when the caller tagged the run.
fn write_report(
    args: &ReportArgs,
    graph: &Graph,
    task: Task,
    fill: impl FnOnce(&mut EvalReport),
) -> Result<Option<PathBuf>, Error> {
    let (Some(strategy), Some(wl)) = (args.strategy, args.walk_length) else {
        return Ok(None);
    };
    let mut report = EvalReport::new(task, strategy, wl, total_walk_count(strategy, graph), 0.0);
    fill(&mut report);
    let dir = args.out_dir.clone().unwrap_or_else(out_dir);
    let stem = task_stem(task);
    let csv = dir.join(format!("report_{stem}.csv"));
    let mut w = create_file(&csv)?;
    write_reports_csv(std::slice::from_ref(&report), &mut w).map_err(|e| Error::Io {
        path: csv.clone(),
        source: e,
    })?;
    finish(w, &csv)?;
    let json_path = dir.join(format!("report_{stem}.json"));
    let mut w = create_file(&json_path)?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    finish(w, &json_path)?;
    Ok(Some(csv))
}

fn cmd_eval_nc(args: EvalNcArgs) -> Result<(), Error> {
    let graph = args.data.load()?;
    if graph.num_labelled() == 0 {
        return Err(Error::InvalidConfig(
            "node classification needs --labels".into(),
        ));
    }
    let emb = EmbeddingMatrix::read_word2vec(&args.embedding)?;
    let samples = labelled_samples(&emb, &graph)?;
    let outcome = classify_nodes(&samples, args.train_ratio, args.seed)?;
    let report = write_report(&args.report, &graph, Task::Classification, |r| {
        r.accuracy = outcome.accuracy;
    })?;
    print_json(&json!({
        "task": "nc",
        "outcome": outcome,
        "report": report,
    }));
    Ok(())
}

fn cmd_eval_lp(args: EvalLpArgs) -> Result<(), Error> {
    let graph = args.data.load()?;
    let split = make_link_split(&graph, args.test_fraction, args.split_seed)?;
    if let Some(path) = &args.write_train_graph {
        let mut w = create_file(path)?;
        split.train_graph.write_edge_list(&mut w).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        finish(w, path)?;
        print_json(&json!({
            "train_graph": path,
            "edges": split.train_graph.num_edges(),
            "test_pos": split.test_pos.len(),
            "test_neg": split.test_neg.len(),
        }));
        return Ok(());
    }
    let path = args.embedding.as_deref().expect("required by clap");
    let emb = EmbeddingMatrix::read_word2vec(path)?;
    let outcome = predict_links(&emb, &split, args.op, args.seed)?;
    let report = write_report(&args.report, &split.train_graph, Task::Link, |r| {
        r.accuracy = outcome.accuracy;
        r.auc = Some(outcome.auc);
        r.operator = Some(args.op.name().to_string());
    })?;
    print_json(&json!({
        "task": "lp",
        "operator": args.op.name(),
        "outcome": outcome,
        "report": report,
    }));
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), Error> {
    let mut plan = BenchmarkPlan::from_file(&args.plan, &out_dir().join("bench"))?;
    if let Some(w) = args.workers {
        plan.workers = w as usize;
    }
    let start = Instant::now();
    let outcome = run_plan(&plan)?;
    let failed = outcome.cells.iter().filter(|c| !c.is_ok()).count();
    for cell in outcome.cells.iter().filter(|c| !c.is_ok()) {
        log::warn!("{}: {}", cell.key.file_name(), cell.status);
    }
    print_json(&json!({
        "output": plan.output,
        "cells": outcome.cells.len(),
        "computed": outcome.computed,
        "reused": outcome.reused,
        "failed": failed,
        "elapsed_ms": start.elapsed().as_secs_f64() * 1e3,
    }));
    Ok(())
}

fn cmd_scalefree(args: ScaleFreeArgs) -> Result<(), Error> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut rows = vec![SCALEFREE_CSV_HEADER.to_string()];
    for &gamma in &args.gamma {
        for &k_min in &args.kmin {
            for &n in &args.n {
                let params = ScaleFreeParams::new(gamma, k_min, n)?;
                rows.push(ScaleFreeRow::compute(&params)?.to_csv());
            }
        }
    }
    for row in rows {
        let _ = writeln!(out, "{row}");
    }
    Ok(())
}

const FETCH_INSTRUCTIONS: &str = "\
degwalk does not download data. Get the LINQS releases of CORA and CiteSeer
(https://linqs.org/datasets/) and unpack them as

  <data>/cora/cora.cites          citing/cited paper id pairs
  <data>/cora/cora.content        paper id, 1433 binary word features, class
  <data>/citeseer/citeseer.cites
  <data>/citeseer/citeseer.content

Expected after loading (duplicate and self-loop lines dropped):

  cora      2708 nodes, 5278 edges, 7 classes
            largest component 2485 nodes, 5069 edges (degree sum 10138)
  citeseer  3327 nodes, 6 classes
            largest component 2110 nodes, 3694 edges (degree sum 7388)

Check a copy with `degwalk summary --dataset <data>/cora/cora.cites
--labels <data>/cora/cora.content --no-lcc` and again without `--no-lcc`.
Set DEGWALK_DATA=<data> to enable the dataset checks of the acceptance test.
";

fn cmd_summary(args: DatasetArgs) -> Result<(), Error> {
    let graph = args.load()?;
    let _ = writeln!(io::stdout(), "{}", serde_json::to_string(&graph.summary())?);
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Walk(a) => cmd_walk(a),
        Command::Embed(a) => cmd_embed(a),
        Command::Eval(EvalCommand::Nc(a)) => cmd_eval_nc(a),
        Command::Eval(EvalCommand::Lp(a)) => cmd_eval_lp(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Analyze(AnalyzeCommand::Scalefree(a)) => cmd_scalefree(a),
        Command::FetchInstructions => {
            let _ = io::stdout().write_all(FETCH_INSTRUCTIONS.as_bytes());
            Ok(())
        }
        Command::Summary(a) => cmd_summary(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

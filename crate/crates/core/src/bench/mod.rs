//! Plan-driven benchmark grids.
//!
//! Every (task, strategy, walk length, seed) cell runs walk generation,
//! training and evaluation on its own seed-derived streams and leaves a JSON
//! marker in `<output>/cells/`. A rerun reuses every marker whose status is
//! `ok` and whose configuration fingerprint still matches, so a completed
//! plan is not recomputed.

mod plan;

pub use plan::{BenchmarkPlan, DatasetSource};

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{train, TokenCorpus, TrainConfig};
use crate::error::{Error, Result};
use crate::eval::{
    apply_baseline, classify_nodes, labelled_samples, make_link_split, predict_links,
    write_reports_csv, EvalReport, Task,
};
use crate::graph::{karate_club, largest_connected_component, load_edge_list, load_labels, Graph};
use crate::sampling::derive_seed;
use crate::walk::{generate_corpus_with, SamplerMode, WalkConfig, WalkStrategy};

const SALT_WALK: u64 = 1;
const SALT_TRAIN: u64 = 2;
const SALT_EVAL: u64 = 3;
const SALT_SPLIT: u64 = 4;

/// File-name stem for a task: `nc` or `lp`.
pub fn task_stem(task: Task) -> &'static str {
    match task {
        Task::Classification => "nc",
        Task::Link => "lp",
    }
}

/// Loads the plan's graph, attaches labels and restricts to the LCC when
/// requested.
pub fn load_dataset(plan: &BenchmarkPlan) -> Result<Graph> {
    load_graph(&plan.dataset, plan.labels.as_deref(), plan.use_lcc)
}

pub fn load_graph(dataset: &DatasetSource, labels: Option<&Path>, use_lcc: bool) -> Result<Graph> {
    let mut graph = match dataset {
        DatasetSource::Karate => karate_club(),
        DatasetSource::EdgeList(path) => load_edge_list(path, Default::default())?.0,
    };
    if let Some(labels) = labels {
        graph = load_labels(labels, graph)?.0;
    }
    if use_lcc {
        let before = graph.num_nodes();
        graph = largest_connected_component(&graph).0;
        log::info!(
            "largest connected component keeps {} of {before} nodes, {} edges",
            graph.num_nodes(),
            graph.num_edges()
        );
    }
    Ok(graph)
}

/// Identifies one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub task: Task,
    pub strategy: WalkStrategy,
    pub walk_length: usize,
    pub seed: u64,
}

impl CellKey {
    /// Marker file name inside `<output>/cells/`.
    pub fn file_name(&self) -> String {
        format!(
            "{}_{}{}_wl{}_seed{}.json",
            task_stem(self.task),
            self.strategy.kind(),
            self.strategy.multiplier(),
            self.walk_length,
            self.seed
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub key: CellKey,
    pub total_walks: usize,
    pub walk_ms: f64,
    pub train_ms: f64,
    pub eval_ms: f64,
    pub accuracy: Option<f64>,
    pub auc: Option<f64>,
    /// `ok` or `error: <message>`.
    pub status: String,
    pub fingerprint: String,
}

impl CellResult {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Serialize)]
struct Fingerprint<'a> {
    dataset: &'a DatasetSource,
    labels: &'a Option<PathBuf>,
    use_lcc: bool,
    p: f64,
    q: f64,
    train: &'a TrainConfig,
    split_ratio: f64,
    link_test_fraction: f64,
    edge_operator: crate::eval::EdgeOperator,
}

fn fingerprint(plan: &BenchmarkPlan) -> String {
    serde_json::to_string(&Fingerprint {
        dataset: &plan.dataset,
        labels: &plan.labels,
        use_lcc: plan.use_lcc,
        p: plan.p,
        q: plan.q,
        train: &plan.train,
        split_ratio: plan.split_ratio,
        link_test_fraction: plan.link_test_fraction,
        edge_operator: plan.edge_operator,
    })
    .expect("fingerprint serialises")
}

fn millis(start: Instant) -> f64 {
    (start.elapsed().as_secs_f64() * 1e6).round() / 1e3
}

struct Timings {
    total_walks: usize,
    walk_ms: f64,
    train_ms: f64,
    eval_ms: f64,
    accuracy: f64,
    auc: Option<f64>,
}

fn embed(
    graph: &Graph,
    plan: &BenchmarkPlan,
    key: &CellKey,
) -> Result<(crate::embedding::EmbeddingMatrix, usize, f64, f64)> {
    let cfg = WalkConfig::new(key.strategy, key.walk_length)
        .with_pq(plan.p, plan.q)
        .with_seed(derive_seed(key.seed, SALT_WALK));
    let start = Instant::now();
    let corpus = generate_corpus_with(graph, &cfg, SamplerMode::Precomputed, Some(1))?;
    let walk_ms = millis(start);
    let start = Instant::now();
    let tokens = TokenCorpus::from_walks(&corpus, graph)?;
    let train_cfg = TrainConfig {
        seed: derive_seed(key.seed, SALT_TRAIN),
        threads: 1,
        ..plan.train
    };
    let out = train(&tokens, &train_cfg)?;
    Ok((out.embedding, corpus.len(), walk_ms, millis(start)))
}

fn execute(graph: &Graph, plan: &BenchmarkPlan, key: &CellKey) -> Result<Timings> {
    let eval_seed = derive_seed(key.seed, SALT_EVAL);
    match key.task {
        Task::Classification => {
            let (emb, total_walks, walk_ms, train_ms) = embed(graph, plan, key)?;
            let start = Instant::now();
            let samples = labelled_samples(&emb, graph)?;
            let out = classify_nodes(&samples, plan.split_ratio, eval_seed)?;
            Ok(Timings {
                total_walks,
                walk_ms,
                train_ms,
                eval_ms: millis(start),
                accuracy: out.accuracy,
                auc: None,
            })
        }
        Task::Link => {
            // the split depends on the seed only, so strategies are paired
            let split = make_link_split(
                graph,
                plan.link_test_fraction,
                derive_seed(key.seed, SALT_SPLIT),
            )?;
            let (emb, total_walks, walk_ms, train_ms) = embed(&split.train_graph, plan, key)?;
            let start = Instant::now();
            let out = predict_links(&emb, &split, plan.edge_operator, eval_seed)?;
            Ok(Timings {
                total_walks,
                walk_ms,
                train_ms,
                eval_ms: millis(start),
                accuracy: out.accuracy,
                auc: Some(out.auc),
            })
        }
    }
}

/// Runs one cell; failures are captured in the status column.
pub fn run_cell(graph: &Graph, plan: &BenchmarkPlan, key: CellKey) -> CellResult {
    let fingerprint = fingerprint(plan);
    match execute(graph, plan, &key) {
        Ok(t) => CellResult {
            key,
            total_walks: t.total_walks,
            walk_ms: t.walk_ms,
            train_ms: t.train_ms,
            eval_ms: t.eval_ms,
            accuracy: Some(t.accuracy),
            auc: t.auc,
            status: "ok".into(),
            fingerprint,
        },
        Err(e) => {
            log::error!("cell {} failed: {e}", key.file_name());
            CellResult {
                key,
                total_walks: 0,
                walk_ms: 0.0,
                train_ms: 0.0,
                eval_ms: 0.0,
                accuracy: None,
                auc: None,
                status: format!("error: {e}"),
                fingerprint,
            }
        }
    }
}

/// All cells of the plan in table order: task, walk length, strategy, seed.
pub fn plan_cells(plan: &BenchmarkPlan) -> Vec<CellKey> {
    let mut cells = Vec::new();
    for &task in &plan.tasks {
        for &walk_length in &plan.walk_lengths {
            for &strategy in &plan.strategies {
                for &seed in &plan.seeds {
                    cells.push(CellKey {
                        task,
                        strategy,
                        walk_length,
                        seed,
                    });
                }
            }
        }
    }
    cells
}

fn read_marker(path: &Path, fingerprint: &str, key: &CellKey) -> Option<CellResult> {
    let text = fs::read_to_string(path).ok()?;
    let cell: CellResult = serde_json::from_str(&text).ok()?;
    (cell.is_ok() && cell.fingerprint == fingerprint && cell.key == *key).then_some(cell)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub reports: Vec<EvalReport>,
    pub cells: Vec<CellResult>,
    /// Cells computed in this run.
    pub computed: usize,
    /// Cells taken from existing markers.
    pub reused: usize,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Mean-over-seeds rows for one task with baseline columns filled in.
pub fn aggregate(plan: &BenchmarkPlan, cells: &[CellResult], task: Task) -> Vec<EvalReport> {
    let mut rows = Vec::new();
    for &wl in &plan.walk_lengths {
        for &strategy in &plan.strategies {
            let done: Vec<&CellResult> = cells
                .iter()
                .filter(|c| {
                    c.is_ok()
                        && c.key.task == task
                        && c.key.strategy == strategy
                        && c.key.walk_length == wl
                })
                .collect();
            if done.is_empty() {
                log::warn!("no finished cell for {} {strategy} wl={wl}", task.name());
                continue;
            }
            let acc: Vec<f64> = done.iter().filter_map(|c| c.accuracy).collect();
            let (mean, std) = mean_std(&acc);
            let mut row = EvalReport::new(task, strategy, wl, done[0].total_walks, mean);
            row.accuracy_std = std;
            row.seeds = acc.len();
            if task == Task::Link {
                let aucs: Vec<f64> = done.iter().filter_map(|c| c.auc).collect();
                row.auc = (!aucs.is_empty()).then(|| mean_std(&aucs).0);
                row.operator = Some(plan.edge_operator.to_string());
            }
            rows.push(row);
        }
    }
    apply_baseline(&mut rows);
    rows
}

fn csv_field(s: &str) -> String {
    s.replace([',', '\n'], ";")
}

fn write_outputs(plan: &BenchmarkPlan, cells: &[CellResult], reports: &[EvalReport]) -> Result<()> {
    let out = &plan.output;
    let create = |name: &str| -> Result<(PathBuf, BufWriter<fs::File>)> {
        let path = out.join(name);
        let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        Ok((path, BufWriter::new(f)))
    };
    for &task in &plan.tasks {
        let stem = task_stem(task);
        let rows: Vec<EvalReport> = reports.iter().filter(|r| r.task == task).cloned().collect();

        let (path, mut w) = create(&format!("table_{stem}.csv"))?;
        write_reports_csv(&rows, &mut w).map_err(|e| Error::io(&path, e))?;
        w.flush().map_err(|e| Error::io(&path, e))?;

        let (path, mut w) = create(&format!("sweep_{stem}.csv"))?;
        let io = |e| Error::io(&path, e);
        writeln!(w, "walk_length,strategy,mean_accuracy,stddev,n").map_err(io)?;
        for r in &rows {
            writeln!(
                w,
                "{},{}:{},{},{},{}",
                r.walk_length, r.strategy, r.nwpd_or_fixed, r.accuracy, r.accuracy_std, r.seeds
            )
            .map_err(io)?;
        }
        w.flush().map_err(io)?;

        let path = out.join(format!("report_{stem}.json"));
        let mut json = serde_json::to_string_pretty(&rows)?;
        json.push('\n');
        fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    }

    let (path, mut w) = create("cells.csv")?;
    let io = |e| Error::io(&path, e);
    writeln!(
        w,
        "task,strategy,walk_length,seed,total_walks,walk_ms,train_ms,eval_ms,accuracy,auc,status"
    )
    .map_err(io)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for c in cells {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            task_stem(c.key.task),
            c.key.strategy,
            c.key.walk_length,
            c.key.seed,
            c.total_walks,
            c.walk_ms,
            c.train_ms,
            c.eval_ms,
            opt(c.accuracy),
            opt(c.auc),
            csv_field(&c.status)
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Runs every pending cell of the plan on `plan.workers` threads and writes
/// `table_<task>.csv`, `sweep_<task>.csv`, `report_<task>.json` and
/// `cells.csv` into the output directory.
pub fn run_plan(plan: &BenchmarkPlan) -> Result<BenchOutcome> {
    plan.validate()?;
    let cell_dir = plan.output.join("cells");
    fs::create_dir_all(&cell_dir).map_err(|e| Error::io(&cell_dir, e))?;
    let graph = load_dataset(plan)?;
    let fp = fingerprint(plan);

    let keys = plan_cells(plan);
    let mut slots: Vec<Option<CellResult>> = keys
        .iter()
        .map(|k| read_marker(&cell_dir.join(k.file_name()), &fp, k))
        .collect();
    let pending: Vec<usize> = (0..keys.len()).filter(|&i| slots[i].is_none()).collect();
    let reused = keys.len() - pending.len();
    log::info!(
        "{} cells: {reused} already complete, {} to run",
        keys.len(),
        pending.len()
    );

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let fresh: Vec<(usize, Result<CellResult>)> = pool.install(|| {
        pending
            .par_iter()
            .map(|&i| {
                let cell = run_cell(&graph, plan, keys[i]);
                let marker = cell_dir.join(keys[i].file_name());
                let written = serde_json::to_vec_pretty(&cell)
                    .map_err(Error::from)
                    .and_then(|bytes| write_atomic(&marker, &bytes));
                (i, written.map(|_| cell))
            })
            .collect()
    });
    for (i, cell) in fresh {
        slots[i] = Some(cell?);
    }
    let cells: Vec<CellResult> = slots.into_iter().map(|c| c.expect("every slot filled")).collect();

    let mut reports = Vec::new();
    for &task in &plan.tasks {
        reports.extend(aggregate(plan, &cells, task));
    }
    write_outputs(plan, &cells, &reports)?;
    Ok(BenchOutcome {
        reports,
        cells,
        computed: pending.len(),
        reused,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn karate_plan(output: &Path) -> BenchmarkPlan {
        let mut plan = BenchmarkPlan::new(DatasetSource::Karate, output.to_owned());
        plan.strategies = vec![
            WalkStrategy::DegreeBased {
                walks_per_degree: 1,
            },
            WalkStrategy::Fixed { walks_per_node: 4 },
        ];
        plan.walk_lengths = vec![5];
        plan.seeds = vec![1, 2];
        plan.train.dim = 8;
        plan.train.epochs = 1;
        plan.workers = 2;
        plan
    }

    #[test]
    fn cells_enumerated_in_table_order() {
        let plan = karate_plan(Path::new("unused"));
        let cells = plan_cells(&plan);
        assert_eq!(cells.len(), 4);
        assert_eq!(cells[0].seed, 1);
        assert_eq!(cells[1].seed, 2);
        assert!(cells[2].strategy.is_fixed());
    }

    #[test]
    fn karate_grid_and_resume() {
        let dir = tempfile::tempdir().unwrap();
        let plan = karate_plan(dir.path());
        let first = run_plan(&plan).unwrap();
        assert_eq!(first.computed, 4);
        assert!(first.cells.iter().all(CellResult::is_ok));
        assert_eq!(first.reports.len(), 2);
        assert_eq!(first.reports[0].total_walks, 156);
        assert_eq!(first.reports[1].total_walks, 136);
        assert_eq!(first.reports[1].decrease_pct, Some(0.0));
        let table = fs::read_to_string(dir.path().join("table_nc.csv")).unwrap();
        let cells = fs::read_to_string(dir.path().join("cells.csv")).unwrap();

        let second = run_plan(&plan).unwrap();
        assert_eq!(second.computed, 0);
        assert_eq!(second.reused, 4);
        assert_eq!(fs::read_to_string(dir.path().join("table_nc.csv")).unwrap(), table);
        assert_eq!(fs::read_to_string(dir.path().join("cells.csv")).unwrap(), cells);
    }

    #[test]
    fn changed_config_invalidates_markers() {
        let dir = tempfile::tempdir().unwrap();
        let mut plan = karate_plan(dir.path());
        plan.seeds = vec![3];
        run_plan(&plan).unwrap();
        plan.train.dim = 6;
        assert_eq!(run_plan(&plan).unwrap().computed, 2);
    }
}

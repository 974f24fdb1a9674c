use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::embedding::TrainConfig;
use crate::error::{Error, Result};
use crate::eval::{EdgeOperator, Task};
use crate::walk::WalkStrategy;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    Karate,
    EdgeList(PathBuf),
}

impl DatasetSource {
    /// `karate` names the built-in graph; anything else is an edge-list path
    /// relative to `base`.
    pub fn parse(value: &str, base: &Path) -> Self {
        if value.eq_ignore_ascii_case("karate") {
            DatasetSource::Karate
        } else {
            DatasetSource::EdgeList(base.join(value))
        }
    }
}

/// Benchmark grid: every strategy × walk length × seed × task.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkPlan {
    pub dataset: DatasetSource,
    pub labels: Option<PathBuf>,
    pub use_lcc: bool,
    pub strategies: Vec<WalkStrategy>,
    pub walk_lengths: Vec<usize>,
    pub p: f64,
    pub q: f64,
    pub train: TrainConfig,
    pub tasks: Vec<Task>,
    pub seeds: Vec<u64>,
    pub output: PathBuf,
    /// Cells evaluated concurrently.
    pub workers: usize,
    /// Fraction of each class used for training in node classification.
    pub split_ratio: f64,
    pub link_test_fraction: f64,
    pub edge_operator: EdgeOperator,
}

impl BenchmarkPlan {
    /// Plan with library defaults and the given dataset and output.
    pub fn new(dataset: DatasetSource, output: PathBuf) -> Self {
        BenchmarkPlan {
            dataset,
            labels: None,
            use_lcc: true,
            strategies: Vec::new(),
            walk_lengths: Vec::new(),
            p: 1.0,
            q: 1.0,
            train: TrainConfig::default(),
            tasks: vec![Task::Classification],
            seeds: Vec::new(),
            output,
            workers: 1,
            split_ratio: 0.8,
            link_test_fraction: 0.2,
            edge_operator: EdgeOperator::Hadamard,
        }
    }

    pub fn from_file(path: &Path, default_output: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, path, base, default_output)
    }

    /// Parses `key = value` lines; lists are comma separated and `#` starts a
    /// comment. Relative paths resolve against `base`.
    pub fn parse(text: &str, origin: &Path, base: &Path, default_output: &Path) -> Result<Self> {
        let mut plan = BenchmarkPlan::new(DatasetSource::Karate, default_output.to_owned());
        let mut seen_keys = HashSet::new();
        let mut have_dataset = false;
        for (i, raw) in text.lines().enumerate() {
            let err = |message: String| Error::Parse {
                path: origin.to_owned(),
                line: i + 1,
                message,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen_keys.insert(key.to_owned()) {
                return Err(err(format!("duplicate key {key}")));
            }
            let wrap = |e: Error| err(format!("{key}: {e}"));
            match key {
                "dataset" => {
                    plan.dataset = DatasetSource::parse(value, base);
                    have_dataset = true;
                }
                "labels" => plan.labels = Some(base.join(value)),
                "use_lcc" => plan.use_lcc = scalar(value).map_err(wrap)?,
                "strategies" => plan.strategies = list(value).map_err(wrap)?,
                "walk_lengths" => plan.walk_lengths = list(value).map_err(wrap)?,
                "p" => plan.p = scalar(value).map_err(wrap)?,
                "q" => plan.q = scalar(value).map_err(wrap)?,
                "dim" => plan.train.dim = scalar(value).map_err(wrap)?,
                "window" => plan.train.window = scalar(value).map_err(wrap)?,
                "negatives" => plan.train.negatives = scalar(value).map_err(wrap)?,
                "epochs" => plan.train.epochs = scalar(value).map_err(wrap)?,
                "learning_rate" => plan.train.learning_rate = scalar(value).map_err(wrap)?,
                "lr_floor" => plan.train.lr_floor = scalar(value).map_err(wrap)?,
                "tasks" => {
                    plan.tasks = split_list(value)
                        .map(parse_task)
                        .collect::<Result<_>>()
                        .map_err(wrap)?
                }
                "seeds" => plan.seeds = list(value).map_err(wrap)?,
                "output" => plan.output = base.join(value),
                "workers" => plan.workers = scalar(value).map_err(wrap)?,
                "split_ratio" => plan.split_ratio = scalar(value).map_err(wrap)?,
                "link_test_fraction" => plan.link_test_fraction = scalar(value).map_err(wrap)?,
                "edge_operator" => plan.edge_operator = value.parse().map_err(wrap)?,
                _ => return Err(err(format!("unknown key {key}"))),
            }
        }
        if !have_dataset {
            return Err(Error::InvalidConfig("plan has no dataset".into()));
        }
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.strategies.is_empty() {
            return bad("strategies list is empty");
        }
        if self.walk_lengths.is_empty() {
            return bad("walk_lengths list is empty");
        }
        if self.seeds.is_empty() {
            return bad("seeds list is empty");
        }
        if self.tasks.is_empty() {
            return bad("tasks list is empty");
        }
        if self.walk_lengths.contains(&0) {
            return bad("walk lengths must be at least 1");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad("split_ratio must lie in (0, 1)");
        }
        if !(self.link_test_fraction > 0.0 && self.link_test_fraction < 0.5) {
            return bad("link_test_fraction must lie in (0, 0.5)");
        }
        if !(self.p > 0.0 && self.q > 0.0) {
            return bad("p and q must be positive");
        }
        for s in &self.strategies {
            s.validate()?;
        }
        self.train.validate()
    }
}

fn parse_task(s: &str) -> Result<Task> {
    match s {
        "nc" | "classification" => Ok(Task::Classification),
        "lp" | "link" => Ok(Task::Link),
        _ => Err(Error::InvalidConfig(format!(
            "unknown task {s:?} (expected nc or lp)"
        ))),
    }
}

fn split_list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn scalar<T: FromStr>(value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("cannot parse {value:?}")))
}

fn list<T: FromStr>(value: &str) -> Result<Vec<T>> {
    split_list(value).map(scalar).collect()
}

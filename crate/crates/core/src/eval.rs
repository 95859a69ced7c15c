//! Batch evaluation: one result row per (problem, method), CSV output and
//! per-method summaries.

use std::fmt::{self, Write as _};
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::EmbeddingTable;
use crate::heuristics::{HeuristicParams, LearningProblem};
use crate::kb::KnowledgeBase;
use crate::qnet::{DrillScorer, QNetworkParams};
use crate::search::{learn, CeloeScorer, LearnResult, OcelScorer, RandomScorer, Scorer, SearchConfig, SearchError};

pub const CSV_HEADER: &str = "lp_id,method,concept,length,f1,accuracy,runtime_s,expressions_tested";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Drill,
    Celoe,
    Ocel,
    Random,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Drill, Method::Celoe, Method::Ocel, Method::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Drill => "drill",
            Method::Celoe => "celoe",
            Method::Ocel => "ocel",
            Method::Random => "random",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown method `{0}` (expected drill, celoe, ocel or random)")]
pub struct UnknownMethod(pub String);

impl FromStr for Method {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| UnknownMethod(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub lp_id: String,
    pub method: Method,
    pub concept: String,
    pub length: usize,
    pub f1: f64,
    pub accuracy: f64,
    pub runtime_s: f64,
    pub expressions_tested: usize,
}

impl EvalRow {
    pub fn from_result(lp_id: impl Into<String>, method: Method, result: &LearnResult) -> Self {
        EvalRow {
            lp_id: lp_id.into(),
            method,
            concept: result.best_concept.to_string(),
            length: result.best_length,
            f1: result.f1,
            accuracy: result.accuracy,
            runtime_s: result.runtime_seconds,
            expressions_tested: result.expressions_tested,
        }
    }

    /// Equality on everything except the runtime.
    pub fn same_outcome(&self, other: &EvalRow) -> bool {
        EvalRow { runtime_s: 0.0, ..self.clone() } == EvalRow { runtime_s: 0.0, ..other.clone() }
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("method drill needs a trained model and embeddings")]
    MissingModel,
    #[error("{0}")]
    Model(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Everything the four methods need besides the problem itself.
pub struct EvalSettings<'a> {
    pub search: SearchConfig,
    pub celoe: HeuristicParams,
    pub ocel: HeuristicParams,
    pub drill: Option<(&'a QNetworkParams, &'a EmbeddingTable)>,
}

/// Runs a single search. The random scorer is seeded from the search seed
/// and `problem_index`.
pub fn run_method(
    kb: &KnowledgeBase,
    lp: &LearningProblem,
    problem_index: usize,
    method: Method,
    settings: &EvalSettings<'_>,
) -> Result<LearnResult, EvalError> {
    let mut scorer: Box<dyn Scorer + '_> = match method {
        Method::Celoe => Box::new(CeloeScorer::new(settings.celoe)?),
        Method::Ocel => Box::new(OcelScorer::new(settings.ocel)?),
        Method::Random => Box::new(RandomScorer::new(settings.search.seed.wrapping_add(problem_index as u64))),
        Method::Drill => {
            let (params, table) = settings.drill.ok_or(EvalError::MissingModel)?;
            Box::new(DrillScorer::new(params, table).map_err(|e| EvalError::Model(e.to_string()))?)
        }
    };
    Ok(learn(kb, lp, scorer.as_mut(), &settings.search)?)
}

/// CSV writer that flushes after every row.
pub struct CsvSink<W: Write> {
    writer: csv::Writer<W>,
}

impl<W: Write> CsvSink<W> {
    pub fn new(inner: W) -> Self {
        CsvSink { writer: csv::WriterBuilder::new().has_headers(true).from_writer(inner) }
    }

    pub fn write(&mut self, row: &EvalRow) -> Result<(), EvalError> {
        self.writer.serialize(row)?;
        self.writer.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> Result<W, EvalError> {
        self.writer.into_inner().map_err(|e| EvalError::Io(e.into_error()))
    }
}

/// Evaluates every method on every problem, in input order, handing each row
/// to `emit` as soon as it is ready.
pub fn evaluate(
    kb: &KnowledgeBase,
    problems: &[(String, LearningProblem)],
    methods: &[Method],
    settings: &EvalSettings<'_>,
    mut emit: impl FnMut(&EvalRow) -> Result<(), EvalError>,
) -> Result<Vec<EvalRow>, EvalError> {
    if methods.contains(&Method::Drill) && settings.drill.is_none() {
        return Err(EvalError::MissingModel);
    }
    let mut rows = Vec::with_capacity(problems.len() * methods.len());
    for (index, (id, lp)) in problems.iter().enumerate() {
        for &method in methods {
            let result = run_method(kb, lp, index, method, settings)?;
            let row = EvalRow::from_result(id.clone(), method, &result);
            log::info!("{id} {method}: f1={} expressions={}", row.f1, row.expressions_tested);
            emit(&row)?;
            rows.push(row);
        }
    }
    Ok(rows)
}

pub fn read_rows(reader: impl std::io::Read) -> Result<Vec<EvalRow>, EvalError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(EvalError::Io(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("unexpected header `{}`", header.join(",")),
        )));
    }
    Ok(rdr.deserialize().collect::<Result<_, _>>()?)
}

pub fn load_rows(path: impl AsRef<Path>) -> Result<Vec<EvalRow>, EvalError> {
    read_rows(std::fs::File::open(path)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub problems: usize,
    pub solved: usize,
    pub mean_f1: f64,
    pub mean_accuracy: f64,
    pub mean_length: f64,
    pub mean_runtime_s: f64,
    pub median_runtime_s: f64,
    pub mean_expressions: f64,
    pub median_expressions: f64,
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// One summary per method, in order of first appearance.
pub fn summarize(rows: &[EvalRow]) -> Vec<MethodSummary> {
    let mut methods: Vec<Method> = Vec::new();
    for row in rows {
        if !methods.contains(&row.method) {
            methods.push(row.method);
        }
    }
    methods
        .into_iter()
        .map(|method| {
            let rows: Vec<&EvalRow> = rows.iter().filter(|r| r.method == method).collect();
            let column = |f: fn(&EvalRow) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<f64>>();
            MethodSummary {
                method,
                problems: rows.len(),
                solved: rows.iter().filter(|r| r.f1 == 1.0).count(),
                mean_f1: mean(&column(|r| r.f1)),
                mean_accuracy: mean(&column(|r| r.accuracy)),
                mean_length: mean(&column(|r| r.length as f64)),
                mean_runtime_s: mean(&column(|r| r.runtime_s)),
                median_runtime_s: median(&mut column(|r| r.runtime_s)),
                mean_expressions: mean(&column(|r| r.expressions_tested as f64)),
                median_expressions: median(&mut column(|r| r.expressions_tested as f64)),
            }
        })
        .collect()
}

pub fn format_summary(summaries: &[MethodSummary]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<8} {:>5} {:>7} {:>8} {:>8} {:>8} {:>10} {:>10} {:>10} {:>10}",
        "method", "lps", "solved", "F1 mean", "Acc mean", "len mean", "T mean", "T median", "Exp mean", "Exp median"
    )
    .unwrap();
    for s in summaries {
        writeln!(
            out,
            "{:<8} {:>5} {:>7} {:>8.3} {:>8.3} {:>8.2} {:>10.3} {:>10.3} {:>10.1} {:>10.1}",
            s.method.as_str(),
            s.problems,
            s.solved,
            s.mean_f1,
            s.mean_accuracy,
            s.mean_length,
            s.mean_runtime_s,
            s.median_runtime_s,
            s.mean_expressions,
            s.median_expressions
        )
        .unwrap();
    }
    out
}

//! LHS/RHS size sweeps and synthetic data for timing studies.

use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::embedding::{validate_with_index, Statement, StatementError, Verdict};
use crate::oracle::{naive_validate, OracleError, SearchLimits};
use crate::order::{AttributeList, Operator};
use crate::relation::{build_missing_index, load_relation, ColumnKind, LoadOptions, Relation, RelationError, Value};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid sweep configuration: {0}")]
    Config(String),
    #[error("invalid synthetic plan: {0}")]
    Plan(String),
    #[error(transparent)]
    Relation(#[from] RelationError),
    #[error(transparent)]
    Statement(#[from] StatementError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lhs,
    Rhs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    ValidEod,
    Naive,
    Both,
}

impl Algorithm {
    fn runs_valid_eod(self) -> bool {
        matches!(self, Algorithm::ValidEod | Algorithm::Both)
    }

    fn runs_naive(self) -> bool {
        matches!(self, Algorithm::Naive | Algorithm::Both)
    }
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub dataset: PathBuf,
    pub load: LoadOptions,
    /// Which side's size varies.
    pub side: Side,
    pub sizes: Vec<usize>,
    /// Size of the side held fixed.
    pub other_size: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub op: Operator,
    /// Per-run budget for the exhaustive search.
    pub timeout: Duration,
}

impl SweepConfig {
    pub fn new(dataset: impl Into<PathBuf>) -> Self {
        SweepConfig {
            dataset: dataset.into(),
            load: LoadOptions::default(),
            side: Side::Lhs,
            sizes: vec![1],
            other_size: 1,
            repetitions: 10,
            seed: 0,
            algorithm: Algorithm::ValidEod,
            op: Operator::Leq,
            timeout: Duration::from_secs(60),
        }
    }

    fn check(&self, width: usize) -> Result<(), BenchError> {
        if self.sizes.is_empty() || self.sizes.contains(&0) || self.other_size == 0 {
            return Err(BenchError::Config("sizes must be at least 1".into()));
        }
        if self.repetitions == 0 {
            return Err(BenchError::Config("repetitions must be at least 1".into()));
        }
        if let Some(&too_big) = self.sizes.iter().find(|&&s| s + self.other_size > width) {
            return Err(BenchError::Config(format!(
                "size {too_big} plus {} on the other side exceeds {width} attributes",
                self.other_size
            )));
        }
        Ok(())
    }
}

/// One validation run. Serialized field names are part of the output format.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub size: usize,
    pub rep: usize,
    pub side: Side,
    /// Attribute names joined with `;`.
    pub lhs: String,
    pub rhs: String,
    pub verdict: String,
    pub s_count: usize,
    pub m_count: usize,
    pub ignored: Option<usize>,
    #[serde(rename = "time_validEOD_us")]
    pub time_valid_eod_us: Option<u64>,
    pub time_naive_us: Option<u64>,
    pub naive_timeout: bool,
}

impl SweepRow {
    /// Row without wall-clock fields, for reproducibility checks.
    pub fn without_times(&self) -> SweepRow {
        SweepRow {
            time_valid_eod_us: self.time_valid_eod_us.map(|_| 0),
            time_naive_us: self.time_naive_us.map(|_| 0),
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SizeSummary {
    pub size: usize,
    pub rows: usize,
    pub mean_time_valid_eod_us: Option<f64>,
    pub mean_time_naive_us: Option<f64>,
    pub naive_timeouts: usize,
    pub mean_s: f64,
    pub mean_m: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub summary: Vec<SizeSummary>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn summarize(rows: &[SweepRow]) -> Vec<SizeSummary> {
    let mut sizes: Vec<usize> = rows.iter().map(|r| r.size).collect();
    sizes.sort_unstable();
    sizes.dedup();
    sizes
        .into_iter()
        .map(|size| {
            let group: Vec<&SweepRow> = rows.iter().filter(|r| r.size == size).collect();
            SizeSummary {
                size,
                rows: group.len(),
                mean_time_valid_eod_us: mean(group.iter().filter_map(|r| r.time_valid_eod_us).map(|t| t as f64)),
                mean_time_naive_us: mean(group.iter().filter_map(|r| r.time_naive_us).map(|t| t as f64)),
                naive_timeouts: group.iter().filter(|r| r.naive_timeout).count(),
                mean_s: mean(group.iter().map(|r| r.s_count as f64)).unwrap_or(0.0),
                mean_m: mean(group.iter().map(|r| r.m_count as f64)).unwrap_or(0.0),
            }
        })
        .collect()
}

/// Loads the configured dataset and runs the sweep on it.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReport, BenchError> {
    let file = File::open(&cfg.dataset).map_err(RelationError::from)?;
    let r = load_relation(BufReader::new(file), &cfg.load)?;
    run_sweep_on(&r, cfg)
}

/// For each size and repetition, draws disjoint random LHS and RHS lists,
/// validates `X ∪ Y: X ↦ Y` and records counts and timings.
pub fn run_sweep_on(r: &Relation, cfg: &SweepConfig) -> Result<SweepReport, BenchError> {
    cfg.check(r.width())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let idx = build_missing_index(r);
    let limits = SearchLimits {
        free_cap: usize::MAX,
        timeout: Some(cfg.timeout),
    };
    let mut rows = Vec::with_capacity(cfg.sizes.len() * cfg.repetitions);
    for &size in &cfg.sizes {
        let (lhs_len, rhs_len) = match cfg.side {
            Side::Lhs => (size, cfg.other_size),
            Side::Rhs => (cfg.other_size, size),
        };
        for rep in 0..cfg.repetitions {
            let drawn = sample(&mut rng, r.width(), lhs_len + rhs_len).into_vec();
            let lhs = AttributeList::new(drawn[..lhs_len].to_vec()).expect("distinct draw");
            let rhs = AttributeList::new(drawn[lhs_len..].to_vec()).expect("distinct draw");
            let stmt = Statement::new(r, lhs, rhs, cfg.op, None)?;

            let mut row = SweepRow {
                size,
                rep,
                side: cfg.side,
                lhs: stmt.lhs().names(r).join(";"),
                rhs: stmt.rhs().names(r).join(";"),
                verdict: String::new(),
                s_count: 0,
                m_count: 0,
                ignored: None,
                time_valid_eod_us: None,
                time_naive_us: None,
                naive_timeout: false,
            };
            let record = |verdict: &Verdict, d: &crate::embedding::Diagnostics, row: &mut SweepRow| {
                row.verdict = verdict.label().to_string();
                row.s_count = d.swap_count();
                row.m_count = d.merge_count();
                row.ignored = d.ignored;
            };

            if cfg.algorithm.runs_valid_eod() {
                let start = Instant::now();
                let out = validate_with_index(r, &idx, &stmt)?;
                row.time_valid_eod_us = Some(start.elapsed().as_micros() as u64);
                record(&out.verdict, &out.diagnostics, &mut row);
            }
            if cfg.algorithm.runs_naive() {
                let start = Instant::now();
                match naive_validate(r, &stmt, limits) {
                    Ok(out) => {
                        row.time_naive_us = Some(start.elapsed().as_micros() as u64);
                        if !cfg.algorithm.runs_valid_eod() {
                            record(&out.verdict, &out.diagnostics, &mut row);
                        }
                    }
                    Err(OracleError::Timeout { .. }) => {
                        row.naive_timeout = true;
                        if !cfg.algorithm.runs_valid_eod() {
                            row.verdict = "timeout".into();
                        }
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            rows.push(row);
        }
    }
    let summary = summarize(&rows);
    Ok(SweepReport { rows, summary })
}

/// Parameters of a synthetic relation with planted violations.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub rows: usize,
    /// At least 2: columns `x` and `y`, then `a2`, `a3`, ...
    pub attrs: usize,
    /// Probability that a cell outside `x` and `y` is null.
    pub null_rate: f64,
    /// Planted swap pairs for `x ↦ y`.
    pub swaps: usize,
    /// Planted pairs with equal `x` and different `y` (the `M` pairs of
    /// `x ↦≤ y`).
    pub merges: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            rows: 1000,
            attrs: 10,
            null_rate: 0.1,
            swaps: 0,
            merges: 0,
            seed: 0,
        }
    }
}

/// Generates a relation where every column is a non-decreasing function of
/// a hidden per-row rank, so all order dependencies among columns hold
/// apart from splits between columns of different granularity. Column `x`
/// and `y` equal the rank; column `aj` is `rank / (j − 1)`. Planted
/// violations touch disjoint adjacent rank pairs, so each is the only
/// violation its tuples take part in for `x ↦ y`. Rows are shuffled.
pub fn gen_synthetic(cfg: &SyntheticConfig) -> Result<Relation, BenchError> {
    if cfg.rows == 0 {
        return Err(RelationError::Empty.into());
    }
    if cfg.attrs < 2 {
        return Err(BenchError::Plan("need at least the two columns x and y".into()));
    }
    if !(0.0..1.0).contains(&cfg.null_rate) {
        return Err(BenchError::Plan(format!("null rate {} outside [0, 1)", cfg.null_rate)));
    }
    let blocks = cfg.rows / 2;
    if cfg.swaps + cfg.merges > blocks {
        return Err(BenchError::Plan(format!(
            "{} planted pairs need {} rows, have {}",
            cfg.swaps + cfg.merges,
            2 * (cfg.swaps + cfg.merges),
            cfg.rows
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = cfg.rows;
    let mut x: Vec<u64> = (0..n as u64).collect();
    let mut y: Vec<u64> = (0..n as u64).collect();
    let planted = sample(&mut rng, blocks, cfg.swaps + cfg.merges).into_vec();
    for (i, &b) in planted.iter().enumerate() {
        let (lo, hi) = (2 * b, 2 * b + 1);
        if i < cfg.swaps {
            y.swap(lo, hi);
        } else {
            x[hi] = x[lo];
        }
    }
    // row position -> hidden rank
    let order = sample(&mut rng, n, n).into_vec();

    let num = |v: u64| Value::number(&v.to_string()).expect("integer");
    let mut names = vec!["x".to_string(), "y".to_string()];
    let mut columns = vec![
        order.iter().map(|&k| num(x[k])).collect::<Vec<_>>(),
        order.iter().map(|&k| num(y[k])).collect(),
    ];
    for j in 2..cfg.attrs {
        let step = (j - 1) as u64;
        names.push(format!("a{j}"));
        columns.push(
            order
                .iter()
                .map(|&k| {
                    if cfg.null_rate > 0.0 && rng.random_bool(cfg.null_rate) {
                        Value::Null
                    } else {
                        num(k as u64 / step)
                    }
                })
                .collect(),
        );
    }
    let kinds = vec![ColumnKind::Number; names.len()];
    Ok(Relation::from_columns(names, kinds, columns)?)
}

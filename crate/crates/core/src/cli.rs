//! Command-line front end.
//!
//! Exit codes: 0 the dependency holds (or the command finished), 1 it does
//! not hold, 2 usage or data error, 3 exhaustive-search cap refusal.

use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::bench::{gen_synthetic, run_sweep, Algorithm, Side, SweepConfig, SyntheticConfig};
use crate::embedding::{validate_eod, Statement, ValidationOutcome, Verdict};
use crate::oracle::{greedy_min_ignored, min_ignored_embedding, naive_validate, OracleError, SearchLimits};
use crate::order::{Operator, ViolationPair};
use crate::relation::{build_missing_index, load_relation, write_delimited, Embedding, LoadOptions, Relation, DEFAULT_NULL_TOKENS};
use crate::Error;

/// Environment variable holding comma-separated default null tokens.
pub const NULL_TOKENS_ENV: &str = "EOD_NULL_TOKENS";

pub const EXIT_HOLDS: i32 = 0;
pub const EXIT_NOT_VALID: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CAP: i32 = 3;

/// Validate embedded order dependencies on delimited data with missing values.
#[derive(Parser, Debug)]
#[command(name = "eod", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a dependency and search for an embedding that makes it hold.
    Validate {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        statement: StatementArgs,
        #[arg(long, value_enum, default_value_t = OutputMode::Human)]
        output: OutputMode,
    },
    /// Compare the validator with exhaustive and greedy references.
    Oracle {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        statement: StatementArgs,
        /// Maximum attributes outside the embedding for exhaustive search.
        #[arg(long, default_value_t = crate::oracle::DEFAULT_FREE_CAP)]
        cap: usize,
        /// Seconds allowed for the exhaustive validation.
        #[arg(long)]
        timeout: Option<f64>,
        #[arg(long, value_enum, default_value_t = OutputMode::Human)]
        output: OutputMode,
    },
    /// Summarize a dataset: kinds and missing values per attribute.
    Inspect {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum, default_value_t = OutputMode::Human)]
        output: OutputMode,
    },
    /// Time validation over random LHS/RHS draws of growing size.
    Bench {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_enum, default_value_t = SideArg::Lhs)]
        side: SideArg,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        sizes: Vec<usize>,
        /// Size of the side that stays fixed.
        #[arg(long, default_value_t = 1)]
        other: usize,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = AlgorithmArg::ValidEod)]
        algorithm: AlgorithmArg,
        #[arg(long, value_enum, default_value_t = OpArg::Leq)]
        op: OpArg,
        /// Seconds allowed per exhaustive run.
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
        /// Also write the rows as delimited text to this file.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = OutputMode::Human)]
        output: OutputMode,
    },
    /// Generate a synthetic relation with planted violations.
    Gen {
        #[arg(long, default_value_t = 1000)]
        rows: usize,
        #[arg(long, default_value_t = 10)]
        attrs: usize,
        #[arg(long, default_value_t = 0.1)]
        null_rate: f64,
        #[arg(long, default_value_t = 0)]
        swaps: usize,
        #[arg(long, default_value_t = 0)]
        merges: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Spelling of missing values in the output.
        #[arg(long, default_value = "")]
        null_token: String,
        #[arg(long, default_value_t = ',')]
        delimiter: char,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Delimited text file to read.
    pub dataset: PathBuf,
    /// Cell spelling treated as missing; repeatable. Defaults come from
    /// EOD_NULL_TOKENS or the built-in set.
    #[arg(long = "null-token")]
    pub null_tokens: Vec<String>,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// The first line is data; attributes are named 1, 2, ...
    #[arg(long)]
    pub no_header: bool,
}

#[derive(Args, Debug, Clone)]
pub struct StatementArgs {
    /// Left-hand side attributes, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub lhs: Vec<String>,
    /// Right-hand side attributes, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub rhs: Vec<String>,
    /// Embedding attributes; defaults to lhs ∪ rhs.
    #[arg(long, value_delimiter = ',')]
    pub embedding: Option<Vec<String>>,
    #[arg(long, value_enum, default_value_t = OpArg::Leq)]
    pub op: OpArg,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputMode {
    Human,
    Records,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum OpArg {
    Leq,
    Lt,
}

impl From<OpArg> for Operator {
    fn from(op: OpArg) -> Self {
        match op {
            OpArg::Leq => Operator::Leq,
            OpArg::Lt => Operator::Lt,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum SideArg {
    Lhs,
    Rhs,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum AlgorithmArg {
    #[value(name = "valid-eod", alias = "validEOD")]
    ValidEod,
    Naive,
    Both,
}

impl DataArgs {
    fn load_options(&self) -> Result<LoadOptions, Error> {
        let null_tokens = if !self.null_tokens.is_empty() {
            self.null_tokens.clone()
        } else if let Ok(env) = std::env::var(NULL_TOKENS_ENV) {
            env.split(',').map(str::to_string).collect()
        } else {
            DEFAULT_NULL_TOKENS.iter().map(|s| s.to_string()).collect()
        };
        Ok(LoadOptions {
            delimiter: delimiter_byte(self.delimiter)?,
            null_tokens,
            header: !self.no_header,
        })
    }

    fn load(&self) -> Result<Relation, Error> {
        let file = File::open(&self.dataset).map_err(|e| Error::Usage(format!("{}: {e}", self.dataset.display())))?;
        Ok(load_relation(BufReader::new(file), &self.load_options()?)?)
    }
}

fn delimiter_byte(c: char) -> Result<u8, Error> {
    u8::try_from(c)
        .ok()
        .filter(u8::is_ascii)
        .ok_or_else(|| Error::Usage(format!("delimiter `{c}` is not a single ASCII character")))
}

impl StatementArgs {
    fn resolve(&self, r: &Relation) -> Result<Statement, Error> {
        Ok(Statement::resolve(
            r,
            &self.lhs,
            &self.rhs,
            self.op.into(),
            self.embedding.as_deref(),
        )?)
    }
}

fn seconds(s: f64) -> Result<Duration, Error> {
    Duration::try_from_secs_f64(s).map_err(|_| Error::Usage(format!("invalid timeout {s}")))
}

fn names(e: &Embedding, r: &Relation) -> Vec<String> {
    e.names(r).into_iter().map(str::to_string).collect()
}

fn tuple_values(r: &Relation, stmt: &Statement, t: usize) -> String {
    let show = |list: &crate::order::AttributeList| {
        list.iter()
            .map(|a| format!("{}={}", r.name(a), r.value(t, a)))
            .collect::<Vec<_>>()
            .join(", ")
    };
    format!("t{} ({}; {})", t + 1, show(stmt.lhs()), show(stmt.rhs()))
}

fn witness_json(r: &Relation, p: &ViolationPair) -> serde_json::Value {
    json!({
        "s": p.s,
        "t": p.t,
        "kind": p.kind,
        "s_values": r.row(p.s).iter().map(|v| v.to_string()).collect::<Vec<_>>(),
        "t_values": r.row(p.t).iter().map(|v| v.to_string()).collect::<Vec<_>>(),
    })
}

fn exit_for(outcome: &ValidationOutcome) -> i32 {
    if outcome.holds() {
        EXIT_HOLDS
    } else {
        EXIT_NOT_VALID
    }
}

/// Runs one invocation, writing reports to `out` and diagnostics to `err`.
/// Returns the process exit code.
pub fn run<W: Write, E: Write>(cli: Cli, out: &mut W, err: &mut E) -> i32 {
    match dispatch(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::Oracle(OracleError::CapExceeded { .. }) => EXIT_CAP,
                _ => EXIT_USAGE,
            }
        }
    }
}

fn dispatch<W: Write>(cli: Cli, out: &mut W) -> Result<i32, Error> {
    match cli.command {
        Command::Validate { data, statement, output } => cmd_validate(&data, &statement, output, out),
        Command::Oracle {
            data,
            statement,
            cap,
            timeout,
            output,
        } => {
            let limits = SearchLimits {
                free_cap: cap,
                timeout: timeout.map(seconds).transpose()?,
            };
            cmd_oracle(&data, &statement, limits, output, out)
        }
        Command::Inspect { data, output } => cmd_inspect(&data, output, out),
        Command::Bench {
            data,
            side,
            sizes,
            other,
            reps,
            seed,
            algorithm,
            op,
            timeout,
            csv,
            output,
        } => {
            let cfg = SweepConfig {
                dataset: data.dataset.clone(),
                load: data.load_options()?,
                side: match side {
                    SideArg::Lhs => Side::Lhs,
                    SideArg::Rhs => Side::Rhs,
                },
                sizes,
                other_size: other,
                repetitions: reps,
                seed,
                algorithm: match algorithm {
                    AlgorithmArg::ValidEod => Algorithm::ValidEod,
                    AlgorithmArg::Naive => Algorithm::Naive,
                    AlgorithmArg::Both => Algorithm::Both,
                },
                op: op.into(),
                timeout: seconds(timeout)?,
            };
            cmd_bench(&cfg, csv, output, out)
        }
        Command::Gen {
            rows,
            attrs,
            null_rate,
            swaps,
            merges,
            seed,
            null_token,
            delimiter,
            out: path,
        } => {
            let cfg = SyntheticConfig {
                rows,
                attrs,
                null_rate,
                swaps,
                merges,
                seed,
            };
            cmd_gen(&cfg, &null_token, delimiter_byte(delimiter)?, path, out)
        }
    }
}

pub fn cmd_validate<W: Write>(
    data: &DataArgs,
    statement: &StatementArgs,
    output: OutputMode,
    out: &mut W,
) -> Result<i32, Error> {
    let r = data.load()?;
    let stmt = statement.resolve(&r)?;
    let outcome = validate_eod(&r, &stmt)?;
    let d = &outcome.diagnostics;
    match output {
        OutputMode::Records => {
            let record = json!({
                "statement": stmt.display(&r).to_string(),
                "verdict": outcome.verdict.label(),
                "embedding": outcome.embedding(&stmt).map(|e| names(e, &r)),
                "witness": outcome.witness().map(|p| witness_json(&r, &p)),
                "s_count": d.swap_count(),
                "m_count": d.merge_count(),
                "ignored": d.ignored,
                "iterations": d.iterations,
                "elapsed_us": d.elapsed.as_micros() as u64,
            });
            writeln!(out, "{record}")?;
        }
        OutputMode::Human => {
            writeln!(out, "statement: {}", stmt.display(&r))?;
            match &outcome.verdict {
                Verdict::Valid => writeln!(out, "verdict: valid")?,
                Verdict::ValidWith(e) => writeln!(out, "verdict: valid with {}", e.display(&r))?,
                Verdict::NotValid(p) => {
                    writeln!(out, "verdict: not valid")?;
                    writeln!(out, "witness: {p}")?;
                    writeln!(out, "  {}", tuple_values(&r, &stmt, p.s))?;
                    writeln!(out, "  {}", tuple_values(&r, &stmt, p.t))?;
                }
            }
            writeln!(out, "|S|: {}  |M|: {}", d.swap_count(), d.merge_count())?;
            if let Some(ignored) = d.ignored {
                writeln!(out, "ignored tuples: {ignored}")?;
            }
            writeln!(out, "iterations: {}", d.iterations)?;
            writeln!(out, "elapsed: {:?}", d.elapsed)?;
        }
    }
    Ok(exit_for(&outcome))
}

pub fn cmd_oracle<W: Write>(
    data: &DataArgs,
    statement: &StatementArgs,
    limits: SearchLimits,
    output: OutputMode,
    out: &mut W,
) -> Result<i32, Error> {
    let r = data.load()?;
    let stmt = statement.resolve(&r)?;
    let heuristic = validate_eod(&r, &stmt)?;
    // cap refusal comes first so nothing partial is printed
    let optimum = min_ignored_embedding(&r, &stmt, limits.free_cap)?;
    let naive = match naive_validate(&r, &stmt, limits) {
        Ok(o) => Some(o),
        Err(OracleError::Timeout { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let greedy = greedy_min_ignored(&r, &stmt)?;

    let best = optimum.as_ref().map(|(_, i)| *i);
    let gap = |ignored: Option<usize>| ignored.zip(best).map(|(a, b)| a - b);
    let heuristic_gap = gap(heuristic.diagnostics.ignored);
    let greedy_gap = gap(greedy.as_ref().map(|(_, i)| *i));

    let outcome_row = |label: &str, o: Option<&ValidationOutcome>| match o {
        Some(o) => json!({
            "algorithm": label,
            "verdict": o.verdict.label(),
            "embedding": o.embedding(&stmt).map(|e| names(e, &r)),
            "ignored": o.diagnostics.ignored,
            "elapsed_us": o.diagnostics.elapsed.as_micros() as u64,
        }),
        None => json!({ "algorithm": label, "verdict": "timeout" }),
    };
    let search_row = |label: &str, found: &Option<(Embedding, usize)>| match found {
        Some((e, ignored)) => json!({
            "algorithm": label,
            "verdict": "holds",
            "embedding": names(e, &r),
            "ignored": ignored,
        }),
        None => json!({ "algorithm": label, "verdict": "none" }),
    };
    let rows = [
        outcome_row("validEOD", Some(&heuristic)),
        outcome_row("naive", naive.as_ref()),
        search_row("min_ignored", &optimum),
        search_row("greedy", &greedy),
    ];
    match output {
        OutputMode::Records => {
            for row in &rows {
                writeln!(out, "{row}")?;
            }
            writeln!(out, "{}", json!({ "gap_validEOD": heuristic_gap, "gap_greedy": greedy_gap }))?;
        }
        OutputMode::Human => {
            writeln!(out, "statement: {}", stmt.display(&r))?;
            writeln!(out, "{:<12} {:<11} {:<24} {:>8}", "algorithm", "verdict", "embedding", "ignored")?;
            for row in &rows {
                let embedding = row["embedding"]
                    .as_array()
                    .map(|a| {
                        let names: Vec<&str> = a.iter().filter_map(|v| v.as_str()).collect();
                        format!("{{{}}}", names.join(","))
                    })
                    .unwrap_or_else(|| "-".into());
                let ignored = row["ignored"].as_u64().map_or("-".into(), |v| v.to_string());
                writeln!(
                    out,
                    "{:<12} {:<11} {:<24} {:>8}",
                    row["algorithm"].as_str().unwrap_or_default(),
                    row["verdict"].as_str().unwrap_or_default(),
                    embedding,
                    ignored
                )?;
            }
            let show = |g: Option<usize>| g.map_or("-".into(), |g| g.to_string());
            writeln!(out, "gap validEOD - optimum: {}", show(heuristic_gap))?;
            writeln!(out, "gap greedy - optimum: {}", show(greedy_gap))?;
        }
    }
    Ok(exit_for(&heuristic))
}

pub fn cmd_inspect<W: Write>(data: &DataArgs, output: OutputMode, out: &mut W) -> Result<i32, Error> {
    let r = data.load()?;
    let idx = build_missing_index(&r);
    let with_missing: Vec<&str> = idx.attributes_with_missing().into_iter().map(|a| r.name(a)).collect();
    match output {
        OutputMode::Records => {
            let attributes: Vec<_> = (0..r.width())
                .map(|a| json!({ "name": r.name(a), "kind": r.kind(a), "nulls": idx.missing(a).len() }))
                .collect();
            let record = json!({
                "rows": r.len(),
                "attributes": r.width(),
                "columns": attributes,
                "total_nulls": idx.total_missing(),
                "with_missing": with_missing,
            });
            writeln!(out, "{record}")?;
        }
        OutputMode::Human => {
            writeln!(out, "rows: {}", r.len())?;
            writeln!(out, "attributes: {}", r.width())?;
            writeln!(out, "{:<24} {:<8} {:>10}", "attribute", "kind", "nulls")?;
            for a in 0..r.width() {
                writeln!(out, "{:<24} {:<8} {:>10}", r.name(a), r.kind(a).to_string(), idx.missing(a).len())?;
            }
            writeln!(out, "total nulls: {}", idx.total_missing())?;
            writeln!(out, "with missing values: {{{}}}", with_missing.join(","))?;
        }
    }
    Ok(EXIT_HOLDS)
}

pub fn cmd_bench<W: Write>(
    cfg: &SweepConfig,
    csv_path: Option<PathBuf>,
    output: OutputMode,
    out: &mut W,
) -> Result<i32, Error> {
    let report = run_sweep(cfg)?;
    if let Some(path) = csv_path {
        let mut writer = csv::Writer::from_path(&path).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))?;
        for row in &report.rows {
            writer.serialize(row).map_err(|e| Error::Usage(e.to_string()))?;
        }
        writer.flush()?;
    }
    match output {
        OutputMode::Records => {
            for row in &report.rows {
                writeln!(out, "{}", serde_json::to_string(row).expect("rows serialize"))?;
            }
        }
        OutputMode::Human => {
            writeln!(
                out,
                "{:>5} {:>5} {:>16} {:>16} {:>9} {:>10} {:>10}",
                "size", "runs", "validEOD us", "naive us", "timeouts", "mean |S|", "mean |M|"
            )?;
            let show = |v: Option<f64>| v.map_or("-".into(), |v| format!("{v:.1}"));
            for s in &report.summary {
                writeln!(
                    out,
                    "{:>5} {:>5} {:>16} {:>16} {:>9} {:>10.1} {:>10.1}",
                    s.size,
                    s.rows,
                    show(s.mean_time_valid_eod_us),
                    show(s.mean_time_naive_us),
                    s.naive_timeouts,
                    s.mean_s,
                    s.mean_m
                )?;
            }
        }
    }
    Ok(EXIT_HOLDS)
}

pub fn cmd_gen<W: Write>(
    cfg: &SyntheticConfig,
    null_token: &str,
    delimiter: u8,
    path: Option<PathBuf>,
    out: &mut W,
) -> Result<i32, Error> {
    let r = gen_synthetic(cfg)?;
    match path {
        Some(path) => {
            let file = File::create(&path).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))?;
            write_delimited(&r, io::BufWriter::new(file), delimiter, null_token)?;
        }
        None => write_delimited(&r, out, delimiter, null_token)?,
    }
    Ok(EXIT_HOLDS)
}

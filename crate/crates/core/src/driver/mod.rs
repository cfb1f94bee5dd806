//! Front-end commands shared by the `mrud` binary and the examples: analyze
//! a file, cross-check it against the concrete interpreter, or fuzz the
//! whole pipeline.

mod fuzz;
mod oracle;

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub use fuzz::{cmd_fuzz, fuzz, generate_program, FuzzOptions, FuzzSummary};
pub use oracle::{cmd_oracle, oracle, oracle_with, OracleFailure, OracleReport};

use crate::fixpoint::{solve_traced, AnalysisConfig, Domain, InvariantMap, Verdict};
use crate::ir::{parse_program, ParseError, Point, Program};
use crate::numdom::{Intervals, NumDomain, Zones};

/// Process exit status of every command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    /// Every assert proved, or every state contained.
    Clean = 0,
    /// A warning or a containment failure.
    Findings = 1,
    /// Unreadable or invalid input.
    InputError = 2,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{0}")]
    Unsupported(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Text,
    Json,
}

named_enum!(Format, "format", Text => "text", Json => "json");

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Options {
    pub analysis: AnalysisConfig,
    pub dump_invariants: bool,
    pub format: Format,
    pub fuel: usize,
    /// Log fixpoint iteration (analyze) or concrete states (oracle) to the
    /// diagnostic stream.
    pub trace: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options { analysis: AnalysisConfig::default(), dump_invariants: false, format: Format::Text, fuel: 10_000, trace: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteVerdict {
    pub site: String,
    pub line: usize,
    pub verdict: Verdict,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub parse_ms: f64,
    pub fixpoint_ms: f64,
    pub checks_ms: f64,
}

/// Result of `analyze`: one verdict per assert in program order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: AnalysisConfig,
    pub verdicts: Vec<SiteVerdict>,
    /// Per point name, in the same layout as [`crate::mrud::Ctx::dump_json`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invariants: Option<BTreeMap<String, Value>>,
    pub timing: Timing,
}

impl Report {
    pub fn num_safe(&self) -> usize {
        self.verdicts.iter().filter(|v| v.verdict == Verdict::Safe).count()
    }

    pub fn exit(&self) -> Exit {
        if self.num_safe() == self.verdicts.len() {
            Exit::Clean
        } else {
            Exit::Findings
        }
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

pub fn read_program(path: &Path) -> Result<Program, InputError> {
    let src = std::fs::read_to_string(path).map_err(|source| InputError::Io { path: path.to_owned(), source })?;
    parse_program(&src).map_err(|source| InputError::Parse { path: path.to_owned(), source })
}

/// Parses and analyzes `path`. Text dumps of invariants are collected
/// separately since the text report prints them before the verdicts.
pub fn analyze_file(path: &Path, opts: &Options, log: &mut dyn FnMut(&str)) -> Result<(Report, Vec<String>), InputError> {
    let t = Instant::now();
    let p = read_program(path)?;
    let parse_ms = ms(t);
    let (mut report, dumps) = analyze_program(&p, opts, log);
    report.timing.parse_ms = parse_ms;
    Ok((report, dumps))
}

/// Runs the configured domain on an already parsed program.
pub fn analyze_program(p: &Program, opts: &Options, log: &mut dyn FnMut(&str)) -> (Report, Vec<String>) {
    match opts.analysis.domain {
        Domain::Intervals => analyze_in::<Intervals>(p, opts, log),
        Domain::Zones => analyze_in::<Zones>(p, opts, log),
    }
}

fn analyze_in<D: NumDomain>(p: &Program, opts: &Options, log: &mut dyn FnMut(&str)) -> (Report, Vec<String>) {
    let t = Instant::now();
    let mut map: InvariantMap<D> = solve_traced(p, &p.build_cfg(), &opts.analysis, log);
    let fixpoint_ms = ms(t);
    let t = Instant::now();
    map.check_asserts(p);
    let checks_ms = ms(t);
    let verdicts = map
        .verdicts()
        .map(|(pt, verdict)| SiteVerdict { site: p.point_name(pt), line: p.pos_of(pt).line, verdict })
        .collect();
    let ctx = opts.analysis.ctx(p);
    let (mut json, mut text) = (None, Vec::new());
    if opts.dump_invariants {
        let points: Vec<Point> = p.points().collect();
        match opts.format {
            Format::Json => json = Some(points.iter().map(|&pt| (p.point_name(pt), ctx.dump_json(map.state(pt)))).collect()),
            Format::Text => {
                text = points.iter().map(|&pt| format!("== {}\n{}", p.point_name(pt), ctx.dump_text(map.state(pt)))).collect()
            }
        }
    }
    let report = Report {
        config: opts.analysis.clone(),
        verdicts,
        invariants: json,
        timing: Timing { parse_ms: 0.0, fixpoint_ms, checks_ms },
    };
    (report, text)
}

/// `analyze`: prints the report and maps it to an exit status.
pub fn cmd_analyze(path: &Path, opts: &Options, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<Exit> {
    let mut log = |s: &str| {
        if opts.trace {
            let _ = writeln!(err, "{s}");
        }
    };
    let (report, dumps) = match analyze_file(path, opts, &mut log) {
        Ok(r) => r,
        Err(e) => {
            writeln!(err, "error: {e}")?;
            return Ok(Exit::InputError);
        }
    };
    match opts.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, &report).map_err(io::Error::other)?;
            writeln!(out)?;
        }
        Format::Text => write_text(&report, &dumps, out)?,
    }
    Ok(report.exit())
}

fn write_text(r: &Report, dumps: &[String], out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "config: {}", r.config)?;
    for d in dumps {
        write!(out, "{d}")?;
    }
    for v in &r.verdicts {
        writeln!(out, "{:<5} {} (line {})", v.verdict, v.site, v.line)?;
    }
    writeln!(out, "{}/{} asserts safe", r.num_safe(), r.verdicts.len())?;
    writeln!(
        out,
        "timing: parse {:.3} ms, fixpoint {:.3} ms, checks {:.3} ms",
        r.timing.parse_ms, r.timing.fixpoint_ms, r.timing.checks_ms
    )
}

#[cfg(test)]
mod tests;

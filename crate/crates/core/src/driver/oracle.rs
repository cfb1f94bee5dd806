use std::fmt;
use std::io::{self, Write};
use std::path::Path;

use super::{read_program, Exit, Options};
use crate::concrete::{self, End, Halt};
use crate::fixpoint::{analyze, check_post_fixpoint, AnalysisConfig, Domain, Verdict};
use crate::ir::Program;
use crate::numdom::{Intervals, NumDomain, Zones};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleFailure {
    /// A concrete state outside the invariant at its point.
    NotContained { site: String, step: usize, reason: String },
    /// The interpreter broke an assert the analysis called safe.
    MissedAssert { site: String },
    /// The invariant map is not closed under the transfer functions.
    NotPostFixpoint(String),
}

impl fmt::Display for OracleFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleFailure::NotContained { site, step, reason } => {
                write!(f, "state {step} at {site} is not contained: {reason}")
            }
            OracleFailure::MissedAssert { site } => write!(f, "assert at {site} fails concretely but was judged safe"),
            OracleFailure::NotPostFixpoint(e) => write!(f, "not a post-fixpoint: {e}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct OracleReport {
    /// Concrete states checked.
    pub steps: usize,
    pub end: End,
    pub failure: Option<OracleFailure>,
}

/// Runs the program concretely and checks every visited state against the
/// analysis result at its point.
pub fn oracle(p: &Program, cfg: &AnalysisConfig, fuel: usize) -> OracleReport {
    match cfg.domain {
        Domain::Intervals => oracle_with::<Intervals>(p, cfg, fuel),
        Domain::Zones => oracle_with::<Zones>(p, cfg, fuel),
    }
}

pub fn oracle_with<D: NumDomain>(p: &Program, cfg: &AnalysisConfig, fuel: usize) -> OracleReport {
    let map = analyze::<D>(p, &p.build_cfg(), cfg);
    let ctx = cfg.ctx(p);
    let trace = concrete::run(p, fuel);
    let steps = trace.steps.len();
    let report = |failure| OracleReport { steps, end: trace.end.clone(), failure };
    if let Err(e) = check_post_fixpoint(p, &map) {
        return report(Some(OracleFailure::NotPostFixpoint(e.to_string())));
    }
    for (i, (pt, cs)) in trace.steps.iter().enumerate() {
        if let Some(reason) = ctx.gamma_violation(map.state(*pt), cs) {
            return report(Some(OracleFailure::NotContained { site: p.point_name(*pt), step: i, reason }));
        }
    }
    if let End::Halted(Halt::AssertViolation(site)) = &trace.end {
        let at = trace.steps.last().map(|(pt, _)| *pt);
        if at.and_then(|pt| map.verdict(pt)) == Some(Verdict::Safe) {
            return report(Some(OracleFailure::MissedAssert { site: site.clone() }));
        }
    }
    report(None)
}

/// `oracle`: exit 0 when every concrete state is contained.
pub fn cmd_oracle(path: &Path, opts: &Options, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<Exit> {
    let p = match read_program(path) {
        Ok(p) => p,
        Err(e) => {
            writeln!(err, "error: {e}")?;
            return Ok(Exit::InputError);
        }
    };
    if p.has_havoc() {
        writeln!(err, "error: {}: havoc makes the program nondeterministic", path.display())?;
        return Ok(Exit::InputError);
    }
    if opts.trace {
        for (pt, cs) in concrete::run(&p, opts.fuel).steps {
            writeln!(err, "{}", cs.to_json(&p, pt))?;
        }
    }
    let r = oracle(&p, &opts.analysis, opts.fuel);
    writeln!(out, "{} concrete states, run {}", r.steps, r.end)?;
    if let End::Halted(h) = &r.end {
        writeln!(out, "interpreter halted: {h}")?;
    }
    match r.failure {
        None => {
            writeln!(out, "contained")?;
            Ok(Exit::Clean)
        }
        Some(f) => {
            writeln!(out, "FAILED: {f}")?;
            Ok(Exit::Findings)
        }
    }
}

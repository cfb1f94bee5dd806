use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mrud::driver::{cmd_analyze, cmd_fuzz, cmd_oracle, Format, FuzzOptions, Options};
use mrud::fixpoint::{AnalysisConfig, Domain};
use mrud::mrud::{Mode, Reduction};

#[derive(Parser)]
#[command(name = "mrud", version, about = "Object invariant inference for a small pointer IR")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Analyze a program and report a verdict per assert.
    Analyze {
        file: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Check every concrete state of a run against the analysis result.
    Oracle {
        file: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Generate random programs and run the oracle on each.
    Fuzz {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Directory for reproducers of failing cases.
        #[arg(long, default_value = "fuzz-failures")]
        repro_dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Args)]
struct Flags {
    #[arg(long, default_value = "zones")]
    domain: Domain,
    #[arg(long, default_value = "mrud")]
    mode: Mode,
    #[arg(long, default_value = "opt")]
    reduction: Reduction,
    #[arg(long, default_value_t = 1)]
    widening_delay: usize,
    #[arg(long, default_value_t = 2)]
    narrowing_iters: usize,
    #[arg(long)]
    dump_invariants: bool,
    #[arg(long, default_value = "text")]
    format: Format,
    #[arg(long, default_value_t = 10_000)]
    fuel: usize,
    #[arg(long)]
    trace: bool,
}

impl From<Flags> for Options {
    fn from(f: Flags) -> Self {
        Options {
            analysis: AnalysisConfig {
                domain: f.domain,
                mode: f.mode,
                reduction: f.reduction,
                widening_delay: f.widening_delay,
                narrowing_iters: f.narrowing_iters,
                mutation: None,
            },
            dump_invariants: f.dump_invariants,
            format: f.format,
            fuel: f.fuel,
            trace: f.trace,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let (mut out, mut err) = (io::stdout().lock(), io::stderr().lock());
    let res = match cli.cmd {
        Cmd::Analyze { file, flags } => cmd_analyze(&file, &flags.into(), &mut out, &mut err),
        Cmd::Oracle { file, flags } => cmd_oracle(&file, &flags.into(), &mut out, &mut err),
        Cmd::Fuzz { seed, count, repro_dir, jobs, flags } => {
            let fo = FuzzOptions { seed, count, repro_dir: Some(repro_dir), jobs };
            cmd_fuzz(&fo, &flags.into(), &mut out, &mut err)
        }
    };
    match res {
        Ok(code) => ExitCode::from(code.code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

use super::*;
use crate::ir::Stmt;
use crate::mrud::{Mode, Mutation};

const LOOP: &str = include_str!("../../benchmarks/loop.ir");

fn bench(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("benchmarks").join(format!("{name}.ir"))
}

fn run(f: impl FnOnce(&mut Vec<u8>, &mut Vec<u8>) -> io::Result<Exit>) -> (Exit, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = f(&mut out, &mut err).unwrap();
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn generator_is_deterministic_per_seed() {
    assert_eq!(generate_program(7), generate_program(7));
    assert_ne!(generate_program(7), generate_program(8));
}

#[test]
fn generated_programs_respect_the_shape_limits() {
    for seed in 0..200 {
        let src = generate_program(seed);
        let p = parse_program(&src).unwrap_or_else(|e| panic!("seed {seed}: {e}\n{src}"));
        assert!((1..=3).contains(&p.banks.len()), "seed {seed}");
        assert!(p.banks.iter().all(|b| (2..=4).contains(&b.fields.len())), "seed {seed}");
        assert!(!p.has_havoc());
        assert!(p.blocks().iter().flat_map(|b| &b.stmts).any(|s| matches!(s, Stmt::Store { .. })));
    }
}

#[test]
fn generated_runs_terminate_within_default_fuel() {
    for seed in 0..50 {
        let p = parse_program(&generate_program(seed)).unwrap();
        let t = crate::concrete::run(&p, 10_000);
        assert_ne!(t.end, crate::concrete::End::OutOfFuel, "seed {seed}");
    }
}

#[test]
fn zero_cases_is_a_clean_run() {
    let fo = FuzzOptions { count: 0, ..FuzzOptions::default() };
    let (code, out, _) = run(|o, e| cmd_fuzz(&fo, &Options::default(), o, e));
    assert_eq!(code, Exit::Clean);
    assert!(out.starts_with("0/0 programs contained"));
}

#[test]
fn failing_cases_leave_reproducers() {
    let dir = std::env::temp_dir().join(format!("mrud-repro-{}", std::process::id()));
    let fo = FuzzOptions { seed: 44, count: 3, repro_dir: Some(dir.clone()), jobs: 2 };
    let opts = Options { analysis: AnalysisConfig { mutation: Some(Mutation::SkipPack), ..AnalysisConfig::default() }, ..Options::default() };
    let (code, out, _) = run(|o, e| cmd_fuzz(&fo, &opts, o, e));
    assert_eq!(code, Exit::Findings);
    assert!(out.contains("seed 44: FAILED"), "{out}");
    let repro = std::fs::read_to_string(dir.join("fuzz-44.ir")).unwrap();
    assert!(repro.starts_with("# seed 44\n"));
    assert_eq!(parse_program(&repro).unwrap(), parse_program(&generate_program(44)).unwrap());
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn text_report_lists_each_assert() {
    let (code, out, _) = run(|o, e| cmd_analyze(&bench("bytebuf"), &Options::default(), o, e));
    assert_eq!(code, Exit::Clean);
    assert_eq!(out.lines().filter(|l| l.starts_with("safe ")).count(), 3);
    assert!(out.contains("3/3 asserts safe"));
}

#[test]
fn json_report_round_trips() {
    let opts = Options { format: Format::Json, dump_invariants: true, ..Options::default() };
    let (code, out, _) = run(|o, e| cmd_analyze(&bench("object"), &opts, o, e));
    assert_eq!(code, Exit::Clean);
    let r: Report = serde_json::from_str(&out).unwrap();
    assert_eq!(r.verdicts.len(), 1);
    assert_eq!(r.config, AnalysisConfig::default());
    let inv = r.invariants.as_ref().unwrap();
    assert!(inv.contains_key("entry:0"));
    assert_eq!(serde_json::to_value(&r).unwrap(), serde_json::from_str::<Value>(&out).unwrap());
}

#[test]
fn baseline_warnings_exit_with_findings() {
    let mut opts = Options::default();
    opts.analysis.mode = Mode::Baseline;
    let (code, out, _) = run(|o, e| cmd_analyze(&bench("bytebuf"), &opts, o, e));
    assert_eq!(code, Exit::Findings);
    assert!(out.contains("0/3 asserts safe"));
}

#[test]
fn unreadable_input_is_an_input_error() {
    let (code, _, err) = run(|o, e| cmd_analyze(Path::new("/nonexistent/missing.ir"), &Options::default(), o, e));
    assert_eq!(code, Exit::InputError);
    assert!(err.contains("cannot read"));
}

#[test]
fn oracle_catches_the_skip_pack_mutant() {
    let p = parse_program(&LOOP.replace("i <= 99", "i <= 2").replace("i > 99", "i > 2")).unwrap();
    assert!(oracle(&p, &AnalysisConfig::default(), 10_000).failure.is_none());
    let bad = AnalysisConfig { mutation: Some(Mutation::SkipPack), ..AnalysisConfig::default() };
    let r = oracle(&p, &bad, 10_000);
    assert!(matches!(r.failure, Some(OracleFailure::NotContained { .. })), "{:?}", r.failure);
}

#[test]
fn failing_runtime_assert_must_be_a_warning() {
    let p = parse_program("fun main() {\nentry:\n  x := 1\n  assert(x == 2)\n  return\n}\n").unwrap();
    let r = oracle(&p, &AnalysisConfig::default(), 100);
    assert!(matches!(r.end, crate::concrete::End::Halted(crate::concrete::Halt::AssertViolation(_))));
    assert!(r.failure.is_none());
}

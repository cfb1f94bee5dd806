//! Concrete runs stay inside the computed invariants, for every mode,
//! reduction strategy and numerical domain.

use std::fs;
use std::path::Path;

use mrud::driver::{fuzz, generate_program, oracle, FuzzOptions, Options};
use mrud::fixpoint::{AnalysisConfig, Domain};
use mrud::ir::parse_program;
use mrud::mrud::{Mode, Reduction};
use proptest::prelude::*;

fn configs() -> Vec<AnalysisConfig> {
    let mut out = Vec::new();
    for domain in [Domain::Intervals, Domain::Zones] {
        for mode in [Mode::Mrud, Mode::Baseline, Mode::Monolithic] {
            for reduction in [Reduction::None, Reduction::Opt, Reduction::Full] {
                out.push(AnalysisConfig { domain, mode, reduction, ..AnalysisConfig::default() });
            }
        }
    }
    out
}

#[test]
fn regression_corpus_is_contained() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let p = parse_program(&fs::read_to_string(&path).unwrap()).unwrap();
        for cfg in configs() {
            let r = oracle(&p, &cfg, 10_000);
            assert!(r.failure.is_none(), "{} under {cfg}: {:?}", path.display(), r.failure);
        }
        seen += 1;
    }
    assert!(seen >= 3);
}

#[test]
fn benchmarks_are_contained() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("benchmarks");
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let p = parse_program(&fs::read_to_string(&path).unwrap()).unwrap();
        for cfg in configs() {
            let r = oracle(&p, &cfg, 10_000);
            assert!(r.failure.is_none(), "{} under {cfg}: {:?}", path.display(), r.failure);
        }
    }
}

#[test]
fn fuzzed_programs_are_contained_in_every_mode() {
    for cfg in configs() {
        let opts = Options { analysis: cfg.clone(), ..Options::default() };
        let s = fuzz(&FuzzOptions { seed: 7000, count: 60, repro_dir: None, jobs: 4 }, &opts);
        let first = s.failures.first().map(|f| (f.0, f.1.clone()));
        assert!(s.failures.is_empty(), "{cfg}: {} failures, first {first:?}", s.failures.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn any_seed_is_contained(seed in any::<u64>()) {
        let p = parse_program(&generate_program(seed)).unwrap();
        let r = oracle(&p, &AnalysisConfig::default(), 10_000);
        prop_assert!(r.failure.is_none(), "seed {}: {:?}", seed, r.failure);
    }
}

use mrud::fixpoint::{analyze, check_post_fixpoint, AnalysisConfig, Verdict};
use mrud::ir::parse_program;
use mrud::mrud::{Mode, Reduction};
use mrud::numdom::Zones;

/// (file, asserts, safe under mrud, safe under the baseline)
const TABLE: &[(&str, usize, usize, usize)] = &[
    ("bytebuf", 3, 3, 0),
    ("bytebuf_path", 3, 3, 1),
    ("mult_bytebuf", 3, 3, 0),
    ("range", 2, 2, 1),
    ("object", 1, 1, 0),
    ("ipc_handler", 3, 3, 2),
    ("bytebuf_memcpy", 3, 3, 0),
];

fn load(name: &str) -> mrud::ir::Program {
    let path = format!("{}/benchmarks/{name}.ir", env!("CARGO_MANIFEST_DIR"));
    parse_program(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn verdicts(name: &str, mode: Mode, reduction: Reduction) -> Vec<Verdict> {
    let p = load(name);
    let opts = AnalysisConfig { mode, reduction, ..AnalysisConfig::default() };
    let map = analyze::<Zones>(&p, &p.build_cfg(), &opts);
    check_post_fixpoint(&p, &map).unwrap_or_else(|e| panic!("{name} {mode}: {e}"));
    map.verdicts().map(|(_, v)| v).collect()
}

fn safe(vs: &[Verdict]) -> usize {
    vs.iter().filter(|v| **v == Verdict::Safe).count()
}

#[test]
fn mrud_proves_every_benchmark_assert() {
    for &(name, n, want, _) in TABLE {
        let vs = verdicts(name, Mode::Mrud, Reduction::Opt);
        assert_eq!((vs.len(), safe(&vs)), (n, want), "{name}: {vs:?}");
    }
}

#[test]
fn baseline_warns_where_objects_are_summarized() {
    for &(name, n, _, want) in TABLE {
        let vs = verdicts(name, Mode::Baseline, Reduction::Opt);
        assert_eq!((vs.len(), safe(&vs)), (n, want), "{name}: {vs:?}");
    }
}

#[test]
fn full_reduction_proves_at_least_as_much_as_none() {
    for &(name, ..) in TABLE {
        let none = safe(&verdicts(name, Mode::Mrud, Reduction::None));
        let full = safe(&verdicts(name, Mode::Mrud, Reduction::Full));
        assert!(full >= none, "{name}: full {full} < none {none}");
    }
}

#[test]
fn monolithic_mode_matches_mrud_verdicts() {
    for &(name, ..) in TABLE {
        assert_eq!(verdicts(name, Mode::Monolithic, Reduction::Opt), verdicts(name, Mode::Mrud, Reduction::Opt), "{name}");
    }
}

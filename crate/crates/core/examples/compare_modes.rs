//! Safe assert counts for every benchmark under each memory abstraction.

use std::fs;
use std::path::Path;

use mrud::fixpoint::{analyze, AnalysisConfig};
use mrud::ir::parse_program;
use mrud::mrud::Mode;
use mrud::numdom::Zones;

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("benchmarks");
    let mut files: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    println!("{:<16} {:>8} {:>8} {:>11}", "program", "mrud", "baseline", "monolithic");
    for path in files {
        let p = parse_program(&fs::read_to_string(&path).unwrap()).unwrap();
        let cfg = p.build_cfg();
        let safe = |mode| {
            let map = analyze::<Zones>(&p, &cfg, &AnalysisConfig { mode, ..AnalysisConfig::default() });
            format!("{}/{}", map.num_safe(), map.verdicts().count())
        };
        let name = path.file_stem().unwrap().to_string_lossy();
        println!("{name:<16} {:>8} {:>8} {:>11}", safe(Mode::Mrud), safe(Mode::Baseline), safe(Mode::Monolithic));
    }
}

//! Analyzes one program and prints the verdicts plus the invariant at the
//! entry of every block.
//!
//! Usage: analyze [FILE]   (defaults to benchmarks/bytebuf.ir)

use std::path::PathBuf;

use mrud::fixpoint::{analyze, AnalysisConfig};
use mrud::ir::parse_program;
use mrud::numdom::Zones;

fn main() {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| [env!("CARGO_MANIFEST_DIR"), "benchmarks", "bytebuf.ir"].iter().collect());
    let src = std::fs::read_to_string(&path).expect("readable input");
    let p = parse_program(&src).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    let opts = AnalysisConfig::default();
    let map = analyze::<Zones>(&p, &p.build_cfg(), &opts);
    let ctx = opts.ctx(&p);

    for (b, block) in p.blocks().iter().enumerate() {
        println!("== {}", block.label);
        print!("{}", ctx.dump_text(map.block_entry(b)));
    }
    println!();
    for (pt, v) in map.verdicts() {
        println!("{v:<5} {}:{} (line {})", p.block(pt.block).label, pt.idx, p.block(pt.block).pos[pt.idx].line);
    }
}

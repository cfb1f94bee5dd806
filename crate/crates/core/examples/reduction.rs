//! Shows what reduction adds: the loop of `bytebuf` is analyzed without
//! reduction, then the state after the stores is reduced by hand.

use std::path::Path;

use mrud::fixpoint::{analyze, AnalysisConfig};
use mrud::ir::{parse_program, Point};
use mrud::mrud::Reduction;
use mrud::numdom::Zones;

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("benchmarks/bytebuf.ir");
    let p = parse_program(&std::fs::read_to_string(path).unwrap()).unwrap();
    let opts = AnalysisConfig { reduction: Reduction::None, ..AnalysisConfig::default() };
    let map = analyze::<Zones>(&p, &p.build_cfg(), &opts);
    let ctx = opts.ctx(&p);

    let header = p.block_index("header").unwrap();
    // just before `l0 := load(plen, @len)`
    let at = Point { block: header, idx: 9 };
    let st = map.state(at);
    println!("-- unreduced\n{}", ctx.dump_text(st));
    println!("-- reduced\n{}", ctx.dump_text(&ctx.reduction(st)));
    println!("verdicts without reduction: {}/{} safe", map.num_safe(), map.verdicts().count());
}

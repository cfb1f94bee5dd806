//! Times per-bank caches against keeping every cached field in the scalar
//! value, on a loop that fills one object in each of N banks.
//!
//! Usage: scalability [BANKS] [FIELDS]

use std::time::Instant;

use mrud::fixpoint::{analyze, AnalysisConfig};
use mrud::ir::parse_program;
use mrud::mrud::Mode;
use mrud::numdom::Zones;

fn program(banks: usize, fields: usize) -> String {
    let mut s = String::new();
    for b in 0..banks {
        let fs: Vec<String> = (0..fields).map(|f| format!("@b{b}f{f}:4@{}", 4 * f)).collect();
        s += &format!("bank b{b} size {} {{ {} }}\n", 4 * fields, fs.join(", "));
    }
    s += "fun main() {\nentry:\n  i := 0\n  goto head\nhead:\n  goto body, exit\nbody:\n  assume(i < 50)\n  sz := i + 1\n";
    for b in 0..banks {
        s += &format!("  p{b} := alloc(@b{b}f0, {})\n", 4 * fields);
        for f in 0..fields - 1 {
            s += &format!("  store(p{b}, @b{b}f{f}, i)\n");
        }
        s += &format!("  store(p{b}, @b{b}f{}, sz)\n", fields - 1);
    }
    for b in 0..banks {
        s += &format!("  l := load(p{b}, @b{b}f0)\n  h := load(p{b}, @b{b}f{})\n  assert(l < h)\n", fields - 1);
    }
    s += "  i := i + 1\n  goto head\nexit:\n  assume(i >= 50)\n  return\n}\n";
    s
}

fn main() {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("a number"));
    let banks = args.next().unwrap_or(20);
    let fields = args.next().unwrap_or(5);
    let p = parse_program(&program(banks, fields)).expect("generated program parses");
    for mode in [Mode::Mrud, Mode::Monolithic] {
        let opts = AnalysisConfig { mode, ..AnalysisConfig::default() };
        let t = Instant::now();
        let map = analyze::<Zones>(&p, &p.build_cfg(), &opts);
        println!("{mode:<10} {:>10.1} ms  {}/{} asserts safe", t.elapsed().as_secs_f64() * 1e3, map.num_safe(), banks);
    }
}

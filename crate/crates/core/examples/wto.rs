//! Prints the weak topological order of a program with nested loops and
//! the loop heads the fixpoint engine widens at.

use mrud::fixpoint::compute_wto;
use mrud::ir::parse_program;

const SRC: &str = "
fun main() {
entry:
  i := 0
  goto outer
outer:
  goto outer_body, done
outer_body:
  assume(i < 10)
  j := 0
  goto inner
inner:
  goto inner_body, inner_done
inner_body:
  assume(j < i)
  j := j + 1
  goto inner
inner_done:
  assume(j >= i)
  i := i + 1
  goto outer
done:
  assume(i >= 10)
  return
}
";

fn main() {
    let p = parse_program(SRC).unwrap();
    let wto = compute_wto(&p.build_cfg());
    println!("{wto}");
    for h in wto.heads() {
        let depth = wto.nesting(h).len();
        println!("head {} at depth {depth}", p.block(h).label);
    }
    for (i, b) in p.blocks().iter().enumerate() {
        println!("  {i}: {}", b.label);
    }
}

//! Runs a program concretely and checks each state against the invariants,
//! with and without a deliberate defect in the abstract domain.
//!
//! Usage: oracle [BOUND]   (loop bound, default 3)

use std::path::Path;

use mrud::driver::oracle;
use mrud::fixpoint::AnalysisConfig;
use mrud::ir::parse_program;
use mrud::mrud::Mutation;

fn main() {
    let bound: u32 = std::env::args().nth(1).map_or(3, |a| a.parse().expect("a number"));
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("benchmarks/loop.ir");
    let src = std::fs::read_to_string(path).unwrap().replace("99", &bound.to_string());
    let p = parse_program(&src).unwrap();

    let sound = oracle(&p, &AnalysisConfig::default(), 10_000);
    println!("sound domain: {} states, run {}, failure {:?}", sound.steps, sound.end, sound.failure);

    let broken = AnalysisConfig { mutation: Some(Mutation::SkipPack), ..AnalysisConfig::default() };
    let r = oracle(&p, &broken, 10_000);
    match r.failure {
        Some(f) => println!("cache never packed: {f}"),
        None => println!("cache never packed: not detected on this run"),
    }
}

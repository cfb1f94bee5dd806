//! A small fuzz campaign: random programs, each checked by the oracle.
//!
//! Usage: fuzz [COUNT] [SEED]

use mrud::driver::{fuzz, generate_program, FuzzOptions, Options};

fn main() {
    let mut args = std::env::args().skip(1);
    let count = args.next().map_or(200, |a| a.parse().expect("a count"));
    let seed = args.next().map_or(1, |a| a.parse().expect("a seed"));
    println!("sample program (seed {seed}):\n{}", generate_program(seed));

    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let s = fuzz(&FuzzOptions { seed, count, repro_dir: None, jobs }, &Options::default());
    println!(
        "{}/{count} contained: returned {}, halted {}, out of fuel {}",
        s.passed, s.returned, s.halted, s.out_of_fuel
    );
    for (seed, reason, _) in &s.failures {
        println!("seed {seed}: {reason}");
    }
}

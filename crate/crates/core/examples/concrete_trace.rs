//! Executes a program on the cached memory model and on a flat heap, and
//! checks both see the same objects at every step.

use std::path::Path;

use mrud::concrete::{flat_run, observe, run_with, RunOptions};
use mrud::ir::parse_program;

fn main() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("benchmarks/object.ir");
    let p = parse_program(&std::fs::read_to_string(path).unwrap()).unwrap();

    let trace = run_with(&p, 10_000, RunOptions::default());
    for (pc, st) in trace.steps.iter().take(12) {
        println!("{}", st.to_json(&p, *pc));
    }
    println!("... {} steps, {}", trace.steps.len(), trace.end);

    let (flat, end) = flat_run(&p, 10_000, RunOptions::default());
    let same = flat.len() == trace.steps.len()
        && flat.iter().zip(&trace.steps).all(|((fp, fo), (cp, cs))| fp == cp && *fo == observe(cs));
    println!("flat interpreter: {} steps, {end}, observations agree: {same}", flat.len());
}

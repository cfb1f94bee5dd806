use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::PathBuf;
use std::thread;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracle::oracle;
use super::{Exit, Options};
use crate::concrete::End;
use crate::ir::parse_program;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FuzzOptions {
    /// Case `i` is generated from `seed + i`.
    pub seed: u64,
    pub count: usize,
    /// Where reproducers of failing cases go; `None` writes nothing.
    pub repro_dir: Option<PathBuf>,
    pub jobs: usize,
}

impl Default for FuzzOptions {
    fn default() -> Self {
        FuzzOptions { seed: 0, count: 100, repro_dir: None, jobs: 1 }
    }
}

#[derive(Clone, Debug, Default)]
pub struct FuzzSummary {
    pub passed: usize,
    pub returned: usize,
    pub halted: usize,
    pub out_of_fuel: usize,
    /// (case seed, reason, program text)
    pub failures: Vec<(u64, String, String)>,
}

/// Runs the oracle on `count` generated programs.
pub fn fuzz(fo: &FuzzOptions, opts: &Options) -> FuzzSummary {
    let seeds: Vec<u64> = (0..fo.count as u64).map(|i| fo.seed.wrapping_add(i)).collect();
    let jobs = fo.jobs.max(1);
    let chunk = seeds.len().div_ceil(jobs).max(1);
    let results: Vec<(u64, Result<End, String>, String)> = thread::scope(|s| {
        let handles: Vec<_> = seeds
            .chunks(chunk)
            .map(|part| s.spawn(move || part.iter().map(|&seed| run_case(seed, opts)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("fuzz worker panicked")).collect()
    });
    let mut sum = FuzzSummary::default();
    for (seed, r, src) in results {
        match r {
            Ok(end) => {
                sum.passed += 1;
                match end {
                    End::Returned => sum.returned += 1,
                    End::Halted(_) => sum.halted += 1,
                    End::OutOfFuel => sum.out_of_fuel += 1,
                }
            }
            Err(why) => sum.failures.push((seed, why, src)),
        }
    }
    sum
}

fn run_case(seed: u64, opts: &Options) -> (u64, Result<End, String>, String) {
    let src = generate_program(seed);
    let p = match parse_program(&src) {
        Ok(p) => p,
        Err(e) => return (seed, Err(format!("generated program is invalid: {e}")), src),
    };
    let r = oracle(&p, &opts.analysis, opts.fuel);
    let res = match r.failure {
        None => Ok(r.end),
        Some(f) => Err(f.to_string()),
    };
    (seed, res, src)
}

/// `fuzz`: exit 0 iff every generated program passes the oracle.
pub fn cmd_fuzz(fo: &FuzzOptions, opts: &Options, out: &mut dyn Write, err: &mut dyn Write) -> io::Result<Exit> {
    let sum = fuzz(fo, opts);
    for (seed, why, src) in &sum.failures {
        writeln!(out, "seed {seed}: FAILED: {why}")?;
        if let Some(dir) = &fo.repro_dir {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(format!("fuzz-{seed}.ir"));
            std::fs::write(&path, format!("# seed {seed}\n# {why}\n{src}"))?;
            writeln!(err, "reproducer written to {}", path.display())?;
        }
    }
    writeln!(
        out,
        "{}/{} programs contained (returned {}, halted {}, out of fuel {})",
        sum.passed, fo.count, sum.returned, sum.halted, sum.out_of_fuel
    )?;
    Ok(if sum.failures.is_empty() { Exit::Clean } else { Exit::Findings })
}

struct Field {
    name: String,
    offset: u64,
    /// Bank pointed to, for pointer fields.
    target: Option<usize>,
}

struct Bank {
    fields: Vec<Field>,
}

struct Block {
    label: String,
    stmts: Vec<String>,
    term: String,
}

/// Variables readable at the current position.
#[derive(Clone)]
struct Scope {
    ints: Vec<String>,
    ptrs: Vec<Vec<String>>,
    /// Loop counters: readable, only stepped by their own loop.
    counters: Vec<String>,
}

struct Gen {
    rng: ChaCha8Rng,
    banks: Vec<Bank>,
    blocks: Vec<Block>,
    cur: usize,
    scope: Scope,
    fresh: usize,
    budget: usize,
}

/// A random deterministic program: 1 to 3 banks of 2 to 4 fields, every
/// object fully initialised at allocation, loops bounded by constants and
/// nested at most twice.
pub fn generate_program(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nbanks = rng.gen_range(1..=3);
    let banks = (0..nbanks)
        .map(|b| {
            let nf = rng.gen_range(2..=4);
            let fields = (0..nf)
                .map(|i| Field {
                    name: format!("@b{b}f{i}"),
                    offset: 8 * i as u64,
                    target: rng.gen_bool(0.25).then(|| rng.gen_range(0..nbanks)),
                })
                .collect();
            Bank { fields }
        })
        .collect();
    let budget = rng.gen_range(12..=36);
    let mut g = Gen {
        rng,
        banks,
        blocks: vec![Block { label: "entry".into(), stmts: Vec::new(), term: String::new() }],
        cur: 0,
        scope: Scope { ints: Vec::new(), ptrs: vec![Vec::new(); nbanks], counters: Vec::new() },
        fresh: 0,
        budget,
    };
    g.prelude();
    g.seq(0);
    g.blocks[g.cur].term = "return".into();
    g.render()
}

impl Gen {
    fn name(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }

    fn emit(&mut self, s: String) {
        self.blocks[self.cur].stmts.push(s);
    }

    fn new_block(&mut self, what: &str) -> usize {
        let label = self.name(what);
        self.blocks.push(Block { label, stmts: Vec::new(), term: String::new() });
        self.blocks.len() - 1
    }

    fn goto(&mut self, from: usize, to: &[usize]) {
        let ls: Vec<&str> = to.iter().map(|&b| self.blocks[b].label.as_str()).collect();
        self.blocks[from].term = format!("goto {}", ls.join(", "));
    }

    fn readable_int(&mut self) -> Option<String> {
        let all: Vec<&String> = self.scope.ints.iter().chain(&self.scope.counters).collect();
        all.choose(&mut self.rng).map(|s| s.to_string())
    }

    fn int_or_const(&mut self) -> String {
        match self.readable_int() {
            Some(v) if self.rng.gen_bool(0.7) => v,
            _ => self.rng.gen_range(-5..=5).to_string(),
        }
    }

    /// A fresh int variable holding a small constant.
    fn constant(&mut self) -> String {
        let x = self.name("x");
        let c = self.rng.gen_range(-5..=5);
        self.emit(format!("{x} := {c}"));
        self.scope.ints.push(x.clone());
        x
    }

    fn int_source(&mut self) -> String {
        match self.scope.ints.choose(&mut self.rng) {
            Some(v) if self.rng.gen_bool(0.7) => v.clone(),
            _ => self.constant(),
        }
    }

    fn prelude(&mut self) {
        let objs: Vec<(usize, String)> = (0..self.banks.len()).map(|b| (b, self.alloc_raw(b))).collect();
        for (b, p) in objs {
            self.init_object(b, &p);
        }
    }

    fn alloc_raw(&mut self, b: usize) -> String {
        let p = self.name("p");
        let f0 = self.banks[b].fields[0].name.clone();
        let size = 8 * self.banks[b].fields.len();
        self.emit(format!("{p} := alloc({f0}, {size})"));
        self.scope.ptrs[b].push(p.clone());
        p
    }

    fn init_object(&mut self, b: usize, p: &str) {
        for i in 0..self.banks[b].fields.len() {
            let (name, target) = (self.banks[b].fields[i].name.clone(), self.banks[b].fields[i].target);
            let src = match target {
                Some(t) => self.scope.ptrs[t].choose(&mut self.rng).cloned().expect("prelude allocates every bank"),
                None => self.int_source(),
            };
            self.emit(format!("store({p}, {name}, {src})"));
        }
    }

    fn pick_ptr(&mut self) -> (usize, String) {
        let live: Vec<usize> = (0..self.banks.len()).filter(|&b| !self.scope.ptrs[b].is_empty()).collect();
        let b = *live.choose(&mut self.rng).expect("prelude pointers stay in scope");
        let p = self.scope.ptrs[b].choose(&mut self.rng).cloned().expect("non-empty");
        (b, p)
    }

    fn seq(&mut self, depth: usize) {
        let n = self.rng.gen_range(2..=7);
        for _ in 0..n {
            if self.budget == 0 {
                return;
            }
            self.budget -= 1;
            let roll = self.rng.gen_range(0..100);
            match roll {
                0..=7 if depth < 2 => self.branch(depth),
                8..=15 if depth < 2 => self.bounded_loop(depth),
                _ => self.simple(),
            }
        }
    }

    fn simple(&mut self) {
        match self.rng.gen_range(0..100) {
            0..=24 => self.assign(),
            25..=36 => {
                let b = self.rng.gen_range(0..self.banks.len());
                let p = self.alloc_raw(b);
                self.init_object(b, &p);
            }
            37..=56 => self.store(),
            57..=79 => self.load(),
            80..=92 => self.gep(),
            _ => self.assert(),
        }
    }

    fn assign(&mut self) {
        let dst = match self.scope.ints.choose(&mut self.rng) {
            Some(v) if self.rng.gen_bool(0.4) => v.clone(),
            _ => self.name("x"),
        };
        let rhs = match (self.rng.gen_range(0..4), self.readable_int(), self.readable_int()) {
            (0, Some(y), _) => match self.rng.gen_range(-3..=3) {
                c if c < 0 => format!("{y} - {}", -c),
                c => format!("{y} + {c}"),
            },
            (1, Some(y), Some(z)) => format!("{y} + {z}"),
            (2, Some(y), Some(z)) => format!("{y} - {z}"),
            _ => self.rng.gen_range(-9..=9).to_string(),
        };
        self.emit(format!("{dst} := {rhs}"));
        if !self.scope.ints.contains(&dst) {
            self.scope.ints.push(dst);
        }
    }

    fn store(&mut self) {
        let (b, p) = self.pick_ptr();
        let i = self.rng.gen_range(0..self.banks[b].fields.len());
        let (name, target) = (self.banks[b].fields[i].name.clone(), self.banks[b].fields[i].target);
        let src = match target {
            Some(t) => self.scope.ptrs[t].choose(&mut self.rng).cloned().expect("prelude pointers stay in scope"),
            None => self.int_source(),
        };
        self.emit(format!("store({p}, {name}, {src})"));
    }

    fn load(&mut self) {
        let (b, p) = self.pick_ptr();
        let i = self.rng.gen_range(0..self.banks[b].fields.len());
        let (name, target) = (self.banks[b].fields[i].name.clone(), self.banks[b].fields[i].target);
        match target {
            Some(t) => {
                let q = self.name("p");
                self.emit(format!("{q} := load({p}, {name})"));
                self.scope.ptrs[t].push(q);
            }
            None => {
                let x = self.name("x");
                self.emit(format!("{x} := load({p}, {name})"));
                self.scope.ints.push(x);
            }
        }
    }

    fn gep(&mut self) {
        let (b, p) = self.pick_ptr();
        let n = self.banks[b].fields.len();
        let (i, j) = (self.rng.gen_range(0..n), self.rng.gen_range(0..n));
        let q = self.name("p");
        let (fi, fj) = (&self.banks[b].fields[i], &self.banks[b].fields[j]);
        let off = fj.offset as i64 - fi.offset as i64;
        let s = format!("({q}, {}) := gep({p}, {}, {off})", fj.name, fi.name);
        self.emit(s);
        self.scope.ptrs[b].push(q);
    }

    fn cmp(&mut self) -> (String, &'static str, String) {
        let a = self.readable_int().unwrap_or_else(|| self.constant());
        let b = self.int_or_const();
        let op = *["<", "<=", "==", "!=", ">=", ">"].choose(&mut self.rng).expect("non-empty");
        (a, op, b)
    }

    fn assert(&mut self) {
        let (a, op, b) = self.cmp();
        self.emit(format!("assert({a} {op} {b})"));
    }

    fn branch(&mut self, depth: usize) {
        let (a, op, b) = self.cmp();
        let neg = match op {
            "<" => ">=",
            "<=" => ">",
            "==" => "!=",
            "!=" => "==",
            ">=" => "<",
            _ => "<=",
        };
        let saved = self.scope.clone();
        let (t, e, join) = (self.new_block("then"), self.new_block("else"), self.new_block("join"));
        self.goto(self.cur, &[t, e]);
        for (blk, cond) in [(t, format!("{a} {op} {b}")), (e, format!("{a} {neg} {b}"))] {
            self.cur = blk;
            self.emit(format!("assume({cond})"));
            self.seq(depth + 1);
            self.goto(self.cur, &[join]);
            self.scope = saved.clone();
        }
        self.cur = join;
    }

    fn bounded_loop(&mut self, depth: usize) {
        let k = self.name("k");
        let n = self.rng.gen_range(1..=4);
        self.emit(format!("{k} := 0"));
        let saved = self.scope.clone();
        let (head, body, exit) = (self.new_block("head"), self.new_block("body"), self.new_block("exit"));
        self.goto(self.cur, &[head]);
        self.goto(head, &[body, exit]);
        self.cur = body;
        self.emit(format!("assume({k} < {n})"));
        self.scope.counters.push(k.clone());
        self.seq(depth + 1);
        self.emit(format!("{k} := {k} + 1"));
        self.goto(self.cur, &[head]);
        self.scope = saved;
        self.scope.counters.push(k.clone());
        self.cur = exit;
        self.emit(format!("assume({k} >= {n})"));
    }

    fn render(&self) -> String {
        let mut s = String::new();
        for (b, bank) in self.banks.iter().enumerate() {
            let fs: Vec<String> = bank.fields.iter().map(|f| format!("{}:8@{}", f.name, f.offset)).collect();
            let _ = writeln!(s, "bank b{b} size {} {{ {} }}", 8 * bank.fields.len(), fs.join(", "));
        }
        s.push_str("\nfun main() {\n");
        for blk in &self.blocks {
            let _ = writeln!(s, "{}:", blk.label);
            for st in &blk.stmts {
                let _ = writeln!(s, "  {st}");
            }
            let _ = writeln!(s, "  {}", blk.term);
        }
        s.push_str("}\n");
        s
    }
}

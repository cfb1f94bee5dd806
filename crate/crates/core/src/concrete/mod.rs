//! Reference interpreter for the recent-use memory model.
//!
//! Each bank keeps a storage map from base address to object plus a
//! one-object cache. Loads and stores go through [`cache_sync`], which writes
//! a dirty cache back to storage and refreshes it from the accessed object
//! whenever the access misses.

mod flat;

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

pub use flat::{flat_run, Observation};

use crate::ir::{CmpOp, Cond, Operand, Point, Program, Stmt, Terminator};
use crate::numdom::{LinExpr, Valuation};
use crate::var::Var;

/// A value: integers have `base == 0`, pointers carry their object base and
/// an offset in `val`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Cell {
    pub base: u64,
    pub val: i64,
}

impl Cell {
    pub fn int(val: i64) -> Self {
        Cell { base: 0, val }
    }

    /// The numeric value the abstract domains reason about: the address for
    /// pointers, the value for integers.
    pub fn flat(&self) -> i64 {
        self.base as i64 + self.val
    }
}

pub type Object = BTreeMap<Var, Cell>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MemBank {
    pub cache_base: u64,
    pub cache: Object,
    pub storage: BTreeMap<u64, Object>,
    pub used: bool,
    pub dirty: bool,
    pub next_addr: u64,
}

impl MemBank {
    fn new(index: usize) -> Self {
        MemBank {
            cache_base: 0,
            cache: Object::new(),
            storage: BTreeMap::new(),
            used: false,
            dirty: false,
            next_addr: first_address(index),
        }
    }

    /// Current contents of every object, with the cache overlaid.
    pub fn objects(&self) -> BTreeMap<u64, Object> {
        let mut out = self.storage.clone();
        if self.used {
            out.insert(self.cache_base, self.cache.clone());
        }
        out
    }
}

/// First address handed out by the allocator of bank `index`.
pub fn first_address(index: usize) -> u64 {
    ((index as u64) << 20) + 0x1000
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConcreteState {
    pub scalar: BTreeMap<Var, Cell>,
    pub mem: Vec<MemBank>,
}

#[derive(Clone, Debug, Error, PartialEq, Eq, Serialize)]
pub enum Halt {
    #[error("read of uninitialised {0}")]
    UninitRead(String),
    #[error("assertion failed at {0}")]
    AssertViolation(String),
    #[error("null dereference of {0}")]
    NullDeref(String),
    #[error("{ptr} does not point into the bank of {field}")]
    WrongBank { ptr: String, field: String },
    #[error("base address {0:#x} is not allocated")]
    Unallocated(u64),
    #[error("integer overflow")]
    Overflow,
    #[error("havoc({0}) in a deterministic run")]
    Nondeterministic(String),
    #[error("path infeasible")]
    Infeasible,
}

/// Moves bank `mb` to the object at `base`: on a miss a dirty cache is written
/// back, then the cache is refreshed from storage.
pub fn cache_sync(mb: &MemBank, base: u64) -> Result<MemBank, Halt> {
    if !mb.storage.contains_key(&base) {
        return Err(Halt::Unallocated(base));
    }
    if mb.used && mb.cache_base == base {
        return Ok(mb.clone());
    }
    let mut out = mb.clone();
    if mb.used && mb.dirty {
        out.storage.insert(mb.cache_base, mb.cache.clone());
    }
    out.cache = out.storage[&base].clone();
    out.cache_base = base;
    out.used = true;
    out.dirty = false;
    Ok(out)
}

impl ConcreteState {
    pub fn initial(p: &Program, params: &BTreeMap<Var, i64>) -> Self {
        let scalar = p.function.params.iter().map(|v| (v.clone(), Cell::int(params.get(v).copied().unwrap_or(0)))).collect();
        ConcreteState { scalar, mem: (0..p.banks.len()).map(MemBank::new).collect() }
    }

    fn read(&self, v: &Var) -> Result<Cell, Halt> {
        self.scalar.get(v).copied().ok_or_else(|| Halt::UninitRead(v.to_string()))
    }

    fn eval(&self, e: &LinExpr) -> Result<i64, Halt> {
        let mut acc = e.constant_term();
        for (v, c) in e.terms() {
            let x = self.read(v)?.val;
            acc = c.checked_mul(x).and_then(|t| acc.checked_add(t)).ok_or(Halt::Overflow)?;
        }
        Ok(acc)
    }

    fn eval_operand(&self, o: &Operand) -> Result<i64, Halt> {
        match o {
            Operand::Const(c) => Ok(*c),
            Operand::Var(v) => self.read(v).map(|c| c.val),
        }
    }

    pub fn holds(&self, c: &Cond) -> Result<bool, Halt> {
        for cmp in &c.0 {
            let (l, r) = (self.eval(&cmp.lhs)?, self.eval(&cmp.rhs)?);
            let ok = match cmp.op {
                CmpOp::Le => l <= r,
                CmpOp::Lt => l < r,
                CmpOp::Eq => l == r,
                CmpOp::Ne => l != r,
                CmpOp::Ge => l >= r,
                CmpOp::Gt => l > r,
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn deref_target(&self, p: &Program, ptr: &Var, field: &Var) -> Result<(usize, u64), Halt> {
        let cell = self.read(ptr)?;
        if cell.base == 0 {
            return Err(Halt::NullDeref(ptr.to_string()));
        }
        let b = p.bank_index(field).expect("validated");
        if !self.mem[b].storage.contains_key(&cell.base) {
            return Err(Halt::WrongBank { ptr: ptr.to_string(), field: field.to_string() });
        }
        Ok((b, cell.base))
    }

    /// Values of program variables, ghost bases and cache bases, as seen by
    /// the numerical domains.
    pub fn valuation(&self, p: &Program) -> Valuation {
        let mut out = Valuation::new();
        for (v, c) in &self.scalar {
            out.insert(v.clone(), c.flat());
            if p.is_ptr(v) {
                out.insert(v.ghost_base(), c.base as i64);
            }
        }
        for (bank, mb) in p.banks.iter().zip(&self.mem) {
            if mb.used {
                out.insert(bank.cache_base(), mb.cache_base as i64);
            }
        }
        out
    }

    pub fn to_json(&self, p: &Program, pc: Point) -> serde_json::Value {
        let scalar: BTreeMap<&str, &Cell> = self.scalar.iter().map(|(v, c)| (v.name(), c)).collect();
        let banks: BTreeMap<&str, serde_json::Value> = p
            .banks
            .iter()
            .zip(&self.mem)
            .map(|(b, mb)| {
                let storage: BTreeMap<String, &Object> =
                    mb.storage.iter().map(|(a, o)| (format!("{a:#x}"), o)).collect();
                (
                    b.id.as_str(),
                    json!({
                        "cache_base": mb.cache_base,
                        "cache": mb.cache,
                        "storage": storage,
                        "used": mb.used,
                        "dirty": mb.dirty,
                    }),
                )
            })
            .collect();
        json!({ "pc": p.point_name(pc), "scalar": scalar, "banks": banks })
    }
}

/// Inputs for a run: parameter values and a queue of values for `havoc`.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub params: BTreeMap<Var, i64>,
    pub havoc_inputs: VecDeque<i64>,
}

/// Executes one statement. `at` names the point for assertion reports.
pub fn exec_stmt(
    p: &Program,
    s: &Stmt,
    st: &ConcreteState,
    at: Point,
    inputs: &mut VecDeque<i64>,
) -> Result<ConcreteState, Halt> {
    let mut out = st.clone();
    match s {
        Stmt::Assign { dst, expr } => {
            let v = st.eval(expr)?;
            out.scalar.insert(dst.clone(), Cell::int(v));
        }
        Stmt::Havoc(v) => {
            let x = inputs.pop_front().ok_or_else(|| Halt::Nondeterministic(v.to_string()))?;
            out.scalar.insert(v.clone(), Cell::int(x));
        }
        Stmt::Assume(c) => {
            if !st.holds(c)? {
                return Err(Halt::Infeasible);
            }
        }
        Stmt::Assert(c) => {
            if !st.holds(c)? {
                return Err(Halt::AssertViolation(p.point_name(at)));
            }
        }
        Stmt::Alloc { dst, field, size } => {
            st.eval_operand(size)?;
            let b = p.bank_index(field).expect("validated");
            let mb = &mut out.mem[b];
            let base = mb.next_addr;
            mb.next_addr = base.checked_add(p.banks[b].object_size).ok_or(Halt::Overflow)?;
            mb.storage.insert(base, Object::new());
            out.scalar.insert(dst.clone(), Cell { base, val: 0 });
        }
        Stmt::Gep { dst, src, offset, .. } => {
            let c = st.read(src)?;
            let off = st.eval_operand(offset)?;
            let val = c.val.checked_add(off).ok_or(Halt::Overflow)?;
            out.scalar.insert(dst.clone(), Cell { base: c.base, val });
        }
        Stmt::Load { dst, ptr, field } => {
            let (b, base) = st.deref_target(p, ptr, field)?;
            let mb = cache_sync(&st.mem[b], base)?;
            let cell = *mb.cache.get(field).ok_or_else(|| Halt::UninitRead(format!("{field} of {base:#x}")))?;
            out.mem[b] = mb;
            out.scalar.insert(dst.clone(), cell);
        }
        Stmt::Store { ptr, field, src } => {
            let cell = st.read(src)?;
            let (b, base) = st.deref_target(p, ptr, field)?;
            let mut mb = cache_sync(&st.mem[b], base)?;
            mb.cache.insert(field.clone(), cell);
            mb.dirty = true;
            out.mem[b] = mb;
        }
    }
    Ok(out)
}

/// Why a run stopped.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum End {
    Returned,
    OutOfFuel,
    Halted(Halt),
}

impl fmt::Display for End {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            End::Returned => write!(f, "returned"),
            End::OutOfFuel => write!(f, "out of fuel"),
            End::Halted(h) => write!(f, "halted: {h}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trace {
    /// The state before each executed statement or terminator.
    pub steps: Vec<(Point, ConcreteState)>,
    pub end: End,
}

/// Picks the first target whose leading `assume`s hold in `st`.
pub(crate) fn choose_target(
    p: &Program,
    targets: &[String],
    holds: impl Fn(&Cond) -> Result<bool, Halt>,
) -> Result<Option<usize>, Halt> {
    for t in targets {
        let b = p.block_index(t).expect("validated");
        let mut ok = true;
        for s in &p.block(b).stmts {
            match s {
                Stmt::Assume(c) => {
                    if !holds(c)? {
                        ok = false;
                        break;
                    }
                }
                _ => break,
            }
        }
        if ok {
            return Ok(Some(b));
        }
    }
    Ok(None)
}

/// Runs the program for at most `fuel` steps from the initial state.
pub fn run(p: &Program, fuel: usize) -> Trace {
    run_with(p, fuel, RunOptions::default())
}

pub fn run_with(p: &Program, fuel: usize, opts: RunOptions) -> Trace {
    let mut inputs = opts.havoc_inputs;
    let mut st = ConcreteState::initial(p, &opts.params);
    let mut at = Point { block: 0, idx: 0 };
    let mut steps = Vec::new();
    loop {
        if steps.len() >= fuel {
            return Trace { steps, end: End::OutOfFuel };
        }
        steps.push((at, st.clone()));
        let blk = p.block(at.block);
        if let Some(s) = blk.stmts.get(at.idx) {
            match exec_stmt(p, s, &st, at, &mut inputs) {
                Ok(next) => {
                    st = next;
                    at.idx += 1;
                }
                Err(h) => return Trace { steps, end: End::Halted(h) },
            }
            continue;
        }
        match &blk.term {
            Terminator::Return(_) => return Trace { steps, end: End::Returned },
            Terminator::Goto(ts) => match choose_target(p, ts, |c| st.holds(c)) {
                Ok(Some(b)) => at = Point { block: b, idx: 0 },
                Ok(None) => return Trace { steps, end: End::Halted(Halt::Infeasible) },
                Err(h) => return Trace { steps, end: End::Halted(h) },
            },
        }
    }
}

/// Objects of every bank with the cache overlaid, keyed by (bank, base).
pub fn observe(st: &ConcreteState) -> Observation {
    let mut objects = BTreeMap::new();
    for (b, mb) in st.mem.iter().enumerate() {
        for (base, o) in mb.objects() {
            objects.insert((b, base), o);
        }
    }
    Observation { scalars: st.scalar.clone(), objects }
}

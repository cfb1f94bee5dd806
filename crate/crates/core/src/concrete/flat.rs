//! Cache-less interpreter used to cross-check the recent-use model: every
//! load and store goes straight to the object.

use std::collections::{BTreeMap, VecDeque};

use super::{choose_target, Cell, ConcreteState, End, Halt, Object, RunOptions};
use crate::ir::{Point, Program, Stmt, Terminator};

/// What a program can observe: scalar values and the contents of every
/// object, keyed by bank index and base address.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Observation {
    pub scalars: BTreeMap<crate::Var, Cell>,
    pub objects: BTreeMap<(usize, u64), Object>,
}

pub fn flat_run(p: &Program, fuel: usize, opts: RunOptions) -> (Vec<(Point, Observation)>, End) {
    let mut inputs: VecDeque<i64> = opts.havoc_inputs;
    // scalars and allocator state are shared with the cached interpreter;
    // object contents live in `heap` only
    let mut st = ConcreteState::initial(p, &opts.params);
    let mut heap: BTreeMap<(usize, u64), Object> = BTreeMap::new();
    let mut at = Point { block: 0, idx: 0 };
    let mut out = Vec::new();
    let observe = |st: &ConcreteState, heap: &BTreeMap<(usize, u64), Object>| Observation {
        scalars: st.scalar.clone(),
        objects: heap.clone(),
    };
    loop {
        if out.len() >= fuel {
            return (out, End::OutOfFuel);
        }
        out.push((at, observe(&st, &heap)));
        let blk = p.block(at.block);
        let Some(s) = blk.stmts.get(at.idx) else {
            match &blk.term {
                Terminator::Return(_) => return (out, End::Returned),
                Terminator::Goto(ts) => match choose_target(p, ts, |c| st.holds(c)) {
                    Ok(Some(b)) => at = Point { block: b, idx: 0 },
                    Ok(None) => return (out, End::Halted(Halt::Infeasible)),
                    Err(h) => return (out, End::Halted(h)),
                },
            }
            continue;
        };
        let step = match s {
            Stmt::Load { dst, ptr, field } => st.deref_target(p, ptr, field).and_then(|(b, base)| {
                let cell = heap[&(b, base)]
                    .get(field)
                    .copied()
                    .ok_or_else(|| Halt::UninitRead(format!("{field} of {base:#x}")))?;
                let mut next = st.clone();
                next.scalar.insert(dst.clone(), cell);
                Ok(next)
            }),
            Stmt::Store { ptr, field, src } => st.read(src).and_then(|cell| {
                let (b, base) = st.deref_target(p, ptr, field)?;
                heap.get_mut(&(b, base)).unwrap().insert(field.clone(), cell);
                Ok(st.clone())
            }),
            Stmt::Alloc { field, .. } => {
                let b = p.bank_index(field).expect("validated");
                let base = st.mem[b].next_addr;
                super::exec_stmt(p, s, &st, at, &mut inputs).inspect(|_| {
                    heap.insert((b, base), Object::new());
                })
            }
            _ => super::exec_stmt(p, s, &st, at, &mut inputs),
        };
        match step {
            Ok(next) => {
                st = next;
                at.idx += 1;
            }
            Err(h) => return (out, End::Halted(h)),
        }
    }
}

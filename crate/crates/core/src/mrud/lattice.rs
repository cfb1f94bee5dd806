use std::sync::Arc;

use super::{AbsBank, AbsState, Ctx, Flags};
use crate::numdom::NumDomain;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Op {
    Join,
    Meet,
    Widen,
    Narrow,
}

impl Op {
    fn num<D: NumDomain>(self, a: &D, b: &D) -> D {
        match self {
            Op::Join => a.join(b),
            Op::Meet => a.meet(b),
            Op::Widen => a.widen(b),
            Op::Narrow => a.narrow(b),
        }
    }

    fn upward(self) -> bool {
        matches!(self, Op::Join | Op::Widen)
    }
}

impl Ctx<'_> {
    pub fn join<D: NumDomain>(&self, a: &AbsState<D>, b: &AbsState<D>) -> AbsState<D> {
        self.combine(Op::Join, a, b)
    }

    pub fn meet<D: NumDomain>(&self, a: &AbsState<D>, b: &AbsState<D>) -> AbsState<D> {
        self.combine(Op::Meet, a, b)
    }

    pub fn widen<D: NumDomain>(&self, a: &AbsState<D>, b: &AbsState<D>) -> AbsState<D> {
        self.combine(Op::Widen, a, b)
    }

    pub fn narrow<D: NumDomain>(&self, a: &AbsState<D>, b: &AbsState<D>) -> AbsState<D> {
        self.combine(Op::Narrow, a, b)
    }

    /// Flushes both operands, then applies `op` part by part. A summary that
    /// has absorbed nothing acts as the neutral element of join and widen.
    fn combine<D: NumDomain>(&self, op: Op, a: &AbsState<D>, b: &AbsState<D>) -> AbsState<D> {
        if let Some(s) = bottom_case(op, a, b) {
            return s;
        }
        // flushing reduces, which may expose an empty operand
        let (a, b) = (self.flush(a), self.flush(b));
        if let Some(s) = bottom_case(op, &a, &b) {
            return s;
        }
        let banks = a
            .banks
            .iter()
            .zip(&b.banks)
            .map(|(x, y)| if Arc::ptr_eq(x, y) { x.clone() } else { Arc::new(combine_bank(op, x, y)) })
            .collect();
        let out = AbsState {
            bottom: false,
            scalar: op.num(&a.scalar, &b.scalar),
            e_sf: match op {
                Op::Join => a.e_sf.join(&b.e_sf),
                Op::Meet => a.e_sf.meet(&b.e_sf),
                Op::Widen => a.e_sf.widen(&b.e_sf),
                Op::Narrow => a.e_sf.narrow(&b.e_sf),
            },
            e_p: match op {
                Op::Join => a.e_p.join(&b.e_p),
                Op::Meet => a.e_p.meet(&b.e_p),
                Op::Widen => a.e_p.widen(&b.e_p),
                Op::Narrow => a.e_p.narrow(&b.e_p),
            },
            banks,
        };
        self.settle(out)
    }

    /// Inclusion of concretizations, up to the precision of the parts. When
    /// the parts do not compare, `a` is reduced and compared again: an
    /// unreduced `a` may be empty or looser than its concretization.
    ///
    /// Banks that `b` has flushed are compared against a flushed copy of the
    /// corresponding bank of `a`.
    pub fn leq<D: NumDomain>(&self, a: &AbsState<D>, b: &AbsState<D>) -> bool {
        if a.is_bottom() {
            return true;
        }
        self.leq_parts(a.clone(), b) || self.leq_parts(self.reduction(a), b)
    }

    fn leq_parts<D: NumDomain>(&self, mut a: AbsState<D>, b: &AbsState<D>) -> bool {
        for i in 0..a.banks.len() {
            if a.is_bottom() || b.is_bottom() {
                break;
            }
            if !b.banks[i].flags.used {
                self.flush_bank(&mut a, i);
                a = self.settle(a);
            }
        }
        if a.is_bottom() {
            return true;
        }
        if b.is_bottom() {
            return false;
        }
        a.scalar.leq(&b.scalar)
            && a.e_sf.leq(&b.e_sf)
            && a.e_p.leq(&b.e_p)
            && a.banks.iter().zip(&b.banks).all(|(x, y)| Arc::ptr_eq(x, y) || bank_leq(x, y))
    }
}

fn bottom_case<D: NumDomain>(op: Op, a: &AbsState<D>, b: &AbsState<D>) -> Option<AbsState<D>> {
    match (a.is_bottom(), b.is_bottom()) {
        (true, _) if op.upward() => Some(b.clone()),
        (_, true) if op.upward() => Some(a.clone()),
        (true, _) => Some(a.clone()),
        (_, true) => Some(b.clone()),
        _ => None,
    }
}

fn combine_bank<D: NumDomain>(op: Op, x: &AbsBank<D>, y: &AbsBank<D>) -> AbsBank<D> {
    let (px, py) = (x.flags.ispk, y.flags.ispk);
    let (summary, ispk) = match (px, py) {
        (true, true) => (op.num(&x.summary, &y.summary), true),
        (true, false) if op.upward() => (x.summary.clone(), true),
        (false, true) if op.upward() => (y.summary.clone(), true),
        _ => (D::top(), false),
    };
    AbsBank { cache: D::top(), summary, flags: Flags { used: false, dirty: false, ispk } }
}

fn bank_leq<D: NumDomain>(x: &AbsBank<D>, y: &AbsBank<D>) -> bool {
    if y.flags.used && !(x.flags.used && x.cache.leq(&y.cache)) {
        return false;
    }
    if x.flags.dirty && !y.flags.dirty {
        return false;
    }
    !x.flags.ispk || (y.flags.ispk && x.summary.leq(&y.summary))
}

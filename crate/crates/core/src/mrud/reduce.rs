use std::sync::Arc;

use super::{AbsState, Ctx, Mode, Reduction};
use crate::eqdom::EqAbs;
use crate::ir::Cond;
use crate::numdom::NumDomain;
use crate::var::Var;

/// Strengthens `dst` with what `src` knows about variables `e` equates
/// across the two universes.
///
/// `e` is restricted to both universes and turned into equalities, which
/// are conjoined with `src`; the result is met with `dst` and projected back
/// onto `dst`'s variables.
pub fn reduce<D: NumDomain>(
    src: &D,
    dst: &D,
    e: &EqAbs,
    in_src: &dyn Fn(&Var) -> bool,
    in_dst: &dyn Fn(&Var) -> bool,
) -> D {
    if src.is_bottom() {
        return D::bottom();
    }
    let e = e.project(&|v| in_src(v) || in_dst(v));
    if e.is_top() {
        return dst.clone();
    }
    src.project(in_src).add_all(&e.spanning_cons()).meet(dst).project(in_dst)
}

impl Ctx<'_> {
    /// Equalities between scalars and the fields of bank `b`.
    fn bank_eq<D: NumDomain>(&self, st: &AbsState<D>, b: usize) -> EqAbs {
        EqAbs::from_classes(st.e_sf.bank_classes(b))
    }

    fn cache_to_scalar<D: NumDomain>(&self, st: &mut AbsState<D>, b: usize) {
        let e = self.bank_eq(st, b);
        if e.is_top() {
            return;
        }
        if self.mode == Mode::Monolithic {
            self.tie_bank(st, b, &e);
            return;
        }
        let in_bank = self.in_bank(b);
        st.scalar = reduce(&st.banks[b].cache, &st.scalar, &e, &in_bank, &|v: &Var| !v.is_field());
    }

    pub(crate) fn scalar_to_cache<D: NumDomain>(&self, st: &mut AbsState<D>, b: usize) {
        let e = self.bank_eq(st, b);
        if e.is_top() {
            return;
        }
        if self.mode == Mode::Monolithic {
            self.tie_bank(st, b, &e);
            return;
        }
        // only scalars that meet a field can contribute; the scalar value is
        // closed, so projecting onto them first loses nothing
        let linked = |v: &Var| !v.is_field() && e.mentions(v);
        let cache = reduce(&st.scalar, &st.banks[b].cache, &e, &linked, &self.in_bank(b));
        if cache != st.banks[b].cache {
            Arc::make_mut(&mut st.banks[b]).cache = cache;
        }
    }

    /// Monolithic mode keeps cache fields in the scalar value, so both
    /// directions amount to adding the equalities.
    fn tie_bank<D: NumDomain>(&self, st: &mut AbsState<D>, b: usize, e: &EqAbs) {
        let in_bank = self.in_bank(b);
        let e = e.project(&|v| !v.is_field() || in_bank(v));
        st.scalar = st.scalar.add_all(&e.spanning_cons());
    }

    /// Caches to scalars for every bank, then scalars back to every cache.
    pub fn reduction<D: NumDomain>(&self, st: &AbsState<D>) -> AbsState<D> {
        if st.is_bottom() || self.mode == Mode::Baseline {
            return st.clone();
        }
        let mut out = st.clone();
        let used: Vec<usize> = (0..st.banks.len()).filter(|&b| st.banks[b].flags.used).collect();
        for &b in &used {
            self.cache_to_scalar(&mut out, b);
        }
        for &b in &used {
            self.scalar_to_cache(&mut out, b);
        }
        self.settle(out)
    }

    pub(crate) fn after_load<D: NumDomain>(&self, st: AbsState<D>, b: usize, field: &Var) -> AbsState<D> {
        match self.reduction {
            Reduction::None => st,
            Reduction::Full => self.reduction(&st),
            Reduction::Opt => {
                if !self.cache_view(&st, b).constrains(field) {
                    return st;
                }
                let mut out = st;
                self.cache_to_scalar(&mut out, b);
                self.settle(out)
            }
        }
    }

    pub(crate) fn after_store<D: NumDomain>(&self, st: AbsState<D>, b: usize, src: &Var) -> AbsState<D> {
        match self.reduction {
            Reduction::None => st,
            Reduction::Full => self.reduction(&st),
            Reduction::Opt => {
                if !self.scalar_view(&st).constrains(src) {
                    return st;
                }
                let mut out = st;
                self.scalar_to_cache(&mut out, b);
                self.settle(out)
            }
        }
    }

    pub(crate) fn after_assume<D: NumDomain>(&self, st: AbsState<D>, c: &Cond) -> AbsState<D> {
        match self.reduction {
            Reduction::None => st,
            Reduction::Full => self.reduction(&st),
            Reduction::Opt => {
                let mut out = st;
                for b in 0..out.banks.len() {
                    if !out.banks[b].flags.used || !out.e_sf.bank_is_linked(b) {
                        continue;
                    }
                    let in_bank = self.in_bank(b);
                    if c.vars().any(|v| out.e_sf.class_of(v).iter().any(&in_bank)) {
                        self.scalar_to_cache(&mut out, b);
                    }
                }
                self.settle(out)
            }
        }
    }

    /// Whether every state described by `st` satisfies `c`. Reduction is
    /// applied first unless the strategy is [`Reduction::None`].
    pub fn entails<D: NumDomain>(&self, st: &AbsState<D>, c: &Cond) -> bool {
        if st.is_bottom() {
            return true;
        }
        let reduced;
        let st = if self.reduction == Reduction::None {
            st
        } else {
            reduced = self.reduction(st);
            if reduced.is_bottom() {
                return true;
            }
            &reduced
        };
        c.to_cons().iter().all(|k| st.scalar.entails(k))
    }
}

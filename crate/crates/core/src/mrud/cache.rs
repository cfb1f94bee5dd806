use std::sync::Arc;

use super::{AbsBank, AbsState, Ctx, Flags, Mutation};
use crate::numdom::NumDomain;
use crate::var::Var;

/// Folds `cache` into the summary: a copy on the first fold, a join after.
pub fn pack<D: NumDomain>(cache: &D, summary: &D, ispk: bool) -> (D, bool) {
    if ispk {
        (summary.join(cache), true)
    } else {
        (cache.clone(), true)
    }
}

/// A fresh cache for an object taken from the summary. An empty summary
/// says nothing about fields, hence top.
pub fn unpack<D: NumDomain>(summary: &D, ispk: bool) -> D {
    if ispk {
        summary.clone()
    } else {
        D::top()
    }
}

/// Writes a dirty cache back into the summary and empties the cache.
pub fn flush_cache<D: NumDomain>(mb: &AbsBank<D>) -> AbsBank<D> {
    let mut out = mb.clone();
    if mb.flags.used && mb.flags.dirty {
        (out.summary, out.flags.ispk) = pack(&mb.cache, &mb.summary, mb.flags.ispk);
    }
    out.flags.used = false;
    out.flags.dirty = false;
    out.cache = D::top();
    out
}

impl Ctx<'_> {
    fn packs(&self) -> bool {
        self.mutation != Some(Mutation::SkipPack)
    }

    /// Brings the object `ptr` points to into the cache of bank `b`.
    ///
    /// A hit needs the cache in use and `ptr^base` provably equal to the
    /// cache base. Anything else is treated as a miss: a dirty cache is
    /// packed, the summary is unpacked into the cache and the bank's field
    /// equalities are dropped, since they described the previous object.
    pub fn cache_sync<D: NumDomain>(&self, st: &AbsState<D>, b: usize, ptr: &Var) -> AbsState<D> {
        let cb = &self.cache_bases[b];
        let base = ptr.ghost_base();
        let flags = st.banks[b].flags;
        if flags.used && st.e_p.equals_q(&base, cb) {
            return st.clone();
        }
        let mut out = st.clone();
        let mut bank = (*st.banks[b]).clone();
        if flags.used && flags.dirty && self.packs() {
            let cache = self.cache_view(st, b);
            (bank.summary, bank.flags.ispk) = pack(cache.as_ref(), &bank.summary, flags.ispk);
        }
        let fresh = unpack(&bank.summary, bank.flags.ispk);
        bank.flags = Flags { used: true, dirty: false, ispk: bank.flags.ispk };
        out.banks[b] = Arc::new(bank);
        self.set_cache(&mut out, b, fresh);
        out.e_p = out.e_p.add_equal(&base, cb);
        out.e_sf = out.e_sf.forget_bank(b);
        self.settle(out)
    }

    /// Flushes bank `b` in place; a no-op for an unused bank. Scalar facts
    /// about the cached fields are moved into the cache first, since the
    /// equalities carrying them are dropped.
    pub(crate) fn flush_bank<D: NumDomain>(&self, st: &mut AbsState<D>, b: usize) {
        if !st.banks[b].flags.used {
            return;
        }
        if st.banks[b].flags.dirty {
            self.scalar_to_cache(st, b);
        }
        let mut view = (*st.banks[b]).clone();
        view.cache = self.cache_view(st, b).into_owned();
        if !self.packs() {
            view.flags.dirty = false;
        }
        st.banks[b] = Arc::new(flush_cache(&view));
        self.set_cache(st, b, D::top());
        st.e_sf = st.e_sf.forget_bank(b);
    }

    /// Flushes every bank.
    pub fn flush<D: NumDomain>(&self, st: &AbsState<D>) -> AbsState<D> {
        let mut out = st.clone();
        if !out.bottom {
            for b in 0..out.banks.len() {
                self.flush_bank(&mut out, b);
            }
        }
        self.settle(out)
    }
}

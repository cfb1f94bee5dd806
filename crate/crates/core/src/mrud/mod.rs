//! The most-recently-used-object abstract domain.
//!
//! A state pairs a numerical value over scalars (pointers as flat addresses,
//! plus a ghost `p^base` per pointer) with one [`AbsBank`] per memory bank.
//! A bank abstracts its cached object precisely in `cache` and every other
//! object weakly in `summary`. Two equality partitions connect the parts:
//! `e_sf` relates scalars to fields of cached objects, `e_p` relates pointer
//! bases to each other and to the cache bases, which is what makes a cache
//! hit provable.
//!
//! All operations live on [`Ctx`], which carries the program layout and the
//! analysis options; states themselves are plain immutable values.

mod cache;
mod dump;
mod gamma;
mod lattice;
mod reduce;
mod transfer;

use std::borrow::Cow;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use cache::{flush_cache, pack, unpack};
pub use reduce::reduce;

use crate::eqdom::{EqAbs, FieldLayout, SplitEq};
use crate::ir::Program;
use crate::numdom::NumDomain;
use crate::var::Var;

/// How memory is abstracted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Per-bank cache and summary, strong updates on the cached object.
    #[default]
    Mrud,
    /// Field dimensions summarize every object of a bank and only take weak
    /// updates.
    Baseline,
    /// Same algorithm as [`Mode::Mrud`] but cache fields share the scalar
    /// value instead of living in per-bank values.
    Monolithic,
}

/// When information is exchanged between the scalar value and the caches.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    None,
    /// After loads and stores when the moved value carries constraints,
    /// after assumes on variables tied to a cached field, and before checks.
    #[default]
    Opt,
    /// After every load, store and assume.
    Full,
}

/// Deliberate defects for testing the soundness harness.
#[doc(hidden)]
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mutation {
    /// Never fold the cache into the summary.
    SkipPack,
}

named_enum!(Mode, "mode", Mrud => "mrud", Baseline => "baseline", Monolithic => "monolithic");
named_enum!(Reduction, "reduction", None => "none", Opt => "opt", Full => "full");

/// `used`: the cache holds an object. `dirty`: the cache may differ from
/// what the summary covers. `ispk`: the summary has absorbed at least one
/// object.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct Flags {
    pub used: bool,
    pub dirty: bool,
    pub ispk: bool,
}

impl fmt::Display for Flags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "used={} dirty={} ispk={}", self.used, self.dirty, self.ispk)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AbsBank<D> {
    pub cache: D,
    /// Meaningless while `flags.ispk` is false.
    pub summary: D,
    pub flags: Flags,
}

impl<D: NumDomain> AbsBank<D> {
    pub fn top() -> Self {
        AbsBank { cache: D::top(), summary: D::top(), flags: Flags::default() }
    }
}

#[derive(Clone, Debug)]
pub struct AbsState<D> {
    bottom: bool,
    pub(crate) scalar: D,
    pub(crate) e_sf: SplitEq,
    pub(crate) e_p: EqAbs,
    /// Shared between states until one side changes the bank.
    pub(crate) banks: Vec<Arc<AbsBank<D>>>,
}

impl<D: NumDomain> AbsState<D> {
    pub fn is_bottom(&self) -> bool {
        self.bottom
    }

    /// The scalar value. In monolithic mode it also carries cache fields.
    pub fn scalar(&self) -> &D {
        &self.scalar
    }

    pub fn e_sf(&self) -> &SplitEq {
        &self.e_sf
    }

    pub fn e_p(&self) -> &EqAbs {
        &self.e_p
    }

    pub fn bank(&self, b: usize) -> &AbsBank<D> {
        &self.banks[b]
    }

    pub fn num_banks(&self) -> usize {
        self.banks.len()
    }

    fn make_bottom(&mut self) {
        self.bottom = true;
    }
}

impl<D: NumDomain> PartialEq for AbsState<D> {
    fn eq(&self, other: &Self) -> bool {
        if self.bottom || other.bottom {
            return self.bottom == other.bottom;
        }
        self.scalar == other.scalar
            && self.e_sf == other.e_sf
            && self.e_p == other.e_p
            && self.banks.iter().zip(&other.banks).all(|(a, b)| Arc::ptr_eq(a, b) || a == b)
    }
}

/// Program layout plus analysis options; every domain operation hangs off
/// this.
#[derive(Clone, Debug)]
pub struct Ctx<'p> {
    prog: &'p Program,
    mode: Mode,
    reduction: Reduction,
    mutation: Option<Mutation>,
    layout: FieldLayout,
    fields: Vec<Vec<Var>>,
    cache_bases: Vec<Var>,
}

impl<'p> Ctx<'p> {
    pub fn new(prog: &'p Program, mode: Mode, reduction: Reduction) -> Self {
        Ctx {
            prog,
            mode,
            reduction,
            mutation: None,
            layout: Arc::new(prog.field_layout().clone()),
            fields: prog.banks.iter().map(|b| b.field_vars().cloned().collect()).collect(),
            cache_bases: prog.banks.iter().map(|b| b.cache_base()).collect(),
        }
    }

    #[doc(hidden)]
    pub fn with_mutation(mut self, m: Option<Mutation>) -> Self {
        self.mutation = m;
        self
    }

    pub fn program(&self) -> &'p Program {
        self.prog
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn strategy(&self) -> Reduction {
        self.reduction
    }

    pub fn bank_fields(&self, b: usize) -> &[Var] {
        &self.fields[b]
    }

    pub fn cache_base(&self, b: usize) -> &Var {
        &self.cache_bases[b]
    }

    /// Everything unconstrained, every bank unused.
    pub fn init<D: NumDomain>(&self) -> AbsState<D> {
        let n = self.prog.banks.len();
        AbsState {
            bottom: false,
            scalar: D::top(),
            e_sf: SplitEq::top(self.layout.clone(), n),
            e_p: EqAbs::top(),
            banks: std::iter::repeat_n(Arc::new(AbsBank::top()), n).collect(),
        }
    }

    /// Describes every concrete state: summaries may hold any object.
    pub fn top<D: NumDomain>(&self) -> AbsState<D> {
        let mut s = self.init();
        let any = AbsBank { flags: Flags { ispk: true, ..Flags::default() }, ..AbsBank::top() };
        s.banks = std::iter::repeat_n(Arc::new(any), self.prog.banks.len()).collect();
        s
    }

    pub fn bottom<D: NumDomain>(&self) -> AbsState<D> {
        let mut s = self.init();
        s.make_bottom();
        s
    }

    fn in_bank(&self, b: usize) -> impl Fn(&Var) -> bool + '_ {
        move |v: &Var| self.layout.get(v) == Some(&b)
    }

    fn monolithic(&self) -> bool {
        self.mode == Mode::Monolithic
    }

    /// The cache of bank `b` as a value over its fields.
    pub fn cache_view<'a, D: NumDomain>(&self, st: &'a AbsState<D>, b: usize) -> Cow<'a, D> {
        if self.monolithic() {
            Cow::Owned(st.scalar.project(&self.in_bank(b)))
        } else {
            Cow::Borrowed(&st.banks[b].cache)
        }
    }

    /// The scalar value without any cache fields.
    pub fn scalar_view<'a, D: NumDomain>(&self, st: &'a AbsState<D>) -> Cow<'a, D> {
        if self.monolithic() {
            Cow::Owned(st.scalar.project(&|v: &Var| !v.is_field()))
        } else {
            Cow::Borrowed(&st.scalar)
        }
    }

    fn map_cache<D: NumDomain>(&self, st: &mut AbsState<D>, b: usize, f: impl FnOnce(&D) -> D) {
        if self.monolithic() {
            st.scalar = f(&st.scalar);
        } else {
            let bank = Arc::make_mut(&mut st.banks[b]);
            bank.cache = f(&bank.cache);
        }
    }

    fn set_cache<D: NumDomain>(&self, st: &mut AbsState<D>, b: usize, d: D) {
        if self.monolithic() {
            let rest = st.scalar.forget_all(&self.fields[b]);
            st.scalar = if d.is_top() { rest } else { rest.meet(&d) };
        } else {
            Arc::make_mut(&mut st.banks[b]).cache = d;
        }
    }

    /// Collapses the state to bottom when a numerical part is empty.
    fn settle<D: NumDomain>(&self, mut st: AbsState<D>) -> AbsState<D> {
        if !st.bottom && (st.scalar.is_bottom() || st.banks.iter().any(|b| b.cache.is_bottom())) {
            st.make_bottom();
        }
        st
    }
}

#[cfg(test)]
mod tests;

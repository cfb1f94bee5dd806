//! Numerical abstract domains.
//!
//! Two implementations share the [`NumDomain`] interface: [`Intervals`]
//! (non-relational boxes) and [`Zones`] (difference-bound matrices kept in
//! shortest-path closed form). Values are immutable: every operation returns
//! a new value.
//!
//! Universes are open. A variable a value does not mention is unconstrained,
//! so lattice operations align the two operands' variable sets instead of
//! rejecting mismatches.

mod interval;
mod linear;
mod zones;

use std::collections::BTreeMap;
use std::fmt;

pub use interval::{Intervals, Itv};
pub use linear::{ConsKind, LinCons, LinExpr};
pub use zones::Zones;

use crate::var::Var;

/// A concrete point used by [`NumDomain::sat`]. Variables missing from the
/// map are existentially quantified.
pub type Valuation = BTreeMap<Var, i64>;

pub trait NumDomain: Clone + fmt::Debug + fmt::Display + PartialEq + Send + Sync + 'static {
    /// Short name used in reports (`"zones"`, `"intervals"`).
    const NAME: &'static str;

    fn top() -> Self;
    fn bottom() -> Self;
    fn is_bottom(&self) -> bool;
    fn is_top(&self) -> bool;

    fn join(&self, other: &Self) -> Self;
    fn meet(&self, other: &Self) -> Self;
    fn widen(&self, other: &Self) -> Self;
    fn narrow(&self, other: &Self) -> Self;
    fn leq(&self, other: &Self) -> bool;

    fn add_cons(&self, c: &LinCons) -> Self;
    fn assign(&self, v: &Var, e: &LinExpr) -> Self;
    fn forget(&self, v: &Var) -> Self;
    /// Keeps only the listed variables.
    fn project(&self, keep: &dyn Fn(&Var) -> bool) -> Self;
    /// Adds `dst` as a copy of `src`: same relations to every other variable,
    /// none between the two. `dst` is forgotten first.
    fn expand(&self, src: &Var, dst: &Var) -> Self;

    /// Constraints entailed by the value, in a stable sorted order.
    fn to_cons(&self) -> Vec<LinCons>;
    fn interval(&self, v: &Var) -> Itv;
    fn sat(&self, point: &Valuation) -> bool;
    /// Variables the value currently constrains.
    fn vars(&self) -> Vec<Var>;

    fn add_all(&self, cs: &[LinCons]) -> Self {
        let mut d = self.clone();
        for c in cs {
            if d.is_bottom() {
                break;
            }
            d = d.add_cons(c);
        }
        d
    }

    fn forget_all(&self, vs: &[Var]) -> Self {
        let mut d = self.clone();
        for v in vs {
            d = d.forget(v);
        }
        d
    }

    /// True when every point of `self` satisfies `c`.
    fn entails(&self, c: &LinCons) -> bool {
        if self.is_bottom() {
            return true;
        }
        c.negate().iter().all(|n| self.add_cons(n).is_bottom())
    }

    fn constrains(&self, v: &Var) -> bool {
        self.vars().iter().any(|x| x == v)
    }
}

/// Renders constraints as `a; b; c`, or `top` / `bottom`.
pub fn format_cons<D: NumDomain>(d: &D) -> String {
    if d.is_bottom() {
        return "bottom".to_string();
    }
    let cs = d.to_cons();
    if cs.is_empty() {
        return "top".to_string();
    }
    cs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("; ")
}

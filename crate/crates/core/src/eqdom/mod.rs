//! Variable-equality domain: partitions of variables into classes of
//! must-equal values.
//!
//! Only classes with at least two members are stored; every other variable
//! is an implicit singleton. The representative of a class is its smallest
//! member, which makes structural equality coincide with equality of
//! partitions.

mod split;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use split::{FieldLayout, SplitEq};

use crate::numdom::LinCons;
use crate::var::Var;

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct EqAbs {
    rep: BTreeMap<Var, Var>,
    classes: BTreeMap<Var, BTreeSet<Var>>,
}

impl EqAbs {
    /// The all-singletons partition.
    pub fn top() -> Self {
        EqAbs::default()
    }

    pub fn is_top(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn from_classes<I, C>(classes: I) -> Self
    where
        I: IntoIterator<Item = C>,
        C: IntoIterator<Item = Var>,
    {
        let mut e = EqAbs::top();
        for c in classes {
            e.merge(c.into_iter().collect());
        }
        e
    }

    /// Makes `c` one class, absorbing every class it overlaps.
    fn merge(&mut self, mut c: BTreeSet<Var>) {
        let overlapping: BTreeSet<Var> = c.iter().filter_map(|v| self.rep.get(v)).cloned().collect();
        for r in overlapping {
            let old = self.classes.remove(&r).unwrap();
            for m in &old {
                self.rep.remove(m);
            }
            c.extend(old);
        }
        self.insert_class(c);
    }

    pub fn find(&self, v: &Var) -> Var {
        self.rep.get(v).cloned().unwrap_or_else(|| v.clone())
    }

    pub fn equals_q(&self, x: &Var, y: &Var) -> bool {
        x == y || self.rep.get(x).is_some_and(|r| self.rep.get(y) == Some(r))
    }

    /// The class of `v`, including `v` itself.
    pub fn class_of(&self, v: &Var) -> BTreeSet<Var> {
        match self.rep.get(v) {
            Some(r) => self.classes[r].clone(),
            None => BTreeSet::from([v.clone()]),
        }
    }

    /// Non-singleton classes, ordered by representative.
    pub fn classes(&self) -> impl Iterator<Item = &BTreeSet<Var>> {
        self.classes.values()
    }

    /// Variables belonging to some non-singleton class.
    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.rep.keys()
    }

    pub fn mentions(&self, v: &Var) -> bool {
        self.rep.contains_key(v)
    }

    /// Merges the classes of `x` and `y`.
    pub fn union(&mut self, x: &Var, y: &Var) {
        if self.equals_q(x, y) {
            return;
        }
        self.merge(BTreeSet::from([x.clone(), y.clone()]));
    }

    fn take_class(&mut self, v: &Var) -> BTreeSet<Var> {
        match self.rep.get(v).cloned() {
            Some(r) => {
                let c = self.classes.remove(&r).unwrap();
                for m in &c {
                    self.rep.remove(m);
                }
                c
            }
            None => BTreeSet::from([v.clone()]),
        }
    }

    fn insert_class(&mut self, c: BTreeSet<Var>) {
        if c.len() < 2 {
            return;
        }
        let r = c.first().unwrap().clone();
        for m in &c {
            self.rep.insert(m.clone(), r.clone());
        }
        self.classes.insert(r, c);
    }

    /// Makes `y` a fresh singleton, then puts it in the class of `x`.
    pub fn add_equal(&self, x: &Var, y: &Var) -> Self {
        if x == y {
            return self.clone();
        }
        let mut e = self.forget(y);
        e.union(x, y);
        e
    }

    /// Removes `v` from its class; the other members stay related.
    pub fn forget(&self, v: &Var) -> Self {
        if !self.rep.contains_key(v) {
            return self.clone();
        }
        let mut e = self.clone();
        e.forget_mut(v);
        e
    }

    pub(crate) fn forget_mut(&mut self, v: &Var) {
        if !self.rep.contains_key(v) {
            return;
        }
        let mut c = self.take_class(v);
        c.remove(v);
        self.insert_class(c);
    }

    pub fn project(&self, keep: &dyn Fn(&Var) -> bool) -> Self {
        let mut e = EqAbs::top();
        for c in self.classes.values() {
            e.insert_class(c.iter().filter(|v| keep(v)).cloned().collect());
        }
        e
    }

    /// Pairs related in both operands.
    pub fn join(&self, other: &Self) -> Self {
        let mut groups: BTreeMap<(Var, Var), BTreeSet<Var>> = BTreeMap::new();
        for (v, r) in &self.rep {
            if let Some(s) = other.rep.get(v) {
                groups.entry((r.clone(), s.clone())).or_default().insert(v.clone());
            }
        }
        let mut e = EqAbs::top();
        for c in groups.into_values() {
            e.insert_class(c);
        }
        e
    }

    /// Transitive closure of the pairs related in either operand.
    pub fn meet(&self, other: &Self) -> Self {
        let mut e = self.clone();
        for c in other.classes.values() {
            e.merge(c.clone());
        }
        e
    }

    /// Partitions form a finite lattice, so widening is join.
    pub fn widen(&self, other: &Self) -> Self {
        self.join(other)
    }

    pub fn narrow(&self, other: &Self) -> Self {
        self.meet(other)
    }

    /// Every equality of `other` holds in `self`.
    pub fn leq(&self, other: &Self) -> bool {
        other.classes.values().all(|c| {
            let first = c.first().unwrap();
            c.iter().all(|v| self.equals_q(first, v))
        })
    }

    /// All pairwise equalities, class by class.
    pub fn to_cons(&self) -> Vec<LinCons> {
        let mut out = Vec::new();
        for c in self.classes.values() {
            let members: Vec<&Var> = c.iter().collect();
            for (i, x) in members.iter().enumerate() {
                for y in &members[i + 1..] {
                    out.push(LinCons::var_eq(x, y));
                }
            }
        }
        out
    }

    /// One equality per non-representative member; same closure as
    /// [`EqAbs::to_cons`] with linearly many constraints.
    pub fn spanning_cons(&self) -> Vec<LinCons> {
        self.rep
            .iter()
            .filter(|(v, r)| v != r)
            .map(|(v, r)| LinCons::var_eq(r, v))
            .collect()
    }
}

impl fmt::Display for EqAbs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for c in self.classes.values() {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            let names: Vec<&str> = c.iter().map(Var::name).collect();
            write!(f, "{{{}}}", names.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vs(names: &[&str]) -> Vec<Var> {
        names.iter().copied().map(Var::new).collect()
    }

    fn example() -> (EqAbs, EqAbs) {
        let a = EqAbs::from_classes([vs(&["x", "y", "z"]), vs(&["s", "t"])]);
        let b = EqAbs::from_classes([vs(&["x", "y"])]);
        (a, b)
    }

    #[test]
    fn worked_example() {
        let (a, b) = example();
        assert_eq!(a.join(&b), b);
        assert_eq!(a.meet(&b), a);
        assert!(a.leq(&b));
        assert!(!b.leq(&a));
        let cons: Vec<String> = a.to_cons().iter().map(|c| c.to_string()).collect();
        assert_eq!(cons, ["s - t = 0", "x - y = 0", "x - z = 0", "y - z = 0"]);
        assert_eq!(a.to_string(), "{s,t} {x,y,z}");
    }

    #[test]
    fn add_equal_then_forget() {
        let [x, y] = [Var::new("x"), Var::new("y")];
        let e = EqAbs::top().add_equal(&x, &y);
        assert!(e.equals_q(&x, &y));
        let f = e.forget(&y);
        assert!(!f.equals_q(&x, &y));
        assert_eq!(f, EqAbs::top());
    }

    #[test]
    fn add_equal_moves_rather_than_merges() {
        let e = EqAbs::from_classes([vs(&["a", "b"]), vs(&["c", "d"])]);
        let e = e.add_equal(&Var::new("a"), &Var::new("c"));
        assert_eq!(e.to_string(), "{a,b,c}");
    }

    #[test]
    fn meet_is_transitive() {
        let a = EqAbs::from_classes([vs(&["x", "y"])]);
        let b = EqAbs::from_classes([vs(&["y", "z"])]);
        assert_eq!(a.meet(&b).to_string(), "{x,y,z}");
    }

    #[test]
    fn forget_keeps_the_rest_of_the_class() {
        let e = EqAbs::from_classes([vs(&["a", "b", "c"])]);
        assert_eq!(e.forget(&Var::new("a")).to_string(), "{b,c}");
    }
}

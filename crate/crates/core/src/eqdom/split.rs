use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use super::EqAbs;
use crate::var::Var;

/// Field variable to bank index. Variables not listed are scalars.
pub type FieldLayout = Arc<BTreeMap<Var, usize>>;

/// An equality partition over scalars and bank fields, stored as one
/// partition for scalars plus one per bank.
///
/// A class spanning several parts is represented in each of them with an
/// extra link variable (`~k`) shared by all the pieces. Dropping every field
/// of a bank, which happens on each cache replacement, then only touches that
/// bank's part and the links it carries. Observable behaviour is that of the
/// single merged partition returned by [`SplitEq::to_monolithic`].
#[derive(Clone, Debug)]
pub struct SplitEq {
    layout: FieldLayout,
    /// Index 0 holds scalars, index `b + 1` holds the fields of bank `b`.
    parts: Vec<EqAbs>,
    links: BTreeMap<Var, BTreeSet<usize>>,
    next_link: u64,
}

fn is_link(v: &Var) -> bool {
    v.name().starts_with('~')
}

impl SplitEq {
    pub fn top(layout: FieldLayout, banks: usize) -> Self {
        SplitEq { layout, parts: vec![EqAbs::top(); banks + 1], links: BTreeMap::new(), next_link: 0 }
    }

    pub fn from_monolithic(layout: FieldLayout, banks: usize, e: &EqAbs) -> Self {
        let mut s = SplitEq::top(layout, banks);
        for c in e.classes() {
            let mut by_part: BTreeMap<usize, BTreeSet<Var>> = BTreeMap::new();
            for v in c {
                by_part.entry(s.part_of(v)).or_default().insert(v.clone());
            }
            if by_part.len() == 1 {
                let (p, members) = by_part.into_iter().next().unwrap();
                s.parts[p].insert_class(members);
                continue;
            }
            let l = s.fresh_link();
            s.links.insert(l.clone(), by_part.keys().copied().collect());
            for (p, mut members) in by_part {
                members.insert(l.clone());
                s.parts[p].insert_class(members);
            }
        }
        s
    }

    pub fn to_monolithic(&self) -> EqAbs {
        let mut e = EqAbs::top();
        for (p, part) in self.parts.iter().enumerate() {
            for c in part.classes() {
                match c.iter().find(|v| is_link(v)) {
                    None => e.insert_class(c.clone()),
                    Some(l) if self.links[l].first() == Some(&p) => e.insert_class(self.expand(l)),
                    Some(_) => {}
                }
            }
        }
        e
    }

    pub fn layout(&self) -> &FieldLayout {
        &self.layout
    }

    pub fn is_top(&self) -> bool {
        self.parts.iter().all(EqAbs::is_top)
    }

    fn part_of(&self, v: &Var) -> usize {
        self.layout.get(v).map_or(0, |b| b + 1)
    }

    fn fresh_link(&mut self) -> Var {
        let l = Var::new(format!("~{}", self.next_link));
        self.next_link += 1;
        l
    }

    fn link_of(&self, v: &Var) -> Option<Var> {
        let part = &self.parts[self.part_of(v)];
        if !part.mentions(v) {
            return None;
        }
        part.class_of(v).into_iter().find(is_link)
    }

    /// All non-link members of the class carrying link `l`.
    fn expand(&self, l: &Var) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        for &q in &self.links[l] {
            out.extend(self.parts[q].class_of(l).into_iter().filter(|v| !is_link(v)));
        }
        out
    }

    pub fn class_of(&self, v: &Var) -> BTreeSet<Var> {
        match self.link_of(v) {
            Some(l) => self.expand(&l),
            None => self.parts[self.part_of(v)].class_of(v),
        }
    }

    pub fn equals_q(&self, x: &Var, y: &Var) -> bool {
        if x == y {
            return true;
        }
        let (px, py) = (self.part_of(x), self.part_of(y));
        if px == py && self.parts[px].equals_q(x, y) {
            return true;
        }
        match (self.link_of(x), self.link_of(y)) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        }
    }

    /// Full classes that contain at least one field of bank `b`.
    pub fn bank_classes(&self, b: usize) -> Vec<BTreeSet<Var>> {
        self.parts[b + 1]
            .classes()
            .map(|c| match c.iter().find(|v| is_link(v)) {
                Some(l) => self.expand(l),
                None => c.clone(),
            })
            .collect()
    }

    /// Whether some field of bank `b` is equal to a variable outside the bank.
    pub fn bank_is_linked(&self, b: usize) -> bool {
        self.links.values().any(|ps| ps.contains(&(b + 1)))
    }

    pub fn forget(&self, v: &Var) -> Self {
        let mut s = self.clone();
        s.forget_mut(v);
        s
    }

    fn forget_mut(&mut self, v: &Var) {
        let p = self.part_of(v);
        if !self.parts[p].mentions(v) {
            return;
        }
        let link = self.link_of(v);
        self.parts[p].forget_mut(v);
        if let Some(l) = link {
            if !self.parts[p].mentions(&l) {
                self.detach(&l, p);
            }
        }
    }

    /// Part `p` no longer carries link `l`.
    fn detach(&mut self, l: &Var, p: usize) {
        let ps = self.links.get_mut(l).unwrap();
        ps.remove(&p);
        if ps.len() == 1 {
            let q = *ps.first().unwrap();
            self.links.remove(l);
            self.parts[q].forget_mut(l);
        }
    }

    /// Makes `y` a fresh singleton, then puts it in the class of `x`.
    pub fn add_equal(&self, x: &Var, y: &Var) -> Self {
        if x == y {
            return self.clone();
        }
        let mut s = self.clone();
        s.forget_mut(y);
        s.union_mut(x, y);
        s
    }

    /// Merges the classes of `x` and `y`.
    pub fn union(&self, x: &Var, y: &Var) -> Self {
        let mut s = self.clone();
        s.union_mut(x, y);
        s
    }

    fn union_mut(&mut self, x: &Var, y: &Var) {
        if self.equals_q(x, y) {
            return;
        }
        let (px, py) = (self.part_of(x), self.part_of(y));
        let (lx, ly) = (self.link_of(x), self.link_of(y));
        if px == py {
            match (lx, ly) {
                (Some(a), Some(b)) => self.merge_links(&a, &b),
                _ => self.parts[px].union(x, y),
            }
            return;
        }
        let l = match lx {
            Some(l) => l,
            None => {
                let l = self.fresh_link();
                self.parts[px].union(x, &l);
                self.links.insert(l.clone(), BTreeSet::from([px]));
                l
            }
        };
        match ly {
            None => {
                self.parts[py].union(y, &l);
                self.links.get_mut(&l).unwrap().insert(py);
            }
            Some(m) => self.merge_links(&l, &m),
        }
    }

    /// Replaces link `b` by link `a` everywhere, merging the classes.
    fn merge_links(&mut self, a: &Var, b: &Var) {
        let parts_b = self.links.remove(b).unwrap();
        for &q in &parts_b {
            self.parts[q].union(a, b);
            self.parts[q].forget_mut(b);
        }
        self.links.get_mut(a).unwrap().extend(parts_b);
    }

    /// Forgets every field of bank `b`.
    pub fn forget_bank(&self, b: usize) -> Self {
        let p = b + 1;
        if self.parts[p].is_top() {
            return self.clone();
        }
        let mut s = self.clone();
        let carried: Vec<Var> =
            s.links.iter().filter(|(_, ps)| ps.contains(&p)).map(|(l, _)| l.clone()).collect();
        s.parts[p] = EqAbs::top();
        for l in carried {
            s.detach(&l, p);
        }
        s
    }

    fn lift(&self, f: impl Fn(&EqAbs) -> EqAbs) -> Self {
        SplitEq::from_monolithic(self.layout.clone(), self.parts.len() - 1, &f(&self.to_monolithic()))
    }

    pub fn join(&self, other: &Self) -> Self {
        self.lift(|e| e.join(&other.to_monolithic()))
    }

    pub fn meet(&self, other: &Self) -> Self {
        self.lift(|e| e.meet(&other.to_monolithic()))
    }

    pub fn widen(&self, other: &Self) -> Self {
        self.join(other)
    }

    pub fn narrow(&self, other: &Self) -> Self {
        self.meet(other)
    }

    pub fn leq(&self, other: &Self) -> bool {
        self.to_monolithic().leq(&other.to_monolithic())
    }

    pub fn project(&self, keep: &dyn Fn(&Var) -> bool) -> Self {
        self.lift(|e| e.project(keep))
    }
}

impl PartialEq for SplitEq {
    fn eq(&self, other: &Self) -> bool {
        self.to_monolithic() == other.to_monolithic()
    }
}

impl fmt::Display for SplitEq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_monolithic().fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const NAMES: [&str; 8] = ["a", "b", "c", "@f", "@g", "@h", "@k", "@m"];

    fn layout() -> FieldLayout {
        // @f @g in bank 0, @h @k @m in bank 1
        Arc::new(
            [("@f", 0), ("@g", 0), ("@h", 1), ("@k", 1), ("@m", 1)]
                .into_iter()
                .map(|(n, b)| (Var::new(n), b))
                .collect(),
        )
    }

    #[derive(Clone, Debug)]
    enum Op {
        AddEqual(usize, usize),
        Union(usize, usize),
        Forget(usize),
        ForgetBank(usize),
    }

    fn arb_op() -> impl Strategy<Value = Op> {
        prop_oneof![
            (0..8usize, 0..8usize).prop_map(|(x, y)| Op::AddEqual(x, y)),
            (0..8usize, 0..8usize).prop_map(|(x, y)| Op::Union(x, y)),
            (0..8usize).prop_map(Op::Forget),
            (0..2usize).prop_map(Op::ForgetBank),
        ]
    }

    fn apply(ops: &[Op]) -> (SplitEq, EqAbs) {
        let mut s = SplitEq::top(layout(), 2);
        let mut m = EqAbs::top();
        let var = |i: usize| Var::new(NAMES[i]);
        for op in ops {
            match op {
                Op::AddEqual(x, y) => {
                    s = s.add_equal(&var(*x), &var(*y));
                    m = m.add_equal(&var(*x), &var(*y));
                }
                Op::Union(x, y) => {
                    s = s.union(&var(*x), &var(*y));
                    m.union(&var(*x), &var(*y));
                }
                Op::Forget(x) => {
                    s = s.forget(&var(*x));
                    m = m.forget(&var(*x));
                }
                Op::ForgetBank(b) => {
                    s = s.forget_bank(*b);
                    let l = layout();
                    m = m.project(&|v| l.get(v) != Some(b));
                }
            }
        }
        (s, m)
    }

    proptest! {
        #[test]
        fn agrees_with_single_partition(ops in proptest::collection::vec(arb_op(), 0..30)) {
            let (s, m) = apply(&ops);
            prop_assert_eq!(s.to_monolithic(), m.clone());
            for x in NAMES {
                for y in NAMES {
                    let (x, y) = (Var::new(x), Var::new(y));
                    prop_assert_eq!(s.equals_q(&x, &y), m.equals_q(&x, &y));
                }
                let x = Var::new(x);
                prop_assert_eq!(s.class_of(&x), m.class_of(&x));
            }
            // no dangling links survive
            for (l, ps) in &s.links {
                prop_assert!(ps.len() >= 2, "link {} in {:?}", l, ps);
                for &p in ps {
                    prop_assert!(s.parts[p].mentions(l));
                }
            }
        }

        #[test]
        fn lattice_ops_agree(a in proptest::collection::vec(arb_op(), 0..20),
                             b in proptest::collection::vec(arb_op(), 0..20)) {
            let (sa, ma) = apply(&a);
            let (sb, mb) = apply(&b);
            prop_assert_eq!(sa.join(&sb).to_monolithic(), ma.join(&mb));
            prop_assert_eq!(sa.meet(&sb).to_monolithic(), ma.meet(&mb));
            prop_assert_eq!(sa.leq(&sb), ma.leq(&mb));
            let back = SplitEq::from_monolithic(layout(), 2, &ma);
            prop_assert_eq!(back.to_monolithic(), ma);
        }
    }
}

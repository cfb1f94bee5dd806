use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ConsKind, LinCons, LinExpr, NumDomain, Valuation};
use crate::var::Var;

/// Closed integer interval; `None` bounds are infinite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Itv {
    pub lo: Option<i64>,
    pub hi: Option<i64>,
}

impl Itv {
    pub const TOP: Itv = Itv { lo: None, hi: None };

    pub fn new(lo: Option<i64>, hi: Option<i64>) -> Self {
        Itv { lo, hi }
    }

    pub fn point(c: i64) -> Self {
        Itv { lo: Some(c), hi: Some(c) }
    }

    pub fn is_top(&self) -> bool {
        self.lo.is_none() && self.hi.is_none()
    }

    pub fn is_empty(&self) -> bool {
        matches!((self.lo, self.hi), (Some(l), Some(h)) if l > h)
    }

    pub fn contains(&self, v: i64) -> bool {
        self.lo.is_none_or(|l| l <= v) && self.hi.is_none_or(|h| v <= h)
    }

    pub fn as_point(&self) -> Option<i64> {
        match (self.lo, self.hi) {
            (Some(l), Some(h)) if l == h => Some(l),
            _ => None,
        }
    }

    pub fn join(&self, o: &Itv) -> Itv {
        Itv {
            lo: self.lo.zip(o.lo).map(|(a, b)| a.min(b)),
            hi: self.hi.zip(o.hi).map(|(a, b)| a.max(b)),
        }
    }

    pub fn meet(&self, o: &Itv) -> Itv {
        Itv {
            lo: max_opt(self.lo, o.lo),
            hi: min_opt(self.hi, o.hi),
        }
    }

    pub fn widen(&self, o: &Itv) -> Itv {
        Itv {
            lo: self.lo.zip(o.lo).and_then(|(a, b)| (b >= a).then_some(a)),
            hi: self.hi.zip(o.hi).and_then(|(a, b)| (b <= a).then_some(a)),
        }
    }

    pub fn narrow(&self, o: &Itv) -> Itv {
        Itv { lo: self.lo.or(o.lo), hi: self.hi.or(o.hi) }
    }

    pub fn leq(&self, o: &Itv) -> bool {
        let lo_ok = match (self.lo, o.lo) {
            (_, None) => true,
            (None, Some(_)) => false,
            (Some(a), Some(b)) => a >= b,
        };
        let hi_ok = match (self.hi, o.hi) {
            (_, None) => true,
            (None, Some(_)) => false,
            (Some(a), Some(b)) => a <= b,
        };
        lo_ok && hi_ok
    }
}

fn max_opt(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) | (None, x) => x,
    }
}

fn min_opt(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) | (None, x) => x,
    }
}

impl fmt::Display for Itv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.lo {
            Some(l) => write!(f, "[{l}, ")?,
            None => write!(f, "[-oo, ")?,
        }
        match self.hi {
            Some(h) => write!(f, "{h}]"),
            None => write!(f, "+oo]"),
        }
    }
}

pub(crate) fn div_floor(a: i128, b: i128) -> i128 {
    let q = a / b;
    if a % b != 0 && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

pub(crate) fn div_ceil(a: i128, b: i128) -> i128 {
    let q = a / b;
    if a % b != 0 && ((a < 0) == (b < 0)) {
        q + 1
    } else {
        q
    }
}

/// Clamps an upper bound into `i64`; overflowing bounds become infinite,
/// underflowing ones are loosened to `i64::MIN`.
pub(crate) fn upper_to_i64(v: i128) -> Option<i64> {
    if v > i64::MAX as i128 {
        None
    } else {
        Some(v.max(i64::MIN as i128) as i64)
    }
}

pub(crate) fn lower_to_i64(v: i128) -> Option<i64> {
    if v < i64::MIN as i128 {
        None
    } else {
        Some(v.min(i64::MAX as i128) as i64)
    }
}

/// Minimum of `a·x` for `x` in `itv`, `None` when unbounded.
pub(crate) fn term_min(a: i64, itv: &Itv) -> Option<i128> {
    let b = if a > 0 { itv.lo } else { itv.hi }?;
    Some(a as i128 * b as i128)
}

pub(crate) fn term_max(a: i64, itv: &Itv) -> Option<i128> {
    let b = if a > 0 { itv.hi } else { itv.lo }?;
    Some(a as i128 * b as i128)
}

/// Range of `e` given per-variable ranges.
pub(crate) fn expr_range(e: &LinExpr, itv: &dyn Fn(&Var) -> Itv) -> (Option<i128>, Option<i128>) {
    let mut lo = Some(e.constant_term() as i128);
    let mut hi = lo;
    for (v, a) in e.terms() {
        let r = itv(v);
        lo = lo.zip(term_min(a, &r)).map(|(x, y)| x + y);
        hi = hi.zip(term_max(a, &r)).map(|(x, y)| x + y);
    }
    (lo, hi)
}

/// Per-variable bounds implied by `e <= 0`.
pub(crate) fn propagate_le(e: &LinExpr, itv: &dyn Fn(&Var) -> Itv) -> Vec<(Var, Itv)> {
    let terms: Vec<(Var, i64, Itv)> = e.terms().map(|(v, a)| (v.clone(), a, itv(v))).collect();
    let mut out = Vec::new();
    for (j, (vj, aj, _)) in terms.iter().enumerate() {
        let mut rest = Some(e.constant_term() as i128);
        for (i, (_, ai, ri)) in terms.iter().enumerate() {
            if i != j {
                rest = rest.zip(term_min(*ai, ri)).map(|(x, y)| x + y);
            }
        }
        let Some(rest) = rest else { continue };
        // aj * vj <= -rest
        let b = -rest;
        let bound = if *aj > 0 {
            Itv::new(None, upper_to_i64(div_floor(b, *aj as i128)))
        } else {
            Itv::new(lower_to_i64(div_ceil(b, *aj as i128)), None)
        };
        out.push((vj.clone(), bound));
    }
    out
}

/// Non-relational boxes. Variables absent from the map are unbounded.
#[derive(Clone, Debug)]
pub struct Intervals {
    env: Option<BTreeMap<Var, Itv>>,
}

impl Intervals {
    fn from_env(env: BTreeMap<Var, Itv>) -> Self {
        if env.values().any(Itv::is_empty) {
            return Self::bottom();
        }
        Intervals { env: Some(env.into_iter().filter(|(_, i)| !i.is_top()).collect()) }
    }

    fn pointwise(&self, other: &Self, f: impl Fn(&Itv, &Itv) -> Itv) -> Self {
        let (Some(a), Some(b)) = (&self.env, &other.env) else { unreachable!() };
        let mut env = BTreeMap::new();
        for v in a.keys().chain(b.keys()) {
            let x = a.get(v).copied().unwrap_or(Itv::TOP);
            let y = b.get(v).copied().unwrap_or(Itv::TOP);
            env.insert(v.clone(), f(&x, &y));
        }
        Self::from_env(env)
    }

    fn refine(&self, v: &Var, r: Itv) -> Self {
        let Some(env) = &self.env else { return self.clone() };
        let mut env = env.clone();
        let cur = env.get(v).copied().unwrap_or(Itv::TOP);
        env.insert(v.clone(), cur.meet(&r));
        Self::from_env(env)
    }

    fn lookup(&self, v: &Var) -> Itv {
        self.env.as_ref().and_then(|e| e.get(v).copied()).unwrap_or(Itv::TOP)
    }

    fn add_le(&self, e: &LinExpr) -> Self {
        let (lo, _) = expr_range(e, &|v| self.lookup(v));
        if lo.is_some_and(|l| l > 0) {
            return Self::bottom();
        }
        let mut d = self.clone();
        for (v, r) in propagate_le(e, &|v| self.lookup(v)) {
            d = d.refine(&v, r);
            if d.is_bottom() {
                break;
            }
        }
        d
    }
}

impl PartialEq for Intervals {
    fn eq(&self, other: &Self) -> bool {
        self.env == other.env
    }
}

impl fmt::Display for Intervals {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::format_cons(self))
    }
}

impl NumDomain for Intervals {
    const NAME: &'static str = "intervals";

    fn top() -> Self {
        Intervals { env: Some(BTreeMap::new()) }
    }

    fn bottom() -> Self {
        Intervals { env: None }
    }

    fn is_bottom(&self) -> bool {
        self.env.is_none()
    }

    fn is_top(&self) -> bool {
        self.env.as_ref().is_some_and(|e| e.is_empty())
    }

    fn join(&self, other: &Self) -> Self {
        if self.is_bottom() {
            return other.clone();
        }
        if other.is_bottom() {
            return self.clone();
        }
        self.pointwise(other, Itv::join)
    }

    fn meet(&self, other: &Self) -> Self {
        if self.is_bottom() || other.is_bottom() {
            return Self::bottom();
        }
        self.pointwise(other, Itv::meet)
    }

    fn widen(&self, other: &Self) -> Self {
        if self.is_bottom() {
            return other.clone();
        }
        if other.is_bottom() {
            return self.clone();
        }
        self.pointwise(other, Itv::widen)
    }

    fn narrow(&self, other: &Self) -> Self {
        if self.is_bottom() || other.is_bottom() {
            return Self::bottom();
        }
        self.pointwise(other, Itv::narrow)
    }

    fn leq(&self, other: &Self) -> bool {
        match (&self.env, &other.env) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(_), Some(b)) => b.iter().all(|(v, r)| self.lookup(v).leq(r)),
        }
    }

    fn add_cons(&self, c: &LinCons) -> Self {
        if self.is_bottom() {
            return self.clone();
        }
        let c = c.normalized();
        match c.kind {
            ConsKind::Le => self.add_le(&c.expr),
            ConsKind::Eq => self.add_le(&c.expr).add_le(&c.expr.scaled(-1)),
            ConsKind::Ne => {
                let (lo, hi) = expr_range(&c.expr, &|v| self.lookup(v));
                if lo == Some(0) && hi == Some(0) {
                    return Self::bottom();
                }
                // x + k != 0 trims an interval end equal to -k
                let mut terms = c.expr.terms();
                if let (Some((v, a)), None) = (terms.next(), terms.next()) {
                    if a.abs() == 1 {
                        let forbidden = -c.expr.constant_term() * a;
                        let r = self.lookup(v);
                        if r.lo == Some(forbidden) {
                            return self.refine(v, Itv::new(forbidden.checked_add(1), None));
                        }
                        if r.hi == Some(forbidden) {
                            return self.refine(v, Itv::new(None, forbidden.checked_sub(1)));
                        }
                    }
                }
                self.clone()
            }
            ConsKind::Lt => unreachable!("normalized away"),
        }
    }

    fn assign(&self, v: &Var, e: &LinExpr) -> Self {
        if self.is_bottom() {
            return self.clone();
        }
        let (lo, hi) = expr_range(e, &|x| self.lookup(x));
        let r = Itv::new(lo.and_then(lower_to_i64), hi.and_then(upper_to_i64));
        let mut env = self.env.clone().unwrap();
        env.insert(v.clone(), r);
        Self::from_env(env)
    }

    fn forget(&self, v: &Var) -> Self {
        match &self.env {
            None => self.clone(),
            Some(env) => {
                let mut env = env.clone();
                env.remove(v);
                Intervals { env: Some(env) }
            }
        }
    }

    fn project(&self, keep: &dyn Fn(&Var) -> bool) -> Self {
        match &self.env {
            None => self.clone(),
            Some(env) => Intervals {
                env: Some(env.iter().filter(|(v, _)| keep(v)).map(|(v, i)| (v.clone(), *i)).collect()),
            },
        }
    }

    fn expand(&self, src: &Var, dst: &Var) -> Self {
        let d = self.forget(dst);
        let r = d.lookup(src);
        d.refine(dst, r)
    }

    fn to_cons(&self) -> Vec<LinCons> {
        let Some(env) = &self.env else { return Vec::new() };
        let mut out = Vec::new();
        for (v, r) in env {
            if let Some(c) = r.as_point() {
                out.push(LinCons::eq(LinExpr::var(v.clone()), &LinExpr::constant(c)));
                continue;
            }
            if let Some(h) = r.hi {
                out.push(LinCons::diff_le(Some(v), None, h));
            }
            if let Some(l) = r.lo {
                out.push(LinCons::diff_le(None, Some(v), -l));
            }
        }
        out
    }

    fn interval(&self, v: &Var) -> Itv {
        if self.is_bottom() {
            return Itv::new(Some(1), Some(0));
        }
        self.lookup(v)
    }

    fn sat(&self, point: &Valuation) -> bool {
        match &self.env {
            None => false,
            Some(env) => env.iter().all(|(v, r)| point.get(v).is_none_or(|x| r.contains(*x))),
        }
    }

    fn vars(&self) -> Vec<Var> {
        self.env.as_ref().map(|e| e.keys().cloned().collect()).unwrap_or_default()
    }

    fn constrains(&self, v: &Var) -> bool {
        self.env.as_ref().is_some_and(|e| e.contains_key(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Var {
        Var::new(s)
    }

    #[test]
    fn nonnull_becomes_lower_bound_one() {
        let d = Intervals::top()
            .add_cons(&LinCons::diff_le(None, Some(&v("p")), 0))
            .add_cons(&LinCons::ne(LinExpr::var(v("p")), &LinExpr::constant(0)));
        assert_eq!(d.interval(&v("p")), Itv::new(Some(1), None));
    }

    #[test]
    fn linear_propagation() {
        // 2x + y <= 10, y >= 4  ==>  x <= 3
        let d = Intervals::top().add_cons(&LinCons::diff_le(None, Some(&v("y")), -4));
        let e = LinExpr::term(v("x"), 2).plus(&LinExpr::var(v("y")));
        let d = d.add_cons(&LinCons::le(e, &LinExpr::constant(10)));
        assert_eq!(d.interval(&v("x")).hi, Some(3));
    }

    #[test]
    fn widen_drops_unstable_bounds() {
        let a = Intervals::top().assign(&v("i"), &LinExpr::constant(0));
        let b = a.join(&Intervals::top().assign(&v("i"), &LinExpr::constant(1)));
        let w = a.widen(&b);
        assert_eq!(w.interval(&v("i")), Itv::new(Some(0), None));
        assert!(b.leq(&w));
    }

    #[test]
    fn floor_and_ceil_division() {
        assert_eq!(div_floor(-7, 2), -4);
        assert_eq!(div_floor(7, -2), -4);
        assert_eq!(div_ceil(-7, 2), -3);
        assert_eq!(div_ceil(7, 2), 4);
    }
}

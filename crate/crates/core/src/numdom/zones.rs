use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;

use super::interval::{div_floor, expr_range, propagate_le, term_min, upper_to_i64};
use super::{ConsKind, Itv, LinCons, LinExpr, NumDomain, Valuation};
use crate::var::Var;

const INF: i64 = i64::MAX;

/// `x - y` (or `x` alone) with optional lower and upper bounds.
type Bound = (Var, Option<Var>, Option<i64>, Option<i64>);

fn add(a: i64, b: i64) -> i64 {
    if a == INF || b == INF {
        INF
    } else {
        a.saturating_add(b)
    }
}

/// Difference-bound matrix. Index 0 is the constant zero; variable `vars[k]`
/// lives at index `k + 1`. Entry `(i, j)` bounds `x_i - x_j`.
#[derive(Clone, Debug)]
struct Dbm {
    vars: Vec<Var>,
    idx: BTreeMap<Var, usize>,
    m: Vec<i64>,
    closed: bool,
}

impl Dbm {
    fn top() -> Self {
        Dbm { vars: Vec::new(), idx: BTreeMap::new(), m: vec![0], closed: true }
    }

    fn n(&self) -> usize {
        self.vars.len() + 1
    }

    fn get(&self, i: usize, j: usize) -> i64 {
        self.m[i * self.n() + j]
    }

    fn set(&mut self, i: usize, j: usize, c: i64) {
        let n = self.n();
        self.m[i * n + j] = c;
    }

    fn with_vars(vars: Vec<Var>) -> Self {
        let n = vars.len() + 1;
        let mut m = vec![INF; n * n];
        for i in 0..n {
            m[i * n + i] = 0;
        }
        let idx = vars.iter().enumerate().map(|(k, v)| (v.clone(), k + 1)).collect();
        Dbm { vars, idx, m, closed: true }
    }

    fn ensure_var(&mut self, v: &Var) -> usize {
        if let Some(&i) = self.idx.get(v) {
            return i;
        }
        let old = self.n();
        let mut vars = self.vars.clone();
        vars.push(v.clone());
        let mut grown = Dbm::with_vars(vars);
        for i in 0..old {
            for j in 0..old {
                grown.set(i, j, self.get(i, j));
            }
        }
        grown.closed = self.closed;
        *self = grown;
        old
    }

    /// Keeps the listed matrix indices (besides zero), in order.
    fn restrict(&self, keep: &[usize]) -> Self {
        let vars = keep.iter().map(|&i| self.vars[i - 1].clone()).collect();
        let mut out = Dbm::with_vars(vars);
        let map: Vec<usize> = std::iter::once(0).chain(keep.iter().copied()).collect();
        for (a, &i) in map.iter().enumerate() {
            for (b, &j) in map.iter().enumerate() {
                out.set(a, b, self.get(i, j));
            }
        }
        out.closed = self.closed;
        out
    }

    /// Re-indexes onto `vars`, which must contain every variable of `self`.
    fn embed(&self, vars: &[Var]) -> Self {
        if self.vars == vars {
            return self.clone();
        }
        let mut out = Dbm::with_vars(vars.to_vec());
        let map: Vec<usize> = std::iter::once(0).chain(self.vars.iter().map(|v| out.idx[v])).collect();
        for i in 0..self.n() {
            for j in 0..self.n() {
                out.set(map[i], map[j], self.get(i, j));
            }
        }
        out.closed = self.closed;
        out
    }

    /// Full Floyd-Warshall. Returns false when the constraints are unsatisfiable.
    fn close(&mut self) -> bool {
        let n = self.n();
        for k in 0..n {
            for i in 0..n {
                let ik = self.m[i * n + k];
                if ik == INF {
                    continue;
                }
                for j in 0..n {
                    let c = add(ik, self.m[k * n + j]);
                    if c < self.m[i * n + j] {
                        self.m[i * n + j] = c;
                    }
                }
            }
        }
        self.closed = true;
        (0..n).all(|i| self.m[i * n + i] >= 0)
    }

    /// Adds `x_i - x_j <= c` to a closed matrix, keeping it closed.
    fn add_diff(&mut self, i: usize, j: usize, c: i64) -> bool {
        debug_assert!(self.closed);
        if c >= self.get(i, j) {
            return true;
        }
        if add(self.get(j, i), c) < 0 {
            return false;
        }
        let n = self.n();
        let col_i: Vec<i64> = (0..n).map(|k| self.get(k, i)).collect();
        let row_j: Vec<i64> = (0..n).map(|l| self.get(j, l)).collect();
        for (row, &ki) in self.m.chunks_mut(n).zip(&col_i) {
            if ki == INF {
                continue;
            }
            let ki = add(ki, c);
            for (cell, &jl) in row.iter_mut().zip(&row_j) {
                let through = add(ki, jl);
                if through < *cell {
                    *cell = through;
                }
            }
        }
        true
    }

    fn itv(&self, i: usize) -> Itv {
        let hi = self.get(i, 0);
        let lo = self.get(0, i);
        Itv::new((lo != INF).then(|| -lo), (hi != INF).then_some(hi))
    }

    fn is_unconstrained(&self, i: usize) -> bool {
        (0..self.n()).all(|j| j == i || (self.get(i, j) == INF && self.get(j, i) == INF))
    }

    fn prune(&self) -> Self {
        let keep: Vec<usize> = (1..self.n()).filter(|&i| !self.is_unconstrained(i)).collect();
        if keep.len() + 1 == self.n() {
            return self.clone();
        }
        self.restrict(&keep)
    }
}

fn union_vars(a: &Dbm, b: &Dbm) -> Vec<Var> {
    let mut vars = a.vars.clone();
    vars.extend(b.vars.iter().filter(|v| !a.idx.contains_key(*v)).cloned());
    vars
}

/// Zones: conjunctions of `x - y <= c` and `±x <= c`.
///
/// Values are kept shortest-path closed except for results of
/// [`NumDomain::widen`], which stay as computed so that widening sequences
/// terminate; every other operation closes a private copy first.
#[derive(Clone, Debug)]
pub struct Zones {
    dbm: Option<Dbm>,
}

impl Zones {
    fn from_dbm(mut d: Dbm) -> Self {
        if !d.closed && !d.close() {
            return Self::bottom();
        }
        Zones { dbm: Some(d) }
    }

    fn closed(&self) -> Option<Cow<'_, Dbm>> {
        let d = self.dbm.as_ref()?;
        if d.closed {
            return Some(Cow::Borrowed(d));
        }
        let mut d = d.clone();
        d.close().then_some(Cow::Owned(d))
    }

    /// Adds the bounds of `b` that tighten `a` one at a time, when there are
    /// fewer of them than variables; otherwise a full closure is cheaper.
    fn meet_incremental(a: &Dbm, b: &Dbm, vars: &[Var]) -> Option<Self> {
        let mut out = a.embed(vars);
        let map: Vec<usize> = std::iter::once(0).chain(b.vars.iter().map(|v| out.idx[v])).collect();
        let mut tighter = Vec::new();
        for i in 0..b.n() {
            for j in 0..b.n() {
                let c = b.get(i, j);
                if i != j && c < out.get(map[i], map[j]) {
                    tighter.push((map[i], map[j], c));
                    if tighter.len() >= vars.len().max(1) {
                        return None;
                    }
                }
            }
        }
        for (i, j, c) in tighter {
            if !out.add_diff(i, j, c) {
                return Some(Self::bottom());
            }
        }
        Some(Zones { dbm: Some(out) })
    }

    fn lookup(d: &Dbm, v: &Var) -> Itv {
        d.idx.get(v).map_or(Itv::TOP, |&i| d.itv(i))
    }

    fn add_le(d: &mut Dbm, e: &LinExpr) -> bool {
        let terms: Vec<(Var, i64)> = e.terms().map(|(v, a)| (v.clone(), a)).collect();
        let k = e.constant_term();
        match terms.as_slice() {
            [] => k <= 0,
            [(x, a)] if a.abs() == 1 => {
                let i = d.ensure_var(x);
                let Some(b) = k.checked_neg() else { return true };
                if *a == 1 {
                    d.add_diff(i, 0, b)
                } else {
                    d.add_diff(0, i, b)
                }
            }
            [(x, a), (y, b)] if *a == 1 && *b == -1 || *a == -1 && *b == 1 => {
                let (p, q) = if *a == 1 { (x, y) } else { (y, x) };
                let i = d.ensure_var(p);
                let j = d.ensure_var(q);
                let Some(c) = k.checked_neg() else { return true };
                d.add_diff(i, j, c)
            }
            _ => {
                let (lo, _) = expr_range(e, &|v| Self::lookup(d, v));
                if lo.is_some_and(|l| l > 0) {
                    return false;
                }
                let mut found: Vec<Bound> = Vec::new();
                for (v, r) in propagate_le(e, &|v| Self::lookup(d, v)) {
                    found.push((v, None, r.lo, r.hi));
                }
                // a*(x - y) <= -(k + min of the remaining terms)
                for (pi, (p, ap)) in terms.iter().enumerate() {
                    for (qi, (q, aq)) in terms.iter().enumerate() {
                        if *ap <= 0 || *aq != -*ap {
                            continue;
                        }
                        let mut rest = Some(k as i128);
                        for (ti, (t, at)) in terms.iter().enumerate() {
                            if ti != pi && ti != qi {
                                rest = rest.zip(term_min(*at, &Self::lookup(d, t))).map(|(x, y)| x + y);
                            }
                        }
                        if let Some(rest) = rest {
                            let c = upper_to_i64(div_floor(-rest, *ap as i128));
                            found.push((p.clone(), Some(q.clone()), None, c));
                        }
                    }
                }
                for (x, y, lo, hi) in found {
                    let i = d.ensure_var(&x);
                    let ok = match y {
                        Some(y) => {
                            let j = d.ensure_var(&y);
                            hi.is_none_or(|c| d.add_diff(i, j, c))
                        }
                        None => {
                            lo.is_none_or(|l| l.checked_neg().is_none_or(|nl| d.add_diff(0, i, nl)))
                                && hi.is_none_or(|h| d.add_diff(i, 0, h))
                        }
                    };
                    if !ok {
                        return false;
                    }
                }
                true
            }
        }
    }

    /// `e != 0`: tightens a bound that coincides with the excluded value.
    fn add_ne(d: &mut Dbm, e: &LinExpr) -> bool {
        let (lo, hi) = expr_range(e, &|v| Self::lookup(d, v));
        if lo == Some(0) && hi == Some(0) {
            return false;
        }
        let terms: Vec<(Var, i64)> = e.terms().map(|(v, a)| (v.clone(), a)).collect();
        let k = e.constant_term();
        let (i, j, excluded) = match terms.as_slice() {
            [(x, 1)] => (d.ensure_var(x), 0, -k),
            [(x, -1)] => (0, d.ensure_var(x), -k),
            [(x, 1), (y, -1)] => (d.ensure_var(x), d.ensure_var(y), -k),
            [(y, -1), (x, 1)] => (d.ensure_var(x), d.ensure_var(y), -k),
            _ => return true,
        };
        // x_i - x_j != excluded
        if d.get(i, j) == excluded {
            return d.add_diff(i, j, excluded - 1);
        }
        if d.get(j, i) != INF && -d.get(j, i) == excluded {
            return d.add_diff(j, i, -excluded - 1);
        }
        true
    }
}

impl PartialEq for Zones {
    fn eq(&self, other: &Self) -> bool {
        self.leq(other) && other.leq(self)
    }
}

impl fmt::Display for Zones {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::format_cons(self))
    }
}

impl NumDomain for Zones {
    const NAME: &'static str = "zones";

    fn top() -> Self {
        Zones { dbm: Some(Dbm::top()) }
    }

    fn bottom() -> Self {
        Zones { dbm: None }
    }

    fn is_bottom(&self) -> bool {
        match &self.dbm {
            None => true,
            Some(d) if d.closed => false,
            Some(_) => self.closed().is_none(),
        }
    }

    fn is_top(&self) -> bool {
        match self.closed() {
            None => false,
            Some(d) => (1..d.n()).all(|i| d.is_unconstrained(i)),
        }
    }

    fn join(&self, other: &Self) -> Self {
        let Some(a) = self.closed() else { return other.clone() };
        let Some(b) = other.closed() else { return Zones { dbm: Some(a.into_owned()) } };
        let vars = union_vars(&a, &b);
        let (a, b) = (a.embed(&vars), b.embed(&vars));
        let mut out = a;
        for (x, y) in out.m.iter_mut().zip(&b.m) {
            *x = (*x).max(*y);
        }
        Zones { dbm: Some(out.prune()) }
    }

    fn meet(&self, other: &Self) -> Self {
        let (Some(a), Some(b)) = (self.dbm.as_ref(), other.dbm.as_ref()) else { return Self::bottom() };
        let vars = union_vars(a, b);
        if a.closed && b.closed {
            if let Some(z) = Self::meet_incremental(a, b, &vars) {
                return z;
            }
        }
        let (a, b) = (a.embed(&vars), b.embed(&vars));
        let mut out = a;
        for (x, y) in out.m.iter_mut().zip(&b.m) {
            *x = (*x).min(*y);
        }
        out.closed = false;
        Self::from_dbm(out)
    }

    fn widen(&self, other: &Self) -> Self {
        let Some(a) = self.dbm.as_ref() else { return other.clone() };
        let Some(b) = other.closed() else { return self.clone() };
        let vars = union_vars(a, &b);
        let (a, b) = (a.embed(&vars), b.embed(&vars));
        let mut out = a;
        for (x, y) in out.m.iter_mut().zip(&b.m) {
            if *y > *x {
                *x = INF;
            }
        }
        out.closed = false;
        Zones { dbm: Some(out.prune()) }
    }

    fn narrow(&self, other: &Self) -> Self {
        let Some(a) = self.closed() else { return Self::bottom() };
        let Some(b) = other.closed() else { return Self::bottom() };
        let vars = union_vars(&a, &b);
        let (a, b) = (a.embed(&vars), b.embed(&vars));
        let mut out = a;
        for (x, y) in out.m.iter_mut().zip(&b.m) {
            if *x == INF {
                *x = *y;
            }
        }
        out.closed = false;
        Self::from_dbm(out)
    }

    fn leq(&self, other: &Self) -> bool {
        let Some(a) = self.closed() else { return true };
        let Some(b) = other.dbm.as_ref() else { return false };
        let bi: Vec<Option<usize>> = std::iter::once(Some(0))
            .chain(b.vars.iter().map(|v| a.idx.get(v).copied()))
            .collect();
        for i in 0..b.n() {
            for j in 0..b.n() {
                let bound = b.get(i, j);
                if bound == INF || i == j {
                    continue;
                }
                let have = match (bi[i], bi[j]) {
                    (Some(x), Some(y)) => a.get(x, y),
                    _ => INF,
                };
                if have > bound {
                    return false;
                }
            }
        }
        true
    }

    fn add_cons(&self, c: &LinCons) -> Self {
        let Some(d) = self.closed() else { return Self::bottom() };
        let mut d = d.into_owned();
        let c = c.normalized();
        let ok = match c.kind {
            ConsKind::Le => Self::add_le(&mut d, &c.expr),
            ConsKind::Eq => Self::add_le(&mut d, &c.expr) && Self::add_le(&mut d, &c.expr.scaled(-1)),
            ConsKind::Ne => Self::add_ne(&mut d, &c.expr),
            ConsKind::Lt => unreachable!("normalized away"),
        };
        if ok {
            Zones { dbm: Some(d) }
        } else {
            Self::bottom()
        }
    }

    fn assign(&self, v: &Var, e: &LinExpr) -> Self {
        let Some(d) = self.closed() else { return Self::bottom() };
        let mut d = d.into_owned();
        let self_coeff = e.coeff(v);
        if self_coeff == 0 {
            let d = Zones { dbm: Some(d) }.forget(v);
            return d.add_cons(&LinCons::eq(LinExpr::var(v.clone()), e));
        }
        if self_coeff == 1 && e.num_terms() == 1 {
            // v := v + k shifts every bound involving v
            let k = e.constant_term();
            let i = d.ensure_var(v);
            for j in 0..d.n() {
                if j != i {
                    let up = d.get(i, j);
                    if up != INF {
                        d.set(i, j, up.saturating_add(k));
                    }
                    let down = d.get(j, i);
                    if down != INF {
                        d.set(j, i, down.saturating_sub(k));
                    }
                }
            }
            return Zones { dbm: Some(d) };
        }
        // general case through a fresh temporary
        let tmp = Var::new(format!("{}'", v.name()));
        let z = Zones { dbm: Some(d) }.forget(&tmp);
        let z = z.add_cons(&LinCons::eq(LinExpr::var(tmp.clone()), e)).forget(v);
        let Some(mut d) = z.dbm else { return Self::bottom() };
        if let Some(i) = d.idx.remove(&tmp) {
            d.vars[i - 1] = v.clone();
            d.idx.insert(v.clone(), i);
        }
        Zones { dbm: Some(d) }
    }

    fn forget(&self, v: &Var) -> Self {
        let Some(d) = self.closed() else { return Self::bottom() };
        match d.idx.get(v) {
            None => Zones { dbm: Some(d.into_owned()) },
            Some(&i) => {
                let keep: Vec<usize> = (1..d.n()).filter(|&k| k != i).collect();
                Zones { dbm: Some(d.restrict(&keep)) }
            }
        }
    }

    fn project(&self, keep: &dyn Fn(&Var) -> bool) -> Self {
        let Some(d) = self.closed() else { return Self::bottom() };
        let idx: Vec<usize> = (1..d.n()).filter(|&i| keep(&d.vars[i - 1])).collect();
        if idx.len() + 1 == d.n() {
            return Zones { dbm: Some(d.into_owned()) };
        }
        Zones { dbm: Some(d.restrict(&idx)) }
    }

    fn expand(&self, src: &Var, dst: &Var) -> Self {
        let z = self.forget(dst);
        let Some(mut d) = z.dbm else { return z };
        let Some(&s) = d.idx.get(src) else { return Zones { dbm: Some(d) } };
        let t = d.ensure_var(dst);
        for j in 0..d.n() {
            if j != t && j != s {
                let (up, down) = (d.get(s, j), d.get(j, s));
                d.set(t, j, up);
                d.set(j, t, down);
            }
        }
        d.closed = false;
        Self::from_dbm(d)
    }

    fn to_cons(&self) -> Vec<LinCons> {
        let Some(d) = self.closed() else { return Vec::new() };
        let mut order: Vec<usize> = (1..d.n()).collect();
        order.sort_by(|&a, &b| d.vars[a - 1].cmp(&d.vars[b - 1]));
        let mut out = Vec::new();
        let mut emit = |x: Option<&Var>, y: Option<&Var>, up: i64, down: i64| {
            // x - y <= up and y - x <= down
            if up != INF && down != INF && up == -down {
                let mut e = LinExpr::constant(-up);
                if let Some(x) = x {
                    e.add_term(x.clone(), 1);
                }
                if let Some(y) = y {
                    e.add_term(y.clone(), -1);
                }
                out.push(LinCons::new(e, ConsKind::Eq));
                return;
            }
            if up != INF {
                out.push(LinCons::diff_le(x, y, up));
            }
            if down != INF {
                out.push(LinCons::diff_le(y, x, down));
            }
        };
        for &i in &order {
            let x = &d.vars[i - 1];
            emit(Some(x), None, d.get(i, 0), d.get(0, i));
        }
        for (a, &i) in order.iter().enumerate() {
            for &j in &order[a + 1..] {
                let (x, y) = (&d.vars[i - 1], &d.vars[j - 1]);
                let (up, down) = (d.get(i, j), d.get(j, i));
                // skip bounds already implied by the unary ones
                let ix = d.itv(i);
                let iy = d.itv(j);
                let implied_up = ix.hi.zip(iy.lo).map(|(h, l)| h.saturating_sub(l));
                let implied_down = iy.hi.zip(ix.lo).map(|(h, l)| h.saturating_sub(l));
                let up = if implied_up == Some(up) { INF } else { up };
                let down = if implied_down == Some(down) { INF } else { down };
                emit(Some(x), Some(y), up, down);
            }
        }
        out
    }

    fn interval(&self, v: &Var) -> Itv {
        match self.closed() {
            None => Itv::new(Some(1), Some(0)),
            Some(d) => Self::lookup(&d, v),
        }
    }

    fn sat(&self, point: &Valuation) -> bool {
        let Some(d) = self.closed() else { return false };
        let vals: Vec<Option<i128>> = std::iter::once(Some(0))
            .chain(d.vars.iter().map(|v| point.get(v).map(|&x| x as i128)))
            .collect();
        for i in 0..d.n() {
            for j in 0..d.n() {
                let bound = d.get(i, j);
                if bound == INF {
                    continue;
                }
                if let (Some(x), Some(y)) = (vals[i], vals[j]) {
                    if x - y > bound as i128 {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn vars(&self) -> Vec<Var> {
        let Some(d) = self.closed() else { return Vec::new() };
        let mut vs: Vec<Var> =
            (1..d.n()).filter(|&i| !d.is_unconstrained(i)).map(|i| d.vars[i - 1].clone()).collect();
        vs.sort();
        vs
    }

    fn constrains(&self, v: &Var) -> bool {
        match self.closed() {
            None => false,
            Some(d) => d.idx.get(v).is_some_and(|&i| !d.is_unconstrained(i)),
        }
    }
}

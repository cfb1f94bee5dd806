use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::var::Var;

/// `Σ coeff·var + constant` with integral coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LinExpr {
    terms: BTreeMap<Var, i64>,
    constant: i64,
}

impl LinExpr {
    pub fn constant(c: i64) -> Self {
        LinExpr { terms: BTreeMap::new(), constant: c }
    }

    pub fn var(v: Var) -> Self {
        Self::term(v, 1)
    }

    pub fn term(v: Var, coeff: i64) -> Self {
        let mut e = LinExpr::default();
        e.add_term(v, coeff);
        e
    }

    pub fn add_term(&mut self, v: Var, coeff: i64) {
        let c = self.terms.entry(v.clone()).or_insert(0);
        *c += coeff;
        if *c == 0 {
            self.terms.remove(&v);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Var, i64)> {
        self.terms.iter().map(|(v, c)| (v, *c))
    }

    pub fn coeff(&self, v: &Var) -> i64 {
        self.terms.get(v).copied().unwrap_or(0)
    }

    pub fn constant_term(&self) -> i64 {
        self.constant
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.terms.keys()
    }

    pub fn plus(mut self, other: &LinExpr) -> Self {
        for (v, c) in other.terms() {
            self.add_term(v.clone(), c);
        }
        self.constant += other.constant;
        self
    }

    pub fn minus(self, other: &LinExpr) -> Self {
        self.plus(&other.scaled(-1))
    }

    pub fn scaled(&self, k: i64) -> Self {
        if k == 0 {
            return LinExpr::default();
        }
        LinExpr {
            terms: self.terms.iter().map(|(v, c)| (v.clone(), c * k)).collect(),
            constant: self.constant * k,
        }
    }

    pub fn plus_const(mut self, k: i64) -> Self {
        self.constant += k;
        self
    }

    /// Replaces `v` by `by` (used when a variable is renamed).
    pub fn substitute(&self, v: &Var, by: &Var) -> Self {
        let mut out = LinExpr::constant(self.constant);
        for (x, c) in self.terms() {
            out.add_term(if x == v { by.clone() } else { x.clone() }, c);
        }
        out
    }

    pub fn eval(&self, value: impl Fn(&Var) -> Option<i64>) -> Option<i64> {
        let mut acc = self.constant;
        for (v, c) in self.terms() {
            acc = acc.checked_add(c.checked_mul(value(v)?)?)?;
        }
        Some(acc)
    }
}

impl fmt::Display for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in self.terms() {
            let (neg, mag) = (c < 0, c.unsigned_abs());
            match (first, neg) {
                (true, true) => write!(f, "-")?,
                (true, false) => {}
                (false, true) => write!(f, " - ")?,
                (false, false) => write!(f, " + ")?,
            }
            if mag != 1 {
                write!(f, "{mag}*")?;
            }
            write!(f, "{v}")?;
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant > 0 {
            write!(f, " + {}", self.constant)
        } else if self.constant < 0 {
            write!(f, " - {}", self.constant.unsigned_abs())
        } else {
            Ok(())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConsKind {
    Le,
    Lt,
    Eq,
    Ne,
}

/// `expr ⋈ 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LinCons {
    pub expr: LinExpr,
    pub kind: ConsKind,
}

impl LinCons {
    pub fn new(expr: LinExpr, kind: ConsKind) -> Self {
        LinCons { expr, kind }
    }

    /// `lhs <= rhs`
    pub fn le(lhs: LinExpr, rhs: &LinExpr) -> Self {
        Self::new(lhs.minus(rhs), ConsKind::Le)
    }

    pub fn lt(lhs: LinExpr, rhs: &LinExpr) -> Self {
        Self::new(lhs.minus(rhs), ConsKind::Lt)
    }

    pub fn eq(lhs: LinExpr, rhs: &LinExpr) -> Self {
        Self::new(lhs.minus(rhs), ConsKind::Eq)
    }

    pub fn ne(lhs: LinExpr, rhs: &LinExpr) -> Self {
        Self::new(lhs.minus(rhs), ConsKind::Ne)
    }

    /// `x - y <= c` (use `None` for the constant zero on either side).
    pub fn diff_le(x: Option<&Var>, y: Option<&Var>, c: i64) -> Self {
        let mut e = LinExpr::constant(-c);
        if let Some(x) = x {
            e.add_term(x.clone(), 1);
        }
        if let Some(y) = y {
            e.add_term(y.clone(), -1);
        }
        Self::new(e, ConsKind::Le)
    }

    pub fn var_eq(x: &Var, y: &Var) -> Self {
        Self::eq(LinExpr::var(x.clone()), &LinExpr::var(y.clone()))
    }

    /// Over integers `e < 0` is `e + 1 <= 0`.
    pub fn normalized(&self) -> Self {
        match self.kind {
            ConsKind::Lt => LinCons::new(self.expr.clone().plus_const(1), ConsKind::Le),
            _ => self.clone(),
        }
    }

    /// Disjuncts of the negation.
    pub fn negate(&self) -> Vec<LinCons> {
        let e = &self.expr;
        match self.kind {
            // not (e <= 0)  <=>  -e + 1 <= 0
            ConsKind::Le => vec![LinCons::new(e.scaled(-1).plus_const(1), ConsKind::Le)],
            ConsKind::Lt => vec![LinCons::new(e.scaled(-1), ConsKind::Le)],
            ConsKind::Eq => vec![
                LinCons::new(e.clone().plus_const(1), ConsKind::Le),
                LinCons::new(e.scaled(-1).plus_const(1), ConsKind::Le),
            ],
            ConsKind::Ne => vec![LinCons::new(e.clone(), ConsKind::Eq)],
        }
    }

    pub fn holds(&self, value: impl Fn(&Var) -> Option<i64>) -> Option<bool> {
        let v = self.expr.eval(value)?;
        Some(match self.kind {
            ConsKind::Le => v <= 0,
            ConsKind::Lt => v < 0,
            ConsKind::Eq => v == 0,
            ConsKind::Ne => v != 0,
        })
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.expr.vars()
    }
}

impl fmt::Display for LinCons {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rhs = -self.expr.constant_term();
        let lhs = LinExpr { terms: self.expr.terms.clone(), constant: 0 };
        // `-x <= c` reads better as `x >= -c`
        if self.kind == ConsKind::Le && lhs.num_terms() == 1 {
            if let Some((v, -1)) = lhs.terms().next() {
                return write!(f, "{v} >= {}", -rhs);
            }
        }
        let op = match self.kind {
            ConsKind::Le => "<=",
            ConsKind::Lt => "<",
            ConsKind::Eq => "=",
            ConsKind::Ne => "!=",
        };
        write!(f, "{lhs} {op} {rhs}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Var {
        Var::new(s)
    }

    #[test]
    fn display_forms() {
        assert_eq!(LinCons::diff_le(Some(&v("x")), Some(&v("y")), 3).to_string(), "x - y <= 3");
        assert_eq!(LinCons::diff_le(None, Some(&v("x")), -1).to_string(), "x >= 1");
        let e = LinExpr::term(v("a"), 2).plus(&LinExpr::var(v("b"))).plus_const(-4);
        assert_eq!(e.to_string(), "2*a + b - 4");
    }

    #[test]
    fn negation_of_equality_is_two_strict_sides() {
        let c = LinCons::var_eq(&v("x"), &v("y"));
        let n = c.negate();
        assert_eq!(n.len(), 2);
        let at = |x: i64, y: i64| move |var: &Var| Some(if var.name() == "x" { x } else { y });
        assert!(n[0].holds(at(1, 3)).unwrap());
        assert!(n[1].holds(at(3, 1)).unwrap());
        assert!(!n[0].holds(at(2, 2)).unwrap() && !n[1].holds(at(2, 2)).unwrap());
    }
}

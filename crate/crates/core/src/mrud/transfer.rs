use std::sync::Arc;

use super::{AbsState, Ctx, Mode};
use crate::ir::Stmt;
use crate::numdom::{LinCons, LinExpr, NumDomain};
use crate::var::Var;

impl Ctx<'_> {
    /// Abstract effect of one statement.
    pub fn transfer<D: NumDomain>(&self, s: &Stmt, st: &AbsState<D>) -> AbsState<D> {
        if st.is_bottom() {
            return st.clone();
        }
        let out = match (self.mode, s) {
            (Mode::Baseline, Stmt::Load { dst, field, .. }) => self.weak_load(st, dst, field),
            (Mode::Baseline, Stmt::Store { field, src, .. }) => self.weak_store(st, field, src),
            (_, Stmt::Load { dst, ptr, field }) => self.load(st, dst, ptr, field),
            (_, Stmt::Store { ptr, field, src }) => self.store(st, ptr, field, src),
            _ => self.scalar_stmt(s, st),
        };
        self.settle(out)
    }

    /// Statements that never touch memory.
    fn scalar_stmt<D: NumDomain>(&self, s: &Stmt, st: &AbsState<D>) -> AbsState<D> {
        let mut out = st.clone();
        match s {
            Stmt::Assign { dst, expr } => {
                self.detach(&mut out, dst);
                out.scalar = out.scalar.assign(dst, expr);
                out.e_sf = out.e_sf.forget(dst);
            }
            Stmt::Havoc(v) => {
                self.detach(&mut out, v);
                out.scalar = out.scalar.forget(v);
                out.e_sf = out.e_sf.forget(v);
            }
            Stmt::Assume(c) => {
                out.scalar = out.scalar.add_all(&c.to_cons());
                if out.scalar.is_bottom() {
                    out.make_bottom();
                    return out;
                }
                if self.mode != Mode::Baseline {
                    return self.after_assume(self.settle(out), c);
                }
            }
            Stmt::Assert(_) => {}
            Stmt::Alloc { dst, .. } => {
                self.detach(&mut out, dst);
                let base = dst.ghost_base();
                let one = LinExpr::constant(1);
                out.scalar = out.scalar.forget_all(&[dst.clone(), base.clone()]).add_all(&[
                    LinCons::le(one.clone(), &LinExpr::var(dst.clone())),
                    LinCons::le(one, &LinExpr::var(base.clone())),
                    LinCons::var_eq(dst, &base),
                ]);
                out.e_sf = out.e_sf.forget(dst);
                out.e_p = out.e_p.forget(&base);
            }
            Stmt::Gep { dst, src, offset, .. } => {
                self.detach(&mut out, dst);
                let e = LinExpr::var(src.clone()).plus(&offset.to_expr());
                out.scalar = out.scalar.assign(dst, &e);
                out.e_sf = out.e_sf.forget(dst);
                if dst != src {
                    let (db, sb) = (dst.ghost_base(), src.ghost_base());
                    out.scalar = out.scalar.assign(&db, &LinExpr::var(sb.clone()));
                    out.e_p = out.e_p.add_equal(&sb, &db);
                }
            }
            Stmt::Load { .. } | Stmt::Store { .. } => unreachable!("memory statements are handled by the caller"),
        }
        out
    }

    /// Before `v` is overwritten, copies what the scalar value knows about
    /// it into every cache holding a field equal to it.
    fn detach<D: NumDomain>(&self, st: &mut AbsState<D>, v: &Var) {
        let class = st.e_sf.class_of(v);
        for b in 0..st.banks.len() {
            if st.banks[b].flags.used && class.iter().any(|f| self.in_bank(b)(f)) {
                self.scalar_to_cache(st, b);
            }
        }
    }

    fn bank_of(&self, field: &Var) -> usize {
        self.prog.bank_index(field).expect("validated program")
    }

    /// Forgets `dst` as a freshly defined value, including its base if it is
    /// a pointer.
    fn redefine<D: NumDomain>(&self, st: &mut AbsState<D>, dst: &Var) {
        self.detach(st, dst);
        st.scalar = st.scalar.forget(dst);
        if self.prog.is_ptr(dst) {
            let base = dst.ghost_base();
            st.scalar = st.scalar.forget(&base);
            st.e_p = st.e_p.forget(&base);
        }
    }

    fn load<D: NumDomain>(&self, st: &AbsState<D>, dst: &Var, ptr: &Var, field: &Var) -> AbsState<D> {
        let b = self.bank_of(field);
        let mut out = self.cache_sync(st, b, ptr);
        if out.is_bottom() {
            return out;
        }
        self.redefine(&mut out, dst);
        out.e_sf = out.e_sf.add_equal(field, dst);
        self.after_load(out, b, field)
    }

    fn store<D: NumDomain>(&self, st: &AbsState<D>, ptr: &Var, field: &Var, src: &Var) -> AbsState<D> {
        let b = self.bank_of(field);
        let mut out = self.cache_sync(st, b, ptr);
        if out.is_bottom() {
            return out;
        }
        self.map_cache(&mut out, b, |c| c.forget(field));
        out.e_sf = out.e_sf.add_equal(src, field);
        let bank = Arc::make_mut(&mut out.banks[b]);
        bank.flags.used = true;
        bank.flags.dirty = true;
        self.after_store(out, b, src)
    }

    /// Summarizing store: the field dimension stands for every object of the
    /// bank, so the new value is only joined in.
    fn weak_store<D: NumDomain>(&self, st: &AbsState<D>, field: &Var, src: &Var) -> AbsState<D> {
        let mut out = st.clone();
        let strong = st.scalar.assign(field, &LinExpr::var(src.clone()));
        out.scalar = st.scalar.join(&strong);
        out
    }

    /// Summarizing load: `dst` gets a copy of the field dimension's
    /// relations to scalars, never to the bank's other fields, which may
    /// belong to a different object.
    fn weak_load<D: NumDomain>(&self, st: &AbsState<D>, dst: &Var, field: &Var) -> AbsState<D> {
        let b = self.bank_of(field);
        let others: Vec<Var> = self.fields[b].iter().filter(|f| *f != field).cloned().collect();
        let in_bank = self.in_bank(b);
        let mut out = st.clone();
        self.redefine(&mut out, dst);
        let copy = out.scalar.forget_all(&others).expand(field, dst);
        out.scalar = out.scalar.meet(&copy.project(&|v| !in_bank(v)));
        out.e_sf = out.e_sf.forget(dst);
        out
    }
}

use std::collections::BTreeMap;

use super::{AbsState, Ctx, Mode};
use crate::concrete::{ConcreteState, Object};
use crate::numdom::{NumDomain, Valuation};
use crate::var::Var;

fn fields_of(o: &Object) -> impl Iterator<Item = (Var, i64)> + '_ {
    o.iter().map(|(f, c)| (f.clone(), c.flat()))
}

fn with_fields(base: &Valuation, o: &Object) -> Valuation {
    let mut v = base.clone();
    v.extend(fields_of(o));
    v
}

impl Ctx<'_> {
    /// Whether the concrete state is described by `st`.
    pub fn gamma_member<D: NumDomain>(&self, st: &AbsState<D>, cs: &ConcreteState) -> bool {
        self.gamma_violation(st, cs).is_none()
    }

    /// The first reason `cs` is not described by `st`, if any.
    pub fn gamma_violation<D: NumDomain>(&self, st: &AbsState<D>, cs: &ConcreteState) -> Option<String> {
        if st.is_bottom() {
            return Some("abstract state is bottom".into());
        }
        let nu = cs.valuation(self.prog);
        if self.mode == Mode::Baseline {
            return self.summarized_violation(st, cs, &nu).or_else(|| self.eq_violation(st, cs, &nu));
        }
        let mut scalar_point = nu.clone();
        for (b, (bank, mb)) in st.banks.iter().zip(&cs.mem).enumerate() {
            let id = &self.prog.banks[b].id;
            let outside: Vec<(u64, Object)> = if bank.flags.used {
                if !mb.used {
                    return Some(format!("bank {id}: abstract cache in use, concrete cache empty"));
                }
                let cache_point: Valuation = fields_of(&mb.cache).collect();
                if self.mode == Mode::Monolithic {
                    scalar_point.extend(cache_point);
                } else if !bank.cache.sat(&cache_point) {
                    return Some(format!("bank {id}: cached object {:#x} violates the cache", mb.cache_base));
                }
                mb.objects().into_iter().filter(|(a, _)| *a != mb.cache_base).collect()
            } else {
                mb.objects().into_iter().collect()
            };
            for (a, o) in outside {
                let ok = if bank.flags.ispk { bank.summary.sat(&fields_of(&o).collect()) } else { o.is_empty() };
                if !ok {
                    return Some(format!("bank {id}: object {a:#x} is not covered by the summary"));
                }
            }
        }
        if !st.scalar.sat(&scalar_point) {
            return Some("scalar values violate the scalar part".into());
        }
        self.eq_violation(st, cs, &nu)
    }

    /// Every object of a bank must fit the field dimensions together with
    /// the scalars.
    fn summarized_violation<D: NumDomain>(&self, st: &AbsState<D>, cs: &ConcreteState, nu: &Valuation) -> Option<String> {
        if !st.scalar.sat(nu) {
            return Some("scalar values violate the scalar part".into());
        }
        for (b, mb) in cs.mem.iter().enumerate() {
            for (a, o) in mb.objects() {
                if !st.scalar.sat(&with_fields(nu, &o)) {
                    return Some(format!("bank {}: object {a:#x} violates the field dimensions", self.prog.banks[b].id));
                }
            }
        }
        None
    }

    /// Classes of both partitions whose defined members disagree.
    fn eq_violation<D: NumDomain>(&self, st: &AbsState<D>, cs: &ConcreteState, nu: &Valuation) -> Option<String> {
        let mut values = nu.clone();
        if self.mode != Mode::Baseline {
            for mb in &cs.mem {
                if mb.used {
                    values.extend(fields_of(&mb.cache));
                }
            }
        }
        let check = |classes: Vec<Vec<Var>>, what: &str| {
            for c in classes {
                let defined: BTreeMap<&Var, i64> = c.iter().filter_map(|v| values.get(v).map(|x| (v, *x))).collect();
                let mut vals = defined.values();
                if let Some(first) = vals.next() {
                    if vals.any(|x| x != first) {
                        let names: Vec<String> = defined.iter().map(|(v, x)| format!("{v}={x}")).collect();
                        return Some(format!("{what} class broken: {}", names.join(", ")));
                    }
                }
            }
            None
        };
        let sf = st.e_sf.to_monolithic();
        check(sf.classes().map(|c| c.iter().cloned().collect()).collect(), "scalar-field")
            .or_else(|| check(st.e_p.classes().map(|c| c.iter().cloned().collect()).collect(), "pointer-base"))
    }
}

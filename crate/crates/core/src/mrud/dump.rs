use std::collections::BTreeMap;
use std::fmt::Write;

use serde_json::{json, Value};

use super::{AbsState, Ctx, Mode};
use crate::numdom::{format_cons, NumDomain};

fn cons_list<D: NumDomain>(d: &D) -> Value {
    if d.is_bottom() {
        return json!("bottom");
    }
    json!(d.to_cons().iter().map(ToString::to_string).collect::<Vec<_>>())
}

impl Ctx<'_> {
    /// Multi-line rendering: scalar part, both partitions, then one block
    /// per bank.
    pub fn dump_text<D: NumDomain>(&self, st: &AbsState<D>) -> String {
        if st.is_bottom() {
            return "bottom\n".to_string();
        }
        let mut out = String::new();
        let _ = writeln!(out, "scalar: {}", format_cons(&st.scalar));
        let _ = writeln!(out, "e_sf: {}", st.e_sf);
        let _ = writeln!(out, "e_p: {}", st.e_p);
        if self.mode == Mode::Baseline {
            return out;
        }
        for (decl, bank) in self.prog.banks.iter().zip(&st.banks) {
            let _ = writeln!(out, "bank {}: {}", decl.id, bank.flags);
            if self.mode != Mode::Monolithic {
                let _ = writeln!(out, "  cache: {}", format_cons(&bank.cache));
            }
            let summary = if bank.flags.ispk { format_cons(&bank.summary) } else { "empty".to_string() };
            let _ = writeln!(out, "  summary: {summary}");
        }
        out
    }

    pub fn dump_json<D: NumDomain>(&self, st: &AbsState<D>) -> Value {
        if st.is_bottom() {
            return json!({ "bottom": true });
        }
        let classes = |cs: Vec<Vec<String>>| json!(cs);
        let sf = st.e_sf.to_monolithic();
        let banks: BTreeMap<&str, Value> = self
            .prog
            .banks
            .iter()
            .zip(&st.banks)
            .map(|(decl, bank)| {
                let summary = if bank.flags.ispk { cons_list(&bank.summary) } else { Value::Null };
                let v = json!({
                    "used": bank.flags.used,
                    "dirty": bank.flags.dirty,
                    "ispk": bank.flags.ispk,
                    "cache": cons_list(&bank.cache),
                    "summary": summary,
                });
                (decl.id.as_str(), v)
            })
            .collect();
        json!({
            "bottom": false,
            "scalar": cons_list(&st.scalar),
            "e_sf": classes(sf.classes().map(|c| c.iter().map(|v| v.to_string()).collect()).collect()),
            "e_p": classes(st.e_p.classes().map(|c| c.iter().map(|v| v.to_string()).collect()).collect()),
            "banks": banks,
        })
    }
}

use std::collections::VecDeque;

use proptest::prelude::*;

use super::*;
use crate::concrete::{self, Cell};
use crate::ir::{parse_program, Cond, Point, Stmt};
use crate::numdom::{LinCons, LinExpr, Zones};

const LOOP: &str = include_str!("../../benchmarks/loop.ir");

fn v(s: &str) -> Var {
    Var::new(s)
}

fn cons(d: &Zones, keep: &[&str]) -> Vec<String> {
    d.project(&|x: &Var| keep.contains(&x.name())).to_cons().iter().map(ToString::to_string).collect()
}

fn zone(cs: &[LinCons]) -> Zones {
    Zones::top().add_all(cs)
}

fn eq_const(x: &str, c: i64) -> LinCons {
    LinCons::eq(LinExpr::var(v(x)), &LinExpr::constant(c))
}

fn run_block(ctx: &Ctx, prog: &Program, label: &str, st: &AbsState<Zones>, upto: Option<usize>) -> AbsState<Zones> {
    let blk = prog.block(prog.block_index(label).unwrap());
    let n = upto.unwrap_or(blk.stmts.len());
    blk.stmts[..n].iter().fold(st.clone(), |s, stmt| ctx.transfer(stmt, &s))
}

/// The loop-entry state after one iteration, then the second iteration up
/// to and including the store into `@cap`.
fn second_iteration(ctx: &Ctx, prog: &Program) -> (AbsState<Zones>, AbsState<Zones>) {
    let mut st = run_block(ctx, prog, "entry", &ctx.init(), None);
    st = run_block(ctx, prog, "header", &st, None);
    st = run_block(ctx, prog, "body", &st, None);
    let s1 = ctx.flush(&st);
    let mut st = run_block(ctx, prog, "header", &s1, None);
    st = run_block(ctx, prog, "body", &st, Some(6));
    (s1, st)
}

#[test]
fn second_iteration_cache_is_refined_by_reduction() {
    let prog = parse_program(LOOP).unwrap();
    let ctx = Ctx::new(&prog, Mode::Mrud, Reduction::None);
    let (s1, st) = second_iteration(&ctx, &prog);
    assert_eq!(cons(&s1.scalar, &["i"]), ["i = 1"]);
    assert_eq!(cons(&s1.bank(0).summary, &["@len", "@cap"]), ["@cap = 1", "@len = 0"]);

    assert_eq!(cons(&st.scalar, &["i", "sz"]), ["i = 1", "sz = 2"]);
    assert!(st.e_sf.equals_q(&v("i"), &v("@len")));
    assert!(st.e_sf.equals_q(&v("sz"), &v("@cap")));
    assert_eq!(st.bank(0).flags, Flags { used: true, dirty: true, ispk: true });
    assert!(cons(&st.bank(0).cache, &["@len", "@cap"]).is_empty());
    assert_eq!(cons(&st.bank(0).summary, &["@len", "@cap"]), ["@cap = 1", "@len = 0"]);

    let r = ctx.reduction(&st);
    assert_eq!(cons(&r.bank(0).cache, &["@len", "@cap"]), ["@cap = 2", "@len = 1"]);
    assert_eq!(r.scalar, st.scalar);
}

#[test]
fn opt_strategy_reduces_after_each_store() {
    let prog = parse_program(LOOP).unwrap();
    let ctx = Ctx::new(&prog, Mode::Mrud, Reduction::Opt);
    let (_, st) = second_iteration(&ctx, &prog);
    assert_eq!(cons(&st.bank(0).cache, &["@len", "@cap"]), ["@cap = 2", "@len = 1"]);
}

#[test]
fn pack_copies_then_joins() {
    let c1 = zone(&[eq_const("@cap", 1), eq_const("@len", 0)]);
    let c2 = zone(&[eq_const("@cap", 2), eq_const("@len", 1)]);
    let (s, k) = pack(&c1, &Zones::top(), false);
    assert!(k);
    assert_eq!(s, c1);
    let (s, k) = pack(&c2, &s, true);
    assert!(k);
    assert_eq!(cons(&s, &["@len", "@cap"]), ["@cap <= 2", "@cap >= 1", "@len <= 1", "@len >= 0", "@cap - @len = 1"]);
    assert!(unpack(&s, false).is_top());
    assert_eq!(unpack(&s, true), s);
}

#[test]
fn reduce_moves_scalar_facts_into_cache() {
    let scalar = zone(&[eq_const("sz", 2), eq_const("i", 1)]);
    let e = EqAbs::from_classes([[v("i"), v("@len")], [v("sz"), v("@cap")]]);
    let cache = reduce(&scalar, &Zones::top(), &e, &|x: &Var| !x.is_field(), &|x: &Var| x.is_field());
    assert_eq!(cons(&cache, &["@len", "@cap"]), ["@cap = 2", "@len = 1"]);
    let unrelated = reduce(&scalar, &cache, &EqAbs::top(), &|x: &Var| !x.is_field(), &|x: &Var| x.is_field());
    assert_eq!(unrelated, cache);
}

fn two_banks() -> Program {
    parse_program(
        "bank a size 8 { @f:4@0, @g:4@4 }\nbank b size 4 { @h:4@0 }\n\
         fun main() {\nentry:\n  p := alloc(@f, 8)\n  q := alloc(@h, 4)\n  x := 3\n  store(p, @f, x)\n  store(q, @h, x)\n  \
         (pg, @g) := gep(p, @f, 4)\n  store(pg, @g, x)\n  y := load(p, @f)\n  assert(y == 3)\n  return\n}\n",
    )
    .unwrap()
}

#[test]
fn cache_sync_first_miss_and_hit() {
    let prog = two_banks();
    let ctx = Ctx::new(&prog, Mode::Mrud, Reduction::Opt);
    let st = run_block(&ctx, &prog, "entry", &ctx.init(), Some(4));
    assert_eq!(st.bank(0).flags, Flags { used: true, dirty: true, ispk: false });
    // hit: same object through a derived pointer
    let st2 = ctx.cache_sync(&st, 0, &v("p"));
    assert_eq!(st2, st);
    // miss through an unrelated pointer: the dirty cache is copied into the summary
    let st3 = ctx.cache_sync(&st, 0, &v("q"));
    assert_eq!(st3.bank(0).flags, Flags { used: true, dirty: false, ispk: true });
    assert_eq!(cons(&st3.bank(0).summary, &["@f"]), ["@f = 3"]);
    assert_eq!(st3.bank(0).cache, st3.bank(0).summary);
    assert!(st3.e_p.equals_q(&v("q^base"), ctx.cache_base(0)));
    assert!(!st3.e_p.equals_q(&v("p^base"), ctx.cache_base(0)));
    assert!(st3.e_sf.bank_classes(0).is_empty());
}

#[test]
fn gep_relates_bases() {
    let prog = two_banks();
    let ctx = Ctx::new(&prog, Mode::Mrud, Reduction::Opt);
    let st = run_block(&ctx, &prog, "entry", &ctx.init(), Some(6));
    assert!(st.e_p.equals_q(&v("p^base"), &v("pg^base")));
    assert!(st.scalar.entails(&LinCons::eq(LinExpr::var(v("pg")), &LinExpr::var(v("p")).plus_const(4))));
}

#[test]
fn store_leaves_other_banks_shared() {
    let prog = two_banks();
    let ctx = Ctx::new(&prog, Mode::Mrud, Reduction::Full);
    let st = run_block(&ctx, &prog, "entry", &ctx.init(), Some(5));
    let blk = prog.block(0);
    let after = ctx.transfer(&blk.stmts[6], &st);
    assert!(Arc::ptr_eq(&st.banks[1], &after.banks[1]));
}

#[test]
fn straight_line_assert_is_proved_only_with_a_cache() {
    let prog = two_banks();
    let check = |mode| {
        let ctx = Ctx::new(&prog, mode, Reduction::Opt);
        let st = run_block(&ctx, &prog, "entry", &ctx.init(), Some(8));
        let Stmt::Assert(c) = &prog.block(0).stmts[8] else { panic!("expected assert") };
        ctx.entails(&st, c)
    };
    assert!(check(Mode::Mrud));
    assert!(check(Mode::Monolithic));
    assert!(!check(Mode::Baseline));
}

#[test]
fn bottom_is_absorbing() {
    let prog = two_banks();
    let ctx = Ctx::new(&prog, Mode::Mrud, Reduction::Opt);
    let bot: AbsState<Zones> = ctx.bottom();
    for s in &prog.block(0).stmts {
        assert!(ctx.transfer(s, &bot).is_bottom());
    }
    let st = run_block(&ctx, &prog, "entry", &ctx.init(), Some(4));
    assert_eq!(ctx.join(&st, &bot), st);
    assert_eq!(ctx.join(&bot, &st), st);
    assert!(ctx.meet(&st, &bot).is_bottom());
    let trivially = Cond(vec![crate::ir::Cmp { lhs: LinExpr::constant(0), op: crate::ir::CmpOp::Le, rhs: LinExpr::constant(0) }]);
    assert!(ctx.entails(&ctx.init::<Zones>(), &trivially));
}

#[test]
fn join_flushes_and_keeps_summary() {
    let prog = parse_program(LOOP).unwrap();
    let ctx = Ctx::new(&prog, Mode::Mrud, Reduction::Opt);
    let entry = run_block(&ctx, &prog, "entry", &ctx.init(), None);
    let mut st = run_block(&ctx, &prog, "header", &entry, None);
    st = run_block(&ctx, &prog, "body", &st, None);
    let j = ctx.join(&entry, &st);
    assert_eq!(j.bank(0).flags, Flags { used: false, dirty: false, ispk: true });
    assert!(j.bank(0).cache.is_top());
    assert_eq!(cons(&j.bank(0).summary, &["@len", "@cap"]), ["@cap = 1", "@len = 0"]);
    assert!(j.e_sf.bank_classes(0).is_empty());
    assert!(ctx.leq(&entry, &j));
    assert!(ctx.leq(&st, &j));
    assert!(!ctx.leq(&j, &entry));
}

#[test]
fn gamma_accepts_trace_and_rejects_broken_object() {
    let src = LOOP.replace("99", "2");
    let prog = parse_program(&src).unwrap();
    let ctx = Ctx::new(&prog, Mode::Mrud, Reduction::Opt);
    let init: AbsState<Zones> = ctx.init();
    let trace = concrete::run(&prog, 10_000);
    let (_, last) = trace.steps.last().unwrap();
    assert!(trace.steps.iter().all(|(_, cs)| ctx.gamma_member(&ctx.top::<Zones>(), cs)));
    // the initial state admits no object with fields
    assert!(!ctx.gamma_member(&init, last));
    assert!(ctx.gamma_member(&init, &trace.steps[0].1));

    // loop-exit state: join of the three iterations
    let mut head = run_block(&ctx, &prog, "entry", &init, None);
    let mut acc = head.clone();
    for _ in 0..3 {
        let st = run_block(&ctx, &prog, "header", &head, None);
        head = run_block(&ctx, &prog, "body", &st, None);
        acc = ctx.join(&acc, &head);
    }
    let exit = run_block(&ctx, &prog, "exit", &acc, None);
    assert_eq!(cons(&exit.bank(0).summary, &["@len", "@cap"]), ["@cap <= 3", "@cap >= 1", "@len <= 2", "@len >= 0", "@cap - @len = 1"]);
    assert!(ctx.gamma_member(&exit, last));

    let mut broken = last.clone();
    let victim = *broken.mem[0].storage.keys().next().unwrap();
    let obj = broken.mem[0].storage.get_mut(&victim).unwrap();
    let len = obj[&v("@len")].val;
    obj.insert(v("@cap"), Cell::int(len - 1));
    assert!(!ctx.gamma_member(&exit, &broken));
}

#[test]
fn baseline_gamma_requires_every_object_to_fit() {
    let prog = two_banks();
    let ctx = Ctx::new(&prog, Mode::Baseline, Reduction::Opt);
    let st = run_block(&ctx, &prog, "entry", &ctx.init(), Some(8));
    let trace = concrete::run(&prog, 100);
    for (pt, cs) in &trace.steps {
        if *pt == (Point { block: 0, idx: 8 }) {
            assert!(ctx.gamma_member(&st, cs));
        }
    }
    let forced = st.scalar.add_cons(&eq_const("@f", 4));
    let mut st2 = st.clone();
    st2.scalar = forced;
    let at8 = trace.steps.iter().find(|(pt, _)| pt.idx == 8).unwrap();
    assert!(!ctx.gamma_member(&st2, &at8.1));
}

fn arb_zone(names: &'static [&'static str]) -> impl Strategy<Value = Zones> {
    let n = names.len();
    prop::collection::vec((0..=n, 0..=n, -4i64..=4), 0..6).prop_map(move |cs| {
        let var = |i: usize| if i == n { None } else { Some(v(names[i])) };
        let cs: Vec<LinCons> =
            cs.into_iter().filter(|(a, b, _)| a != b).map(|(a, b, c)| LinCons::diff_le(var(a).as_ref(), var(b).as_ref(), c)).collect();
        zone(&cs)
    })
}

const FIELDS: &[&str] = &["@f", "@g"];
const SCALARS: &[&str] = &["x", "y"];

fn arb_bank() -> impl Strategy<Value = AbsBank<Zones>> {
    (arb_zone(FIELDS), arb_zone(FIELDS), any::<(bool, bool, bool)>()).prop_map(|(cache, summary, (used, dirty, ispk))| {
        let cache = if used { cache } else { Zones::top() };
        AbsBank { cache, summary, flags: Flags { used, dirty: used && dirty, ispk } }
    })
}

proptest! {
    #[test]
    fn flushing_twice_is_flushing_once(mb in arb_bank()) {
        let once = flush_cache(&mb);
        prop_assert_eq!(flush_cache(&once), once);
    }

    #[test]
    fn unpack_covers_packed_cache(c in arb_zone(FIELDS), s in arb_zone(FIELDS), ispk in any::<bool>()) {
        let (s2, k) = pack(&c, &s, ispk);
        prop_assert!(c.leq(&unpack(&s2, k)));
    }

    #[test]
    fn reduce_only_tightens(src in arb_zone(SCALARS), dst in arb_zone(FIELDS), pairs in prop::collection::vec((0..2usize, 0..2usize), 0..3)) {
        let e = EqAbs::from_classes(pairs.iter().map(|&(a, b)| [v(SCALARS[a]), v(FIELDS[b])]));
        let r = reduce(&src, &dst, &e, &|x: &Var| !x.is_field(), &|x: &Var| x.is_field());
        prop_assert!(r.leq(&dst));
    }
}

#[test]
fn cache_sync_on_loop_matches_concrete_decisions() {
    // every concrete miss is an abstract miss
    let src = LOOP.replace("99", "2");
    let prog = parse_program(&src).unwrap();
    let ctx = Ctx::new(&prog, Mode::Mrud, Reduction::Opt);
    let mut st: AbsState<Zones> = ctx.init();
    let trace = concrete::run(&prog, 10_000);
    let mut inputs = VecDeque::new();
    for w in trace.steps.windows(2) {
        let (pt, cs) = &w[0];
        let blk = prog.block(pt.block);
        if pt.idx == 0 && pt.block != 0 {
            st = ctx.flush(&st);
        }
        let Some(s) = blk.stmts.get(pt.idx) else { continue };
        assert!(ctx.gamma_member(&st, cs), "at {}: {:?}", prog.point_name(*pt), ctx.gamma_violation(&st, cs));
        let next = concrete::exec_stmt(&prog, s, cs, *pt, &mut inputs).unwrap();
        st = ctx.transfer(s, &st);
        assert!(ctx.gamma_member(&st, &next));
    }
}

use super::*;
use crate::ir::parse_program;
use crate::mrud::Flags;
use crate::numdom::{Intervals, LinCons, LinExpr, Zones};
use crate::var::Var;

const LOOP: &str = include_str!("../../benchmarks/loop.ir");

fn cons(d: &Zones, keep: &[&str]) -> Vec<String> {
    d.project(&|x: &Var| keep.contains(&x.name())).to_cons().iter().map(ToString::to_string).collect()
}

fn scalar_prog(body: &str) -> Program {
    parse_program(&format!("fun main() {{\n{body}\n}}\n")).unwrap()
}

const NESTED: &str = "\
entry:
  i := 0
  goto outer
outer:
  goto obody, done
obody:
  assume(i < 10)
  j := 0
  goto inner
inner:
  goto ibody, iexit
ibody:
  assume(j < i)
  j := j + 1
  goto inner
iexit:
  assume(j >= i)
  assert(j == i)
  i := i + 1
  goto outer
done:
  assume(i >= 10)
  assert(i == 10)
  return";

#[test]
fn acyclic_graph_has_no_heads() {
    let p = scalar_prog("entry:\n  x := 1\n  goto a, b\na:\n  goto c\nb:\n  goto c\nc:\n  return");
    let w = compute_wto(&p.build_cfg());
    assert!(w.heads().is_empty());
    assert_eq!(w.elems.len(), 4);
    assert_eq!(w.elems[0], WtoElem::Vertex(0));
    assert_eq!(w.elems[3], WtoElem::Vertex(3));
}

#[test]
fn loop_entry_is_the_only_head() {
    let p = parse_program(LOOP).unwrap();
    let w = compute_wto(&p.build_cfg());
    assert_eq!(w.heads(), [p.block_index("loop_entry").unwrap()]);
}

#[test]
fn nested_loops_give_nested_components() {
    let p = scalar_prog(NESTED);
    let w = compute_wto(&p.build_cfg());
    let (outer, inner) = (p.block_index("outer").unwrap(), p.block_index("inner").unwrap());
    assert_eq!(w.heads(), [outer, inner]);
    assert_eq!(w.nesting(p.block_index("ibody").unwrap()), [outer, inner]);
    assert_eq!(w.nesting(p.block_index("iexit").unwrap()), [outer]);
    assert!(w.nesting(p.block_index("done").unwrap()).is_empty());
    assert_eq!(w.to_string(), "0 (1 2 (3 4) 5) 6");
}

#[test]
fn nested_loops_are_analyzed_precisely() {
    let p = scalar_prog(NESTED);
    let map = analyze::<Zones>(&p, &p.build_cfg(), &AnalysisConfig::default());
    assert_eq!(map.num_safe(), 2);
    check_post_fixpoint(&p, &map).unwrap();
}

#[test]
fn loop_entry_fixpoint_widens_the_summary() {
    let p = parse_program(LOOP).unwrap();
    let map = analyze::<Zones>(&p, &p.build_cfg(), &AnalysisConfig::default());
    let st = map.block_entry(p.block_index("loop_entry").unwrap());
    let bank = st.bank(0);
    assert_eq!(bank.flags, Flags { used: false, dirty: false, ispk: true });
    assert!(bank.cache.is_top());
    let cap = LinExpr::var(Var::new("@cap"));
    let expected = Zones::top().add_all(&[
        LinCons::le(LinExpr::constant(1), &cap),
        LinCons::eq(cap.clone(), &LinExpr::var(Var::new("@len")).plus_const(1)),
    ]);
    let fields = bank.summary.project(&|x: &Var| ["@len", "@cap"].contains(&x.name()));
    assert_eq!(fields, expected, "{fields}");
    assert_eq!(cons(st.scalar(), &["i"]), ["i <= 100", "i >= 0"]);
    check_post_fixpoint(&p, &map).unwrap();
}

#[test]
fn without_narrowing_the_counter_is_unbounded() {
    let p = parse_program(LOOP).unwrap();
    let opts = AnalysisConfig { narrowing_iters: 0, ..AnalysisConfig::default() };
    let map = analyze::<Zones>(&p, &p.build_cfg(), &opts);
    let st = map.block_entry(p.block_index("loop_entry").unwrap());
    assert_eq!(cons(st.scalar(), &["i"]), ["i >= 0"]);
    check_post_fixpoint(&p, &map).unwrap();
}

#[test]
fn tightened_entry_breaks_post_fixpoint() {
    let p = parse_program(LOOP).unwrap();
    let mut map = analyze::<Zones>(&p, &p.build_cfg(), &AnalysisConfig::default());
    let head = p.block_index("loop_entry").unwrap();
    let pt = Point { block: head, idx: 0 };
    let ctx = map.config().ctx(&p);
    let tight = ctx.transfer(&Stmt::Assume(crate::ir::Cond(vec![])), map.state(pt));
    let mut tight = tight;
    tight = ctx.transfer(&parse_stmt("assume(i <= 5)"), &tight);
    map.set_state(pt, tight);
    let err = check_post_fixpoint(&p, &map).unwrap_err();
    assert_eq!(err.to, "loop_entry:0");
}

fn parse_stmt(s: &str) -> Stmt {
    let p = scalar_prog(&format!("entry:\n  {s}\n  return"));
    p.block(0).stmts[0].clone()
}

#[test]
fn bottom_everywhere_fails_at_entry() {
    let p = parse_program(LOOP).unwrap();
    let mut map = analyze::<Zones>(&p, &p.build_cfg(), &AnalysisConfig::default());
    let ctx = map.config().ctx(&p);
    for pt in p.points().collect::<Vec<_>>() {
        map.set_state(pt, ctx.bottom());
    }
    let err = check_post_fixpoint(&p, &map).unwrap_err();
    assert_eq!(err.from, "init");
}

#[test]
fn unreachable_blocks_stay_bottom() {
    let p = scalar_prog("entry:\n  x := 1\n  return\ndead:\n  x := 2\n  return");
    let map = analyze::<Intervals>(&p, &p.build_cfg(), &AnalysisConfig::default());
    assert!(map.block_entry(1).is_bottom());
    assert!(!map.block_entry(0).is_bottom());
}

#[test]
fn widening_delay_postpones_widening() {
    let p = scalar_prog("entry:\n  i := 0\n  goto h\nh:\n  goto b, e\nb:\n  assume(i < 3)\n  i := i + 1\n  goto h\ne:\n  assume(i >= 3)\n  assert(i == 3)\n  return");
    for delay in [0, 1, 5] {
        let opts = AnalysisConfig { widening_delay: delay, narrowing_iters: 0, ..AnalysisConfig::default() };
        let map = analyze::<Intervals>(&p, &p.build_cfg(), &opts);
        let widened = map.stats().widenings > 0;
        assert_eq!(widened, delay < 3, "delay {delay}");
        assert_eq!(map.num_safe() == 1, !widened, "delay {delay}");
    }
}

#[test]
fn config_parses_and_prints() {
    assert_eq!("intervals".parse::<Domain>().unwrap(), Domain::Intervals);
    assert!("octagons".parse::<Domain>().is_err());
    assert_eq!(
        AnalysisConfig::default().to_string(),
        "domain=zones mode=mrud reduction=opt widening-delay=1 narrowing-iters=2"
    );
}

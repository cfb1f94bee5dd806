use proptest::prelude::*;

use super::*;

const LOOP: &str = include_str!("../../benchmarks/loop.ir");

fn v(s: &str) -> Var {
    Var::new(s)
}

fn messages(src: &str) -> Vec<String> {
    parse_program(src).unwrap_err().diagnostics.into_iter().map(|d| d.message).collect()
}

#[test]
fn loop_program_has_five_blocks() {
    let p = parse_program(LOOP).unwrap();
    assert_eq!(p.blocks().len(), 5);
    assert_eq!(p.entry, "entry");
    assert!(p.is_ptr(&v("p")) && p.is_ptr(&v("pcap")) && p.is_ptr(&v("buf")));
    assert!(!p.is_ptr(&v("i")) && !p.is_ptr(&v("sz")));
    assert_eq!(p.field_type(&v("@buf")), Ty::Ptr);
    assert_eq!(p.field_type(&v("@len")), Ty::Int);
}

#[test]
fn fields_resolve_to_their_bank() {
    let p = parse_program(LOOP).unwrap();
    assert_eq!(p.bank_of_field(&v("@len")).unwrap().id, "bb");
    assert_eq!(p.bank_of_field(&v("@char")).unwrap().id, "char");
    assert_eq!(p.bank_of_field(&v("@x")), Err(IrError::UnknownField("@x".into())));
}

#[test]
fn bank_of_field_is_total_and_single_valued() {
    let p = parse_program(LOOP).unwrap();
    for (b, bank) in p.banks.iter().enumerate() {
        for f in bank.field_vars() {
            let owners: Vec<usize> =
                p.banks.iter().enumerate().filter(|(_, k)| k.field_vars().any(|g| g == f)).map(|(k, _)| k).collect();
            assert_eq!(owners, [b]);
            assert_eq!(p.bank_index(f), Ok(b));
        }
    }
}

#[test]
fn empty_function() {
    let p = parse_program("fun main(){ entry: return }").unwrap();
    assert_eq!(p.blocks().len(), 1);
    assert!(p.build_cfg().edges().is_empty());
}

#[test]
fn undeclared_field_is_reported_with_position() {
    let src = "bank bb size 8 { @cap:4@0 }\nfun main() {\nentry:\n  p := alloc(@cap, 8)\n  x := 1\n  store(p, @len, x)\n  return\n}\n";
    let err = parse_program(src).unwrap_err();
    assert_eq!(err.diagnostics.len(), 1);
    let d = &err.diagnostics[0];
    assert_eq!((d.line, d.col), (6, 3));
    assert_eq!(d.message, "undeclared field @len");
}

#[test]
fn validation_errors() {
    assert!(messages("fun main() { a: goto b\n a: return }").iter().any(|m| m.contains("duplicate block label a")));
    assert!(messages("fun main() { a: goto nowhere }").iter().any(|m| m.contains("unknown block nowhere")));
    assert_eq!(messages("fun main() { a: x := y * z\n return }"), ["nonlinear expression"]);
    let mismatch = "bank b size 4 { @f:4@0 }\nfun main() { a: p := alloc(@f, 4)\n x := p + 1\n return }";
    assert!(messages(mismatch)[0].starts_with("type mismatch"));
    let overlap = "bank b size 8 { @f:4@0, @g:4@2 }\nfun main() { a: return }";
    assert!(messages(overlap)[0].contains("overlaps"));
    let twice = "bank b size 4 { @f:4@0 }\nbank c size 4 { @f:4@0 }\nfun main() { a: return }";
    assert!(messages(twice)[0].contains("more than one bank"));
    assert!(messages("fun main() { a: x := 1 }")[0].contains("does not end"));
}

#[test]
fn loop_cfg_has_a_back_edge() {
    let p = parse_program(LOOP).unwrap();
    let g = p.build_cfg();
    let idx = |l: &str| p.block_index(l).unwrap();
    assert_eq!(g.len(), 5);
    assert!(g.edges().contains(&(idx("body"), idx("loop_entry"))));
    assert_eq!(g.preds(idx("loop_entry")), [idx("entry"), idx("body")]);
    assert_eq!(g.succs(idx("loop_entry")), [idx("header"), idx("exit")]);
}

#[test]
fn straight_line_is_a_path() {
    let p = parse_program("fun main() { a: goto b\n b: goto c\n c: return }").unwrap();
    assert_eq!(p.build_cfg().edges(), [(0, 1), (1, 2)]);
}

#[test]
fn branch_forms_a_diamond() {
    let src = "fun main(n) { top: goto l, r\n l: assume(n > 0)\n goto join\n r: assume(n <= 0)\n goto join\n join: return }";
    let p = parse_program(src).unwrap();
    assert_eq!(p.build_cfg().edges(), [(0, 1), (0, 2), (1, 3), (2, 3)]);
}

#[test]
fn ghost_bases_are_fresh_and_distinct() {
    let p = parse_program(LOOP).unwrap();
    let program_vars: Vec<&Var> = p.vars().map(|(v, _)| v).collect();
    let ghosts: Vec<Var> = p.ptr_vars().map(Var::ghost_base).collect();
    let caches: Vec<Var> = p.banks.iter().map(BankDecl::cache_base).collect();
    let mut all: Vec<&Var> = ghosts.iter().chain(&caches).collect();
    for g in &all {
        assert!(!program_vars.contains(g));
    }
    let n = all.len();
    all.sort();
    all.dedup();
    assert_eq!(all.len(), n);
}

#[test]
fn printed_loop_parses_back() {
    let p = parse_program(LOOP).unwrap();
    let text = p.to_string();
    assert_eq!(parse_program(&text).unwrap(), p);
    assert!(text.contains("  (pcap, @cap) := gep(p, @len, 4)\n"));
}

fn arb_expr() -> impl Strategy<Value = LinExpr> {
    (proptest::collection::vec((0..3usize, -3i64..=3), 0..3), -50i64..=50).prop_map(|(ts, c)| {
        let mut e = LinExpr::constant(c);
        for (k, a) in ts {
            e.add_term(v(["x", "y", "z"][k]), a);
        }
        e
    })
}

fn arb_cond() -> impl Strategy<Value = Cond> {
    let op = prop_oneof![
        Just(CmpOp::Le),
        Just(CmpOp::Lt),
        Just(CmpOp::Eq),
        Just(CmpOp::Ne),
        Just(CmpOp::Ge),
        Just(CmpOp::Gt)
    ];
    proptest::collection::vec((arb_expr(), op, arb_expr()), 1..3)
        .prop_map(|cs| Cond(cs.into_iter().map(|(lhs, op, rhs)| Cmp { lhs, op, rhs }).collect()))
}

fn arb_stmt() -> impl Strategy<Value = Stmt> {
    let int = || prop_oneof![Just(v("x")), Just(v("y")), Just(v("z"))];
    prop_oneof![
        (int(), arb_expr()).prop_map(|(dst, expr)| Stmt::Assign { dst, expr }),
        int().prop_map(Stmt::Havoc),
        arb_cond().prop_map(Stmt::Assume),
        arb_cond().prop_map(Stmt::Assert),
        (int(), prop_oneof![Just("@a"), Just("@b")]).prop_map(|(dst, f)| Stmt::Load { dst, ptr: v("p"), field: v(f) }),
        int().prop_map(|src| Stmt::Store { ptr: v("q"), field: v("@b"), src }),
        prop_oneof![(-8i64..8).prop_map(Operand::Const), int().prop_map(Operand::Var)].prop_map(|offset| Stmt::Gep {
            dst: v("q"),
            dst_field: v("@b"),
            src: v("p"),
            src_field: v("@a"),
            offset
        }),
    ]
}

fn arb_program_text() -> impl Strategy<Value = String> {
    proptest::collection::vec(proptest::collection::vec(arb_stmt(), 0..5), 1..4).prop_map(|blocks| {
        let mut s = String::from("bank bb size 8 { @a:4@0, @b:4@4 }\nfun f(x) {\n");
        let n = blocks.len();
        for (i, stmts) in blocks.iter().enumerate() {
            s += &format!("b{i}:\n");
            if i == 0 {
                s += "  p := alloc(@a, 8)\n  q := alloc(@a, 8)\n";
            }
            for st in stmts {
                s += &format!("  {st}\n");
            }
            if i + 1 < n {
                s += &format!("  goto b{}, b0\n", i + 1);
            } else {
                s += "  return x\n";
            }
        }
        s + "}\n"
    })
}

proptest! {
    #[test]
    fn print_parse_round_trip(text in arb_program_text()) {
        let p = parse_program(&text).unwrap();
        let printed = p.to_string();
        let q = parse_program(&printed).unwrap();
        prop_assert_eq!(&q, &p);
        prop_assert_eq!(q.to_string(), printed);
    }
}

use super::lexer::{lex, Tok, Token};
use super::{
    validate, BankDecl, Block, Cmp, CmpOp, Cond, Diagnostic, FieldDecl, Function, Operand, ParseError, Pos,
    Program, Stmt, Terminator,
};
use crate::numdom::LinExpr;
use crate::var::Var;

/// Parses and validates a program.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let one = |d: Diagnostic| ParseError { diagnostics: vec![d] };
    let toks = lex(src).map_err(one)?;
    let mut p = Parser { toks, pos: 0 };
    let (banks, bank_pos, function) = p.program().map_err(one)?;
    validate(banks, bank_pos, function)
}

type PResult<T> = Result<T, Diagnostic>;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn here(&self) -> Pos {
        let t = &self.toks[self.pos];
        Pos { line: t.line, col: t.col }
    }

    fn error<T>(&self, message: String) -> PResult<T> {
        let t = &self.toks[self.pos];
        Err(Diagnostic { line: t.line, col: t.col, message })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> PResult<()> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            self.error(format!("syntax error: expected {want}, found {}", self.peek()))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.is_kw(kw) {
            self.bump();
            Ok(())
        } else {
            self.error(format!("syntax error: expected `{kw}`, found {}", self.peek()))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => self.error(format!("syntax error: expected an identifier, found {other}")),
        }
    }

    fn var(&mut self) -> PResult<Var> {
        self.ident().map(Var::new)
    }

    fn field(&mut self) -> PResult<Var> {
        match self.peek().clone() {
            Tok::Field(s) => {
                self.bump();
                Ok(Var::new(s))
            }
            other => self.error(format!("syntax error: expected a field name, found {other}")),
        }
    }

    fn int(&mut self) -> PResult<i64> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(n)
            }
            Tok::Minus if matches!(self.peek_at(1), Tok::Int(_)) => {
                self.bump();
                let Tok::Int(n) = self.bump() else { unreachable!() };
                Ok(-n)
            }
            other => self.error(format!("syntax error: expected an integer, found {other}")),
        }
    }

    fn nat(&mut self) -> PResult<u64> {
        let n = self.int()?;
        u64::try_from(n).or_else(|_| self.error(format!("expected a non-negative integer, found {n}")))
    }

    fn program(&mut self) -> PResult<(Vec<BankDecl>, Vec<Pos>, Function)> {
        let mut banks = Vec::new();
        let mut bank_pos = Vec::new();
        let mut function = None;
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::Ident(s) if s == "bank" => {
                    bank_pos.push(self.here());
                    banks.push(self.bank()?);
                }
                Tok::Ident(s) if s == "fun" => {
                    if function.is_some() {
                        return self.error("only one function per program is supported".to_string());
                    }
                    function = Some(self.function()?);
                }
                other => return self.error(format!("syntax error: expected `bank` or `fun`, found {other}")),
            }
        }
        match function {
            Some(f) => Ok((banks, bank_pos, f)),
            None => self.error("program has no function".to_string()),
        }
    }

    fn bank(&mut self) -> PResult<BankDecl> {
        self.expect_kw("bank")?;
        let id = self.ident()?;
        self.expect_kw("size")?;
        let object_size = self.nat()?;
        self.expect(Tok::LBrace)?;
        let mut fields = Vec::new();
        while *self.peek() != Tok::RBrace {
            let name = self.field()?;
            self.expect(Tok::Colon)?;
            let size = self.nat()?;
            self.expect(Tok::At)?;
            let offset = self.nat()?;
            fields.push(FieldDecl { name, size, offset });
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(BankDecl { id, object_size, fields })
    }

    fn function(&mut self) -> PResult<Function> {
        self.expect_kw("fun")?;
        let name = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        while *self.peek() != Tok::RParen {
            params.push(self.var()?);
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::LBrace)?;
        let mut blocks = Vec::new();
        while *self.peek() != Tok::RBrace {
            blocks.push(self.block()?);
        }
        self.expect(Tok::RBrace)?;
        Ok(Function { name, params, blocks })
    }

    fn block(&mut self) -> PResult<Block> {
        let label = self.ident()?;
        self.expect(Tok::Colon)?;
        let mut stmts = Vec::new();
        let mut pos = Vec::new();
        loop {
            pos.push(self.here());
            if self.is_kw("goto") {
                self.bump();
                let mut targets = vec![self.ident()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    targets.push(self.ident()?);
                }
                self.skip_semis();
                return Ok(Block { label, stmts, term: Terminator::Goto(targets), pos });
            }
            if self.is_kw("return") {
                self.bump();
                let mut vals = Vec::new();
                while matches!(self.peek(), Tok::Ident(_)) && *self.peek_at(1) != Tok::Colon {
                    vals.push(self.var()?);
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
                self.skip_semis();
                return Ok(Block { label, stmts, term: Terminator::Return(vals), pos });
            }
            if matches!(self.peek(), Tok::RBrace | Tok::Eof)
                || matches!(self.peek(), Tok::Ident(_)) && *self.peek_at(1) == Tok::Colon
            {
                return self.error(format!("block {label} does not end with `goto` or `return`"));
            }
            stmts.push(self.stmt()?);
            self.skip_semis();
        }
    }

    fn skip_semis(&mut self) {
        while *self.peek() == Tok::Semi {
            self.bump();
        }
    }

    fn call_kw(&self, kw: &str) -> bool {
        self.is_kw(kw) && *self.peek_at(1) == Tok::LParen
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        if self.call_kw("assume") || self.call_kw("assert") {
            let is_assume = self.is_kw("assume");
            self.bump();
            self.expect(Tok::LParen)?;
            let c = self.cond()?;
            self.expect(Tok::RParen)?;
            return Ok(if is_assume { Stmt::Assume(c) } else { Stmt::Assert(c) });
        }
        if self.call_kw("havoc") {
            self.bump();
            self.expect(Tok::LParen)?;
            let v = self.var()?;
            self.expect(Tok::RParen)?;
            return Ok(Stmt::Havoc(v));
        }
        if self.call_kw("store") {
            self.bump();
            self.expect(Tok::LParen)?;
            let ptr = self.var()?;
            self.expect(Tok::Comma)?;
            let field = self.field()?;
            self.expect(Tok::Comma)?;
            let src = self.var()?;
            self.expect(Tok::RParen)?;
            return Ok(Stmt::Store { ptr, field, src });
        }
        if *self.peek() == Tok::LParen {
            self.bump();
            let dst = self.var()?;
            self.expect(Tok::Comma)?;
            let dst_field = self.field()?;
            self.expect(Tok::RParen)?;
            self.expect(Tok::Assign)?;
            self.expect_kw("gep")?;
            self.expect(Tok::LParen)?;
            let src = self.var()?;
            self.expect(Tok::Comma)?;
            let src_field = self.field()?;
            self.expect(Tok::Comma)?;
            let offset = self.operand()?;
            self.expect(Tok::RParen)?;
            return Ok(Stmt::Gep { dst, dst_field, src, src_field, offset });
        }
        let dst = self.var()?;
        self.expect(Tok::Assign)?;
        if self.call_kw("alloc") {
            self.bump();
            self.expect(Tok::LParen)?;
            let field = self.field()?;
            self.expect(Tok::Comma)?;
            let size = self.operand()?;
            self.expect(Tok::RParen)?;
            return Ok(Stmt::Alloc { dst, field, size });
        }
        if self.call_kw("load") {
            self.bump();
            self.expect(Tok::LParen)?;
            let ptr = self.var()?;
            self.expect(Tok::Comma)?;
            let field = self.field()?;
            self.expect(Tok::RParen)?;
            return Ok(Stmt::Load { dst, ptr, field });
        }
        let expr = self.expr()?;
        Ok(Stmt::Assign { dst, expr })
    }

    fn operand(&mut self) -> PResult<Operand> {
        match self.peek() {
            Tok::Ident(_) => Ok(Operand::Var(self.var()?)),
            _ => Ok(Operand::Const(self.int()?)),
        }
    }

    fn cond(&mut self) -> PResult<Cond> {
        let mut cmps = vec![self.cmp()?];
        while *self.peek() == Tok::AndAnd {
            self.bump();
            cmps.push(self.cmp()?);
        }
        Ok(Cond(cmps))
    }

    fn cmp(&mut self) -> PResult<Cmp> {
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Le => CmpOp::Le,
            Tok::Lt => CmpOp::Lt,
            Tok::Ge => CmpOp::Ge,
            Tok::Gt => CmpOp::Gt,
            Tok::EqEq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            other => return self.error(format!("syntax error: expected a comparison, found {other}")),
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(Cmp { lhs, op, rhs })
    }

    fn expr(&mut self) -> PResult<LinExpr> {
        let mut acc = self.term()?;
        loop {
            let neg = match self.peek() {
                Tok::Plus => false,
                Tok::Minus => true,
                _ => return Ok(acc),
            };
            self.bump();
            let t = self.term()?;
            acc = self.checked(|| {
                let t = if neg { scale(&t, -1)? } else { t.clone() };
                add(&acc, &t)
            })?;
        }
    }

    fn term(&mut self) -> PResult<LinExpr> {
        let start = self.here();
        let mut acc = self.unary()?;
        while *self.peek() == Tok::Star {
            self.bump();
            let f = self.unary()?;
            acc = match (acc.is_constant(), f.is_constant()) {
                (true, _) => self.checked(|| scale(&f, acc.constant_term()))?,
                (_, true) => self.checked(|| scale(&acc, f.constant_term()))?,
                _ => {
                    return Err(Diagnostic { line: start.line, col: start.col, message: "nonlinear expression".into() })
                }
            };
        }
        Ok(acc)
    }

    fn unary(&mut self) -> PResult<LinExpr> {
        match self.peek().clone() {
            Tok::Minus => {
                self.bump();
                let e = self.unary()?;
                self.checked(|| scale(&e, -1))
            }
            Tok::Int(n) => {
                self.bump();
                Ok(LinExpr::constant(n))
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(LinExpr::var(Var::new(s)))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            other => self.error(format!("syntax error: expected an expression, found {other}")),
        }
    }

    fn checked(&self, f: impl FnOnce() -> Option<LinExpr>) -> PResult<LinExpr> {
        match f() {
            Some(e) => Ok(e),
            None => self.error("integer overflow in constant expression".into()),
        }
    }
}

fn scale(e: &LinExpr, k: i64) -> Option<LinExpr> {
    let mut out = LinExpr::constant(e.constant_term().checked_mul(k)?);
    for (v, c) in e.terms() {
        out.add_term(v.clone(), c.checked_mul(k)?);
    }
    Some(out)
}

fn add(a: &LinExpr, b: &LinExpr) -> Option<LinExpr> {
    let mut out = LinExpr::constant(a.constant_term().checked_add(b.constant_term())?);
    for (v, c) in a.terms().chain(b.terms()) {
        let cur = out.coeff(v);
        let sum = cur.checked_add(c)?;
        out.add_term(v.clone(), sum - cur);
    }
    Some(out)
}

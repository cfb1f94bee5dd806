//! The analyzed language: banks of typed objects and a single function made
//! of labelled basic blocks.
//!
//! [`parse_program`] performs lexing, parsing and validation (labels, field
//! declarations, type inference), so any [`Program`] value is well formed.

mod cfg;
mod lexer;
mod parser;
mod printer;

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use cfg::Cfg;
pub use parser::parse_program;

use crate::numdom::{ConsKind, LinCons, LinExpr};
use crate::var::Var;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldDecl {
    pub name: Var,
    pub size: u64,
    pub offset: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BankDecl {
    pub id: String,
    pub object_size: u64,
    pub fields: Vec<FieldDecl>,
}

impl BankDecl {
    /// Ghost variable holding the base address of the object in the cache.
    pub fn cache_base(&self) -> Var {
        Var::new(format!("{}.cache^base", self.id))
    }

    pub fn field_vars(&self) -> impl Iterator<Item = &Var> {
        self.fields.iter().map(|f| &f.name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Ty {
    Int,
    Ptr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Operand {
    Const(i64),
    Var(Var),
}

impl Operand {
    pub fn to_expr(&self) -> LinExpr {
        match self {
            Operand::Const(c) => LinExpr::constant(*c),
            Operand::Var(v) => LinExpr::var(v.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Le,
    Lt,
    Eq,
    Ne,
    Ge,
    Gt,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cmp {
    pub lhs: LinExpr,
    pub op: CmpOp,
    pub rhs: LinExpr,
}

impl Cmp {
    pub fn to_cons(&self) -> LinCons {
        let (l, r) = (self.lhs.clone(), &self.rhs);
        match self.op {
            CmpOp::Le => LinCons::new(l.minus(r), ConsKind::Le),
            CmpOp::Lt => LinCons::new(l.minus(r), ConsKind::Lt),
            CmpOp::Eq => LinCons::new(l.minus(r), ConsKind::Eq),
            CmpOp::Ne => LinCons::new(l.minus(r), ConsKind::Ne),
            CmpOp::Ge => LinCons::new(r.clone().minus(&l), ConsKind::Le),
            CmpOp::Gt => LinCons::new(r.clone().minus(&l), ConsKind::Lt),
        }
    }
}

/// A conjunction of comparisons.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cond(pub Vec<Cmp>);

impl Cond {
    pub fn to_cons(&self) -> Vec<LinCons> {
        self.0.iter().map(Cmp::to_cons).collect()
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.0.iter().flat_map(|c| c.lhs.vars().chain(c.rhs.vars()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Assign { dst: Var, expr: LinExpr },
    Havoc(Var),
    Assume(Cond),
    Assert(Cond),
    /// `dst := alloc(@field, size)`: a new object in the bank of `field`.
    Alloc { dst: Var, field: Var, size: Operand },
    /// `(dst, @dst_field) := gep(src, @src_field, offset)`.
    Gep { dst: Var, dst_field: Var, src: Var, src_field: Var, offset: Operand },
    Load { dst: Var, ptr: Var, field: Var },
    Store { ptr: Var, field: Var, src: Var },
}

impl Stmt {
    /// The field whose bank the statement dereferences, if any.
    pub fn deref_field(&self) -> Option<&Var> {
        match self {
            Stmt::Load { field, .. } | Stmt::Store { field, .. } => Some(field),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Terminator {
    Goto(Vec<String>),
    Return(Vec<Var>),
}

#[derive(Clone, Debug)]
pub struct Block {
    pub label: String,
    pub stmts: Vec<Stmt>,
    pub term: Terminator,
    /// Source position of each statement, then of the terminator.
    pub pos: Vec<Pos>,
}

/// A 1-based source position.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl PartialEq for Block {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label && self.stmts == other.stmts && self.term == other.term
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Function {
    pub name: String,
    pub params: Vec<Var>,
    pub blocks: Vec<Block>,
}

/// A program point: the state before statement `idx` of `block`, where
/// `idx == stmts.len()` denotes the terminator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point {
    pub block: usize,
    pub idx: usize,
}

#[derive(Clone, Debug)]
pub struct Program {
    pub banks: Vec<BankDecl>,
    pub function: Function,
    /// Label of the entry block (always the first block).
    pub entry: String,
    field_bank: BTreeMap<Var, usize>,
    field_types: BTreeMap<Var, Ty>,
    types: BTreeMap<Var, Ty>,
    labels: BTreeMap<String, usize>,
}

impl PartialEq for Program {
    fn eq(&self, other: &Self) -> bool {
        self.banks == other.banks && self.function == other.function
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IrError {
    #[error("unknown field {0}")]
    UnknownField(String),
    #[error("unknown block {0}")]
    UnknownBlock(String),
}

/// A parse or validation problem at a source position (1-based).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{}", .diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
pub struct ParseError {
    pub diagnostics: Vec<Diagnostic>,
}

impl Program {
    pub fn blocks(&self) -> &[Block] {
        &self.function.blocks
    }

    pub fn block(&self, i: usize) -> &Block {
        &self.function.blocks[i]
    }

    pub fn block_index(&self, label: &str) -> Result<usize, IrError> {
        self.labels.get(label).copied().ok_or_else(|| IrError::UnknownBlock(label.to_string()))
    }

    /// Index of the bank declaring `field`.
    pub fn bank_index(&self, field: &Var) -> Result<usize, IrError> {
        self.field_bank.get(field).copied().ok_or_else(|| IrError::UnknownField(field.to_string()))
    }

    pub fn bank_of_field(&self, field: &Var) -> Result<&BankDecl, IrError> {
        self.bank_index(field).map(|b| &self.banks[b])
    }

    /// Field variable to bank index, for every declared field.
    pub fn field_layout(&self) -> &BTreeMap<Var, usize> {
        &self.field_bank
    }

    pub fn field_type(&self, field: &Var) -> Ty {
        self.field_types.get(field).copied().unwrap_or(Ty::Int)
    }

    /// Type of a program variable; undeclared names are ints.
    pub fn var_type(&self, v: &Var) -> Ty {
        self.types.get(v).copied().unwrap_or(Ty::Int)
    }

    pub fn is_ptr(&self, v: &Var) -> bool {
        self.var_type(v) == Ty::Ptr
    }

    /// Every program variable with its type, sorted by name.
    pub fn vars(&self) -> impl Iterator<Item = (&Var, Ty)> {
        self.types.iter().map(|(v, t)| (v, *t))
    }

    pub fn ptr_vars(&self) -> impl Iterator<Item = &Var> {
        self.vars().filter(|(_, t)| *t == Ty::Ptr).map(|(v, _)| v)
    }

    pub fn int_vars(&self) -> impl Iterator<Item = &Var> {
        self.vars().filter(|(_, t)| *t == Ty::Int).map(|(v, _)| v)
    }

    /// Indices of the successor blocks of block `b`.
    pub fn successors(&self, b: usize) -> Vec<usize> {
        match &self.block(b).term {
            Terminator::Goto(ls) => ls.iter().map(|l| self.labels[l]).collect(),
            Terminator::Return(_) => Vec::new(),
        }
    }

    /// Every program point, in block order.
    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        self.blocks()
            .iter()
            .enumerate()
            .flat_map(|(b, blk)| (0..=blk.stmts.len()).map(move |idx| Point { block: b, idx }))
    }

    /// Assertion sites in program order.
    pub fn asserts(&self) -> Vec<Point> {
        self.points()
            .filter(|p| matches!(self.block(p.block).stmts.get(p.idx), Some(Stmt::Assert(_))))
            .collect()
    }

    pub fn point_name(&self, p: Point) -> String {
        format!("{}:{}", self.block(p.block).label, p.idx)
    }

    pub fn pos_of(&self, p: Point) -> Pos {
        self.block(p.block).pos.get(p.idx).copied().unwrap_or_default()
    }

    pub fn has_havoc(&self) -> bool {
        self.blocks().iter().any(|b| b.stmts.iter().any(|s| matches!(s, Stmt::Havoc(_))))
    }

    pub fn build_cfg(&self) -> Cfg {
        Cfg::new(self)
    }
}

/// Assembles a parsed program and checks everything the grammar cannot.
pub(crate) fn validate(
    banks: Vec<BankDecl>,
    bank_pos: Vec<Pos>,
    function: Function,
) -> Result<Program, ParseError> {
    let mut diags = Vec::new();
    let mut err = |p: Pos, message: String| diags.push(Diagnostic { line: p.line, col: p.col, message });

    let mut field_bank = BTreeMap::new();
    let mut bank_ids = BTreeMap::new();
    for (b, bank) in banks.iter().enumerate() {
        let line = bank_pos[b];
        if bank_ids.insert(bank.id.clone(), b).is_some() {
            err(line, format!("duplicate bank {}", bank.id));
        }
        if bank.object_size == 0 {
            err(line, format!("bank {} has size 0", bank.id));
        }
        if bank.fields.is_empty() {
            err(line, format!("bank {} declares no fields", bank.id));
        }
        let mut end = 0;
        for (k, f) in bank.fields.iter().enumerate() {
            if f.size == 0 {
                err(line, format!("field {} has size 0", f.name));
            }
            if k > 0 && f.offset < end {
                err(line, format!("field {} overlaps the previous field", f.name));
            }
            end = f.offset + f.size;
            if end > bank.object_size {
                err(line, format!("field {} exceeds the object size of bank {}", f.name, bank.id));
            }
            if field_bank.insert(f.name.clone(), b).is_some() {
                err(line, format!("field {} declared in more than one bank", f.name));
            }
        }
    }

    let mut labels = BTreeMap::new();
    for (i, blk) in function.blocks.iter().enumerate() {
        if labels.insert(blk.label.clone(), i).is_some() {
            err(blk.pos[0], format!("duplicate block label {}", blk.label));
        }
    }
    if function.blocks.is_empty() {
        err(Pos::default(), "function has no blocks".to_string());
    }
    for blk in &function.blocks {
        if let Terminator::Goto(ts) = &blk.term {
            for t in ts {
                if !labels.contains_key(t) {
                    err(*blk.pos.last().unwrap(), format!("goto to unknown block {t}"));
                }
            }
        }
        for (s, line) in blk.stmts.iter().zip(&blk.pos) {
            for f in stmt_fields(s) {
                if !field_bank.contains_key(f) {
                    err(*line, format!("undeclared field {f}"));
                }
            }
            if let Stmt::Gep { src_field, dst_field, .. } = s {
                if let (Some(a), Some(b)) = (field_bank.get(src_field), field_bank.get(dst_field)) {
                    if a != b {
                        err(*line, format!("type mismatch: gep moves from {src_field} to {dst_field} in another bank"));
                    }
                }
            }
        }
    }
    if !diags.is_empty() {
        return Err(ParseError { diagnostics: diags });
    }

    let (types, field_types) = infer_types(&function, &mut diags);
    if !diags.is_empty() {
        return Err(ParseError { diagnostics: diags });
    }
    let entry = function.blocks[0].label.clone();
    Ok(Program { banks, function, entry, field_bank, field_types, types, labels })
}

fn stmt_fields(s: &Stmt) -> Vec<&Var> {
    match s {
        Stmt::Alloc { field, .. } | Stmt::Load { field, .. } | Stmt::Store { field, .. } => vec![field],
        Stmt::Gep { dst_field, src_field, .. } => vec![dst_field, src_field],
        _ => Vec::new(),
    }
}

/// Pointers are created by alloc and gep; a field is a pointer field when a
/// pointer is stored into it, and loading such a field yields a pointer.
fn infer_types(f: &Function, diags: &mut Vec<Diagnostic>) -> (BTreeMap<Var, Ty>, BTreeMap<Var, Ty>) {
    let mut types: BTreeMap<Var, Ty> = f.params.iter().map(|p| (p.clone(), Ty::Int)).collect();
    let mut field_types: BTreeMap<Var, Ty> = BTreeMap::new();
    let all = || f.blocks.iter().flat_map(|b| b.stmts.iter().zip(&b.pos));
    for (s, _) in all() {
        match s {
            Stmt::Alloc { dst, .. } | Stmt::Gep { dst, .. } => {
                types.insert(dst.clone(), Ty::Ptr);
            }
            _ => {}
        }
    }
    loop {
        let mut changed = false;
        for (s, _) in all() {
            match s {
                Stmt::Store { field, src, .. } if types.get(src) == Some(&Ty::Ptr) => {
                    changed |= field_types.insert(field.clone(), Ty::Ptr).is_none();
                }
                Stmt::Load { dst, field, .. } if field_types.get(field) == Some(&Ty::Ptr) => {
                    changed |= types.insert(dst.clone(), Ty::Ptr) != Some(Ty::Ptr);
                }
                _ => {}
            }
        }
        if !changed {
            break;
        }
    }
    let ty = |v: &Var| types.get(v).copied().unwrap_or(Ty::Int);
    let mut err = |p: Pos, message: String| diags.push(Diagnostic { line: p.line, col: p.col, message });
    for (s, &line) in all() {
        let want = |v: &Var, t: Ty, what: &str, err: &mut dyn FnMut(Pos, String)| {
            if ty(v) != t {
                let name = if t == Ty::Ptr { "pointer" } else { "integer" };
                err(line, format!("type mismatch: {v} used as {what} but is not an {name}"));
            }
        };
        match s {
            Stmt::Assign { dst, expr } => {
                want(dst, Ty::Int, "an integer target", &mut err);
                for v in expr.vars() {
                    want(v, Ty::Int, "an integer operand", &mut err);
                }
            }
            Stmt::Havoc(v) => want(v, Ty::Int, "a havoc target", &mut err),
            Stmt::Assume(c) | Stmt::Assert(c) => {
                for v in c.vars() {
                    want(v, Ty::Int, "a condition operand", &mut err);
                }
            }
            Stmt::Alloc { size, .. } => {
                if let Operand::Var(v) = size {
                    want(v, Ty::Int, "an allocation size", &mut err);
                }
            }
            Stmt::Gep { src, offset, .. } => {
                want(src, Ty::Ptr, "a gep base", &mut err);
                if let Operand::Var(v) = offset {
                    want(v, Ty::Int, "a gep offset", &mut err);
                }
            }
            Stmt::Load { ptr, .. } => want(ptr, Ty::Ptr, "a load address", &mut err),
            Stmt::Store { ptr, .. } => want(ptr, Ty::Ptr, "a store address", &mut err),
        }
    }
    // every mentioned variable gets a type
    for (s, _) in all() {
        let mut note = |v: &Var| {
            types.entry(v.clone()).or_insert(Ty::Int);
        };
        match s {
            Stmt::Assign { dst, expr } => {
                note(dst);
                expr.vars().for_each(&mut note);
            }
            Stmt::Havoc(v) => note(v),
            Stmt::Assume(c) | Stmt::Assert(c) => c.vars().for_each(&mut note),
            Stmt::Alloc { size: Operand::Var(v), .. } | Stmt::Gep { offset: Operand::Var(v), .. } => note(v),
            Stmt::Load { dst, .. } => note(dst),
            Stmt::Store { src, .. } => note(src),
            _ => {}
        }
    }
    (types, field_types)
}

#[cfg(test)]
mod tests;

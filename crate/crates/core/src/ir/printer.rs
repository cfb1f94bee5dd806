//! Canonical text form. Parsing the printed form yields an equal program.

use std::fmt;

use super::{BankDecl, Cmp, CmpOp, Cond, Operand, Program, Stmt, Terminator};

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Const(c) => write!(f, "{c}"),
            Operand::Var(v) => write!(f, "{v}"),
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CmpOp::Le => "<=",
            CmpOp::Lt => "<",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        })
    }
}

impl fmt::Display for Cmp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.op, self.rhs)
    }
}

impl fmt::Display for Cond {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " && ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stmt::Assign { dst, expr } => write!(f, "{dst} := {expr}"),
            Stmt::Havoc(v) => write!(f, "havoc({v})"),
            Stmt::Assume(c) => write!(f, "assume({c})"),
            Stmt::Assert(c) => write!(f, "assert({c})"),
            Stmt::Alloc { dst, field, size } => write!(f, "{dst} := alloc({field}, {size})"),
            Stmt::Gep { dst, dst_field, src, src_field, offset } => {
                write!(f, "({dst}, {dst_field}) := gep({src}, {src_field}, {offset})")
            }
            Stmt::Load { dst, ptr, field } => write!(f, "{dst} := load({ptr}, {field})"),
            Stmt::Store { ptr, field, src } => write!(f, "store({ptr}, {field}, {src})"),
        }
    }
}

impl fmt::Display for Terminator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Terminator::Goto(ts) => write!(f, "goto {}", ts.join(", ")),
            Terminator::Return(vs) if vs.is_empty() => write!(f, "return"),
            Terminator::Return(vs) => {
                let names: Vec<&str> = vs.iter().map(|v| v.name()).collect();
                write!(f, "return {}", names.join(", "))
            }
        }
    }
}

impl fmt::Display for BankDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fields: Vec<String> =
            self.fields.iter().map(|d| format!("{}:{}@{}", d.name, d.size, d.offset)).collect();
        write!(f, "bank {} size {} {{ {} }}", self.id, self.object_size, fields.join(", "))
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.banks {
            writeln!(f, "{b}")?;
        }
        if !self.banks.is_empty() {
            writeln!(f)?;
        }
        let params: Vec<&str> = self.function.params.iter().map(|v| v.name()).collect();
        writeln!(f, "fun {}({}) {{", self.function.name, params.join(", "))?;
        for blk in self.blocks() {
            writeln!(f, "{}:", blk.label)?;
            for s in &blk.stmts {
                writeln!(f, "  {s}")?;
            }
            writeln!(f, "  {}", blk.term)?;
        }
        writeln!(f, "}}")
    }
}

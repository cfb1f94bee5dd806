use std::fmt;

use crate::ir::Cfg;

/// One element of a weak topological ordering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WtoElem {
    Vertex(usize),
    /// A strongly connected piece entered only through `head`, which is
    /// where widening is applied.
    Component { head: usize, body: Vec<WtoElem> },
}

/// Hierarchical ordering of the blocks reachable from the entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Wto {
    pub elems: Vec<WtoElem>,
}

impl Wto {
    /// Bourdoncle's recursive construction from a depth-first walk.
    pub fn new(cfg: &Cfg) -> Self {
        let mut b = Builder { cfg, dfn: vec![0; cfg.len()], stack: Vec::new(), num: 0 };
        let mut elems = Vec::new();
        if !cfg.is_empty() {
            b.visit(cfg.entry(), &mut elems);
        }
        elems.reverse();
        Wto { elems }
    }

    /// Component heads, outer components before the ones they contain.
    pub fn heads(&self) -> Vec<usize> {
        fn walk(es: &[WtoElem], out: &mut Vec<usize>) {
            for e in es {
                if let WtoElem::Component { head, body } = e {
                    out.push(*head);
                    walk(body, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.elems, &mut out);
        out
    }

    /// Heads of the components containing `v`, outermost first. A head is
    /// part of its own component.
    pub fn nesting(&self, v: usize) -> Vec<usize> {
        fn walk(es: &[WtoElem], v: usize, path: &mut Vec<usize>) -> bool {
            for e in es {
                match e {
                    WtoElem::Vertex(x) if *x == v => return true,
                    WtoElem::Vertex(_) => {}
                    WtoElem::Component { head, body } => {
                        path.push(*head);
                        if *head == v || walk(body, v, path) {
                            return true;
                        }
                        path.pop();
                    }
                }
            }
            false
        }
        let mut path = Vec::new();
        walk(&self.elems, v, &mut path);
        path
    }
}

impl fmt::Display for Wto {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn write(es: &[WtoElem], f: &mut fmt::Formatter<'_>) -> fmt::Result {
            for (i, e) in es.iter().enumerate() {
                if i > 0 {
                    f.write_str(" ")?;
                }
                match e {
                    WtoElem::Vertex(v) => write!(f, "{v}")?,
                    WtoElem::Component { head, body } => {
                        write!(f, "({head}")?;
                        if !body.is_empty() {
                            f.write_str(" ")?;
                            write(body, f)?;
                        }
                        f.write_str(")")?;
                    }
                }
            }
            Ok(())
        }
        write(&self.elems, f)
    }
}

struct Builder<'a> {
    cfg: &'a Cfg,
    dfn: Vec<usize>,
    stack: Vec<usize>,
    num: usize,
}

impl Builder<'_> {
    /// Elements are pushed in reverse order; callers reverse once at the end.
    fn visit(&mut self, v: usize, out: &mut Vec<WtoElem>) -> usize {
        self.stack.push(v);
        self.num += 1;
        self.dfn[v] = self.num;
        let mut head = self.num;
        let mut is_loop = false;
        for &s in self.cfg.succs(v) {
            let min = if self.dfn[s] == 0 { self.visit(s, out) } else { self.dfn[s] };
            if min <= head {
                head = min;
                is_loop = true;
            }
        }
        if head == self.dfn[v] {
            self.dfn[v] = usize::MAX;
            let mut el = self.stack.pop().expect("v is on the stack");
            if is_loop {
                while el != v {
                    self.dfn[el] = 0;
                    el = self.stack.pop().expect("v is on the stack");
                }
                out.push(self.component(v));
            } else {
                out.push(WtoElem::Vertex(v));
            }
        }
        head
    }

    fn component(&mut self, v: usize) -> WtoElem {
        let mut body = Vec::new();
        for &s in self.cfg.succs(v) {
            if self.dfn[s] == 0 {
                self.visit(s, &mut body);
            }
        }
        body.reverse();
        WtoElem::Component { head: v, body }
    }
}

use super::Program;

/// Block-level control-flow graph; node `i` is block `i`, node 0 the entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cfg {
    succs: Vec<Vec<usize>>,
    preds: Vec<Vec<usize>>,
}

impl Cfg {
    pub(crate) fn new(p: &Program) -> Self {
        let n = p.blocks().len();
        let succs: Vec<Vec<usize>> = (0..n).map(|b| p.successors(b)).collect();
        Self::from_edges(n, succs)
    }

    /// Builds a graph from successor lists (duplicates are kept once).
    pub fn from_edges(n: usize, mut succs: Vec<Vec<usize>>) -> Self {
        let mut preds = vec![Vec::new(); n];
        for (b, ss) in succs.iter_mut().enumerate() {
            let mut seen = Vec::new();
            ss.retain(|s| {
                let fresh = !seen.contains(s);
                seen.push(*s);
                fresh
            });
            for &s in ss.iter() {
                preds[s].push(b);
            }
        }
        Cfg { succs, preds }
    }

    pub fn entry(&self) -> usize {
        0
    }

    pub fn len(&self) -> usize {
        self.succs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.succs.is_empty()
    }

    pub fn succs(&self, b: usize) -> &[usize] {
        &self.succs[b]
    }

    pub fn preds(&self, b: usize) -> &[usize] {
        &self.preds[b]
    }

    /// All edges `(from, to)` in block order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.succs.iter().enumerate().flat_map(|(b, ss)| ss.iter().map(move |&s| (b, s))).collect()
    }
}

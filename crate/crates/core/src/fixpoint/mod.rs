//! Intraprocedural fixpoint engine.
//!
//! Blocks are visited along a weak topological ordering. Each component
//! head iterates with plain joins for `widening_delay` rounds, then widens
//! until the recomputed entry is included in the current one. A fixed number
//! of descending passes with narrowing follows; a pass that would break the
//! post-fixpoint property is undone.

mod wto;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use wto::{Wto, WtoElem};

use crate::ir::{Cfg, Point, Program, Stmt};
use crate::mrud::{AbsState, Ctx, Mode, Mutation, Reduction};
use crate::numdom::NumDomain;

/// Head visits after which a component gives up and jumps to top.
const MAX_HEAD_VISITS: usize = 500;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Intervals,
    #[default]
    Zones,
}

named_enum!(Domain, "domain", Intervals => "intervals", Zones => "zones");

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub domain: Domain,
    pub mode: Mode,
    /// Ignored in baseline mode, which has no cache.
    pub reduction: Reduction,
    pub widening_delay: usize,
    pub narrowing_iters: usize,
    #[serde(skip)]
    #[doc(hidden)]
    pub mutation: Option<Mutation>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            domain: Domain::Zones,
            mode: Mode::Mrud,
            reduction: Reduction::Opt,
            widening_delay: 1,
            narrowing_iters: 2,
            mutation: None,
        }
    }
}

impl AnalysisConfig {
    pub fn ctx<'p>(&self, p: &'p Program) -> Ctx<'p> {
        Ctx::new(p, self.mode, self.reduction).with_mutation(self.mutation)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Safe,
    Warn,
}

named_enum!(Verdict, "verdict", Safe => "safe", Warn => "warn");

/// Counters collected while iterating.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub head_visits: usize,
    pub widenings: usize,
    pub narrowing_passes: usize,
    /// Descending passes that were undone because they broke the
    /// post-fixpoint property.
    pub narrowing_rollbacks: usize,
}

/// The state before every statement of every block, plus assertion verdicts.
/// Unreachable points hold bottom.
#[derive(Clone, Debug)]
pub struct InvariantMap<D> {
    config: AnalysisConfig,
    states: Vec<Vec<AbsState<D>>>,
    verdicts: BTreeMap<Point, Verdict>,
    stats: Stats,
}

impl<D: NumDomain> InvariantMap<D> {
    pub fn config(&self) -> &AnalysisConfig {
        &self.config
    }

    pub fn state(&self, p: Point) -> &AbsState<D> {
        &self.states[p.block][p.idx]
    }

    pub fn block_entry(&self, b: usize) -> &AbsState<D> {
        &self.states[b][0]
    }

    /// Assertion sites in program order.
    pub fn verdicts(&self) -> impl Iterator<Item = (Point, Verdict)> + '_ {
        self.verdicts.iter().map(|(p, v)| (*p, *v))
    }

    pub fn verdict(&self, p: Point) -> Option<Verdict> {
        self.verdicts.get(&p).copied()
    }

    pub fn num_safe(&self) -> usize {
        self.verdicts.values().filter(|v| **v == Verdict::Safe).count()
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    /// Decides every assert from the state before it.
    pub fn check_asserts(&mut self, p: &Program) {
        let ctx = self.config.ctx(p);
        self.verdicts = p
            .asserts()
            .into_iter()
            .map(|pt| {
                let Stmt::Assert(c) = &p.block(pt.block).stmts[pt.idx] else { unreachable!("assert point") };
                let v = if ctx.entails(self.state(pt), c) { Verdict::Safe } else { Verdict::Warn };
                (pt, v)
            })
            .collect();
    }

    /// Overwrites one point, for exercising [`check_post_fixpoint`].
    #[doc(hidden)]
    pub fn set_state(&mut self, p: Point, st: AbsState<D>) {
        self.states[p.block][p.idx] = st;
    }
}

/// An inclusion that fails in a supposed post-fixpoint.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{from} -> {to}: {what}")]
pub struct PostFixpointViolation {
    /// `init` for the program entry.
    pub from: String,
    pub to: String,
    pub what: &'static str,
}

pub fn compute_wto(cfg: &Cfg) -> Wto {
    Wto::new(cfg)
}

/// Computes the invariant map and decides every assert.
pub fn analyze<D: NumDomain>(p: &Program, cfg: &Cfg, opts: &AnalysisConfig) -> InvariantMap<D> {
    let mut map = solve_traced(p, cfg, opts, &mut |_| {});
    map.check_asserts(p);
    map
}

/// The invariant map alone, reporting head stabilization and undone
/// descending passes to `log`. Verdicts are left empty.
pub fn solve_traced<D: NumDomain>(
    p: &Program,
    cfg: &Cfg,
    opts: &AnalysisConfig,
    log: &mut dyn FnMut(&str),
) -> InvariantMap<D> {
    let ctx = opts.ctx(p);
    let states = p.blocks().iter().map(|b| vec![ctx.bottom(); b.stmts.len() + 1]).collect();
    let mut eng = Engine { ctx, prog: p, cfg, opts, states, stats: Stats::default(), log };
    let wto = compute_wto(cfg);
    (eng.log)(&format!("wto: {wto}"));
    for e in &wto.elems {
        eng.ascend(e);
    }
    for pass in 0..opts.narrowing_iters {
        let snapshot = eng.states.clone();
        for e in &wto.elems {
            eng.descend(e);
        }
        eng.stats.narrowing_passes += 1;
        if let Err(v) = post_fixpoint(&eng.ctx, p, cfg, &eng.states) {
            (eng.log)(&format!("narrowing pass {pass} undone: {v}"));
            eng.states = snapshot;
            eng.stats.narrowing_rollbacks += 1;
            break;
        }
    }
    InvariantMap { config: opts.clone(), states: eng.states, verdicts: BTreeMap::new(), stats: eng.stats }
}

/// Re-applies every transfer and checks that its result is included in the
/// state recorded after it, along each CFG edge and from the initial state
/// into the entry.
pub fn check_post_fixpoint<D: NumDomain>(p: &Program, map: &InvariantMap<D>) -> Result<(), PostFixpointViolation> {
    post_fixpoint(&map.config.ctx(p), p, &p.build_cfg(), &map.states)
}

fn post_fixpoint<D: NumDomain>(
    ctx: &Ctx,
    p: &Program,
    cfg: &Cfg,
    states: &[Vec<AbsState<D>>],
) -> Result<(), PostFixpointViolation> {
    let entry = Point { block: cfg.entry(), idx: 0 };
    if !ctx.leq(&ctx.init(), &states[entry.block][0]) {
        return Err(PostFixpointViolation { from: "init".into(), to: p.point_name(entry), what: "initial state" });
    }
    for (b, blk) in p.blocks().iter().enumerate() {
        for (i, s) in blk.stmts.iter().enumerate() {
            if !ctx.leq(&ctx.transfer(s, &states[b][i]), &states[b][i + 1]) {
                return Err(PostFixpointViolation {
                    from: p.point_name(Point { block: b, idx: i }),
                    to: p.point_name(Point { block: b, idx: i + 1 }),
                    what: "statement",
                });
            }
        }
    }
    for (from, to) in cfg.edges() {
        let out = states[from].last().expect("one state per terminator");
        if !ctx.leq(out, &states[to][0]) {
            return Err(PostFixpointViolation {
                from: p.point_name(Point { block: from, idx: p.block(from).stmts.len() }),
                to: p.point_name(Point { block: to, idx: 0 }),
                what: "edge",
            });
        }
    }
    Ok(())
}

struct Engine<'a, 'p, D> {
    ctx: Ctx<'p>,
    prog: &'p Program,
    cfg: &'a Cfg,
    opts: &'a AnalysisConfig,
    states: Vec<Vec<AbsState<D>>>,
    stats: Stats,
    log: &'a mut dyn FnMut(&str),
}

impl<D: NumDomain> Engine<'_, '_, D> {
    /// Join of the predecessors' exit states; a lone live predecessor is
    /// taken as is. The entry block also receives the initial state.
    fn entry_state(&self, b: usize) -> AbsState<D> {
        let mut acc = (b == self.cfg.entry()).then(|| self.ctx.init());
        for &p in self.cfg.preds(b) {
            let out = self.states[p].last().expect("one state per terminator");
            if out.is_bottom() {
                continue;
            }
            acc = Some(match acc {
                None => out.clone(),
                Some(a) => self.ctx.join(&a, out),
            });
        }
        acc.unwrap_or_else(|| self.ctx.bottom())
    }

    fn run_block(&mut self, b: usize, entry: AbsState<D>) {
        let blk = self.prog.block(b);
        let pts = &mut self.states[b];
        pts[0] = entry;
        for (i, s) in blk.stmts.iter().enumerate() {
            pts[i + 1] = self.ctx.transfer(s, &pts[i]);
        }
    }

    fn label(&self, b: usize) -> &str {
        &self.prog.block(b).label
    }

    fn ascend(&mut self, e: &WtoElem) {
        match e {
            WtoElem::Vertex(v) => {
                let st = self.entry_state(*v);
                self.run_block(*v, st);
            }
            WtoElem::Component { head, body } => {
                let h = *head;
                for n in 0.. {
                    self.stats.head_visits += 1;
                    let pre = self.entry_state(h);
                    let cur = if n == 0 {
                        pre
                    } else {
                        let old = &self.states[h][0];
                        if self.ctx.leq(&pre, old) {
                            let msg = format!("{}: stable after {n} visits", self.label(h));
                            (self.log)(&msg);
                            break;
                        }
                        if n <= self.opts.widening_delay {
                            self.ctx.join(old, &pre)
                        } else if n < MAX_HEAD_VISITS {
                            self.stats.widenings += 1;
                            self.ctx.widen(old, &pre)
                        } else {
                            let msg = format!("{}: no convergence, using top", self.label(h));
                            (self.log)(&msg);
                            self.ctx.top()
                        }
                    };
                    self.run_block(h, cur);
                    for e in body {
                        self.ascend(e);
                    }
                }
            }
        }
    }

    fn descend(&mut self, e: &WtoElem) {
        match e {
            WtoElem::Vertex(v) => {
                let st = self.entry_state(*v);
                self.run_block(*v, st);
            }
            WtoElem::Component { head, body } => {
                let pre = self.entry_state(*head);
                let cur = self.ctx.narrow(&self.states[*head][0], &pre);
                self.run_block(*head, cur);
                for e in body {
                    self.descend(e);
                }
            }
        }
    }
}

impl fmt::Display for AnalysisConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "domain={} mode={} reduction={} widening-delay={} narrowing-iters={}",
            self.domain, self.mode, self.reduction, self.widening_delay, self.narrowing_iters
        )
    }
}

#[cfg(test)]
mod tests;

//! Interpreter for FM programs under a memory configuration, with live-value
//! profiling, a reference solver that keeps everything, and a shadow
//! comparison that detects configurations which drop values too early.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use thiserror::Error;

use crate::domains::{AbstractDomain, DomainError, NodeProgram};
use crate::fmachine::FmProgram;
use crate::graph::{DiGraph, NodeId};
use crate::memconfig::{default_config, MemoryConfiguration};
use crate::wto::{wto_of_program, NestingForest, Wto, WtoElement};

/// The equation system: graph plus one statement list per node.
#[derive(Clone, Copy, Debug)]
pub struct Problem<'a> {
    pub graph: &'a DiGraph,
    pub programs: &'a [NodeProgram],
    pub var_count: usize,
}

impl Problem<'_> {
    /// Nodes that contain at least one assert.
    pub fn assert_nodes(&self) -> Vec<bool> {
        self.programs.iter().map(NodeProgram::has_assert).collect()
    }

    fn validate(&self) -> Result<(), EngineError> {
        assert_eq!(self.programs.len(), self.graph.node_count());
        for p in self.programs {
            p.validate(self.var_count)?;
        }
        Ok(())
    }
}

/// State flowing into the entry node in addition to its predecessors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EntryState {
    #[default]
    Top,
    Bottom,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Loop iterations allowed per head activation.
    pub iter_cap: u32,
    /// Iterations that join instead of widening.
    pub widen_delay: u32,
    pub entry_state: EntryState,
    pub record_events: bool,
    /// Record every slot read; needed by [`run_shadow`].
    pub record_reads: bool,
    /// Keep final `Pre`/`Post` contents in the result.
    pub retain: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            iter_cap: 10_000,
            widen_delay: 0,
            entry_state: EntryState::Top,
            record_events: false,
            record_reads: false,
            retain: false,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EngineError {
    #[error("head #{head} did not stabilize within {cap} iterations")]
    IterationCap { head: usize, cap: u32 },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    Pre,
    Post,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EventKind {
    AllocPre,
    AllocPost,
    DeallocPre,
    DeallocPost,
    ReadPost,
    Check,
    WidenIter,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::AllocPre => "alloc_pre",
            EventKind::AllocPost => "alloc_post",
            EventKind::DeallocPre => "dealloc_pre",
            EventKind::DeallocPost => "dealloc_post",
            EventKind::ReadPost => "read_post",
            EventKind::Check => "check",
            EventKind::WidenIter => "widen_iter",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Event {
    /// Instruction step: bumped at every `exec`, preamble, loop iteration
    /// and postamble, so runs with the same control flow share step numbers.
    pub step: u64,
    pub kind: EventKind,
    pub node: NodeId,
    /// Node of the instruction performing the action.
    pub site: NodeId,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Profile {
    pub events: Vec<Event>,
    pub live_now: usize,
    pub peak_live: usize,
    pub total_allocs: usize,
    /// Sum of variable counts over live states.
    pub live_width: usize,
    pub peak_width: usize,
    /// Loop iterations per node, summed over activations; zero for
    /// non-heads.
    pub iterations_per_head: Vec<u32>,
}

/// `Ck`: the first check verdict per checked node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckMap(Vec<Option<bool>>);

impl CheckMap {
    pub fn new(node_count: usize) -> Self {
        CheckMap(vec![None; node_count])
    }

    pub fn get(&self, u: NodeId) -> Option<bool> {
        self.0[u.index()]
    }

    /// Writes unless a verdict is already present; returns whether it wrote.
    pub fn record(&mut self, u: NodeId, verdict: bool) -> bool {
        let slot = &mut self.0[u.index()];
        if slot.is_some() {
            return false;
        }
        *slot = Some(verdict);
        true
    }

    pub fn entries(&self) -> impl Iterator<Item = (NodeId, bool)> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(u, c)| c.map(|c| (NodeId::new(u), c)))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ReadRecord {
    pub slot: Slot,
    pub node: NodeId,
    pub site: NodeId,
    pub fingerprint: u64,
    /// The slot was deallocated and has just been re-created as bottom.
    pub realloc: bool,
}

#[derive(Clone, Debug)]
pub struct AnalysisResult<D> {
    pub ck: CheckMap,
    pub profile: Profile,
    pub reads: Vec<ReadRecord>,
    /// Final `(Pre, Post)` contents when requested.
    pub retained: Option<(Vec<Option<D>>, Vec<Option<D>>)>,
}

fn fingerprint<D: Hash>(d: &D) -> u64 {
    let mut h = DefaultHasher::new();
    d.hash(&mut h);
    h.finish()
}

fn invert(n: usize, pairs: impl Iterator<Item = (NodeId, NodeId)>) -> Vec<Vec<NodeId>> {
    let mut out = vec![Vec::new(); n];
    for (key, u) in pairs {
        out[key.index()].push(u);
    }
    out
}

struct Machine<'a, D> {
    prob: Problem<'a>,
    p: &'a FmProgram,
    opts: &'a RunOptions,
    checked: Vec<bool>,
    dpost_at: Vec<Vec<NodeId>>,
    achk_at: Vec<Vec<NodeId>>,
    dpostl_at: Vec<Vec<NodeId>>,
    dprel_at: Vec<Vec<NodeId>>,
    // per node: whether each predecessor lies inside the node's component
    inner_pred: Vec<Vec<bool>>,
    pre: Vec<Option<D>>,
    post: Vec<Option<D>>,
    ck: CheckMap,
    profile: Profile,
    reads: Vec<ReadRecord>,
    step: u64,
    init: D,
}

impl<'a, D: AbstractDomain> Machine<'a, D> {
    fn new(
        prob: Problem<'a>,
        p: &'a FmProgram,
        m: &'a MemoryConfiguration,
        opts: &'a RunOptions,
    ) -> Self {
        let g = prob.graph;
        let n = g.node_count();
        let nf = NestingForest::new(&wto_of_program(p));
        let nodes = || g.nodes();
        let inner_pred = nodes()
            .map(|v| g.preds(v).iter().map(|&q| nf.nested_in(q, v)).collect())
            .collect();
        let init = match opts.entry_state {
            EntryState::Top => D::top(prob.var_count),
            EntryState::Bottom => D::bottom(prob.var_count),
        };
        Machine {
            prob,
            p,
            opts,
            checked: nodes().map(|u| m.is_checked(u)).collect(),
            dpost_at: invert(n, nodes().map(|u| (m.dpost(u), u))),
            achk_at: invert(n, nodes().filter_map(|u| m.achk(u).map(|a| (a, u)))),
            dpostl_at: invert(
                n,
                nodes().flat_map(|u| m.dpostl(u).iter().map(move |&h| (h, u)).collect::<Vec<_>>()),
            ),
            dprel_at: invert(
                n,
                nodes().flat_map(|u| {
                    m.dprel(u)
                        .unwrap_or_default()
                        .iter()
                        .map(move |&h| (h, u))
                        .collect::<Vec<_>>()
                }),
            ),
            inner_pred,
            pre: vec![None; n],
            post: vec![None; n],
            ck: CheckMap::new(n),
            profile: Profile {
                iterations_per_head: vec![0; n],
                ..Profile::default()
            },
            reads: Vec::new(),
            step: 0,
            init,
        }
    }

    fn event(&mut self, kind: EventKind, node: NodeId, site: NodeId) {
        if self.opts.record_events {
            self.profile.events.push(Event {
                step: self.step,
                kind,
                node,
                site,
            });
        }
    }

    fn slots(&mut self, slot: Slot) -> &mut Vec<Option<D>> {
        match slot {
            Slot::Pre => &mut self.pre,
            Slot::Post => &mut self.post,
        }
    }

    fn write(&mut self, slot: Slot, v: NodeId, value: D) {
        let width = value.width();
        let old = self.slots(slot)[v.index()].replace(value);
        match old {
            Some(o) => {
                self.profile.live_width = self.profile.live_width - o.width() + width;
            }
            None => {
                self.profile.live_now += 1;
                self.profile.total_allocs += 1;
                self.profile.live_width += width;
                self.profile.peak_live = self.profile.peak_live.max(self.profile.live_now);
                let kind = match slot {
                    Slot::Pre => EventKind::AllocPre,
                    Slot::Post => EventKind::AllocPost,
                };
                self.event(kind, v, v);
            }
        }
        self.profile.peak_width = self.profile.peak_width.max(self.profile.live_width);
    }

    fn dealloc(&mut self, slot: Slot, u: NodeId, site: NodeId) {
        if let Some(old) = self.slots(slot)[u.index()].take() {
            self.profile.live_now -= 1;
            self.profile.live_width -= old.width();
            let kind = match slot {
                Slot::Pre => EventKind::DeallocPre,
                Slot::Post => EventKind::DeallocPost,
            };
            self.event(kind, u, site);
        }
    }

    /// Reads a slot, re-creating it as bottom if it was deallocated.
    fn read(&mut self, slot: Slot, u: NodeId, site: NodeId) -> &D {
        let realloc = self.slots(slot)[u.index()].is_none();
        if realloc {
            let bottom = D::bottom(self.prob.var_count);
            self.write(slot, u, bottom);
        }
        if slot == Slot::Post {
            self.event(EventKind::ReadPost, u, site);
        }
        if self.opts.record_reads {
            let fp = fingerprint(self.slots(slot)[u.index()].as_ref().unwrap());
            self.reads.push(ReadRecord {
                slot,
                node: u,
                site,
                fingerprint: fp,
                realloc,
            });
        }
        self.slots(slot)[u.index()].as_ref().unwrap()
    }

    /// `⊔ Post[p]` over predecessors, optionally only those outside `v`'s
    /// component, plus the entry state at the entry node.
    fn join_preds(&mut self, v: NodeId, outer_only: bool) -> D {
        let mut acc = if v == self.prob.graph.entry() {
            self.init.clone()
        } else {
            D::bottom(self.prob.var_count)
        };
        let g = self.prob.graph;
        for (i, &q) in g.preds(v).iter().enumerate() {
            if outer_only && self.inner_pred[v.index()][i] {
                continue;
            }
            acc = acc.join(self.read(Slot::Post, q, v));
        }
        acc
    }

    fn run_seq(&mut self, seq: &'a [NodeId]) -> Result<(), EngineError> {
        for &v in seq {
            match self.p.body(v) {
                None => self.exec(v),
                Some(body) => self.repeat(v, body)?,
            }
        }
        Ok(())
    }

    fn exec(&mut self, v: NodeId) {
        self.step += 1;
        let pre = self.join_preds(v, false);
        self.write(Slot::Pre, v, pre);
        let mut own_post = false;
        for i in 0..self.dpost_at[v.index()].len() {
            let u = self.dpost_at[v.index()][i];
            if u == v {
                own_post = true;
            }
            self.dealloc(Slot::Post, u, v);
        }
        let post = self.pre[v.index()]
            .as_ref()
            .unwrap()
            .transfer(&self.prob.programs[v.index()]);
        self.write(Slot::Post, v, post);
        // Dpost[v] = v: the value is dropped after its own instruction
        if own_post {
            self.dealloc(Slot::Post, v, v);
        }
        self.finish(v);
    }

    /// Own-`Pre` release and the checks scheduled at `v`.
    fn finish(&mut self, v: NodeId) {
        if !self.checked[v.index()] {
            self.dealloc(Slot::Pre, v, v);
        }
        for i in 0..self.achk_at[v.index()].len() {
            let u = self.achk_at[v.index()][i];
            if self.ck.get(u).is_none() {
                let programs = self.prob.programs;
                let verdict = self.read(Slot::Pre, u, v).check(&programs[u.index()]);
                self.ck.record(u, verdict);
                self.event(EventKind::Check, u, v);
            }
            self.dealloc(Slot::Pre, u, v);
        }
    }

    fn repeat(&mut self, v: NodeId, body: &'a [NodeId]) -> Result<(), EngineError> {
        self.step += 1;
        let mut tpre = self.join_preds(v, true);
        let mut iteration = 0u32;
        loop {
            iteration += 1;
            if iteration > self.opts.iter_cap {
                return Err(EngineError::IterationCap {
                    head: v.index(),
                    cap: self.opts.iter_cap,
                });
            }
            self.profile.iterations_per_head[v.index()] += 1;
            self.step += 1;
            self.event(EventKind::WidenIter, v, v);
            for i in 0..self.dpostl_at[v.index()].len() {
                let u = self.dpostl_at[v.index()][i];
                self.dealloc(Slot::Post, u, v);
            }
            for i in 0..self.dprel_at[v.index()].len() {
                let u = self.dprel_at[v.index()][i];
                self.dealloc(Slot::Pre, u, v);
            }
            let post = tpre.transfer(&self.prob.programs[v.index()]);
            self.write(Slot::Pre, v, tpre);
            self.write(Slot::Post, v, post);
            self.run_seq(body)?;
            self.step += 1;
            let next = self.join_preds(v, false);
            let delayed = iteration <= self.opts.widen_delay;
            let old = self.read(Slot::Pre, v, v);
            tpre = if delayed {
                old.join(&next)
            } else {
                old.widen(&next)
            };
            if tpre.leq(self.read(Slot::Pre, v, v)) {
                break;
            }
        }
        self.step += 1;
        for i in 0..self.dpost_at[v.index()].len() {
            let u = self.dpost_at[v.index()][i];
            self.dealloc(Slot::Post, u, v);
        }
        self.finish(v);
        Ok(())
    }
}

/// Executes the FM program under configuration `m`.
pub fn run<D: AbstractDomain>(
    prob: Problem<'_>,
    p: &FmProgram,
    m: &MemoryConfiguration,
    opts: &RunOptions,
) -> Result<AnalysisResult<D>, EngineError> {
    prob.validate()?;
    let mut machine = Machine::<D>::new(prob, p, m, opts);
    machine.run_seq(p.top_level())?;
    Ok(AnalysisResult {
        ck: machine.ck,
        profile: machine.profile,
        reads: machine.reads,
        retained: opts.retain.then_some((machine.pre, machine.post)),
    })
}

/// Final values of the recursive strategy with no deallocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReferenceResult<D> {
    pub pre: Vec<D>,
    pub post: Vec<D>,
    pub ck: CheckMap,
}

/// Classic recursive iteration over the WTO: stabilize each component
/// with widening at its head, keep every value, check at the end.
pub fn run_reference<D: AbstractDomain>(
    prob: Problem<'_>,
    w: &Wto,
    checks: &[bool],
    opts: &RunOptions,
) -> Result<ReferenceResult<D>, EngineError> {
    prob.validate()?;
    let g = prob.graph;
    let n = g.node_count();
    let nf = NestingForest::new(w);
    let init = match opts.entry_state {
        EntryState::Top => D::top(prob.var_count),
        EntryState::Bottom => D::bottom(prob.var_count),
    };
    struct Solver<'s, D> {
        prob: Problem<'s>,
        nf: NestingForest,
        init: D,
        pre: Vec<D>,
        post: Vec<D>,
        opts: &'s RunOptions,
    }
    impl<D: AbstractDomain> Solver<'_, D> {
        fn incoming(&self, v: NodeId, skip_inner: bool) -> D {
            let g = self.prob.graph;
            let start = if v == g.entry() {
                self.init.clone()
            } else {
                D::bottom(self.prob.var_count)
            };
            g.preds(v)
                .iter()
                .filter(|&&q| !(skip_inner && self.nf.nested_in(q, v)))
                .fold(start, |acc, &q| acc.join(&self.post[q.index()]))
        }

        fn set(&mut self, v: NodeId, pre: D) {
            self.post[v.index()] = pre.transfer(&self.prob.programs[v.index()]);
            self.pre[v.index()] = pre;
        }

        fn elements(&mut self, items: &[WtoElement]) -> Result<(), EngineError> {
            for item in items {
                match item {
                    WtoElement::Vertex(v) => {
                        let pre = self.incoming(*v, false);
                        self.set(*v, pre);
                    }
                    WtoElement::Component { head, rest } => {
                        let mut x = self.incoming(*head, true);
                        let mut k = 0;
                        loop {
                            k += 1;
                            if k > self.opts.iter_cap {
                                return Err(EngineError::IterationCap {
                                    head: head.index(),
                                    cap: self.opts.iter_cap,
                                });
                            }
                            self.set(*head, x);
                            self.elements(rest)?;
                            let old = &self.pre[head.index()];
                            let new = self.incoming(*head, false);
                            x = if k <= self.opts.widen_delay {
                                old.join(&new)
                            } else {
                                old.widen(&new)
                            };
                            if x.leq(&self.pre[head.index()]) {
                                break;
                            }
                        }
                    }
                }
            }
            Ok(())
        }
    }
    let mut s = Solver {
        prob,
        nf,
        init,
        pre: vec![D::bottom(prob.var_count); n],
        post: vec![D::bottom(prob.var_count); n],
        opts,
    };
    s.elements(w.elements())?;
    let mut ck = CheckMap::new(n);
    for (u, &c) in checks.iter().enumerate() {
        if c {
            ck.record(NodeId::new(u), s.pre[u].check(&prob.programs[u]));
        }
    }
    Ok(ReferenceResult {
        pre: s.pre,
        post: s.post,
        ck,
    })
}

/// A read where the configuration under test saw a re-created bottom but
/// the default configuration saw a different value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Divergence {
    /// Index into the read trace.
    pub index: usize,
    pub slot: Slot,
    pub node: NodeId,
    pub site: NodeId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidityReport {
    pub divergences: Vec<Divergence>,
    pub ck_equal: bool,
    /// Error raised by the run under test only (e.g. a cap hit caused by
    /// lost values).
    pub error: Option<String>,
    pub valid: bool,
}

/// Runs `m` and the default configuration on the same input and compares
/// their read traces and check maps.
pub fn run_shadow<D: AbstractDomain>(
    prob: Problem<'_>,
    p: &FmProgram,
    m: &MemoryConfiguration,
    opts: &RunOptions,
) -> Result<ValidityReport, EngineError> {
    let checks: Vec<bool> = prob.graph.nodes().map(|u| m.is_checked(u)).collect();
    let dflt = default_config(p, &checks);
    let opts = RunOptions {
        record_reads: true,
        ..opts.clone()
    };
    let base = run::<D>(prob, p, &dflt, &opts)?;
    let test = match run::<D>(prob, p, m, &opts) {
        Ok(r) => r,
        Err(EngineError::Domain(e)) => return Err(e.into()),
        Err(e) => {
            return Ok(ValidityReport {
                divergences: Vec::new(),
                ck_equal: false,
                error: Some(e.to_string()),
                valid: false,
            })
        }
    };
    // Reads are matched by (slot, node, site, occurrence) rather than by
    // position: check reads move with Achk, so the raw sequences of two
    // configurations interleave differently even when nothing is lost.
    let key = |r: &ReadRecord, seen: &mut HashMap<(Slot, NodeId, NodeId), usize>| {
        let k = seen.entry((r.slot, r.node, r.site)).or_default();
        *k += 1;
        (r.slot, r.node, r.site, *k)
    };
    let mut seen = HashMap::new();
    let base_reads: HashMap<_, u64> = base
        .reads
        .iter()
        .map(|r| (key(r, &mut seen), r.fingerprint))
        .collect();
    let mut seen = HashMap::new();
    let mut divergences = Vec::new();
    for (index, b) in test.reads.iter().enumerate() {
        let k = key(b, &mut seen);
        if b.realloc && base_reads.get(&k) != Some(&b.fingerprint) {
            divergences.push(Divergence {
                index,
                slot: b.slot,
                node: b.node,
                site: b.site,
            });
        }
    }
    let ck_equal = base.ck == test.ck;
    Ok(ValidityReport {
        valid: divergences.is_empty() && ck_equal,
        divergences,
        ck_equal,
        error: None,
    })
}

//! Fixpoint Machine programs and their construction from a dependency graph.
//!
//! [`generate_fm_program`] builds the program together with the optimal
//! memory configuration in a single bottom-up pass over the depth-first
//! forest: loop heads are discovered in descending preorder, nested
//! components are collapsed into a disjoint-set structure whose
//! representative is always the enclosing head, and cross/forward edges are
//! parked at their lowest common ancestor until that head is reached.

use std::fmt;

use crate::graph::{classify_edges, Buckets, DepthFirstForest, DiGraph, Labels, NodeId};
use crate::memconfig::MemoryConfiguration;

/// `exec v`, `repeat v [body]` and binary sequencing.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Prog {
    Exec(NodeId),
    /// A `None` body is the empty program (a head whose only back edge is a
    /// self-loop).
    Repeat(NodeId, Option<Box<Prog>>),
    Seq(Box<Prog>, Box<Prog>),
}

impl Prog {
    /// Left-associated sequence of `items`; `None` when empty.
    pub fn seq_of<I: IntoIterator<Item = Prog>>(items: I) -> Option<Prog> {
        items.into_iter().fold(None, |acc, p| match acc {
            None => Some(p),
            Some(a) => Some(Prog::Seq(Box::new(a), Box::new(p))),
        })
    }

    /// Flattens nested `Seq` nodes into the instructions they sequence.
    pub fn flatten(&self) -> Vec<&Prog> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(p) = stack.pop() {
            match p {
                Prog::Seq(a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
                other => out.push(other),
            }
        }
        out
    }

    /// Node of an `Exec`/`Repeat` instruction.
    pub fn node(&self) -> Option<NodeId> {
        match self {
            Prog::Exec(v) | Prog::Repeat(v, _) => Some(*v),
            Prog::Seq(..) => None,
        }
    }

    pub fn display<'a>(&'a self, labels: &'a Labels) -> impl fmt::Display + 'a {
        ProgDisplay { prog: self, labels }
    }
}

// Left-associated sequences over large graphs are as deep as the graph
// is long, so dropping detaches children onto a heap stack instead of
// recursing.
impl Drop for Prog {
    fn drop(&mut self) {
        let mut stack = Vec::new();
        detach(self, &mut stack);
        while let Some(mut p) = stack.pop() {
            detach(&mut p, &mut stack);
        }
    }
}

fn detach(p: &mut Prog, stack: &mut Vec<Prog>) {
    let leaf = || Prog::Exec(NodeId::new(0));
    match p {
        Prog::Exec(_) | Prog::Repeat(_, None) => {}
        Prog::Repeat(_, Some(b)) => stack.push(std::mem::replace(&mut **b, leaf())),
        Prog::Seq(a, b) => {
            stack.push(std::mem::replace(&mut **a, leaf()));
            stack.push(std::mem::replace(&mut **b, leaf()));
        }
    }
}

struct ProgDisplay<'a> {
    prog: &'a Prog,
    labels: &'a Labels,
}

impl fmt::Display for ProgDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.prog.flatten().into_iter().enumerate() {
            if i > 0 {
                f.write_str(" ; ")?;
            }
            match p {
                Prog::Exec(v) => write!(f, "exec {}", self.labels.get(*v))?,
                Prog::Repeat(v, body) => {
                    write!(f, "repeat {} [", self.labels.get(*v))?;
                    if let Some(b) = body {
                        write!(f, "{}", b.display(self.labels))?;
                    }
                    f.write_str("]")?;
                }
                Prog::Seq(..) => unreachable!("flatten removes Seq"),
            }
        }
        Ok(())
    }
}

/// A Fixpoint Machine program over nodes `0..node_count`.
///
/// Besides the AST, the program keeps a flat view used by interpreters:
/// the top-level instruction sequence and, for each head, the sequence of
/// instructions in its loop body.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FmProgram {
    ast: Prog,
    top: Vec<NodeId>,
    bodies: Vec<Option<Vec<NodeId>>>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ProgramError {
    #[error("node {0} has more than one instruction")]
    Duplicate(NodeId),
    #[error("node {0} has no instruction")]
    Missing(NodeId),
    #[error("node {0} is out of range")]
    OutOfRange(NodeId),
}

impl FmProgram {
    pub fn new(ast: Prog, node_count: usize) -> Result<Self, ProgramError> {
        let mut bodies: Vec<Option<Option<Vec<NodeId>>>> = vec![None; node_count];
        // Repeats can nest as deep as the graph is long, so the walk keeps
        // its own stack of open bodies: (head, remaining items, sequence).
        let mut frames: Vec<(Option<NodeId>, std::vec::IntoIter<&Prog>, Vec<NodeId>)> =
            vec![(None, ast.flatten().into_iter(), Vec::new())];
        let top = loop {
            let frame = frames.last_mut().expect("root frame");
            let Some(inst) = frame.1.next() else {
                let (head, _, seq) = frames.pop().expect("root frame");
                match head {
                    None => break seq,
                    Some(h) => {
                        bodies[h.index()] = Some(Some(seq));
                        continue;
                    }
                }
            };
            let v = inst.node().expect("flatten removes Seq");
            let slot = bodies
                .get_mut(v.index())
                .ok_or(ProgramError::OutOfRange(v))?;
            if slot.is_some() {
                return Err(ProgramError::Duplicate(v));
            }
            frame.2.push(v);
            match inst {
                Prog::Repeat(_, Some(b)) => {
                    // placeholder until the body is complete
                    *slot = Some(Some(Vec::new()));
                    frames.push((Some(v), b.flatten().into_iter(), Vec::new()));
                }
                Prog::Repeat(_, None) => *slot = Some(Some(Vec::new())),
                _ => *slot = Some(None),
            }
        };
        let bodies = bodies
            .into_iter()
            .enumerate()
            .map(|(i, b)| b.ok_or(ProgramError::Missing(NodeId::new(i))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(FmProgram { ast, top, bodies })
    }

    pub fn ast(&self) -> &Prog {
        &self.ast
    }

    pub fn node_count(&self) -> usize {
        self.bodies.len()
    }

    /// Top-level instruction nodes in execution order.
    pub fn top_level(&self) -> &[NodeId] {
        &self.top
    }

    /// Loop body of `Inst[v]`, or `None` when `Inst[v]` is `exec v`.
    pub fn body(&self, v: NodeId) -> Option<&[NodeId]> {
        self.bodies[v.index()].as_deref()
    }

    pub fn is_head(&self, v: NodeId) -> bool {
        self.bodies[v.index()].is_some()
    }

    /// `Inst[v]`: the unique `exec`/`repeat` instruction for `v`.
    pub fn inst(&self, v: NodeId) -> Option<&Prog> {
        let mut stack = vec![&self.ast];
        while let Some(p) = stack.pop() {
            match p {
                Prog::Seq(a, b) => {
                    stack.push(a);
                    stack.push(b);
                }
                Prog::Exec(x) if *x == v => return Some(p),
                Prog::Repeat(x, _) if *x == v => return Some(p),
                Prog::Repeat(_, Some(b)) => stack.push(b),
                _ => {}
            }
        }
        None
    }

    /// Node of the last instruction (the default configuration's `z`).
    pub fn last_node(&self) -> NodeId {
        *self.top.last().expect("programs are never empty")
    }

    /// Nodes in postamble completion order: an `exec` completes when it
    /// runs, a `repeat` after its whole body.
    pub fn completion_order(&self) -> Vec<NodeId> {
        fn go(p: &FmProgram, seq: &[NodeId], out: &mut Vec<NodeId>) {
            for &v in seq {
                if let Some(body) = p.body(v) {
                    go(p, body, out);
                }
                out.push(v);
            }
        }
        let mut out = Vec::with_capacity(self.node_count());
        go(self, &self.top, &mut out);
        out
    }

    pub fn display<'a>(&'a self, labels: &'a Labels) -> impl fmt::Display + 'a {
        self.ast.display(labels)
    }
}

impl fmt::Display for FmProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels = Labels::identity(self.node_count());
        let r = write!(f, "{}", self.ast.display(&labels));
        r
    }
}

/// Union-find whose merge makes a caller-chosen node the representative.
///
/// Union by rank is not available because the representative is dictated
/// by the caller; path compression (halving) keeps `rep` near-constant.
#[derive(Clone, Debug)]
pub struct DisjointSets {
    parent: Vec<u32>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n as u32).collect(),
        }
    }

    pub fn rep(&mut self, v: NodeId) -> NodeId {
        let mut x = v.index();
        while self.parent[x] as usize != x {
            let gp = self.parent[self.parent[x] as usize];
            self.parent[x] = gp;
            x = gp as usize;
        }
        NodeId::new(x)
    }

    /// Merges the sets of `v` and `h`; `h` becomes the representative.
    pub fn merge(&mut self, v: NodeId, h: NodeId) {
        let rv = self.rep(v);
        let rh = self.rep(h);
        if rv != rh {
            self.parent[rv.index()] = rh.index() as u32;
            if rh != h {
                // make h itself the root of the union
                self.parent[h.index()] = h.index() as u32;
                self.parent[rh.index()] = h.index() as u32;
            }
        }
    }
}

/// Values observed during one head iteration of [`generate_fm_program`],
/// recorded when tracing is enabled.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeadStep {
    pub head: NodeId,
    /// `N_h` in the order the body was assembled (descending postorder).
    pub body: Vec<NodeId>,
    /// `B_h`: representatives of back-edge sources.
    pub back_reps: Vec<NodeId>,
    pub instruction: Prog,
    /// `(u, v)` for each `dpost[u] := v` while assembling the body.
    pub body_dpost: Vec<(NodeId, NodeId)>,
    /// `(u, rep(u))` for each `T[u] := rep(u)` while assembling the body.
    pub body_t: Vec<(NodeId, NodeId)>,
    /// Sources `u` of back edges into the head (`dpost[u] := T[u] := h`).
    pub back_sources: Vec<NodeId>,
    /// Member lists of the sets merged into the head's set, head's first.
    pub merged_sets: Vec<Vec<NodeId>>,
}

/// Per-head record of a traced construction; heads with no back edge
/// (plain `exec` instructions) are not recorded.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GenerationTrace {
    pub steps: Vec<HeadStep>,
    /// Cross/forward edges as restored: `(u, v, rep(v))` at head `lca(u, v)`.
    pub restored: Vec<(NodeId, NodeId, NodeId)>,
}

impl GenerationTrace {
    pub fn step(&self, head: NodeId) -> Option<&HeadStep> {
        self.steps.iter().find(|s| s.head == head)
    }
}

/// Builds the FM program for `g` and its optimal memory configuration.
///
/// `checks[v]` marks the nodes carrying assertion checks.
pub fn generate_fm_program(g: &DiGraph, checks: &[bool]) -> (FmProgram, MemoryConfiguration) {
    let (p, m, _) = Generator::new(g, checks, false).run();
    (p, m)
}

/// As [`generate_fm_program`], also returning the per-head trace.
pub fn generate_fm_program_traced(
    g: &DiGraph,
    checks: &[bool],
) -> (FmProgram, MemoryConfiguration, GenerationTrace) {
    let (p, m, t) = Generator::new(g, checks, true).run();
    (p, m, t.expect("tracing enabled"))
}

/// Singly linked predecessor lists in flat arrays; lists only grow.
struct PredLists {
    first: Vec<u32>,
    next: Vec<u32>,
    src: Vec<NodeId>,
}

const NIL: u32 = u32::MAX;

impl PredLists {
    fn new(n: usize, extra: usize) -> Self {
        PredLists {
            first: vec![NIL; n],
            next: Vec::with_capacity(n + extra),
            src: Vec::with_capacity(n + extra),
        }
    }

    fn push(&mut self, v: NodeId, u: NodeId) {
        self.next.push(self.first[v.index()]);
        self.src.push(u);
        self.first[v.index()] = (self.src.len() - 1) as u32;
    }

    fn first(&self, v: NodeId) -> u32 {
        self.first[v.index()]
    }

    /// Source at entry `e` and the entry after it.
    fn at(&self, e: u32) -> Option<(NodeId, u32)> {
        (e != NIL).then(|| (self.src[e as usize], self.next[e as usize]))
    }
}

struct Generator<'g> {
    g: &'g DiGraph,
    checks: &'g [bool],
    forest: DepthFirstForest,
    /// Back-edge sources per target head.
    back_preds: Buckets,
    /// Predecessor lists of the reduced edge relation.
    preds: PredLists,
    /// Cross/forward edges parked at their lca.
    parked: Buckets<(NodeId, NodeId)>,
    sets: DisjointSets,
    inst: Vec<Option<Prog>>,
    dpost: Vec<NodeId>,
    /// `T[u]`, the outer end of `Dpostl[u]`; `None` for the empty set.
    t: Vec<Option<NodeId>>,
    /// Parent in the transitive reduction of the nesting relation.
    nest_parent: Vec<Option<NodeId>>,
    /// Worklist / visited stamp per node, valid when equal to the current head + 1.
    stamp: Vec<u32>,
    trace: Option<GenerationTrace>,
}

impl<'g> Generator<'g> {
    fn new(g: &'g DiGraph, checks: &'g [bool], traced: bool) -> Self {
        assert_eq!(
            checks.len(),
            g.node_count(),
            "check mask must cover every node"
        );
        let n = g.node_count();
        let forest = DepthFirstForest::build(g);
        let part = classify_edges(&forest, g);
        let back: Vec<_> = part.back.iter().map(|&(u, h)| (h, u)).collect();
        let back_preds = Buckets::new(n, &back);
        // reduced relation starts as tree edges only
        let mut preds = PredLists::new(n, part.cross_forward.len());
        for v in g.nodes() {
            if let Some(p) = forest.parent(v) {
                preds.push(v, p);
            }
        }
        let lcas = forest.lca_offline(&part.cross_forward);
        let at_lca: Vec<_> = lcas
            .into_iter()
            .zip(part.cross_forward.iter().copied())
            .collect();
        let parked = Buckets::new(n, &at_lca);
        Generator {
            g,
            checks,
            forest,
            back_preds,
            preds,
            parked,
            sets: DisjointSets::new(n),
            inst: vec![None; n],
            dpost: (0..n).map(NodeId::new).collect(),
            t: (0..n).map(|v| Some(NodeId::new(v))).collect(),
            nest_parent: vec![None; n],
            stamp: vec![0; n],
            trace: traced.then(GenerationTrace::default),
        }
    }

    fn run(mut self) -> (FmProgram, MemoryConfiguration, Option<GenerationTrace>) {
        let order: Vec<NodeId> = self.forest.descending_dfn().collect();
        for h in order {
            self.restore_cross_fwd(h);
            self.generate_instruction(h);
        }
        let (ast, config) = self.connect_instructions();
        let program = FmProgram::new(ast, self.g.node_count()).expect("one instruction per node");
        (program, config, self.trace)
    }

    fn restore_cross_fwd(&mut self, h: NodeId) {
        for i in 0..self.parked.get(h).len() {
            let (u, v) = self.parked.get(h)[i];
            let r = self.sets.rep(v);
            self.preds.push(r, u);
            if let Some(t) = &mut self.trace {
                t.restored.push((u, v, r));
            }
        }
    }

    /// Returns `(N_h, B_h)`.
    fn find_nested_sccs(&mut self, h: NodeId) -> (Vec<NodeId>, Vec<NodeId>) {
        let mark = h.index() as u32 + 1;
        let mut back_reps = Vec::new();
        let mut work = Vec::new();
        for i in 0..self.back_preds.get(h).len() {
            let p = self.back_preds.get(h)[i];
            let r = self.sets.rep(p);
            if self.stamp[r.index()] != mark {
                self.stamp[r.index()] = mark;
                back_reps.push(r);
                if r != h {
                    work.push(r);
                }
            }
        }
        self.stamp[h.index()] = mark;
        let mut nested = Vec::new();
        while let Some(v) = work.pop() {
            nested.push(v);
            let mut e = self.preds.first(v);
            while let Some((u, next)) = self.preds.at(e) {
                e = next;
                let r = self.sets.rep(u);
                if self.stamp[r.index()] != mark {
                    self.stamp[r.index()] = mark;
                    work.push(r);
                }
            }
        }
        (nested, back_reps)
    }

    fn generate_instruction(&mut self, h: NodeId) {
        let (mut nested, back_reps) = self.find_nested_sccs(h);
        if back_reps.is_empty() {
            self.inst[h.index()] = Some(Prog::Exec(h));
            return;
        }
        let forest = &self.forest;
        nested.sort_unstable_by_key(|&v| std::cmp::Reverse(forest.post_dfn(v)));

        let mut step = self.trace.as_ref().map(|_| HeadStep {
            head: h,
            body: nested.clone(),
            back_reps: back_reps.clone(),
            instruction: Prog::Exec(h),
            body_dpost: Vec::new(),
            body_t: Vec::new(),
            back_sources: Vec::new(),
            merged_sets: Vec::new(),
        });

        let mut body = Vec::with_capacity(nested.len());
        for &v in &nested {
            body.push(
                self.inst[v.index()]
                    .take()
                    .expect("nested instruction built"),
            );
            let mut e = self.preds.first(v);
            while let Some((u, next)) = self.preds.at(e) {
                e = next;
                let r = self.sets.rep(u);
                self.dpost[u.index()] = v;
                // A head whose only readers sit inside its own loop frees
                // nothing on loop entry: with d strictly inside, ↑h ∖ ↑d is
                // empty and h ⋠N d.
                self.t[u.index()] = (u != h).then_some(r);
                if let Some(s) = &mut step {
                    s.body_dpost.push((u, v));
                    s.body_t.push((u, r));
                }
            }
        }
        let inst = Prog::Repeat(h, Prog::seq_of(body).map(Box::new));
        for &u in self.back_preds.get(h) {
            self.dpost[u.index()] = h;
            self.t[u.index()] = Some(h);
        }
        if let Some(s) = &mut step {
            s.instruction = inst.clone();
            s.back_sources = self.back_preds.get(h).to_vec();
            s.merged_sets.push(self.members(h));
            for &v in &nested {
                s.merged_sets.push(self.members(v));
            }
        }
        self.inst[h.index()] = Some(inst);
        for &v in &nested {
            self.sets.merge(v, h);
            self.nest_parent[v.index()] = Some(h);
        }
        if let (Some(t), Some(s)) = (&mut self.trace, step) {
            t.steps.push(s);
        }
    }

    /// Members of the set represented by `r` (tracing only).
    fn members(&mut self, r: NodeId) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = (0..self.g.node_count())
            .map(NodeId::new)
            .filter(|&x| self.sets.rep(x) == r)
            .collect();
        out.sort_unstable();
        out
    }

    fn connect_instructions(&mut self) -> (Prog, MemoryConfiguration) {
        let n = self.g.node_count();
        let mut order: Vec<NodeId> = self.g.nodes().collect();
        let forest = &self.forest;
        order.sort_unstable_by_key(|&v| std::cmp::Reverse(forest.post_dfn(v)));

        let mut top = Vec::new();
        let mut achk = vec![None; n];
        let mut dprel = vec![None; n];
        for v in order {
            let r = self.sets.rep(v);
            if r == v {
                top.push(self.inst[v.index()].take().expect("root instruction built"));
                let mut e = self.preds.first(v);
                while let Some((u, next)) = self.preds.at(e) {
                    e = next;
                    self.dpost[u.index()] = v;
                    self.t[u.index()] = Some(self.sets.rep(u));
                }
            }
            if self.checks[v.index()] {
                achk[v.index()] = Some(r);
                dprel[v.index()] = Some(r);
            }
        }
        // Dpostl[v] = [v, T[v]] and Dprel[v] = [v, rep(v)] \ {v} in the
        // nest relation; the configuration keeps them as paths
        let ast = Prog::seq_of(top).expect("graph is non-empty");
        let config = MemoryConfiguration::from_chains(
            self.dpost.clone(),
            achk,
            self.nest_parent.clone(),
            self.t.clone(),
            dprel,
        );
        (ast, config)
    }
}

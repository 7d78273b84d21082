//! Seeded generators for graphs, node programs, orderings and the nested
//! loop family used for memory measurements.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cfg::CfgDocument;
use crate::domains::{BinOp, CmpOp, Guard, NodeProgram, Operand, Rhs, Stmt, VarId};
use crate::graph::{DiGraph, NodeId};
use crate::wto::{Wto, WtoElement};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random spanning tree from the entry plus every other ordered pair
/// (self-loops included) with probability `edge_prob`. Node ids are
/// shuffled so the tree does not follow id order.
pub fn random_graph<R: Rng>(rng: &mut R, n: usize, edge_prob: f64) -> DiGraph {
    assert!(n >= 1);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut edges = BTreeSet::new();
    for i in 1..n {
        let parent = rng.gen_range(0..i);
        edges.insert((perm[parent], perm[i]));
    }
    for u in 0..n {
        for v in 0..n {
            if rng.gen_bool(edge_prob) {
                edges.insert((u, v));
            }
        }
    }
    DiGraph::new(n, perm[0], edges).expect("spanning tree reaches every node")
}

/// Sparse graph with exactly `edges` edges (at least `n - 1`).
pub fn random_sparse_graph<R: Rng>(rng: &mut R, n: usize, edges: usize) -> DiGraph {
    assert!(n >= 1 && edges >= n - 1 && edges <= n * n);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut set = HashSet::with_capacity(edges);
    let mut list = Vec::with_capacity(edges);
    for i in 1..n {
        let e = (perm[rng.gen_range(0..i)], perm[i]);
        set.insert(e);
        list.push(e);
    }
    while list.len() < edges {
        let e = (rng.gen_range(0..n), rng.gen_range(0..n));
        if set.insert(e) {
            list.push(e);
        }
    }
    DiGraph::new(n, perm[0], list).expect("spanning tree reaches every node")
}

#[derive(Clone, Debug)]
pub struct ProgramGen {
    pub var_count: usize,
    /// Constants are drawn from `-const_bound..=const_bound`.
    pub const_bound: i64,
    pub max_stmts: usize,
    pub assert_prob: f64,
    pub allow_mul: bool,
}

impl Default for ProgramGen {
    fn default() -> Self {
        ProgramGen {
            var_count: 3,
            const_bound: 8,
            max_stmts: 3,
            assert_prob: 0.25,
            allow_mul: false,
        }
    }
}

fn cmp<R: Rng>(rng: &mut R) -> CmpOp {
    *[
        CmpOp::Lt,
        CmpOp::Le,
        CmpOp::Eq,
        CmpOp::Ne,
        CmpOp::Ge,
        CmpOp::Gt,
    ]
    .choose(rng)
    .unwrap()
}

impl ProgramGen {
    fn var<R: Rng>(&self, rng: &mut R) -> VarId {
        VarId::new(rng.gen_range(0..self.var_count))
    }

    fn constant<R: Rng>(&self, rng: &mut R) -> i64 {
        rng.gen_range(-self.const_bound..=self.const_bound)
    }

    fn guard<R: Rng>(&self, rng: &mut R) -> Guard {
        Guard::new(self.var(rng), cmp(rng), self.constant(rng))
    }

    pub fn stmt<R: Rng>(&self, rng: &mut R) -> Stmt {
        let ops: &[BinOp] = if self.allow_mul {
            &[BinOp::Add, BinOp::Sub, BinOp::Mul]
        } else {
            &[BinOp::Add, BinOp::Sub]
        };
        match rng.gen_range(0..10) {
            0..=1 => Stmt::Assign(self.var(rng), Rhs::Const(self.constant(rng))),
            2 => Stmt::Assign(self.var(rng), Rhs::Var(self.var(rng))),
            3..=4 => {
                let op = *ops.choose(rng).unwrap();
                let c = rng.gen_range(-2..=2);
                Stmt::Assign(
                    self.var(rng),
                    Rhs::Bin(self.var(rng), op, Operand::Const(c)),
                )
            }
            5 => {
                let op = *ops.choose(rng).unwrap();
                Stmt::Assign(
                    self.var(rng),
                    Rhs::Bin(self.var(rng), op, Operand::Var(self.var(rng))),
                )
            }
            _ => Stmt::Assume(self.guard(rng)),
        }
    }

    pub fn program<R: Rng>(&self, rng: &mut R) -> NodeProgram {
        if self.var_count == 0 {
            return NodeProgram::skip();
        }
        let k = rng.gen_range(0..=self.max_stmts);
        let mut stmts: Vec<Stmt> = (0..k).map(|_| self.stmt(rng)).collect();
        if rng.gen_bool(self.assert_prob) {
            let at = rng.gen_range(0..=stmts.len());
            stmts.insert(at, Stmt::Assert(self.guard(rng)));
        }
        NodeProgram::new(stmts)
    }

    pub fn programs<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<NodeProgram> {
        (0..n).map(|_| self.program(rng)).collect()
    }

    pub fn var_names(&self) -> Vec<String> {
        (0..self.var_count)
            .map(|i| {
                ["x", "y", "z", "w"]
                    .get(i)
                    .map_or(format!("v{i}"), |s| s.to_string())
            })
            .collect()
    }
}

/// A random CFG document; labels are `0..n`.
pub fn random_document<R: Rng>(
    rng: &mut R,
    name: &str,
    n: usize,
    edge_prob: f64,
    pg: &ProgramGen,
) -> CfgDocument {
    let g = random_graph(rng, n, edge_prob);
    let programs = pg.programs(rng, n);
    CfgDocument {
        name: name.to_string(),
        entry: g.entry().index() as u64,
        vars: pg.var_names(),
        nodes: programs
            .into_iter()
            .enumerate()
            .map(|(i, p)| (i as u64, p))
            .collect::<BTreeMap<_, _>>(),
        edges: g
            .edges()
            .map(|(u, v)| (u.index() as u64, v.index() as u64))
            .collect(),
        forced_checks: BTreeSet::new(),
    }
}

/// A random hierarchical ordering of `0..n` (no source graph).
pub fn random_hto<R: Rng>(rng: &mut R, n: usize) -> Wto {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    // frames of open components: (head, members so far)
    let mut stack: Vec<(NodeId, Vec<WtoElement>)> = Vec::new();
    let mut top: Vec<WtoElement> = Vec::new();
    for &i in &perm {
        let v = NodeId::new(i);
        if rng.gen_bool(0.3) {
            stack.push((v, Vec::new()));
        } else {
            match stack.last_mut() {
                Some((_, items)) => items.push(WtoElement::Vertex(v)),
                None => top.push(WtoElement::Vertex(v)),
            }
        }
        while !stack.is_empty() && rng.gen_bool(0.3) {
            close(&mut stack, &mut top);
        }
    }
    while !stack.is_empty() {
        close(&mut stack, &mut top);
    }
    Wto::new(top, n).expect("every node placed once")
}

fn close(stack: &mut Vec<(NodeId, Vec<WtoElement>)>, top: &mut Vec<WtoElement>) {
    let (head, rest) = stack.pop().unwrap();
    let c = WtoElement::Component { head, rest };
    match stack.last_mut() {
        Some((_, items)) => items.push(c),
        None => top.push(c),
    }
}

/// `d` nested bottom-tested counting loops: loop `k` is a head followed by
/// a chain of `b` body nodes, the next loop spliced in after the middle
/// node, and both the back edge and the exit leave from the last body
/// node. Loop `k` counts `i_k` up to 10; the exit asserts the outer
/// counter's bound.
///
/// Node count is `2 + d * (b + 1)`.
pub fn nested_loops(d: usize, b: usize) -> CfgDocument {
    assert!((1..=4).contains(&d) && b >= 2);
    struct B {
        progs: Vec<String>,
        edges: Vec<(u64, u64)>,
    }
    impl B {
        fn add(&mut self, body: String) -> u64 {
            self.progs.push(body);
            (self.progs.len() - 1) as u64
        }
    }
    // returns the node control leaves the loop from
    fn level(bl: &mut B, k: usize, d: usize, b: usize, pred: u64) -> u64 {
        let h = bl.add(String::new());
        bl.edges.push((pred, h));
        let mid = b / 2;
        let mut prev = h;
        for j in 0..b {
            let body = if j == 0 {
                format!("assume(i{k} <= 9)")
            } else if j == b - 1 {
                format!("i{k} = i{k} + 1")
            } else if j == mid - 1 && k + 1 < d {
                format!("i{} = 0", k + 1)
            } else {
                String::new()
            };
            let c = bl.add(body);
            bl.edges.push((prev, c));
            prev = c;
            if j == mid - 1 && k + 1 < d {
                let inner = level(bl, k + 1, d, b, c);
                prev = inner;
            }
        }
        bl.edges.push((prev, h));
        prev
    }
    let mut bl = B {
        progs: Vec::new(),
        edges: Vec::new(),
    };
    let entry = bl.add("i0 = 0".into());
    let last = level(&mut bl, 0, d, b, entry);
    let exit = bl.add("assume(i0 >= 10); assert(i0 >= 10)".into());
    bl.edges.push((last, exit));
    let vars: Vec<String> = (0..d).map(|k| format!("i{k}")).collect();
    let text = {
        let mut t = format!(
            "graph nest_d{d}_b{b}\nentry {entry}\nvars {}\n",
            vars.join(" ")
        );
        for (i, p) in bl.progs.iter().enumerate() {
            if p.is_empty() {
                t.push_str(&format!("node {i} {{}}\n"));
            } else {
                t.push_str(&format!("node {i} {{ {p} }}\n"));
            }
        }
        for (u, v) in &bl.edges {
            t.push_str(&format!("edge {u} -> {v}\n"));
        }
        t
    };
    crate::cfg::parse_cfg(&text).expect("generated family parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graphs_are_deterministic_and_reachable() {
        let a = random_graph(&mut rng(7), 20, 0.1);
        let b = random_graph(&mut rng(7), 20, 0.1);
        assert_eq!(a, b);
        let s = random_sparse_graph(&mut rng(3), 100, 250);
        assert_eq!(s.edge_count(), 250);
        assert_eq!(random_graph(&mut rng(1), 1, 0.0).edge_count(), 0);
    }

    #[test]
    fn documents_roundtrip() {
        for seed in 0..50 {
            let doc = random_document(&mut rng(seed), "r", 12, 0.15, &ProgramGen::default());
            let text = doc.serialize();
            assert_eq!(crate::cfg::parse_cfg(&text).unwrap(), doc, "{text}");
        }
    }

    #[test]
    fn htos_are_permutations() {
        for seed in 0..50 {
            let w = random_hto(&mut rng(seed), 15);
            assert_eq!(w.node_count(), 15);
        }
    }

    #[test]
    fn nested_family_sizes() {
        for d in 1..=4 {
            for b in [4, 8] {
                let doc = nested_loops(d, b);
                assert_eq!(doc.nodes.len(), 2 + d * (b + 1));
                let cfg = doc.build().unwrap();
                let (p, _) = crate::fmachine::generate_fm_program(&cfg.graph, &cfg.checks);
                let w = crate::wto::wto_of_program(&p);
                let heads = cfg.graph.nodes().filter(|&v| w.is_head(v)).count();
                assert_eq!(heads, d);
            }
        }
    }
}

#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};
use std::path::PathBuf;

use mofix::domains::{Rhs, Stmt};
use mofix::gen::{self, ProgramGen};
use mofix::{parse_cfg, Cfg, NodeId, NodeProgram, Problem};
use rand::Rng;

pub fn fixture(name: &str) -> Cfg {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name]
        .iter()
        .collect();
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_cfg(&text).unwrap().build().unwrap()
}

/// Random graph plus random node programs; sizes and variable count are
/// drawn from the seed too.
pub fn random_cfg(seed: u64, max_nodes: usize, edge_probs: &[f64], max_vars: usize) -> Cfg {
    let mut rng = gen::rng(seed);
    let n = rng.gen_range(1..=max_nodes);
    let p = edge_probs[rng.gen_range(0..edge_probs.len())];
    let pg = ProgramGen {
        var_count: rng.gen_range(1..=max_vars),
        ..ProgramGen::default()
    };
    let doc = gen::random_document(&mut rng, &format!("r{seed}"), n, p, &pg);
    doc.build().unwrap()
}

/// What concrete execution reached: stores on entry to and exit from each
/// node, and nodes where some assert failed.
pub struct Reached {
    pub pre: Vec<HashSet<Vec<i64>>>,
    pub post: Vec<HashSet<Vec<i64>>>,
    pub assert_failed: Vec<bool>,
    /// The state cap stopped the search early.
    pub truncated: bool,
}

/// Runs one node program on a concrete store. `None` when an assume
/// blocks or arithmetic leaves `i64`.
pub fn exec_concrete(p: &NodeProgram, store: &[i64], failed: &mut bool) -> Option<Vec<i64>> {
    let mut s = store.to_vec();
    for st in p.stmts() {
        match st {
            Stmt::Assign(x, rhs) => {
                s[x.index()] = match *rhs {
                    Rhs::Const(c) => c,
                    Rhs::Var(y) => s[y.index()],
                    Rhs::Bin(y, op, o) => {
                        let b = match o {
                            mofix::domains::Operand::Var(z) => s[z.index()],
                            mofix::domains::Operand::Const(c) => c,
                        };
                        op.eval(s[y.index()], b)?
                    }
                };
            }
            Stmt::Assume(g) => {
                if !g.holds(s[g.var.index()]) {
                    return None;
                }
            }
            Stmt::Assert(g) => {
                if !g.holds(s[g.var.index()]) {
                    *failed = true;
                }
            }
        }
    }
    Some(s)
}

/// Breadth-first enumeration of `(node, store)` pairs from every initial
/// store at the entry, stopping after `cap` distinct pairs.
pub fn reachable(prob: &Problem<'_>, init: &[Vec<i64>], cap: usize) -> Reached {
    let n = prob.graph.node_count();
    let mut r = Reached {
        pre: vec![HashSet::new(); n],
        post: vec![HashSet::new(); n],
        assert_failed: vec![false; n],
        truncated: false,
    };
    let mut seen = 0usize;
    let mut queue = VecDeque::new();
    let entry = prob.graph.entry();
    for s in init {
        if r.pre[entry.index()].insert(s.clone()) {
            seen += 1;
            queue.push_back((entry, s.clone()));
        }
    }
    while let Some((v, s)) = queue.pop_front() {
        let mut failed = false;
        let out = exec_concrete(&prob.programs[v.index()], &s, &mut failed);
        r.assert_failed[v.index()] |= failed;
        let Some(out) = out else { continue };
        r.post[v.index()].insert(out.clone());
        for &w in prob.graph.succs(v) {
            if r.pre[w.index()].contains(&out) {
                continue;
            }
            if seen >= cap {
                r.truncated = true;
                return r;
            }
            r.pre[w.index()].insert(out.clone());
            seen += 1;
            queue.push_back((w, out.clone()));
        }
    }
    r
}

/// Initial stores over `[-8, 8]^k`: the full grid up to three variables,
/// every other value for four.
pub fn initial_stores(k: usize) -> Vec<Vec<i64>> {
    let step = if k <= 3 { 1 } else { 2 };
    let values: Vec<i64> = (-8..=8).step_by(step).collect();
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|s| {
                values.iter().map(move |&x| {
                    let mut t = s.clone();
                    t.push(x);
                    t
                })
            })
            .collect();
    }
    out
}

pub fn label_of(cfg: &Cfg, v: NodeId) -> u64 {
    cfg.labels.get(v)
}

pub fn node(cfg: &Cfg, label: u64) -> NodeId {
    cfg.labels.find(label).unwrap()
}

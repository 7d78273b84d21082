//! Workloads shared by the benchmarks.

use mofix::gen;
use mofix::{Cfg, DiGraph};

/// Random sparse graph with two edges per node on average.
pub fn sparse_graph(edges: usize) -> DiGraph {
    gen::random_sparse_graph(&mut gen::rng(edges as u64), edges / 2, edges)
}

/// The nested-loop family member with `d` loops of `b` body nodes.
pub fn nested(d: usize, b: usize) -> Cfg {
    gen::nested_loops(d, b)
        .build()
        .expect("family members are valid")
}

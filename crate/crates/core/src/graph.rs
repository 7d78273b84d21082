//! Dependency graphs, depth-first forests and lowest common ancestors.
//!
//! Successors are always visited in ascending [`NodeId`] order, so every
//! structure derived from a graph (forest, WTO, FM program) is deterministic.

use std::fmt;

use thiserror::Error;

/// Dense node index in `0..node_count`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(u32);

impl NodeId {
    pub fn new(index: usize) -> Self {
        NodeId(u32::try_from(index).expect("node index exceeds u32"))
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// External names for dense node ids, used when rendering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Labels(Vec<u64>);

impl Labels {
    pub fn identity(n: usize) -> Self {
        Labels((0..n as u64).collect())
    }

    pub fn new(labels: Vec<u64>) -> Self {
        Labels(labels)
    }

    pub fn get(&self, v: NodeId) -> u64 {
        self.0[v.index()]
    }

    /// Reverse lookup; linear scan.
    pub fn find(&self, label: u64) -> Option<NodeId> {
        self.0.iter().position(|&l| l == label).map(NodeId::new)
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph has no nodes")]
    Empty,
    #[error("entry node {0} is out of range")]
    EntryOutOfRange(usize),
    #[error("edge ({0}, {1}) references a node out of range")]
    EdgeOutOfRange(usize, usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("node {0} is not reachable from the entry")]
    Unreachable(NodeId),
    #[error("nodes {0} and {1} lie in different depth-first trees")]
    DistinctRoots(NodeId, NodeId),
}

/// A directed graph whose nodes are all reachable from `entry`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiGraph {
    entry: NodeId,
    succs: Buckets,
    preds: Buckets,
}

/// Per-node lists packed into one array (compressed sparse rows).
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Buckets<T = NodeId> {
    start: Vec<u32>,
    items: Vec<T>,
}

impl<T: Copy> Buckets<T> {
    /// Groups `(key, item)` pairs by key, keeping their relative order.
    pub(crate) fn new(n: usize, pairs: &[(NodeId, T)]) -> Self {
        let mut start = vec![0u32; n + 1];
        for &(k, _) in pairs {
            start[k.index() + 1] += 1;
        }
        for i in 0..n {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        // placeholder fill, every slot is overwritten below
        let mut items = pairs.first().map_or(Vec::new(), |p| vec![p.1; pairs.len()]);
        for &(k, x) in pairs {
            items[fill[k.index()] as usize] = x;
            fill[k.index()] += 1;
        }
        Buckets { start, items }
    }

    #[inline]
    pub(crate) fn get(&self, k: NodeId) -> &[T] {
        &self.items[self.start[k.index()] as usize..self.start[k.index() + 1] as usize]
    }

    fn get_mut(&mut self, k: NodeId) -> &mut [T] {
        &mut self.items[self.start[k.index()] as usize..self.start[k.index() + 1] as usize]
    }
}

impl DiGraph {
    pub fn new<I>(node_count: usize, entry: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if node_count == 0 {
            return Err(GraphError::Empty);
        }
        if entry >= node_count {
            return Err(GraphError::EntryOutOfRange(entry));
        }
        let mut fwd = Vec::new();
        let mut bwd = Vec::new();
        for (u, v) in edges {
            if u >= node_count || v >= node_count {
                return Err(GraphError::EdgeOutOfRange(u, v));
            }
            fwd.push((NodeId::new(u), NodeId::new(v)));
            bwd.push((NodeId::new(v), NodeId::new(u)));
        }
        let mut succs = Buckets::new(node_count, &fwd);
        let mut preds = Buckets::new(node_count, &bwd);
        for u in 0..node_count {
            let list = succs.get_mut(NodeId::new(u));
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                return Err(GraphError::DuplicateEdge(u, w[0].index()));
            }
            preds.get_mut(NodeId::new(u)).sort_unstable();
        }
        let g = DiGraph {
            entry: NodeId::new(entry),
            succs,
            preds,
        };
        g.check_reachable()?;
        Ok(g)
    }

    fn check_reachable(&self) -> Result<(), GraphError> {
        let mut seen = vec![false; self.node_count()];
        let mut stack = vec![self.entry];
        seen[self.entry.index()] = true;
        while let Some(u) = stack.pop() {
            for &v in self.succs.get(u) {
                if !seen[v.index()] {
                    seen[v.index()] = true;
                    stack.push(v);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(i) => Err(GraphError::Unreachable(NodeId::new(i))),
            None => Ok(()),
        }
    }

    pub fn node_count(&self) -> usize {
        self.succs.start.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.succs.items.len()
    }

    pub fn entry(&self) -> NodeId {
        self.entry
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count()).map(NodeId::new)
    }

    /// Successors in ascending order.
    pub fn succs(&self, v: NodeId) -> &[NodeId] {
        self.succs.get(v)
    }

    /// Predecessors in ascending order.
    pub fn preds(&self, v: NodeId) -> &[NodeId] {
        self.preds.get(v)
    }

    /// All edges, ordered by source then target.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes()
            .flat_map(move |u| self.succs(u).iter().map(move |&v| (u, v)))
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.succs(u).binary_search(&v).is_ok()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeClass {
    Tree,
    Back,
    Forward,
    Cross,
}

/// Depth-first spanning forest of a [`DiGraph`], rooted at its entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepthFirstForest {
    parent: Vec<Option<NodeId>>,
    dfn: Vec<u32>,
    post_dfn: Vec<u32>,
    depth: Vec<u32>,
    // by_dfn[i] is the node whose preorder number is i
    by_dfn: Vec<NodeId>,
    by_post: Vec<NodeId>,
}

impl DepthFirstForest {
    /// One iterative DFS from the entry; children in ascending id order.
    pub fn build(g: &DiGraph) -> Self {
        let n = g.node_count();
        const UNSEEN: u32 = u32::MAX;
        let mut parent = vec![None; n];
        let mut dfn = vec![UNSEEN; n];
        let mut post_dfn = vec![UNSEEN; n];
        let mut depth = vec![0u32; n];
        let mut by_dfn = Vec::with_capacity(n);
        let mut by_post = Vec::with_capacity(n);
        let mut next_pre = 0u32;
        let mut next_post = 0u32;

        // (node, index of next successor to try)
        let mut stack: Vec<(NodeId, usize)> = Vec::new();
        let root = g.entry();
        dfn[root.index()] = next_pre;
        next_pre += 1;
        by_dfn.push(root);
        stack.push((root, 0));
        while let Some(top) = stack.last_mut() {
            let (u, i) = *top;
            if let Some(&v) = g.succs(u).get(i) {
                top.1 += 1;
                if dfn[v.index()] == UNSEEN {
                    dfn[v.index()] = next_pre;
                    next_pre += 1;
                    by_dfn.push(v);
                    parent[v.index()] = Some(u);
                    depth[v.index()] = depth[u.index()] + 1;
                    stack.push((v, 0));
                }
            } else {
                post_dfn[u.index()] = next_post;
                next_post += 1;
                by_post.push(u);
                stack.pop();
            }
        }
        debug_assert_eq!(next_pre as usize, n, "graph must be entry-reachable");

        DepthFirstForest {
            parent,
            dfn,
            post_dfn,
            depth,
            by_dfn,
            by_post,
        }
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v.index()]
    }

    /// Preorder number.
    pub fn dfn(&self, v: NodeId) -> usize {
        self.dfn[v.index()] as usize
    }

    /// Postorder number.
    pub fn post_dfn(&self, v: NodeId) -> usize {
        self.post_dfn[v.index()] as usize
    }

    pub fn depth(&self, v: NodeId) -> usize {
        self.depth[v.index()] as usize
    }

    /// Nodes in descending preorder.
    pub fn descending_dfn(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.by_dfn.iter().rev().copied()
    }

    /// `a` is an ancestor of `d` in the forest (reflexive).
    #[inline]
    pub fn is_ancestor(&self, a: NodeId, d: NodeId) -> bool {
        self.dfn[a.index()] <= self.dfn[d.index()]
            && self.post_dfn[a.index()] >= self.post_dfn[d.index()]
    }

    pub fn classify(&self, u: NodeId, v: NodeId) -> EdgeClass {
        if self.parent(v) == Some(u) {
            EdgeClass::Tree
        } else if self.is_ancestor(v, u) {
            EdgeClass::Back
        } else if self.is_ancestor(u, v) {
            EdgeClass::Forward
        } else {
            EdgeClass::Cross
        }
    }

    /// Lowest common ancestor under the tree-edge parent relation, by
    /// climbing; `O(depth)`. Use [`Self::lca_offline`] for many queries.
    pub fn lca(&self, u: NodeId, v: NodeId) -> Result<NodeId, GraphError> {
        let n = self.node_count();
        if u.index() >= n || v.index() >= n {
            return Err(GraphError::EdgeOutOfRange(u.index(), v.index()));
        }
        let (mut a, mut b) = (u, v);
        while self.depth(a) > self.depth(b) {
            a = self.parent(a).expect("deeper node has a parent");
        }
        while self.depth(b) > self.depth(a) {
            b = self.parent(b).expect("deeper node has a parent");
        }
        while a != b {
            match (self.parent(a), self.parent(b)) {
                (Some(pa), Some(pb)) => {
                    a = pa;
                    b = pb;
                }
                _ => return Err(GraphError::DistinctRoots(u, v)),
            }
        }
        Ok(a)
    }

    /// Tarjan's offline lowest common ancestors: one postorder sweep with
    /// a disjoint-set forest. Nodes are linked under their tree parent when
    /// they finish, so a finished node's set root is its lowest unfinished
    /// ancestor.
    ///
    /// # Panics
    /// If a pair spans two trees (not possible for an entry-rooted forest).
    pub fn lca_offline(&self, pairs: &[(NodeId, NodeId)]) -> Vec<NodeId> {
        let n = self.node_count();
        // queries bucketed per endpoint, CSR style
        let mut start = vec![0u32; n + 1];
        for &(u, v) in pairs {
            start[u.index() + 1] += 1;
            start[v.index() + 1] += 1;
        }
        for i in 0..n {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        let mut bucket = vec![0u32; 2 * pairs.len()];
        for (q, &(u, v)) in pairs.iter().enumerate() {
            for x in [u, v] {
                bucket[fill[x.index()] as usize] = q as u32;
                fill[x.index()] += 1;
            }
        }
        let mut link: Vec<u32> = (0..n as u32).collect();
        let find = |link: &mut Vec<u32>, v: usize| {
            let mut x = v;
            while link[x] as usize != x {
                let gp = link[link[x] as usize];
                link[x] = gp;
                x = gp as usize;
            }
            x
        };
        let mut done = vec![false; n];
        let mut out = vec![NodeId(u32::MAX); pairs.len()];
        for &u in &self.by_post {
            done[u.index()] = true;
            for &q in &bucket[start[u.index()] as usize..start[u.index() + 1] as usize] {
                let (a, b) = pairs[q as usize];
                let other = if a == u { b } else { a };
                if done[other.index()] {
                    out[q as usize] = NodeId::new(find(&mut link, other.index()));
                }
            }
            if let Some(p) = self.parent(u) {
                link[u.index()] = p.0;
            }
        }
        assert!(
            out.iter().all(|x| x.0 != u32::MAX),
            "pairs must share a tree"
        );
        out
    }
}

/// Non-tree edges partitioned into back edges and cross/forward edges.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EdgePartition {
    pub back: Vec<(NodeId, NodeId)>,
    pub cross_forward: Vec<(NodeId, NodeId)>,
}

pub fn classify_edges(f: &DepthFirstForest, g: &DiGraph) -> EdgePartition {
    let mut out = EdgePartition::default();
    for (u, v) in g.edges() {
        match f.classify(u, v) {
            EdgeClass::Tree => {}
            EdgeClass::Back => out.back.push((u, v)),
            EdgeClass::Forward | EdgeClass::Cross => out.cross_forward.push((u, v)),
        }
    }
    out
}

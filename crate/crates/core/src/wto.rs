//! Weak topological orderings, the nesting forest they induce, and the
//! two total orders over nodes: WTO position (`⪯`, the order instructions
//! start) and completion order (`⊴`, the order instructions finish).

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

use crate::fmachine::{FmProgram, Prog};
use crate::graph::{DiGraph, Labels, NodeId};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum WtoElement {
    Vertex(NodeId),
    Component {
        head: NodeId,
        /// Elements after the head, in order.
        rest: Vec<WtoElement>,
    },
}

/// A hierarchical total ordering of the nodes of a graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Wto {
    elements: Vec<WtoElement>,
    position: Vec<u32>,
    /// Heads of the components containing each node, innermost first.
    omega: Vec<Vec<NodeId>>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WtoError {
    #[error("unexpected character {0:?} at offset {1}")]
    Unexpected(char, usize),
    #[error("unbalanced parentheses")]
    Unbalanced,
    #[error("a component must start with a node")]
    HeadlessComponent,
    #[error("node {0} appears more than once")]
    Duplicate(u64),
    #[error("unknown node label {0}")]
    UnknownLabel(u64),
    #[error("{0} of {1} nodes are missing")]
    Missing(usize, usize),
}

impl Wto {
    /// Builds the WTO from its element tree; every node in `0..node_count`
    /// must occur exactly once.
    pub fn new(elements: Vec<WtoElement>, node_count: usize) -> Result<Self, WtoError> {
        let mut position = vec![u32::MAX; node_count];
        let mut omega = vec![Vec::new(); node_count];
        let mut next = 0u32;
        fn visit(
            items: &[WtoElement],
            heads: &mut Vec<NodeId>,
            position: &mut [u32],
            omega: &mut [Vec<NodeId>],
            next: &mut u32,
        ) -> Result<(), WtoError> {
            for item in items {
                let (v, rest) = match item {
                    WtoElement::Vertex(v) => (*v, None),
                    WtoElement::Component { head, rest } => (*head, Some(rest)),
                };
                let slot = position
                    .get_mut(v.index())
                    .ok_or(WtoError::UnknownLabel(v.index() as u64))?;
                if *slot != u32::MAX {
                    return Err(WtoError::Duplicate(v.index() as u64));
                }
                *slot = *next;
                *next += 1;
                if let Some(rest) = rest {
                    heads.push(v);
                    omega[v.index()] = heads.iter().rev().copied().collect();
                    visit(rest, heads, position, omega, next)?;
                    heads.pop();
                } else {
                    omega[v.index()] = heads.iter().rev().copied().collect();
                }
            }
            Ok(())
        }
        visit(
            &elements,
            &mut Vec::new(),
            &mut position,
            &mut omega,
            &mut next,
        )?;
        if next as usize != node_count {
            return Err(WtoError::Missing(node_count - next as usize, node_count));
        }
        Ok(Wto {
            elements,
            position,
            omega,
        })
    }

    /// Parses the parenthesized notation, e.g. `1 2 (3 (4 5) 6) (7 8) 9`.
    pub fn parse(text: &str, labels: &Labels) -> Result<Self, WtoError> {
        let n = labels.as_slice().len();
        let mut stack: Vec<Vec<WtoElement>> = vec![Vec::new()];
        // true when the innermost open component has no head yet
        let mut pending_head = false;
        let bytes = text.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            match c {
                ' ' | '\t' | '\n' | '\r' => i += 1,
                '(' => {
                    if pending_head {
                        return Err(WtoError::HeadlessComponent);
                    }
                    stack.push(Vec::new());
                    pending_head = true;
                    i += 1;
                }
                ')' => {
                    if pending_head {
                        return Err(WtoError::HeadlessComponent);
                    }
                    let mut items = stack.pop().ok_or(WtoError::Unbalanced)?;
                    let parent = stack.last_mut().ok_or(WtoError::Unbalanced)?;
                    let head = match items.remove(0) {
                        WtoElement::Vertex(h) => h,
                        WtoElement::Component { .. } => return Err(WtoError::HeadlessComponent),
                    };
                    parent.push(WtoElement::Component { head, rest: items });
                    i += 1;
                }
                '0'..='9' => {
                    let start = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    let label: u64 = text[start..i]
                        .parse()
                        .map_err(|_| WtoError::Unexpected(c, start))?;
                    let v = labels.find(label).ok_or(WtoError::UnknownLabel(label))?;
                    stack
                        .last_mut()
                        .expect("root frame")
                        .push(WtoElement::Vertex(v));
                    pending_head = false;
                }
                other => return Err(WtoError::Unexpected(other, i)),
            }
        }
        if stack.len() != 1 {
            return Err(WtoError::Unbalanced);
        }
        let elements = stack.pop().unwrap();
        Wto::new(elements, n).map_err(|e| match e {
            WtoError::Duplicate(i) => WtoError::Duplicate(labels.get(NodeId::new(i as usize))),
            other => other,
        })
    }

    pub fn elements(&self) -> &[WtoElement] {
        &self.elements
    }

    pub fn node_count(&self) -> usize {
        self.position.len()
    }

    /// Index of `v` in the flattened ordering.
    pub fn position(&self, v: NodeId) -> usize {
        self.position[v.index()] as usize
    }

    /// `x ⪯ y`.
    pub fn precedes(&self, x: NodeId, y: NodeId) -> bool {
        self.position(x) <= self.position(y)
    }

    /// Heads of the components containing `v`, innermost first. A head is
    /// contained in its own component.
    pub fn omega(&self, v: NodeId) -> &[NodeId] {
        &self.omega[v.index()]
    }

    pub fn is_head(&self, v: NodeId) -> bool {
        self.omega[v.index()].first() == Some(&v)
    }

    /// Checks the WTO condition for every edge of `g`: `u ≺ v`, or `v ⪯ u`
    /// with `v ∈ ω(u)`. Returns the first violating edge.
    pub fn validate_against(&self, g: &DiGraph) -> Result<(), (NodeId, NodeId)> {
        for (u, v) in g.edges() {
            let forward = self.position(u) < self.position(v);
            let feedback = self.precedes(v, u) && self.omega(u).contains(&v);
            if !(forward || feedback) {
                return Err((u, v));
            }
        }
        Ok(())
    }

    pub fn display<'a>(&'a self, labels: &'a Labels) -> impl fmt::Display + 'a {
        WtoDisplay { wto: self, labels }
    }
}

struct WtoDisplay<'a> {
    wto: &'a Wto,
    labels: &'a Labels,
}

impl fmt::Display for WtoDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(items: &[WtoElement], labels: &Labels, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    f.write_str(" ")?;
                }
                match item {
                    WtoElement::Vertex(v) => write!(f, "{}", labels.get(*v))?,
                    WtoElement::Component { head, rest } => {
                        write!(f, "({}", labels.get(*head))?;
                        if !rest.is_empty() {
                            f.write_str(" ")?;
                            go(rest, labels, f)?;
                        }
                        f.write_str(")")?;
                    }
                }
            }
            Ok(())
        }
        go(&self.wto.elements, self.labels, f)
    }
}

impl fmt::Display for Wto {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display(&Labels::identity(self.node_count())))
    }
}

/// Reads the WTO back off an FM program; the two are isomorphic.
pub fn wto_of_program(p: &FmProgram) -> Wto {
    fn elements(p: &FmProgram, seq: &[NodeId]) -> Vec<WtoElement> {
        seq.iter()
            .map(|&v| match p.body(v) {
                None => WtoElement::Vertex(v),
                Some(body) => WtoElement::Component {
                    head: v,
                    rest: elements(p, body),
                },
            })
            .collect()
    }
    Wto::new(elements(p, p.top_level()), p.node_count()).expect("programs cover every node once")
}

/// Maps a WTO to its FM program: components become `repeat`, juxtaposition
/// becomes left-associated `;`, single nodes become `exec`.
pub fn gen_prog(w: &Wto) -> FmProgram {
    fn go(items: &[WtoElement]) -> Option<Prog> {
        Prog::seq_of(items.iter().map(|item| match item {
            WtoElement::Vertex(v) => Prog::Exec(*v),
            WtoElement::Component { head, rest } => Prog::Repeat(*head, go(rest).map(Box::new)),
        }))
    }
    let ast = go(&w.elements).expect("a WTO is never empty");
    FmProgram::new(ast, w.node_count()).expect("a WTO covers every node once")
}

/// The nesting relation `x ⪯N y` (`x = y` or `y ∈ ω(x)`) as a forest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NestingForest {
    parent: Vec<Option<NodeId>>,
    // Euler-tour interval of each node's subtree
    enter: Vec<u32>,
    exit: Vec<u32>,
}

impl NestingForest {
    pub fn new(w: &Wto) -> Self {
        let n = w.node_count();
        let parent: Vec<Option<NodeId>> = (0..n)
            .map(NodeId::new)
            .map(|v| w.omega(v).iter().copied().find(|&h| h != v))
            .collect();
        let mut children = vec![Vec::new(); n];
        let mut roots = Vec::new();
        for v in 0..n {
            match parent[v] {
                Some(p) => children[p.index()].push(NodeId::new(v)),
                None => roots.push(NodeId::new(v)),
            }
        }
        let mut enter = vec![0; n];
        let mut exit = vec![0; n];
        let mut clock = 0u32;
        let mut stack: Vec<(NodeId, bool)> = roots.into_iter().rev().map(|r| (r, false)).collect();
        while let Some((v, done)) = stack.pop() {
            if done {
                exit[v.index()] = clock;
                clock += 1;
                continue;
            }
            enter[v.index()] = clock;
            clock += 1;
            stack.push((v, true));
            for &c in children[v.index()].iter().rev() {
                stack.push((c, false));
            }
        }
        NestingForest {
            parent,
            enter,
            exit,
        }
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    /// Innermost enclosing head other than `v` itself.
    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v.index()]
    }

    /// `x ⪯N y`, i.e. `y ∈ ↑x`.
    #[inline]
    pub fn nested_in(&self, x: NodeId, y: NodeId) -> bool {
        self.enter[y.index()] <= self.enter[x.index()]
            && self.exit[x.index()] <= self.exit[y.index()]
    }

    /// `↑v`: `v` followed by its enclosing heads, innermost first.
    pub fn up_chain(&self, v: NodeId) -> UpChain<'_> {
        UpChain {
            forest: self,
            next: Some(v),
        }
    }

    /// `max⪯N ↑v`: outermost enclosing head, or `v` itself.
    pub fn outermost(&self, v: NodeId) -> NodeId {
        self.up_chain(v).last().expect("chain contains v")
    }

    /// `max⪯N((↑v ∖ ↑u) ∪ {v})`: head of the largest component containing
    /// `v` but not `u`, or `v` when there is none.
    pub fn lift(&self, u: NodeId, v: NodeId) -> NodeId {
        let mut best = v;
        for w in self.up_chain(v) {
            if self.nested_in(u, w) {
                break;
            }
            best = w;
        }
        best
    }
}

pub struct UpChain<'a> {
    forest: &'a NestingForest,
    next: Option<NodeId>,
}

impl Iterator for UpChain<'_> {
    type Item = NodeId;

    fn next(&mut self) -> Option<NodeId> {
        let v = self.next?;
        self.next = self.forest.parent(v);
        Some(v)
    }
}

/// `x ⊴ y ⟺ x ⪯N y ∨ (y ⋠N x ∧ x ⪯ y)`, evaluated directly.
pub fn exec_order_leq(w: &Wto, nf: &NestingForest, x: NodeId, y: NodeId) -> bool {
    nf.nested_in(x, y) || (!nf.nested_in(y, x) && w.precedes(x, y))
}

/// The completion order `⊴` with O(1) comparisons.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecOrder {
    rank: Vec<u32>,
    sequence: Vec<NodeId>,
}

impl ExecOrder {
    pub fn new(w: &Wto, nf: &NestingForest) -> Self {
        let mut sequence: Vec<NodeId> = (0..w.node_count()).map(NodeId::new).collect();
        sequence.sort_by(|&x, &y| {
            if x == y {
                Ordering::Equal
            } else if exec_order_leq(w, nf, x, y) {
                Ordering::Less
            } else {
                Ordering::Greater
            }
        });
        let mut rank = vec![0; sequence.len()];
        for (i, v) in sequence.iter().enumerate() {
            rank[v.index()] = i as u32;
        }
        ExecOrder { rank, sequence }
    }

    pub fn rank(&self, v: NodeId) -> usize {
        self.rank[v.index()] as usize
    }

    /// `x ⊴ y`.
    pub fn leq(&self, x: NodeId, y: NodeId) -> bool {
        self.rank[x.index()] <= self.rank[y.index()]
    }

    /// Nodes sorted by `⊴`.
    pub fn sequence(&self) -> &[NodeId] {
        &self.sequence
    }

    /// `⊴`-maximum of `items`.
    pub fn max(&self, items: impl IntoIterator<Item = NodeId>) -> Option<NodeId> {
        items.into_iter().max_by_key(|&v| self.rank[v.index()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fmachine::generate_fm_program;
    use crate::graph::tests::{g1, n};

    fn labels() -> Labels {
        Labels::new((1..=9).collect())
    }

    fn w1() -> Wto {
        Wto::parse("1 2 (3 (4 5) 6) (7 8) 9", &labels()).unwrap()
    }

    #[test]
    fn g1_wto_from_program() {
        let (p, _) = generate_fm_program(&g1(), &[false; 9]);
        let w = wto_of_program(&p);
        assert_eq!(w.display(&labels()).to_string(), "1 2 (3 (4 5) 6) (7 8) 9");
        assert_eq!(w, w1());
        assert!(w.validate_against(&g1()).is_ok());
    }

    #[test]
    fn omega_of_g1() {
        let w = w1();
        assert_eq!(w.omega(n(3)), &[n(3)]);
        assert_eq!(w.omega(n(5)), &[n(4), n(3)]);
        assert!(w.omega(n(1)).is_empty());
        assert!(w.is_head(n(7)) && !w.is_head(n(8)));
    }

    #[test]
    fn gen_prog_cases() {
        let w = w1();
        assert_eq!(
            gen_prog(&w).display(&labels()).to_string(),
            "exec 1 ; exec 2 ; repeat 3 [repeat 4 [exec 5] ; exec 6] ; repeat 7 [exec 8] ; exec 9"
        );
        let l = Labels::new(vec![0, 1]);
        let single = Wto::parse("0", &Labels::new(vec![0])).unwrap();
        assert_eq!(gen_prog(&single).ast(), &Prog::Exec(NodeId::new(0)));
        let comp = Wto::parse("(0 1)", &l).unwrap();
        assert_eq!(
            gen_prog(&comp).ast(),
            &Prog::Repeat(NodeId::new(0), Some(Box::new(Prog::Exec(NodeId::new(1)))))
        );
        assert_eq!(wto_of_program(&gen_prog(&comp)), comp);
    }

    #[test]
    fn parse_rejects_malformed() {
        let l = Labels::new(vec![1, 2, 3]);
        assert_eq!(
            Wto::parse("1 ((2 3))", &l),
            Err(WtoError::HeadlessComponent)
        );
        assert_eq!(Wto::parse("1 (2 3", &l), Err(WtoError::Unbalanced));
        assert_eq!(Wto::parse("1 2 2", &l), Err(WtoError::Duplicate(2)));
        assert_eq!(Wto::parse("1 2", &l), Err(WtoError::Missing(1, 3)));
        assert_eq!(Wto::parse("1 2 4", &l), Err(WtoError::UnknownLabel(4)));
    }

    #[test]
    fn nesting_forest_of_g1() {
        let nf = NestingForest::new(&w1());
        let up5: Vec<_> = nf.up_chain(n(5)).collect();
        assert_eq!(up5, vec![n(5), n(4), n(3)]);
        assert_eq!(nf.parent(n(6)), Some(n(3)));
        assert_eq!(nf.parent(n(8)), Some(n(7)));
        assert_eq!(nf.parent(n(3)), None);
        assert!(nf.nested_in(n(5), n(3)));
        assert!(!nf.nested_in(n(3), n(5)));
        assert!(!nf.nested_in(n(6), n(4)));
    }

    #[test]
    fn flat_wto_has_trivial_chains() {
        let l = Labels::new(vec![0, 1, 2]);
        let nf = NestingForest::new(&Wto::parse("0 1 2", &l).unwrap());
        for v in 0..3 {
            let v = NodeId::new(v);
            assert_eq!(nf.up_chain(v).collect::<Vec<_>>(), vec![v]);
        }
    }

    #[test]
    fn exec_order_of_g1() {
        let w = w1();
        let nf = NestingForest::new(&w);
        let order = ExecOrder::new(&w, &nf);
        let seq: Vec<u64> = order.sequence().iter().map(|&v| labels().get(v)).collect();
        assert_eq!(seq, vec![1, 2, 5, 4, 6, 3, 8, 7, 9]);
        assert!(order.leq(n(6), n(3)));
        assert!(w.precedes(n(3), n(6)));
    }

    #[test]
    fn lift_examples() {
        let nf = NestingForest::new(&w1());
        assert_eq!(nf.lift(n(2), n(8)), n(7));
        assert_eq!(nf.lift(n(5), n(4)), n(4));
        assert_eq!(nf.lift(n(5), n(3)), n(3));
        assert_eq!(nf.lift(n(2), n(5)), n(3));
        for v in 1..=9 {
            assert_eq!(nf.lift(n(v), n(v)), n(v));
        }
    }
}

//! Memory configurations: when each `Post[u]`/`Pre[u]` may be dropped and
//! when each check runs. The declarative optimal maps here double as the
//! oracle for the one-pass construction in [`crate::fmachine`].

use std::borrow::Cow;
use std::fmt::Write as _;

use crate::fmachine::FmProgram;
use crate::graph::{DiGraph, Labels, NodeId};
use crate::wto::{ExecOrder, NestingForest, Wto};

/// The four maps `(Dpost, Achk, Dpostl, Dprel)`.
///
/// All maps are dense over node indices. `achk` and `dprel` are `Some`
/// exactly on checked nodes. Sets read back sorted by index, and equality
/// compares the sets, not how they are stored.
#[derive(Clone, Debug)]
pub struct MemoryConfiguration {
    dpost: Vec<NodeId>,
    achk: Vec<Option<NodeId>>,
    /// Parent links of the nesting forest, for chain-encoded sets.
    nest_parent: Vec<Option<NodeId>>,
    dpostl: Vec<HeadSet>,
    dprel: Vec<Option<HeadSet>>,
}

/// A set of heads. Sets built by the one-pass construction are paths in
/// the nesting forest; spelling them out would cost the sum of nesting
/// depths, which is quadratic on deeply nested graphs.
#[derive(Clone, Debug)]
enum HeadSet {
    Explicit(Vec<NodeId>),
    /// `[from, to]` along nest parents, without `from` when `skip_from`.
    Chain {
        from: NodeId,
        to: NodeId,
        skip_from: bool,
    },
}

fn sorted(mut v: Vec<NodeId>) -> Vec<NodeId> {
    v.sort_unstable();
    v.dedup();
    v
}

impl MemoryConfiguration {
    /// # Panics
    /// If the maps disagree on the node count or on which nodes are checked.
    pub fn from_parts(
        dpost: Vec<NodeId>,
        achk: Vec<Option<NodeId>>,
        dpostl: Vec<Vec<NodeId>>,
        dprel: Vec<Option<Vec<NodeId>>>,
    ) -> Self {
        let n = dpost.len();
        assert!(achk.len() == n && dpostl.len() == n && dprel.len() == n);
        for v in 0..n {
            assert_eq!(achk[v].is_some(), dprel[v].is_some(), "node {v}");
        }
        MemoryConfiguration {
            dpost,
            achk,
            nest_parent: vec![None; n],
            dpostl: dpostl
                .into_iter()
                .map(|s| HeadSet::Explicit(sorted(s)))
                .collect(),
            dprel: dprel
                .into_iter()
                .map(|s| s.map(|s| HeadSet::Explicit(sorted(s))))
                .collect(),
        }
    }

    /// Sets given as nest-forest paths: `Dpostl[u] = [u, dpostl_to[u]]` (or
    /// empty for `None`) and
    /// `Dprel[u] = [u, dprel_to[u]] \ {u}`.
    pub(crate) fn from_chains(
        dpost: Vec<NodeId>,
        achk: Vec<Option<NodeId>>,
        nest_parent: Vec<Option<NodeId>>,
        dpostl_to: Vec<Option<NodeId>>,
        dprel_to: Vec<Option<NodeId>>,
    ) -> Self {
        let chain = |u: usize, to: NodeId, skip_from: bool| HeadSet::Chain {
            from: NodeId::new(u),
            to,
            skip_from,
        };
        MemoryConfiguration {
            dpost,
            achk,
            nest_parent,
            dpostl: dpostl_to
                .into_iter()
                .enumerate()
                .map(|(u, t)| t.map_or(HeadSet::Explicit(Vec::new()), |t| chain(u, t, false)))
                .collect(),
            dprel: dprel_to
                .into_iter()
                .enumerate()
                .map(|(u, t)| t.map(|t| chain(u, t, true)))
                .collect(),
        }
    }

    fn expand<'a>(&'a self, s: &'a HeadSet) -> Cow<'a, [NodeId]> {
        match *s {
            HeadSet::Explicit(ref v) => Cow::Borrowed(v),
            HeadSet::Chain {
                from,
                to,
                skip_from,
            } => {
                let mut out = Vec::new();
                if !skip_from {
                    out.push(from);
                }
                let mut x = from;
                while x != to {
                    x = self.nest_parent[x.index()].expect("chain end must enclose its start");
                    out.push(x);
                }
                Cow::Owned(sorted(out))
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.dpost.len()
    }

    pub fn dpost(&self, u: NodeId) -> NodeId {
        self.dpost[u.index()]
    }

    pub fn achk(&self, u: NodeId) -> Option<NodeId> {
        self.achk[u.index()]
    }

    pub fn dpostl(&self, u: NodeId) -> Cow<'_, [NodeId]> {
        self.expand(&self.dpostl[u.index()])
    }

    pub fn dprel(&self, u: NodeId) -> Option<Cow<'_, [NodeId]>> {
        self.dprel[u.index()].as_ref().map(|s| self.expand(s))
    }

    pub fn is_checked(&self, u: NodeId) -> bool {
        self.achk[u.index()].is_some()
    }

    pub fn checked_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.node_count())
            .map(NodeId::new)
            .filter(|&u| self.is_checked(u))
    }

    pub fn set_dpost(&mut self, u: NodeId, v: NodeId) {
        self.dpost[u.index()] = v;
    }

    /// # Panics
    /// If `u` is not checked.
    pub fn set_achk(&mut self, u: NodeId, v: NodeId) {
        let slot = &mut self.achk[u.index()];
        assert!(slot.is_some(), "achk is only defined on checked nodes");
        *slot = Some(v);
    }

    pub fn set_dpostl(&mut self, u: NodeId, heads: Vec<NodeId>) {
        self.dpostl[u.index()] = HeadSet::Explicit(sorted(heads));
    }

    /// # Panics
    /// If `u` is not checked.
    pub fn set_dprel(&mut self, u: NodeId, heads: Vec<NodeId>) {
        let slot = &mut self.dprel[u.index()];
        assert!(slot.is_some(), "dprel is only defined on checked nodes");
        *slot = Some(HeadSet::Explicit(sorted(heads)));
    }

    /// One line per entry, e.g. `dpost 2 -> 7`, `dpostl 5 -> {3, 4, 5}`.
    /// Entries are listed in ascending label order.
    pub fn render(&self, labels: &Labels) -> String {
        let mut order: Vec<NodeId> = (0..self.node_count()).map(NodeId::new).collect();
        order.sort_by_key(|&v| labels.get(v));
        let set = |s: &[NodeId]| {
            let mut ls: Vec<u64> = s.iter().map(|&x| labels.get(x)).collect();
            ls.sort_unstable();
            let parts: Vec<String> = ls.iter().map(u64::to_string).collect();
            format!("{{{}}}", parts.join(", "))
        };
        let mut out = String::new();
        for &v in &order {
            let _ = writeln!(
                out,
                "dpost {} -> {}",
                labels.get(v),
                labels.get(self.dpost(v))
            );
        }
        for &v in &order {
            if let Some(a) = self.achk(v) {
                let _ = writeln!(out, "achk {} -> {}", labels.get(v), labels.get(a));
            }
        }
        for &v in &order {
            let _ = writeln!(out, "dpostl {} -> {}", labels.get(v), set(&self.dpostl(v)));
        }
        for &v in &order {
            if let Some(r) = self.dprel(v) {
                let _ = writeln!(out, "dprel {} -> {}", labels.get(v), set(&r));
            }
        }
        out
    }
}

impl PartialEq for MemoryConfiguration {
    fn eq(&self, o: &Self) -> bool {
        self.dpost == o.dpost
            && self.achk == o.achk
            && (0..self.node_count()).all(|u| {
                let u = NodeId::new(u);
                self.dpostl(u) == o.dpostl(u) && self.dprel(u) == o.dprel(u)
            })
    }
}

impl Eq for MemoryConfiguration {}

/// Everything is kept until the last instruction `z`: `Dpost[v] = Achk[c] = z`,
/// and no in-loop deallocation.
pub fn default_config(p: &FmProgram, checks: &[bool]) -> MemoryConfiguration {
    let n = p.node_count();
    let z = p.last_node();
    MemoryConfiguration::from_parts(
        vec![z; n],
        checks.iter().map(|&c| c.then_some(z)).collect(),
        vec![Vec::new(); n],
        checks.iter().map(|&c| c.then(Vec::new)).collect(),
    )
}

/// `Dpost[u] = max⊴ { lift(u, v) | u → v }`, or `u` for a sink.
pub fn dpost_opt(g: &DiGraph, nf: &NestingForest, order: &ExecOrder) -> Vec<NodeId> {
    g.nodes()
        .map(|u| {
            order
                .max(g.succs(u).iter().map(|&v| nf.lift(u, v)))
                .unwrap_or(u)
        })
        .collect()
}

/// `Achk[u] = max⪯N ↑u` for checked `u`.
pub fn achk_opt(nf: &NestingForest, checks: &[bool]) -> Vec<Option<NodeId>> {
    checks
        .iter()
        .enumerate()
        .map(|(u, &c)| c.then(|| nf.outermost(NodeId::new(u))))
        .collect()
}

/// `Dpostl[u] = (↑u ∖ ↑d) ∪ ({d} if u ⪯N d)` where `d = Dpost[u]`.
pub fn dpostl_opt(nf: &NestingForest, dpost: &[NodeId]) -> Vec<Vec<NodeId>> {
    dpost
        .iter()
        .enumerate()
        .map(|(u, &d)| {
            let u = NodeId::new(u);
            let mut s: Vec<NodeId> = nf.up_chain(u).filter(|&x| !nf.nested_in(d, x)).collect();
            if nf.nested_in(u, d) {
                s.push(d);
            }
            sorted(s)
        })
        .collect()
}

/// `Dprel[u] = ↑u ∖ {u}` for checked `u`.
pub fn dprel_opt(nf: &NestingForest, checks: &[bool]) -> Vec<Option<Vec<NodeId>>> {
    checks
        .iter()
        .enumerate()
        .map(|(u, &c)| c.then(|| sorted(nf.up_chain(NodeId::new(u)).skip(1).collect())))
        .collect()
}

/// The optimal configuration evaluated directly from its definition.
pub fn optimal_config(g: &DiGraph, w: &Wto, checks: &[bool]) -> MemoryConfiguration {
    let nf = NestingForest::new(w);
    let order = ExecOrder::new(w, &nf);
    let dpost = dpost_opt(g, &nf, &order);
    let dpostl = dpostl_opt(&nf, &dpost);
    MemoryConfiguration::from_parts(dpost, achk_opt(&nf, checks), dpostl, dprel_opt(&nf, checks))
}

//! Line-oriented CFG files.
//!
//! ```text
//! # comment
//! graph loop
//! entry 0
//! vars x
//! node 0 { x = 0 }
//! node 1 { assume(x <= 9); x = x + 1 }
//! node 2 { assert(x >= 10) }
//! edge 0 -> 1
//! edge 1 -> 1
//! edge 1 -> 2
//! check 1
//! ```
//!
//! Node ids are arbitrary non-negative integers; they are densified in
//! ascending order. `vars` is optional: without it the variables are the
//! ones used, in order of first use.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::domains::{parse_stmts, NodeProgram, StmtParseError, VarId};
use crate::engine::Problem;
use crate::graph::{DiGraph, GraphError, Labels, NodeId};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CfgDocument {
    pub name: String,
    pub entry: u64,
    pub vars: Vec<String>,
    pub nodes: BTreeMap<u64, NodeProgram>,
    /// Sorted ascending.
    pub edges: Vec<(u64, u64)>,
    /// Nodes checked even without an assert.
    pub forced_checks: BTreeSet<u64>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CfgError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: undeclared node {id}")]
    UndeclaredNode { line: usize, id: u64 },
    #[error("line {line}, column {column}: undeclared variable `{name}`")]
    UndeclaredVariable {
        line: usize,
        column: usize,
        name: String,
    },
    #[error("line {line}: duplicate node {id}")]
    DuplicateNode { line: usize, id: u64 },
    #[error("line {line}: duplicate edge {u} -> {v}")]
    DuplicateEdge { line: usize, u: u64, v: u64 },
    #[error("missing `{0}` line")]
    Missing(&'static str),
    #[error("node {0} is unreachable from the entry")]
    Unreachable(u64),
    #[error("{0}")]
    Graph(GraphError),
}

impl CfgError {
    /// 1-based line of the error, when it has one.
    pub fn line(&self) -> Option<usize> {
        match self {
            CfgError::Syntax { line, .. }
            | CfgError::UndeclaredNode { line, .. }
            | CfgError::UndeclaredVariable { line, .. }
            | CfgError::DuplicateNode { line, .. }
            | CfgError::DuplicateEdge { line, .. } => Some(*line),
            _ => None,
        }
    }
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> CfgError {
    CfgError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

// Splits a line into whitespace-separated words with 1-based columns.
fn words(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s + 1, &text[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &text[s..]));
    }
    out
}

fn parse_id(line: usize, (column, word): (usize, &str)) -> Result<u64, CfgError> {
    word.parse()
        .map_err(|_| syntax(line, column, format!("expected a node id, found `{word}`")))
}

fn is_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && s != "assume"
        && s != "assert"
}

/// Parses and validates a CFG file.
pub fn parse_cfg(text: &str) -> Result<CfgDocument, CfgError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("")))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();

    let mut declared: Option<Vec<String>> = None;
    for &(ln, l) in &lines {
        let ws = words(l);
        if ws[0].1 == "vars" {
            if declared.is_some() {
                return Err(syntax(ln, ws[0].0, "duplicate `vars` line"));
            }
            let mut vs: Vec<String> = Vec::new();
            for &(col, w) in &ws[1..] {
                if !is_ident(w) {
                    return Err(syntax(ln, col, format!("invalid variable name `{w}`")));
                }
                if vs.iter().any(|v| v == w) {
                    return Err(syntax(ln, col, format!("variable `{w}` declared twice")));
                }
                vs.push(w.to_string());
            }
            declared = Some(vs);
        }
    }
    let strict = declared.is_some();
    let mut vars = declared.unwrap_or_default();

    let mut doc = CfgDocument::default();
    let mut name = None;
    let mut entry = None;
    let mut edge_lines = Vec::new();
    let mut check_lines = Vec::new();
    for &(ln, l) in &lines {
        let ws = words(l);
        let (kcol, keyword) = ws[0];
        let want = |n: usize| -> Result<(), CfgError> {
            if ws.len() == n {
                Ok(())
            } else if ws.len() < n {
                Err(syntax(
                    ln,
                    l.trim_end().len() + 1,
                    format!("incomplete `{keyword}` line"),
                ))
            } else {
                Err(syntax(ln, ws[n].0, "unexpected trailing text"))
            }
        };
        match keyword {
            "graph" => {
                want(2)?;
                if name.replace(ws[1].1.to_string()).is_some() {
                    return Err(syntax(ln, kcol, "duplicate `graph` line"));
                }
            }
            "entry" => {
                want(2)?;
                if entry.replace((ln, parse_id(ln, ws[1])?)).is_some() {
                    return Err(syntax(ln, kcol, "duplicate `entry` line"));
                }
            }
            "vars" => {}
            "node" => {
                if ws.len() < 2 {
                    return Err(syntax(ln, l.trim_end().len() + 1, "incomplete `node` line"));
                }
                let id = parse_id(ln, ws[1])?;
                let after_id = ws[1].0 - 1 + ws[1].1.len();
                let rest = &l[after_id..];
                let open = rest
                    .find(|c: char| !c.is_whitespace())
                    .filter(|&i| rest[i..].starts_with('{'))
                    .ok_or_else(|| syntax(ln, after_id + 1, "expected `{`"))?;
                let body_start = after_id + open + 1;
                let close = l
                    .rfind('}')
                    .filter(|&i| i >= body_start)
                    .ok_or_else(|| syntax(ln, l.trim_end().len() + 1, "expected `}`"))?;
                if !l[close + 1..].trim().is_empty() {
                    return Err(syntax(ln, close + 2, "unexpected trailing text"));
                }
                let body = &l[body_start..close];
                let stmts = parse_stmts(body, |v| match vars.iter().position(|x| x == v) {
                    Some(i) => Some(VarId::new(i)),
                    None if !strict => {
                        vars.push(v.to_string());
                        Some(VarId::new(vars.len() - 1))
                    }
                    None => None,
                })
                .map_err(|e| match e {
                    StmtParseError::Syntax { column, message } => {
                        syntax(ln, body_start + column, message)
                    }
                    StmtParseError::Undeclared { column, name } => CfgError::UndeclaredVariable {
                        line: ln,
                        column: body_start + column,
                        name,
                    },
                })?;
                if doc.nodes.insert(id, NodeProgram::new(stmts)).is_some() {
                    return Err(CfgError::DuplicateNode { line: ln, id });
                }
            }
            "edge" => {
                want(4)?;
                if ws[2].1 != "->" {
                    return Err(syntax(ln, ws[2].0, "expected `->`"));
                }
                edge_lines.push((ln, parse_id(ln, ws[1])?, parse_id(ln, ws[3])?));
            }
            "check" => {
                want(2)?;
                check_lines.push((ln, parse_id(ln, ws[1])?));
            }
            other => return Err(syntax(ln, kcol, format!("unknown directive `{other}`"))),
        }
    }
    doc.name = name.ok_or(CfgError::Missing("graph"))?;
    let (entry_line, entry) = entry.ok_or(CfgError::Missing("entry"))?;
    if !doc.nodes.contains_key(&entry) {
        return Err(CfgError::UndeclaredNode {
            line: entry_line,
            id: entry,
        });
    }
    doc.entry = entry;
    let mut seen = BTreeSet::new();
    for (ln, u, v) in edge_lines {
        for id in [u, v] {
            if !doc.nodes.contains_key(&id) {
                return Err(CfgError::UndeclaredNode { line: ln, id });
            }
        }
        if !seen.insert((u, v)) {
            return Err(CfgError::DuplicateEdge { line: ln, u, v });
        }
        doc.edges.push((u, v));
    }
    doc.edges.sort_unstable();
    for (ln, id) in check_lines {
        if !doc.nodes.contains_key(&id) {
            return Err(CfgError::UndeclaredNode { line: ln, id });
        }
        doc.forced_checks.insert(id);
    }
    doc.vars = vars;
    doc.build()?;
    Ok(doc)
}

/// A document lowered to dense node ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cfg {
    pub name: String,
    pub graph: DiGraph,
    pub labels: Labels,
    pub programs: Vec<NodeProgram>,
    pub vars: Vec<String>,
    /// `V_C`: nodes with an assert, plus forced checks.
    pub checks: Vec<bool>,
}

impl Cfg {
    pub fn problem(&self) -> Problem<'_> {
        Problem {
            graph: &self.graph,
            programs: &self.programs,
            var_count: self.vars.len(),
        }
    }

    /// Back to a document with the original labels.
    pub fn to_document(&self) -> CfgDocument {
        let l = |v: NodeId| self.labels.get(v);
        let forced = self
            .graph
            .nodes()
            .filter(|&v| self.checks[v.index()] && !self.programs[v.index()].has_assert())
            .map(l)
            .collect();
        CfgDocument {
            name: self.name.clone(),
            entry: l(self.graph.entry()),
            vars: self.vars.clone(),
            nodes: self
                .graph
                .nodes()
                .map(|v| (l(v), self.programs[v.index()].clone()))
                .collect(),
            edges: self.graph.edges().map(|(u, v)| (l(u), l(v))).collect(),
            forced_checks: forced,
        }
    }
}

impl CfgDocument {
    pub fn build(&self) -> Result<Cfg, CfgError> {
        let labels: Vec<u64> = self.nodes.keys().copied().collect();
        let index: HashMap<u64, usize> = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        let idx = |l: u64| {
            index
                .get(&l)
                .copied()
                .ok_or(CfgError::UndeclaredNode { line: 0, id: l })
        };
        let entry = idx(self.entry)?;
        let mut edges = Vec::with_capacity(self.edges.len());
        for &(u, v) in &self.edges {
            edges.push((idx(u)?, idx(v)?));
        }
        let graph = DiGraph::new(labels.len(), entry, edges).map_err(|e| match e {
            GraphError::Unreachable(v) => CfgError::Unreachable(labels[v.index()]),
            GraphError::DuplicateEdge(u, v) => CfgError::DuplicateEdge {
                line: 0,
                u: labels[u],
                v: labels[v],
            },
            other => CfgError::Graph(other),
        })?;
        let programs: Vec<NodeProgram> = self.nodes.values().cloned().collect();
        for p in &programs {
            if let Err(crate::domains::DomainError::UndeclaredVariable(i)) =
                p.validate(self.vars.len())
            {
                return Err(CfgError::UndeclaredVariable {
                    line: 0,
                    column: 0,
                    name: format!("#{i}"),
                });
            }
        }
        let checks = self
            .nodes
            .iter()
            .map(|(id, p)| p.has_assert() || self.forced_checks.contains(id))
            .collect();
        Ok(Cfg {
            name: self.name.clone(),
            graph,
            labels: Labels::new(labels),
            programs,
            vars: self.vars.clone(),
            checks,
        })
    }

    /// Canonical text: header, `vars` (when non-empty), then nodes, edges
    /// and checks in ascending order.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "graph {}", self.name);
        let _ = writeln!(out, "entry {}", self.entry);
        if !self.vars.is_empty() {
            let _ = writeln!(out, "vars {}", self.vars.join(" "));
        }
        for (id, p) in &self.nodes {
            if p.stmts().is_empty() {
                let _ = writeln!(out, "node {id} {{}}");
            } else {
                let body: Vec<String> = p
                    .stmts()
                    .iter()
                    .map(|s| s.display(&self.vars).to_string())
                    .collect();
                let _ = writeln!(out, "node {id} {{ {} }}", body.join("; "));
            }
        }
        for (u, v) in &self.edges {
            let _ = writeln!(out, "edge {u} -> {v}");
        }
        for c in &self.forced_checks {
            let _ = writeln!(out, "check {c}");
        }
        out
    }
}

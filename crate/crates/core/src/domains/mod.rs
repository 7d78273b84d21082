//! The statement language attached to CFG nodes and the abstract domains
//! that interpret it.

mod constant;
mod interval;

use std::fmt;
use std::hash::Hash;

use thiserror::Error;

pub use constant::{ConstState, Flat};
pub use interval::{Bound, Interval, IntervalState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(u32);

impl VarId {
    pub fn new(index: usize) -> Self {
        VarId(u32::try_from(index).expect("variable index fits in u32"))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
        }
    }

    /// Concrete semantics; `None` on overflow.
    pub fn eval(self, a: i64, b: i64) -> Option<i64> {
        match self {
            BinOp::Add => a.checked_add(b),
            BinOp::Sub => a.checked_sub(b),
            BinOp::Mul => a.checked_mul(b),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Operand {
    Var(VarId),
    Const(i64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rhs {
    Const(i64),
    Var(VarId),
    Bin(VarId, BinOp, Operand),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Ge => a >= b,
            CmpOp::Gt => a > b,
        }
    }
}

/// `var ▷ value`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Guard {
    pub var: VarId,
    pub op: CmpOp,
    pub value: i64,
}

impl Guard {
    pub fn new(var: VarId, op: CmpOp, value: i64) -> Self {
        Guard { var, op, value }
    }

    pub fn holds(&self, x: i64) -> bool {
        self.op.holds(x, self.value)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stmt {
    Assign(VarId, Rhs),
    Assume(Guard),
    Assert(Guard),
}

impl Stmt {
    fn vars(&self) -> impl Iterator<Item = VarId> {
        let (a, b, c) = match *self {
            Stmt::Assign(x, Rhs::Const(_)) => (Some(x), None, None),
            Stmt::Assign(x, Rhs::Var(y)) => (Some(x), Some(y), None),
            Stmt::Assign(x, Rhs::Bin(y, _, Operand::Var(z))) => (Some(x), Some(y), Some(z)),
            Stmt::Assign(x, Rhs::Bin(y, _, Operand::Const(_))) => (Some(x), Some(y), None),
            Stmt::Assume(g) | Stmt::Assert(g) => (Some(g.var), None, None),
        };
        a.into_iter().chain(b).chain(c)
    }

    pub fn display<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        StmtDisplay { stmt: self, names }
    }
}

struct StmtDisplay<'a> {
    stmt: &'a Stmt,
    names: &'a [String],
}

impl fmt::Display for StmtDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = |v: VarId| self.names[v.index()].as_str();
        match *self.stmt {
            Stmt::Assign(x, Rhs::Const(c)) => write!(f, "{} = {}", name(x), c),
            Stmt::Assign(x, Rhs::Var(y)) => write!(f, "{} = {}", name(x), name(y)),
            Stmt::Assign(x, Rhs::Bin(y, op, Operand::Var(z))) => {
                write!(f, "{} = {} {} {}", name(x), name(y), op.symbol(), name(z))
            }
            Stmt::Assign(x, Rhs::Bin(y, op, Operand::Const(c))) => {
                write!(f, "{} = {} {} {}", name(x), name(y), op.symbol(), c)
            }
            Stmt::Assume(g) => write!(f, "assume({} {} {})", name(g.var), g.op.symbol(), g.value),
            Stmt::Assert(g) => write!(f, "assert({} {} {})", name(g.var), g.op.symbol(), g.value),
        }
    }
}

/// The statements of one CFG node, run in order by `τ_v`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct NodeProgram {
    stmts: Vec<Stmt>,
}

impl NodeProgram {
    pub fn new(stmts: Vec<Stmt>) -> Self {
        NodeProgram { stmts }
    }

    pub fn skip() -> Self {
        NodeProgram::default()
    }

    pub fn stmts(&self) -> &[Stmt] {
        &self.stmts
    }

    pub fn has_assert(&self) -> bool {
        self.stmts.iter().any(|s| matches!(s, Stmt::Assert(_)))
    }

    /// Rejects references to variables outside `0..var_count`.
    pub fn validate(&self, var_count: usize) -> Result<(), DomainError> {
        match self
            .stmts
            .iter()
            .flat_map(Stmt::vars)
            .find(|v| v.index() >= var_count)
        {
            Some(v) => Err(DomainError::UndeclaredVariable(v.index())),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DomainError {
    #[error("statement refers to undeclared variable #{0}")]
    UndeclaredVariable(usize),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StmtParseError {
    #[error("column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("column {column}: undeclared variable `{name}`")]
    Undeclared { column: usize, name: String },
}

impl StmtParseError {
    pub fn column(&self) -> usize {
        match self {
            StmtParseError::Syntax { column, .. } | StmtParseError::Undeclared { column, .. } => {
                *column
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(i64),
    Sym(&'static str),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, StmtParseError> {
    const SYMS: [&str; 13] = [
        "<=", ">=", "==", "!=", "<", ">", "=", "+", "-", "*", "(", ")", ";",
    ];
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    'outer: while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(text[start..i].to_string())));
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            // magnitude may be 2^63 when preceded by a minus sign
            let n: i128 = text[start..i].parse().map_err(|_| StmtParseError::Syntax {
                column: start + 1,
                message: "integer literal out of range".into(),
            })?;
            if n > 1i128 << 63 {
                return Err(StmtParseError::Syntax {
                    column: start + 1,
                    message: "integer literal out of range".into(),
                });
            }
            out.push((start, Tok::Num(n as u64 as i64)));
            continue;
        }
        for s in SYMS {
            if text[i..].starts_with(s) {
                out.push((i, Tok::Sym(s)));
                i += s.len();
                continue 'outer;
            }
        }
        return Err(StmtParseError::Syntax {
            column: i + 1,
            message: format!(
                "unexpected character {:?}",
                text[i..].chars().next().unwrap()
            ),
        });
    }
    Ok(out)
}

struct StmtParser<'a, F> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    resolve: &'a mut F,
}

impl<F: FnMut(&str) -> Option<VarId>> StmtParser<'_, F> {
    fn column(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.0) + 1
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, StmtParseError> {
        Err(StmtParseError::Syntax {
            column: self.column(),
            message: message.into(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn eat(&mut self, s: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(x)) if *x == s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, s: &str) -> Result<(), StmtParseError> {
        if self.eat(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`"))
        }
    }

    fn var(&mut self) -> Result<VarId, StmtParseError> {
        let column = self.column();
        match self.peek().cloned() {
            Some(Tok::Ident(name)) if name != "assume" && name != "assert" => {
                self.pos += 1;
                (self.resolve)(&name).ok_or(StmtParseError::Undeclared { column, name })
            }
            _ => self.err("expected a variable"),
        }
    }

    fn int(&mut self) -> Result<i64, StmtParseError> {
        let neg = self.eat("-");
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                if neg {
                    Ok(n.wrapping_neg())
                } else if n < 0 {
                    self.err("integer literal out of range")
                } else {
                    Ok(n)
                }
            }
            _ => self.err("expected an integer"),
        }
    }

    fn cmp(&mut self) -> Result<CmpOp, StmtParseError> {
        let op = match self.peek() {
            Some(Tok::Sym("<")) => CmpOp::Lt,
            Some(Tok::Sym("<=")) => CmpOp::Le,
            Some(Tok::Sym("==")) | Some(Tok::Sym("=")) => CmpOp::Eq,
            Some(Tok::Sym("!=")) => CmpOp::Ne,
            Some(Tok::Sym(">=")) => CmpOp::Ge,
            Some(Tok::Sym(">")) => CmpOp::Gt,
            _ => return self.err("expected a comparison"),
        };
        self.pos += 1;
        Ok(op)
    }

    fn stmt(&mut self) -> Result<Stmt, StmtParseError> {
        match self.peek() {
            Some(Tok::Ident(k)) if k == "assume" || k == "assert" => {
                let assume = k == "assume";
                self.pos += 1;
                self.expect("(")?;
                let var = self.var()?;
                let op = self.cmp()?;
                let value = self.int()?;
                self.expect(")")?;
                let g = Guard::new(var, op, value);
                Ok(if assume {
                    Stmt::Assume(g)
                } else {
                    Stmt::Assert(g)
                })
            }
            _ => {
                let x = self.var()?;
                self.expect("=")?;
                let rhs = match self.peek() {
                    Some(Tok::Ident(_)) => {
                        let y = self.var()?;
                        let op = match self.peek() {
                            Some(Tok::Sym("+")) => Some(BinOp::Add),
                            Some(Tok::Sym("-")) => Some(BinOp::Sub),
                            Some(Tok::Sym("*")) => Some(BinOp::Mul),
                            _ => None,
                        };
                        match op {
                            None => Rhs::Var(y),
                            Some(op) => {
                                self.pos += 1;
                                let z = match self.peek() {
                                    Some(Tok::Ident(_)) => Operand::Var(self.var()?),
                                    _ => Operand::Const(self.int()?),
                                };
                                Rhs::Bin(y, op, z)
                            }
                        }
                    }
                    _ => Rhs::Const(self.int()?),
                };
                Ok(Stmt::Assign(x, rhs))
            }
        }
    }
}

/// Parses a `;`-separated statement list (a trailing `;` is allowed).
/// Columns in errors are 1-based offsets into `text`.
pub fn parse_stmts<F>(text: &str, mut resolve: F) -> Result<Vec<Stmt>, StmtParseError>
where
    F: FnMut(&str) -> Option<VarId>,
{
    let toks = tokenize(text)?;
    let mut p = StmtParser {
        toks,
        pos: 0,
        end: text.len(),
        resolve: &mut resolve,
    };
    let mut out = Vec::new();
    while p.peek().is_some() {
        if p.eat(";") {
            continue;
        }
        out.push(p.stmt()?);
        if p.peek().is_some() {
            p.expect(";")?;
        }
    }
    Ok(out)
}

/// A lattice of abstract states over a fixed set of variables, together
/// with the transformers `τ_v` and checks `φ_v`.
pub trait AbstractDomain: Clone + Eq + Hash + fmt::Debug {
    const NAME: &'static str;

    fn bottom(var_count: usize) -> Self;
    /// Every variable unconstrained.
    fn top(var_count: usize) -> Self;
    fn is_bottom(&self) -> bool;
    fn join(&self, other: &Self) -> Self;
    fn leq(&self, other: &Self) -> bool;
    fn widen(&self, next: &Self) -> Self;
    fn assign(&self, x: VarId, rhs: &Rhs) -> Self;
    /// Refines by the guard; may produce bottom.
    fn assume(&self, g: &Guard) -> Self;
    /// Whether every store described by the state satisfies `g`.
    fn entails(&self, g: &Guard) -> bool;
    /// Whether the concrete store is described by the state.
    fn contains(&self, store: &[i64]) -> bool;
    /// Number of variables the state tracks (zero for bottom).
    fn width(&self) -> usize;

    fn apply(&self, s: &Stmt) -> Self {
        match s {
            Stmt::Assign(x, rhs) => self.assign(*x, rhs),
            Stmt::Assume(g) => self.assume(g),
            Stmt::Assert(_) => self.clone(),
        }
    }

    /// `τ_v`: the statements in order. Asserts do not refine.
    fn transfer(&self, p: &NodeProgram) -> Self {
        p.stmts().iter().fold(self.clone(), |s, st| s.apply(st))
    }

    /// `φ_v`: replays the statements and requires every assert to be
    /// entailed at its point. Bottom entails everything.
    fn check(&self, p: &NodeProgram) -> bool {
        let mut s = self.clone();
        for st in p.stmts() {
            if let Stmt::Assert(g) = st {
                if !s.entails(g) {
                    return false;
                }
            }
            s = s.apply(st);
        }
        true
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DomainKind {
    Interval,
    Constant,
}

impl DomainKind {
    pub fn name(self) -> &'static str {
        match self {
            DomainKind::Interval => IntervalState::NAME,
            DomainKind::Constant => ConstState::NAME,
        }
    }
}

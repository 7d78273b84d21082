use std::fmt;

use super::{AbstractDomain, BinOp, CmpOp, Guard, Operand, Rhs, VarId};

/// An interval endpoint. Variant order gives `NegInf < Finite(_) < PosInf`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Bound {
    NegInf,
    Finite(i64),
    PosInf,
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::NegInf => f.write_str("-oo"),
            Bound::Finite(x) => write!(f, "{x}"),
            Bound::PosInf => f.write_str("+oo"),
        }
    }
}

// Exact extended integers used while computing bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Ext {
    NegInf,
    Fin(i128),
    PosInf,
}

impl Ext {
    fn of(b: Bound) -> Ext {
        match b {
            Bound::NegInf => Ext::NegInf,
            Bound::Finite(x) => Ext::Fin(x as i128),
            Bound::PosInf => Ext::PosInf,
        }
    }

    fn add(self, o: Ext) -> Ext {
        match (self, o) {
            (Ext::Fin(a), Ext::Fin(b)) => Ext::Fin(a + b),
            (Ext::NegInf, Ext::PosInf) | (Ext::PosInf, Ext::NegInf) => {
                unreachable!("lower and upper infinities never meet")
            }
            (Ext::NegInf, _) | (_, Ext::NegInf) => Ext::NegInf,
            _ => Ext::PosInf,
        }
    }

    fn neg(self) -> Ext {
        match self {
            Ext::NegInf => Ext::PosInf,
            Ext::Fin(a) => Ext::Fin(-a),
            Ext::PosInf => Ext::NegInf,
        }
    }

    fn signum(self) -> i32 {
        match self {
            Ext::NegInf => -1,
            Ext::Fin(a) => a.signum() as i32,
            Ext::PosInf => 1,
        }
    }

    // 0 · ∞ = 0
    fn mul(self, o: Ext) -> Ext {
        match (self, o) {
            (Ext::Fin(a), Ext::Fin(b)) => Ext::Fin(a * b),
            _ => match self.signum() * o.signum() {
                0 => Ext::Fin(0),
                s if s > 0 => Ext::PosInf,
                _ => Ext::NegInf,
            },
        }
    }

    /// Rounds down into a lower bound.
    fn lower(self) -> Bound {
        match self {
            Ext::Fin(a) if a > i64::MAX as i128 => Bound::Finite(i64::MAX),
            Ext::Fin(a) if a < i64::MIN as i128 => Bound::NegInf,
            Ext::Fin(a) => Bound::Finite(a as i64),
            Ext::NegInf => Bound::NegInf,
            Ext::PosInf => unreachable!("lower bound at +oo"),
        }
    }

    /// Rounds up into an upper bound.
    fn upper(self) -> Bound {
        match self {
            Ext::Fin(a) if a > i64::MAX as i128 => Bound::PosInf,
            Ext::Fin(a) if a < i64::MIN as i128 => Bound::Finite(i64::MIN),
            Ext::Fin(a) => Bound::Finite(a as i64),
            Ext::PosInf => Bound::PosInf,
            Ext::NegInf => unreachable!("upper bound at -oo"),
        }
    }
}

/// A non-empty interval. `lo` is never `+oo` and `hi` never `-oo`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: Bound,
    hi: Bound,
}

impl Interval {
    pub const TOP: Interval = Interval {
        lo: Bound::NegInf,
        hi: Bound::PosInf,
    };

    /// `None` when the bounds describe the empty set.
    pub fn new(lo: Bound, hi: Bound) -> Option<Interval> {
        (lo <= hi && lo != Bound::PosInf && hi != Bound::NegInf).then_some(Interval { lo, hi })
    }

    pub fn constant(c: i64) -> Interval {
        Interval {
            lo: Bound::Finite(c),
            hi: Bound::Finite(c),
        }
    }

    pub fn range(lo: i64, hi: i64) -> Interval {
        Interval::new(Bound::Finite(lo), Bound::Finite(hi)).expect("lo <= hi")
    }

    pub fn lo(&self) -> Bound {
        self.lo
    }

    pub fn hi(&self) -> Bound {
        self.hi
    }

    pub fn contains(&self, x: i64) -> bool {
        self.lo <= Bound::Finite(x) && Bound::Finite(x) <= self.hi
    }

    pub fn join(&self, o: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(o.lo),
            hi: self.hi.max(o.hi),
        }
    }

    pub fn meet(&self, o: &Interval) -> Option<Interval> {
        Interval::new(self.lo.max(o.lo), self.hi.min(o.hi))
    }

    pub fn leq(&self, o: &Interval) -> bool {
        o.lo <= self.lo && self.hi <= o.hi
    }

    pub fn widen(&self, next: &Interval) -> Interval {
        Interval {
            lo: if next.lo < self.lo {
                Bound::NegInf
            } else {
                self.lo
            },
            hi: if next.hi > self.hi {
                Bound::PosInf
            } else {
                self.hi
            },
        }
    }

    pub fn add(&self, o: &Interval) -> Interval {
        Interval {
            lo: Ext::of(self.lo).add(Ext::of(o.lo)).lower(),
            hi: Ext::of(self.hi).add(Ext::of(o.hi)).upper(),
        }
    }

    pub fn sub(&self, o: &Interval) -> Interval {
        Interval {
            lo: Ext::of(self.lo).add(Ext::of(o.hi).neg()).lower(),
            hi: Ext::of(self.hi).add(Ext::of(o.lo).neg()).upper(),
        }
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        let (a, b) = (Ext::of(self.lo), Ext::of(self.hi));
        let (c, d) = (Ext::of(o.lo), Ext::of(o.hi));
        let cands = [a.mul(c), a.mul(d), b.mul(c), b.mul(d)];
        Interval {
            lo: cands.iter().min().unwrap().lower(),
            hi: cands.iter().max().unwrap().upper(),
        }
    }

    pub fn apply(&self, op: BinOp, o: &Interval) -> Interval {
        match op {
            BinOp::Add => self.add(o),
            BinOp::Sub => self.sub(o),
            BinOp::Mul => self.mul(o),
        }
    }

    /// Refines by `x ▷ c`; `None` when nothing is left.
    pub fn restrict(&self, op: CmpOp, c: i64) -> Option<Interval> {
        let c128 = c as i128;
        let at_most = |v: i128| Interval::new(Bound::NegInf, Ext::Fin(v).upper_clamped());
        let at_least = |v: i128| Interval::new(Ext::Fin(v).lower_clamped(), Bound::PosInf);
        match op {
            CmpOp::Lt => self.meet(&at_most(c128 - 1)?),
            CmpOp::Le => self.meet(&at_most(c128)?),
            CmpOp::Ge => self.meet(&at_least(c128)?),
            CmpOp::Gt => self.meet(&at_least(c128 + 1)?),
            CmpOp::Eq => self.meet(&Interval::constant(c)),
            CmpOp::Ne => {
                let here = Bound::Finite(c);
                match (self.lo == here, self.hi == here) {
                    (true, true) => None,
                    (true, false) => Interval::new(Bound::Finite(c + 1), self.hi),
                    // c = i64::MIN here only if lo = -oo, and nothing in i64 lies below
                    (false, true) => Interval::new(self.lo, Bound::Finite(c.checked_sub(1)?)),
                    (false, false) => Some(*self),
                }
            }
        }
    }

    /// Whether every value satisfies `x ▷ c`.
    pub fn entails(&self, op: CmpOp, c: i64) -> bool {
        let c = Bound::Finite(c);
        match op {
            CmpOp::Lt => self.hi < c,
            CmpOp::Le => self.hi <= c,
            CmpOp::Eq => self.lo == c && self.hi == c,
            CmpOp::Ne => c < self.lo || self.hi < c,
            CmpOp::Ge => self.lo >= c,
            CmpOp::Gt => self.lo > c,
        }
    }
}

impl Ext {
    // Guard thresholds outside i64 mean "no such value" rather than
    // "unbounded"; these clamps produce an empty meet in that case.
    fn upper_clamped(self) -> Bound {
        match self {
            Ext::Fin(a) if a < i64::MIN as i128 => Bound::NegInf,
            other => other.upper(),
        }
    }

    fn lower_clamped(self) -> Bound {
        match self {
            Ext::Fin(a) if a > i64::MAX as i128 => Bound::PosInf,
            other => other.lower(),
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Interval environment: bottom, or one interval per variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntervalState(Option<Vec<Interval>>);

impl IntervalState {
    pub fn from_intervals(vars: Vec<Interval>) -> Self {
        IntervalState(Some(vars))
    }

    pub fn get(&self, x: VarId) -> Option<Interval> {
        self.0.as_ref().map(|v| v[x.index()])
    }

    fn eval(vars: &[Interval], o: Operand) -> Interval {
        match o {
            Operand::Var(y) => vars[y.index()],
            Operand::Const(c) => Interval::constant(c),
        }
    }
}

impl fmt::Display for IntervalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            None => f.write_str("_|_"),
            Some(vars) => {
                f.write_str("{")?;
                for (i, iv) in vars.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "#{i}: {iv}")?;
                }
                f.write_str("}")
            }
        }
    }
}

impl AbstractDomain for IntervalState {
    const NAME: &'static str = "interval";

    fn bottom(_var_count: usize) -> Self {
        IntervalState(None)
    }

    fn top(var_count: usize) -> Self {
        IntervalState(Some(vec![Interval::TOP; var_count]))
    }

    fn is_bottom(&self) -> bool {
        self.0.is_none()
    }

    fn join(&self, other: &Self) -> Self {
        match (&self.0, &other.0) {
            (None, _) => other.clone(),
            (_, None) => self.clone(),
            (Some(a), Some(b)) => {
                debug_assert_eq!(a.len(), b.len());
                IntervalState(Some(a.iter().zip(b).map(|(x, y)| x.join(y)).collect()))
            }
        }
    }

    fn leq(&self, other: &Self) -> bool {
        match (&self.0, &other.0) {
            (None, _) => true,
            (_, None) => false,
            (Some(a), Some(b)) => a.iter().zip(b).all(|(x, y)| x.leq(y)),
        }
    }

    fn widen(&self, next: &Self) -> Self {
        match (&self.0, &next.0) {
            (None, _) => next.clone(),
            (_, None) => self.clone(),
            (Some(a), Some(b)) => {
                IntervalState(Some(a.iter().zip(b).map(|(x, y)| x.widen(y)).collect()))
            }
        }
    }

    fn assign(&self, x: VarId, rhs: &Rhs) -> Self {
        let Some(vars) = &self.0 else {
            return self.clone();
        };
        let value = match *rhs {
            Rhs::Const(c) => Interval::constant(c),
            Rhs::Var(y) => vars[y.index()],
            Rhs::Bin(y, op, o) => vars[y.index()].apply(op, &Self::eval(vars, o)),
        };
        let mut vars = vars.clone();
        vars[x.index()] = value;
        IntervalState(Some(vars))
    }

    fn assume(&self, g: &Guard) -> Self {
        let Some(vars) = &self.0 else {
            return self.clone();
        };
        match vars[g.var.index()].restrict(g.op, g.value) {
            None => IntervalState(None),
            Some(iv) => {
                let mut vars = vars.clone();
                vars[g.var.index()] = iv;
                IntervalState(Some(vars))
            }
        }
    }

    fn entails(&self, g: &Guard) -> bool {
        match &self.0 {
            None => true,
            Some(vars) => vars[g.var.index()].entails(g.op, g.value),
        }
    }

    fn contains(&self, store: &[i64]) -> bool {
        match &self.0 {
            None => false,
            Some(vars) => vars.iter().zip(store).all(|(iv, &x)| iv.contains(x)),
        }
    }

    fn width(&self) -> usize {
        self.0.as_ref().map_or(0, Vec::len)
    }
}

use std::fmt;

use super::{AbstractDomain, CmpOp, Guard, Operand, Rhs, VarId};

/// A variable's value in the flat constant lattice (bottom lives at the
/// state level).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Flat {
    Const(i64),
    Top,
}

impl Flat {
    pub fn join(self, o: Flat) -> Flat {
        if self == o {
            self
        } else {
            Flat::Top
        }
    }

    pub fn leq(self, o: Flat) -> bool {
        o == Flat::Top || self == o
    }

    pub fn contains(self, x: i64) -> bool {
        match self {
            Flat::Const(c) => c == x,
            Flat::Top => true,
        }
    }
}

impl fmt::Display for Flat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flat::Const(c) => write!(f, "{c}"),
            Flat::Top => f.write_str("T"),
        }
    }
}

/// Constant-propagation environment: bottom, or one flat value per variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConstState(Option<Vec<Flat>>);

impl ConstState {
    pub fn from_values(vars: Vec<Flat>) -> Self {
        ConstState(Some(vars))
    }

    pub fn get(&self, x: VarId) -> Option<Flat> {
        self.0.as_ref().map(|v| v[x.index()])
    }
}

impl fmt::Display for ConstState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            None => f.write_str("_|_"),
            Some(vars) => {
                f.write_str("{")?;
                for (i, v) in vars.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "#{i}: {v}")?;
                }
                f.write_str("}")
            }
        }
    }
}

impl AbstractDomain for ConstState {
    const NAME: &'static str = "const";

    fn bottom(_var_count: usize) -> Self {
        ConstState(None)
    }

    fn top(var_count: usize) -> Self {
        ConstState(Some(vec![Flat::Top; var_count]))
    }

    fn is_bottom(&self) -> bool {
        self.0.is_none()
    }

    fn join(&self, other: &Self) -> Self {
        match (&self.0, &other.0) {
            (None, _) => other.clone(),
            (_, None) => self.clone(),
            (Some(a), Some(b)) => {
                ConstState(Some(a.iter().zip(b).map(|(x, y)| x.join(*y)).collect()))
            }
        }
    }

    fn leq(&self, other: &Self) -> bool {
        match (&self.0, &other.0) {
            (None, _) => true,
            (_, None) => false,
            (Some(a), Some(b)) => a.iter().zip(b).all(|(x, y)| x.leq(*y)),
        }
    }

    /// The lattice has height two, so joining already terminates.
    fn widen(&self, next: &Self) -> Self {
        self.join(next)
    }

    fn assign(&self, x: VarId, rhs: &Rhs) -> Self {
        let Some(vars) = &self.0 else {
            return self.clone();
        };
        let value = match *rhs {
            Rhs::Const(c) => Flat::Const(c),
            Rhs::Var(y) => vars[y.index()],
            Rhs::Bin(y, op, o) => {
                let rhs = match o {
                    Operand::Var(z) => vars[z.index()],
                    Operand::Const(c) => Flat::Const(c),
                };
                match (vars[y.index()], rhs) {
                    (Flat::Const(a), Flat::Const(b)) => {
                        op.eval(a, b).map_or(Flat::Top, Flat::Const)
                    }
                    _ => Flat::Top,
                }
            }
        };
        let mut vars = vars.clone();
        vars[x.index()] = value;
        ConstState(Some(vars))
    }

    fn assume(&self, g: &Guard) -> Self {
        let Some(vars) = &self.0 else {
            return self.clone();
        };
        match vars[g.var.index()] {
            Flat::Const(k) if !g.holds(k) => ConstState(None),
            Flat::Const(_) => self.clone(),
            Flat::Top if g.op == CmpOp::Eq => {
                let mut vars = vars.clone();
                vars[g.var.index()] = Flat::Const(g.value);
                ConstState(Some(vars))
            }
            Flat::Top => self.clone(),
        }
    }

    fn entails(&self, g: &Guard) -> bool {
        match &self.0 {
            None => true,
            Some(vars) => match vars[g.var.index()] {
                Flat::Const(k) => g.holds(k),
                Flat::Top => false,
            },
        }
    }

    fn contains(&self, store: &[i64]) -> bool {
        match &self.0 {
            None => false,
            Some(vars) => vars.iter().zip(store).all(|(v, &x)| v.contains(x)),
        }
    }

    fn width(&self) -> usize {
        self.0.as_ref().map_or(0, Vec::len)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{BinOp, NodeProgram, Stmt};
    use proptest::prelude::*;

    const X: VarId = VarId(0);
    const Y: VarId = VarId(1);

    fn st(v: &[Flat]) -> ConstState {
        ConstState::from_values(v.to_vec())
    }

    #[test]
    fn flat_join() {
        use Flat::*;
        assert_eq!(
            st(&[Const(1), Const(2)]).join(&st(&[Const(1), Const(3)])),
            st(&[Const(1), Top])
        );
        assert_eq!(
            ConstState::bottom(2).join(&st(&[Top, Const(0)])),
            st(&[Top, Const(0)])
        );
        assert_eq!(st(&[Const(0)]).widen(&st(&[Const(1)])), st(&[Top]));
    }

    #[test]
    fn transfer_and_check() {
        let p = NodeProgram::new(vec![
            Stmt::Assign(X, Rhs::Const(4)),
            Stmt::Assign(Y, Rhs::Bin(X, BinOp::Mul, Operand::Var(X))),
            Stmt::Assert(Guard::new(Y, CmpOp::Eq, 16)),
        ]);
        let out = ConstState::top(2).transfer(&p);
        assert_eq!(out, st(&[Flat::Const(4), Flat::Const(16)]));
        assert!(ConstState::top(2).check(&p));
        let ge = NodeProgram::new(vec![Stmt::Assert(Guard::new(X, CmpOp::Ge, 10))]);
        assert!(!ConstState::top(2).check(&ge));
        assert!(ConstState::bottom(2).check(&ge));
    }

    #[test]
    fn assume_refines() {
        let top = ConstState::top(1);
        assert_eq!(
            top.assume(&Guard::new(X, CmpOp::Eq, 3)),
            st(&[Flat::Const(3)])
        );
        assert_eq!(top.assume(&Guard::new(X, CmpOp::Le, 3)), top);
        assert!(st(&[Flat::Const(5)])
            .assume(&Guard::new(X, CmpOp::Le, 3))
            .is_bottom());
    }

    #[test]
    fn overflow_goes_to_top() {
        let s = st(&[Flat::Const(i64::MAX)]);
        let out = s.assign(X, &Rhs::Bin(X, BinOp::Add, Operand::Const(1)));
        assert_eq!(out, st(&[Flat::Top]));
    }

    fn arb_state() -> impl Strategy<Value = ConstState> {
        let flat = prop_oneof![Just(Flat::Top), (-2i64..3).prop_map(Flat::Const)];
        prop_oneof![
            1 => Just(ConstState::bottom(2)),
            5 => proptest::collection::vec(flat, 2).prop_map(ConstState::from_values),
        ]
    }

    proptest! {
        #[test]
        fn lattice_laws(a in arb_state(), b in arb_state(), c in arb_state()) {
            prop_assert_eq!(a.join(&b), b.join(&a));
            prop_assert_eq!(a.join(&b).join(&c), a.join(&b.join(&c)));
            prop_assert_eq!(a.join(&a), a.clone());
            prop_assert!(a.leq(&a.join(&b)) && b.leq(&a.widen(&b)));
            if a.leq(&b) && b.leq(&a) { prop_assert_eq!(&a, &b); }
            if a.leq(&b) && b.leq(&c) { prop_assert!(a.leq(&c)); }
        }

        #[test]
        fn transfer_is_monotone(a in arb_state(), b in arb_state(), c in -2i64..3, gop in 0usize..6) {
            let cmp = [CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ne, CmpOp::Ge, CmpOp::Gt][gop];
            let p = NodeProgram::new(vec![
                Stmt::Assign(X, Rhs::Bin(Y, BinOp::Sub, Operand::Var(X))),
                Stmt::Assume(Guard::new(X, cmp, c)),
            ]);
            let hi = a.join(&b);
            prop_assert!(a.transfer(&p).leq(&hi.transfer(&p)));
        }
    }
}

//! Time-bounded path properties over linear population predicates.

mod parse;
mod regions;

use std::fmt;

pub use parse::parse_property;
pub use regions::{
    BoundRow, compile_regions, compile_regions_with_limit, continuity_correct, HalfSpace, Polytope, Region,
    RegionSet, SignedRegion, DEFAULT_TERM_LIMIT,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
            Comparator::Eq => "=",
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparator::Lt => lhs < rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Gt => lhs > rhs,
            Comparator::Ge => lhs >= rhs,
            Comparator::Eq => lhs == rhs,
        }
    }
}

/// `coefficients . x  <cmp>  bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicProp {
    pub coefficients: Vec<f64>,
    pub comparator: Comparator,
    pub bound: f64,
}

impl AtomicProp {
    pub fn value(&self, state: &[f64]) -> f64 {
        self.coefficients.iter().zip(state).map(|(a, x)| a * x).sum()
    }

    /// Exact integer semantics.
    pub fn holds(&self, state: &[i64]) -> bool {
        let v: f64 = self
            .coefficients
            .iter()
            .zip(state)
            .map(|(a, &x)| a * x as f64)
            .sum();
        self.comparator.holds(v, self.bound)
    }

    /// All coefficients integral, so the form only takes integer values on
    /// integer states.
    pub fn is_integer_form(&self) -> bool {
        self.coefficients.iter().all(|a| a.fract() == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateFormula {
    True,
    Atom(AtomicProp),
    Not(Box<StateFormula>),
    And(Box<StateFormula>, Box<StateFormula>),
}

impl StateFormula {
    pub fn not(f: StateFormula) -> Self {
        match f {
            StateFormula::Not(inner) => *inner,
            other => StateFormula::Not(Box::new(other)),
        }
    }

    pub fn and(a: StateFormula, b: StateFormula) -> Self {
        StateFormula::And(Box::new(a), Box::new(b))
    }

    /// Derived: `!( !a & !b )`.
    pub fn or(a: StateFormula, b: StateFormula) -> Self {
        Self::not(Self::and(Self::not(a), Self::not(b)))
    }

    pub fn is_true(&self) -> bool {
        matches!(self, StateFormula::True)
    }

    /// Exact integer semantics.
    pub fn holds(&self, state: &[i64]) -> bool {
        match self {
            StateFormula::True => true,
            StateFormula::Atom(a) => a.holds(state),
            StateFormula::Not(f) => !f.holds(state),
            StateFormula::And(a, b) => a.holds(state) && b.holds(state),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            StateFormula::True | StateFormula::Atom(_) => 1,
            StateFormula::Not(f) => 1 + f.depth(),
            StateFormula::And(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    pub fn render(&self, species: &[String]) -> String {
        match self {
            StateFormula::True => "tt".into(),
            StateFormula::Atom(a) => {
                let mut lhs = String::new();
                for (i, &c) in a.coefficients.iter().enumerate() {
                    if c == 0.0 {
                        continue;
                    }
                    let sign = if c < 0.0 { "-" } else if lhs.is_empty() { "" } else { "+" };
                    let mag = c.abs();
                    let coef = if mag == 1.0 { String::new() } else { format!("{mag}*") };
                    lhs.push_str(&format!("{sign}{coef}{}", species[i]));
                }
                format!("{lhs} {} {}", a.comparator.symbol(), a.bound)
            }
            StateFormula::Not(f) => format!("!({})", f.render(species)),
            StateFormula::And(a, b) => format!("({}) & ({})", a.render(species), b.render(species)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    Until,
    Eventually,
    Globally,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathFormula {
    pub kind: PathKind,
    /// `tt` for eventually/globally.
    pub left: StateFormula,
    pub right: StateFormula,
    pub horizon: f64,
    /// Set when a globally formula was rewritten: the reported probability is
    /// `1 - P(tt U !phi)`.
    pub negated: bool,
}

impl PathFormula {
    pub fn until(left: StateFormula, right: StateFormula, horizon: f64) -> Self {
        Self {
            kind: PathKind::Until,
            left,
            right,
            horizon,
            negated: false,
        }
    }
}

/// `F phi -> tt U phi`; `G phi -> negated (tt U !phi)`; until unchanged.
pub fn rewrite_to_until(formula: &PathFormula) -> PathFormula {
    match formula.kind {
        PathKind::Until => formula.clone(),
        PathKind::Eventually => PathFormula {
            kind: PathKind::Until,
            left: StateFormula::True,
            right: formula.right.clone(),
            horizon: formula.horizon,
            negated: formula.negated,
        },
        PathKind::Globally => PathFormula {
            kind: PathKind::Until,
            left: StateFormula::True,
            right: StateFormula::not(formula.right.clone()),
            horizon: formula.horizon,
            negated: !formula.negated,
        },
    }
}

impl fmt::Display for PathKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PathKind::Until => "U",
            PathKind::Eventually => "F",
            PathKind::Globally => "G",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(c: Vec<f64>, cmp: Comparator, b: f64) -> StateFormula {
        StateFormula::Atom(AtomicProp {
            coefficients: c,
            comparator: cmp,
            bound: b,
        })
    }

    #[test]
    fn rewrites() {
        let phi = atom(vec![1.0], Comparator::Eq, 0.0);
        let f = PathFormula {
            kind: PathKind::Eventually,
            left: StateFormula::True,
            right: phi.clone(),
            horizon: 4.0,
            negated: false,
        };
        let u = rewrite_to_until(&f);
        assert_eq!(u, PathFormula::until(StateFormula::True, phi.clone(), 4.0));

        let g = PathFormula {
            kind: PathKind::Globally,
            ..f.clone()
        };
        let gu = rewrite_to_until(&g);
        assert!(gu.negated);
        assert_eq!(gu.right, StateFormula::not(phi.clone()));
        assert_eq!(rewrite_to_until(&gu), gu);

        let until = PathFormula::until(phi.clone(), phi, 1.0);
        assert_eq!(rewrite_to_until(&until), until);
    }

    #[test]
    fn integer_semantics() {
        let eq0 = atom(vec![0.0, 1.0, 0.0], Comparator::Eq, 0.0);
        assert!(eq0.holds(&[35, 0, 15]));
        let lt = atom(vec![0.0, 1.0, -1.0], Comparator::Lt, 0.0);
        assert!(lt.holds(&[0, 2, 3]));
        assert!(!lt.holds(&[0, 3, 3]));
        let or = StateFormula::or(eq0.clone(), lt);
        assert!(or.holds(&[1, 0, 9]));
        assert!(!or.holds(&[1, 4, 1]));
    }
}

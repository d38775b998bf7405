//! Concrete syntax:
//!
//! ```text
//! P=? [ <sf> U[0,<t>] <sf> ]   P=? [ F[0,<t>] <sf> ]   P=? [ G[0,<t>] <sf> ]
//! <sf> := tt | ff | <linexpr> <cmp> <linexpr> | !<sf> | <sf> & <sf> | <sf> | <sf> | ( <sf> )
//! ```
//!
//! Species may be written by name, or with an `X_` prefix (`X_I` for species
//! `I`, `X_7` for species `X7`).

use super::{AtomicProp, Comparator, PathFormula, PathKind, StateFormula};
use crate::error::{Error, Result};
use crate::lexer::{tokenize, Cursor, Tok};
use crate::model::ReactionNetwork;

pub fn parse_property(text: &str, network: &ReactionNetwork) -> Result<PathFormula> {
    let flat = text.replace(['\n', '\r'], " ");
    let toks = tokenize(&flat, 1)?;
    let mut p = PropertyParser {
        cur: Cursor::new(&toks, 1, flat.chars().count() + 1),
        network,
    };
    let f = p.path()?;
    if !p.cur.at_end() {
        return Err(p.cur.error("unexpected trailing input"));
    }
    Ok(f)
}

struct PropertyParser<'a> {
    cur: Cursor<'a>,
    network: &'a ReactionNetwork,
}

impl PropertyParser<'_> {
    fn path(&mut self) -> Result<PathFormula> {
        match self.cur.ident()? {
            "P" => {}
            _ => return Err(Error::syntax(1, 1, "property must start with `P=?`")),
        }
        self.cur.expect("=?")?;
        self.cur.expect("[")?;
        let (kind, left, right, horizon) = if self.at_temporal("F") || self.at_temporal("G") {
            let kind = match self.cur.ident()? {
                "F" => PathKind::Eventually,
                _ => PathKind::Globally,
            };
            let horizon = self.interval()?;
            let right = self.or()?;
            (kind, StateFormula::True, right, horizon)
        } else {
            let left = self.or()?;
            if !self.at_temporal("U") {
                return Err(self.cur.error("expected `U[0,t]`"));
            }
            self.cur.ident()?;
            let horizon = self.interval()?;
            let right = self.or()?;
            (PathKind::Until, left, right, horizon)
        };
        self.cur.expect("]")?;
        Ok(PathFormula {
            kind,
            left,
            right,
            horizon,
            negated: false,
        })
    }

    fn at_temporal(&self, op: &str) -> bool {
        matches!(self.cur.peek(), Some(Tok::Ident(s)) if s == op)
            && matches!(self.cur.peek_at(1), Some(Tok::Sym("[")))
    }

    fn interval(&mut self) -> Result<f64> {
        self.cur.expect("[")?;
        let (l, c) = self.cur.position();
        let lower = self.cur.number()?;
        if lower != 0.0 {
            return Err(Error::Unsupported(format!(
                "lower time bound {lower} at line {l}, column {c}: only [0,t] intervals are supported"
            )));
        }
        self.cur.expect(",")?;
        let (l, c) = self.cur.position();
        let upper = self.cur.number()?;
        if !(upper > 0.0 && upper.is_finite()) {
            return Err(Error::syntax(l, c, "time horizon must be positive"));
        }
        self.cur.expect("]")?;
        Ok(upper)
    }

    fn or(&mut self) -> Result<StateFormula> {
        let mut acc = self.and()?;
        while self.cur.eat("|") {
            acc = StateFormula::or(acc, self.and()?);
        }
        Ok(acc)
    }

    fn and(&mut self) -> Result<StateFormula> {
        let mut acc = self.unary()?;
        while self.cur.eat("&") {
            acc = StateFormula::and(acc, self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<StateFormula> {
        if self.cur.eat("!") {
            return Ok(StateFormula::not(self.unary()?));
        }
        match self.cur.peek() {
            Some(Tok::Sym("(")) => {
                self.cur.next();
                let f = self.or()?;
                self.cur.expect(")")?;
                Ok(f)
            }
            Some(Tok::Ident(s)) if s == "tt" || s == "true" => {
                self.cur.next();
                Ok(StateFormula::True)
            }
            Some(Tok::Ident(s)) if s == "ff" || s == "false" => {
                self.cur.next();
                Ok(StateFormula::not(StateFormula::True))
            }
            _ => self.comparison(),
        }
    }

    fn comparison(&mut self) -> Result<StateFormula> {
        let n = self.network.n_species();
        let (lhs, lc) = self.linexpr()?;
        let cmp = match self.cur.next() {
            Some(Tok::Sym("<")) => Some(Comparator::Lt),
            Some(Tok::Sym("<=")) => Some(Comparator::Le),
            Some(Tok::Sym(">")) => Some(Comparator::Gt),
            Some(Tok::Sym(">=")) => Some(Comparator::Ge),
            Some(Tok::Sym("=")) => Some(Comparator::Eq),
            Some(Tok::Sym("!=")) => None,
            _ => {
                let (l, c) = self.cur.prev_position();
                return Err(Error::syntax(l, c, "expected a comparison operator"));
            }
        };
        let (rhs, rc) = self.linexpr()?;
        let coefficients: Vec<f64> = (0..n).map(|i| lhs[i] - rhs[i]).collect();
        if coefficients.iter().all(|&a| a == 0.0) {
            let (l, c) = self.cur.prev_position();
            return Err(Error::syntax(l, c, "comparison does not mention any species"));
        }
        let atom = |comparator| {
            StateFormula::Atom(AtomicProp {
                coefficients: coefficients.clone(),
                comparator,
                bound: rc - lc,
            })
        };
        Ok(match cmp {
            Some(c) => atom(c),
            None => StateFormula::not(atom(Comparator::Eq)),
        })
    }

    /// Returns (species coefficients, constant).
    fn linexpr(&mut self) -> Result<(Vec<f64>, f64)> {
        let mut coeffs = vec![0.0; self.network.n_species()];
        let mut constant = 0.0;
        let mut sign = if self.cur.eat("-") {
            -1.0
        } else {
            self.cur.eat("+");
            1.0
        };
        loop {
            match self.cur.peek() {
                Some(Tok::Number(v)) => {
                    let v = *v;
                    self.cur.next();
                    let times = self.cur.eat("*");
                    if times || (matches!(self.cur.peek(), Some(Tok::Ident(_))) && !self.at_temporal("U")) {
                        let s = self.species()?;
                        coeffs[s] += sign * v;
                    } else {
                        constant += sign * v;
                    }
                }
                Some(Tok::Ident(_)) => {
                    let s = self.species()?;
                    coeffs[s] += sign;
                }
                _ => return Err(self.cur.error("expected a species name or number")),
            }
            if self.cur.eat("+") {
                sign = 1.0;
            } else if self.cur.eat("-") {
                sign = -1.0;
            } else {
                return Ok((coeffs, constant));
            }
        }
    }

    fn species(&mut self) -> Result<usize> {
        let name = self.cur.ident()?;
        resolve_species(self.network, name).ok_or_else(|| Error::UnknownName {
            kind: "species",
            name: name.to_string(),
        })
    }
}

fn resolve_species(network: &ReactionNetwork, name: &str) -> Option<usize> {
    network.species_index(name).or_else(|| {
        let rest = name.strip_prefix("X_")?;
        network
            .species_index(rest)
            .or_else(|| network.species_index(&format!("X{rest}")))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::builtin_model;

    #[test]
    fn until_with_horizon() {
        let net = builtin_model("sir").unwrap();
        let f = parse_property("P=? [ (X_I < 30) U[0,10] (X_I = 0) ]", &net).unwrap();
        assert_eq!(f.kind, PathKind::Until);
        assert_eq!(f.horizon, 10.0);
        assert_eq!(
            f.right,
            StateFormula::Atom(AtomicProp {
                coefficients: vec![0.0, 1.0, 0.0],
                comparator: Comparator::Eq,
                bound: 0.0
            })
        );
    }

    #[test]
    fn eventually_has_true_left() {
        let net = builtin_model("sir").unwrap();
        let f = parse_property("P=? [ F[0,4] (X_I < X_R) ]", &net).unwrap();
        assert_eq!(f.kind, PathKind::Eventually);
        assert!(f.left.is_true());
        match f.right {
            StateFormula::Atom(a) => {
                assert_eq!(a.coefficients, vec![0.0, 1.0, -1.0]);
                assert_eq!(a.bound, 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nonzero_lower_bound_is_unsupported() {
        let net = builtin_model("sir").unwrap();
        let err = parse_property("P=? [ (X_S>1) U[2,4] (X_I < X_R) ]", &net).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn unknown_species() {
        let net = builtin_model("sir").unwrap();
        let err = parse_property("P=? [ F[0,4] X_Q > 2 ]", &net).unwrap_err();
        assert_eq!(
            err,
            Error::UnknownName {
                kind: "species",
                name: "X_Q".into()
            }
        );
    }

    #[test]
    fn numbered_species_and_conjunctions() {
        let net = builtin_model("genosc").unwrap();
        let f = parse_property("P=? [ (X_7<19000) U[0,50] (X_9>24000) ]", &net).unwrap();
        assert_eq!(f.horizon, 50.0);
        let lacz = builtin_model("lacz").unwrap();
        let g = parse_property(
            "P=? [ (X_Ribosome>0 & X_TrRbsLacZ<200) U[0,500] X_LacZ>150 ]",
            &lacz,
        )
        .unwrap();
        assert!(matches!(g.left, StateFormula::And(_, _)));
    }

    #[test]
    fn linear_expressions_and_sugar() {
        let net = builtin_model("sir").unwrap();
        let f = parse_property("P=? [ G[0,1] 2*S - I + 3 >= R | !(I != 4) ]", &net).unwrap();
        assert_eq!(f.kind, PathKind::Globally);
        assert!(f.right.holds(&[0, 4, 100]));
        assert!(f.right.holds(&[10, 0, 23]));
        assert!(!f.right.holds(&[10, 0, 24]));
    }

    #[test]
    fn bare_comparisons_around_until() {
        let net = builtin_model("sir").unwrap();
        let f = parse_property("P=? [ X_S > 1 U[0,4] X_I < 3 ]", &net).unwrap();
        assert_eq!(f.horizon, 4.0);
        assert_eq!(f.kind, PathKind::Until);
    }

    #[test]
    fn syntax_errors() {
        let net = builtin_model("sir").unwrap();
        for bad in [
            "P=? [ (X_I < 30) U[0,10] ",
            "P [ F[0,1] X_I = 0 ]",
            "P=? [ F[0,0] X_I = 0 ]",
            "P=? [ (X_I < ) U[0,1] X_I = 0 ]",
            "P=? [ X_I X_R ]",
        ] {
            assert!(parse_property(bad, &net).is_err(), "{bad}");
        }
    }
}

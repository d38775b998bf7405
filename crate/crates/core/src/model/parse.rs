//! Line-oriented model file parser.
//!
//! ```text
//! # SIR epidemic
//! param k_i = 0.1
//! species S = 40
//! reaction infection: S + I -> 2*I @ k_i*S*I
//! ```

use std::collections::{BTreeMap, HashMap};

use super::{Polynomial, Reaction, ReactionNetwork, Species};
use crate::error::{Error, Result};
use crate::lexer::{tokenize, Cursor, Tok, Token};

pub fn parse_model(text: &str) -> Result<ReactionNetwork> {
    parse_model_with(text, &[])
}

/// Parse, replacing declared parameter values by `overrides` before they are
/// substituted into propensities.
pub fn parse_model_with(text: &str, overrides: &[(String, f64)]) -> Result<ReactionNetwork> {
    let lines: Vec<(usize, usize, Vec<Token>)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| Ok((i + 1, l.chars().count() + 1, tokenize(l, i + 1)?)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|(_, _, t)| !t.is_empty())
        .collect();

    let mut parameters = BTreeMap::new();
    let mut species: Vec<Species> = Vec::new();
    let mut reaction_lines = Vec::new();

    for (line, end, toks) in &lines {
        let mut cur = Cursor::new(toks, *line, *end);
        match cur.ident()? {
            "param" => {
                let name = cur.ident()?;
                cur.expect("=")?;
                let value = cur.number()?;
                finish(&cur)?;
                if !value.is_finite() {
                    return Err(cur.error("parameter value must be finite"));
                }
                if parameters.insert(name.to_string(), value).is_some() {
                    return Err(Error::InvalidModel(format!("duplicate parameter `{name}`")));
                }
            }
            "species" => {
                let name = cur.ident()?;
                cur.expect("=")?;
                let (l, c) = cur.position();
                let value = cur.number()?;
                finish(&cur)?;
                if value < 0.0 {
                    return Err(Error::syntax(l, c, format!("negative initial count for `{name}`")));
                }
                if value.fract() != 0.0 {
                    return Err(Error::syntax(l, c, format!("non-integer initial count for `{name}`")));
                }
                if species.iter().any(|s| s.name == name) {
                    return Err(Error::InvalidModel(format!("duplicate species `{name}`")));
                }
                species.push(Species {
                    name: name.to_string(),
                    initial: value as i64,
                });
            }
            "reaction" => reaction_lines.push((*line, *end, toks)),
            other => {
                let (l, c) = cur.prev_position();
                return Err(Error::syntax(
                    l,
                    c,
                    format!("expected `param`, `species` or `reaction`, found `{other}`"),
                ));
            }
        }
    }

    for (name, value) in overrides {
        match parameters.get_mut(name) {
            Some(v) => *v = *value,
            None => {
                return Err(Error::UnknownName {
                    kind: "parameter",
                    name: name.clone(),
                })
            }
        }
    }

    let index: HashMap<&str, usize> = species
        .iter()
        .enumerate()
        .map(|(i, s)| (s.name.as_str(), i))
        .collect();
    let n = species.len();
    let mut reactions = Vec::new();
    for (line, end, toks) in reaction_lines {
        let mut cur = Cursor::new(toks, line, end);
        cur.ident()?; // `reaction`
        let name = cur.ident()?.to_string();
        cur.expect(":")?;
        let reactants = parse_side(&mut cur, &index, n)?;
        cur.expect("->")?;
        let products = parse_side(&mut cur, &index, n)?;
        cur.expect("@")?;
        let propensity = ExprParser {
            cur: &mut cur,
            species: &index,
            parameters: &parameters,
        }
        .expr()?;
        finish(&cur)?;
        if reactions.iter().any(|r: &Reaction| r.name == name) {
            return Err(Error::InvalidModel(format!("duplicate reaction `{name}`")));
        }
        reactions.push(Reaction::new(name, reactants, products, propensity));
    }

    ReactionNetwork::new(species, reactions, parameters)
}

fn finish(cur: &Cursor) -> Result<()> {
    if cur.at_end() {
        Ok(())
    } else {
        Err(cur.error("unexpected trailing input"))
    }
}

fn resolve_species(cur: &Cursor, index: &HashMap<&str, usize>, name: &str) -> Result<usize> {
    index.get(name).copied().ok_or_else(|| {
        let (line, column) = cur.prev_position();
        Error::Syntax {
            line,
            column,
            message: format!("unknown species `{name}`"),
        }
    })
}

/// `0` or `+`-separated `[<int>*]<species>` terms.
fn parse_side(cur: &mut Cursor, index: &HashMap<&str, usize>, n: usize) -> Result<Vec<u32>> {
    let mut stoich = vec![0u32; n];
    if matches!(cur.peek(), Some(Tok::Number(v)) if *v == 0.0)
        && !matches!(cur.peek_at(1), Some(Tok::Sym("*")))
    {
        cur.next();
        return Ok(stoich);
    }
    loop {
        let coeff = match cur.peek() {
            Some(Tok::Number(v)) => {
                let v = *v;
                if v < 1.0 || v.fract() != 0.0 {
                    return Err(cur.error("stoichiometric coefficient must be a positive integer"));
                }
                cur.next();
                cur.expect("*")?;
                v as u32
            }
            _ => 1,
        };
        let name = cur.ident()?;
        let s = resolve_species(cur, index, name)?;
        stoich[s] += coeff;
        if !cur.eat("+") {
            break;
        }
    }
    Ok(stoich)
}

/// Recursive-descent polynomial expression parser.
/// Precedence: `+ -` < `*` < unary `-` < `^`.
struct ExprParser<'c, 'a, 'm> {
    cur: &'c mut Cursor<'a>,
    species: &'m HashMap<&'m str, usize>,
    parameters: &'m BTreeMap<String, f64>,
}

impl ExprParser<'_, '_, '_> {
    fn expr(&mut self) -> Result<Polynomial> {
        let mut acc = self.term()?;
        loop {
            if self.cur.eat("+") {
                acc = &acc + &self.term()?;
            } else if self.cur.eat("-") {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Polynomial> {
        let mut acc = self.unary()?;
        while self.cur.eat("*") {
            acc = &acc * &self.unary()?;
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Polynomial> {
        if self.cur.eat("-") {
            Ok(-&self.unary()?)
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Polynomial> {
        let base = self.atom()?;
        if self.cur.eat("^") {
            let (l, c) = self.cur.position();
            let e = self.cur.number()?;
            if e < 0.0 || e.fract() != 0.0 || e > 16.0 {
                return Err(Error::syntax(l, c, "exponent must be a small non-negative integer"));
            }
            Ok(base.pow(e as u32))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Polynomial> {
        match self.cur.peek() {
            Some(Tok::Number(v)) => {
                let v = *v;
                self.cur.next();
                Ok(Polynomial::constant(v))
            }
            Some(Tok::Ident(name)) => {
                self.cur.next();
                if let Some(&s) = self.species.get(name.as_str()) {
                    Ok(Polynomial::var(s))
                } else if let Some(&v) = self.parameters.get(name) {
                    Ok(Polynomial::constant(v))
                } else {
                    let (line, column) = self.cur.prev_position();
                    Err(Error::Syntax {
                        line,
                        column,
                        message: format!("unknown species or parameter `{name}`"),
                    })
                }
            }
            Some(Tok::Sym("(")) => {
                self.cur.next();
                let e = self.expr()?;
                self.cur.expect(")")?;
                Ok(e)
            }
            _ => Err(self.cur.error("expected a number, name or `(`")),
        }
    }
}

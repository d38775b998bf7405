//! Sparse multivariate polynomials with real coefficients.
//!
//! Used twice: for reaction propensities over species counts, and for the
//! closed moment equations over mean/covariance symbols.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Exponent map of a monomial: variable index -> power (powers are never zero).
pub type Exponents = BTreeMap<usize, u32>;

#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub coefficient: f64,
    pub exponents: Exponents,
}

impl Monomial {
    pub fn new(coefficient: f64, exponents: Exponents) -> Self {
        let exponents = exponents.into_iter().filter(|&(_, p)| p > 0).collect();
        Self {
            coefficient,
            exponents,
        }
    }

    pub fn degree(&self) -> u32 {
        self.exponents.values().sum()
    }

    pub fn eval(&self, vars: &[f64]) -> f64 {
        self.exponents
            .iter()
            .fold(self.coefficient, |acc, (&v, &p)| acc * vars[v].powi(p as i32))
    }
}

/// A normalized polynomial: terms sorted by exponent map, no duplicates,
/// no zero coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::from_terms(vec![Monomial::new(c, Exponents::new())])
    }

    /// The polynomial `x_var`.
    pub fn var(var: usize) -> Self {
        Self::from_terms(vec![Monomial::new(1.0, [(var, 1)].into())])
    }

    pub fn from_terms(terms: Vec<Monomial>) -> Self {
        let mut merged: BTreeMap<Exponents, f64> = BTreeMap::new();
        for t in terms {
            let exps: Exponents = t.exponents.into_iter().filter(|&(_, p)| p > 0).collect();
            *merged.entry(exps).or_insert(0.0) += t.coefficient;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(exponents, coefficient)| Monomial {
                coefficient,
                exponents,
            })
            .collect();
        Self { terms }
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Largest variable index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        self.terms
            .iter()
            .filter_map(|t| t.exponents.keys().next_back().copied())
            .max()
    }

    /// Value of the constant term (zero if absent).
    pub fn constant_term(&self) -> f64 {
        self.terms
            .iter()
            .find(|t| t.exponents.is_empty())
            .map_or(0.0, |t| t.coefficient)
    }

    pub fn eval(&self, vars: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(vars)).sum()
    }

    pub fn scale(&self, k: f64) -> Self {
        if k == 0.0 {
            return Self::zero();
        }
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| Monomial {
                    coefficient: t.coefficient * k,
                    exponents: t.exponents.clone(),
                })
                .collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::constant(1.0), |acc, _| &acc * self)
    }

    /// Replace every variable `v` by the polynomial `subst(v)`.
    pub fn substitute(&self, subst: &impl Fn(usize) -> Polynomial) -> Self {
        let mut out = Self::zero();
        for t in &self.terms {
            let mut term = Self::constant(t.coefficient);
            for (&v, &p) in &t.exponents {
                term = &term * &subst(v).pow(p);
            }
            out = &out + &term;
        }
        out
    }

    /// Compile into a flat evaluator for hot loops.
    pub fn compile(&self) -> CompiledPolynomial {
        CompiledPolynomial {
            terms: self
                .terms
                .iter()
                .map(|t| {
                    let mut factors = Vec::new();
                    for (&v, &p) in &t.exponents {
                        factors.extend(std::iter::repeat(v).take(p as usize));
                    }
                    (t.coefficient, factors)
                })
                .collect(),
        }
    }

    /// Render with a caller-supplied variable namer.
    pub fn render(&self, name: &dyn Fn(usize) -> String) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (k, t) in self.terms.iter().enumerate() {
            let mut c = t.coefficient;
            if k > 0 {
                if c < 0.0 {
                    out.push_str(" - ");
                    c = -c;
                } else {
                    out.push_str(" + ");
                }
            } else if c < 0.0 {
                out.push('-');
                c = -c;
            }
            let mut factors: Vec<String> = Vec::new();
            if c != 1.0 || t.exponents.is_empty() {
                // 12 significant digits hide accumulated rounding noise
                let shown: f64 = format!("{c:.11e}").parse().unwrap_or(c);
                factors.push(format!("{shown:?}"));
            }
            for (&v, &p) in &t.exponents {
                if p == 1 {
                    factors.push(name(v));
                } else {
                    factors.push(format!("{}^{p}", name(v)));
                }
            }
            out.push_str(&factors.join("*"));
        }
        out
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&|v| format!("x{v}")))
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        Polynomial::from_terms(self.terms.iter().chain(rhs.terms.iter()).cloned().collect())
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut terms = Vec::with_capacity(self.terms.len() * rhs.terms.len());
        for a in &self.terms {
            for b in &rhs.terms {
                let mut exps = a.exponents.clone();
                for (&v, &p) in &b.exponents {
                    *exps.entry(v).or_insert(0) += p;
                }
                terms.push(Monomial {
                    coefficient: a.coefficient * b.coefficient,
                    exponents: exps,
                });
            }
        }
        Polynomial::from_terms(terms)
    }
}

/// Flat term list: each term is a coefficient and a list of variable indices
/// (repeated for powers).
#[derive(Debug, Clone, Default)]
pub struct CompiledPolynomial {
    terms: Vec<(f64, Vec<usize>)>,
}

impl CompiledPolynomial {
    #[inline]
    pub fn eval(&self, vars: &[f64]) -> f64 {
        let mut total = 0.0;
        for (c, factors) in &self.terms {
            let mut v = *c;
            for &i in factors {
                v *= vars[i];
            }
            total += v;
        }
        total
    }

    #[inline]
    pub fn eval_int(&self, state: &[i64]) -> f64 {
        let mut total = 0.0;
        for (c, factors) in &self.terms {
            let mut v = *c;
            for &i in factors {
                v *= state[i] as f64;
            }
            total += v;
        }
        total
    }
}

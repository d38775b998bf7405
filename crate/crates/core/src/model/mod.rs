//! Population CTMC models: species, reactions and polynomial propensities.

mod builtin;
mod parse;
pub mod polynomial;

use std::collections::BTreeMap;
use std::fmt::Write as _;

pub use builtin::{
    builtin_model, builtin_model_with, builtin_source, BuiltinPreset, BUILTIN_MODELS,
    SIR_MULTI_SPECIES_PROPERTY,
};
pub use parse::{parse_model, parse_model_with};
pub use polynomial::{CompiledPolynomial, Exponents, Monomial, Polynomial};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Species {
    pub name: String,
    pub initial: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reaction {
    pub name: String,
    /// Reactant stoichiometry, one entry per species.
    pub reactants: Vec<u32>,
    pub products: Vec<u32>,
    /// `products - reactants`.
    pub change: Vec<i64>,
    /// Propensity over species counts (variable `s` is species `s`).
    pub propensity: Polynomial,
}

impl Reaction {
    pub fn new(
        name: impl Into<String>,
        reactants: Vec<u32>,
        products: Vec<u32>,
        propensity: Polynomial,
    ) -> Self {
        let change = products
            .iter()
            .zip(&reactants)
            .map(|(&p, &r)| i64::from(p) - i64::from(r))
            .collect();
        Self {
            name: name.into(),
            reactants,
            products,
            change,
            propensity,
        }
    }
}

/// Immutable after construction.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReactionNetwork {
    pub species: Vec<Species>,
    pub reactions: Vec<Reaction>,
    pub parameters: BTreeMap<String, f64>,
}

impl ReactionNetwork {
    /// Validates names, dimensions and initial counts.
    pub fn new(
        species: Vec<Species>,
        reactions: Vec<Reaction>,
        parameters: BTreeMap<String, f64>,
    ) -> Result<Self> {
        let n = species.len();
        for (i, s) in species.iter().enumerate() {
            if species[..i].iter().any(|o| o.name == s.name) {
                return Err(Error::InvalidModel(format!("duplicate species `{}`", s.name)));
            }
            if s.initial < 0 {
                return Err(Error::InvalidModel(format!(
                    "negative initial count {} for species `{}`",
                    s.initial, s.name
                )));
            }
        }
        for r in &reactions {
            if r.reactants.len() != n || r.products.len() != n || r.change.len() != n {
                return Err(Error::InvalidModel(format!(
                    "reaction `{}` has stoichiometry of the wrong length",
                    r.name
                )));
            }
            if r.propensity.max_var().is_some_and(|v| v >= n) {
                return Err(Error::InvalidModel(format!(
                    "propensity of `{}` references an undeclared species",
                    r.name
                )));
            }
            if r.propensity.terms().iter().any(|t| !t.coefficient.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "propensity of `{}` has a non-finite coefficient",
                    r.name
                )));
            }
        }
        Ok(Self {
            species,
            reactions,
            parameters,
        })
    }

    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    pub fn species_names(&self) -> Vec<String> {
        self.species.iter().map(|s| s.name.clone()).collect()
    }

    pub fn initial_state(&self) -> Vec<i64> {
        self.species.iter().map(|s| s.initial).collect()
    }

    /// Highest propensity degree over all reactions.
    pub fn max_degree(&self) -> u32 {
        self.reactions
            .iter()
            .map(|r| r.propensity.degree())
            .max()
            .unwrap_or(0)
    }

    /// Propensity of reaction `index` at an integer state. Negative values
    /// are an error naming the reaction and state.
    pub fn propensity(&self, index: usize, state: &[i64]) -> Result<f64> {
        let reaction = self.reactions.get(index).ok_or_else(|| {
            Error::InvalidArgument(format!("reaction index {index} out of range"))
        })?;
        if state.len() != self.n_species() {
            return Err(Error::InvalidArgument(format!(
                "state has {} entries, expected {}",
                state.len(),
                self.n_species()
            )));
        }
        let x: Vec<f64> = state.iter().map(|&v| v as f64).collect();
        let value = reaction.propensity.eval(&x);
        if value < 0.0 || !value.is_finite() {
            return Err(Error::PropensityViolation {
                reaction: reaction.name.clone(),
                state: state.to_vec(),
                value,
            });
        }
        Ok(value)
    }

    pub fn compiled_propensities(&self) -> Vec<CompiledPolynomial> {
        self.reactions.iter().map(|r| r.propensity.compile()).collect()
    }

    /// Species x reactions matrix, column `r` is reaction `r`'s change vector.
    pub fn stoichiometry_matrix(&self) -> Vec<Vec<i64>> {
        (0..self.n_species())
            .map(|s| self.reactions.iter().map(|r| r.change[s]).collect())
            .collect()
    }

    /// Render in the model-file format. Parameters are emitted for reference;
    /// propensities are written with their substituted numeric coefficients.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (name, value) in &self.parameters {
            let _ = writeln!(out, "param {name} = {value:?}");
        }
        for s in &self.species {
            let _ = writeln!(out, "species {} = {}", s.name, s.initial);
        }
        let side = |stoich: &[u32]| {
            let parts: Vec<String> = stoich
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(i, &c)| {
                    if c == 1 {
                        self.species[i].name.clone()
                    } else {
                        format!("{c}*{}", self.species[i].name)
                    }
                })
                .collect();
            if parts.is_empty() {
                "0".to_string()
            } else {
                parts.join(" + ")
            }
        };
        for r in &self.reactions {
            let _ = writeln!(
                out,
                "reaction {}: {} -> {} @ {}",
                r.name,
                side(&r.reactants),
                side(&r.products),
                r.propensity.render(&|v| self.species[v].name.clone())
            );
        }
        out
    }
}

/// `k * prod_s X_s (X_s - 1) ... (X_s - n_s + 1)`: the number of ordered
/// reactant tuples times `k`. Any `1/n!` factor is left to the modeller.
pub fn mass_action_propensity(reactants: &[u32], k: f64) -> Polynomial {
    let mut p = Polynomial::constant(k);
    for (s, &n) in reactants.iter().enumerate() {
        for j in 0..n {
            let factor = &Polynomial::var(s) - &Polynomial::constant(f64::from(j));
            p = &p * &factor;
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn death(k: f64) -> ReactionNetwork {
        ReactionNetwork::new(
            vec![Species {
                name: "X".into(),
                initial: 3,
            }],
            vec![Reaction::new("death", vec![1], vec![0], Polynomial::var(0).scale(k))],
            BTreeMap::new(),
        )
        .unwrap()
    }

    #[test]
    fn propensity_of_linear_death() {
        assert_eq!(death(2.0).propensity(0, &[3]).unwrap(), 6.0);
    }

    #[test]
    fn negative_propensity_is_reported() {
        let err = death(-1.0).propensity(0, &[2]).unwrap_err();
        assert!(matches!(err, Error::PropensityViolation { ref reaction, .. } if reaction == "death"));
    }

    #[test]
    fn mass_action_convention() {
        let ab = mass_action_propensity(&[1, 1, 0], 1.0);
        assert_eq!(ab, &Polynomial::var(0) * &Polynomial::var(1));
        // ordered reactant pairs of 4 molecules: 4 * 3
        let dimer = mass_action_propensity(&[2], 1.0);
        assert_eq!(dimer.eval(&[4.0]), 12.0);
        let brute: usize = (0..4).flat_map(|a| (0..4).map(move |b| (a, b))).filter(|(a, b)| a != b).count();
        assert_eq!(dimer.eval(&[4.0]), brute as f64);
        assert_eq!(mass_action_propensity(&[0], 5.0), Polynomial::constant(5.0));
    }

    #[test]
    fn rejects_duplicate_species_and_negative_counts() {
        let s = |name: &str, initial| Species {
            name: name.into(),
            initial,
        };
        assert!(ReactionNetwork::new(vec![s("A", 1), s("A", 2)], vec![], BTreeMap::new()).is_err());
        assert!(ReactionNetwork::new(vec![s("A", -1)], vec![], BTreeMap::new()).is_err());
    }

    #[test]
    fn empty_network_has_zero_columns() {
        let net = ReactionNetwork::new(
            vec![Species {
                name: "A".into(),
                initial: 0,
            }],
            vec![],
            BTreeMap::new(),
        )
        .unwrap();
        assert_eq!(net.stoichiometry_matrix(), vec![Vec::<i64>::new()]);
    }
}

//! Bundled benchmark models and their reference properties.

use super::{parse_model_with, ReactionNetwork};
use crate::error::{Error, Result};

/// A bundled model together with the property and grid it is usually checked with.
#[derive(Debug, Clone, Copy)]
pub struct BuiltinPreset {
    pub name: &'static str,
    pub description: &'static str,
    pub source: &'static str,
    pub property: &'static str,
    pub steps: usize,
}

pub const BUILTIN_MODELS: &[BuiltinPreset] = &[
    BuiltinPreset {
        name: "sir",
        description: "SIR epidemic, population 50",
        source: include_str!("../../models/sir.model"),
        property: "P=? [ (X_I < 30) U[0,10] (X_I = 0) ]",
        steps: 200,
    },
    BuiltinPreset {
        name: "lacz",
        description: "LacZ protein synthesis",
        source: include_str!("../../models/lacz.model"),
        property: "P=? [ (X_Ribosome > 0 & X_TrRbsLacZ < 200) U[0,500] (X_LacZ > 150) ]",
        steps: 200,
    },
    BuiltinPreset {
        name: "viral",
        description: "stiff intracellular viral infection",
        source: include_str!("../../models/viral.model"),
        property: "P=? [ (X_G < 200) U[0,200] (X_V > 500) ]",
        steps: 200,
    },
    BuiltinPreset {
        name: "genosc",
        description: "genetic oscillator",
        source: include_str!("../../models/genosc.model"),
        property: "P=? [ (X_7 < 19000) U[0,50] (X_9 > 24000) ]",
        steps: 2000,
    },
];

/// The second SIR property, over several species.
pub const SIR_MULTI_SPECIES_PROPERTY: &str = "P=? [ (X_S > 1) U[0,4] (X_I < X_R) ]";

fn preset(name: &str) -> Result<&'static BuiltinPreset> {
    BUILTIN_MODELS
        .iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::UnknownName {
            kind: "model",
            name: name.to_string(),
        })
}

pub fn builtin_source(name: &str) -> Result<&'static str> {
    preset(name).map(|p| p.source)
}

pub fn builtin_model(name: &str) -> Result<ReactionNetwork> {
    builtin_model_with(name, &[])
}

/// Bundled model with parameter overrides (e.g. the viral `c_n`, `c_a`).
pub fn builtin_model_with(name: &str, overrides: &[(String, f64)]) -> Result<ReactionNetwork> {
    parse_model_with(preset(name)?.source, overrides)
}

impl BuiltinPreset {
    pub fn get(name: &str) -> Result<&'static BuiltinPreset> {
        preset(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lacz_matches_rate_table() {
        let net = builtin_model("lacz").unwrap();
        assert_eq!(net.reactions.len(), 11);
        assert_eq!(net.parameters["k10"], 6.42e-5);
        let lacz = net.species_index("LacZ").unwrap();
        // k10 * X_LacZ at LacZ = 1
        let mut x = vec![0; net.n_species()];
        x[lacz] = 1;
        assert!((net.propensity(9, &x).unwrap() - 6.42e-5).abs() < 1e-18);
        assert_eq!(net.stoichiometry_matrix()[0].len(), 11);
    }

    #[test]
    fn genosc_matches_rate_table() {
        let net = builtin_model("genosc").unwrap();
        assert_eq!(net.reactions.len(), 16);
        assert_eq!(net.n_species(), 9);
        assert_eq!(net.parameters["k13"], 2.0);
        assert_eq!(net.initial_state(), vec![10, 1, 10, 1, 1, 1, 1, 1, 1]);
    }

    #[test]
    fn viral_matches_rate_table() {
        let net = builtin_model("viral").unwrap();
        assert_eq!(net.reactions.len(), 6);
        assert_eq!(net.parameters["k6"], 7.5e-6);
        assert_eq!(net.initial_state(), vec![10, 0, 0, 0]);
        // k6 X_G X_S vanishes without genome
        assert_eq!(net.propensity(5, &[10, 0, 500, 0]).unwrap(), 0.0);
        let scaled = builtin_model_with("viral", &[("c_a".into(), 0.5)]).unwrap();
        assert_eq!(scaled.propensity(2, &[2, 0, 0, 0]).unwrap(), 1000.0);
    }

    #[test]
    fn sir_infection_propensity() {
        let net = builtin_model("sir").unwrap();
        assert!((net.propensity(0, &[40, 10, 0]).unwrap() - 40.0).abs() < 1e-12);
        assert_eq!(net.stoichiometry_matrix(), vec![vec![-1, 0], vec![1, -1], vec![0, 1]]);
    }

    #[test]
    fn unknown_model() {
        assert!(matches!(builtin_model("nope"), Err(Error::UnknownName { .. })));
    }

    #[test]
    fn render_round_trips() {
        for p in BUILTIN_MODELS {
            let net = builtin_model(p.name).unwrap();
            let again = super::super::parse_model(&net.render()).unwrap();
            assert_eq!(net, again, "{}", p.name);
        }
    }
}

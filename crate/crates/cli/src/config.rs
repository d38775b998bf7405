//! Run configuration: command-line flags layered over an optional TOML file,
//! validated before anything runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use mcsbi::engine::{EngineConfig, Grid};
use mcsbi::gaussian::GaussianConfig;
use mcsbi::model::{builtin_model_with, BuiltinPreset, ReactionNetwork, parse_model_with};
use mcsbi::moments::OdeOptions;
use mcsbi::property::{parse_property, PathFormula};
use serde::Deserialize;

use crate::failure::{Failure, Qualify};

pub const SEED_ENV: &str = "MCSBI_SEED";
const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sbi,
    Ssa,
    Exact,
    All,
}

impl Method {
    pub fn expand(self) -> Vec<Method> {
        match self {
            Method::All => vec![Method::Sbi, Method::Ssa, Method::Exact],
            m => vec![m],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Sbi => "sbi",
            Method::Ssa => "ssa",
            Method::Exact => "exact",
            Method::All => "all",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Flags of `check`. Every field is optional so that a config file can
/// supply it instead.
#[derive(Debug, Clone, Default, Args)]
pub struct CheckArgs {
    /// TOML file whose keys mirror these flags (flags win)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Bundled model name or path to a model file
    #[arg(long, short)]
    pub model: Option<String>,
    /// Property, e.g. "P=? [ (X_I < 30) U[0,10] (X_I = 0) ]"; defaults to the bundled model's property
    #[arg(long, short)]
    pub property: Option<String>,
    /// Number of grid intervals over the property horizon [default: model preset or 200]
    #[arg(long)]
    pub steps: Option<usize>,
    /// Which method(s) to run [default: sbi]
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// SSA trajectories [default: 1000]
    #[arg(long)]
    pub samples: Option<usize>,
    /// Master seed [default: $MCSBI_SEED, else 1]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Confidence level of the SSA interval [default: 0.99]
    #[arg(long)]
    pub level: Option<f64>,
    /// Relative tolerance of the moment ODE solver [default: 1e-6]
    #[arg(long)]
    pub rtol: Option<f64>,
    /// Absolute tolerance of the moment ODE solver [default: 1e-8]
    #[arg(long)]
    pub atol: Option<f64>,
    /// Absolute tolerance of multivariate normal CDFs [default: 1e-6]
    #[arg(long)]
    pub mvn_tol: Option<f64>,
    /// Componentwise species cap for the exact oracle
    #[arg(long)]
    pub state_bound: Option<i64>,
    /// Output path or prefix; results go to stdout when omitted
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Output format [default: csv]
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Also write an SVG plot of the CDFs (needs --output)
    #[arg(long)]
    pub plot: bool,
    /// Override a model parameter, NAME=VALUE (repeatable)
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
}

pub fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| format!("`{value}` is not a number"))?;
    Ok((name.trim().to_string(), value))
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    model: Option<String>,
    property: Option<String>,
    steps: Option<usize>,
    method: Option<Method>,
    samples: Option<usize>,
    seed: Option<u64>,
    level: Option<f64>,
    rtol: Option<f64>,
    atol: Option<f64>,
    #[serde(alias = "mvn-tol")]
    mvn_tol: Option<f64>,
    #[serde(alias = "state-bound")]
    state_bound: Option<i64>,
    output: Option<PathBuf>,
    format: Option<Format>,
    plot: Option<bool>,
    #[serde(default)]
    param: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: String,
    pub property: String,
    pub n_steps: usize,
    pub method: Method,
    pub samples: usize,
    pub seed: u64,
    pub level: f64,
    pub rtol: f64,
    pub atol: f64,
    pub mvn_tol: f64,
    pub state_bound: Option<i64>,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub plot: bool,
    pub params: Vec<(String, f64)>,
}

/// Seed from the flag, else `MCSBI_SEED`, else a fixed default.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64, Failure> {
    if let Some(s) = flag {
        return Ok(s);
    }
    env_seed().map(|s| s.unwrap_or(DEFAULT_SEED))
}

fn env_seed() -> Result<Option<u64>, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Failure::usage(format!("{SEED_ENV}=`{v}` is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

impl RunConfig {
    pub fn from_args(args: CheckArgs) -> Result<Self, Failure> {
        let file = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
                toml::from_str::<FileConfig>(&text)
                    .map_err(|e| Failure::usage(format!("config {}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        let model = args
            .model
            .or(file.model)
            .ok_or_else(|| Failure::usage("no model given (use --model)"))?;
        let preset = BuiltinPreset::get(&model).ok();
        let property = match args.property.or(file.property) {
            Some(p) => p,
            None => preset
                .map(|p| p.property.to_string())
                .ok_or_else(|| Failure::usage("no property given (use --property)"))?,
        };
        let seed = match args.seed.or(file.seed) {
            Some(s) => s,
            None => env_seed()?.unwrap_or(DEFAULT_SEED),
        };
        let mut params: Vec<(String, f64)> = file.param.into_iter().collect();
        params.extend(args.params);
        let config = Self {
            model,
            property,
            n_steps: args.steps.or(file.steps).unwrap_or(preset.map_or(200, |p| p.steps)),
            method: args.method.or(file.method).unwrap_or(Method::Sbi),
            samples: args.samples.or(file.samples).unwrap_or(1000),
            seed,
            level: args.level.or(file.level).unwrap_or(0.99),
            rtol: args.rtol.or(file.rtol).unwrap_or(1e-6),
            atol: args.atol.or(file.atol).unwrap_or(1e-8),
            mvn_tol: args.mvn_tol.or(file.mvn_tol).unwrap_or(1e-6),
            state_bound: args.state_bound.or(file.state_bound),
            output: args.output.or(file.output),
            format: args.format.or(file.format).unwrap_or(Format::Csv),
            plot: args.plot || file.plot.unwrap_or(false),
            params,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        if self.n_steps == 0 {
            return Err(Failure::usage("--steps must be at least 1"));
        }
        if self.method.expand().contains(&Method::Ssa) && self.samples < 2 {
            return Err(Failure::usage("--samples must be at least 2 for SSA"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Failure::usage("--level must lie strictly between 0 and 1"));
        }
        for (name, v) in [("rtol", self.rtol), ("atol", self.atol), ("mvn-tol", self.mvn_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Failure::usage(format!("--{name} must be positive")));
            }
        }
        if self.state_bound.is_some_and(|b| b < 0) {
            return Err(Failure::usage("--state-bound must be non-negative"));
        }
        if self.output.is_none() && (self.plot || self.method == Method::All) {
            return Err(Failure::usage("--method all and --plot write several files and need --output"));
        }
        Ok(())
    }

    pub fn network(&self) -> Result<ReactionNetwork, Failure> {
        load_network(&self.model, &self.params)
    }

    pub fn formula(&self, network: &ReactionNetwork) -> Result<PathFormula, Failure> {
        parse_property(&self.property, network).qualify("property")
    }

    pub fn grid(&self, formula: &PathFormula) -> Result<Grid, Failure> {
        Grid::new(formula.horizon, self.n_steps).qualify("property")
    }

    pub fn engine(&self) -> EngineConfig {
        EngineConfig {
            n_steps: self.n_steps,
            gaussian: GaussianConfig {
                mvn_tol: self.mvn_tol,
                ..GaussianConfig::default()
            },
            ode: OdeOptions {
                rtol: self.rtol,
                atol: self.atol,
                ..OdeOptions::default()
            },
            ..EngineConfig::default()
        }
    }
}

/// A bundled model by name, otherwise a model file.
pub fn load_network(model: &str, params: &[(String, f64)]) -> Result<ReactionNetwork, Failure> {
    if BuiltinPreset::get(model).is_ok() {
        return builtin_model_with(model, params).qualify("model");
    }
    let path = Path::new(model);
    if !path.is_file() {
        return Err(Failure::usage(format!(
            "unknown model `{model}`: not a bundled model (see `mcsbi models`) and not a file"
        )));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {model}: {e}")))?;
    parse_model_with(&text, params).qualify("model")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_parse() {
        assert_eq!(parse_param("k_i = 0.5").unwrap(), ("k_i".into(), 0.5));
        assert!(parse_param("k_i").is_err());
        assert!(parse_param("k=x").is_err());
    }

    #[test]
    fn defaults_follow_the_preset() {
        let c = RunConfig::from_args(CheckArgs {
            model: Some("genosc".into()),
            seed: Some(3),
            ..CheckArgs::default()
        })
        .unwrap();
        assert_eq!(c.n_steps, 2000);
        assert!(c.property.contains("X_9 > 24000"));
        assert_eq!(c.method, Method::Sbi);
    }

    #[test]
    fn zero_steps_is_a_usage_error() {
        let e = RunConfig::from_args(CheckArgs {
            model: Some("sir".into()),
            steps: Some(0),
            seed: Some(3),
            ..CheckArgs::default()
        })
        .unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn file_keys_mirror_flags() {
        let f: FileConfig = toml::from_str(
            "model = \"sir\"\nsteps = 50\nmethod = \"all\"\nmvn_tol = 1e-5\nformat = \"json\"\n[param]\nk_i = 0.2\n",
        )
        .unwrap();
        assert_eq!(f.steps, Some(50));
        assert_eq!(f.method, Some(Method::All));
        assert_eq!(f.format, Some(Format::Json));
        assert_eq!(f.param["k_i"], 0.2);
        assert!(toml::from_str::<FileConfig>("stepz = 3").is_err());
    }
}

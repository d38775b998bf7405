//! `simulate`, `moments`, `models` and `bench`.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use mcsbi::engine::{check_path_formula, EngineConfig, Grid};
use mcsbi::model::{BuiltinPreset, ReactionNetwork, BUILTIN_MODELS};
use mcsbi::moments::{integrate, MomentField, MomentState, OdeOptions};
use mcsbi::property::parse_property;
use mcsbi::ssa::{estimate_cdf, exact_cme_cdf, simulate};

use crate::check::write_file;
use crate::config::{load_network, parse_param, resolve_seed};
use crate::failure::{Failure, Qualify};

fn emit(output: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match output {
        Some(path) => {
            write_file(path, text)?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::usage(format!("cannot write to stdout: {e}"))),
    }
}

/// Horizon of the bundled property when no end time is given.
fn default_horizon(model: &str, network: &ReactionNetwork, t_end: Option<f64>) -> Result<f64, Failure> {
    let t = match t_end {
        Some(t) => t,
        None => {
            let preset = BuiltinPreset::get(model).map_err(|_| Failure::usage("--t-end is required for model files"))?;
            parse_property(preset.property, network).qualify("property")?.horizon
        }
    };
    if !(t > 0.0 && t.is_finite()) {
        return Err(Failure::usage("--t-end must be positive"));
    }
    Ok(t)
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Bundled model name or path to a model file
    #[arg(long, short)]
    pub model: String,
    /// End time [default: horizon of the bundled property]
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Seed [default: $MCSBI_SEED, else 1]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override a model parameter, NAME=VALUE (repeatable)
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
    /// CSV file; stdout when omitted
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

pub fn simulate_cmd(args: &SimulateArgs) -> Result<(), Failure> {
    let network = load_network(&args.model, &args.params)?;
    let t_end = default_horizon(&args.model, &network, args.t_end)?;
    let trajectory = simulate(&network, t_end, resolve_seed(args.seed)?).qualify("ssa")?;
    emit(args.output.as_ref(), &trajectory.to_csv(&network.species_names()))
}

#[derive(Debug, Clone, Args)]
pub struct MomentsArgs {
    /// Bundled model name or path to a model file
    #[arg(long, short)]
    pub model: String,
    /// End time [default: horizon of the bundled property]
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Output intervals
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub atol: f64,
    /// Override a model parameter, NAME=VALUE (repeatable)
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
    /// CSV file for the trajectory; otherwise it follows the equations on stdout
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

/// Closed moment trajectory from the initial point mass, as CSV.
pub fn moment_trajectory(network: &ReactionNetwork, field: &MomentField, grid: &Grid, opts: &OdeOptions) -> Result<String, Failure> {
    let layout = field.layout;
    let names: Vec<String> = (0..layout.len()).map(|v| field.symbol_name(v)).collect();
    let mut out = format!("t,{}\n", names.join(","));
    let mut state = MomentState::initial(network, 0.0);
    for (k, t) in grid.points().into_iter().enumerate() {
        if k > 0 {
            state = integrate(field, &state, t, opts).qualify("moments")?;
        }
        let row: Vec<String> = state.to_flat(layout).iter().map(|v| format!("{v:.10e}")).collect();
        out.push_str(&format!("{t:.10e},{}\n", row.join(",")));
    }
    Ok(out)
}

pub fn moments_cmd(args: &MomentsArgs) -> Result<(), Failure> {
    if args.steps == 0 {
        return Err(Failure::usage("--steps must be at least 1"));
    }
    if !(args.rtol > 0.0 && args.atol > 0.0) {
        return Err(Failure::usage("--rtol and --atol must be positive"));
    }
    let network = load_network(&args.model, &args.params)?;
    let t_end = default_horizon(&args.model, &network, args.t_end)?;
    let field = MomentField::from_network(&network).qualify("moments")?;
    let opts = OdeOptions {
        rtol: args.rtol,
        atol: args.atol,
        ..OdeOptions::default()
    };
    let grid = Grid::new(t_end, args.steps).qualify("moments")?;
    let csv = moment_trajectory(&network, &field, &grid, &opts)?;
    match &args.output {
        Some(_) => {
            print!("{}", field.render());
            emit(args.output.as_ref(), &csv)
        }
        None => {
            let system: String = field.render().lines().map(|l| format!("# {l}\n")).collect();
            emit(None, &(system + &csv))
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelsArgs {
    /// Print the source of this bundled model
    #[arg(long)]
    pub show: Option<String>,
}

pub fn models_cmd(args: &ModelsArgs) -> Result<(), Failure> {
    if let Some(name) = &args.show {
        let preset = BuiltinPreset::get(name).map_err(|_| Failure::usage(format!("unknown model `{name}`")))?;
        print!("{}", preset.source);
        return Ok(());
    }
    for p in BUILTIN_MODELS {
        println!("{:<8} {} (steps {})\n         {}", p.name, p.description, p.steps, p.property);
    }
    Ok(())
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Comma-separated bundled models
    #[arg(long, value_delimiter = ',', default_value = "sir,lacz,viral,genosc")]
    pub models: Vec<String>,
    /// Comma-separated methods among sbi, ssa, exact
    #[arg(long, value_delimiter = ',', default_value = "sbi,ssa")]
    pub methods: Vec<String>,
    /// SSA sample count the timing refers to
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Simulate only this many trajectories and scale the time linearly to --samples
    #[arg(long)]
    pub timed_samples: Option<usize>,
    /// Seed [default: $MCSBI_SEED, else 1]
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV file; stdout when omitted
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub model: String,
    pub method: String,
    pub n_steps: usize,
    pub samples: Option<usize>,
    pub timed_samples: Option<usize>,
    pub seconds: f64,
    /// SSA time over SBI time for the same model.
    pub speedup: Option<f64>,
}

pub fn bench_table(rows: &[BenchRow]) -> String {
    let opt = |v: Option<usize>| v.map_or(String::new(), |v| v.to_string());
    let mut out = String::from("model,method,n_steps,samples,timed_samples,seconds,speedup\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{:.6},{}\n",
            r.model,
            r.method,
            r.n_steps,
            opt(r.samples),
            opt(r.timed_samples),
            r.seconds,
            r.speedup.map_or(String::new(), |s| format!("{s:.2}"))
        ));
    }
    out
}

pub fn bench_cmd(args: &BenchArgs) -> Result<(), Failure> {
    for m in &args.models {
        BuiltinPreset::get(m).map_err(|_| Failure::usage(format!("unknown model `{m}` (see `mcsbi models`)")))?;
    }
    for m in &args.methods {
        if !["sbi", "ssa", "exact"].contains(&m.as_str()) {
            return Err(Failure::usage(format!("unknown method `{m}`")));
        }
    }
    if args.samples < 2 || args.timed_samples.is_some_and(|t| t < 2 || t > args.samples) {
        return Err(Failure::usage("need 2 <= --timed-samples <= --samples"));
    }
    let seed = resolve_seed(args.seed)?;
    let mut rows = Vec::new();
    for model in &args.models {
        let preset = BuiltinPreset::get(model).qualify("model")?;
        let network = load_network(model, &[])?;
        let formula = parse_property(preset.property, &network).qualify("property")?;
        let grid = Grid::new(formula.horizon, preset.steps).qualify("property")?;
        let mut sbi_seconds = None;
        for method in &args.methods {
            let start = Instant::now();
            let (samples, timed) = match method.as_str() {
                "sbi" => {
                    let config = EngineConfig {
                        n_steps: preset.steps,
                        ..EngineConfig::default()
                    };
                    check_path_formula(&network, &formula, &grid, &config).qualify("engine")?;
                    (None, None)
                }
                "ssa" => {
                    let n = args.timed_samples.unwrap_or(args.samples);
                    estimate_cdf(&network, &formula, &grid, n, 0.99, seed).qualify("ssa")?;
                    (Some(args.samples), args.timed_samples)
                }
                _ => {
                    if let Err(e) = exact_cme_cdf(&network, &formula, &grid, None) {
                        eprintln!("{model}: exact oracle skipped: {e}");
                        continue;
                    }
                    (None, None)
                }
            };
            let mut seconds = start.elapsed().as_secs_f64();
            if let (Some(s), Some(t)) = (samples, timed) {
                seconds *= s as f64 / t as f64;
            }
            if method == "sbi" {
                sbi_seconds = Some(seconds);
            }
            let speedup = (method == "ssa").then_some(sbi_seconds).flatten().map(|s| seconds / s);
            eprintln!("{model} {method}: {seconds:.3} s");
            rows.push(BenchRow {
                model: model.clone(),
                method: method.clone(),
                n_steps: preset.steps,
                samples,
                timed_samples: timed,
                seconds,
                speedup,
            });
        }
    }
    emit(args.output.as_ref(), &bench_table(&rows))
}

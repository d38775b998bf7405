//! Gillespie simulation, exact until-monitors and Monte Carlo estimates of
//! the first-passage CDF.

mod exact;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use exact::{exact_cme_cdf, CmeOracle, ExactCdf, DEFAULT_STATE_CAP};

use crate::engine::Grid;
use crate::error::{Error, Result};
use crate::gaussian::normal::std_quantile;
use crate::model::{CompiledPolynomial, ReactionNetwork};
use crate::output::CdfTable;
use crate::property::{compile_regions, rewrite_to_until, PathFormula, Region, RegionSet};

/// RNG for trajectory `index` under `seed`: one ChaCha stream per index, so
/// results do not depend on scheduling.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `times[0] = 0`; `times[k]` is the time of the jump into `states[k]`.
    pub times: Vec<f64>,
    pub states: Vec<Vec<i64>>,
    pub t_end: f64,
}

impl Trajectory {
    pub fn to_csv(&self, species: &[String]) -> String {
        let mut out = format!("t,{}\n", species.join(","));
        for (t, s) in self.times.iter().zip(&self.states) {
            let row: Vec<String> = s.iter().map(|v| v.to_string()).collect();
            out.push_str(&format!("{t:.10e},{}\n", row.join(",")));
        }
        out
    }

    /// State held at time `t`.
    pub fn state_at(&self, t: f64) -> &[i64] {
        let k = self.times.partition_point(|&s| s <= t).max(1) - 1;
        &self.states[k]
    }
}

/// Precompiled direct-method stepper.
struct Stepper<'a> {
    network: &'a ReactionNetwork,
    props: Vec<CompiledPolynomial>,
    changes: Vec<Vec<(usize, i64)>>,
    /// Reactions whose propensity must be refreshed after reaction `r`.
    deps: Vec<Vec<usize>>,
}

impl<'a> Stepper<'a> {
    fn new(network: &'a ReactionNetwork) -> Self {
        let changes: Vec<Vec<(usize, i64)>> = network
            .reactions
            .iter()
            .map(|r| r.change.iter().enumerate().filter(|(_, &c)| c != 0).map(|(s, &c)| (s, c)).collect())
            .collect();
        let reads: Vec<Vec<usize>> = network
            .reactions
            .iter()
            .map(|r| {
                let mut v: Vec<usize> = r.propensity.terms().iter().flat_map(|t| t.exponents.keys().copied()).collect();
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect();
        let deps = changes
            .iter()
            .map(|ch| {
                (0..reads.len())
                    .filter(|&q| reads[q].iter().any(|s| ch.iter().any(|(c, _)| c == s)))
                    .collect()
            })
            .collect();
        Self {
            network,
            props: network.compiled_propensities(),
            changes,
            deps,
        }
    }

    fn eval(&self, r: usize, state: &[i64]) -> Result<f64> {
        let a = self.props[r].eval_int(state);
        if a < 0.0 || !a.is_finite() {
            return Err(Error::PropensityViolation {
                reaction: self.network.reactions[r].name.clone(),
                state: state.to_vec(),
                value: a,
            });
        }
        Ok(a)
    }

    fn init(&self, state: &[i64], a: &mut [f64]) -> Result<()> {
        for (r, slot) in a.iter_mut().enumerate() {
            *slot = self.eval(r, state)?;
        }
        Ok(())
    }

    /// Sample the next jump: `(waiting time, reaction)`, or `None` when no
    /// reaction can fire.
    fn sample(&self, a: &[f64], rng: &mut impl Rng) -> Option<(f64, usize)> {
        let total: f64 = a.iter().sum();
        if total <= 0.0 {
            return None;
        }
        let u: f64 = 1.0 - rng.gen::<f64>();
        let dt = -u.ln() / total;
        let target = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = None;
        for (r, &ar) in a.iter().enumerate() {
            if ar > 0.0 {
                acc += ar;
                chosen = Some(r);
                if target < acc {
                    break;
                }
            }
        }
        chosen.map(|r| (dt, r))
    }

    fn fire(&self, r: usize, state: &mut [i64], a: &mut [f64]) -> Result<()> {
        for &(s, c) in &self.changes[r] {
            state[s] += c;
        }
        for &q in &self.deps[r] {
            a[q] = self.eval(q, state)?;
        }
        Ok(())
    }
}

/// Gillespie direct method up to `t_end`.
pub fn simulate(network: &ReactionNetwork, t_end: f64, seed: u64) -> Result<Trajectory> {
    simulate_with(network, t_end, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn simulate_with(network: &ReactionNetwork, t_end: f64, rng: &mut impl Rng) -> Result<Trajectory> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("simulation end {t_end} must be positive")));
    }
    let stepper = Stepper::new(network);
    let mut state = network.initial_state();
    let mut a = vec![0.0; network.reactions.len()];
    stepper.init(&state, &mut a)?;
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![state.clone()],
        t_end,
    };
    let mut t = 0.0;
    while let Some((dt, r)) = stepper.sample(&a, rng) {
        t += dt;
        if t > t_end {
            break;
        }
        stepper.fire(r, &mut state, &mut a)?;
        traj.times.push(t);
        traj.states.push(state.clone());
    }
    Ok(traj)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Satisfied(f64),
    Falsified(f64),
    Undetermined,
}

/// Scan the piecewise-constant path (exact integer semantics).
pub fn monitor_until(trajectory: &Trajectory, regions: &RegionSet) -> Outcome {
    for (t, s) in trajectory.times.iter().zip(&trajectory.states) {
        if *t > trajectory.t_end {
            break;
        }
        match regions.classify(s) {
            Region::Target => return Outcome::Satisfied(*t),
            Region::False => return Outcome::Falsified(*t),
            Region::Undetermined => {}
        }
    }
    Outcome::Undetermined
}

/// Simulate only until the property is decided.
pub fn sample_outcome(
    network: &ReactionNetwork,
    regions: &RegionSet,
    t_end: f64,
    rng: &mut impl Rng,
) -> Result<Outcome> {
    let stepper = Stepper::new(network);
    run_monitored(&stepper, regions, t_end, rng)
}

fn run_monitored(stepper: &Stepper, regions: &RegionSet, t_end: f64, rng: &mut impl Rng) -> Result<Outcome> {
    let mut state = stepper.network.initial_state();
    let decided = |s: &[i64], t: f64| match regions.classify(s) {
        Region::Target => Some(Outcome::Satisfied(t)),
        Region::False => Some(Outcome::Falsified(t)),
        Region::Undetermined => None,
    };
    if let Some(o) = decided(&state, 0.0) {
        return Ok(o);
    }
    let mut a = vec![0.0; stepper.props.len()];
    stepper.init(&state, &mut a)?;
    let mut t = 0.0;
    while let Some((dt, r)) = stepper.sample(&a, rng) {
        t += dt;
        if t > t_end {
            break;
        }
        stepper.fire(r, &mut state, &mut a)?;
        if let Some(o) = decided(&state, t) {
            return Ok(o);
        }
    }
    Ok(Outcome::Undetermined)
}

/// Monte Carlo first-passage CDF with a normal-approximation confidence
/// interval.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    pub times: Vec<f64>,
    /// Fraction of samples satisfied by each time.
    pub cdf: Vec<f64>,
    /// Fraction of samples decided (satisfied or falsified) by each time.
    pub absorb_cdf: Vec<f64>,
    /// `z * sqrt(p (1 - p) / n)` per grid point.
    pub pointwise_half_width: Vec<f64>,
    /// Largest pointwise half-width.
    pub half_width: f64,
    pub level: f64,
    pub n_samples: usize,
}

impl EmpiricalCdf {
    pub fn from_outcomes(times: &[f64], outcomes: &[Outcome], level: f64) -> Self {
        let n = outcomes.len();
        let z = std_quantile(0.5 + 0.5 * level);
        let mut sat: Vec<f64> = outcomes
            .iter()
            .filter_map(|o| match o {
                Outcome::Satisfied(t) => Some(*t),
                _ => None,
            })
            .collect();
        let mut dec: Vec<f64> = outcomes
            .iter()
            .filter_map(|o| match o {
                Outcome::Satisfied(t) | Outcome::Falsified(t) => Some(*t),
                Outcome::Undetermined => None,
            })
            .collect();
        sat.sort_by(f64::total_cmp);
        dec.sort_by(f64::total_cmp);
        let frac = |v: &[f64], t: f64| v.partition_point(|&s| s <= t) as f64 / n as f64;
        let cdf: Vec<f64> = times.iter().map(|&t| frac(&sat, t)).collect();
        let absorb_cdf = times.iter().map(|&t| frac(&dec, t)).collect();
        let pointwise_half_width: Vec<f64> = cdf.iter().map(|&p| z * (p * (1.0 - p) / n as f64).sqrt()).collect();
        let half_width = pointwise_half_width.iter().copied().fold(0.0, f64::max);
        Self {
            times: times.to_vec(),
            cdf,
            absorb_cdf,
            pointwise_half_width,
            half_width,
            level,
            n_samples: n,
        }
    }

    pub fn to_table(&self, species: &[String]) -> CdfTable {
        let mut pi = Vec::with_capacity(self.cdf.len());
        let mut prev = 0.0;
        for &c in &self.cdf {
            pi.push(c - prev);
            prev = c;
        }
        let undetermined: Vec<f64> = std::iter::once(1.0)
            .chain(self.absorb_cdf.iter().map(|a| 1.0 - a))
            .take(self.cdf.len())
            .collect();
        CdfTable {
            method: "ssa".into(),
            species: species.to_vec(),
            times: self.times.clone(),
            pi,
            cdf: self.cdf.clone(),
            absorb_cdf: self.absorb_cdf.clone(),
            evidence: vec![f64::NAN; self.cdf.len()],
            undetermined,
            mu: vec![],
            var: vec![],
            ci_half_width: self.pointwise_half_width.clone(),
            extra: vec![],
        }
    }
}

/// Sample `n_samples` trajectories (in parallel) and tabulate the CDF on the
/// grid. Trajectory `i` uses [`trajectory_rng`]`(seed, i)`.
pub fn estimate_cdf(
    network: &ReactionNetwork,
    formula: &PathFormula,
    grid: &Grid,
    n_samples: usize,
    level: f64,
    seed: u64,
) -> Result<EmpiricalCdf> {
    if n_samples < 2 {
        return Err(Error::InvalidArgument("at least two samples are needed".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence level {level} must lie in (0, 1)")));
    }
    let formula = rewrite_to_until(formula);
    let regions = compile_regions(&formula, network.n_species())?;
    let stepper = Stepper::new(network);
    let outcomes = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| run_monitored(&stepper, &regions, grid.t_end, &mut trajectory_rng(seed, i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EmpiricalCdf::from_outcomes(&grid.points(), &outcomes, level))
}

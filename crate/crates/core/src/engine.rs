//! Sequential filtering of the first-passage-time distribution of a
//! time-bounded until property.
//!
//! At each grid point the Gaussian prior's mass in the target region, scaled
//! by the probability of having stayed undetermined so far, is the increment
//! of the CDF. The prior is then conditioned on the undetermined region by
//! moment matching and propagated to the next grid point with the closed
//! moment equations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussian::{adf_update, region_prob, GaussianConfig, GaussianDist};
use crate::model::ReactionNetwork;
use crate::moments::{integrate, MomentField, MomentState, OdeOptions, INITIAL_VARIANCE};
use crate::output::CdfTable;
use crate::property::{compile_regions_with_limit, rewrite_to_until, PathFormula, DEFAULT_TERM_LIMIT};

/// `t_i = i * t_end / n_steps` for `i = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub t_end: f64,
    pub n_steps: usize,
}

impl Grid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::InvalidArgument("the grid needs at least one step".into()));
        }
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!("grid end {t_end} must be positive")));
        }
        Ok(Self { t_end, n_steps })
    }

    pub fn point(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.t_end
        } else {
            i as f64 * self.t_end / self.n_steps as f64
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|i| self.point(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    pub n_steps: usize,
    /// Evidence below this ends the filter.
    pub evidence_floor: f64,
    pub initial_variance: f64,
    pub term_limit: usize,
    pub gaussian: GaussianConfig,
    pub ode: OdeOptions,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            n_steps: 200,
            evidence_floor: 1e-12,
            initial_variance: INITIAL_VARIANCE,
            term_limit: DEFAULT_TERM_LIMIT,
            gaussian: GaussianConfig::default(),
            ode: OdeOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FptResult {
    pub species: Vec<String>,
    pub times: Vec<f64>,
    pub pi: Vec<f64>,
    pub cdf: Vec<f64>,
    /// `1 - undetermined` after the step's update.
    pub absorb_cdf: Vec<f64>,
    pub evidence: Vec<f64>,
    /// Probability of having stayed undetermined before the step.
    pub undetermined: Vec<f64>,
    /// Prior mass of the false region (diagnostic).
    pub false_mass: Vec<f64>,
    /// Prior (pre-update) moments per step.
    pub moments: Vec<(DVector<f64>, DMatrix<f64>)>,
    /// Step at which the evidence fell below the floor.
    pub absorbed_at: Option<usize>,
    /// Satisfaction probability `1 - cdf` of a globally formula.
    pub globally: Option<Vec<f64>>,
}

impl FptResult {
    pub fn absorbed(&self) -> bool {
        self.absorbed_at.is_some()
    }

    pub fn final_cdf(&self) -> f64 {
        self.cdf.last().copied().unwrap_or(0.0)
    }

    pub fn to_table(&self) -> CdfTable {
        let n = self.species.len();
        CdfTable {
            method: "sbi".into(),
            species: self.species.clone(),
            times: self.times.clone(),
            pi: self.pi.clone(),
            cdf: self.cdf.clone(),
            absorb_cdf: self.absorb_cdf.clone(),
            evidence: self.evidence.clone(),
            undetermined: self.undetermined.clone(),
            mu: self.moments.iter().map(|(m, _)| m.iter().copied().collect()).collect(),
            var: self
                .moments
                .iter()
                .map(|(_, s)| (0..n).map(|i| s[(i, i)]).collect())
                .collect(),
            ci_half_width: vec![],
            extra: self
                .globally
                .iter()
                .map(|g| ("globally".to_string(), g.clone()))
                .collect(),
        }
    }
}

/// Filter `formula` (an until formula) over `grid`.
pub fn check_until(network: &ReactionNetwork, formula: &PathFormula, grid: &Grid, config: &EngineConfig) -> Result<FptResult> {
    let formula = rewrite_to_until(formula);
    let n = network.n_species();
    let regions = compile_regions_with_limit(&formula, n, config.term_limit)?;
    let field = MomentField::from_network(network)?;
    let mut state = MomentState::initial(network, config.initial_variance);
    let steps = grid.n_steps + 1;
    let mut out = FptResult {
        species: network.species_names(),
        times: grid.points(),
        pi: Vec::with_capacity(steps),
        cdf: Vec::with_capacity(steps),
        absorb_cdf: Vec::with_capacity(steps),
        evidence: Vec::with_capacity(steps),
        undetermined: Vec::with_capacity(steps),
        false_mass: Vec::with_capacity(steps),
        moments: Vec::with_capacity(steps),
        absorbed_at: None,
        globally: None,
    };
    let mut undetermined = 1.0;
    let mut cdf = 0.0;
    for i in 0..steps {
        if out.absorbed_at.is_some() {
            out.pi.push(0.0);
            out.cdf.push(cdf);
            out.absorb_cdf.push(1.0 - undetermined);
            out.evidence.push(0.0);
            out.undetermined.push(undetermined);
            out.false_mass.push(0.0);
            out.moments.push((state.mu.clone(), state.sigma.clone()));
            continue;
        }
        let prior = GaussianDist::new(state.mu.clone(), state.sigma.clone())?;
        let target = region_prob(&prior, &regions.target, &config.gaussian)?;
        let evidence = region_prob(&prior, &regions.undetermined, &config.gaussian)?;
        let false_mass = region_prob(&prior, &regions.false_region, &config.gaussian)?;
        let pi = undetermined * target;
        cdf = (cdf + pi).min(1.0);
        out.pi.push(pi);
        out.cdf.push(cdf);
        out.evidence.push(evidence);
        out.undetermined.push(undetermined);
        out.false_mass.push(false_mass);
        out.moments.push((state.mu.clone(), state.sigma.clone()));
        undetermined *= evidence;
        out.absorb_cdf.push(1.0 - undetermined);
        if evidence < config.evidence_floor {
            out.absorbed_at = Some(i);
            continue;
        }
        if i + 1 == steps {
            break;
        }
        let post = adf_update(&prior, &regions.undetermined, &config.gaussian)?.posterior;
        let conditioned = MomentState {
            mu: post.mean,
            sigma: post.cov,
            time: state.time,
        };
        state = integrate(&field, &conditioned, grid.point(i + 1), &config.ode)?;
    }
    if formula.negated {
        out.globally = Some(out.cdf.iter().map(|c| 1.0 - c).collect());
    }
    Ok(out)
}

/// Eventually and globally formulas are rewritten to until; a globally
/// formula additionally reports `1 - cdf` in [`FptResult::globally`].
pub fn check_path_formula(
    network: &ReactionNetwork,
    formula: &PathFormula,
    grid: &Grid,
    config: &EngineConfig,
) -> Result<FptResult> {
    check_until(network, &rewrite_to_until(formula), grid, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::builtin_model;
    use crate::property::parse_property;

    fn run(model: &str, prop: &str, n: usize) -> FptResult {
        let net = builtin_model(model).unwrap();
        let f = parse_property(prop, &net).unwrap();
        let grid = Grid::new(f.horizon, n).unwrap();
        check_path_formula(&net, &f, &grid, &EngineConfig::default()).unwrap()
    }

    #[test]
    fn grid_points() {
        let g = Grid::new(10.0, 4).unwrap();
        assert_eq!(g.points(), vec![0.0, 2.5, 5.0, 7.5, 10.0]);
        assert!(Grid::new(1.0, 0).is_err());
    }

    #[test]
    fn trivial_target_is_immediate() {
        let r = run("sir", "P=? [ F[0,1] tt ]", 10);
        assert_eq!(r.pi[0], 1.0);
        assert!(r.cdf.iter().all(|&c| c == 1.0));
        assert_eq!(r.absorbed_at, Some(0));
    }

    #[test]
    fn unreachable_target_stays_near_zero() {
        let r = run("sir", "P=? [ F[0,10] X_I > 100 ]", 50);
        assert!(r.cdf.iter().all(|&c| c <= 1e-6));
    }

    #[test]
    fn globally_true_is_one() {
        let r = run("sir", "P=? [ G[0,2] tt ]", 10);
        assert!(r.globally.unwrap().iter().all(|&g| g == 1.0));
    }
}

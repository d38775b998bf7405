//! Exact transient analysis of the master equation on an enumerated state
//! space, by uniformisation.

use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::engine::Grid;
use crate::error::{Error, Result};
use crate::model::ReactionNetwork;
use crate::output::CdfTable;
use crate::property::{compile_regions, rewrite_to_until, PathFormula, Region, RegionSet};

pub const DEFAULT_STATE_CAP: usize = 100_000;

/// Reachable state space with its sparse generator.
#[derive(Debug, Clone)]
pub struct CmeOracle {
    pub states: Vec<Vec<i64>>,
    index: HashMap<Vec<i64>, usize>,
    /// Outgoing `(successor, rate)` pairs per state.
    pub transitions: Vec<Vec<(usize, f64)>>,
    /// Rate of jumps leaving the componentwise bound, per state.
    pub leak: Vec<f64>,
    pub regions: Vec<Region>,
    /// Distinct `(state, successor)` pairs, counting one self-loop for
    /// every deadlock state.
    pub n_transitions: usize,
}

impl CmeOracle {
    /// Breadth-first enumeration from the initial state. Successors with a
    /// component above `state_bound` are not added; their rate is recorded
    /// as leakage.
    pub fn build(network: &ReactionNetwork, regions: &RegionSet, state_bound: Option<i64>, cap: usize) -> Result<Self> {
        let props = network.compiled_propensities();
        let x0 = network.initial_state();
        let mut states = vec![x0.clone()];
        let mut index = HashMap::from([(x0, 0usize)]);
        let mut transitions = Vec::new();
        let mut leak = Vec::new();
        let mut queue = VecDeque::from([0usize]);
        let mut n_transitions = 0;
        while let Some(i) = queue.pop_front() {
            let state = states[i].clone();
            let mut out: BTreeMap<usize, f64> = BTreeMap::new();
            let mut leaked = 0.0;
            for (r, reaction) in network.reactions.iter().enumerate() {
                let a = props[r].eval_int(&state);
                if a < 0.0 || !a.is_finite() {
                    return Err(Error::PropensityViolation {
                        reaction: reaction.name.clone(),
                        state,
                        value: a,
                    });
                }
                if a == 0.0 {
                    continue;
                }
                let next: Vec<i64> = state.iter().zip(&reaction.change).map(|(x, c)| x + c).collect();
                if next.iter().any(|&v| v < 0) {
                    return Err(Error::InvalidModel(format!(
                        "reaction `{}` can fire at {state:?} and make a count negative",
                        reaction.name
                    )));
                }
                if state_bound.is_some_and(|b| next.iter().any(|&v| v > b)) {
                    leaked += a;
                    continue;
                }
                let j = match index.get(&next) {
                    Some(&j) => j,
                    None => {
                        if states.len() >= cap {
                            return Err(Error::StateSpaceOverflow { cap });
                        }
                        let j = states.len();
                        index.insert(next.clone(), j);
                        states.push(next);
                        queue.push_back(j);
                        j
                    }
                };
                *out.entry(j).or_insert(0.0) += a;
            }
            n_transitions += out.len().max(1);
            if transitions.len() <= i {
                transitions.resize(i + 1, Vec::new());
                leak.resize(i + 1, 0.0);
            }
            transitions[i] = out.into_iter().collect();
            leak[i] = leaked;
        }
        let regions = states.iter().map(|s| regions.classify(s)).collect();
        Ok(Self {
            states,
            index,
            transitions,
            leak,
            regions,
            n_transitions,
        })
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, state: &[i64]) -> Option<usize> {
        self.index.get(state).copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactCdf {
    pub times: Vec<f64>,
    /// Mass absorbed in the target region by each time.
    pub cdf: Vec<f64>,
    /// Mass absorbed in the false region by each time.
    pub false_cdf: Vec<f64>,
    /// Mass lost through the truncation boundary by each time.
    pub leaked: Vec<f64>,
    /// Mass still in undetermined states.
    pub remaining: Vec<f64>,
    pub n_states: usize,
    pub n_transitions: usize,
    pub warnings: Vec<String>,
}

impl ExactCdf {
    pub fn to_table(&self, species: &[String]) -> CdfTable {
        let absorb: Vec<f64> = self.cdf.iter().zip(&self.false_cdf).map(|(a, b)| a + b).collect();
        let mut pi = Vec::with_capacity(self.cdf.len());
        let mut prev = 0.0;
        for &c in &self.cdf {
            pi.push(c - prev);
            prev = c;
        }
        let undetermined = std::iter::once(1.0)
            .chain(absorb.iter().map(|a| 1.0 - a))
            .take(self.cdf.len())
            .collect();
        CdfTable {
            method: "exact".into(),
            species: species.to_vec(),
            times: self.times.clone(),
            pi,
            cdf: self.cdf.clone(),
            absorb_cdf: absorb,
            evidence: vec![f64::NAN; self.cdf.len()],
            undetermined,
            mu: vec![],
            var: vec![],
            ci_half_width: vec![],
            extra: vec![],
        }
    }
}

/// Poisson(`lambda`) weights `w_0..w_K` with tail mass below `eps`.
fn poisson_weights(lambda: f64, eps: f64) -> Vec<f64> {
    if lambda == 0.0 {
        return vec![1.0];
    }
    let mut w = Vec::new();
    let mut total = 0.0;
    let ln = lambda.ln();
    let mut k = 0u32;
    loop {
        let lw = -lambda + f64::from(k) * ln - libm::lgamma(f64::from(k) + 1.0);
        let v = lw.exp();
        w.push(v);
        total += v;
        if f64::from(k) > lambda && 1.0 - total < eps {
            break;
        }
        k += 1;
    }
    w
}

/// First-passage CDF of `formula` by uniformisation, with target and false
/// states absorbing. `state_bound` caps every species count.
pub fn exact_cme_cdf(
    network: &ReactionNetwork,
    formula: &PathFormula,
    grid: &Grid,
    state_bound: Option<i64>,
) -> Result<ExactCdf> {
    let formula = rewrite_to_until(formula);
    let regions = compile_regions(&formula, network.n_species())?;
    let oracle = CmeOracle::build(network, &regions, state_bound, DEFAULT_STATE_CAP)?;
    let n = oracle.n_states();
    let absorbing: Vec<bool> = oracle.regions.iter().map(|r| *r != Region::Undetermined).collect();
    let exit: Vec<f64> = (0..n)
        .map(|i| {
            if absorbing[i] {
                0.0
            } else {
                oracle.transitions[i].iter().map(|(_, r)| r).sum::<f64>() + oracle.leak[i]
            }
        })
        .collect();
    let q = exit.iter().copied().fold(0.0, f64::max) * 1.02;

    let mut p = vec![0.0; n];
    p[0] = 1.0;
    let mut sink = 0.0;
    let mut out = ExactCdf {
        times: grid.points(),
        cdf: Vec::new(),
        false_cdf: Vec::new(),
        leaked: Vec::new(),
        remaining: Vec::new(),
        n_states: n,
        n_transitions: oracle.n_transitions,
        warnings: Vec::new(),
    };
    let record = |p: &[f64], sink: f64, out: &mut ExactCdf| {
        let (mut target, mut falsified, mut open) = (0.0, 0.0, 0.0);
        for (i, &m) in p.iter().enumerate() {
            match oracle.regions[i] {
                Region::Target => target += m,
                Region::False => falsified += m,
                Region::Undetermined => open += m,
            }
        }
        out.cdf.push(target.min(1.0));
        out.false_cdf.push(falsified.min(1.0));
        out.leaked.push(sink);
        out.remaining.push(open);
    };
    record(&p, sink, &mut out);
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut acc = vec![0.0; n];
    for k in 1..=grid.n_steps {
        let dt = grid.point(k) - grid.point(k - 1);
        if q > 0.0 {
            let weights = poisson_weights(q * dt, 1e-14);
            v.copy_from_slice(&p);
            let mut v_sink = sink;
            acc.iter_mut().zip(&v).for_each(|(a, x)| *a = weights[0] * x);
            let mut acc_sink = weights[0] * v_sink;
            for w in weights.iter().skip(1) {
                next.iter_mut().for_each(|x| *x = 0.0);
                for i in 0..n {
                    let vi = v[i];
                    if vi == 0.0 {
                        continue;
                    }
                    if absorbing[i] {
                        next[i] += vi;
                        continue;
                    }
                    next[i] += vi * (1.0 - exit[i] / q);
                    for &(j, rate) in &oracle.transitions[i] {
                        next[j] += vi * rate / q;
                    }
                    v_sink += vi * oracle.leak[i] / q;
                }
                std::mem::swap(&mut v, &mut next);
                for (a, x) in acc.iter_mut().zip(&v) {
                    *a += w * x;
                }
                acc_sink += w * v_sink;
            }
            let total: f64 = acc.iter().sum::<f64>() + acc_sink;
            // renormalise the Poisson truncation error
            p.iter_mut().zip(&acc).for_each(|(x, a)| *x = a / total);
            sink = acc_sink / total;
        }
        record(&p, sink, &mut out);
    }
    if let Some(&leaked) = out.leaked.last() {
        if leaked > 1e-9 {
            out.warnings.push(format!(
                "{leaked:.3e} of the probability mass left the state bound; the CDF is a lower bound"
            ));
        }
    }
    Ok(out)
}

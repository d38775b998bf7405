//! Normal moment closure of the master equation.
//!
//! Raw-moment equations `d E[x^m]/dt = sum_r E[a_r(x) ((x + v_r)^m - x^m)]`
//! are derived symbolically for `|m| <= 2`, every raw moment is replaced by
//! its Gaussian value in terms of the mean `mu` and covariance `Sigma`, and
//! the result is rewritten in central coordinates.

mod ode;

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

pub use ode::{integrate, OdeOptions};

use crate::error::{Error, Result};
use crate::model::{CompiledPolynomial, Exponents, Monomial, Polynomial, ReactionNetwork};

/// Initial covariance scale for a point-mass start.
pub const INITIAL_VARIANCE: f64 = 1e-6;

/// `d E[x^moment]/dt = E[rhs(x)]`, with `rhs` a polynomial over species.
#[derive(Debug, Clone, PartialEq)]
pub struct RawEquation {
    pub moment: Exponents,
    pub rhs: Polynomial,
}

fn multi_indices(n: usize, max_order: u32) -> Vec<Exponents> {
    let mut out = Vec::new();
    for i in 0..n {
        out.push([(i, 1)].into());
    }
    if max_order >= 2 {
        for i in 0..n {
            for j in i..n {
                let m: Exponents = if i == j { [(i, 2)].into() } else { [(i, 1), (j, 1)].into() };
                out.push(m);
            }
        }
    }
    out
}

fn monomial(exps: &Exponents) -> Polynomial {
    Polynomial::from_terms(vec![Monomial::new(1.0, exps.clone())])
}

/// Raw-moment equations for every multi-index `m` with `1 <= |m| <= max_order`
/// (`max_order` is clamped to 2).
pub fn raw_moment_equations(network: &ReactionNetwork, max_order: u32) -> Vec<RawEquation> {
    let n = network.n_species();
    multi_indices(n, max_order.min(2))
        .into_iter()
        .map(|m| {
            let mut rhs = Polynomial::zero();
            for r in &network.reactions {
                let mut shifted = Polynomial::constant(1.0);
                for (&s, &p) in &m {
                    let xs = &Polynomial::var(s) + &Polynomial::constant(r.change[s] as f64);
                    shifted = &shifted * &xs.pow(p);
                }
                let delta = &shifted - &monomial(&m);
                rhs = &rhs + &(&r.propensity * &delta);
            }
            RawEquation { moment: m, rhs }
        })
        .collect()
}

/// Symbol layout: `mu_i` at `i`, `Sigma_ij` (`i <= j`) after the means.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymbolLayout {
    pub n: usize,
}

impl SymbolLayout {
    pub fn len(&self) -> usize {
        self.n + self.n * (self.n + 1) / 2
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn mu(&self, i: usize) -> usize {
        i
    }

    pub fn sigma(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.n + i * self.n - i * (i + 1) / 2 + j
    }

    /// `(i, j)` pairs with `i <= j`, in symbol order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| (i..self.n).map(move |j| (i, j)))
    }
}

/// `E[prod x]` for a Gaussian in terms of mean and covariance symbols: sum
/// over subsets of the factors taken as centred, each centred product
/// expanded over perfect pairings.
pub fn gaussian_raw_moment(exps: &Exponents, layout: SymbolLayout) -> Polynomial {
    let factors: Vec<usize> = exps
        .iter()
        .flat_map(|(&v, &p)| std::iter::repeat(v).take(p as usize))
        .collect();
    let k = factors.len();
    let mut total = Polynomial::zero();
    for mask in 0u32..(1 << k) {
        let centred: Vec<usize> = (0..k).filter(|b| mask & (1 << b) != 0).map(|b| factors[b]).collect();
        if centred.len() % 2 == 1 {
            continue;
        }
        let mut term = pairings(&centred, layout);
        for b in (0..k).filter(|b| mask & (1 << b) == 0) {
            term = &term * &Polynomial::var(layout.mu(factors[b]));
        }
        total = &total + &term;
    }
    total
}

/// Isserlis sum over perfect pairings of a centred product.
fn pairings(idx: &[usize], layout: SymbolLayout) -> Polynomial {
    if idx.is_empty() {
        return Polynomial::constant(1.0);
    }
    let first = idx[0];
    let mut total = Polynomial::zero();
    for p in 1..idx.len() {
        let rest: Vec<usize> = idx[1..].iter().enumerate().filter(|&(q, _)| q + 1 != p).map(|(_, &v)| v).collect();
        let pair = Polynomial::var(layout.sigma(first, idx[p]));
        total = &total + &(&pair * &pairings(&rest, layout));
    }
    total
}

fn prune(p: Polynomial) -> Polynomial {
    let scale = p.terms().iter().map(|t| t.coefficient.abs()).fold(0.0, f64::max);
    Polynomial::from_terms(
        p.terms()
            .iter()
            .filter(|t| t.coefficient.abs() > 1e-14 * scale)
            .cloned()
            .collect(),
    )
}

/// Closed right-hand side of the mean/covariance ODEs as polynomials over
/// the symbols of [`SymbolLayout`].
#[derive(Debug, Clone)]
pub struct MomentField {
    pub layout: SymbolLayout,
    pub species: Vec<String>,
    pub mean: Vec<Polynomial>,
    /// Upper triangle in [`SymbolLayout::pairs`] order.
    pub cov: Vec<Polynomial>,
    compiled: Vec<CompiledPolynomial>,
}

/// Apply normal closure to raw equations up to order 2. Propensities of
/// degree above 2 (raw moments of order above 3) are rejected.
pub fn normal_closure(raw: &[RawEquation], species: &[String]) -> Result<MomentField> {
    let n = species.len();
    let layout = SymbolLayout { n };
    for eq in raw {
        let order = eq.rhs.degree();
        if order > 3 {
            return Err(Error::Unsupported(format!(
                "normal closure needs propensities of degree at most 2 (found raw moment of order {order})"
            )));
        }
    }
    let close = |p: &Polynomial| -> Polynomial {
        let mut out = Polynomial::zero();
        for t in p.terms() {
            out = &out + &gaussian_raw_moment(&t.exponents, layout).scale(t.coefficient);
        }
        out
    };
    let find = |m: &Exponents| -> Result<Polynomial> {
        raw.iter()
            .find(|e| &e.moment == m)
            .map(|e| close(&e.rhs))
            .ok_or_else(|| Error::InvalidArgument("raw equations are missing a moment".into()))
    };
    let mut mean = Vec::with_capacity(n);
    for i in 0..n {
        mean.push(find(&[(i, 1)].into())?);
    }
    let mut cov = Vec::new();
    for (i, j) in layout.pairs() {
        let m: Exponents = if i == j { [(i, 2)].into() } else { [(i, 1), (j, 1)].into() };
        let second = find(&m)?;
        let mi = Polynomial::var(layout.mu(i));
        let mj = Polynomial::var(layout.mu(j));
        let d = &(&second - &(&mean[i] * &mj)) - &(&mi * &mean[j]);
        cov.push(prune(d));
    }
    let mean: Vec<Polynomial> = mean.into_iter().map(prune).collect();
    let compiled = mean.iter().chain(&cov).map(Polynomial::compile).collect();
    Ok(MomentField {
        layout,
        species: species.to_vec(),
        mean,
        cov,
        compiled,
    })
}

impl MomentField {
    pub fn from_network(network: &ReactionNetwork) -> Result<Self> {
        normal_closure(&raw_moment_equations(network, 2), &network.species_names())
    }

    pub fn n_species(&self) -> usize {
        self.layout.n
    }

    pub fn symbol_name(&self, v: usize) -> String {
        let n = self.layout.n;
        if v < n {
            return format!("mu_{}", self.species[v]);
        }
        let (i, j) = self.layout.pairs().nth(v - n).unwrap_or((0, 0));
        format!("Sigma_{}_{}", self.species[i], self.species[j])
    }

    /// Flat derivative of the symbol vector.
    pub fn rhs_flat(&self, y: &[f64], out: &mut [f64]) {
        for (o, p) in out.iter_mut().zip(&self.compiled) {
            *o = p.eval(y);
        }
    }

    /// The closed system as text, one equation per line.
    pub fn render(&self) -> String {
        let name = |v: usize| self.symbol_name(v);
        let mut out = String::new();
        for (i, p) in self.mean.iter().enumerate() {
            let _ = writeln!(out, "d {}/dt = {}", name(self.layout.mu(i)), p.render(&name));
        }
        for ((i, j), p) in self.layout.pairs().zip(&self.cov) {
            let _ = writeln!(out, "d {}/dt = {}", name(self.layout.sigma(i, j)), p.render(&name));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentState {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub time: f64,
}

impl MomentState {
    /// Point mass at the network's initial state, smoothed to `eps * I`.
    pub fn initial(network: &ReactionNetwork, eps: f64) -> Self {
        let n = network.n_species();
        Self {
            mu: DVector::from_iterator(n, network.initial_state().into_iter().map(|v| v as f64)),
            sigma: DMatrix::identity(n, n) * eps,
            time: 0.0,
        }
    }

    pub fn to_flat(&self, layout: SymbolLayout) -> Vec<f64> {
        let mut y = vec![0.0; layout.len()];
        for i in 0..layout.n {
            y[layout.mu(i)] = self.mu[i];
        }
        for (i, j) in layout.pairs() {
            y[layout.sigma(i, j)] = 0.5 * (self.sigma[(i, j)] + self.sigma[(j, i)]);
        }
        y
    }

    pub fn from_flat(y: &[f64], layout: SymbolLayout, time: f64) -> Self {
        let n = layout.n;
        Self {
            mu: DVector::from_fn(n, |i, _| y[layout.mu(i)]),
            sigma: DMatrix::from_fn(n, n, |i, j| y[layout.sigma(i, j)]),
            time,
        }
    }
}

/// Numeric `(d mu/dt, d Sigma/dt)`; the covariance derivative is exactly
/// symmetric.
pub fn ode_rhs(field: &MomentField, state: &MomentState) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let layout = field.layout;
    if state.mu.len() != layout.n || state.sigma.nrows() != layout.n || state.sigma.ncols() != layout.n {
        return Err(Error::InvalidArgument(format!(
            "moment state has dimension {}, field expects {}",
            state.mu.len(),
            layout.n
        )));
    }
    let y = state.to_flat(layout);
    let mut dy = vec![0.0; y.len()];
    field.rhs_flat(&y, &mut dy);
    if dy.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { time: state.time });
    }
    let d = MomentState::from_flat(&dy, layout, state.time);
    Ok((d.mu, d.sigma))
}

//! Polytope masses under a Gaussian and their derivatives in the mean.
//!
//! A polytope `{lo <= A x <= hi}` is mapped to `y = A x ~ N(A mu, A S A^T)`
//! and its mass written as an inclusion-exclusion sum of orthant CDFs over
//! the box corners. Rows bounded only from below are negated first so every
//! row has a finite upper bound.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::normal::{orthant, OrthantOptions};
use super::{GaussianConfig, GaussianDist};
use crate::error::{Error, Result};
use crate::property::{Polytope, SignedRegion};

/// Mass of a polytope with its gradient and Hessian in the mean.
#[derive(Debug, Clone)]
pub struct PolytopeMoments {
    pub mass: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

/// The box in `y` coordinates.
struct YBox {
    a: DMatrix<f64>,
    m: Vec<f64>,
    s: DMatrix<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl YBox {
    fn new(dist: &GaussianDist, poly: &Polytope) -> Result<Self> {
        let n = dist.dim();
        if poly.dim() != n {
            return Err(Error::InvalidArgument(format!(
                "polytope of dimension {} for a {n}-dimensional Gaussian",
                poly.dim()
            )));
        }
        let rows = poly.rows();
        let k = rows.len();
        let mut a = DMatrix::zeros(k, n);
        let mut lo = Vec::with_capacity(k);
        let mut hi = Vec::with_capacity(k);
        for (i, r) in rows.iter().enumerate() {
            let flip = r.hi == f64::INFINITY;
            let sign = if flip { -1.0 } else { 1.0 };
            for j in 0..n {
                a[(i, j)] = sign * r.a[j];
            }
            if flip {
                lo.push(f64::NEG_INFINITY);
                hi.push(-r.lo);
            } else {
                lo.push(r.lo);
                hi.push(r.hi);
            }
        }
        let m: Vec<f64> = (&a * &dist.mean).iter().copied().collect();
        let s = &a * &dist.cov * a.transpose();
        let s = (&s + s.transpose()) * 0.5;
        Ok(Self { a, m, s, lo, hi })
    }

    fn k(&self) -> usize {
        self.m.len()
    }

    /// `(sign, corner)` for every corner with a finite lower choice.
    fn corners(&self) -> Vec<(f64, Vec<f64>)> {
        let k = self.k();
        let finite_lo: Vec<usize> = (0..k).filter(|&i| self.lo[i].is_finite()).collect();
        let mut out = Vec::with_capacity(1 << finite_lo.len());
        for mask in 0u32..(1u32 << finite_lo.len()) {
            let mut c = self.hi.clone();
            for (bit, &i) in finite_lo.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    c[i] = self.lo[i];
                }
            }
            let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            out.push((sign, c));
        }
        out
    }
}

fn is_point(s: &DMatrix<f64>, i: usize, opts: &OrthantOptions) -> bool {
    s[(i, i)] < opts.degenerate_var
}

fn box_mass(m: &[f64], s: &DMatrix<f64>, corners: &[(f64, Vec<f64>)], opts: &OrthantOptions) -> Result<f64> {
    let mut total = 0.0;
    for (sign, c) in corners {
        total += sign * orthant(m, s, c, opts)?;
    }
    Ok(total)
}

/// Distribution of the coordinates other than `fixed` given `y_fixed = at`.
fn condition(m: &[f64], s: &DMatrix<f64>, fixed: &[usize], at: &[f64]) -> (Vec<usize>, Vec<f64>, DMatrix<f64>) {
    let rest: Vec<usize> = (0..m.len()).filter(|i| !fixed.contains(i)).collect();
    let f = fixed.len();
    let sff = DMatrix::from_fn(f, f, |a, b| s[(fixed[a], fixed[b])]);
    let inv = sff.try_inverse().unwrap_or_else(|| DMatrix::zeros(f, f));
    let d = DVector::from_fn(f, |a, _| at[a] - m[fixed[a]]);
    let srf = DMatrix::from_fn(rest.len(), f, |r, b| s[(rest[r], fixed[b])]);
    let gain = &srf * inv;
    let shift = &gain * d;
    let mean: Vec<f64> = rest.iter().enumerate().map(|(r, &i)| m[i] + shift[r]).collect();
    let reduce = &gain * srf.transpose();
    let cov = DMatrix::from_fn(rest.len(), rest.len(), |a, b| s[(rest[a], rest[b])] - reduce[(a, b)]);
    (rest, mean, cov)
}

/// `d mass / d m_i` in `y` coordinates.
fn grad_component(m: &[f64], s: &DMatrix<f64>, corners: &[(f64, Vec<f64>)], i: usize, opts: &OrthantOptions) -> Result<f64> {
    if is_point(s, i, opts) {
        return Ok(0.0);
    }
    let v = s[(i, i)];
    let mut g = 0.0;
    for (sign, c) in corners {
        let d = c[i] - m[i];
        let dens = (-0.5 * d * d / v).exp() / (2.0 * PI * v).sqrt();
        if dens == 0.0 {
            continue;
        }
        let (rest, cm, cs) = condition(m, s, &[i], &[c[i]]);
        let upper: Vec<f64> = rest.iter().map(|&r| c[r]).collect();
        g -= sign * dens * orthant(&cm, &cs, &upper, opts)?;
    }
    Ok(g)
}

/// `d^2 mass / d m_i d m_j`, `i != j`, in `y` coordinates.
fn mixed_component(
    m: &[f64],
    s: &DMatrix<f64>,
    corners: &[(f64, Vec<f64>)],
    i: usize,
    j: usize,
    opts: &OrthantOptions,
) -> Result<f64> {
    if is_point(s, i, opts) || is_point(s, j, opts) {
        return Ok(0.0);
    }
    let (vi, vj, cij) = (s[(i, i)], s[(j, j)], s[(i, j)]);
    let det = vi * vj - cij * cij;
    if det <= 1e-12 * vi * vj {
        return Ok(0.0);
    }
    let mut h = 0.0;
    for (sign, c) in corners {
        let (di, dj) = (c[i] - m[i], c[j] - m[j]);
        let q = (vj * di * di - 2.0 * cij * di * dj + vi * dj * dj) / det;
        let dens = (-0.5 * q).exp() / (2.0 * PI * det.sqrt());
        if dens == 0.0 {
            continue;
        }
        let (rest, cm, cs) = condition(m, s, &[i, j], &[c[i], c[j]]);
        let upper: Vec<f64> = rest.iter().map(|&r| c[r]).collect();
        h += sign * dens * orthant(&cm, &cs, &upper, opts)?;
    }
    Ok(h)
}

fn polytope_moments_impl(
    dist: &GaussianDist,
    poly: &Polytope,
    cfg: &GaussianConfig,
    want_hess: bool,
) -> Result<PolytopeMoments> {
    let n = dist.dim();
    if poly.is_whole() {
        return Ok(PolytopeMoments {
            mass: 1.0,
            grad: DVector::zeros(n),
            hess: DMatrix::zeros(n, n),
        });
    }
    let opts = cfg.orthant_options();
    let y = YBox::new(dist, poly)?;
    let k = y.k();
    let corners = y.corners();
    let mass = box_mass(&y.m, &y.s, &corners, &opts)?;
    let mut gy = DVector::zeros(k);
    for i in 0..k {
        gy[i] = grad_component(&y.m, &y.s, &corners, i, &opts)?;
    }
    let mut hy = DMatrix::zeros(k, k);
    if want_hess {
        for i in 0..k {
            for j in 0..i {
                let v = mixed_component(&y.m, &y.s, &corners, i, j, &opts)?;
                hy[(i, j)] = v;
                hy[(j, i)] = v;
            }
            if is_point(&y.s, i, &opts) {
                continue;
            }
            let h = (cfg.hess_fd_step_scale * (1.0 + y.m[i].abs())).min(0.01 * y.s[(i, i)].sqrt());
            let mut shifted = y.m.clone();
            shifted[i] = y.m[i] + h;
            let up = grad_component(&shifted, &y.s, &corners, i, &opts)?;
            shifted[i] = y.m[i] - h;
            let down = grad_component(&shifted, &y.s, &corners, i, &opts)?;
            hy[(i, i)] = (up - down) / (2.0 * h);
        }
    }
    let at = y.a.transpose();
    Ok(PolytopeMoments {
        mass,
        grad: &at * gy,
        hess: if want_hess { &at * hy * &y.a } else { DMatrix::zeros(n, n) },
    })
}

/// Mass, gradient and Hessian (in the mean) of a polytope.
pub fn polytope_moments(dist: &GaussianDist, poly: &Polytope, cfg: &GaussianConfig) -> Result<PolytopeMoments> {
    polytope_moments_impl(dist, poly, cfg, true)
}

pub fn polytope_mass(dist: &GaussianDist, poly: &Polytope, cfg: &GaussianConfig) -> Result<f64> {
    if poly.is_whole() {
        return Ok(1.0);
    }
    let opts = cfg.orthant_options();
    let y = YBox::new(dist, poly)?;
    box_mass(&y.m, &y.s, &y.corners(), &opts)
}

/// Gradient of the polytope mass with respect to the mean.
pub fn cdf_grad_mu(dist: &GaussianDist, poly: &Polytope, cfg: &GaussianConfig) -> Result<DVector<f64>> {
    Ok(polytope_moments_impl(dist, poly, cfg, false)?.grad)
}

/// Hessian of the polytope mass with respect to the mean.
pub fn cdf_hess_mu(dist: &GaussianDist, poly: &Polytope, cfg: &GaussianConfig) -> Result<DMatrix<f64>> {
    Ok(polytope_moments(dist, poly, cfg)?.hess)
}

/// Gaussian measure of a signed region. Sums outside `[-1e-6, 1 + 1e-6]`
/// are reported as numeric errors; the result is clamped to `[0, 1]`.
pub fn region_prob(dist: &GaussianDist, region: &SignedRegion, cfg: &GaussianConfig) -> Result<f64> {
    let mut total = 0.0;
    for (w, p) in region.terms() {
        total += f64::from(*w) * polytope_mass(dist, p, cfg)?;
    }
    if !total.is_finite() || !(-1e-6..=1.0 + 1e-6).contains(&total) {
        return Err(Error::Numeric(format!(
            "region probability {total} outside [0, 1]"
        )));
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Signed sum of polytope moments over a region.
pub(crate) fn region_moments(dist: &GaussianDist, region: &SignedRegion, cfg: &GaussianConfig) -> Result<PolytopeMoments> {
    let n = dist.dim();
    let mut acc = PolytopeMoments {
        mass: 0.0,
        grad: DVector::zeros(n),
        hess: DMatrix::zeros(n, n),
    };
    for (w, p) in region.terms() {
        let pm = polytope_moments(dist, p, cfg)?;
        let w = f64::from(*w);
        acc.mass += w * pm.mass;
        acc.grad += pm.grad * w;
        acc.hess += pm.hess * w;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::std_cdf;
    use crate::property::HalfSpace;

    fn dist2() -> GaussianDist {
        GaussianDist::new(
            DVector::from_vec(vec![0.3, -0.2]),
            DMatrix::from_row_slice(2, 2, &[1.5, 0.4, 0.4, 0.8]),
        )
        .unwrap()
    }

    fn hs(a: &[f64], b: f64) -> HalfSpace {
        HalfSpace { a: a.to_vec(), b }
    }

    #[test]
    fn one_dimensional_interval() {
        let d = GaussianDist::new(DVector::from_vec(vec![1.0]), DMatrix::from_element(1, 1, 4.0)).unwrap();
        let p = Polytope::from_half_spaces(1, &[hs(&[1.0], 3.0), hs(&[-1.0], 0.0)]).unwrap();
        let mass = polytope_mass(&d, &p, &GaussianConfig::default()).unwrap();
        assert!((mass - (std_cdf(1.0) - std_cdf(-0.5))).abs() < 1e-14);
    }

    #[test]
    fn lower_only_rows_are_flipped() {
        let d = dist2();
        let p = Polytope::from_half_spaces(2, &[hs(&[-1.0, 0.0], -0.5)]).unwrap();
        let mass = polytope_mass(&d, &p, &GaussianConfig::default()).unwrap();
        assert!((mass - std_cdf((0.3 - 0.5) / 1.5f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let cfg = GaussianConfig::default();
        let p = Polytope::from_half_spaces(
            2,
            &[hs(&[1.0, 0.0], 1.0), hs(&[-1.0, 0.0], 0.5), hs(&[1.0, -1.0], 0.7)],
        )
        .unwrap();
        let d = dist2();
        let g = cdf_grad_mu(&d, &p, &cfg).unwrap();
        for i in 0..2 {
            let h = 1e-5;
            let mut up = d.clone();
            up.mean[i] += h;
            let mut dn = d.clone();
            dn.mean[i] -= h;
            let fd = (polytope_mass(&up, &p, &cfg).unwrap() - polytope_mass(&dn, &p, &cfg).unwrap()) / (2.0 * h);
            assert!((g[i] - fd).abs() < 1e-7 * (1.0 + fd.abs()), "{i}: {} vs {fd}", g[i]);
        }
    }

    #[test]
    fn signed_region_out_of_range_is_numeric_error() {
        let d = dist2();
        let whole = Polytope::whole(2);
        let region = SignedRegion::from_terms(2, vec![(1, whole.clone()), (1, whole)]);
        assert!(matches!(
            region_prob(&d, &region, &GaussianConfig::default()),
            Err(Error::Numeric(_))
        ));
    }
}

use nalgebra::{DMatrix, SymmetricEigen};

use super::polytope::region_moments;
use super::{GaussianConfig, GaussianDist};
use crate::error::{Error, Result};
use crate::property::SignedRegion;

#[derive(Debug, Clone)]
pub struct AdfUpdate {
    /// Prior mass of the region (the evidence).
    pub mass: f64,
    /// Moment-matched Gaussian of the prior restricted to the region.
    pub posterior: GaussianDist,
}

/// Project `N(mu, S)` restricted to `region` back onto a Gaussian:
///
/// ```text
/// mu' = mu + S grad log Z
/// S'  = S + S (hess log Z) S
/// ```
pub fn adf_update(prior: &GaussianDist, region: &SignedRegion, cfg: &GaussianConfig) -> Result<AdfUpdate> {
    let rm = region_moments(prior, region, cfg)?;
    let z = rm.mass;
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::Numeric(format!("cannot condition on a region of mass {z}")));
    }
    let g = &rm.grad / z;
    let hess_log = &rm.hess / z - &g * g.transpose();
    let s = &prior.cov;
    let mean = &prior.mean + s * &g;
    let cov = s + s * hess_log * s;
    let posterior = GaussianDist::new(mean, psd_repair(&cov, cfg.psd_floor))?;
    if !posterior.is_finite() {
        return Err(Error::Numeric("non-finite moments after conditioning".into()));
    }
    Ok(AdfUpdate {
        mass: z.min(1.0),
        posterior,
    })
}

/// Symmetrise and raise eigenvalues below `floor * max(trace, 1)` to that
/// value. Matrices that already satisfy the floor are returned symmetrised
/// but otherwise untouched.
pub fn psd_repair(m: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    if sym.nrows() == 0 {
        return sym;
    }
    let eig = SymmetricEigen::new(sym.clone());
    // scaled by the top eigenvalue, which clipping leaves alone, so a
    // second pass sees the same threshold
    let threshold = floor * eig.eigenvalues.max().max(1.0);
    if eig.eigenvalues.iter().all(|&l| l >= threshold * (1.0 - 1e-3)) {
        return sym;
    }
    let clipped = eig.eigenvalues.map(|l| l.max(threshold));
    let v = &eig.eigenvectors;
    let out = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    (&out + out.transpose()) * 0.5
}

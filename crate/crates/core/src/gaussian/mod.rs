//! Gaussian masses of polytopes, their mean derivatives and the ADF
//! (moment-matching) projection of a Gaussian truncated to a signed region.

mod adf;
pub mod normal;
mod polytope;

use nalgebra::{DMatrix, DVector};

pub use adf::{adf_update, psd_repair, AdfUpdate};
pub use normal::{bvn_cdf, std_cdf, std_pdf, OrthantOptions};
pub use polytope::{cdf_grad_mu, cdf_hess_mu, polytope_mass, polytope_moments, region_prob, PolytopeMoments};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianDist {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianDist {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if cov.nrows() != n || cov.ncols() != n {
            return Err(Error::InvalidArgument(format!(
                "covariance is {}x{}, mean has {n} entries",
                cov.nrows(),
                cov.ncols()
            )));
        }
        Ok(Self { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn is_finite(&self) -> bool {
        self.mean.iter().chain(self.cov.iter()).all(|v| v.is_finite())
    }

    /// `P(x <= upper)` componentwise.
    pub fn cdf(&self, upper: &[f64], opts: &OrthantOptions) -> Result<f64> {
        let mean: Vec<f64> = self.mean.iter().copied().collect();
        normal::orthant(&mean, &self.cov, upper, opts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianConfig {
    /// Target absolute error of each normal CDF evaluation.
    pub mvn_tol: f64,
    /// Relative step of the finite-difference Hessian diagonal.
    pub hess_fd_step_scale: f64,
    /// Eigenvalue floor, relative to `max(trace, 1)`.
    pub psd_floor: f64,
    /// Row variances below this are treated as point masses.
    pub degenerate_var: f64,
    /// Base seed of the lattice QMC used in four or more dimensions.
    pub qmc_seed: u64,
}

impl Default for GaussianConfig {
    fn default() -> Self {
        Self {
            mvn_tol: 1e-6,
            hess_fd_step_scale: 1e-4,
            psd_floor: 1e-10,
            degenerate_var: 1e-12,
            qmc_seed: 0x5eed_cafe,
        }
    }
}

impl GaussianConfig {
    pub fn orthant_options(&self) -> OrthantOptions {
        OrthantOptions {
            tol: self.mvn_tol,
            degenerate_var: self.degenerate_var,
            seed: self.qmc_seed,
        }
    }
}

//! Dormand-Prince 5(4) integration of the closed moment system.

use super::{MomentField, MomentState};
use crate::error::{Error, Result};
use crate::gaussian::psd_repair;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Eigenvalue floor applied to the final covariance.
    pub psd_floor: f64,
    /// Upper bound on the step, if any.
    pub max_step: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-6,
            atol: 1e-8,
            psd_floor: 1e-10,
            max_step: None,
        }
    }
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order solution minus embedded fourth-order solution.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrate from `state.time` to `t_target`. The returned covariance is
/// symmetrised and PSD-repaired.
pub fn integrate(field: &MomentField, state: &MomentState, t_target: f64, opts: &OdeOptions) -> Result<MomentState> {
    let t0 = state.time;
    if t_target < t0 || !t_target.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "cannot integrate from t = {t0} back to t = {t_target}"
        )));
    }
    if t_target == t0 {
        return Ok(state.clone());
    }
    let layout = field.layout;
    let span = t_target - t0;
    let dim = layout.len();
    let mut y = state.to_flat(layout);
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { time: t0 });
    }
    let mut k = vec![vec![0.0; dim]; 7];
    let mut tmp = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    field.rhs_flat(&y, &mut k[0]);
    if k[0].iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { time: t0 });
    }
    let max_step = opts.max_step.unwrap_or(span).min(span);
    let weight = |a: f64, b: f64| opts.atol + opts.rtol * a.abs().max(b.abs());
    let norm = |v: &[f64], y: &[f64]| {
        (v.iter().zip(y).map(|(d, y)| (d / weight(*y, *y)).powi(2)).sum::<f64>() / dim.max(1) as f64).sqrt()
    };
    let d0 = norm(&y, &y);
    let d1 = norm(&k[0], &y);
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 * span } else { 0.01 * d0 / d1 };
    h = h.min(max_step).max(1e-10 * span);
    let mut t = t0;
    let mut rejected_last = false;
    while t < t_target {
        if t + h >= t_target || t + 1.01 * h > t_target {
            h = t_target - t;
        }
        for s in 1..7 {
            for i in 0..dim {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += h * A[s][j] * kj[i];
                }
                tmp[i] = acc;
            }
            field.rhs_flat(&tmp, &mut k[s]);
        }
        // stage 7 was evaluated at the fifth-order solution
        y_new.copy_from_slice(&tmp);
        let finite = y_new.iter().chain(&k[6]).all(|v| v.is_finite());
        let err = if finite {
            let mut sum = 0.0;
            for i in 0..dim {
                let mut e = 0.0;
                for (s, ks) in k.iter().enumerate() {
                    e += E[s] * ks[i];
                }
                let sc = weight(y[i], y_new[i]);
                sum += (h * e / sc).powi(2);
            }
            (sum / dim.max(1) as f64).sqrt()
        } else {
            f64::INFINITY
        };
        if err <= 1.0 {
            t = if h == t_target - t { t_target } else { t + h };
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * if rejected_last { factor.min(1.0) } else { factor }).min(max_step);
            rejected_last = false;
        } else {
            let factor = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.2, 1.0) } else { 0.2 };
            h *= factor;
            rejected_last = true;
            if h < 1e-12 * span {
                return Err(if finite {
                    Error::Stiffness { time: t, step: h }
                } else {
                    Error::NonFinite { time: t }
                });
            }
        }
    }
    let mut out = MomentState::from_flat(&y, layout, t_target);
    out.sigma = psd_repair(&out.sigma, opts.psd_floor);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn birth_death_closed_form() {
        let net = parse_model("param k = 5\nparam d = 1\nspecies X = 0\nreaction b: 0 -> X @ k\nreaction m: X -> 0 @ d*X\n").unwrap();
        let field = MomentField::from_network(&net).unwrap();
        let mut st = MomentState {
            mu: DVector::zeros(1),
            sigma: DMatrix::zeros(1, 1),
            time: 0.0,
        };
        let opts = OdeOptions::default();
        for i in 1..=20 {
            let t = 0.5 * i as f64;
            st = integrate(&field, &st, t, &opts).unwrap();
            let exact = 5.0 * (1.0 - (-t).exp());
            assert!((st.mu[0] - exact).abs() < 1e-5, "t={t}");
            assert!((st.sigma[(0, 0)] - exact).abs() < 1e-5, "t={t}");
        }
        assert!((st.mu[0] - 4.99977).abs() < 1e-5);
    }

    #[test]
    fn zero_span_is_identity_and_backwards_is_rejected() {
        let net = parse_model("species X = 3\nreaction m: X -> 0 @ X\n").unwrap();
        let field = MomentField::from_network(&net).unwrap();
        let st = MomentState::initial(&net, 1e-6);
        assert_eq!(integrate(&field, &st, 0.0, &OdeOptions::default()).unwrap(), st);
        let later = MomentState { time: 1.0, ..st };
        assert!(integrate(&field, &later, 0.5, &OdeOptions::default()).is_err());
    }

    #[test]
    fn blow_up_is_reported() {
        // dX/dt = X^2 (mean part) escapes to infinity before t = 1.
        let net = parse_model("species X = 2\nreaction r: 2*X -> 3*X @ X*(X-1)\n").unwrap();
        let field = MomentField::from_network(&net).unwrap();
        let st = MomentState::initial(&net, 1e-6);
        let err = integrate(&field, &st, 1.0, &OdeOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Stiffness { .. } | Error::NonFinite { .. }), "{err:?}");
    }
}

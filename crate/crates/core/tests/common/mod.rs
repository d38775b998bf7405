//! Independent numerical oracles shared by the integration tests.

#![allow(dead_code)]

use mcsbi::gaussian::{std_cdf, std_pdf};
use mcsbi::property::{HalfSpace, Polytope};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                let (mut q0, mut q1) = (1.0, z);
                for k in 2..=n {
                    let q2 = ((2 * k - 1) as f64 * z * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = n as f64 * (z * q1 - q0) / (z * z - 1.0);
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dq * dq);
                break;
            }
        }
    }
    (x, w)
}

/// Composite Gauss-Legendre integral of a vector-valued `f` over each
/// interval between consecutive `breaks`.
pub fn integrate_vec<const K: usize>(f: &dyn Fn(f64) -> [f64; K], breaks: &[f64], panels: usize) -> [f64; K] {
    let (nodes, weights) = gauss_legendre(20);
    let mut total = [0.0; K];
    for seg in breaks.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        if b <= a {
            continue;
        }
        let h = (b - a) / panels as f64;
        for p in 0..panels {
            let lo = a + p as f64 * h;
            for (x, w) in nodes.iter().zip(&weights) {
                let v = f(lo + 0.5 * h * (x + 1.0));
                for k in 0..K {
                    total[k] += 0.5 * h * w * v[k];
                }
            }
        }
    }
    total
}

/// Symmetric positive definite matrix with eigenvalues roughly in
/// `[0.3, 3]`.
pub fn random_spd(rng: &mut impl Rng, d: usize) -> DMatrix<f64> {
    let l = DMatrix::from_fn(d, d, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Greater => rng.gen_range(-0.5..0.5),
        std::cmp::Ordering::Equal => rng.gen_range(0.7..1.4),
        std::cmp::Ordering::Less => 0.0,
    });
    &l * l.transpose()
}

/// Rows `lo <= a . x <= hi`, with infinite ends allowed.
#[derive(Debug, Clone)]
pub struct BoxRows {
    pub rows: Vec<(Vec<f64>, f64, f64)>,
}

impl BoxRows {
    pub fn polytope(&self, dim: usize) -> Polytope {
        let mut hs = Vec::new();
        for (a, lo, hi) in &self.rows {
            if hi.is_finite() {
                hs.push(HalfSpace { a: a.clone(), b: *hi });
            }
            if lo.is_finite() {
                hs.push(HalfSpace {
                    a: a.iter().map(|v| -v).collect(),
                    b: -lo,
                });
            }
        }
        Polytope::from_half_spaces(dim, &hs).expect("non-empty box")
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.rows.iter().all(|(a, lo, hi)| {
            let v: f64 = a.iter().zip(x).map(|(a, x)| a * x).sum();
            v >= *lo && v <= *hi
        })
    }
}

/// Random rows in `d` dimensions, one per coordinate direction, with
/// directions kept away from collinearity. Each row is two-sided or
/// one-sided at random, placed within a few standard deviations of the mean.
pub fn random_rows(rng: &mut impl Rng, mean: &DVector<f64>, cov: &DMatrix<f64>, d: usize, k: usize) -> BoxRows {
    loop {
        let dirs: Vec<Vec<f64>> = (0..k)
            .map(|r| {
                (0..d)
                    .map(|c| if c == r { 1.0 } else { rng.gen_range(-0.6..0.6) })
                    .collect()
            })
            .collect();
        let a = DMatrix::from_fn(k, d, |i, j| dirs[i][j]);
        let s = &a * cov * a.transpose();
        let well_conditioned = (0..k).all(|i| {
            (0..k).all(|j| i == j || (s[(i, j)] / (s[(i, i)] * s[(j, j)]).sqrt()).abs() < 0.9)
        });
        if !well_conditioned {
            continue;
        }
        let rows = dirs
            .into_iter()
            .enumerate()
            .map(|(i, dir)| {
                let m: f64 = dir.iter().zip(mean.iter()).map(|(a, x)| a * x).sum();
                let sd = s[(i, i)].sqrt();
                let c = m + sd * rng.gen_range(-1.5..1.5);
                let w = sd * rng.gen_range(0.3..2.5);
                match rng.gen_range(0..3) {
                    0 => (dir, c - w, c + w),
                    1 => (dir, f64::NEG_INFINITY, c),
                    _ => (dir, c, f64::INFINITY),
                }
            })
            .collect();
        return BoxRows { rows };
    }
}

/// Truncated moments `(Z, E[x 1], E[x^2 1])` of `N(c, t^2)` on `[u, w]`.
fn interval_moments(c: f64, t: f64, u: f64, w: f64) -> [f64; 3] {
    if w <= u {
        return [0.0; 3];
    }
    let (al, be) = ((u - c) / t, (w - c) / t);
    let (pa, pb) = (std_pdf(al), std_pdf(be));
    let m0 = std_cdf(be) - std_cdf(al);
    let apa = if al.is_finite() { al * pa } else { 0.0 };
    let bpb = if be.is_finite() { be * pb } else { 0.0 };
    let m1 = c * m0 + t * (pa - pb);
    let m2 = (c * c + t * t) * m0 + 2.0 * c * t * (pa - pb) + t * t * (apa - bpb);
    [m0, m1, m2]
}

/// Mass, mean and covariance of `N(mean, cov)` restricted to `rows`, in one
/// or two dimensions, by quadrature over the first coordinate with the
/// second integrated in closed form.
pub fn truncated_moments(mean: &DVector<f64>, cov: &DMatrix<f64>, rows: &BoxRows) -> (f64, DVector<f64>, DMatrix<f64>) {
    let d = mean.len();
    let (m1, s1) = (mean[0], cov[(0, 0)].sqrt());
    let span = 12.0 * s1;
    if d == 1 {
        let mut lo = m1 - span;
        let mut hi = m1 + span;
        for (a, l, h) in &rows.rows {
            let (l, h) = if a[0] > 0.0 { (l / a[0], h / a[0]) } else { (h / a[0], l / a[0]) };
            lo = lo.max(l);
            hi = hi.min(h);
        }
        let [z, e1, e2] = interval_moments(m1, s1, lo, hi);
        let mu = e1 / z;
        return (z, DVector::from_element(1, mu), DMatrix::from_element(1, 1, e2 / z - mu * mu));
    }
    assert_eq!(d, 2);
    let (m2, v12, v22) = (mean[1], cov[(0, 1)], cov[(1, 1)]);
    let beta = v12 / cov[(0, 0)];
    let tau = (v22 - beta * v12).sqrt();
    // x2 range as a function of x1; every boundary is a line in x1
    let bounds = |x1: f64| -> (f64, f64) {
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (a, l, h) in &rows.rows {
            let r = a[0] * x1;
            if a[1] == 0.0 {
                if r < *l || r > *h {
                    return (1.0, 0.0);
                }
                continue;
            }
            let (p, q) = ((l - r) / a[1], (h - r) / a[1]);
            let (p, q) = if a[1] > 0.0 { (p, q) } else { (q, p) };
            lo = lo.max(p);
            hi = hi.min(q);
        }
        (lo, hi)
    };
    let mut lines: Vec<(f64, f64, f64)> = Vec::new();
    for (a, l, h) in &rows.rows {
        for b in [l, h] {
            if b.is_finite() {
                lines.push((a[0], a[1], *b));
            }
        }
    }
    let mut breaks = vec![m1 - span, m1 + span];
    for (i, &(a1, a2, b)) in lines.iter().enumerate() {
        if a2 == 0.0 {
            breaks.push(b / a1);
        }
        for &(c1, c2, e) in &lines[i + 1..] {
            let det = a1 * c2 - a2 * c1;
            if det.abs() > 1e-14 {
                breaks.push((b * c2 - a2 * e) / det);
            }
        }
    }
    breaks.retain(|x| (m1 - span..=m1 + span).contains(x));
    breaks.sort_by(f64::total_cmp);
    let f = |x1: f64| -> [f64; 6] {
        let (lo, hi) = bounds(x1);
        let p = std_pdf((x1 - m1) / s1) / s1;
        let [z, e1, e2] = interval_moments(m2 + beta * (x1 - m1), tau, lo, hi);
        [p * z, p * x1 * z, p * e1, p * x1 * x1 * z, p * x1 * e1, p * e2]
    };
    let [z, a, b, aa, ab, bb] = integrate_vec(&f, &breaks, 64);
    let mu = DVector::from_vec(vec![a / z, b / z]);
    let c = DMatrix::from_row_slice(
        2,
        2,
        &[aa / z - mu[0] * mu[0], ab / z - mu[0] * mu[1], ab / z - mu[0] * mu[1], bb / z - mu[1] * mu[1]],
    );
    (z, mu, c)
}

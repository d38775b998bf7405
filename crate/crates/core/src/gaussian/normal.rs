//! Normal orthant probabilities `P(Y <= u)` for `Y ~ N(m, S)`.
//!
//! One dimension uses the complementary error function, two dimensions
//! Genz's Gauss-Legendre scheme for the bivariate normal, three dimensions an
//! adaptive Gauss-Kronrod integral of the bivariate CDF conditioned on one
//! coordinate, and four or more separation-of-variables quasi-Monte Carlo on a
//! randomly shifted Richtmyer lattice with a fixed seed.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 8;

/// Standard normal density.
#[inline]
pub fn std_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF.
#[inline]
pub fn std_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        1.0
    } else if x == f64::NEG_INFINITY {
        0.0
    } else {
        0.5 * erfc(-x * FRAC_1_SQRT_2)
    }
}

/// Inverse standard normal CDF.
pub fn std_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if p >= 1.0 {
        f64::INFINITY
    } else {
        let x = -SQRT_2 * erfc_inv(2.0 * p);
        // one Halley step against the accurate CDF
        let e = std_cdf(x) - p;
        let u = e / std_pdf(x);
        let x = x - u / (1.0 + 0.5 * x * u);
        if x.is_finite() {
            x
        } else {
            -SQRT_2 * erfc_inv(2.0 * p)
        }
    }
}

/// Gauss-Legendre half-rules (nodes in (0,1), weights) used by `bvn_upper`.
const GL6: ([f64; 3], [f64; 3]) = (
    [0.932_469_514_203_152_2, 0.661_209_386_466_264_7, 0.238_619_186_083_197],
    [0.171_324_492_379_170_5, 0.360_761_573_048_138_4, 0.467_913_934_572_690_4],
);
const GL12: ([f64; 6], [f64; 6]) = (
    [
        0.981_560_634_246_719_1,
        0.904_117_256_370_475,
        0.769_902_674_194_305,
        0.587_317_954_286_617_1,
        0.367_831_498_998_180_2,
        0.125_233_408_511_469_2,
    ],
    [
        0.047_175_336_386_511_77,
        0.106_939_325_995_318_3,
        0.160_078_328_543_346_4,
        0.203_167_426_723_065_9,
        0.233_492_536_538_354_7,
        0.249_147_045_813_402_9,
    ],
);
const GL20: ([f64; 10], [f64; 10]) = (
    [
        0.993_128_599_185_094_9,
        0.963_971_927_277_913_8,
        0.912_234_428_251_325_9,
        0.839_116_971_822_218_8,
        0.746_331_906_460_150_8,
        0.636_053_680_726_515,
        0.510_867_001_950_827_1,
        0.373_706_088_715_419_6,
        0.227_785_851_141_645_1,
        0.076_526_521_133_497_33,
    ],
    [
        0.017_614_007_139_152_12,
        0.040_601_429_800_386_94,
        0.062_672_048_334_109_06,
        0.083_276_741_576_704_75,
        0.101_930_119_817_240_4,
        0.118_194_531_961_518_4,
        0.131_688_638_449_176_6,
        0.142_096_109_318_382_1,
        0.149_172_986_472_603_7,
        0.152_753_387_130_725_9,
    ],
);

/// `P(X > h, Y > k)` for standard normals with correlation `r` (Genz 2004).
pub fn bvn_upper(h: f64, k: f64, r: f64) -> f64 {
    if h == f64::INFINITY || k == f64::INFINITY {
        return 0.0;
    }
    if h == f64::NEG_INFINITY {
        return if k == f64::NEG_INFINITY { 1.0 } else { std_cdf(-k) };
    }
    if k == f64::NEG_INFINITY {
        return std_cdf(-h);
    }
    let r = r.clamp(-1.0, 1.0);
    if r == 0.0 {
        return std_cdf(-h) * std_cdf(-k);
    }
    let (x, w): (&[f64], &[f64]) = if r.abs() < 0.3 {
        (&GL6.0, &GL6.1)
    } else if r.abs() < 0.75 {
        (&GL12.0, &GL12.1)
    } else {
        (&GL20.0, &GL20.1)
    };
    let tp = 2.0 * PI;
    let mut hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        let hs = (h * h + k * k) / 2.0;
        let asr = r.asin() / 2.0;
        for (xi, wi) in x.iter().zip(w) {
            for node in [1.0 - xi, 1.0 + xi] {
                let sn = (asr * node).sin();
                bvn += wi * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        bvn = bvn * asr / tp + std_cdf(-h) * std_cdf(-k);
    } else {
        let mut k = k;
        if r < 0.0 {
            k = -k;
            hk = -hk;
        }
        if r.abs() < 1.0 {
            let as_ = 1.0 - r * r;
            let mut a = as_.sqrt();
            let bs = (h - k) * (h - k);
            let c = (4.0 - hk) / 8.0;
            let d = (12.0 - hk) / 80.0;
            let asr = -(bs / as_ + hk) / 2.0;
            if asr > -100.0 {
                bvn = a * asr.exp() * (1.0 - c * (bs - as_) * (1.0 - d * bs) / 3.0 + c * d * as_ * as_);
            }
            if hk > -100.0 {
                let b = bs.sqrt();
                let sp = tp.sqrt() * std_cdf(-b / a);
                bvn -= (-hk / 2.0).exp() * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
            }
            a /= 2.0;
            let mut sum = 0.0;
            for (xi, wi) in x.iter().zip(w) {
                for node in [1.0 - xi, 1.0 + xi] {
                    let xs = (a * node) * (a * node);
                    let asr = -(bs / xs + hk) / 2.0;
                    if asr > -100.0 {
                        let sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
                        let rs = (1.0 - xs).sqrt();
                        let ep = (-(hk / 2.0) * xs / ((1.0 + rs) * (1.0 + rs))).exp() / rs;
                        sum += wi * asr.exp() * (sp - ep);
                    }
                }
            }
            bvn = (a * sum - bvn) / tp;
        }
        if r > 0.0 {
            bvn += std_cdf(-h.max(k));
        } else if h >= k {
            bvn = -bvn;
        } else {
            let l = if h < 0.0 {
                std_cdf(k) - std_cdf(h)
            } else {
                std_cdf(-h) - std_cdf(-k)
            };
            bvn = l - bvn;
        }
    }
    bvn.clamp(0.0, 1.0)
}

/// `P(X <= h, Y <= k)` for standard normals with correlation `r`.
#[inline]
pub fn bvn_cdf(h: f64, k: f64, r: f64) -> f64 {
    bvn_upper(-h, -k, r)
}

/// Adaptive Gauss-Kronrod (7/15) integral of `f` over `[a, b]`.
pub fn integrate_gk(f: &dyn Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> f64 {
    const XGK: [f64; 8] = [
        0.991_455_371_120_812_6,
        0.949_107_912_342_758_5,
        0.864_864_423_359_769_1,
        0.741_531_185_599_394_4,
        0.586_087_235_467_691_1,
        0.405_845_151_377_397_2,
        0.207_784_955_007_898_5,
        0.0,
    ];
    const WGK: [f64; 8] = [
        0.022_935_322_010_529_22,
        0.063_092_092_629_978_55,
        0.104_790_010_322_250_2,
        0.140_653_259_715_525_9,
        0.169_004_726_639_267_9,
        0.190_350_578_064_785_4,
        0.204_432_940_075_298_9,
        0.209_482_141_084_727_8,
    ];
    const WG: [f64; 4] = [
        0.129_484_966_168_869_7,
        0.279_705_391_489_276_7,
        0.381_830_050_505_118_9,
        0.417_959_183_673_469_4,
    ];
    fn rule(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let fc = f(c);
        let mut k = WGK[7] * fc;
        let mut g = WG[3] * fc;
        for j in 0..7 {
            let dx = h * XGK[j];
            let s = f(c - dx) + f(c + dx);
            k += WGK[j] * s;
            if j % 2 == 1 {
                g += WG[j / 2] * s;
            }
        }
        (k * h, ((k - g) * h).abs())
    }
    fn recurse(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (val, err) = rule(f, a, b);
        if err <= tol || depth >= 40 || (b - a).abs() < 1e-14 * (1.0 + a.abs()) {
            return val;
        }
        let m = 0.5 * (a + b);
        recurse(f, a, m, tol / 2.0, depth + 1) + recurse(f, m, b, tol / 2.0, depth + 1)
    }
    if a >= b {
        return 0.0;
    }
    recurse(f, a, b, abs_tol, 0)
}

/// Trivariate standard orthant `P(X <= b)` with correlation matrix `r`.
fn tvn_cdf(b: [f64; 3], r: [[f64; 3]; 3], tol: f64) -> f64 {
    // condition on the coordinate least correlated with the other two
    let worst = |i: usize| (0..3).filter(|&j| j != i).map(|j| r[i][j].abs()).fold(0.0, f64::max);
    let first = (0..3)
        .min_by(|&i, &j| worst(i).total_cmp(&worst(j)))
        .unwrap_or(0);
    let rest: Vec<usize> = (0..3).filter(|&j| j != first).collect();
    let (p, q) = (rest[0], rest[1]);
    let (r1p, r1q) = (r[first][p], r[first][q]);
    let sp = (1.0 - r1p * r1p).max(0.0).sqrt();
    let sq = (1.0 - r1q * r1q).max(0.0).sqrt();
    let upper = std_cdf(b[first]);
    if upper <= 0.0 {
        return 0.0;
    }
    let cond = |x: f64, bi: f64, rho: f64, s: f64| {
        if s < 1e-9 {
            if bi - rho * x >= 0.0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        } else {
            (bi - rho * x) / s
        }
    };
    let rho = if sp < 1e-9 || sq < 1e-9 {
        0.0
    } else {
        ((r[p][q] - r1p * r1q) / (sp * sq)).clamp(-1.0, 1.0)
    };
    let integrand = |u: f64| {
        let x = std_quantile(u);
        bvn_cdf(cond(x, b[p], r1p, sp), cond(x, b[q], r1q, sq), rho)
    };
    integrate_gk(&integrand, 0.0, upper, tol * 0.1).clamp(0.0, 1.0)
}

/// Richtmyer lattice QMC over the separation-of-variables transform.
fn qmc_cdf(b: &[f64], r: &DMatrix<f64>, tol: f64, seed: u64) -> f64 {
    const PRIMES: [f64; 8] = [2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0];
    const SHIFTS: usize = 12;
    let k = b.len();
    let l = cholesky_semidefinite(r);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut n = 1024usize;
    let mut y = vec![0.0; k];
    let estimate = loop {
        let mut means = Vec::with_capacity(SHIFTS);
        for _ in 0..SHIFTS {
            let shift: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
            let mut acc = 0.0;
            for q in 1..=n {
                let mut f = 1.0;
                for i in 0..k {
                    let t: f64 = (0..i).map(|j| l[(i, j)] * y[j]).sum();
                    let e = if l[(i, i)] > 1e-10 {
                        std_cdf((b[i] - t) / l[(i, i)])
                    } else if b[i] - t >= 0.0 {
                        1.0
                    } else {
                        0.0
                    };
                    f *= e;
                    if f == 0.0 {
                        break;
                    }
                    if i + 1 < k {
                        let w = (q as f64 * PRIMES[i].sqrt() + shift[i]).fract();
                        let w = (2.0 * w - 1.0).abs();
                        y[i] = std_quantile((w * e).clamp(1e-300, 1.0 - 1e-16));
                    }
                }
                acc += f;
            }
            means.push(acc / n as f64);
        }
        let m = means.iter().sum::<f64>() / SHIFTS as f64;
        let var = means.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (SHIFTS * (SHIFTS - 1)) as f64;
        if 3.0 * var.sqrt() < tol || n >= 1 << 16 {
            break m;
        }
        n *= 2;
    };
    estimate.clamp(0.0, 1.0)
}

/// Lower-triangular factor of a PSD matrix; columns with a vanishing pivot
/// are left zero.
pub fn cholesky_semidefinite(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let d = a[(j, j)] - (0..j).map(|k| l[(j, k)] * l[(j, k)]).sum::<f64>();
        if d <= 1e-14 * a[(j, j)].abs().max(1e-300) {
            continue;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in j + 1..n {
            let s = a[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
            l[(i, j)] = s / d;
        }
    }
    l
}

/// Settings shared by orthant evaluations.
#[derive(Debug, Clone, Copy)]
pub struct OrthantOptions {
    pub tol: f64,
    /// Coordinates with variance below this are treated as point masses.
    pub degenerate_var: f64,
    pub seed: u64,
}

impl Default for OrthantOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            degenerate_var: 1e-12,
            seed: 0x5eed_cafe,
        }
    }
}

/// `P(Y <= upper)` for `Y ~ N(mean, cov)`. Infinite upper bounds drop their
/// coordinate; degenerate coordinates contribute a 0/1 step at their mean.
pub fn orthant(mean: &[f64], cov: &DMatrix<f64>, upper: &[f64], opts: &OrthantOptions) -> Result<f64> {
    let k = mean.len();
    let mut keep = Vec::with_capacity(k);
    for i in 0..k {
        let u = upper[i];
        if u == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        if u == f64::INFINITY {
            continue;
        }
        let v = cov[(i, i)];
        if !(v.is_finite() && mean[i].is_finite() && u.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite Gaussian input (mean {}, variance {v}, bound {u})",
                mean[i]
            )));
        }
        if v < opts.degenerate_var {
            if mean[i] > u {
                return Ok(0.0);
            }
            continue;
        }
        keep.push(i);
    }
    let d = keep.len();
    if d > MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "normal orthant of dimension {d} exceeds the limit of {MAX_DIM}"
        )));
    }
    let sd: Vec<f64> = keep.iter().map(|&i| cov[(i, i)].sqrt()).collect();
    let z: Vec<f64> = keep
        .iter()
        .zip(&sd)
        .map(|(&i, s)| (upper[i] - mean[i]) / s)
        .collect();
    let corr = |a: usize, b: usize| (cov[(keep[a], keep[b])] / (sd[a] * sd[b])).clamp(-1.0, 1.0);
    Ok(match d {
        0 => 1.0,
        1 => std_cdf(z[0]),
        2 => bvn_cdf(z[0], z[1], corr(0, 1)),
        3 => {
            let mut r = [[1.0; 3]; 3];
            for a in 0..3 {
                for b in 0..3 {
                    if a != b {
                        r[a][b] = corr(a, b);
                    }
                }
            }
            tvn_cdf([z[0], z[1], z[2]], r, opts.tol)
        }
        _ => {
            let r = DMatrix::from_fn(d, d, |a, b| if a == b { 1.0 } else { corr(a, b) });
            let mut seed = opts.seed;
            for v in z.iter().chain(r.iter()) {
                seed = seed.rotate_left(7) ^ v.to_bits().wrapping_mul(0x9e37_79b9_7f4a_7c15);
            }
            qmc_cdf(&z, &r, opts.tol, seed)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent route: integrate `phi(x) Phi((k - r x)/sqrt(1-r^2))`.
    fn bvn_oracle(h: f64, k: f64, r: f64) -> f64 {
        let s = (1.0 - r * r).sqrt();
        let f = |x: f64| std_pdf(x) * std_cdf((k - r * x) / s);
        integrate_gk(&f, -40.0, h, 1e-13)
    }

    #[test]
    fn univariate_basics() {
        assert_eq!(std_cdf(0.0), 0.5);
        assert!((std_cdf(1.96) - 0.975_002_104_851_780).abs() < 1e-12);
        assert!((std_cdf(-1.0) - 0.158_655_253_931_457_05).abs() < 1e-16);
        assert!((std_cdf(-5.0) / 2.866_515_718_791_939e-7 - 1.0).abs() < 1e-13);
        assert!((std_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-13);
        for p in [1e-12, 0.01, 0.3, 0.5, 0.77, 0.999] {
            assert!((std_cdf(std_quantile(p)) / p - 1.0).abs() < 1e-12, "{p}");
        }
    }

    #[test]
    fn bivariate_special_values() {
        assert!((bvn_cdf(0.0, 0.0, 0.0) - 0.25).abs() < 1e-15);
        let exact = 0.25 + 0.5f64.asin() / (2.0 * PI);
        assert!((bvn_cdf(0.0, 0.0, 0.5) - exact).abs() < 1e-12);
        assert!((exact - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn bivariate_against_quadrature() {
        for &r in &[-0.99, -0.95, -0.8, -0.5, -0.1, 0.2, 0.6, 0.9, 0.93, 0.999] {
            for &(h, k) in &[(0.3, -0.7), (-1.5, 2.0), (1.0, 1.0), (-2.5, -0.5), (3.0, -3.0)] {
                let got = bvn_cdf(h, k, r);
                let want = bvn_oracle(h, k, r);
                assert!((got - want).abs() < 1e-9, "h={h} k={k} r={r}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn perfectly_correlated_limits() {
        assert!((bvn_cdf(0.5, 1.0, 1.0) - std_cdf(0.5)).abs() < 1e-15);
        assert!((bvn_cdf(0.5, 1.0, -1.0) - (std_cdf(0.5) - std_cdf(-1.0))).abs() < 1e-12);
        assert_eq!(bvn_cdf(-1.0, 0.5, -1.0), 0.0);
    }

    #[test]
    fn trivariate_independent_and_qmc_agree() {
        let opts = OrthantOptions::default();
        let mean = [0.0; 3];
        let ind = DMatrix::identity(3, 3);
        let p = orthant(&mean, &ind, &[0.0, 0.5, -0.3], &opts).unwrap();
        assert!((p - 0.5 * std_cdf(0.5) * std_cdf(-0.3)).abs() < 1e-9);

        let cov = DMatrix::from_row_slice(3, 3, &[1.0, 0.4, 0.2, 0.4, 2.0, -0.3, 0.2, -0.3, 0.5]);
        let u = [0.3, 1.0, 0.2];
        let tvn = orthant(&mean, &cov, &u, &opts).unwrap();
        let sd: Vec<f64> = (0..3).map(|i| cov[(i, i)].sqrt()).collect();
        let z: Vec<f64> = (0..3).map(|i| u[i] / sd[i]).collect();
        let r = DMatrix::from_fn(3, 3, |a, b| cov[(a, b)] / (sd[a] * sd[b]));
        let qmc = qmc_cdf(&z, &r, 1e-6, 7);
        assert!((tvn - qmc).abs() < 5e-6, "{tvn} vs {qmc}");
    }

    #[test]
    fn four_dim_equicorrelated_orthant() {
        // P(all <= 0) with equicorrelation 1/2 in 4 dims is 1/5.
        let cov = DMatrix::from_fn(4, 4, |a, b| if a == b { 1.0 } else { 0.5 });
        let p = orthant(&[0.0; 4], &cov, &[0.0; 4], &OrthantOptions::default()).unwrap();
        assert!((p - 0.2).abs() < 3e-6, "{p}");
    }

    #[test]
    fn degenerate_and_infinite_coordinates() {
        let opts = OrthantOptions::default();
        let cov = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(orthant(&[1.0, 0.0], &cov, &[0.5, 0.0], &opts).unwrap(), 0.0);
        assert_eq!(orthant(&[0.0, 0.0], &cov, &[0.5, 0.0], &opts).unwrap(), 0.5);
        assert_eq!(
            orthant(&[0.0, 0.0], &DMatrix::identity(2, 2), &[f64::INFINITY, 0.0], &opts).unwrap(),
            0.5
        );
        assert!(orthant(&[0.0; 9], &DMatrix::identity(9, 9), &[0.0; 9], &opts).is_err());
    }
}

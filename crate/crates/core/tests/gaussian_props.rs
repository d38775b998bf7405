mod common;

use mcsbi::gaussian::{adf_update, psd_repair, region_prob, GaussianConfig, GaussianDist};
use mcsbi::model::builtin_model;
use mcsbi::property::{compile_regions, parse_property, HalfSpace, Polytope, SignedRegion};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{random_rows, random_spd, truncated_moments};

fn random_case(seed: u64, d: usize) -> (GaussianDist, common::BoxRows) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean = DVector::from_fn(d, |i, _| (i as f64 - 1.0) * 0.7 + (seed % 7) as f64 * 0.1);
    let cov = random_spd(&mut rng, d);
    let rows = random_rows(&mut rng, &mean, &cov, d, d);
    (GaussianDist::new(mean, cov).unwrap(), rows)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn region_and_complement_sum_to_one(seed in any::<u64>(), d in 1usize..=3) {
        let (dist, rows) = random_case(seed, d);
        let p = rows.polytope(d);
        let region = SignedRegion::from_terms(d, vec![(1, p.clone())]);
        let complement = SignedRegion::from_terms(d, vec![(1, Polytope::whole(d)), (-1, p)]);
        let cfg = GaussianConfig::default();
        let total = region_prob(&dist, &region, &cfg).unwrap() + region_prob(&dist, &complement, &cfg).unwrap();
        prop_assert!((total - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn sir_regions_partition_any_gaussian(
        mean in prop::collection::vec(0.0f64..50.0, 3),
        scale in 0.5f64..30.0,
        seed in any::<u64>(),
    ) {
        let net = builtin_model("sir").unwrap();
        let f = parse_property("P=? [ (X_S > 1 & X_I < 30) U[0,4] (X_I < X_R | X_S = 0) ]", &net).unwrap();
        let regions = compile_regions(&f, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = GaussianDist::new(DVector::from_vec(mean), random_spd(&mut rng, 3) * scale).unwrap();
        let cfg = GaussianConfig::default();
        let total: f64 = [&regions.undetermined, &regions.target, &regions.false_region]
            .iter()
            .map(|r| region_prob(&dist, r, &cfg).unwrap())
            .sum();
        prop_assert!((total - 1.0).abs() <= 1e-6, "{total}");
    }

    #[test]
    fn evidence_ignores_row_order(seed in any::<u64>(), d in 2usize..=3, rot in 0usize..6) {
        let (dist, rows) = random_case(seed, d);
        let cfg = GaussianConfig::default();
        let mut hs: Vec<HalfSpace> = rows.polytope(d).half_spaces();
        let base = SignedRegion::from_terms(d, vec![(1, Polytope::from_half_spaces(d, &hs).unwrap())]);
        let len = hs.len();
        hs.rotate_left(rot % len);
        hs.reverse();
        let permuted = SignedRegion::from_terms(d, vec![(1, Polytope::from_half_spaces(d, &hs).unwrap())]);
        let a = adf_update(&dist, &base, &cfg);
        let b = adf_update(&dist, &permuted, &cfg);
        if let (Ok(a), Ok(b)) = (a, b) {
            prop_assert!((a.mass - b.mass).abs() <= 1e-12);
        }
    }

    #[test]
    fn conditioning_matches_truncated_moments(seed in any::<u64>(), d in 1usize..=2) {
        let (dist, rows) = random_case(seed, d);
        let (z, mu, sigma) = truncated_moments(&dist.mean, &dist.cov, &rows);
        prop_assume!(z > 1e-3);
        let region = SignedRegion::from_terms(d, vec![(1, rows.polytope(d))]);
        let post = adf_update(&dist, &region, &GaussianConfig::default()).unwrap().posterior;
        for i in 0..d {
            prop_assert!((post.mean[i] - mu[i]).abs() <= 1e-5 * mu[i].abs().max(sigma[(i, i)].sqrt()));
            for j in 0..d {
                let s = sigma[(i, j)].abs().max((sigma[(i, i)] * sigma[(j, j)]).sqrt());
                prop_assert!((post.cov[(i, j)] - sigma[(i, j)]).abs() <= 1e-5 * s);
            }
        }
    }

    #[test]
    fn psd_repair_is_idempotent_and_psd(entries in prop::collection::vec(-3.0f64..3.0, 9)) {
        let m = DMatrix::from_row_slice(3, 3, &entries);
        let once = psd_repair(&m, 1e-10);
        let twice = psd_repair(&once, 1e-10);
        prop_assert_eq!(&once, &twice);
        let eig = once.symmetric_eigen();
        prop_assert!(eig.eigenvalues.iter().all(|&l| l > 0.0));
    }
}

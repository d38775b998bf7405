use mcsbi::engine::Grid;
use mcsbi::model::{builtin_model, parse_model, BuiltinPreset};
use mcsbi::property::{compile_regions, parse_property};
use mcsbi::ssa::{estimate_cdf, exact_cme_cdf, monitor_until, simulate, EmpiricalCdf, Trajectory};
use proptest::prelude::*;

#[test]
fn exact_oracle_conserves_mass() {
    let net = builtin_model("sir").unwrap();
    for prop in ["P=? [ (X_I < 30) U[0,10] (X_I = 0) ]", "P=? [ (X_S > 1) U[0,4] (X_I < X_R) ]"] {
        let f = parse_property(prop, &net).unwrap();
        let e = exact_cme_cdf(&net, &f, &Grid::new(f.horizon, 50).unwrap(), None).unwrap();
        for i in 0..e.times.len() {
            let total = e.cdf[i] + e.false_cdf[i] + e.leaked[i] + e.remaining[i];
            assert!((total - 1.0).abs() <= 1e-9, "{total}");
        }
    }
}

#[test]
fn empirical_error_shrinks_with_samples() {
    let net = parse_model("species X = 1\nreaction d: X -> 0 @ X\n").unwrap();
    let f = parse_property("P=? [ F[0,3] X = 0 ]", &net).unwrap();
    let grid = Grid::new(3.0, 30).unwrap();
    let errors: Vec<f64> = [100, 1000, 10_000]
        .iter()
        .map(|&n| {
            let mut total = 0.0;
            for seed in 0..3 {
                let e = estimate_cdf(&net, &f, &grid, n, 0.99, seed).unwrap();
                total += e
                    .times
                    .iter()
                    .zip(&e.cdf)
                    .map(|(t, c)| (c - (1.0 - (-t).exp())).abs())
                    .fold(0.0, f64::max);
            }
            total / 3.0
        })
        .collect();
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
}

#[test]
fn exact_oracle_agrees_with_simulation_on_sir() {
    let net = builtin_model("sir").unwrap();
    let f = parse_property(BuiltinPreset::get("sir").unwrap().property, &net).unwrap();
    let grid = Grid::new(f.horizon, 20).unwrap();
    let exact = exact_cme_cdf(&net, &f, &grid, None).unwrap();
    let ssa = estimate_cdf(&net, &f, &grid, 10_000, 0.99, 99).unwrap();
    for (i, (a, b)) in exact.cdf.iter().zip(&ssa.cdf).enumerate() {
        assert!((a - b).abs() <= ssa.half_width, "grid point {i}: exact {a} vs ssa {b}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn splitting_constant_segments_keeps_the_outcome(seed in 0u64..1000, cuts in prop::collection::vec(0.0f64..1.0, 1..6)) {
        let net = builtin_model("sir").unwrap();
        let f = parse_property("P=? [ (X_I < 20) U[0,3] (X_R > 15) ]", &net).unwrap();
        let regions = compile_regions(&f, 3).unwrap();
        let tr = simulate(&net, 3.0, seed).unwrap();
        let mut times = tr.times.clone();
        let mut states = tr.states.clone();
        for c in cuts {
            let t = c * tr.t_end;
            let k = times.partition_point(|&s| s <= t);
            if k > 0 && times[k - 1] < t {
                let s = states[k - 1].clone();
                times.insert(k, t);
                states.insert(k, s);
            }
        }
        let split = Trajectory { times, states, t_end: tr.t_end };
        prop_assert_eq!(monitor_until(&tr, &regions), monitor_until(&split, &regions));
    }

    #[test]
    fn empirical_cdf_is_monotone(seed in 0u64..50) {
        let net = builtin_model("sir").unwrap();
        let f = parse_property("P=? [ (X_I < 30) U[0,10] (X_I = 0) ]", &net).unwrap();
        let e: EmpiricalCdf = estimate_cdf(&net, &f, &Grid::new(10.0, 40).unwrap(), 50, 0.99, seed).unwrap();
        prop_assert!(e.cdf.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(e.cdf.iter().zip(&e.absorb_cdf).all(|(c, a)| *c <= *a && *a <= 1.0));
        prop_assert!(e.half_width >= 0.0);
    }
}

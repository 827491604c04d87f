use dlt_surrogate::data::{record_rng, sample_config, SamplerRanges};
use dlt_surrogate::dlt::{oracle_solve, simulate_timeline, solve_optimal, to_time_rates, TimeRates};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

fn rates_strategy() -> impl Strategy<Value = (TimeRates, f64)> {
    (1usize..=20).prop_flat_map(|n| {
        (
            1.0f64..100.0,
            prop::collection::vec(1.0f64..100.0, n),
            prop::collection::vec(0.0f64..100.0, n),
            0.5f64..200.0,
        )
            .prop_map(|(w0, w, z, load)| (TimeRates::new(w0, w, z).unwrap(), load))
    })
}

proptest! {
    #[test]
    fn conservation_and_positivity((rates, load) in rates_strategy()) {
        let a = solve_optimal(&rates, load).unwrap();
        prop_assert!((a.alpha.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(a.alpha.iter().all(|&x| x > 0.0 && x < 1.0));
        prop_assert_eq!(a.t_star, a.t_star_norm * load);
    }

    #[test]
    fn simultaneous_finish((rates, load) in rates_strategy()) {
        let a = solve_optimal(&rates, load).unwrap();
        let tl = simulate_timeline(&rates, &a, load).unwrap();
        for t in &tl.compute_finish {
            prop_assert!((t - a.t_star).abs() / a.t_star <= 1e-9);
        }
        for (i, c) in tl.comm_finish.iter().enumerate() {
            prop_assert!(*c <= tl.compute_finish[i + 1]);
            if i > 0 {
                prop_assert!(tl.comm_finish[i - 1] <= *c);
            }
        }
    }

    #[test]
    fn closed_form_matches_oracle((rates, load) in rates_strategy()) {
        let a = solve_optimal(&rates, load).unwrap();
        let o = oracle_solve(&rates, load).unwrap();
        prop_assert!(rel(a.t_star, o.t_star) <= 1e-9);
        for (x, y) in a.alpha.iter().zip(&o.alpha) {
            prop_assert!(rel(*x, *y) <= 1e-9);
        }
    }

    #[test]
    fn scaling_law((rates, load) in rates_strategy(), c in 0.01f64..100.0) {
        let a = solve_optimal(&rates, load).unwrap();
        let b = solve_optimal(&rates, c * load).unwrap();
        prop_assert_eq!(&a.alpha, &b.alpha);
        prop_assert_eq!(a.t_star_norm, b.t_star_norm);
        prop_assert_eq!(b.t_star, a.t_star_norm * (c * load));
    }
}

#[test]
fn homogeneous_closed_form() {
    for (w, z) in [(1.0, 1.0), (3.0, 0.5), (0.7, 4.2)] {
        let rho: f64 = (z + w) / w;
        for n in 1..=10 {
            let rates = TimeRates::new(w, vec![w; n], vec![z; n]).unwrap();
            let a = solve_optimal(&rates, 1.0).unwrap();
            let expected = w * rho.powi(n as i32) * (rho - 1.0) / (rho.powi(n as i32 + 1) - 1.0);
            assert!(rel(a.t_star_norm, expected) <= 1e-12, "w={w} z={z} n={n}");
        }
    }
}

#[test]
fn zero_communication_limit() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let n = rng.gen_range(1..=20);
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..100.0)).collect();
        let w0 = rng.gen_range(1.0..100.0);
        let harmonic = 1.0 / (1.0 / w0 + w.iter().map(|x| 1.0 / x).sum::<f64>());
        let rates = TimeRates::new(w0, w, vec![1e-12; n]).unwrap();
        let a = solve_optimal(&rates, 1.0).unwrap();
        assert!(rel(a.t_star_norm, harmonic) <= 1e-6);
    }
}

#[test]
fn adding_a_child_always_helps() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..100 {
        let n = rng.gen_range(1..=19);
        let w0 = rng.gen_range(1.0..100.0);
        let mut w: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..100.0)).collect();
        let mut z: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..100.0)).collect();
        let before = oracle_solve(&TimeRates::new(w0, w.clone(), z.clone()).unwrap(), 1.0).unwrap();
        // Any finite positive rates, including very slow ones.
        w.push(10f64.powf(rng.gen_range(-1.0..4.0)));
        z.push(10f64.powf(rng.gen_range(-1.0..4.0)));
        let after = oracle_solve(&TimeRates::new(w0, w, z).unwrap(), 1.0).unwrap();
        assert!(after.t_star < before.t_star);
    }
}

#[test]
fn order_matters_but_is_respected() {
    let fast_first = TimeRates::new(10.0, vec![10.0, 10.0], vec![1.0, 50.0]).unwrap();
    let slow_first = TimeRates::new(10.0, vec![10.0, 10.0], vec![50.0, 1.0]).unwrap();
    let a = solve_optimal(&fast_first, 1.0).unwrap();
    let b = solve_optimal(&slow_first, 1.0).unwrap();
    assert!(a.t_star < b.t_star);
}

#[test]
fn sampled_configs_agree_with_oracle() {
    let ranges = SamplerRanges::default();
    for i in 0..1000 {
        let cfg = sample_config(&mut record_rng(99, i), &ranges);
        let rates = to_time_rates(&cfg, 100.0).unwrap();
        let a = solve_optimal(&rates, cfg.load_gb).unwrap();
        let o = oracle_solve(&rates, cfg.load_gb).unwrap();
        assert!(rel(a.t_star, o.t_star) <= 1e-9);
    }
}

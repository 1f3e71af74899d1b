use ddrobust::noise::{sample_errors, ErrorAxes, ErrorModel};
use ddrobust::oracle::random_env;
use ddrobust::propagator::{apply_kick, apply_pulse, evolve, free_segment};
use ddrobust::{
    build_timeline, make_params, trace_run, JointState, ModelParams, PulseError, PulseSchedule,
    Spin,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn params(dim: usize, periods: usize, g: f64, lambda: f64) -> ModelParams {
    make_params(1.5e3, g, lambda, 40.0, dim, periods).unwrap()
}

fn random_state(p: &ModelParams, seed: u64) -> JointState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    JointState::product(p, Spin::Up, &random_env(&mut rng, p.dim())).unwrap()
}

fn fractions() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::btree_set(1u32..1000, 0..12)
        .prop_map(|s| s.into_iter().map(|v| v as f64 / 1000.0).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn every_step_preserves_norm(seed in any::<u64>(), tau in 0.0f64..0.05, ey in -0.5f64..0.5, ez in -0.5f64..0.5) {
        let p = params(32, 2, 100.0, 1e3);
        let mut s = random_state(&p, seed);
        free_segment(&mut s, tau, &p);
        prop_assert!((s.norm_sqr() - 1.0).abs() <= 1e-12);
        apply_kick(&mut s, &p);
        prop_assert!((s.norm_sqr() - 1.0).abs() <= 1e-12);
        apply_pulse(&mut s, &PulseError::new(ey, ez).unwrap());
        prop_assert!((s.norm_sqr() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn free_segments_compose(seed in any::<u64>(), t1 in 0.0f64..0.02, t2 in 0.0f64..0.02) {
        let p = params(16, 1, 100.0, 1e3);
        let mut a = random_state(&p, seed);
        let mut b = a.clone();
        free_segment(&mut a, t1, &p);
        free_segment(&mut a, t2, &p);
        free_segment(&mut b, t1 + t2, &p);
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            prop_assert!((x - y).norm() <= 1e-13);
        }
    }

    #[test]
    fn ideal_pulses_only_permute_sector_populations(f in fractions(), seed in any::<u64>()) {
        let p = params(16, 3, 100.0, 1e3);
        let sched = PulseSchedule::custom(f).unwrap();
        let tl = build_timeline(&p, &sched).unwrap();
        let mut s = random_state(&p, seed);
        let mut expected_up = true;
        let errs = vec![PulseError::IDEAL; sched.len()];
        let mut ok = true;
        evolve(&mut s, &p, &tl, &errs, |_, st| {
            let up = st.sector_population(Spin::Up);
            let down = st.sector_population(Spin::Down);
            // a pulse swaps the sectors; recompute which one is occupied
            if (up - 1.0).abs() > 1e-12 && (down - 1.0).abs() > 1e-12 {
                ok = false;
            }
            expected_up = up > down;
        }).unwrap();
        prop_assert!(ok);
        let flips = sched.len() % 2 == 1;
        prop_assert_eq!(expected_up, !flips);
    }

    #[test]
    fn signal_stays_within_bounds(f in fractions(), seed in any::<u64>(), xi in 0.0f64..0.2) {
        let p = params(16, 4, 300.0, 500.0);
        let sched = PulseSchedule::custom(f).unwrap();
        let errs = sample_errors(sched.len(), &ErrorModel::new(xi, ErrorAxes::YAndZ, seed).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let env = random_env(&mut rng, 16);
        for pt in trace_run(&p, &sched, &errs, &env).unwrap() {
            prop_assert!(pt.modulus_excess() <= 1e-10);
            prop_assert!(pt.q_bound_excess() <= 1e-10);
        }
    }

    #[test]
    fn seed_irrelevant_without_errors(f in fractions(), s1 in any::<u64>(), s2 in any::<u64>()) {
        let p = params(16, 2, 100.0, 1e3);
        let sched = PulseSchedule::custom(f).unwrap();
        let a = sample_errors(sched.len(), &ErrorModel::new(0.0, ErrorAxes::YAndZ, s1).unwrap());
        let b = sample_errors(sched.len(), &ErrorModel::new(0.0, ErrorAxes::YAndZ, s2).unwrap());
        let env = ddrobust::EnvInit::default();
        prop_assert_eq!(trace_run(&p, &sched, &a, &env).unwrap(), trace_run(&p, &sched, &b, &env).unwrap());
    }

    #[test]
    fn sampling_is_deterministic(n in 0usize..200, seed in any::<u64>(), xi in 0.0f64..0.3) {
        let m = ErrorModel::new(xi, ErrorAxes::YAndZ, seed).unwrap();
        let a = sample_errors(n, &m);
        prop_assert_eq!(&a, &sample_errors(n, &m));
        prop_assert!(a.iter().all(|e| e.eps_y().powi(2) + e.eps_z().powi(2) <= 1.0));
    }
}
